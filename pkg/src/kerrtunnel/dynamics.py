"""Spectral time evolution, initial-state preparation and effective tunneling.

The Hamiltonian is time independent, so states are propagated exactly in the
eigenbasis of both parity blocks:

    |psi(t)> = sum_k exp(-i E_k t) <k|psi(0)> |k>,   t in units of 1/K.

Effective tunneling into a region is the change of its Husimi volume,
T(t, t0) = V(t) - V(t0); the mean effective tunneling is its time average
over [t0, t].
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq, minimize_scalar

from kerrtunnel.classical import (
    Region,
    Regime,
    classify_regime,
    classical_energy,
    classify_region,
    esqpt_energies,
    minimum_energy,
    stationary_points,
)
from kerrtunnel.hilbert import ModelParams, Parity
from kerrtunnel.phasespace import coherent_coefficients, float_key, make_rng, volume_series
from kerrtunnel.spectral import Spectrum, solve_spectrum

logger = logging.getLogger(__name__)

COMPLETENESS_TOL = 1e-8
UNCONVERGED_TAIL = 1e-6  # eigenvectors with more top-10% weight than this are not trusted
DEFAULT_QUENCH_FROM = -6.0
DEFAULT_OFFSET = 0.01  # energy offset of coherent centres, fraction of e_esqpt
MEAN_FORMULA = "Tbar_k(t, t0) = (1/(t - t0)) * integral_{t0}^{t} [V_k(tau) - V_k(t0)] dtau (trapezoid)"


class Scenario(enum.Enum):
    COHERENT_OUT = "coherent_out"
    COHERENT_HYPERBOLIC = "coherent_hyperbolic"
    QUENCH = "quench"

    @classmethod
    def coerce(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"hyperbolic": "coherent_hyperbolic", "out": "coherent_out"}
        return cls(aliases.get(key, key))


class SpectralCompletenessError(RuntimeError):
    pass


class InitialStateError(ValueError):
    pass


def _split(state: np.ndarray, spectrum: Spectrum) -> dict:
    """Project a Fock vector onto the eigenbasis of each parity block."""
    state = np.asarray(state, dtype=complex)
    if state.size > spectrum.n_fock:
        extra = np.sum(np.abs(state[spectrum.n_fock :]) ** 2)
        if extra > COMPLETENESS_TOL:
            raise SpectralCompletenessError(
                f"state has weight {extra:.2e} beyond the {spectrum.n_fock} Fock states of the eigenbasis"
            )
        state = state[: spectrum.n_fock]
    overlaps = {}
    for parity in Parity:
        blk = spectrum.block(parity)
        idx = blk.fock_indices
        keep = idx < state.size
        overlaps[parity] = blk.vectors[keep].T @ state[idx[keep]]
    return overlaps


@dataclass(frozen=True)
class EvolvedState:
    """A state expanded in the eigenbasis, evaluable at any time."""

    spectrum: Spectrum
    overlaps: dict  # Parity -> <k|psi(0)>
    n_fock: int

    @classmethod
    def from_state(cls, state0, spectrum: Spectrum) -> "EvolvedState":
        state0 = np.asarray(state0, dtype=complex)
        overlaps = _split(state0, spectrum)
        norm2 = float(np.sum(np.abs(state0) ** 2))
        captured = sum(float(np.sum(np.abs(o) ** 2)) for o in overlaps.values())
        if captured < norm2 * (1.0 - COMPLETENESS_TOL):
            raise SpectralCompletenessError(
                f"eigenbasis captures only {captured / norm2:.10f} of the state norm"
            )
        loose = 0.0
        for parity, o in overlaps.items():
            bad = spectrum.block(parity).tail_weights() > UNCONVERGED_TAIL
            loose += float(np.sum(np.abs(o[bad]) ** 2))
        if loose > COMPLETENESS_TOL * norm2:
            raise SpectralCompletenessError(
                f"weight {loose:.2e} sits on eigenvectors not converged in the truncation; increase n_block"
            )
        return cls(spectrum, overlaps, spectrum.n_fock)

    def at_times(self, times: Sequence[float]) -> np.ndarray:
        """Fock coefficients at each time, one column per time."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.zeros((self.n_fock, times.size), dtype=complex)
        for parity, o in self.overlaps.items():
            blk = self.spectrum.block(parity)
            phases = np.exp(-1j * np.outer(blk.energies, times))
            out[blk.fock_indices] = blk.vectors @ (o[:, None] * phases)
        return out

    def at(self, t: float) -> np.ndarray:
        return self.at_times([t])[:, 0]

    def energy(self) -> float:
        return float(sum(
            np.sum(np.abs(o) ** 2 * self.spectrum.block(p).energies) for p, o in self.overlaps.items()
        ))

    def parity_expectation(self) -> float:
        return float(sum(p.sign * np.sum(np.abs(o) ** 2) for p, o in self.overlaps.items()))


def evolve(state0, spectrum: Spectrum, t: float) -> np.ndarray:
    """exp(-i H t) applied to ``state0`` through the eigen-decomposition in ``spectrum``."""
    return EvolvedState.from_state(state0, spectrum).at(t)


def ground_state_of(params: ModelParams, n_block: int = 800, spectrum: Optional[Spectrum] = None) -> np.ndarray:
    """Lowest eigenvector over both parity blocks as a Fock vector of length 2 n_block."""
    spectrum = solve_spectrum(params, n_block, count=1) if spectrum is None else spectrum
    return spectrum.block(spectrum.ground_parity).fock_vector(0, spectrum.n_fock).astype(complex)


# ---------------------------------------------------------------------------
# initial-state placement


def coherent_out_center(params: ModelParams, offset: float = DEFAULT_OFFSET) -> tuple[float, float]:
    """Point on the positive p-axis outside the separatrix, excitation energy (1 + offset) e_esqpt."""
    e_esqpt = esqpt_energies(params).e_esqpt
    if classify_regime(params) is not Regime.III:
        raise InitialStateError(f"coherent_out needs the four-region phase space (got {params})")
    if offset <= 0:
        raise InitialStateError("coherent_out needs an energy above e_esqpt (offset > 0)")
    target = minimum_energy(params) + (1.0 + offset) * e_esqpt
    # on q = 0 the energy is z^2 - (delta - 2 eps2) z with z = p^2 / 2
    width = params.delta - 2.0 * params.eps2
    z = 0.5 * (width + math.sqrt(width * width + 4.0 * target))
    center = (0.0, math.sqrt(2.0 * z))
    _require_region(params, center, Region.OUTER, "coherent_out")
    return center


def coherent_hyperbolic_center(params: ModelParams, offset: float = DEFAULT_OFFSET) -> tuple[float, float]:
    """Point beside the hyperbolic point r1+ inside the left well, (1 - offset) e_esqpt above the minimum."""
    e_esqpt = esqpt_energies(params).e_esqpt
    if classify_regime(params) is not Regime.III:
        raise InitialStateError(f"coherent_hyperbolic needs the four-region phase space (got {params})")
    if not 0 < offset < 1:
        raise InitialStateError("coherent_hyperbolic needs 0 < offset < 1 (energy below e_esqpt)")
    target = minimum_energy(params) + (1.0 - offset) * e_esqpt
    p1 = next(sp.location.p for sp in stationary_points(params) if sp.label == "r1+")
    # along p = p1 the energy falls from E_sx at q = 0; take the first crossing of the target
    line = minimize_scalar(
        lambda x: classical_energy(params, x, p1), bounds=(-math.sqrt(2.0 * params.delta), 0.0),
        method="bounded", options={"xatol": 1e-10},
    )
    if line.fun >= target:
        raise InitialStateError(f"no point beside r1+ reaches energy {target} for {params}")
    q = brentq(lambda x: classical_energy(params, x, p1) - target, line.x, 0.0, xtol=1e-14)
    center = (float(q), p1)
    _require_region(params, center, Region.LEFT, "coherent_hyperbolic")
    return center


def _require_region(params: ModelParams, center, region: Region, name: str) -> None:
    got = classify_region(params, center)
    if got is not region:
        raise InitialStateError(
            f"{name} centre {center} lies in region {got.label}, constraint requires {region.label}"
        )


def initial_state(
    scenario,
    params: ModelParams,
    n_block: int,
    offset: float = DEFAULT_OFFSET,
    delta0: float = DEFAULT_QUENCH_FROM,
) -> tuple[np.ndarray, dict]:
    """Initial Fock vector (length 2 n_block) for a scenario and a description of it."""
    scenario = Scenario.coerce(scenario)
    n_fock = 2 * n_block
    if scenario is Scenario.COHERENT_OUT:
        q0, p0 = coherent_out_center(params, offset)
    elif scenario is Scenario.COHERENT_HYPERBOLIC:
        q0, p0 = coherent_hyperbolic_center(params, offset)
    else:
        pre = params.with_delta(delta0)
        return ground_state_of(pre, n_block), {"delta0": delta0}
    return coherent_coefficients(q0, p0, n_fock), {"q0": q0, "p0": p0, "offset": offset}


# ---------------------------------------------------------------------------
# tunneling


@dataclass(frozen=True)
class TunnelingTrace:
    """Husimi volumes V[t, region] and effective tunneling T[t, region] relative to t0.

    ``T_stderr`` comes from the paired-sample difference, because every time
    point is estimated on the same Monte Carlo sample set.
    """

    times: np.ndarray
    volumes: np.ndarray
    stderr: np.ndarray
    tunneling: np.ndarray
    T_stderr: np.ndarray
    t0: float
    raw_total: np.ndarray
    metadata: dict = field(default_factory=dict)

    def region(self, key) -> np.ndarray:
        return self.tunneling[:, int(Region.coerce(key))]

    def rows(self):
        """Yield (t, region label, V, V stderr, T, T stderr)."""
        for i, t in enumerate(self.times):
            for r in Region:
                k = int(r)
                yield (float(t), r.label, float(self.volumes[i, k]), float(self.stderr[i, k]),
                       float(self.tunneling[i, k]), float(self.T_stderr[i, k]))


def _time_index(times: np.ndarray, t: float) -> int:
    hits = np.flatnonzero(np.isclose(times, t, rtol=0.0, atol=1e-12 * max(1.0, abs(t))))
    if hits.size == 0:
        raise ValueError(f"t={t} is not a recorded time")
    return int(hits[0])


def effective_tunneling(times, volumes, t0: float, stderr=None, diff_stderr=None, **meta) -> TunnelingTrace:
    """T_k(t, t0) = V_k(t) - V_k(t0) for every region and recorded time."""
    times = np.asarray(times, dtype=float)
    volumes = np.asarray(volumes, dtype=float)
    i0 = _time_index(times, t0)
    tunneling = volumes - volumes[i0][None, :]
    stderr = np.zeros_like(volumes) if stderr is None else np.asarray(stderr)
    if diff_stderr is None:
        diff_stderr = np.sqrt(stderr**2 + stderr[i0][None, :] ** 2)
        diff_stderr[i0] = 0.0
    raw = meta.pop("raw_total", np.full(times.size, np.nan))
    return TunnelingTrace(times, volumes, stderr, tunneling, np.asarray(diff_stderr), float(t0), raw, meta)


def mean_effective_tunneling(trace: TunnelingTrace, t: float, t0: Optional[float] = None) -> tuple[np.ndarray, np.ndarray]:
    """Time average of T_k(tau, t0) over tau in [t0, t] per region, with a standard error.

    The error is the time average of the pointwise errors, an upper bound
    for fully correlated noise.
    """
    t0 = trace.t0 if t0 is None else t0
    if not t > t0:
        raise ValueError(f"need t > t0, got t={t}, t0={t0}")
    i0, i1 = _time_index(trace.times, t0), _time_index(trace.times, t)
    tau = trace.times[i0 : i1 + 1]
    values = trace.volumes[i0 : i1 + 1] - trace.volumes[i0][None, :]
    if t0 == trace.t0:
        errs = trace.T_stderr[i0 : i1 + 1]
    else:
        errs = np.sqrt(trace.stderr[i0 : i1 + 1] ** 2 + trace.stderr[i0][None, :] ** 2)
    span = t - t0
    return trapezoid(values, tau, axis=0) / span, trapezoid(errs, tau, axis=0) / span


def tunneling_trace(
    state0,
    params: ModelParams,
    times: Sequence[float],
    spectrum: Optional[Spectrum] = None,
    n_block: int = 800,
    samples: int = 200_000,
    seed: int = 0,
    rng_key: tuple = (),
    radius: Optional[float] = None,
    t0: Optional[float] = None,
) -> TunnelingTrace:
    """Evolve ``state0`` under H(params) and estimate region volumes at every time."""
    times = np.asarray(times, dtype=float)
    t0 = float(times[0]) if t0 is None else t0
    spectrum = solve_spectrum(params, n_block) if spectrum is None else spectrum
    evolved = EvolvedState.from_state(state0, spectrum)
    coeffs = evolved.at_times(times)
    rng = make_rng(seed, *rng_key)
    series = volume_series(coeffs, params, samples, rng, radius, ref=_time_index(times, t0))
    meta = {
        "samples": samples, "seed": seed, "rng_key": list(rng_key), "radius": series.radius,
        "n_block": spectrum.even.block_size, "energy": evolved.energy(),
        "parity": evolved.parity_expectation(), "formula": MEAN_FORMULA,
    }
    return effective_tunneling(
        times, series.volumes, t0, series.stderr, series.diff_stderr,
        raw_total=series.raw_total, **meta,
    )


@dataclass(frozen=True)
class SweepResult:
    scenario: Scenario
    eps2: float
    deltas: np.ndarray
    window: tuple
    means: np.ndarray  # (deltas, 4)
    stderr: np.ndarray
    traces: list
    metadata: dict

    def region(self, key) -> np.ndarray:
        return self.means[:, int(Region.coerce(key))]

    def rows(self):
        """Yield (delta, region label, mean T, stderr)."""
        for i, d in enumerate(self.deltas):
            for r in Region:
                yield float(d), r.label, float(self.means[i, int(r)]), float(self.stderr[i, int(r)])


def default_times(window: tuple, points: int = 101) -> np.ndarray:
    return np.linspace(float(window[0]), float(window[1]), int(points))


def tunneling_sweep(
    scenario,
    eps2: float,
    delta_grid: Sequence[float],
    window: tuple = (0.0, 10.0),
    samples: int = 200_000,
    seed: int = 0,
    n_block: int = 800,
    time_points: int = 101,
    offset: float = DEFAULT_OFFSET,
    delta0: float = DEFAULT_QUENCH_FROM,
    keep_traces: bool = True,
) -> SweepResult:
    """Mean effective tunneling per region at every delta of the grid.

    Monte Carlo streams are keyed on (scenario, delta); within one delta all
    time points share the sample set.
    """
    scenario = Scenario.coerce(scenario)
    deltas = np.asarray(delta_grid, dtype=float)
    times = default_times(window, time_points)
    means = np.empty((deltas.size, 4))
    errs = np.empty((deltas.size, 4))
    traces = []
    placements = []
    scen_key = list(Scenario).index(scenario)
    for i, delta in enumerate(deltas):
        params = ModelParams(delta, eps2)
        state0, placement = initial_state(scenario, params, n_block, offset, delta0)
        trace = tunneling_trace(
            state0, params, times, n_block=n_block, samples=samples, seed=seed,
            rng_key=(scen_key, float_key(delta)),
        )
        means[i], errs[i] = mean_effective_tunneling(trace, times[-1], times[0])
        placements.append(placement)
        if keep_traces:
            traces.append(trace)
        logger.info("%s delta=%g mean T=%s", scenario.value, delta, np.round(means[i], 5))
    meta = {
        "scenario": scenario.value, "eps2": eps2, "window": list(window), "time_points": time_points,
        "samples": samples, "seed": seed, "n_block": n_block, "offset": offset,
        "delta0": delta0 if scenario is Scenario.QUENCH else None,
        "placements": placements, "formula": MEAN_FORMULA,
    }
    return SweepResult(scenario, eps2, deltas, tuple(window), means, errs, traces, meta)
