"""Coherent states, Husimi functions and Monte Carlo Husimi volumes.

States are plain complex numpy arrays of Fock coefficients c_n, n = 0..N-1.
The Husimi function at (q, p) is

    Q(q, p) = |<alpha|psi>|^2 / pi,     alpha = (q + i p) / sqrt(2),

so its integral over dq dp equals 2 for any normalized state.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc, gammaln

from kerrtunnel.classical import Region, classify_regions
from kerrtunnel.hilbert import ModelParams

TAIL_LIMIT = 1e-4  # Husimi mass allowed outside the sampling disk
TAIL_TARGET = 1e-6  # mass left outside when the radius is chosen automatically
MIN_SAMPLES = 10_000
HUSIMI_TOTAL = 2.0


class TruncationError(ValueError):
    pass


class DiskTooSmall(ValueError):
    def __init__(self, radius: float, tail: float, suggested: float):
        super().__init__(
            f"sampling disk of radius {radius:g} leaves Husimi mass {tail:.3e} outside "
            f"(limit {TAIL_LIMIT:g}); use a radius of at least {suggested:.6g}"
        )
        self.suggested = suggested


def normalized(state) -> np.ndarray:
    c = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(c)
    if not norm > 0.0:
        raise ValueError("zero state cannot be normalized")
    return c / norm


def tail_weight(state, fraction: float = 0.1) -> float:
    c = np.asarray(state)
    top = max(1, int(math.ceil(fraction * c.size)))
    return float(np.sum(np.abs(c[c.size - top :]) ** 2))


def coherent_coefficients(q0: float, p0: float, n_fock: int, tail_tol: float = 1e-10) -> np.ndarray:
    """Fock coefficients of the Glauber coherent state centred at (q0, p0).

    Evaluated in the log domain, c_n = exp(-|a|^2/2 + n log|a| - log(n!)/2) e^{i n arg a},
    so |alpha|^2 of several hundred neither overflows nor underflows.
    """
    alpha = complex(q0, p0) / math.sqrt(2.0)
    mean = abs(alpha) ** 2
    n = np.arange(n_fock)
    if alpha == 0:
        c = np.zeros(n_fock, complex)
        c[0] = 1.0
        return c
    # weight lost beyond the truncation is a regularized lower incomplete gamma
    lost = 1.0 - gammaincc(n_fock, mean)
    if lost > tail_tol:
        raise TruncationError(
            f"truncation too small: {n_fock} Fock states lose weight {lost:.2e} "
            f"of a coherent state with |alpha|^2 = {mean:.4g}"
        )
    log_mag = -0.5 * mean + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0)
    c = np.exp(log_mag) * np.exp(1j * n * math.atan2(alpha.imag, alpha.real))
    return c / np.linalg.norm(c)


CHUNK = 8192


def coherent_basis(q, p, n_cut: int) -> np.ndarray:
    """Matrix B[s, n] = <alpha_s|n> for flattened points s and n < n_cut.

    Magnitudes are assembled in the log domain and the phase e^{-i n arg alpha}
    by repeated multiplication with a unit complex number, so nothing
    overflows or underflows for any disk used here.
    """
    q = np.ravel(np.asarray(q, dtype=float))
    p = np.ravel(np.asarray(p, dtype=float))
    mean = 0.5 * (q * q + p * p)
    n = np.arange(n_cut, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = 0.5 * np.log(mean)
        log_mag = -0.5 * mean[:, None] + n[None, :] * log_r[:, None] - 0.5 * gammaln(n + 1.0)[None, :]
    log_mag[:, 0] = -0.5 * mean  # 0 * -inf at the origin
    unit = np.where(mean > 0.0, (q - 1j * p) / np.sqrt(np.maximum(2.0 * mean, 1e-300)), 1.0)
    phase = np.ones((q.size, n_cut), dtype=complex)
    if n_cut > 1:
        phase[:, 1:] = np.cumprod(np.broadcast_to(unit[:, None], (q.size, n_cut - 1)), axis=1)
    return np.exp(log_mag) * phase


def _support(coeffs: np.ndarray, floor: float = 1e-30) -> int:
    """Number of leading Fock rows carrying any weight above ``floor``."""
    weight = np.abs(coeffs) ** 2
    if weight.ndim > 1:
        weight = weight.max(axis=1)
    nz = np.flatnonzero(weight > floor)
    return int(nz[-1]) + 1 if nz.size else 1


def coherent_overlaps(state, q, p) -> np.ndarray:
    """<alpha(q, p)|state> for arrays of phase-space points (same shape as q)."""
    c = np.asarray(state, dtype=complex)
    q = np.asarray(q, dtype=float)
    p = np.broadcast_to(np.asarray(p, dtype=float), q.shape)
    n_cut = _support(c)
    flat_q, flat_p = q.ravel(), p.ravel()
    out = np.empty(flat_q.size, dtype=complex)
    for lo in range(0, flat_q.size, CHUNK):
        sl = slice(lo, lo + CHUNK)
        out[sl] = coherent_basis(flat_q[sl], flat_p[sl], n_cut) @ c[:n_cut]
    return out.reshape(q.shape)


def husimi(state, q, p):
    """Q(q, p) = |<alpha|state>|^2 / pi; scalar in, scalar out."""
    val = np.abs(coherent_overlaps(state, q, p)) ** 2 / math.pi
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class HusimiField:
    q: np.ndarray  # (nq,)
    p: np.ndarray  # (np,)
    values: np.ndarray  # (np, nq), row-major in p

    @property
    def spacing(self) -> tuple[float, float]:
        dq = float(self.q[1] - self.q[0]) if self.q.size > 1 else 0.0
        dp = float(self.p[1] - self.p[0]) if self.p.size > 1 else 0.0
        return dq, dp


def husimi_grid(state, bounds: Sequence[float], resolution) -> HusimiField:
    """Husimi function on a rectangular grid; bounds = (q_min, q_max, p_min, p_max)."""
    q_min, q_max, p_min, p_max = map(float, bounds)
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    nq, np_ = map(int, resolution)
    qs = np.linspace(q_min, q_max, nq)
    ps = np.linspace(p_min, p_max, np_)
    qq, pp = np.meshgrid(qs, ps)
    return HusimiField(qs, ps, husimi(state, qq, pp))


# ---------------------------------------------------------------------------
# volumes


def _fock_probabilities(states) -> np.ndarray:
    prob = np.abs(np.asarray(states)) ** 2
    if prob.ndim == 1:
        prob = prob[:, None]
    return prob / prob.sum(axis=0)


def outside_mass(state, radius: float) -> float:
    """Fraction of the Husimi integral lying outside the disk q^2 + p^2 <= radius^2.

    The angular integral removes all cross terms, leaving
    sum_n |c_n|^2 Gamma(n + 1, R^2/2) / n!. For a matrix of states (one per
    column) the worst column is returned.
    """
    prob = _fock_probabilities(state)
    n = np.arange(prob.shape[0])
    return float((gammaincc(n + 1.0, 0.5 * radius * radius) @ prob).max())


def containing_radius(state, tail: float = TAIL_TARGET) -> float:
    """Smallest radius whose disk leaves at most ``tail`` of the Husimi mass outside."""
    if outside_mass(state, 0.0) <= tail:
        return 0.0
    hi = 1.0
    while outside_mass(state, hi) > tail:
        hi *= 2.0
    return brentq(lambda r: outside_mass(state, r) - tail, 0.0, hi, xtol=1e-6)


class VolumeEstimate(NamedTuple):
    """Normalized Husimi volumes of the four regions, indexed by ``Region``."""

    volumes: np.ndarray
    stderr: np.ndarray
    raw_total: float  # integral of Q over the disk, ~2
    raw_stderr: float
    radius: float
    samples: int

    def region(self, key) -> tuple[float, float]:
        k = int(Region.coerce(key))
        return float(self.volumes[k]), float(self.stderr[k])


class VolumeSeries(NamedTuple):
    """Region volumes of several states estimated on one shared sample set.

    Arrays have shape (states, 4). ``diff_stderr`` is the standard error of
    V(s) - V(ref) from the paired samples, which is much smaller than the
    independent-sample value because the sampling noise largely cancels.
    """

    volumes: np.ndarray
    stderr: np.ndarray
    diff_stderr: np.ndarray
    raw_total: np.ndarray
    raw_stderr: np.ndarray
    ref: int
    radius: float
    samples: int

    def estimate(self, i: int) -> VolumeEstimate:
        return VolumeEstimate(
            self.volumes[i], self.stderr[i], float(self.raw_total[i]),
            float(self.raw_stderr[i]), self.radius, self.samples,
        )


def disk_samples(rng: np.random.Generator, samples: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    r = radius * np.sqrt(rng.random(samples))
    phi = 2.0 * math.pi * rng.random(samples)
    return r * np.cos(phi), r * np.sin(phi)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based Philox stream for ``seed`` and an integer key path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def float_key(value: float) -> int:
    """Stable non-negative integer encoding of a float, for RNG keys."""
    return int.from_bytes(struct.pack("<d", float(value)), "little")


def sampling_radius(states, radius: Optional[float] = None) -> float:
    """Check or choose the disk radius so all states keep their Husimi mass inside."""
    if radius is None:
        return max(containing_radius(states), 1.0)
    tail = outside_mass(states, radius)
    if tail > TAIL_LIMIT:
        raise DiskTooSmall(radius, tail, containing_radius(states, TAIL_TARGET))
    return float(radius)


def volume_series(
    states,
    params: ModelParams,
    samples: int = 200_000,
    rng: Optional[np.random.Generator] = None,
    radius: Optional[float] = None,
    ref: int = 0,
    seed: int = 0,
) -> VolumeSeries:
    """Uniform-disk Monte Carlo volumes of the four regions for each column of ``states``.

    The normalized volume V_k = sum_{s in k} Q_s / sum_s Q_s is a ratio
    estimator, so the four regions add up to one exactly. Standard errors use
    the delta method, built from accumulated moments so the samples are
    processed in chunks and never stored.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    c = np.asarray(states, dtype=complex)
    if c.ndim == 1:
        c = c[:, None]
    c = c / np.linalg.norm(c, axis=0)
    radius = sampling_radius(c, radius)
    n_cut = _support(c)
    c = c[:n_cut]
    n_states = c.shape[1]
    rng = make_rng(seed) if rng is None else rng
    q, p = disk_samples(rng, samples, radius)
    labels = classify_regions(params, q, p)

    s_w = np.zeros(n_states)
    s_ww = np.zeros(n_states)
    s_wk = np.zeros((n_states, 4))
    s_wwk = np.zeros((n_states, 4))
    x_w = np.zeros(n_states)  # sum w_s w_ref
    x_wk = np.zeros((n_states, 4))  # sum w_s w_ref [label = k]
    for lo in range(0, samples, CHUNK):
        sl = slice(lo, lo + CHUNK)
        amp = coherent_basis(q[sl], p[sl], n_cut) @ c
        w = (amp.real**2 + amp.imag**2) / math.pi
        onehot = labels[sl, None] == np.arange(4)[None, :]
        w_ref = w[:, ref]
        s_w += w.sum(axis=0)
        s_ww += (w * w).sum(axis=0)
        s_wk += w.T @ onehot
        s_wwk += (w * w).T @ onehot
        x_w += w.T @ w_ref
        x_wk += (w * w_ref[:, None]).T @ onehot

    n = float(samples)
    area = math.pi * radius * radius
    mean_w = s_w / n
    ratio = s_wk / s_w[:, None]
    # a_s = w_s (I_k - R) / mean(w); mean(a) = 0, so var(a) = E[a^2]
    e_aa = (s_wwk * (1.0 - 2.0 * ratio) + ratio**2 * s_ww[:, None]) / n / mean_w[:, None] ** 2
    stderr = np.sqrt(np.maximum(e_aa, 0.0) / (n - 1.0))
    # cross moment between state i and the reference for paired differences
    r0 = ratio[ref][None, :]
    cross = (x_wk * (1.0 - ratio - r0) + ratio * r0 * x_w[:, None]) / n
    cross /= mean_w[:, None] * mean_w[ref]
    e_diff = e_aa + e_aa[ref][None, :] - 2.0 * cross
    diff_stderr = np.sqrt(np.maximum(e_diff, 0.0) / (n - 1.0))
    var_w = np.maximum(s_ww / n - mean_w**2, 0.0) * n / (n - 1.0)
    return VolumeSeries(
        ratio, stderr, diff_stderr, area * mean_w, area * np.sqrt(var_w / n),
        int(ref), float(radius), int(samples),
    )


def estimate_volumes(
    state,
    params: ModelParams,
    samples: int = 200_000,
    seed: int = 0,
    radius: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> VolumeEstimate:
    """Monte Carlo estimate of the four normalized region volumes of one state."""
    return volume_series(state, params, samples, rng, radius, seed=seed).estimate(0)


def husimi_volume(
    state,
    region,
    params: ModelParams,
    samples: int = 200_000,
    seed: int = 0,
    radius: Optional[float] = None,
) -> tuple[float, float]:
    """Normalized Husimi volume of one region and its standard error."""
    return estimate_volumes(state, params, samples, seed, radius).region(region)
