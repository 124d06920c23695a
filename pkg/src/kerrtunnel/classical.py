"""Classical limit: energy surface, stationary points, regimes and invariant regions.

Phase-space points use the canonical pair (q, p) with alpha = (q + i p) / sqrt(2).
Functions that take ``q`` and ``p`` accept scalars or numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from kerrtunnel.hilbert import ModelParams


class PhasePoint(NamedTuple):
    q: float
    p: float


class Regime(enum.Enum):
    I = "I"
    II = "II"
    III = "III"


class Stability(enum.Enum):
    MINIMUM = "minimum"
    HYPERBOLIC = "hyperbolic"
    LOCAL_MAXIMUM = "local_maximum"


class Region(enum.IntEnum):
    """The four invariant regions of the regime-III phase space."""

    LEFT = 0
    RIGHT = 1
    INNER = 2
    OUTER = 3

    @property
    def label(self) -> str:
        return {0: "l", 1: "r", 2: "in", 3: "out"}[int(self)]

    @classmethod
    def coerce(cls, value) -> "Region":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            for region in cls:
                if key in (region.label, region.name.lower()):
                    return region
            raise ValueError(f"unknown region {value!r}")
        return cls(int(value))


@dataclass(frozen=True)
class StationaryPoint:
    label: str
    location: PhasePoint
    energy: float
    stability: Stability


class EsqptEnergies(NamedTuple):
    """Critical excitation energies (measured from the classical minimum)."""

    e_esqpt: Optional[float]
    e_step: Optional[float]


class RegionError(ValueError):
    pass


def classical_energy(params: ModelParams, q, p):
    r2 = np.asarray(q) ** 2 + np.asarray(p) ** 2
    return -0.5 * params.delta * r2 + 0.25 * r2**2 - params.eps2 * (np.asarray(q) ** 2 - np.asarray(p) ** 2)


def hamilton_rhs(params: ModelParams, q, p):
    """Return (dq/dt, dp/dt)."""
    r2 = np.asarray(q) ** 2 + np.asarray(p) ** 2
    qdot = -np.asarray(p) * (params.delta - r2 - 2.0 * params.eps2)
    pdot = np.asarray(q) * (params.delta - r2 + 2.0 * params.eps2)
    return qdot, pdot


def hessian(params: ModelParams, q: float, p: float) -> np.ndarray:
    r2 = q * q + p * p
    hqq = -params.delta + r2 + 2.0 * q * q - 2.0 * params.eps2
    hpp = -params.delta + r2 + 2.0 * p * p + 2.0 * params.eps2
    hqp = 2.0 * q * p
    return np.array([[hqq, hqp], [hqp, hpp]])


def classify_regime(params: ModelParams) -> Regime:
    # boundaries: delta = -2 eps2 belongs to I, delta = +2 eps2 to II
    if params.delta <= -2.0 * params.eps2:
        return Regime.I
    if params.delta <= 2.0 * params.eps2:
        return Regime.II
    return Regime.III


def stationary_points(params: ModelParams) -> list[StationaryPoint]:
    delta, eps2 = params.delta, params.eps2
    regime = classify_regime(params)
    e_r1 = -((delta - 2.0 * eps2) ** 2) / 4.0
    e_r2 = -((delta + 2.0 * eps2) ** 2) / 4.0
    if regime is Regime.I:
        return [StationaryPoint("r0", PhasePoint(0.0, 0.0), 0.0, Stability.MINIMUM)]
    q2 = math.sqrt(delta + 2.0 * eps2)
    wells = [
        StationaryPoint("r2+", PhasePoint(q2, 0.0), e_r2, Stability.MINIMUM),
        StationaryPoint("r2-", PhasePoint(-q2, 0.0), e_r2, Stability.MINIMUM),
    ]
    if regime is Regime.II:
        return wells + [StationaryPoint("r0", PhasePoint(0.0, 0.0), 0.0, Stability.HYPERBOLIC)]
    p1 = math.sqrt(delta - 2.0 * eps2)
    return wells + [
        StationaryPoint("r1+", PhasePoint(0.0, p1), e_r1, Stability.HYPERBOLIC),
        StationaryPoint("r1-", PhasePoint(0.0, -p1), e_r1, Stability.HYPERBOLIC),
        StationaryPoint("r0", PhasePoint(0.0, 0.0), 0.0, Stability.LOCAL_MAXIMUM),
    ]


def minimum_energy(params: ModelParams) -> float:
    """Global minimum of the classical energy."""
    if classify_regime(params) is Regime.I:
        return 0.0
    return -((params.delta + 2.0 * params.eps2) ** 2) / 4.0


def separatrix_energy(params: ModelParams) -> float:
    """Energy of the hyperbolic points r1+- (regime III)."""
    return -((params.delta - 2.0 * params.eps2) ** 2) / 4.0


def esqpt_energies(params: ModelParams) -> EsqptEnergies:
    regime = classify_regime(params)
    if regime is Regime.I:
        return EsqptEnergies(None, None)
    step = (params.delta + 2.0 * params.eps2) ** 2 / 4.0
    if regime is Regime.II:
        return EsqptEnergies(step, None)
    return EsqptEnergies(2.0 * params.delta * params.eps2, step)


def _require_regime_iii(params: ModelParams) -> None:
    if classify_regime(params) is not Regime.III:
        raise RegionError(f"regions undefined outside Case III (got {params})")


def classify_regions(params: ModelParams, q, p) -> np.ndarray:
    """Vectorized region labels (``Region`` values as an int array).

    With z = (q^2 + p^2)/2 and gamma = 2 eps2 cos(2 phi), the separatrix
    crosses every ray at the two roots z_-(phi) <= z_+(phi) of
    z^2 + (gamma - delta) z = E_sx. Points inside the lower root belong to the
    inner lobe, points beyond the upper root to the outer region, and the band
    between them to the wells, split by the sign of q (q = 0 goes right).
    """
    _require_regime_iii(params)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = q * q + p * p
    z = 0.5 * r2
    with np.errstate(invalid="ignore", divide="ignore"):
        cos2phi = np.where(r2 > 0.0, (p * p - q * q) / r2, 1.0)
    b = params.delta - 2.0 * params.eps2 * cos2phi
    width = params.delta - 2.0 * params.eps2
    root = np.sqrt(np.maximum((b - width) * (b + width), 0.0))
    z_minus = 0.5 * (b - root)
    z_plus = 0.5 * (b + root)
    labels = np.where(q >= 0.0, int(Region.RIGHT), int(Region.LEFT))
    labels = np.where(z < z_minus, int(Region.INNER), labels)
    labels = np.where(z > z_plus, int(Region.OUTER), labels)
    return labels


def classify_region(params: ModelParams, pt) -> Region:
    q, p = pt
    return Region(int(classify_regions(params, q, p)))


def integrate_trajectory(
    params: ModelParams,
    start,
    t_end: float,
    dt: float,
    rtol: float = 1e-12,
) -> np.ndarray:
    """Integrate Hamilton's equations, sampled every ``dt``; returns an (n, 2) array.

    Uses the adaptive 8(5,3) Dormand-Prince pair. Raises ``RuntimeError`` if the
    step size underflows.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    q0, p0 = start
    n_out = int(math.floor(t_end / dt + 1e-9)) + 1
    t_eval = np.linspace(0.0, dt * (n_out - 1), n_out)

    def rhs(_t, y):
        return hamilton_rhs(params, y[0], y[1])

    sol = solve_ivp(
        rhs, (0.0, t_eval[-1]), [q0, p0], method="DOP853",
        t_eval=t_eval, rtol=rtol, atol=rtol * max(1.0, math.hypot(q0, p0)),
    )
    if not sol.success:
        raise RuntimeError(f"trajectory integration failed: {sol.message}")
    return sol.y.T
