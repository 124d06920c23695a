"""Semiclassical level density, EBK actions and the integer-delta crossing rule.

Everything is written in the action-angle-like variables (z, phi) with
q = sqrt(2z) sin(phi), p = sqrt(2z) cos(phi). This map preserves area, and
the classical energy becomes

    E = z^2 + (gamma - delta) z,    gamma = 2 eps2 cos(2 phi),

so each ray carries at most two orbit points z_-(E, phi) <= z_+(E, phi).
Integrals over phi in [0, 2 pi) reduce to theta = 2 phi in [0, pi] because
the integrands only depend on cos(2 phi).
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from kerrtunnel.classical import Regime, classify_regime, minimum_energy, separatrix_energy
from kerrtunnel.hilbert import ModelParams

MASLOV_MU = 2
MASLOV_B = 0


class Branch(enum.Enum):
    INNER = "inner"  # z_-
    OUTER = "outer"  # z_+


class SingularEnergyError(ValueError):
    pass


class EbkLevel(NamedTuple):
    branch: Branch
    n: int
    energy: float


def radial_roots(params: ModelParams, energy: float, phi: float) -> list[float]:
    """Admissible roots z >= 0 of z^2 + (gamma - delta) z = energy, ascending."""
    b = params.delta - 2.0 * params.eps2 * math.cos(2.0 * phi)
    disc = b * b + 4.0 * energy
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    # pair the well-conditioned root with energy / root-product to avoid cancellation
    if b >= 0.0:
        big = 0.5 * (b + root)
        small = -energy / big if big else 0.0
    else:
        small = 0.5 * (b - root)
        big = -energy / small if small else 0.0
    roots = sorted(z + 0.0 for z in (small, big) if z >= 0.0)
    if len(roots) == 2 and roots[1] - roots[0] <= 1e-12 * max(1.0, roots[1]):
        roots = [0.5 * (roots[0] + roots[1])]
    return roots


def _b(params: ModelParams, theta):
    return params.delta - 2.0 * params.eps2 * np.cos(theta)


def _admissible_interval(params: ModelParams, energy: float) -> Optional[tuple[float, float]]:
    """Theta interval where both branches exist (energy < 0), or None if empty."""
    # b(theta) increases monotonically on [0, pi]; roots need b >= 2 sqrt(-E)
    need = 2.0 * math.sqrt(-energy)
    if params.eps2 == 0.0:
        return (0.0, math.pi) if params.delta >= need else None
    c = (params.delta - need) / (2.0 * params.eps2)
    if c >= 1.0:
        return (0.0, math.pi)
    if c < -1.0:
        return None
    return (math.acos(c), math.pi)


def _cos_substitution(f, a: float, b: float):
    """Integrate f over [a, b] with theta = a + (b - a)(1 - cos u)/2.

    Removes inverse-square-root endpoint singularities.
    """
    half = 0.5 * (b - a)

    def g(u):
        return f(a + half * (1.0 - math.cos(u))) * half * math.sin(u)

    return g


def _integrate(f, a: float, b: float, singular_start: bool, rtol: float) -> float:
    if b <= a:
        return 0.0
    if singular_start:
        g = _cos_substitution(f, a, b)
        val, _ = quad(g, 0.0, math.pi, epsabs=0.0, epsrel=rtol, limit=500)
    else:
        val, _ = quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=500)
    return val


def singular_energies(params: ModelParams) -> list[float]:
    regime = classify_regime(params)
    if regime is Regime.III:
        return [separatrix_energy(params), 0.0]
    if regime is Regime.II:
        return [0.0]
    return []


def semiclassical_dos(params: ModelParams, energy: float, rtol: float = 1e-8) -> float:
    """Lowest-order trace-formula density of states at classical energy ``energy``.

    rho(E) = (1/2pi) int dq dp delta(H - E)
           = (1/pi) int_0^pi sum_branches 1/sqrt(b(theta)^2 + 4E) dtheta.
    """
    for e_sing in singular_energies(params):
        if energy == e_sing:
            raise SingularEnergyError(
                f"rho diverges or jumps at E={e_sing}; evaluate at one-sided offsets instead"
            )
    if energy < minimum_energy(params):
        return 0.0

    def inv_sqrt(theta):
        return 1.0 / math.sqrt(max(_b(params, theta) ** 2 + 4.0 * energy, 1e-300))

    if energy > 0.0:
        return _integrate(inv_sqrt, 0.0, math.pi, False, rtol) / math.pi
    interval = _admissible_interval(params, energy)
    if interval is None:
        return 0.0
    a, b = interval
    # both branches contribute the same |dz/dE|
    return 2.0 * _integrate(inv_sqrt, a, b, a > 0.0, rtol) / math.pi


SINGULAR_OFFSET = 1e-6  # one-sided offset, as a fraction of |E_sx|


def dos_near(params: ModelParams, energy: float, side: int, offset: float = SINGULAR_OFFSET) -> float:
    """rho evaluated a small step to one side (+1 above, -1 below) of a singular energy."""
    if side not in (-1, 1):
        raise ValueError("side must be +1 or -1")
    scale = max(abs(separatrix_energy(params)), 1.0)
    return semiclassical_dos(params, energy + side * offset * scale)


def phase_space_count(params: ModelParams, energy: float, rtol: float = 1e-10) -> float:
    """Weyl counting function: area of {H < energy} divided by 2 pi."""
    if energy <= minimum_energy(params):
        return 0.0
    if energy >= 0.0:
        def width(theta):
            b = _b(params, theta)
            return 0.5 * (b + math.sqrt(b * b + 4.0 * energy))
        return _integrate(width, 0.0, math.pi, False, rtol) / math.pi
    interval = _admissible_interval(params, energy)
    if interval is None:
        return 0.0

    def width(theta):
        b = _b(params, theta)
        return math.sqrt(max(b * b + 4.0 * energy, 0.0))

    a, b = interval
    return _integrate(width, a, b, a > 0.0, rtol) / math.pi


def weyl_count(params: ModelParams, e_lo: float, e_hi: float) -> float:
    """Semiclassical number of levels with classical energy in [e_lo, e_hi]."""
    return phase_space_count(params, e_hi) - phase_space_count(params, e_lo)


def _check_window(params: ModelParams, energy: float) -> None:
    if classify_regime(params) is not Regime.III:
        raise ValueError(f"EBK actions are defined for Case III only (got {params})")
    e_sx = separatrix_energy(params)
    if not e_sx <= energy <= 0.0:
        raise ValueError(f"energy {energy} outside the window [{e_sx}, 0]")


def ebk_action(params: ModelParams, energy: float, branch, rtol: float = 1e-13) -> float:
    """(1/2pi) int_0^{2pi} z_branch(E, phi) dphi for E between the separatrix and 0."""
    branch = Branch(branch)
    _check_window(params, energy)

    def z(theta):
        b = _b(params, theta)
        root = math.sqrt(max(b * b + 4.0 * energy, 0.0))
        if branch is Branch.OUTER:
            return 0.5 * (b + root)
        return -2.0 * energy / (b + root)

    val, _ = quad(z, 0.0, math.pi, epsabs=1e-15 * max(1.0, params.delta), epsrel=rtol, limit=500)
    return val / math.pi


class Ordering(enum.Enum):
    """Which classical symbol the EBK rule is applied to.

    NORMAL uses the classical energy as written (the normal-ordered symbol).
    WEYL uses the Weyl symbol of the same operator,
    z^2 - (delta + 2 - gamma) z + (delta + 1)/2, i.e. the classical energy at
    delta + 2 shifted by (delta + 1)/2; it carries the O(hbar) terms that the
    normal-ordered symbol drops.
    """

    NORMAL = "normal"
    WEYL = "weyl"


def ebk_energies(params: ModelParams, branch, xtol: float = 1e-12, ordering="normal") -> list[EbkLevel]:
    """Solutions of action(E) = n + mu/4 + b/2 inside the inter-ESQPT window."""
    branch = Branch(branch)
    if Ordering(ordering) is Ordering.WEYL:
        shifted = params.with_delta(params.delta + 2.0)
        shift = 0.5 * (params.delta + 1.0)
        return [lv._replace(energy=lv.energy + shift) for lv in ebk_energies(shifted, branch, xtol)]
    if classify_regime(params) is not Regime.III:
        raise ValueError(f"EBK levels are defined for Case III only (got {params})")
    e_sx = separatrix_energy(params)
    offset = MASLOV_MU / 4.0 + MASLOV_B / 2.0
    i_sx = ebk_action(params, e_sx, branch)
    i_top = ebk_action(params, 0.0, branch)
    lo, hi = sorted((i_sx, i_top))
    levels = []
    for n in range(int(math.ceil(lo - offset)), int(math.floor(hi - offset)) + 1):
        target = n + offset
        if n < 0 or not lo < target < hi:
            continue
        energy = brentq(
            lambda e: ebk_action(params, e, branch) - target, e_sx, 0.0,
            xtol=xtol * max(1.0, abs(e_sx)), rtol=1e-15,
        )
        levels.append(EbkLevel(branch, n, energy))
    return sorted(levels, key=lambda lv: lv.energy)


def ebk_spectrum(params: ModelParams, ordering="normal") -> list[EbkLevel]:
    """Inner and outer EBK levels together, ascending in energy."""
    levels = ebk_energies(params, Branch.INNER, ordering=ordering) + ebk_energies(
        params, Branch.OUTER, ordering=ordering
    )
    return sorted(levels, key=lambda lv: lv.energy)


def predicted_crossings(eps2: float, delta_min: float, delta_max: float) -> list[int]:
    """Integer delta values in [delta_min, delta_max] where inter-ESQPT levels cross.

    Whether each crossing is real or avoided is not decided here.
    """
    first = max(math.ceil(delta_min), math.floor(2.0 * eps2) + 1)
    return [d for d in range(int(first), int(math.floor(delta_max)) + 1) if d > 2.0 * eps2]


def crossing_pairs(params: ModelParams) -> list[tuple[EbkLevel, EbkLevel]]:
    """Inner/outer EBK levels whose quantum numbers satisfy n_+ + n_- + 1 = delta."""
    inner = {lv.n: lv for lv in ebk_energies(params, Branch.INNER)}
    outer = {lv.n: lv for lv in ebk_energies(params, Branch.OUTER)}
    target = params.delta - 1.0
    pairs = []
    for n_minus, lv in inner.items():
        n_plus = target - n_minus
        if float(n_plus).is_integer() and int(n_plus) in outer:
            pairs.append((outer[int(n_plus)], lv))
    return pairs
