"""Parity-resolved spectra, level sweeps over delta, crossings and level statistics."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar

from kerrtunnel.classical import Regime, classify_regime, esqpt_energies
from kerrtunnel.hilbert import DEFAULT_BLOCK_SIZE, ModelParams, Parity, build_parity_block, tail_weights

logger = logging.getLogger(__name__)


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumBlock:
    """Lowest eigenpairs of one parity block.

    ``vectors`` holds eigenvectors as columns in the block index m, which maps
    to the Fock index n = 2m + parity.
    """

    parity: Parity
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def block_size(self) -> int:
        return self.vectors.shape[0]

    @property
    def fock_indices(self) -> np.ndarray:
        return 2 * np.arange(self.block_size) + int(self.parity)

    def fock_vector(self, k: int, n_fock: Optional[int] = None) -> np.ndarray:
        """Eigenvector k embedded in the full Fock basis (zero on the other parity)."""
        n_fock = 2 * self.block_size if n_fock is None else n_fock
        out = np.zeros(n_fock)
        idx = self.fock_indices
        keep = idx < n_fock
        out[idx[keep]] = self.vectors[keep, k]
        return out

    def tail_weights(self) -> np.ndarray:
        return tail_weights(self.vectors)


def eigensolve(
    params: ModelParams,
    n_block: int,
    parity,
    count: Optional[int] = None,
    check: bool = True,
) -> SpectrumBlock:
    """Lowest ``count`` eigenpairs (all of them by default) of one parity block."""
    parity = Parity.coerce(parity)
    count = n_block if count is None else int(count)
    if not 1 <= count <= n_block:
        raise ValueError(f"count must lie in [1, {n_block}], got {count}")
    block = build_parity_block(params, n_block, parity)
    select, select_range = ("a", None) if count == n_block else ("i", (0, count - 1))
    try:
        energies, vectors = eigh_tridiagonal(
            block.diagonal, block.offdiagonal, select=select, select_range=select_range
        )
    except (LinAlgError, ValueError) as exc:
        raise EigensolverError(
            f"eigensolver failed on {parity.name} block (size {n_block}, {params}): {exc}"
        ) from exc
    if check:
        resid = np.abs(
            block.diagonal[:, None] * vectors
            + np.vstack([block.offdiagonal[:, None] * vectors[1:], np.zeros((1, count))])
            + np.vstack([np.zeros((1, count)), block.offdiagonal[:, None] * vectors[:-1]])
            - vectors * energies
        ).max(axis=0)
        # backward-stable bound: roundoff of order eps * ||H|| on top of the relative target
        hnorm = np.abs(block.diagonal).max() + 2.0 * np.abs(block.offdiagonal).max(initial=0.0)
        tol = 1e-9 * np.maximum(1.0, np.abs(energies)) + 64 * np.finfo(float).eps * hnorm
        if np.any(resid > tol):
            raise EigensolverError(
                f"eigenpair residual {resid.max():.3e} too large on {parity.name} block "
                f"(size {n_block}, {params})"
            )
    return SpectrumBlock(parity, energies, vectors)


def eigenvalues(params: ModelParams, n_block: int, parity, count: Optional[int] = None) -> np.ndarray:
    parity = Parity.coerce(parity)
    block = build_parity_block(params, n_block, parity)
    if count is None or count >= n_block:
        return eigh_tridiagonal(block.diagonal, block.offdiagonal, eigvals_only=True)
    return eigh_tridiagonal(
        block.diagonal, block.offdiagonal, eigvals_only=True, select="i", select_range=(0, count - 1)
    )


def _level(params: ModelParams, n_block: int, parity: Parity, k: int) -> float:
    block = build_parity_block(params, n_block, parity)
    return eigh_tridiagonal(
        block.diagonal, block.offdiagonal, eigvals_only=True, select="i", select_range=(k, k)
    )[0]


@dataclass(frozen=True)
class Spectrum:
    """Both parity blocks of one Hamiltonian."""

    params: ModelParams
    even: SpectrumBlock
    odd: SpectrumBlock

    @property
    def n_fock(self) -> int:
        return self.even.block_size + self.odd.block_size

    def block(self, parity) -> SpectrumBlock:
        return self.even if Parity.coerce(parity) is Parity.EVEN else self.odd

    @property
    def ground_energy(self) -> float:
        return float(min(self.even.energies[0], self.odd.energies[0]))

    @property
    def ground_parity(self) -> Parity:
        return Parity.EVEN if self.even.energies[0] <= self.odd.energies[0] else Parity.ODD

    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """All energies in ascending order with their parity labels."""
        energies = np.concatenate([self.even.energies, self.odd.energies])
        parities = np.concatenate(
            [np.zeros(self.even.energies.size, int), np.ones(self.odd.energies.size, int)]
        )
        order = np.argsort(energies, kind="stable")
        return energies[order], parities[order]

    def excitation_energies(self) -> tuple[np.ndarray, np.ndarray]:
        energies, parities = self.levels()
        return energies - self.ground_energy, parities

    def max_tail_weight(self, e_max: Optional[float] = None) -> float:
        """Worst top-10% Fock tail weight among eigenstates with excitation energy <= e_max."""
        worst = 0.0
        for blk in (self.even, self.odd):
            tails = blk.tail_weights()
            if e_max is not None:
                tails = tails[blk.energies - self.ground_energy <= e_max]
            if tails.size:
                worst = max(worst, float(tails.max()))
        return worst


def solve_spectrum(
    params: ModelParams, n_block: int = DEFAULT_BLOCK_SIZE, count: Optional[int] = None
) -> Spectrum:
    return Spectrum(
        params,
        eigensolve(params, n_block, Parity.EVEN, count),
        eigensolve(params, n_block, Parity.ODD, count),
    )


def excitation_spectrum(params: ModelParams, n_block: int = DEFAULT_BLOCK_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue-only excitation spectrum with parity labels (both sectors)."""
    even = eigenvalues(params, n_block, Parity.EVEN)
    odd = eigenvalues(params, n_block, Parity.ODD)
    energies = np.concatenate([even, odd])
    parities = np.concatenate([np.zeros(even.size, int), np.ones(odd.size, int)])
    order = np.argsort(energies, kind="stable")
    return energies[order] - energies.min(), parities[order]


def quantum_dos(
    params: ModelParams,
    bins: int,
    window: tuple[float, float],
    n_block: int = DEFAULT_BLOCK_SIZE,
) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of excitation energies over ``window``, normalized to unit integral.

    Returns ``(density, edges)``.
    """
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError(f"empty energy window {window}")
    excitations, _ = excitation_spectrum(params, n_block)
    inside = excitations[(excitations >= lo) & (excitations <= hi)]
    if inside.size == 0:
        raise ValueError(f"no levels inside window {window} for {params}")
    density, edges = np.histogram(inside, bins=bins, range=(lo, hi), density=True)
    return density, edges


class DosFeatures(NamedTuple):
    peak: float
    step: Optional[float]
    jump: Optional[float]  # density drop across the step, levels per unit energy


def _smoothed_counts(excitations, lo, hi, bin_width, smoothing_bins):
    nbins = int(round((hi - lo) / bin_width))
    counts, edges = np.histogram(excitations, bins=nbins, range=(lo, hi))
    half = int(math.ceil(4 * smoothing_bins))
    offsets = np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (offsets / smoothing_bins) ** 2)
    kernel /= kernel.sum()
    smooth = np.convolve(np.pad(counts.astype(float), half, mode="edge"), kernel, mode="valid")
    return smooth, 0.5 * (edges[:-1] + edges[1:])


def staircase_jump(excitations: np.ndarray, at: float, half_width: float, degree: int = 2) -> float:
    """One-sided density difference rho(at-) - rho(at+) of a level staircase.

    Fits a polynomial of ``degree`` to the counting function on each side of
    ``at`` and compares the two slopes there, so a smooth density gives ~0
    and a jump discontinuity gives its height.
    """
    ex = np.sort(np.asarray(excitations))
    left = ex[(ex >= at - half_width) & (ex < at)]
    right = ex[(ex >= at) & (ex < at + half_width)]
    if left.size < degree + 2 or right.size < degree + 2:
        return float("nan")
    fit_l = np.polyfit(left - at, np.arange(left.size) + 0.5, degree)
    fit_r = np.polyfit(right - at, np.arange(right.size) + 0.5, degree)
    return float(fit_l[-2] - fit_r[-2])


def locate_dos_features(
    excitations: np.ndarray,
    window: tuple[float, float],
    bin_width: float,
    smoothing_bins: float = 3.0,
    half_width: Optional[float] = None,
    n_candidates: int = 2000,
) -> DosFeatures:
    """Locate the ESQPT peak and the downward density step of a spectrum.

    The peak is the centre of the largest bin of the Gaussian-smoothed level
    histogram. The step is the point above the peak with the largest
    one-sided density drop (``staircase_jump``); a smooth decay such as the
    logarithmic tail of the peak does not register there.
    """
    lo, hi = map(float, window)
    excitations = np.asarray(excitations)
    excitations = excitations[(excitations >= lo) & (excitations <= hi)]
    smooth, centers = _smoothed_counts(excitations, lo, hi, bin_width, smoothing_bins)
    peak = float(centers[int(np.argmax(smooth))])
    if half_width is None:
        half_width = max(20 * bin_width, (hi - peak) / 6.0)
    if peak + 2 * half_width >= hi:
        return DosFeatures(peak, None, None)
    best = (-np.inf, None)
    for c in np.linspace(peak + half_width, hi - half_width, n_candidates):
        jump = staircase_jump(excitations, c, half_width)
        if np.isfinite(jump) and jump > best[0]:
            best = (jump, c)
    if best[1] is None or best[0] <= 0.0:
        return DosFeatures(peak, None, None)
    return DosFeatures(peak, float(best[1]), float(best[0]))


# ---------------------------------------------------------------------------
# sweeps over delta


@dataclass(frozen=True)
class LevelSweep:
    """Lowest levels of each parity block along a delta grid.

    ``levels[p]`` has shape (grid, L) and stores excitation energies
    E_k - E_0 of block ``p`` with E_0 recomputed at every grid point.
    """

    eps2: float
    deltas: np.ndarray
    levels: dict
    ground: np.ndarray
    n_block: int

    def combined(self, i: int, count: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        """Lowest ``count`` excitation energies at grid point i with parity labels."""
        energies = np.concatenate([self.levels[Parity.EVEN][i], self.levels[Parity.ODD][i]])
        parities = np.concatenate(
            [np.zeros(self.levels[Parity.EVEN].shape[1], int), np.ones(self.levels[Parity.ODD].shape[1], int)]
        )
        order = np.argsort(energies, kind="stable")
        count = energies.size if count is None else count
        return energies[order][:count], parities[order][:count]

    def rows(self, count: Optional[int] = None):
        """Yield (delta, level_index, parity, excitation_energy) rows."""
        for i, delta in enumerate(self.deltas):
            energies, parities = self.combined(i, count)
            for k, (e, par) in enumerate(zip(energies, parities)):
                yield float(delta), k, Parity(int(par)), float(e)


def _sweep_point(eps2: float, delta: float, count: int, n_block: int) -> tuple[np.ndarray, np.ndarray]:
    params = ModelParams(delta, eps2)
    try:
        even = eigenvalues(params, n_block, Parity.EVEN, count)
        odd = eigenvalues(params, n_block, Parity.ODD, count)
    except (LinAlgError, ValueError) as exc:
        raise EigensolverError(f"sweep failed at delta={delta}: {exc}") from exc
    return even, odd


def sweep_levels(
    eps2: float,
    delta_grid: Sequence[float],
    count: int,
    n_block: int = 200,
) -> LevelSweep:
    """Lowest ``count`` levels per parity along an ascending delta grid."""
    deltas = np.asarray(delta_grid, dtype=float)
    if deltas.ndim != 1 or deltas.size == 0:
        raise ValueError("delta_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(deltas) <= 0):
        raise ValueError("delta_grid must be strictly ascending")
    count = min(int(count), n_block)
    even = np.empty((deltas.size, count))
    odd = np.empty((deltas.size, count))
    for i, delta in enumerate(deltas):
        even[i], odd[i] = _sweep_point(eps2, float(delta), count, n_block)
    ground = np.minimum(even[:, 0], odd[:, 0])
    return LevelSweep(
        eps2,
        deltas,
        {Parity.EVEN: even - ground[:, None], Parity.ODD: odd - ground[:, None]},
        ground,
        n_block,
    )


@dataclass(frozen=True)
class CrossingRecord:
    kind: str  # "real" or "avoided"
    delta: float
    levels: tuple  # ((index, parity), (index, parity))
    gap: float
    energy: float  # excitation energy of the pair at the crossing

    def __post_init__(self):
        (_, pa), (_, pb) = self.levels
        if self.kind == "real" and pa == pb:
            raise ValueError("a real crossing needs levels of opposite parity")
        if self.kind == "avoided" and pa != pb:
            raise ValueError("an avoided crossing needs levels of equal parity")


def _window_at(eps2: float, delta: float, energy_window) -> Optional[tuple[float, float]]:
    if energy_window is not None:
        return tuple(energy_window)
    params = ModelParams(delta, eps2)
    if classify_regime(params) is not Regime.III:
        return None
    crit = esqpt_energies(params)
    return crit.e_esqpt, crit.e_step


def _excitation(params: ModelParams, n_block: int, parity: Parity, k: int) -> float:
    ground = min(_level(params, n_block, Parity.EVEN, 0), _level(params, n_block, Parity.ODD, 0))
    return _level(params, n_block, parity, k) - ground


def find_crossings(
    sweep: LevelSweep,
    energy_window: Optional[tuple[float, float]] = None,
    gap_tol: float = 1e-8,
    dip_ratio: float = 0.5,
) -> list[CrossingRecord]:
    """Locate real and avoided level crossings along a sweep.

    Real crossings are sign changes of an even/odd level difference; each is
    refined by Brent bisection in delta and kept when the refined gap is
    below ``gap_tol``. Avoided crossings are interior local minima of the gap
    between adjacent levels of one parity, refined by bounded golden-section
    search, and kept when the minimum gap is below ``dip_ratio`` times the
    gap half a unit of delta away on both sides. Only pairs whose excitation
    energy lies inside the window are considered; by default the window is
    the open interval between the two critical energies at each grid point.
    """
    deltas = sweep.deltas
    eps2 = sweep.eps2
    nb = sweep.n_block
    windows = []
    for i, delta in enumerate(deltas):
        win = _window_at(eps2, float(delta), energy_window)
        if win is None:
            warnings.warn(f"no crossing window at delta={delta} (not regime III); skipped")
        windows.append(win)

    def in_window(i: int, energy: float) -> bool:
        win = windows[i]
        return win is not None and win[0] < energy < win[1]

    records: list[CrossingRecord] = []
    even = sweep.levels[Parity.EVEN]
    odd = sweep.levels[Parity.ODD]
    count = even.shape[1]

    # real crossings: opposite-parity sign changes. Grid points where the
    # difference is already ~0 carry no sign, so brackets skip over them.
    floor = 1e-9
    diff = even[:, :, None] - odd[:, None, :]
    signs = np.where(np.abs(diff) > floor, np.sign(diff), 0.0)
    brackets = []
    for k in range(count):
        for j in range(odd.shape[1]):
            nz = np.flatnonzero(signs[:, k, j])
            for lo_i, hi_i in zip(nz[:-1], nz[1:]):
                if signs[lo_i, k, j] != signs[hi_i, k, j]:
                    brackets.append((int(lo_i), int(hi_i), k, j))
    for i, i2, k, j in brackets:
        mid = 0.25 * (even[i, k] + odd[i, j] + even[i2, k] + odd[i2, j])
        if not (in_window(i, mid) and in_window(i2, mid)):
            continue

        def gap_fn(d, k=k, j=j):
            params = ModelParams(d, eps2)
            return _level(params, nb, Parity.EVEN, k) - _level(params, nb, Parity.ODD, j)

        loc = brentq(gap_fn, deltas[i], deltas[i2], xtol=1e-13, rtol=4 * np.finfo(float).eps)
        gap = abs(gap_fn(loc))
        energy = _excitation(ModelParams(loc, eps2), nb, Parity.EVEN, int(k))
        if gap < gap_tol:
            records.append(
                CrossingRecord("real", float(loc), ((int(k), Parity.EVEN), (int(j), Parity.ODD)), gap, energy)
            )

    # avoided crossings: local minima of same-parity adjacent gaps
    for parity, lv in ((Parity.EVEN, even), (Parity.ODD, odd)):
        gaps = np.diff(lv, axis=1)
        for k in range(count - 1):
            g = gaps[:, k]
            for i in range(1, deltas.size - 1):
                if not (g[i] < g[i - 1] and g[i] <= g[i + 1]):
                    continue
                mid = 0.5 * (lv[i, k] + lv[i, k + 1])
                if not in_window(i, mid):
                    continue

                def gap_fn(d, k=k, parity=parity):
                    params = ModelParams(d, eps2)
                    return _level(params, nb, parity, k + 1) - _level(params, nb, parity, k)

                res = minimize_scalar(
                    gap_fn, bounds=(deltas[i - 1], deltas[i + 1]), method="bounded",
                    options={"xatol": 1e-5},
                )
                loc, gmin = float(res.x), float(res.fun)
                if gmin > dip_ratio * min(gap_fn(loc - 0.5), gap_fn(loc + 0.5)):
                    continue
                energy = _excitation(ModelParams(loc, eps2), nb, parity, k) + 0.5 * gmin
                records.append(CrossingRecord("avoided", loc, ((k, parity), (k + 1, parity)), gmin, energy))

    records.sort(key=lambda r: (r.delta, r.energy))
    return records


class Doublets(NamedTuple):
    energy: np.ndarray  # mean excitation energy of each pair
    splitting: np.ndarray
    spacing: np.ndarray  # local mean distance to the neighbouring pairs


def doublet_splittings(params: ModelParams, e_max: float, n_block: int = 800) -> Doublets:
    """Splittings of the index-matched even/odd pairs with excitation energy below e_max."""
    even = eigenvalues(params, n_block, Parity.EVEN)
    odd = eigenvalues(params, n_block, Parity.ODD)
    ground = min(even[0], odd[0])
    pair = 0.5 * (even + odd) - ground
    split = np.abs(even - odd)
    n = int(np.searchsorted(pair, e_max, side="right"))
    spacing = np.gradient(pair[: max(n + 1, 2)])[:n] if n else np.empty(0)
    return Doublets(pair[:n], split[:n], spacing)


def participation_ratio(state) -> float:
    c = np.asarray(state)
    prob = np.abs(c) ** 2
    norm = prob.sum()
    if not norm > 0.0:
        raise ValueError("participation ratio of a zero vector is undefined")
    prob = prob / norm
    return float(1.0 / np.sum(prob**2))
