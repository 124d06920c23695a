"""Truncated Fock-space representation of the squeeze-driven Kerr Hamiltonian.

    H = -delta * a^dag a + a^dag^2 a^2 - eps2 * (a^dag^2 + a^2)

with K = 1 and hbar = 1. The Hamiltonian only couples Fock states n and n+2,
so it commutes with the parity (-1)^n and splits into two symmetric
tridiagonal blocks, one per parity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

DEFAULT_BLOCK_SIZE = 2000
TRUNCATION_CAP = 16384


class TruncationOverflow(RuntimeError):
    """No admissible truncation was found below the hard cap."""


class Parity(enum.IntEnum):
    """Parity sector, valued as n mod 2 of the Fock states it contains."""

    EVEN = 0
    ODD = 1

    @property
    def sign(self) -> int:
        return 1 if self is Parity.EVEN else -1

    @classmethod
    def coerce(cls, value) -> "Parity":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("even", "+", "+1", "positive"):
                return cls.EVEN
            if key in ("odd", "-", "-1", "negative"):
                return cls.ODD
            raise ValueError(f"unknown parity label {value!r}")
        return cls(int(value))


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless Hamiltonian parameters (delta/K, eps2/K)."""

    delta: float
    eps2: float

    def __post_init__(self):
        delta = float(self.delta)
        eps2 = float(self.eps2)
        if not math.isfinite(delta):
            raise ValueError(f"delta must be finite, got {self.delta!r}")
        if not (math.isfinite(eps2) and eps2 >= 0.0):
            raise ValueError(f"eps2 must be finite and non-negative, got {self.eps2!r}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eps2", eps2)

    def with_delta(self, delta: float) -> "ModelParams":
        return ModelParams(delta, self.eps2)


@dataclass(frozen=True)
class BandedHamiltonian:
    """Full truncated Hamiltonian stored as its diagonal and its n <-> n+2 band."""

    diagonal: np.ndarray
    off2: np.ndarray

    @property
    def size(self) -> int:
        return self.diagonal.size

    def to_dense(self) -> np.ndarray:
        h = np.diag(self.diagonal)
        idx = np.arange(self.off2.size)
        h[idx, idx + 2] = self.off2
        h[idx + 2, idx] = self.off2
        return h

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = self.diagonal * vec
        out[:-2] += self.off2 * vec[2:]
        out[2:] += self.off2 * vec[:-2]
        return out


@dataclass(frozen=True)
class ParityBlock:
    """Symmetric tridiagonal block of one parity, indexed by m with n = 2m + parity."""

    parity: Parity
    diagonal: np.ndarray
    offdiagonal: np.ndarray

    @property
    def size(self) -> int:
        return self.diagonal.size

    @property
    def fock_indices(self) -> np.ndarray:
        return 2 * np.arange(self.size) + int(self.parity)

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.offdiagonal, 1)
            + np.diag(self.offdiagonal, -1)
        )

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = self.diagonal * vec
        out[:-1] += self.offdiagonal * vec[1:]
        out[1:] += self.offdiagonal * vec[:-1]
        return out


def _diagonal(params: ModelParams, n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return -params.delta * n + n * (n - 1.0)


def _coupling(params: ModelParams, n: np.ndarray) -> np.ndarray:
    """<n|H|n+2>."""
    n = np.asarray(n, dtype=float)
    return -params.eps2 * np.sqrt((n + 1.0) * (n + 2.0))


def matrix_element(params: ModelParams, n: int, m: int) -> float:
    """Return <n|H|m> in units of K."""
    if n < 0 or m < 0:
        raise ValueError(f"Fock indices must be non-negative, got ({n}, {m})")
    if n == m:
        return float(_diagonal(params, n))
    if abs(n - m) == 2:
        return float(_coupling(params, min(n, m)))
    return 0.0


def banded_hamiltonian(params: ModelParams, size: int) -> BandedHamiltonian:
    """Hamiltonian truncated to Fock states n < size."""
    if size < 3:
        raise ValueError(f"truncation must keep at least 3 Fock states, got {size}")
    n = np.arange(size)
    return BandedHamiltonian(_diagonal(params, n), _coupling(params, n[:-2]))


def build_parity_block(params: ModelParams, n_block: int, parity) -> ParityBlock:
    """Tridiagonal block holding the first ``n_block`` Fock states of one parity."""
    parity = Parity.coerce(parity)
    if n_block < 2:
        raise ValueError(f"n_block must be >= 2, got {n_block}")
    n = 2 * np.arange(n_block) + int(parity)
    return ParityBlock(parity, _diagonal(params, n), _coupling(params, n[:-1]))


def tail_weights(vectors: np.ndarray, fraction: float = 0.1) -> np.ndarray:
    """Probability carried by the top ``fraction`` of basis indices, per column."""
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    size = vectors.shape[0]
    top = max(1, int(math.ceil(fraction * size)))
    return np.sum(np.abs(vectors[size - top :]) ** 2, axis=0)


def _ground_energy(params: ModelParams, n_block: int) -> float:
    lows = []
    for parity in Parity:
        block = build_parity_block(params, n_block, parity)
        lows.append(
            eigh_tridiagonal(
                block.diagonal, block.offdiagonal, eigvals_only=True,
                select="i", select_range=(0, 0),
            )[0]
        )
    return min(lows)


def truncation_tail(params: ModelParams, n_block: int, e_max: float) -> float:
    """Worst top-10% tail weight over eigenstates with excitation energy <= e_max."""
    e0 = _ground_energy(params, n_block)
    worst = 0.0
    for parity in Parity:
        block = build_parity_block(params, n_block, parity)
        try:
            _, vecs = eigh_tridiagonal(
                block.diagonal, block.offdiagonal,
                select="v", select_range=(-np.inf, e0 + e_max),
            )
        except LinAlgError as exc:
            raise LinAlgError(f"{parity.name} block of size {n_block}: {exc}") from exc
        if vecs.shape[1]:
            worst = max(worst, float(tail_weights(vecs).max()))
    return worst


def suggest_truncation(
    params: ModelParams,
    e_max: float,
    tail_tol: float = 1e-10,
    start: int = 16,
    growth: float = 1.25,
    cap: int = TRUNCATION_CAP,
) -> int:
    """Smallest block size on a geometric ladder that converges all levels up to e_max.

    A size is accepted when every eigenstate with excitation energy
    ``<= e_max`` keeps less than ``tail_tol`` of its weight on the top 10% of
    the block's Fock indices. The ladder is fixed, so the result is
    non-decreasing in ``e_max``.
    """
    if not 0.0 < tail_tol <= 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1], got {tail_tol}")
    n_block = max(2, int(start))
    if tail_tol >= 1.0:
        return n_block
    while n_block <= cap:
        if truncation_tail(params, n_block, e_max) < tail_tol:
            return n_block
        n_block = max(n_block + 1, int(math.ceil(n_block * growth)))
    raise TruncationOverflow(
        f"truncation overflow: no block size <= {cap} reaches tail weight < {tail_tol:g} "
        f"for excitation energies up to {e_max:g} at {params}"
    )
