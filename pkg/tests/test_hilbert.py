import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kerrtunnel.hilbert import (
    ModelParams,
    Parity,
    TruncationOverflow,
    banded_hamiltonian,
    build_parity_block,
    matrix_element,
    suggest_truncation,
    truncation_tail,
)

P = ModelParams(5.0, 3.0)
deltas = st.floats(-50, 50, allow_nan=False)
eps2s = st.floats(0.0, 20, allow_nan=False)


def test_matrix_elements():
    assert matrix_element(P, 0, 0) == 0.0
    assert matrix_element(P, 2, 2) == -8.0
    assert matrix_element(P, 0, 2) == pytest.approx(-3 * math.sqrt(2), abs=1e-14)
    assert matrix_element(P, 1, 1) == -5.0
    with pytest.raises(ValueError):
        matrix_element(P, -1, 0)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1.0, -0.5)
    with pytest.raises(ValueError):
        ModelParams(float("nan"), 1.0)
    assert ModelParams(1, 2).with_delta(3.0) == ModelParams(3.0, 2.0)


def test_parity_coerce():
    assert Parity.coerce("even") is Parity.EVEN
    assert Parity.coerce(1) is Parity.ODD
    assert Parity.ODD.sign == -1
    with pytest.raises(ValueError):
        Parity.coerce("sideways")


def test_block_entries():
    even = build_parity_block(P, 5, "even")
    odd = build_parity_block(P, 5, Parity.ODD)
    assert even.diagonal[0] == 0.0
    assert even.offdiagonal[0] == pytest.approx(-3 * math.sqrt(2))
    assert odd.diagonal[0] == -5.0
    for m in range(4):
        assert even.diagonal[m] == matrix_element(P, 2 * m, 2 * m)
        assert even.offdiagonal[m] == matrix_element(P, 2 * m, 2 * m + 2)
        assert odd.offdiagonal[m] == matrix_element(P, 2 * m + 1, 2 * m + 3)
    with pytest.raises(ValueError):
        build_parity_block(P, 1, "even")


@given(deltas, eps2s)
def test_symmetry_and_sparsity(delta, eps2):
    params = ModelParams(delta, eps2)
    for n in range(20):
        for m in range(20):
            value = matrix_element(params, n, m)
            assert value == matrix_element(params, m, n)
            if abs(n - m) not in (0, 2):
                assert value == 0.0


@given(deltas, eps2s, st.integers(3, 40))
def test_block_spectra_union_equals_full(delta, eps2, size):
    params = ModelParams(delta, eps2)
    full = np.linalg.eigvalsh(banded_hamiltonian(params, size).to_dense())
    n_even, n_odd = (size + 1) // 2, size // 2
    parts = [np.linalg.eigvalsh(build_parity_block(params, n_even, "even").to_dense())]
    if n_odd >= 2:
        parts.append(np.linalg.eigvalsh(build_parity_block(params, n_odd, "odd").to_dense()))
    else:
        parts.append(np.array([matrix_element(params, 1, 1)]))
    union = np.sort(np.concatenate(parts))
    scale = max(1.0, np.abs(full).max())
    assert np.allclose(union, full, atol=1e-12 * scale, rtol=0)


@given(deltas, eps2s, st.integers(2, 60))
def test_trace_identity(delta, eps2, n):
    block = build_parity_block(ModelParams(delta, eps2), n, "odd")
    evals = np.linalg.eigvalsh(block.to_dense())
    assert evals.sum() == pytest.approx(block.diagonal.sum(), rel=1e-9, abs=1e-9)


def test_matvec_matches_dense():
    rng = np.random.default_rng(3)
    h = banded_hamiltonian(P, 12)
    blk = build_parity_block(P, 6, "even")
    v, w = rng.normal(size=12), rng.normal(size=6)
    assert np.allclose(h.matvec(v), h.to_dense() @ v)
    assert np.allclose(blk.matvec(w), blk.to_dense() @ w)


def test_suggest_truncation_examples():
    n_small = suggest_truncation(ModelParams(-3000, 400), e_max=100.0)
    assert n_small < 2000
    assert truncation_tail(ModelParams(-3000, 400), n_small, 100.0) < 1e-10
    n_kerr = suggest_truncation(ModelParams(175, 3), e_max=8190.25)
    assert 100 <= n_kerr <= 1000
    assert suggest_truncation(ModelParams(175, 3), 10.0, tail_tol=1.0) == 16


def test_suggest_truncation_monotone():
    params = ModelParams(40, 3)
    sizes = [suggest_truncation(params, e) for e in (10, 100, 500, 2000)]
    assert sizes == sorted(sizes)


def test_truncation_overflow():
    with pytest.raises(TruncationOverflow, match="truncation overflow"):
        suggest_truncation(ModelParams(175, 3), 8190.25, cap=40)
