import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from kerrtunnel.hilbert import ModelParams, Parity, banded_hamiltonian
from kerrtunnel.spectral import (
    eigensolve,
    excitation_spectrum,
    find_crossings,
    locate_dos_features,
    participation_ratio,
    quantum_dos,
    solve_spectrum,
    staircase_jump,
    sweep_levels,
)


def test_undriven_levels_are_diagonal():
    delta = 7.5
    spec = solve_spectrum(ModelParams(delta, 0.0), n_block=30)
    energies, parities = spec.levels()
    n = np.arange(60)
    expected = np.sort(-delta * n + n * (n - 1))
    assert np.allclose(energies, expected, atol=1e-10)


def _dense(params, size):
    return banded_hamiltonian(params, size).to_dense()


def test_blocks_match_dense_diagonalization():
    params = ModelParams(4.0, 1.5)
    dense = eigh(_dense(params, 40), eigvals_only=True)
    spec = solve_spectrum(params, n_block=20)
    assert np.allclose(spec.levels()[0], dense, atol=1e-10 * np.abs(dense).max())


@settings(max_examples=15)
@given(st.floats(-50, 200), st.floats(0.1, 10), st.sampled_from([Parity.EVEN, Parity.ODD]))
def test_eigenvectors_orthonormal_and_parity_pure(delta, eps2, parity):
    blk = eigensolve(ModelParams(delta, eps2), 60, parity)
    assert np.allclose(blk.vectors.T @ blk.vectors, np.eye(60), atol=1e-10)
    v = blk.fock_vector(3)
    wrong = np.arange(v.size) % 2 != int(parity)
    assert np.all(v[wrong] == 0)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_low_levels_stable_under_truncation_growth():
    params = ModelParams(175, 3)
    small = solve_spectrum(params, n_block=400, count=100).levels()[0]
    big = solve_spectrum(params, n_block=500, count=100).levels()[0]
    assert np.allclose(small[:100], big[:100], rtol=1e-10, atol=1e-8)


def test_count_bounds():
    with pytest.raises(ValueError):
        eigensolve(ModelParams(1, 1), 10, "even", count=11)


def test_quantum_dos_normalized():
    density, edges = quantum_dos(ModelParams(175, 3), 40, (0, 12000), n_block=400)
    assert np.sum(density * np.diff(edges)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        quantum_dos(ModelParams(175, 3), 10, (5, 5), n_block=50)


def test_staircase_jump_detects_a_step():
    levels = np.concatenate([np.arange(0, 100, 0.5), np.arange(100, 200, 1.0)])
    assert staircase_jump(levels, 100.0, 30.0) == pytest.approx(1.0, abs=0.05)
    assert abs(staircase_jump(np.arange(0, 200, 0.5), 100.0, 30.0)) < 0.05


def test_dos_features_on_synthetic_spectrum():
    rng = np.random.default_rng(2)
    dense = np.sort(rng.uniform(0, 1000, 4000))
    peak = rng.normal(300, 10, 800)
    sparse = np.arange(1000, 3000, 1.0)
    feats = locate_dos_features(np.concatenate([dense, peak, sparse]), (0, 3000), 10)
    assert abs(feats.peak - 300) < 20
    assert abs(feats.step - 1000) < 40


def test_crossing_rule_real_for_opposite_parity():
    sweep = sweep_levels(3.0, np.arange(24.5, 29.51, 0.25), 30, n_block=200)
    records = find_crossings(sweep)
    real = sorted({round(r.delta, 6) for r in records if r.kind == "real"})
    assert real and all(abs(d - round(d)) < 1e-6 for d in real)
    for r in records:
        (_, pa), (_, pb) = r.levels
        if r.kind == "real":
            assert pa is not pb and r.gap < 1e-8
            assert round(r.delta) % 2 == 0
        else:
            assert pa is pb


def test_undriven_levels_cross_at_integers():
    # without the drive every pair n, n' with n + n' + 1 = delta is exactly degenerate
    sweep = sweep_levels(0.0, np.arange(9.6, 12.41, 0.2), 8, n_block=40)
    records = find_crossings(sweep)
    real = {round(r.delta, 6) for r in records if r.kind == "real"}
    assert real == {10.0, 12.0}
    # same-parity pairs touch at odd delta; the finder sees a zero-gap minimum
    same = [r for r in records if r.kind == "avoided"]
    assert same and all(round(r.delta, 6) == 11.0 and r.gap < 1e-9 for r in same)


def test_crossings_warn_outside_regime_iii():
    sweep = sweep_levels(3.0, np.arange(2.0, 8.01, 0.5), 6, n_block=40)
    with pytest.warns(UserWarning, match="no crossing window"):
        find_crossings(sweep)


def test_participation_ratio_examples():
    assert participation_ratio([1, 0, 0]) == 1.0
    assert participation_ratio(np.ones(7)) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        participation_ratio(np.zeros(3))


def test_ground_state_even():
    spec = solve_spectrum(ModelParams(175, 3), n_block=300, count=4)
    assert spec.ground_parity is Parity.EVEN


def test_excitation_spectrum_starts_at_zero():
    ex, par = excitation_spectrum(ModelParams(30, 2), n_block=80)
    assert ex[0] == 0 and np.all(np.diff(ex) >= 0) and set(par) == {0, 1}
