import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legendrix.quantum import (
    WeightSpaceProblem,
    classical_minimum,
    exact_eigenvalues,
    ground_energy_scan,
    lowest_eigenvalue,
    lowest_eigenvalues,
    reduced_phase_volume,
    smoothed_trace,
    weight_operator,
    weyl_count,
)


def zero(theta):
    return np.zeros_like(theta)


def test_operator_is_symmetric_tridiagonal():
    for mu in (0.0, 1.0):
        diag, off, theta = weight_operator(WeightSpaceProblem(mu, 10, 300, np.cos))
        assert len(off) == len(diag) - 1 == len(theta) - 1
        assert np.all(off < 0)
        assert np.all((theta > 0) & (theta < np.pi))


def test_tridiagonal_solver_matches_dense():
    prob = WeightSpaceProblem(1.0, 10, 300, np.cos)
    diag, off, _ = weight_operator(prob)
    dense = np.linalg.eigvalsh(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1))[:3]
    got = lowest_eigenvalues(prob, 3, richardson=False).eigenvalues
    assert np.allclose(got, dense, rtol=1e-12, atol=0)


@pytest.mark.parametrize("mu,k", [(1.0, 20), (0.5, 10), (0.0, 10)])
def test_free_spectrum_matches_spherical_harmonics(mu, k):
    got = lowest_eigenvalues(WeightSpaceProblem(mu, k, 800, zero), 5).eigenvalues
    assert np.abs(got - exact_eigenvalues(mu, k, 5)).max() <= 1e-8


def test_reflection_symmetry():
    # theta -> pi - theta maps cos to -cos without changing the spectrum
    a = lowest_eigenvalue(WeightSpaceProblem(1.0, 20, 400, np.cos))
    b = lowest_eigenvalue(WeightSpaceProblem(1.0, 20, 400, lambda t: -np.cos(t)))
    assert a == pytest.approx(b, abs=1e-12)


def test_richardson_grid_independence():
    coarse = lowest_eigenvalue(WeightSpaceProblem(1.0, 20, 200, np.cos))
    fine = lowest_eigenvalue(WeightSpaceProblem(1.0, 20, 800, np.cos))
    assert abs(coarse - fine) <= 1e-6
    raw = lowest_eigenvalue(WeightSpaceProblem(1.0, 20, 200, np.cos), richardson=False)
    assert abs(raw - fine) > abs(coarse - fine)


def test_weight_follows_mu_times_k():
    assert WeightSpaceProblem(0.5, 20).m == 10
    assert WeightSpaceProblem(1.0, 7).hbar == pytest.approx(1 / 7)


def test_problem_validation():
    with pytest.raises(ValueError):
        WeightSpaceProblem(1.0, 10, grid_n=100)
    with pytest.raises(ValueError):
        WeightSpaceProblem(1.0, 0)
    with pytest.raises(ValueError):
        WeightSpaceProblem(-1.0, 5)


def test_ground_energy_above_classical_minimum():
    F, th = classical_minimum(np.cos, 1.0)
    assert F == pytest.approx(1 / np.sin(th) ** 2 + np.cos(th), abs=1e-14)
    scan = ground_energy_scan(np.cos, 1.0, [10, 20, 40])
    assert np.all(scan.gap > 0) and np.all(np.diff(scan.gap) < 0)
    assert 0.9 <= scan.slope <= 1.1
    with pytest.raises(ValueError):
        ground_energy_scan(np.cos, 1.0, [20, 10])


def test_scan_csv(tmp_path):
    scan = ground_energy_scan(zero, 1.0, [10, 20])
    scan.to_csv(tmp_path / "scan.csv")
    lines = (tmp_path / "scan.csv").read_text().splitlines()
    assert lines[1] == "k,hbar,lambda_min,F,gap"
    assert len(lines) == 4


@pytest.mark.parametrize("mu,E", [(1.0, 4.0), (0.5, 2.0), (0.0, 4.0)])
def test_free_phase_volume_closed_form(mu, E):
    # area of {p^2 + mu^2 / sin^2 <= E} is 2 pi (sqrt(E) - mu)
    assert reduced_phase_volume(zero, mu, E) == pytest.approx(2 * np.pi * (np.sqrt(E) - mu), abs=1e-10)


def test_phase_volume_vanishes_at_the_bottom():
    F, _ = classical_minimum(np.cos, 1.0)
    assert reduced_phase_volume(np.cos, 1.0, F) == 0.0
    assert reduced_phase_volume(np.cos, 1.0, F + 1e-6) < 1e-4
    with pytest.raises(ValueError):
        reduced_phase_volume(np.cos, 1.0)


def test_weyl_counts_exact_for_free_sphere():
    r = weyl_count(zero, 1.0, 40, 4.0)
    exact = sum(1 for ell in range(40, 400) if ell * (ell + 1) / 1600 <= 4.0)
    assert r.quantum == exact
    assert r.rel_error < 0.05


def test_smoothed_trace_improves_with_k():
    errs = [smoothed_trace(np.cos, 1.0, k).rel_error for k in (10, 20, 40)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-4


@given(st.floats(0.2, 2.0), st.floats(0.5, 3.0))
@settings(max_examples=20, deadline=None)
def test_phase_volume_grows_with_energy(mu, dE):
    F, _ = classical_minimum(np.cos, mu)
    assert reduced_phase_volume(np.cos, mu, F + dE) < reduced_phase_volume(np.cos, mu, F + dE + 0.5)
