import numpy as np
import pytest

from legendrix.forward import SpectralCurve, spectral_curve
from legendrix.inverse import (
    BranchError,
    InverseOptions,
    InversionError,
    curve_derivative,
    derivative_on_grid,
    fornberg_weights,
    invert_1d,
    killing_nondegeneracy,
    relation_residuals,
)
from legendrix.potentials import Potential

AFFINE = Potential("affine", {"a": 1.0, "b": 0.5})
MUS = np.linspace(0.2, 3.0, 200)


def synthetic_curve(mu, F, model="sphere_s1"):
    """A curve holding only ``(mu, F)``; every point valid, minimizers unknown."""
    n = len(mu)
    return SpectralCurve(model, {"kind": "callable"}, np.asarray(mu, float), np.asarray(F, float),
                         np.full(n, np.nan), np.ones(n), np.ones(n, int), np.ones(n, bool),
                         np.ones(n, bool), ["ok"] * n)


@pytest.fixture(scope="module")
def affine_curve():
    from legendrix.reduction import RotatingSphere

    return spectral_curve(RotatingSphere(), AFFINE, MUS)


def test_fornberg_central_weights():
    assert np.allclose(fornberg_weights(0.0, [-2, -1, 0, 1, 2], 1), np.array([1, -8, 0, 8, -1]) / 12)
    assert np.allclose(fornberg_weights(0.0, [-1, 0, 1], 2), [1, -2, 1])


def test_derivative_of_quadratic_is_exact():
    mu = np.linspace(0.1, 2.0, 17)
    assert np.abs(derivative_on_grid(mu, mu**2) - 2 * mu).max() < 1e-12
    assert np.abs(curve_derivative((mu, mu**2)) - 2 * mu).max() < 1e-12


def test_derivative_converges_at_high_order():
    errs = []
    ns = (21, 41, 81)
    for n in ns:
        mu = np.linspace(0.0, 2.0, n)
        errs.append(np.abs(derivative_on_grid(mu, np.sin(mu)) - np.cos(mu)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 3.0


def test_derivative_needs_five_points():
    with pytest.raises(ValueError):
        derivative_on_grid([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 4.0, 9.0])
    with pytest.raises(ValueError):
        derivative_on_grid([0.0, 2.0, 1.0, 3.0, 4.0], np.zeros(5))


def test_affine_roundtrip_and_routes(sphere, affine_curve):
    res = invert_1d(affine_curve, sphere, truth=AFFINE)
    assert res.valid
    assert res.comparison["sup_error"] <= 1e-3
    # the derivative route agrees with the value route up to the additive constant
    assert np.abs((res.V_hat - res.V_hat[0]) - res.V_hat_derivative).max() <= 1e-4
    assert res.branch_report["injective"]
    lo, hi = res.window
    assert 0 < lo < hi <= np.pi / 2 + 1e-9


def test_inversion_ignores_recorded_minimizers(sphere, affine_curve):
    blind = synthetic_curve(affine_curve.mu, affine_curve.F)
    a = invert_1d(affine_curve, sphere)
    b = invert_1d(blind, sphere)
    assert np.array_equal(a.V_hat, b.V_hat)


def test_noise_tolerance(sphere, affine_curve):
    rng = np.random.default_rng(8)
    noisy = synthetic_curve(affine_curve.mu, affine_curve.F + 1e-8 * rng.standard_normal(len(MUS)))
    res = invert_1d(noisy, sphere, truth=AFFINE)
    assert res.comparison["sup_error"] <= 1e-4


def test_zero_and_constant_potentials_collapse(sphere):
    mus = np.linspace(0.5, 2.0, 30)
    zero = invert_1d(spectral_curve(sphere, Potential("zero"), mus), sphere)
    assert np.abs(zero.V_hat).max() <= 1e-8
    assert zero.branch_report["collapsed"] and zero.window[0] == pytest.approx(np.pi / 2, abs=1e-6)
    const = invert_1d(spectral_curve(sphere, Potential("affine", {"a": 2.5, "b": 0.0}), mus), sphere)
    assert np.abs(const.V_hat - 2.5).max() <= 1e-8
    assert not const.valid


def test_residuals_detect_a_perturbed_potential(sphere, affine_curve):
    res = invert_1d(affine_curve, sphere)
    assert max(res.residuals["stationarity"], res.residuals["mu_derivative"]) <= 1e-4
    z = res.z_grid
    good = relation_residuals(affine_curve, sphere, (z, AFFINE(z)))
    bad = relation_residuals(affine_curve, sphere, (z, AFFINE(z) + 1e-2 * np.sin(8 * z)))
    assert good["stationarity"] <= 1e-4
    assert bad["stationarity"] > 1e-3


def test_non_injective_curve_raises(sphere):
    # w = F' / (2 mu) must be monotone; this one oscillates
    mu = np.linspace(0.5, 2.0, 60)
    F = mu**2 * (2.0 + 0.2 * np.sin(6 * mu))
    with pytest.raises(BranchError) as exc:
        invert_1d(synthetic_curve(mu, F), sphere)
    assert not exc.value.report["injective"]
    assert "branch_map" in exc.value.report


def test_too_few_points(sphere):
    mu = np.linspace(0.5, 1.0, 6)
    with pytest.raises(InversionError):
        invert_1d(synthetic_curve(mu, 2 * mu**2), sphere)


def test_option_checks(sphere, affine_curve):
    with pytest.raises(ValueError):
        invert_1d(affine_curve, sphere, InverseOptions(branch="sideways"))


def test_csv_and_json(tmp_path, sphere, affine_curve):
    res = invert_1d(affine_curve, sphere)
    res.to_csv(tmp_path / "v.csv")
    res.to_json(tmp_path / "v.json")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[:2] == ["# schema_version=1.0", "z,V_hat"]
    assert len(lines) == len(res.z_grid) + 2


def test_killing_nondegeneracy_families():
    grid = np.linspace(0.1, 2.0, 8)
    assert killing_nondegeneracy(None, lambda z, m: np.exp(z * m), grid, grid).all_nondegenerate
    assert killing_nondegeneracy(None, lambda z, m: z**2 + np.sin(m), grid, grid).all_degenerate
    # mixed derivative 2 (z - 1) vanishes on the z = 1 row only
    mixed = killing_nondegeneracy(None, lambda z, m: (z - 1.0) ** 2 * m, np.linspace(0.0, 2.0, 9), grid)
    assert not mixed.all_nondegenerate and not mixed.all_degenerate
