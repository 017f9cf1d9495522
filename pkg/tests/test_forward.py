import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legendrix.forward import (
    CP2_C_TILDE,
    ForwardConfig,
    SpectralCurve,
    condition_I_report,
    effective_potential_reduced,
    minimize_F,
    spectral_curve,
)
from legendrix.inverse import curve_derivative
from legendrix.morse import MorseConfig
from legendrix.potentials import Potential
from legendrix.reduction import get_model

AFFINE = Potential("affine", {"a": 1.0, "b": 0.5})


def test_sphere_zero_potential(sphere):
    for mu in (0.3, 1.0, 2.5):
        r = minimize_F(sphere, Potential("zero"), mu)
        assert r.F == pytest.approx(mu**2, abs=1e-12)
        assert r.f_min == pytest.approx(np.pi / 2, abs=1e-6)
        assert r.unique_min and r.in_U and r.hessian_certificate
        assert r.n_local_minima == 1


def test_constant_shift(sphere):
    a = minimize_F(sphere, np.cos, 1.2)
    b = minimize_F(sphere, lambda z: np.cos(z) + 3.5, 1.2)
    assert b.F - a.F == pytest.approx(3.5, abs=1e-12)
    assert b.f_min == pytest.approx(a.f_min, abs=1e-9)


def test_homogeneity_without_potential(cp2):
    base = minimize_F(cp2, Potential("zero"), 0.4).F
    for t in (0.5, 2.0, 3.0):
        assert minimize_F(cp2, Potential("zero"), 0.4 * t).F == pytest.approx(t**2 * base, rel=1e-9)


def test_bounded_perturbation(sphere):
    # |F_V - F_0| <= sup |V|
    V = Potential("cosine", {"b": 0.3})
    for mu in (0.5, 1.0, 2.0):
        assert abs(minimize_F(sphere, V, mu).F - mu**2) <= 0.3 + 1e-12


def test_minimum_property(sphere, rng):
    r = minimize_F(sphere, np.cos, 1.0)
    field = effective_potential_reduced(sphere, np.cos, 1.0)
    for z in rng.uniform(0.01, np.pi - 0.01, 100):
        assert field(z) >= r.F - 1e-12
    assert field(r.f_min) == pytest.approx(r.F, abs=1e-12)


def test_stationarity_and_derivative_identity(sphere):
    mus = np.linspace(0.5, 2.5, 201)
    curve = spectral_curve(sphere, AFFINE, mus)
    f = curve.f_min
    # d/dz [mu^2 / sin^2 z + V] = 0 at z = f(mu)
    stat = -2 * mus**2 * np.cos(f) / np.sin(f) ** 3 + 0.5
    assert np.abs(stat).max() < 1e-5
    # envelope identity F'(mu) = 2 mu w(f(mu)) with w = 1 / sin^2
    dF = curve_derivative(curve)
    assert np.abs(dF - 2 * mus / np.sin(f) ** 2).max() < 1e-5
    assert curve.diagnostics["f_min_monotone"] == "increasing"  # f rises towards pi/2
    assert curve.diagnostics["jumps"] == []


def test_cp2_minimizer_escapes_to_the_boundary(cp2):
    r = minimize_F(cp2, Potential("zero"), 1.0)
    assert not r.in_U
    assert r.F == pytest.approx(CP2_C_TILDE, rel=1e-8)
    curve = spectral_curve(cp2, Potential("zero"), [0.5, 1.0])
    assert not curve.valid.any()
    assert curve.diagnostics["n_boundary"] == 2


def test_cp2_arctan_is_interior(cp2):
    r = minimize_F(cp2, Potential("arctan"), 0.2)
    assert r.in_U and r.unique_min and r.hessian_certificate


def test_invalid_arguments(sphere):
    with pytest.raises(ValueError):
        minimize_F(sphere, np.cos, -1.0)
    with pytest.raises(ValueError):
        minimize_F(sphere, np.cos, 1.0, ForwardConfig(multistart=0))


def test_curve_json_roundtrip(tmp_path, sphere):
    curve = spectral_curve(sphere, AFFINE, np.linspace(0.5, 1.5, 6))
    path = tmp_path / "curve.json"
    curve.to_json(path)
    back = SpectralCurve.from_json(path)
    assert np.array_equal(back.F, curve.F) and np.array_equal(back.f_min, curve.f_min)
    assert np.array_equal(back.valid, curve.valid)
    assert back.potential == AFFINE.to_dict()
    curve.to_csv(tmp_path / "curve.csv")
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "# schema_version=1.0"
    assert lines[1] == ",".join(SpectralCurve.CSV_COLUMNS)
    assert len(lines) == 8


def test_curve_is_deterministic(sphere):
    a = spectral_curve(sphere, np.cos, [0.7, 1.1], ForwardConfig(seed=5))
    b = spectral_curve(sphere, np.cos, [0.7, 1.1], ForwardConfig(seed=5))
    assert np.array_equal(a.F, b.F) and np.array_equal(a.f_min, b.f_min)


def test_condition_I_on_cp2(cp2):
    cfg = MorseConfig(seeds=16)
    rep = condition_I_report(cp2, [1.0], [0.5, 2.0], extra_forms=[("identity", np.eye(3))], cfg=cfg)
    # the Fubini-Study fiber form has a repeated eigenvalue: never Morse
    assert rep["fraction_morse"] == 0.0
    assert rep["controls"][0]["flagged"]
    # a Killing shift adds a constant on each orbit, so the verdict cannot change
    shifted = condition_I_report(cp2, [1.0], [0.5, 2.0], shift=0.7, cfg=cfg)
    assert shifted["fraction_morse"] == 0.0
    for f0, f1 in zip(rep["fibers"], shifted["fibers"]):
        assert f1["n_critical"] == f0["n_critical"]


def test_condition_I_rejects_abelian(sphere):
    with pytest.raises(ValueError):
        condition_I_report(sphere, [1.0], [1.0])


@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
@settings(max_examples=15, deadline=None)
def test_sphere_affine_lower_bound(mu, b):
    # V >= min V on (0, pi) and W >= mu^2, so F >= mu^2 + min V
    model = get_model("sphere_s1")
    V = Potential("affine", {"a": 0.0, "b": b})
    r = minimize_F(model, V, mu, ForwardConfig(multistart=8))
    assert r.F >= mu**2 + min(0.0, b * np.pi) - 1e-10
    assert r.F <= mu**2 + V(np.pi / 2) + 1e-10
