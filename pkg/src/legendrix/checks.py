"""Fast end-to-end checks aggregated by ``legendrix report``.

Each check returns ``(summary, artifacts)`` where ``summary`` holds
``passed`` plus the measured quantities and ``artifacts`` maps file names to
JSON-ready payloads or ``(header, rows)`` CSV tables.
"""

from __future__ import annotations

import numpy as np

from . import lie
from .forward import CP2_C_TILDE, ForwardConfig, minimize_F, spectral_curve
from .inverse import InverseOptions, invert_1d, killing_nondegeneracy
from .morse import MorseConfig, QuadraticForm, critical_points, genericity_sample, is_morse
from .potentials import Potential
from .quantum import ground_energy_scan, weyl_count
from .reduction import CP2SU2, RotatingSphere, alpha_mu, effective_W


def check_morse(seed: int = 0):
    alg = lie.build_algebra("su2")
    cfg = MorseConfig(seed=seed)
    crit = critical_points(alg, QuadraticForm(np.diag([1.0, 2.0, 3.0])), [1.0], cfg)
    values = [r.value for r in crit]
    indices = sorted(r.morse_index for r in crit if r.morse_index is not None)
    ident = is_morse(alg, QuadraticForm(np.eye(3)), [1.0], cfg)
    ok_vals = len(values) == 6 and np.allclose(sorted(values), [1, 1, 2, 2, 3, 3], atol=1e-8, rtol=0)
    summary = {
        "n_critical": len(values),
        "values": sorted(values),
        "indices": indices,
        "identity_flagged": not ident.is_morse,
        "passed": bool(ok_vals and indices == [0, 0, 1, 1, 2, 2] and not ident.is_morse),
    }
    return summary, {"morse_su2_diag123.json": {"records": [r.to_dict() for r in crit]}}


def check_genericity(seed: int = 0):
    su2 = genericity_sample(lie.build_algebra("su2"), 100, [[1.0], [2.0], [0.5]], seed=seed,
                            controls=[np.eye(3), np.diag([1.0, 1.0, 2.0])])
    su3 = genericity_sample(lie.build_algebra("su3"), 25, [[1.0, 1.0], [0.5, 2.0]], seed=seed,
                            controls=[np.eye(8)])
    controls = su2["controls"] + su3["controls"]
    summary = {
        "su2_fraction_morse": su2["fraction_morse"],
        "su3_fraction_morse": su3["fraction_morse"],
        "controls_flagged": all(c["flagged"] for c in controls),
        "passed": bool(su2["fraction_morse"] == 1.0 and su3["fraction_morse"] == 1.0
                       and all(c["flagged"] for c in controls)),
    }
    return summary, {"genericity_su2.json": su2, "genericity_su3.json": su3}


def random_model_point(model, rng):
    if isinstance(model, RotatingSphere):
        return np.array([rng.uniform(0.1, np.pi - 0.1), rng.uniform(0, 2 * np.pi)])
    return rng.normal(size=model.dim_X)


def check_moment(seed: int = 0, n: int = 1000):
    rng = np.random.default_rng(seed)
    worst_moment = worst_equiv = 0.0
    for i in range(n):
        model = RotatingSphere() if i % 2 == 0 else CP2SU2()
        alg = model.algebra
        p = random_model_point(model, rng)
        mu = rng.normal(size=alg.dim)
        a = alpha_mu(model, p, mu)
        worst_moment = max(worst_moment, float(np.abs(model.action_fields(p) @ a.covector - mu).max()))
        v = rng.normal(size=alg.dim)
        gp = model.act(v, p)
        moved = lie.coadjoint_matrix(alg, v).T @ mu
        worst_equiv = max(worst_equiv, abs(effective_W(model, gp, mu) - effective_W(model, p, moved)))
    summary = {
        "n": n,
        "max_moment_residual": worst_moment,
        "max_equivariance_residual": worst_equiv,
        "passed": bool(worst_moment <= 1e-10 and worst_equiv <= 1e-8),
    }
    return summary, {}


def sphere_grid_oracle(V, mu, n: int = 10**6):
    theta = np.linspace(0, np.pi, n + 2)[1:-1]
    vals = mu**2 / np.sin(theta) ** 2 + V(theta)
    j = int(np.argmin(vals))
    return float(vals[j]), float(theta[j]), float(theta[1] - theta[0])


def check_forward_sphere(seed: int = 0):
    model = RotatingSphere()
    mus = np.linspace(0.2, 3.0, 15)
    curve = spectral_curve(model, Potential("zero"), mus, ForwardConfig(seed=seed))
    err0 = float(np.max(np.abs(curve.F - mus**2)))
    cosine = Potential("cosine")
    r = minimize_F(model, cosine, 1.0, ForwardConfig(seed=seed))
    Fg, thg, step = sphere_grid_oracle(cosine, 1.0)
    summary = {
        "zero_potential_max_error": err0,
        "cosine_F": r.F,
        "cosine_F_grid": Fg,
        "cosine_F_diff": abs(r.F - Fg),
        "cosine_f_min_diff": abs(r.f_min - thg),
        "grid_step": step,
        "passed": bool(err0 <= 1e-10 and abs(r.F - Fg) <= 1e-8 and abs(r.f_min - thg) <= step),
    }
    return summary, {}


def check_forward_cp2(seed: int = 0):
    model = CP2SU2()
    mus = np.linspace(0.1, 2.0, 50)
    curve = spectral_curve(model, Potential("zero"), mus, ForwardConfig(seed=seed))
    ratio = curve.F / mus**2
    spread = float(np.ptp(ratio) / np.mean(ratio))
    c_tilde = float(np.mean(ratio))
    summary = {
        "C_tilde": c_tilde,
        "C_tilde_golden": CP2_C_TILDE,
        "relative_spread": spread,
        "passed": bool(spread <= 1e-6 and abs(c_tilde - CP2_C_TILDE) <= 1e-6 * CP2_C_TILDE),
    }
    header = ("mu", "F", "F_over_mu2")
    return summary, {"forward_cp2_zero.csv": (header, list(zip(mus, curve.F, ratio)))}


ROUNDTRIPS = {
    "sphere_s1": (RotatingSphere, Potential("affine", {"a": 1.0, "b": 0.5}), (0.2, 3.0), 1e-3),
    "cp2_su2": (CP2SU2, Potential("arctan"), (0.05, 0.45), 5e-3),
}


def roundtrip(model_name: str, n_mu: int = 200, seed: int = 0, potential=None, mu_range=None,
              fcfg: ForwardConfig | None = None, opts: InverseOptions = InverseOptions()):
    cls, V, (lo, hi), tol = ROUNDTRIPS[model_name]
    V = potential or V
    lo, hi = mu_range or (lo, hi)
    model = cls()
    curve = spectral_curve(model, V, np.linspace(lo, hi, n_mu), fcfg or ForwardConfig(seed=seed))
    result = invert_1d(curve, model, opts, truth=V)
    return curve, result, tol


def check_roundtrip(seed: int = 0):
    summary = {"passed": True}
    artifacts = {}
    for name in ("sphere_s1", "cp2_su2"):
        curve, res, tol = roundtrip(name, seed=seed)
        sup = res.comparison["sup_error"]
        resid = max(res.residuals["stationarity"], res.residuals["mu_derivative"])
        ok = sup <= tol and resid <= 1e-4
        summary[name] = {"sup_error": sup, "tol": tol, "max_relation_residual": resid,
                         "route_max_diff": res.residuals["route_max_diff"], "window": list(res.window)}
        summary["passed"] = bool(summary["passed"] and ok)
        artifacts[f"roundtrip_{name}.json"] = res.to_dict()
    return summary, artifacts


def check_quantum():
    ks = [20, 40, 80, 160]
    zero = ground_energy_scan(lambda t: np.zeros_like(t), 1.0, ks)
    exact = 1.0 + 1.0 / np.array(ks)
    err = float(np.max(np.abs(zero.lambda_min - exact)))
    cosine = Potential("cosine")
    F = sphere_grid_oracle(cosine, 1.0)[0]
    cos_scan = ground_energy_scan(cosine, 1.0, ks, F=F)
    summary = {
        "zero_max_error": err,
        "cosine_slope": cos_scan.slope,
        "passed": bool(err <= 1e-6 and 0.9 <= cos_scan.slope <= 1.1),
    }
    header = ("k", "hbar", "lambda_min", "F", "gap")
    return summary, {"quantum_scan_cosine.csv": (header, list(cos_scan.rows()))}


def check_weyl():
    ladder = [50, 100, 200]
    zero = lambda t: np.zeros_like(t)  # noqa: E731
    rows = [weyl_count(zero, 1.0, k, 4.0) for k in ladder]
    rel = [r.rel_error for r in rows]
    monotone = all(b <= a + 1e-9 for a, b in zip(rel, rel[1:]))
    summary = {
        "hbar": [r.hbar for r in rows],
        "quantum": [r.quantum for r in rows],
        "classical": [r.classical for r in rows],
        "rel_error": rel,
        "passed": bool(rel[-1] <= 0.05 and monotone),
    }
    header = ("E", "qcount", "classical", "relerr")
    return summary, {"weyl_zero.csv": (header, [(r.E, r.quantum, r.classical, r.rel_error) for r in rows])}


def check_killing():
    grid = np.linspace(0.1, 2.0, 20)
    good = killing_nondegeneracy(None, lambda z, m: z * m, grid, grid)
    bad = killing_nondegeneracy(None, lambda z, m: z + m, grid, grid)
    summary = {
        "z_mu_nondegenerate": good.all_nondegenerate,
        "z_plus_mu_degenerate": bad.all_degenerate,
        "passed": bool(good.all_nondegenerate and bad.all_degenerate),
    }
    return summary, {}


CHECKS = {
    1: ("orbit Morse certification", check_morse),
    2: ("genericity experiment", check_genericity),
    3: ("moment map and equivariance", check_moment),
    4: ("forward map, sphere oracle", check_forward_sphere),
    5: ("forward map, CP2 scaling", check_forward_cp2),
    6: ("Legendre inversion roundtrip", check_roundtrip),
    7: ("quantum ground energy", lambda seed=0: check_quantum()),
    8: ("Weyl leading term", lambda seed=0: check_weyl()),
    9: ("Killing-family check", lambda seed=0: check_killing()),
}
