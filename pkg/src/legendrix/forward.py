"""Forward map: the spectral invariant ``F(mu)`` and the minimizer ``f(mu)``.

``F(mu)`` is the minimum of ``W(y, mu) + V_red(z)`` over the reduced space.
Minimising first over the fiber above ``z`` leaves the one-dimensional
profile ``h(z) = W~(z, mu) + V_red(z)``, which is searched on the
compactified coordinate ``u in (0, 1)`` by stratified multistart, bounded
Brent refinement and a finite-difference Newton polish.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import io
from .morse import MorseConfig, QuadraticForm, morse_report
from .reduction import ChartError, EffectivePotentialField, ModelManifold, StratumError, fiber_form, fiber_minimum


# F(mu) = C~ mu^2 on CP^2 with V = 0: the fiber-minimal kinetic term is
# 4 mu^2 (1 + z) / z, whose infimum over z > 0 is its z -> inf limit.
CP2_C_TILDE = 4.0


class ForwardError(RuntimeError):
    """No converged minimum of the effective potential."""


@dataclass(frozen=True)
class ForwardConfig:
    multistart: int = 32
    seed: int = 0
    margin: float = 1e-4  # u-distance to the chart boundary that still counts as interior
    u_eps: float = 1e-10
    xatol: float = 1e-12
    tie_tol: float = 1e-10
    dedup_tol: float = 1e-6
    newton_steps: int = 6


def effective_potential_reduced(model: ModelManifold, V_red: Callable, mu) -> EffectivePotentialField:
    """Evaluator of ``W(y, mu) + V_red(gamma(y))``; see :class:`EffectivePotentialField`."""
    return EffectivePotentialField(model, V_red, np.atleast_1d(np.asarray(mu, dtype=float)))


def _profile(model, V_red, mu):
    mu = np.atleast_1d(np.asarray(mu, dtype=float))

    def h(z):
        return fiber_minimum(model, z, mu) + float(V_red(z))

    return h


def _fd_step(model, z):
    s = 1e-4 * max(1.0, abs(z))
    lo, hi = model.z_bounds
    return min(s, 0.2 * (z - lo), 0.2 * (hi - z))


def _second_derivative(h, model, z):
    s = _fd_step(model, z)
    return (h(z + s) - 2.0 * h(z) + h(z - s)) / s**2


def _newton_polish(h, model, z, fz, steps):
    # F is flat to machine precision near the minimum, so steps are judged by |h'|
    lo, hi = model.z_bounds

    def derivs(z):
        s = _fd_step(model, z)
        hp, h0, hm = h(z + s), h(z), h(z - s)
        hpp, hmm = h(z + 2 * s), h(z - 2 * s)
        d1 = (8 * (hp - hm) - (hpp - hmm)) / (12 * s)
        return d1, (hp - 2 * h0 + hm) / s**2, h0

    d1, d2, _ = derivs(z)
    for _ in range(steps):
        if not d2 > 0:
            break
        zn = z - d1 / d2
        if not lo < zn < hi:
            break
        n1, n2, fn = derivs(zn)
        if not (abs(n1) < abs(d1) and fn <= fz + 1e-13 * max(1.0, abs(fz))):
            break
        z, fz, d1, d2 = zn, min(fn, fz), n1, n2
    return z, fz


@dataclass(frozen=True)
class MinimizeResult:
    mu: float
    F: float
    f_min: float
    hessian_min_eig: float
    n_local_minima: int
    unique_min: bool
    in_U: bool
    minima: tuple = ()
    flags: tuple = ()

    @property
    def hessian_certificate(self) -> bool:
        return bool(self.hessian_min_eig > 0)


def minimize_F(model: ModelManifold, V_red: Callable, mu, cfg: ForwardConfig = ForwardConfig()) -> MinimizeResult:
    """``F(mu)``, the minimizer ``f(mu)`` (as ``z``) and minimum diagnostics.

    ``n_local_minima`` counts distinct refined minima of the ``z``-profile;
    ``unique_min`` is false when another minimum ties within ``tie_tol``.
    A minimizer within ``margin`` (in ``u``) of the chart boundary is
    flagged ``in_U = False``.
    """
    if cfg.multistart < 1:
        raise ValueError("multistart must be >= 1")
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if np.any(mu_arr <= 0):
        raise ValueError("mu must lie strictly inside the Weyl chamber (mu > 0)")
    h = _profile(model, V_red, mu_arr)

    def hu(u):
        # the chart ends are outside X1, where the potential is +inf
        try:
            return h(float(model.z_from_u(u)))
        except StratumError:
            return np.inf

    rng = np.random.default_rng(cfg.seed)
    n = cfg.multistart
    u = (np.arange(n) + rng.uniform(0.05, 0.95, size=n)) / n
    u = np.concatenate([[cfg.u_eps], np.clip(u, cfg.u_eps, 1 - cfg.u_eps), [1 - cfg.u_eps]])
    vals = np.array([hu(x) for x in u])
    good = np.isfinite(vals)
    if not good.any():
        raise ForwardError(f"effective potential is non-finite at every start for mu={mu_arr.tolist()}")

    starts = []
    for i in range(len(u)):
        if not good[i]:
            continue
        left = vals[i - 1] if i > 0 and good[i - 1] else np.inf
        right = vals[i + 1] if i + 1 < len(u) and good[i + 1] else np.inf
        if vals[i] <= left and vals[i] <= right:
            starts.append(i)

    minima = []
    for i in starts:
        a, b = u[max(i - 1, 0)], u[min(i + 1, len(u) - 1)]
        best_u, best_v = u[i], vals[i]
        if b > a:
            res = minimize_scalar(hu, bounds=(a, b), method="bounded", options={"xatol": cfg.xatol})
            if np.isfinite(res.fun) and res.fun < best_v:
                best_u, best_v = float(res.x), float(res.fun)
        z = float(model.z_from_u(best_u))
        z, best_v = _newton_polish(h, model, z, best_v, cfg.newton_steps)
        minima.append((z, best_v, float(model.u_from_z(z))))

    minima.sort(key=lambda m: (m[1], m[0]))
    distinct = []
    for m in minima:
        if all(abs(m[2] - d[2]) > cfg.dedup_tol for d in distinct):
            distinct.append(m)
    z0, F, u0 = distinct[0]
    ties = [d for d in distinct[1:] if abs(d[1] - F) <= cfg.tie_tol * max(1.0, abs(F))]
    in_U = cfg.margin < u0 < 1 - cfg.margin
    flags = [] if in_U else ["boundary_minimum"]
    hess = _second_derivative(h, model, z0) if in_U else float("nan")
    return MinimizeResult(
        mu=float(mu_arr[0]),
        F=float(F),
        f_min=float(z0),
        hessian_min_eig=float(hess),
        n_local_minima=len(distinct),
        unique_min=not ties,
        in_U=bool(in_U),
        minima=tuple((float(z), float(v)) for z, v, _ in distinct),
        flags=tuple(flags),
    )


@dataclass
class SpectralCurve:
    """Sampled ``(mu, F(mu), f(mu))`` with per-point certificates."""

    model: str
    potential: dict
    mu: np.ndarray
    F: np.ndarray
    f_min: np.ndarray
    hessian_min_eig: np.ndarray
    n_local_minima: np.ndarray
    unique_min: np.ndarray
    in_U: np.ndarray
    status: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    CSV_COLUMNS = ("mu", "F", "f_min", "hess", "n_min", "unique", "in_U")

    def __len__(self):
        return len(self.mu)

    @property
    def valid(self) -> np.ndarray:
        """Points inside ``U0``: converged, interior and unique."""
        ok = np.array([s == "ok" for s in self.status])
        return ok & self.in_U & self.unique_min

    def rows(self):
        for i in range(len(self)):
            yield (self.mu[i], self.F[i], self.f_min[i], self.hessian_min_eig[i],
                   int(self.n_local_minima[i]), bool(self.unique_min[i]), bool(self.in_U[i]))

    def to_csv(self, path):
        return io.write_csv(path, self.CSV_COLUMNS, self.rows())

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "potential": self.potential,
            "mu": self.mu,
            "F": self.F,
            "f_min": self.f_min,
            "hessian_min_eig": self.hessian_min_eig,
            "n_local_minima": self.n_local_minima,
            "unique_min": self.unique_min,
            "in_U": self.in_U,
            "status": self.status,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, path):
        return io.write_json(path, self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralCurve":
        def arr(key, dtype=float):
            return np.array([np.nan if x is None else x for x in d[key]], dtype=dtype)

        return cls(
            model=d["model"],
            potential=d["potential"],
            mu=arr("mu"),
            F=arr("F"),
            f_min=arr("f_min"),
            hessian_min_eig=arr("hessian_min_eig"),
            n_local_minima=np.array(d["n_local_minima"], dtype=int),
            unique_min=np.array(d["unique_min"], dtype=bool),
            in_U=np.array(d["in_U"], dtype=bool),
            status=list(d["status"]),
            diagnostics=d.get("diagnostics", {}),
        )

    @classmethod
    def from_json(cls, path) -> "SpectralCurve":
        return cls.from_dict(io.read_json(path))


def _curve_diagnostics(model, curve, jump_tol):
    mask = curve.valid
    idx = np.flatnonzero(mask)
    jumps = []
    u = model.u_from_z(curve.f_min)
    for a, b in zip(idx[:-1], idx[1:]):
        if b == a + 1 and abs(u[b] - u[a]) > jump_tol:
            jumps.append(int(a))
    fz = curve.f_min[idx]
    d = np.diff(fz)
    if len(d) == 0:
        monotone = "undetermined"
    elif np.all(d > 0):
        monotone = "increasing"
    elif np.all(d < 0):
        monotone = "decreasing"
    else:
        monotone = "non-monotone"
    return {
        "n_valid": int(mask.sum()),
        "n_failed": int(sum(s != "ok" for s in curve.status)),
        "n_boundary": int(np.sum(~curve.in_U)),
        "jumps": jumps,
        "f_min_monotone": monotone,
    }


def spectral_curve(
    model: ModelManifold,
    V_red: Callable,
    mu_grid,
    cfg: ForwardConfig = ForwardConfig(),
    jump_tol: float = 0.05,
) -> SpectralCurve:
    """Run :func:`minimize_F` over ``mu_grid``; failures are recorded per point.

    Point ``i`` uses seed ``cfg.seed + i``. ``jump_tol`` is the largest
    accepted step of ``f(mu)`` between neighbouring valid points, measured in
    the compactified coordinate ``u``.
    """
    mu_grid = np.asarray(mu_grid, dtype=float).ravel()
    n = len(mu_grid)
    out = {k: np.full(n, np.nan) for k in ("F", "f_min", "hess")}
    nmin = np.zeros(n, dtype=int)
    uniq = np.zeros(n, dtype=bool)
    inU = np.zeros(n, dtype=bool)
    status = []
    for i, mu in enumerate(mu_grid):
        try:
            r = minimize_F(model, V_red, mu, replace(cfg, seed=cfg.seed + i))
        except (ForwardError, ChartError, StratumError, ValueError) as exc:
            status.append(f"error: {exc}")
            continue
        out["F"][i], out["f_min"][i], out["hess"][i] = r.F, r.f_min, r.hessian_min_eig
        nmin[i], uniq[i], inU[i] = r.n_local_minima, r.unique_min, r.in_U
        status.append("ok")
    pot = V_red.to_dict() if hasattr(V_red, "to_dict") else {"kind": "callable"}
    curve = SpectralCurve(model.name, pot, mu_grid, out["F"], out["f_min"], out["hess"], nmin, uniq, inU, status)
    curve.diagnostics = _curve_diagnostics(model, curve, jump_tol)
    curve.diagnostics["config"] = asdict(cfg)
    return curve


def condition_I_report(
    model: ModelManifold,
    mu,
    z_samples,
    shift: float = 0.0,
    extra_forms=(),
    cfg: MorseConfig | None = None,
) -> dict:
    """Orbit-Morse verdict for ``B_z`` (optionally ``B_z + shift * C``) at each ``z``.

    ``extra_forms`` are ``(label, QuadraticForm)`` pairs checked alongside,
    e.g. a deliberately degenerate control.
    """
    if model.abelian:
        raise ValueError("the fiber Morse check needs a non-abelian model; abelian fibers are points")
    alg = model.algebra
    cfg = cfg or MorseConfig()
    C = alg.killing_positive
    fibers = []
    for z in z_samples:
        B = fiber_form(model, float(z))
        if shift:
            B = B.shifted(shift, C)
        rep = morse_report(alg, B, mu, cfg)
        fibers.append({
            "z": float(z),
            "is_morse": rep["is_morse"],
            "distinct_values": rep["distinct_values"],
            "n_critical": len(rep["records"]),
            "values": sorted(r["value"] for r in rep["records"] if r["converged"]),
            "form_hash": rep["form_hash"],
        })
    controls = []
    for label, B in extra_forms:
        B = B if isinstance(B, QuadraticForm) else QuadraticForm(B)
        rep = morse_report(alg, B, mu, cfg)
        controls.append({"label": label, "is_morse": rep["is_morse"], "flagged": not rep["is_morse"]})
    n = len(fibers)
    return {
        "model": model.name,
        "mu": np.atleast_1d(mu).tolist(),
        "shift": shift,
        "fibers": fibers,
        "fraction_morse": (sum(f["is_morse"] for f in fibers) / n) if n else float("nan"),
        "controls": controls,
    }
