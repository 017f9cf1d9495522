"""Generalized Legendre inversion: recover ``V_red`` from ``F``.

With a one-dimensional ``t*`` and quotient ``Z`` the kinetic term factors as
``W~(z, mu) = mu^2 w(z)``. At the minimizer ``z = f(mu)``

    F'(mu) = 2 mu w(f(mu)),          (derivative in mu)
    mu^2 w'(f(mu)) + V_red'(f(mu)) = 0.  (stationarity in z)

The first relation gives ``w(f(mu))`` from data and hence ``f(mu)`` on a
monotone branch of ``w``; then ``V_red(f) = F - mu^2 w(f)`` (value route) and
``V_red' = -mu^2 w'(f)`` (derivative route, which fixes ``V_red`` only up to
an additive constant).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from . import io
from .forward import SpectralCurve
from .reduction import ModelManifold, StratumError, kinetic_profile


class InversionError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class BranchError(InversionError):
    """``mu -> f(mu)`` is not injective on the usable window."""


class IllConditionedError(InversionError):
    """``|w'|`` is too small on the window to invert ``w`` stably."""


class RouteDisagreementError(InversionError):
    """Value and derivative routes differ by more than ``route_tol``."""


def fornberg_weights(x0: float, x, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0`` on nodes ``x``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative_on_grid(x, y) -> np.ndarray:
    """4th-order first derivative: centred 5-point stencils, one-sided at the ends."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 5:
        raise ValueError(f"need at least 5 grid points for a 4th-order derivative, got {n}")
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - 2, 0), n - 5)
        nodes = slice(lo, lo + 5)
        out[i] = fornberg_weights(x[i], x[nodes], 1) @ y[nodes]
    return out


def curve_derivative(curve) -> np.ndarray:
    """``F'(mu)`` on the curve's grid (a :class:`SpectralCurve` or ``(mu, F)``)."""
    if isinstance(curve, SpectralCurve):
        return derivative_on_grid(curve.mu, curve.F)
    mu, F = curve
    return derivative_on_grid(mu, F)


@dataclass(frozen=True)
class InverseOptions:
    route_tol: float = 1e-4
    trim: int = 2
    branch: str = "decreasing"  # w decreasing at the minimizer <=> V_red increasing
    w_tol: float = 1e-10
    n_table: int = 4000


@dataclass
class ReconstructionResult:
    z_grid: np.ndarray
    V_hat: np.ndarray
    window: tuple
    branch_report: dict
    residuals: dict
    comparison: dict = field(default_factory=dict)
    mu: np.ndarray = field(default=None, repr=False)
    V_hat_derivative: np.ndarray = field(default=None, repr=False)
    valid: bool = True

    def to_csv(self, path):
        return io.write_csv(path, ("z", "V_hat"), zip(self.z_grid, self.V_hat))

    def to_dict(self) -> dict:
        return {
            "z_grid": self.z_grid,
            "V_hat": self.V_hat,
            "V_hat_derivative_route": self.V_hat_derivative,
            "mu": self.mu,
            "window": list(self.window),
            "branch_report": self.branch_report,
            "residuals": self.residuals,
            "comparison": self.comparison,
            "valid": self.valid,
        }

    def to_json(self, path):
        return io.write_json(path, self.to_dict())


def _largest_run(mask):
    best, start = (0, 0), None
    for i, m in enumerate(list(mask) + [False]):
        if m and start is None:
            start = i
        elif not m and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return best


def _w_derivative(model, z):
    lo, hi = model.z_bounds
    s = min(1e-4 * max(1.0, abs(z)), 0.2 * (z - lo), 0.2 * (hi - z))
    w = lambda t: kinetic_profile(model, t)  # noqa: E731
    return (8 * (w(z + s) - w(z - s)) - (w(z + 2 * s) - w(z - 2 * s))) / (12 * s)


def _branch_table(model, n, branch):
    """Monotone windows of ``w`` on a compactified table; returns the widest matching one."""
    u = np.linspace(0, 1, n + 2)[1:-1]
    z = model.z_from_u(u)
    w = np.full(n, np.nan)
    for i, zi in enumerate(z):
        try:
            w[i] = kinetic_profile(model, float(zi))
        except StratumError:
            pass
    ok = np.isfinite(w)
    z, w = z[ok], w[ok]
    sign = -1.0 if branch == "decreasing" else 1.0
    lo, hi = _largest_run(np.diff(w) * sign > 0)
    return z[lo : hi + 1], w[lo : hi + 1]


def invert_1d(
    curve: SpectralCurve,
    model: ModelManifold,
    opts: InverseOptions = InverseOptions(),
    truth: Callable | None = None,
) -> ReconstructionResult:
    """Recover ``V_red`` on the visited window from ``(mu, F)`` alone.

    Only ``curve.mu``, ``curve.F`` and the per-point validity flags are read;
    the curve's own minimizers are not used.
    """
    if model.algebra.rank != 1:
        raise ValueError("only dim t* = dim Z = 1 is supported (dimension condition)")
    if opts.branch not in ("decreasing", "increasing"):
        raise ValueError("branch must be 'decreasing' or 'increasing'")
    lo, hi = _largest_run(curve.valid)
    if hi - lo < 5 + 2 * opts.trim:
        raise InversionError(f"only {hi - lo} consecutive valid curve points; need > {4 + 2 * opts.trim}")
    mu = np.asarray(curve.mu[lo:hi], dtype=float)
    F = np.asarray(curve.F[lo:hi], dtype=float)
    Fp = derivative_on_grid(mu, F)
    w_data = Fp / (2 * mu)

    if np.ptp(w_data) <= 1e-8 * max(1.0, float(np.abs(w_data).max())):
        return _collapsed(model, mu, F, w_data, opts, truth)

    zt, wt = _branch_table(model, opts.n_table, opts.branch)
    w_min, w_max = float(wt.min()), float(wt.max())
    d = np.diff(w_data)
    injective = bool(np.all(d > 0) or np.all(d < 0))
    inside = (w_data > w_min) & (w_data < w_max)
    branch_report = {
        "branch": opts.branch,
        "branch_window": [float(zt[0]), float(zt[-1])],
        "w_range": [w_min, w_max],
        "injective": injective and bool(inside.all()),
        "mu_range": [float(mu[0]), float(mu[-1])],
        "curve_rows": [int(lo), int(hi)],
    }
    if not branch_report["injective"]:
        branch_report["branch_map"] = {"mu": mu, "w": w_data, "inside": inside}
        raise BranchError("mu -> f(mu) is not injective on the selected branch of w", branch_report)

    order = np.argsort(wt)
    guess = PchipInterpolator(wt[order], zt[order])
    f = np.empty_like(w_data)
    for i, wv in enumerate(w_data):
        z0 = float(guess(wv))
        j = int(np.clip(np.searchsorted(zt, z0), 1, len(zt) - 1))
        a, b = zt[max(j - 2, 0)], zt[min(j + 1, len(zt) - 1)]
        g = lambda t: kinetic_profile(model, t) - wv  # noqa: E731
        if g(a) * g(b) > 0:
            a, b = zt[0], zt[-1]
        f[i] = brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    w_f = np.array([kinetic_profile(model, z) for z in f])
    wprime = np.array([_w_derivative(model, z) for z in f])
    if np.min(np.abs(wprime)) < opts.w_tol:
        raise IllConditionedError(f"|w'| = {np.min(np.abs(wprime)):.2e} < {opts.w_tol:.1e} on the window", branch_report)

    V_val = F - mu**2 * w_f
    srt = np.argsort(f)
    dV = -(mu**2) * wprime
    V_der = np.empty_like(f)
    V_der[srt] = cumulative_trapezoid(dV[srt], f[srt], initial=0.0)

    keep = slice(opts.trim, len(f) - opts.trim)
    f, V_val, V_der, mu_k = f[keep], V_val[keep], V_der[keep], mu[keep]
    srt = np.argsort(f)
    f, V_val, V_der, mu_k = f[srt], V_val[srt], V_der[srt], mu_k[srt]
    V_der = V_der - V_der[0]
    route_diff = float(np.max(np.abs((V_val - V_val[0]) - V_der)))

    result = ReconstructionResult(
        z_grid=f,
        V_hat=V_val,
        window=(float(f[0]), float(f[-1])),
        branch_report=branch_report,
        residuals={"route_max_diff": route_diff},
        mu=mu_k,
        V_hat_derivative=V_der,
    )
    result.residuals.update(relation_residuals(curve, model, result))
    if truth is not None:
        err = V_val - np.asarray(truth(f), dtype=float)
        result.comparison = {"sup_error": float(np.max(np.abs(err))), "n": int(len(f))}
    if route_diff > opts.route_tol:
        result.valid = False
        raise RouteDisagreementError(
            f"value and derivative routes differ by {route_diff:.2e} > {opts.route_tol:.1e}",
            {"residuals": result.residuals, "branch_report": branch_report},
        )
    return result


def _collapsed(model, mu, F, w_data, opts, truth):
    """All ``mu`` share one minimizer: ``V_red`` is recovered at that single ``z``."""
    w_bar = float(np.mean(w_data))
    u = np.linspace(0, 1, opts.n_table + 2)[1:-1]
    z = model.z_from_u(u)
    gap = np.full(len(z), np.inf)
    for i, zi in enumerate(z):
        try:
            gap[i] = abs(kinetic_profile(model, float(zi)) - w_bar)
        except StratumError:
            pass
    j = int(np.argmin(gap))
    a, b = z[max(j - 1, 0)], z[min(j + 1, len(z) - 1)]
    res = minimize_scalar(lambda t: abs(kinetic_profile(model, t) - w_bar), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-14})
    f0 = float(res.x)
    V_val = F - mu**2 * w_bar
    zs = np.full(len(mu), f0)
    result = ReconstructionResult(
        z_grid=zs,
        V_hat=V_val,
        window=(f0, f0),
        branch_report={"branch": opts.branch, "injective": False, "collapsed": True, "z": f0,
                       "mu_range": [float(mu[0]), float(mu[-1])]},
        residuals={"route_max_diff": 0.0, "spread": float(np.ptp(V_val))},
        mu=mu,
        V_hat_derivative=np.zeros(len(mu)),
        valid=False,
    )
    if truth is not None:
        result.comparison = {"sup_error": float(np.max(np.abs(V_val - np.asarray(truth(zs), dtype=float)))),
                             "n": int(len(mu))}
    return result


def relation_residuals(curve: SpectralCurve, model: ModelManifold, V_hat) -> dict:
    """Max residuals of the two identities at the pairs ``(f(mu), mu)``.

    ``stationarity``: ``|mu^2 w'(f) + V_hat'(f)|`` with ``V_hat'`` differentiated
    on its own grid. ``mu_derivative``: ``|2 mu w(f) - F'(mu)|``.

    ``V_hat`` is a :class:`ReconstructionResult` (its recovered ``f`` and
    ``mu`` are used) or a ``(z, V)`` pair, in which case ``f`` is read from
    ``curve.f_min``.
    """
    if isinstance(V_hat, ReconstructionResult):
        z, V, mu = V_hat.z_grid, V_hat.V_hat, V_hat.mu
    else:
        z, V = (np.asarray(a, dtype=float) for a in V_hat)
        mask = curve.valid & (curve.f_min >= z.min()) & (curve.f_min <= z.max())
        mu = curve.mu[mask]
        z_at = curve.f_min[mask]
        order = np.argsort(z)
        Vp_grid = derivative_on_grid(z[order], V[order])
        Vp = np.interp(z_at, z[order], Vp_grid)
        Fp = np.interp(mu, curve.mu, curve_derivative(curve))
        w = np.array([kinetic_profile(model, t) for t in z_at])
        wp = np.array([_w_derivative(model, t) for t in z_at])
        return {
            "stationarity": float(np.max(np.abs(mu**2 * wp + Vp))),
            "mu_derivative": float(np.max(np.abs(2 * mu * w - Fp))),
        }
    Vp = derivative_on_grid(z, V)
    Fp = np.interp(mu, curve.mu, curve_derivative(curve))
    w = np.array([kinetic_profile(model, t) for t in z])
    wp = np.array([_w_derivative(model, t) for t in z])
    return {
        "stationarity": float(np.max(np.abs(mu**2 * wp + Vp))),
        "mu_derivative": float(np.max(np.abs(2 * mu * w - Fp))),
    }


@dataclass(frozen=True)
class KillingVerdict:
    z_grid: np.ndarray
    mu_grid: np.ndarray
    det: np.ndarray
    nondegenerate: np.ndarray

    @property
    def all_nondegenerate(self) -> bool:
        return bool(self.nondegenerate.all())

    @property
    def all_degenerate(self) -> bool:
        return not bool(self.nondegenerate.any())


def killing_nondegeneracy(model, rho: Callable, z_grid, mu_grid, h: float = 1e-4, tol: float = 1e-6) -> KillingVerdict:
    """Determinant of ``d^2 rho / dz_i dmu_j`` on the product grid.

    ``z_grid`` and ``mu_grid`` hold points of shape ``(n,)`` (or scalars for
    ``n = 1``); ``rho(z, mu)`` returns a scalar. ``model`` is accepted for
    interface symmetry and may be ``None``.
    """
    zs = [np.atleast_1d(np.asarray(z, dtype=float)) for z in z_grid]
    ms = [np.atleast_1d(np.asarray(m, dtype=float)) for m in mu_grid]
    det = np.empty((len(zs), len(ms)))

    def r(z, m):
        z = z[0] if z.shape == (1,) else z
        m = m[0] if m.shape == (1,) else m
        return float(np.squeeze(rho(z, m)))

    for a, z in enumerate(zs):
        for b, m in enumerate(ms):
            n = len(z)
            M = np.empty((n, n))
            for i in range(n):
                ei = np.eye(n)[i] * h
                for j in range(len(m)):
                    ej = np.eye(len(m))[j] * h
                    M[i, j] = (
                        r(z + ei, m + ej) - r(z + ei, m - ej) - r(z - ei, m + ej) + r(z - ei, m - ej)
                    ) / (4 * h * h)
            det[a, b] = np.linalg.det(M)
    return KillingVerdict(np.array(z_grid, dtype=float), np.array(mu_grid, dtype=float), det, np.abs(det) > tol)
