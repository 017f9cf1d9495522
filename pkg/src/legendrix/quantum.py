"""Weight-space Schrodinger eigenproblems on the rotating sphere.

In the Fourier sector ``e^{i m phi}`` the operator
``-hbar^2 Delta + V(theta)`` becomes

    -hbar^2 [ (1/sin) d/dtheta (sin d/dtheta) - m^2 / sin^2 ] + V.

With ``u = psi sqrt(sin theta)`` this is the Schrodinger form

    -hbar^2 u'' + hbar^2 ((m^2 - 1/4) / sin^2 - 1/4) u + V u

which is discretized by second-order differences with Dirichlet ends for
``m >= 1``. For ``m = 0`` the substitution is singular and a cell-centred
finite-volume scheme (natural Neumann closure at the poles) is used instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar

from . import io


def _zero(theta):
    return np.zeros_like(np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class WeightSpaceProblem:
    mu: float
    k: int
    grid_n: int = 400
    V: Callable = _zero

    def __post_init__(self):
        if self.k < 1 or int(self.k) != self.k:
            raise ValueError("k must be a positive integer (hbar = 1/k)")
        if self.grid_n < 200:
            raise ValueError("grid_n must be >= 200")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")

    @property
    def hbar(self) -> float:
        return 1.0 / self.k

    @property
    def m(self) -> int:
        return int(round(self.mu * self.k))


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    grid_n: int
    note: str


def weight_operator(prob: WeightSpaceProblem, grid_n: int | None = None):
    """Symmetric tridiagonal ``(diag, offdiag, theta)`` for the weight-``m`` operator."""
    n = grid_n or prob.grid_n
    h2 = prob.hbar**2
    if prob.m == 0:
        d = np.pi / n
        theta = (np.arange(n) + 0.5) * d
        s = np.sin(theta)
        faces = np.sin(np.arange(n + 1) * d)  # zero flux through the poles
        diag = h2 * (faces[:-1] + faces[1:]) / (d**2 * s) + prob.V(theta)
        off = -h2 * faces[1:-1] / (d**2 * np.sqrt(s[:-1] * s[1:]))
        return diag, off, theta
    d = np.pi / (n + 1)
    theta = np.arange(1, n + 1) * d
    s2 = np.sin(theta) ** 2
    diag = h2 * (2.0 / d**2 + (prob.m**2 - 0.25) / s2 - 0.25) + prob.V(theta)
    off = np.full(n - 1, -h2 / d**2)
    return diag, off, theta


def _refined_n(prob, n):
    # Dirichlet nodes halve exactly with 2n+1; the cell-centred grid with 2n
    return 2 * n + 1 if prob.m else 2 * n


def lowest_eigenvalues(prob: WeightSpaceProblem, count: int = 1, richardson: bool = True) -> EigenResult:
    """The ``count`` lowest eigenvalues, Richardson-extrapolated from ``n`` and the halved spacing."""
    def solve(n):
        diag, off, _ = weight_operator(prob, n)
        return eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, count - 1))

    coarse = solve(prob.grid_n)
    if not richardson:
        return EigenResult(coarse, prob.grid_n, "second order")
    n2 = _refined_n(prob, prob.grid_n)
    fine = solve(n2)
    return EigenResult(fine + (fine - coarse) / 3.0, n2, "Richardson from second order, spacing ratio 2")


def lowest_eigenvalue(prob: WeightSpaceProblem, richardson: bool = True) -> float:
    return float(lowest_eigenvalues(prob, 1, richardson).eigenvalues[0])


def exact_eigenvalues(mu: float, k: int, count: int = 5) -> np.ndarray:
    """``hbar^2 l (l + 1)`` for ``l >= |m|``, the ``V = 0`` spectrum."""
    m = int(round(mu * k))
    ell = np.arange(m, m + count)
    return ell * (ell + 1) / k**2


def effective_potential(V: Callable, mu: float):
    def U(theta):
        return mu**2 / np.sin(theta) ** 2 + V(theta)

    return U


def classical_minimum(V: Callable, mu: float, n_grid: int = 4001):
    """``(F(mu), theta_min)`` for the sphere by grid bracketing plus bounded Brent."""
    U = effective_potential(V, mu)
    th = np.linspace(0, np.pi, n_grid)[1:-1]
    with np.errstate(divide="ignore"):
        vals = U(th)
    j = int(np.argmin(vals))
    res = minimize_scalar(U, bounds=(th[max(j - 1, 0)], th[min(j + 1, len(th) - 1)]), method="bounded",
                          options={"xatol": 1e-13})
    return float(res.fun), float(res.x)


@dataclass(frozen=True)
class ScanResult:
    k: np.ndarray
    hbar: np.ndarray
    lambda_min: np.ndarray
    F: float
    gap: np.ndarray
    slope: float
    intercept: float

    CSV_COLUMNS = ("k", "hbar", "lambda_min", "F", "gap")

    def rows(self):
        for i in range(len(self.k)):
            yield int(self.k[i]), self.hbar[i], self.lambda_min[i], self.F, self.gap[i]

    def to_csv(self, path):
        return io.write_csv(path, self.CSV_COLUMNS, self.rows())


def grid_for(k: int, E: float = 4.0, base: int = 400) -> int:
    """Grid size resolving oscillations up to energy ``E`` at ``hbar = 1/k``."""
    return max(base, int(60 * k * np.sqrt(max(E, 1.0))))


def ground_energy_scan(V: Callable, mu: float, k_list, F: float | None = None, grid_n: int | None = None) -> ScanResult:
    """``lambda_min(k)`` and a log-log fit of ``lambda_min - F`` against ``hbar``."""
    k_arr = np.asarray(list(k_list), dtype=int)
    if np.any(np.diff(k_arr) <= 0):
        raise ValueError("k_list must be increasing")
    if F is None:
        F = classical_minimum(V, mu)[0]
    lam = np.array([
        lowest_eigenvalue(WeightSpaceProblem(mu, int(k), grid_n or max(800, 20 * int(k)), V)) for k in k_arr
    ])
    hbar = 1.0 / k_arr
    gap = lam - F
    if np.all(gap > 0) and len(k_arr) >= 2:
        slope, intercept = np.polyfit(np.log(hbar), np.log(gap), 1)
    else:
        slope, intercept = np.nan, np.nan
    return ScanResult(k_arr, hbar, lam, float(F), gap, float(slope), float(intercept))


def reduced_phase_volume(V: Callable, mu: float, E: float | None = None, f: Callable | None = None,
                         quadrature_n: int = 200) -> float:
    """Volume of ``{p^2 + mu^2/sin^2 + V <= E}`` in ``(theta, p)``, or ``int f(p_mu)``.

    The indicator case integrates ``2 sqrt(E - U)`` between the turning points
    with Gauss-Legendre nodes after ``theta = c - r cos t``, which removes the
    square-root endpoint behaviour. A general ``f`` is integrated by nested
    adaptive quadrature. The measure is ``d theta dp`` (no extra constant).
    """
    U = effective_potential(V, mu)
    if f is None:
        if E is None:
            raise ValueError("give an energy E for the indicator volume")
        if mu == 0:
            # U = V is regular at the poles; integrate over all of (0, pi)
            a, b = 0.0, np.pi
            below = lambda t: np.maximum(E - V(t), 0.0)  # noqa: E731
            x, wq = np.polynomial.legendre.leggauss(quadrature_n)
            t = 0.5 * (b - a) * (x + 1) + a
            return float(0.5 * (b - a) * np.sum(wq * 2 * np.sqrt(below(t))))
        Fmin, th0 = classical_minimum(V, mu)
        if E <= Fmin:
            return 0.0
        g = lambda t: U(t) - E  # noqa: E731
        tiny = 1e-12
        a = brentq(g, tiny, th0, xtol=1e-15) if g(tiny) > 0 else tiny
        b = brentq(g, th0, np.pi - tiny, xtol=1e-15) if g(np.pi - tiny) > 0 else np.pi - tiny
        c, r = 0.5 * (a + b), 0.5 * (b - a)
        x, wq = np.polynomial.legendre.leggauss(quadrature_n)
        t = 0.5 * np.pi * (x + 1)
        theta = c - r * np.cos(t)
        integrand = 2 * np.sqrt(np.maximum(E - U(theta), 0.0)) * r * np.sin(t)
        return float(0.5 * np.pi * np.sum(wq * integrand))

    def inner(theta):
        u = float(U(theta))
        val, _ = quad(lambda p: f(p * p + u), 0, np.inf, limit=200)
        return 2 * val

    val, _ = quad(inner, 0, np.pi, limit=200)
    if not np.isfinite(val):
        raise ValueError("test function is not integrable against the reduced phase-space measure")
    return float(val)


@dataclass(frozen=True)
class WeylResult:
    hbar: float
    E: float
    quantum: int
    classical: float
    rel_error: float

    CSV_COLUMNS = ("E", "qcount", "classical", "relerr")


def _count_below(prob, E):
    diag, off, _ = weight_operator(prob)
    ev = eigh_tridiagonal(diag, off, eigvals_only=True, select="v", select_range=(-np.inf, E))
    return ev


def weyl_count(V: Callable, mu: float, k: int, E: float, grid_n: int | None = None) -> WeylResult:
    """Eigenvalue count ``<= E`` in weight ``m = round(k mu)`` vs ``(2 pi hbar)^-1 vol``."""
    prob = WeightSpaceProblem(mu, k, grid_n or grid_for(k, E), V)
    q = int(len(_count_below(prob, E)))
    classical = reduced_phase_volume(V, mu, E) / (2 * np.pi * prob.hbar)
    if classical == 0:
        rel = 0.0 if q == 0 else np.inf
    else:
        rel = abs(q - classical) / classical
    return WeylResult(prob.hbar, float(E), q, float(classical), float(rel))


@dataclass(frozen=True)
class TraceResult:
    hbar: float
    quantum: float
    classical: float
    rel_error: float


def smoothed_trace(V: Callable, mu: float, k: int, f: Callable = lambda x: np.exp(-x), cutoff: float = 40.0,
                   grid_n: int | None = None) -> TraceResult:
    """``sum_j f(lambda_j)`` vs ``(2 pi hbar)^-1 int f(p_mu)`` for a rapidly decaying ``f``.

    Eigenvalues above ``cutoff`` are dropped; ``f`` should be negligible there.
    """
    prob = WeightSpaceProblem(mu, k, grid_n or grid_for(k, cutoff), V)
    ev = _count_below(prob, cutoff)
    qsum = float(np.sum(f(ev)))
    csum = reduced_phase_volume(V, mu, f=f) / (2 * np.pi * prob.hbar)
    return TraceResult(prob.hbar, qsum, csum, abs(qsum - csum) / abs(csum))
