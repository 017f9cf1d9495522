"""Model G-manifolds, moment-map Gram matrices and the kinetic term W.

For a point ``p`` with action fields ``v_1, ..., v_d`` the Gram matrix is
``G_ij(p) = <v_i(p), v_j(p)>``. The one-form ``alpha_mu(p)`` is the covector
orthogonal to ``ker phi_p`` with ``<v_i, alpha_mu> = mu_i``. Writing
``alpha_mu`` as the metric dual of ``sum_j c_j v_j`` the moment condition reads
``G c = mu``, hence

    alpha_mu(p) = g(p) @ V(p) @ G(p)^{-1} mu,    W(p, mu) = mu^T G(p)^{-1} mu.

Orthogonality to ``ker phi_p`` holds because the metric dual of a vector in
``span(v_j)`` pairs to zero with every covector annihilating all ``v_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import lie
from .io import write_csv
from .lie import LieAlgebraModel, build_algebra, embed_mu, from_hermitian, hermitian_matrix
from .morse import MorseConfig, QuadraticForm, critical_points

PIVOT_TOL = 1e-12


class StratumError(ValueError):
    """The requested computation needs a stratum the point does not lie in."""

    def __init__(self, stratum: str, message: str):
        super().__init__(f"[{stratum}] {message}")
        self.stratum = stratum


class ChartError(ValueError):
    """A point lies outside the model's coordinate chart."""


class ModelManifold:
    """A G-manifold in a single coordinate chart with an invariant metric.

    Subclasses provide ``metric``, ``action_fields``, ``act``, ``z_of``,
    ``quotient_coords``, ``base_point`` and the reduced-coordinate maps
    ``z_from_u`` / ``u_from_z`` onto ``(0, 1)``.
    """

    name: str = "abstract"
    dim_X: int
    algebra: LieAlgebraModel
    z_bounds: tuple[float, float]

    @property
    def abelian(self) -> bool:
        return not np.any(self.algebra.structure_constants)

    def in_chart(self, p) -> bool:
        raise NotImplementedError

    def check(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim_X,) or not self.in_chart(p):
            raise ChartError(f"{self.name}: point {p.tolist()} is outside the chart")
        return p

    def metric(self, p) -> np.ndarray:
        raise NotImplementedError

    def action_fields(self, p) -> np.ndarray:
        """Array of shape ``(d, dim_X)``; row ``i`` is ``(e_i)_X(p)``."""
        raise NotImplementedError

    def act(self, v, p) -> np.ndarray:
        """``exp(v) . p`` for ``v`` in the algebra."""
        raise NotImplementedError

    def z_of(self, p) -> float:
        raise NotImplementedError

    def quotient_coords(self, p):
        raise NotImplementedError

    def base_point(self, z: float) -> np.ndarray:
        raise NotImplementedError

    def z_from_u(self, u):
        raise NotImplementedError

    def u_from_z(self, z):
        raise NotImplementedError


class RotatingSphere(ModelManifold):
    """The circle acting on the unit sphere by rotation about the polar axis.

    Chart ``p = (theta, phi)`` with ``0 < theta < pi``; the quotient
    coordinates are ``y = z = theta``.
    """

    name = "sphere_s1"
    dim_X = 2
    z_bounds = (0.0, np.pi)

    def __init__(self):
        self.algebra = build_algebra("u1")

    def in_chart(self, p) -> bool:
        return bool(0.0 < p[0] < np.pi and np.all(np.isfinite(p)))

    def metric(self, p):
        p = self.check(p)
        return np.diag([1.0, np.sin(p[0]) ** 2])

    def action_fields(self, p):
        self.check(p)
        return np.array([[0.0, 1.0]])

    def act(self, v, p):
        p = self.check(p)
        return np.array([p[0], p[1] + float(np.atleast_1d(v)[0])])

    def z_of(self, p):
        return float(self.check(p)[0])

    def quotient_coords(self, p):
        theta = self.z_of(p)
        return theta, theta

    def base_point(self, z):
        return np.array([float(z), 0.0])

    def z_from_u(self, u):
        return np.pi * np.asarray(u, dtype=float)

    def u_from_z(self, z):
        return np.asarray(z, dtype=float) / np.pi


_REAL_TO_COMPLEX = np.array([[1, 1j, 0, 0], [0, 0, 1, 1j]])


class CP2SU2(ModelManifold):
    """SU(2) fixing ``(0, 0, 1)`` acting on CP^2 with the Fubini-Study metric.

    Chart: affine coordinates ``[z1 : z2 : 1]`` written as a real 4-vector
    ``(Re z1, Im z1, Re z2, Im z2)``. The fixed point ``[0:0:1]`` is the
    origin. The quotient coordinate on ``X1 / SU(2) = (0, inf)`` is
    ``z = |z1|^2 + |z2|^2`` (tan^2 of the distance to the fixed point); the
    line at infinity is its ``z -> inf`` closure.

    ``quotient_coords`` returns ``(y, z)`` with ``y = (z, u)`` where ``u`` is
    the unit vector ``Ad*(g_p^{-1}) e3*`` for the unique ``g_p`` with
    ``p = g_p . (sqrt(z), 0)``; then ``W(p, mu) = B_z(mu u)``.
    """

    name = "cp2_su2"
    dim_X = 4
    z_bounds = (0.0, np.inf)

    def __init__(self):
        self.algebra = build_algebra("su2")

    @staticmethod
    def complex_coords(p) -> np.ndarray:
        return _REAL_TO_COMPLEX @ np.asarray(p, dtype=float)

    @staticmethod
    def real_coords(w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.array([w[0].real, w[0].imag, w[1].real, w[1].imag])

    def in_chart(self, p) -> bool:
        return bool(np.all(np.isfinite(p)))

    def metric(self, p):
        w = self.complex_coords(self.check(p))
        r2 = float(np.vdot(w, w).real)
        a = _REAL_TO_COMPLEX  # columns: complex images of the real basis
        gram = a.conj().T @ a
        proj = np.outer(a.conj().T @ w, w.conj() @ a)
        h = ((1.0 + r2) * gram - proj) / (1.0 + r2) ** 2
        return np.real(h)

    def action_fields(self, p):
        w = self.complex_coords(self.check(p))
        return np.array([self.real_coords(e @ w) for e in self.algebra.basis])

    def act(self, v, p):
        g = lie.group_element(self.algebra, v)
        return self.real_coords(g @ self.complex_coords(self.check(p)))

    def z_of(self, p):
        w = self.complex_coords(self.check(p))
        return float(np.vdot(w, w).real)

    def frame_element(self, p) -> np.ndarray:
        """``g_p`` in SU(2) with ``g_p (|w|, 0)^T = w``."""
        w = self.complex_coords(self.check(p))
        r = np.sqrt(np.vdot(w, w).real)
        if r == 0:
            raise StratumError("singular", "the fixed point has no SU(2) frame")
        a, b = w / r
        return np.array([[a, -np.conj(b)], [b, np.conj(a)]])

    def quotient_coords(self, p):
        z = self.z_of(p)
        g = self.frame_element(p)
        sigma3 = np.diag([1.0, -1.0]).astype(complex)
        u = from_hermitian(self.algebra, g.conj().T @ sigma3 @ g)
        return (z, u), z

    def base_point(self, z):
        return np.array([np.sqrt(float(z)), 0.0, 0.0, 0.0])

    def z_from_u(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return u / (1.0 - u)

    def u_from_z(self, z):
        z = np.asarray(z, dtype=float)
        return z / (1.0 + z)


MODELS = {"sphere_s1": RotatingSphere, "cp2_su2": CP2SU2}


def get_model(name: str) -> ModelManifold:
    try:
        return MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None


def gram_matrix(model: ModelManifold, p) -> np.ndarray:
    v = model.action_fields(p)
    g = v @ model.metric(p) @ v.T
    return 0.5 * (g + g.T)


def _mu_vector(model, mu):
    return embed_mu(model.algebra, mu)


def stabilizer_rank(model: ModelManifold, p, tol: float = PIVOT_TOL):
    """``(dim of stabilizer algebra, stratum label)`` at ``p``.

    Labels: ``"X1"`` (G locally free), ``"X0_only"`` (only the torus is
    locally free), ``"singular"``.
    """
    g = gram_matrix(model, p)
    eig = np.linalg.eigvalsh(g)
    deficiency = int(np.sum(eig <= tol))
    if deficiency == 0:
        return 0, "X1"
    idx = list(model.algebra.cartan_indices)
    if np.linalg.eigvalsh(g[np.ix_(idx, idx)]).min() > tol:
        return deficiency, "X0_only"
    return deficiency, "singular"


def _solve_gram(g, rhs, stratum_hint):
    if np.linalg.eigvalsh(g).min() <= PIVOT_TOL:
        raise StratumError(stratum_hint, "Gram matrix is singular here; alpha_mu is undefined (it escapes to infinity)")
    return cho_solve(cho_factor(g), rhs)


@dataclass(frozen=True)
class Alpha:
    coefficients: np.ndarray
    covector: np.ndarray
    stratum: str


def alpha_mu(model: ModelManifold, p, mu, group: str = "G") -> Alpha:
    """The one-form ``alpha_mu(p)`` in chart cotangent components.

    ``group="G"`` uses the full Gram matrix with ``mu`` extended to ``g*`` by
    zero; ``group="T"`` uses only the Cartan block (``mu`` in ``t*``).
    """
    p = model.check(p)
    _, stratum = stabilizer_rank(model, p)
    fields = model.action_fields(p)
    gm = gram_matrix(model, p)
    if group == "G":
        target = _mu_vector(model, mu)
        c = _solve_gram(gm, target, stratum)
        vec = c @ fields
    elif group == "T":
        idx = list(model.algebra.cartan_indices)
        target = np.atleast_1d(np.asarray(mu, dtype=float))
        c = _solve_gram(gm[np.ix_(idx, idx)], target, stratum)
        vec = c @ fields[idx]
    else:
        raise ValueError("group must be 'G' or 'T'")
    return Alpha(c, model.metric(p) @ vec, stratum)


def effective_W(model: ModelManifold, p, mu) -> float:
    """``mu^T G(p)^{-1} mu``, the squared length of ``alpha_mu(p)``."""
    p = model.check(p)
    target = _mu_vector(model, mu)
    _, stratum = stabilizer_rank(model, p)
    c = _solve_gram(gram_matrix(model, p), target, stratum)
    return float(target @ c)


def fiber_form(model: ModelManifold, z: float) -> QuadraticForm:
    """``B_z = G(x0(z))^{-1}`` on ``g*``; ``W(g.x0, mu) = B_z(Ad*(g^{-1}) mu)``."""
    g = gram_matrix(model, model.base_point(z))
    if np.linalg.eigvalsh(g).min() <= PIVOT_TOL:
        raise StratumError("singular", f"base point at z={z} is not in X1")
    return QuadraticForm(np.linalg.inv(g))


def fiber_minimum(model: ModelManifold, z: float, mu, cfg: MorseConfig | None = None) -> float:
    """Minimum of ``W(., mu)`` over the fiber above ``z``.

    su(2) orbits are round spheres, so the minimum is ``|mu|^2 / lambda_max(G)``
    (read off the Gram matrix to avoid inverting it near the boundary); other
    algebras fall back to the orbit multistart.
    """
    target = _mu_vector(model, mu)
    if model.abelian:
        return effective_W(model, model.base_point(z), mu)
    if model.algebra.name == "su2":
        g = gram_matrix(model, model.base_point(z))
        lam = np.linalg.eigvalsh(g)
        if lam.min() <= PIVOT_TOL:
            raise StratumError("singular", f"base point at z={z} is not in X1")
        return float(target @ target / lam[-1])
    B = fiber_form(model, z)
    base = lie.orbit_base(model.algebra, target)
    crit = critical_points(model.algebra, B, base, cfg or MorseConfig())
    return min(r.value for r in crit.converged_records)


def kinetic_profile(model: ModelManifold, z: float) -> float:
    """``w(z) = min over the fiber of W(., mu=1)``, so ``W~(z, mu) = mu^2 w(z)``."""
    return fiber_minimum(model, z, np.ones(model.algebra.rank))


@dataclass(frozen=True)
class ProbeResult:
    diverges: bool
    values: np.ndarray
    max_value: float
    end_stratum: str


def properness_probe(model: ModelManifold, mu, path, growth: float = 10.0) -> ProbeResult:
    """Follow ``W(., mu)`` along ``path`` towards a non-X1 stratum.

    Points where ``W`` is undefined (the end point, typically) are skipped.
    The verdict is true when the values over the second half of the path
    increase strictly and the last value exceeds the first by ``growth``.
    """
    pts = [model.check(p) for p in path]
    vals = []
    for p in pts:
        try:
            vals.append(effective_W(model, p, mu))
        except StratumError:
            continue
    vals = np.array(vals)
    end = stabilizer_rank(model, pts[-1])[1]
    if len(vals) < 2:
        return ProbeResult(False, vals, float(vals.max()) if len(vals) else float("nan"), end)
    tail = vals[len(vals) // 2 :]
    increasing = bool(np.all(np.diff(tail) > 0))
    diverges = increasing and vals[-1] >= growth * max(vals[0], np.finfo(float).tiny)
    return ProbeResult(bool(diverges), vals, float(vals.max()), end)


@dataclass(frozen=True)
class FiberProfile:
    z: float
    mu: np.ndarray
    form: QuadraticForm
    points: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def minimum(self) -> float:
        return float(self.values.min())


def fiber_profile(model: ModelManifold, z: float, mu, n_samples: int = 100, seed: int = 0) -> FiberProfile:
    """Sample ``W`` over the fiber above ``z`` at random group translates of ``x0(z)``.

    For an abelian model the fiber is a single point.
    """
    x0 = model.base_point(z)
    target = _mu_vector(model, mu)
    B = fiber_form(model, z)
    if model.abelian:
        return FiberProfile(z, target, B, x0[None, :], np.array([effective_W(model, x0, mu)]))
    rng = np.random.default_rng(seed)
    pts, vals = [], []
    for _ in range(n_samples):
        v = rng.normal(size=model.algebra.dim) * np.pi
        p = model.act(v, x0)
        pts.append(p)
        vals.append(effective_W(model, p, mu))
    return FiberProfile(z, target, B, np.array(pts), np.array(vals))


@dataclass
class EffectivePotentialField:
    """``W(y, mu) + V_red(gamma(y))`` on quotient coordinates.

    ``y`` is ``z`` for an abelian model and ``(z, u)`` with ``u`` a unit
    vector in ``g*`` otherwise (see :meth:`CP2SU2.quotient_coords`).
    """

    model: ModelManifold
    V_red: Callable
    mu: np.ndarray

    def W(self, y) -> float:
        if self.model.abelian:
            return effective_W(self.model, self.model.base_point(_z_in_chart(self.model, y)), self.mu)
        z, u = y
        z = _z_in_chart(self.model, z)
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if mu.shape != (1,):
            raise ValueError("fiber coordinates need a one-dimensional mu")
        return fiber_form(self.model, z)(mu[0] * np.asarray(u, dtype=float))

    def __call__(self, y) -> float:
        z = y if self.model.abelian else y[0]
        return self.W(y) + float(self.V_red(z))

    def at_point(self, p) -> float:
        _, z = self.model.quotient_coords(p)
        return effective_W(self.model, p, self.mu) + float(self.V_red(z))

    def reduced(self, z: float) -> float:
        """Fiber-minimised value at ``z``."""
        z = _z_in_chart(self.model, z)
        return fiber_minimum(self.model, z, self.mu) + float(self.V_red(z))


def _z_in_chart(model: ModelManifold, z) -> float:
    z = float(z)
    lo, hi = model.z_bounds
    if not lo < z < hi:
        raise ChartError(f"{model.name}: z={z} is outside ({lo}, {hi})")
    return z


def export_field_csv(model: ModelManifold, points, mu, path) -> None:
    """Write ``p_*, G_ij, W`` rows for the sampled points."""
    d = model.algebra.dim
    header = [f"p{i}" for i in range(model.dim_X)]
    header += [f"G{i}{j}" for i in range(d) for j in range(d)] + ["W"]
    rows = []
    for p in points:
        g = gram_matrix(model, p)
        rows.append([*p, *g.ravel(), effective_W(model, p, mu)])
    write_csv(path, header, rows)


def hermitian_of(model: ModelManifold, xi):
    return hermitian_matrix(model.algebra, xi)
