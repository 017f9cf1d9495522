"""Critical points of quadratic forms restricted to coadjoint orbits.

For a positive-definite form ``B`` on ``g*`` and a regular orbit ``O_mu`` we
study ``rho(xi) = xi^T B xi`` on ``O_mu``. Local coordinates around a point
``xi`` come from the group action, ``s -> exp(sum_j s_j A_j) xi``, where the
generators ``u_j`` are chosen so that the tangent vectors ``A_j xi`` are
orthonormal. In these coordinates the gradient and Hessian of ``rho`` at
``s = 0`` are available in closed form, and at a critical point the Hessian
coincides with the Riemannian one.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .lie import (
    LieAlgebraModel,
    OrbitPoint,
    WeylChamberPoint,
    ad_matrix,
    build_algebra,
    coadjoint_infinitesimal,
    embed_mu,
    from_hermitian,
    orbit_drift,
    hermitian_matrix,
    orbit_point,
    random_orbit_point,
)
from scipy.linalg import expm

GENERICITY_EPS = 1e-6


class DegenerateOrbitError(ValueError):
    """The tangent frame at a point has lower rank than a regular orbit."""


@dataclass(frozen=True)
class QuadraticForm:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("quadratic form must be a square matrix")
        if np.abs(m - m.T).max() > 1e-14 * max(1.0, np.abs(m).max()):
            raise ValueError("quadratic form matrix is not symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m).min() <= 0:
            raise ValueError("quadratic form is not positive definite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        return float(xi @ self.matrix @ xi)

    def shifted(self, lam: float, c: np.ndarray) -> "QuadraticForm":
        """``B + lam * C``."""
        return QuadraticForm(self.matrix + lam * np.asarray(c))

    def digest(self) -> str:
        raw = np.ascontiguousarray(np.round(self.matrix, 12)).tobytes()
        return hashlib.sha256(raw).hexdigest()[:16]


@dataclass(frozen=True)
class MorseConfig:
    seeds: int = 64
    seed: int = 0
    max_iter: int = 200
    restarts: int = 1
    grad_tol: float = 1e-12
    dedup_tol: float = 1e-6
    hessian_tol: float = 1e-8


@dataclass(frozen=True)
class CriticalPointRecord:
    point: OrbitPoint
    value: float
    morse_index: int | None
    min_abs_hessian_eig: float
    nondegenerate: bool
    hessian_eigs: tuple[float, ...] = ()
    grad_norm: float = 0.0
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "point": [float(x) for x in self.point.xi],
            "value": self.value,
            "morse_index": self.morse_index,
            "min_abs_hessian_eig": self.min_abs_hessian_eig,
            "nondegenerate": self.nondegenerate,
            "hessian_eigs": list(self.hessian_eigs),
            "grad_norm": self.grad_norm,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class CriticalSet:
    """Deduplicated multistart result; iterates like a list of records."""

    records: tuple[CriticalPointRecord, ...]
    saturated: bool
    seeds: int
    last_new_seed: int
    unconverged: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def converged_records(self):
        return [r for r in self.records if r.converged]


@dataclass(frozen=True)
class MorseVerdict:
    is_morse: bool
    distinct_values: bool
    records: CriticalSet = field(repr=False)

    def __iter__(self):
        # allows ``ok, records = is_morse(...)``
        return iter((self.is_morse, self.records))


def restrict_form(B: QuadraticForm, xi) -> float:
    if isinstance(xi, OrbitPoint):
        xi = xi.xi
    return B(xi)


def _generator_columns(alg, eta):
    """Matrix whose column ``i`` is ``ad*_{e_i} eta``."""
    return np.einsum("kij,j->ki", alg.structure_constants, eta)


def tangent_frame(alg: LieAlgebraModel, xi, rank_tol: float = 1e-9):
    """Generators ``u_j`` whose infinitesimal actions ``A_j xi`` are orthonormal.

    Returns ``(gens, tangents)`` with shapes ``(k, d)`` and ``(k, d)``.
    Raises :class:`DegenerateOrbitError` if ``k`` is below the regular orbit
    dimension.
    """
    xi = np.asarray(xi, dtype=float)
    u, s, vt = np.linalg.svd(_generator_columns(alg, xi))
    scale = max(float(np.linalg.norm(xi)), 1e-300)
    k = int(np.sum(s > rank_tol * scale))
    if k < alg.orbit_dim:
        raise DegenerateOrbitError(
            f"tangent rank {k} < regular orbit dimension {alg.orbit_dim} at xi={xi.tolist()}"
        )
    gens = vt[:k] / s[:k, None]
    return gens, u[:, :k].T


@dataclass(frozen=True)
class OrbitGradient:
    vector: np.ndarray
    coefficients: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def orbit_gradient(alg: LieAlgebraModel, B: QuadraticForm, xi) -> OrbitGradient:
    """Gradient of ``B|_O`` at ``xi`` for the metric induced from ``g*``.

    ``coefficients`` are the minimum-norm weights ``c`` with
    ``sum_i c_i ad*_{e_i} xi = vector``.
    """
    if isinstance(xi, OrbitPoint):
        xi = xi.xi
    xi = np.asarray(xi, dtype=float)
    _, tangents = tangent_frame(alg, xi)
    vec = tangents.T @ (tangents @ (2.0 * B.matrix @ xi))
    coeffs = np.linalg.lstsq(_generator_columns(alg, xi), vec, rcond=None)[0]
    return OrbitGradient(vec, coeffs)


def _local_model(alg, B, xi):
    gens, tangents = tangent_frame(alg, xi)
    bx = B.matrix @ xi
    grad = 2.0 * tangents @ bx
    # A_j are antisymmetric, so xi^T B A_j A_l xi = -(A_j B xi) . (A_l xi)
    s = gens @ _generator_columns(alg, bx).T
    cross = s @ tangents.T
    hess = 2.0 * tangents @ B.matrix @ tangents.T - cross - cross.T
    return gens, grad, 0.5 * (hess + hess.T)


def orbit_hessian(alg: LieAlgebraModel, B: QuadraticForm, xi) -> np.ndarray:
    """Hessian of ``B|_O`` in the orthonormal exponential chart at ``xi``."""
    return _local_model(alg, B, np.asarray(xi, dtype=float))[2]


def _act(alg, v, xi):
    """``Ad*(exp v) xi`` through the defining representation (stays on the orbit)."""
    x = np.tensordot(v, alg.basis, axes=1)
    w, u = np.linalg.eigh(1j * x)
    g = (u * np.exp(-1j * w)) @ u.conj().T
    m = hermitian_matrix(alg, xi)
    return from_hermitian(alg, g @ m @ g.conj().T)


def orbit_hessian_fd(alg: LieAlgebraModel, B: QuadraticForm, xi, h: float = 1e-4) -> np.ndarray:
    """Central second differences along the same chart, Richardson-extrapolated once."""
    xi = np.asarray(xi, dtype=float)
    gens, _ = tangent_frame(alg, xi)
    k = len(gens)

    def f(s):
        return B(expm(ad_matrix(alg, s @ gens)) @ xi)

    def second(step):
        H = np.empty((k, k))
        f0 = f(np.zeros(k))
        for i in range(k):
            ei = np.eye(k)[i] * step
            H[i, i] = (f(ei) - 2 * f0 + f(-ei)) / step**2
            for j in range(i + 1, k):
                ej = np.eye(k)[j] * step
                H[i, j] = H[j, i] = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) / (4 * step**2)
        return H

    coarse, fine = second(2 * h), second(h)
    return fine + (fine - coarse) / 3.0


def _refine(alg, B, xi, cfg, known=()):
    """Levenberg-Marquardt on the chart gradient; Jacobian is the chart Hessian.

    Returns ``(xi, grad_norm, converged)``; ``xi`` is ``None`` when the
    iterate is already converging onto one of the ``known`` critical points.
    """
    radius = float(np.sqrt(xi @ xi))
    scale = np.linalg.norm(B.matrix, 2) * radius**2
    gtol = cfg.grad_tol * max(scale, 1e-300)
    gens, grad, hess = _local_model(alg, B, xi)
    gnorm = float(np.linalg.norm(grad))
    lam = 1e-3 * scale
    for _ in range(cfg.max_iter):
        if gnorm <= gtol:
            return xi, gnorm, True
        if gnorm < 1e-3 * scale and any(np.linalg.norm(k - xi) < 1e-3 * radius for k in known):
            return None, gnorm, True
        jtj = hess @ hess
        step = -np.linalg.solve(jtj + lam * np.eye(len(grad)), hess @ grad)
        cand = _act(alg, step @ gens, xi)
        cgens, cgrad, chess = _local_model(alg, B, cand)
        cnorm = float(np.linalg.norm(cgrad))
        if cnorm < gnorm:
            xi, gens, grad, hess, gnorm = cand, cgens, cgrad, chess, cnorm
            lam = max(lam * 0.1, 1e-14 * scale)
        else:
            lam *= 10.0
            if lam > 1e12 * scale:
                break
    return xi, gnorm, gnorm <= gtol


def _classify(alg, B, xi, base, cfg, gnorm, converged):
    hess = orbit_hessian(alg, B, xi)
    eigs = np.linalg.eigvalsh(hess)
    scale = np.linalg.norm(B.matrix, 2) * float(xi @ xi)
    min_abs = float(np.abs(eigs).min())
    nondeg = bool(min_abs > cfg.hessian_tol * scale)
    index = int(np.sum(eigs < 0)) if nondeg else None
    return CriticalPointRecord(
        point=OrbitPoint(xi, base),
        value=B(xi),
        morse_index=index,
        min_abs_hessian_eig=min_abs,
        nondegenerate=nondeg,
        hessian_eigs=tuple(float(e) for e in eigs),
        grad_norm=gnorm,
        converged=converged,
    )


def _chamber_point(alg, mu):
    if isinstance(mu, WeylChamberPoint):
        return mu
    return WeylChamberPoint(mu, alg.name)


def critical_points(alg: LieAlgebraModel, B: QuadraticForm, mu, cfg: MorseConfig = MorseConfig()) -> CriticalSet:
    """Multistart Newton search for critical points of ``B`` on ``O_mu``.

    Records are sorted by ``(value, point)``. ``saturated`` is true when no
    new point appeared in the second half of the seeds.
    """
    if cfg.seeds < 1:
        raise ValueError("need at least one seed")
    base = _chamber_point(alg, mu)
    rng = np.random.default_rng(cfg.seed)
    found: list[CriticalPointRecord] = []
    known: list[np.ndarray] = []  # converged points, for early exit of duplicate seeds
    last_new = 0
    for s in range(cfg.seeds):
        xi, gnorm, ok = _refine(alg, B, random_orbit_point(alg, base.mu, rng), cfg, known)
        for _ in range(cfg.restarts):
            if ok:
                break
            # stalled at a local minimum of |grad|: kick off it and retry
            kick = rng.normal(size=alg.dim)
            xi, gnorm, ok = _refine(alg, B, _act(alg, kick, xi), cfg, known)
        if xi is None:
            continue
        if ok:
            known.append(xi)
        if any(np.linalg.norm(r.point.xi - xi) <= cfg.dedup_tol for r in found):
            continue
        found.append(_classify(alg, B, xi, base, cfg, gnorm, ok))
        last_new = s
        # B is even, so -xi is critical too whenever the orbit contains it
        if ok and orbit_drift(alg, -xi, base.mu) < 1e-10:
            if not any(np.linalg.norm(r.point.xi + xi) <= cfg.dedup_tol for r in found):
                known.append(-xi)
                found.append(_classify(alg, B, -xi, base, cfg, gnorm, ok))
    found.sort(key=lambda r: (not r.converged, round(r.value, 10), tuple(np.round(r.point.xi, 10))))
    return CriticalSet(
        records=tuple(found),
        saturated=last_new < cfg.seeds / 2,
        seeds=cfg.seeds,
        last_new_seed=last_new,
        unconverged=sum(not r.converged for r in found),
    )


def _distinct_values(records, value_tol):
    groups: list[list[CriticalPointRecord]] = []
    for r in records:
        for g in groups:
            if abs(g[0].value - r.value) <= value_tol:
                g.append(r)
                break
        else:
            groups.append([r])
    for g in groups:
        if len(g) == 1:
            continue
        # xi and -xi always share a value when both lie on the orbit
        if len(g) == 2 and np.allclose(g[0].point.xi, -g[1].point.xi, atol=1e-6):
            continue
        return False
    return True


def is_morse(alg: LieAlgebraModel, B: QuadraticForm, mu, cfg: MorseConfig = MorseConfig()) -> MorseVerdict:
    """Morse test for ``B|_O_mu`` plus the distinct-critical-values check.

    The verdict is taken over converged critical points; seeds whose
    refinement did not converge stay in the record list with
    ``converged=False`` and are counted in ``records.unconverged``.
    """
    crit = critical_points(alg, B, mu, cfg)
    conv = crit.converged_records
    ok = bool(conv) and all(r.nondegenerate for r in conv)
    scale = np.linalg.norm(B.matrix, 2) * float(np.sum(embed_mu(alg, _chamber_point(alg, mu).mu) ** 2))
    distinct = ok and _distinct_values(conv, 1e-8 * scale)
    return MorseVerdict(ok, distinct, crit)


def random_form(d: int, rng: np.random.Generator, eps: float = GENERICITY_EPS) -> QuadraticForm:
    a = rng.normal(size=(d, d))
    return QuadraticForm(a.T @ a + eps * np.eye(d))


def genericity_sample(
    alg: LieAlgebraModel,
    n_forms: int,
    orbit_mus,
    seed: int = 0,
    controls=(),
    cfg: MorseConfig | None = None,
) -> dict:
    """Run :func:`is_morse` on random forms ``A^T A + eps I`` over several orbits.

    ``controls`` are extra forms (e.g. the identity) that are reported but
    excluded from ``fraction_morse``. The result is JSON-ready.
    """
    if n_forms < 1:
        raise ValueError("n_forms must be >= 1")
    mus = [_chamber_point(alg, m) for m in orbit_mus]
    rng = np.random.default_rng(seed)
    forms = [random_form(alg.dim, rng) for _ in range(n_forms)]
    cfg = cfg or MorseConfig(seed=seed)
    failures = []
    n_ok = 0
    for i, B in enumerate(forms):
        for mu in mus:
            verdict = is_morse(alg, B, mu, cfg)
            if verdict.is_morse:
                n_ok += 1
            else:
                failures.append({"form": i, "form_hash": B.digest(), "mu": mu.mu.tolist(), "control": False})
    control_results = []
    for j, C in enumerate(controls):
        C = C if isinstance(C, QuadraticForm) else QuadraticForm(C)
        for mu in mus:
            verdict = is_morse(alg, C, mu, cfg)
            flagged = not verdict.is_morse
            control_results.append({"control": j, "mu": mu.mu.tolist(), "flagged": flagged})
            if flagged:
                failures.append({"form": f"control{j}", "form_hash": C.digest(), "mu": mu.mu.tolist(), "control": True})
    return {
        "algebra": alg.name,
        "n_forms": n_forms,
        "orbits": [mu.mu.tolist() for mu in mus],
        "seed": seed,
        "fraction_morse": n_ok / (n_forms * len(mus)),
        "failures": failures,
        "controls": control_results,
    }


def morse_report(alg: LieAlgebraModel, B: QuadraticForm, mu, cfg: MorseConfig = MorseConfig()) -> dict:
    """JSON report ``{algebra, mu, form_hash, records, fraction_morse, ...}``."""
    verdict = is_morse(alg, B, mu, cfg)
    base = _chamber_point(alg, mu)
    return {
        "algebra": alg.name,
        "mu": base.mu.tolist(),
        "form_hash": B.digest(),
        "records": [r.to_dict() for r in verdict.records],
        "fraction_morse": 1.0 if verdict.is_morse else 0.0,
        "is_morse": verdict.is_morse,
        "distinct_values": verdict.distinct_values,
        "saturated": verdict.records.saturated,
    }


__all__ = [
    "QuadraticForm",
    "MorseConfig",
    "CriticalPointRecord",
    "CriticalSet",
    "MorseVerdict",
    "DegenerateOrbitError",
    "restrict_form",
    "tangent_frame",
    "orbit_gradient",
    "orbit_hessian",
    "orbit_hessian_fd",
    "critical_points",
    "is_morse",
    "random_form",
    "genericity_sample",
    "morse_report",
    "build_algebra",
    "orbit_point",
]
