"""Finite-dimensional models of compact Lie algebras and their duals.

Conventions
-----------
Every algebra is given by a basis ``e_a`` of anti-Hermitian matrices:

* ``su2``: ``e_a = -i sigma_a / 2`` so that ``[e_i, e_j] = eps_ijk e_k``.
* ``su3``: ``e_a = -i lambda_a / 2`` (Gell-Mann), so ``c_abc = f_abc`` and
  the first three generators span the ``su2`` block. The defining-rep trace
  form is ``tr(e_a e_b) = -delta_ab / 2``.
* ``u1``: the circle algebra, one generator, zero bracket.

Vectors in ``g*`` are stored in basis-dual coordinates, ``xi_a = <xi, e_a>``.
The coadjoint action is ``<ad*_v xi, w> = <xi, [w, v]>``; its exponential is
the left action ``Ad*(exp v)``. A dual vector is also represented by the
Hermitian matrix ``M(xi) = sum_a xi_a H_a`` with ``H_a = 2i e_a``; under
``Ad*(g)`` it transforms as ``M -> g M g^-1``, so the spectrum of ``M`` is a
complete set of orbit invariants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

ALGEBRAS = ("su2", "su3", "u1")

DEFAULT_CASIMIR_TOL = 1e-10


class OrbitError(ValueError):
    """Raised when a point cannot be placed on the requested coadjoint orbit."""


def _pauli():
    return [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]


def _gell_mann():
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return list(lam)


def _freeze(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LieAlgebraModel:
    """A compact Lie algebra with a fixed matrix basis.

    ``chamber`` holds a matrix ``A`` such that the open positive Weyl chamber
    is ``{mu : A @ mu > 0}`` in Cartan coordinates.
    """

    name: str
    dim: int
    basis: np.ndarray = field(repr=False)
    structure_constants: np.ndarray = field(repr=False)
    killing: np.ndarray = field(repr=False)
    cartan_indices: tuple[int, ...]
    chamber: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.cartan_indices)

    @property
    def killing_positive(self) -> np.ndarray:
        """The positive invariant form ``C = -K``, applied to dual coordinates."""
        return -self.killing

    @property
    def orbit_dim(self) -> int:
        """Dimension of a generic (regular) coadjoint orbit."""
        return self.dim - self.rank


def _structure_constants(basis):
    d = len(basis)
    # coefficients w.r.t. the basis via the (nondegenerate) trace form
    gram = np.array([[np.trace(a @ b) for b in basis] for a in basis])
    gram_inv = np.linalg.inv(gram)
    c = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            br = basis[i] @ basis[j] - basis[j] @ basis[i]
            rhs = np.array([np.trace(br @ b) for b in basis])
            c[i, j] = np.real(gram_inv @ rhs)
    c[np.abs(c) < 1e-15] = 0.0
    return c


def killing_from_structure(c: np.ndarray) -> np.ndarray:
    """``K_ab = sum_{c,d} c_acd c_bdc``, i.e. ``tr(ad_a ad_b)``."""
    return np.einsum("acd,bdc->ab", c, c)


@lru_cache(maxsize=None)
def build_algebra(name: str) -> LieAlgebraModel:
    """Build ``su2``, ``su3`` or ``u1``; the Killing matrix is contracted from ``c``."""
    if name == "su2":
        basis = [-0.5j * s for s in _pauli()]
        cartan = (2,)
        chamber = np.array([[1.0]])
    elif name == "su3":
        basis = [-0.5j * lam for lam in _gell_mann()]
        cartan = (2, 7)
        # eigenvalues of a3*lambda3 + a8*lambda8 strictly decreasing
        chamber = np.array([[1.0, 0.0], [-1.0, np.sqrt(3.0)]])
    elif name == "u1":
        basis = [np.array([[-0.5j]])]
        cartan = (0,)
        chamber = np.array([[1.0]])
    else:
        raise ValueError(f"unknown algebra {name!r}; expected one of {ALGEBRAS}")
    c = _structure_constants(basis)
    return LieAlgebraModel(
        name=name,
        dim=len(basis),
        basis=_freeze(basis),
        structure_constants=_freeze(c),
        killing=_freeze(killing_from_structure(c)),
        cartan_indices=cartan,
        chamber=_freeze(chamber),
    )


def bracket(alg: LieAlgebraModel, v, w) -> np.ndarray:
    return np.einsum("i,j,ijk->k", v, w, alg.structure_constants)


def jacobi_residual(alg: LieAlgebraModel) -> float:
    c = alg.structure_constants
    r = (
        np.einsum("ijm,mkl->ijkl", c, c)
        + np.einsum("jkm,mil->ijkl", c, c)
        + np.einsum("kim,mjl->ijkl", c, c)
    )
    return float(np.abs(r).max())


def ad_matrix(alg: LieAlgebraModel, v) -> np.ndarray:
    """Matrix of ``xi -> ad*_v xi`` in dual coordinates: ``A_ik = sum_j v_j c_ijk``."""
    return np.einsum("j,ijk->ik", np.asarray(v, dtype=float), alg.structure_constants)


def coadjoint_infinitesimal(alg: LieAlgebraModel, v, xi) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if v.shape != (alg.dim,) or xi.shape != (alg.dim,):
        raise ValueError(f"expected vectors of length {alg.dim}")
    return ad_matrix(alg, v) @ xi


def coadjoint_matrix(alg: LieAlgebraModel, v, t: float = 1.0) -> np.ndarray:
    """Matrix of ``Ad*(exp(t v))`` acting on dual coordinates."""
    return expm(t * ad_matrix(alg, v))


def group_element(alg: LieAlgebraModel, v, t: float = 1.0) -> np.ndarray:
    """``exp(t v)`` in the defining matrix representation."""
    m = np.tensordot(np.asarray(v, dtype=float), alg.basis, axes=1)
    return expm(t * m)


def hermitian_matrix(alg: LieAlgebraModel, xi) -> np.ndarray:
    h = 2j * alg.basis
    return np.tensordot(np.asarray(xi, dtype=float), h, axes=1)


def from_hermitian(alg: LieAlgebraModel, m: np.ndarray) -> np.ndarray:
    # <xi, e_a> = tr(M i e_a)
    return np.real(np.einsum("ij,aji->a", m, 1j * alg.basis))


def casimirs(alg: LieAlgebraModel, xi) -> np.ndarray:
    """``(tr M^2, tr M^3)`` of the Hermitian matrix attached to ``xi``."""
    m = hermitian_matrix(alg, xi)
    m2 = m @ m
    return np.real(np.array([np.trace(m2), np.trace(m2 @ m)]))


def orbit_spectrum(alg: LieAlgebraModel, xi) -> np.ndarray:
    """Eigenvalues of ``M(xi)`` in decreasing order."""
    return np.linalg.eigvalsh(hermitian_matrix(alg, xi))[::-1]


def embed_mu(alg: LieAlgebraModel, mu) -> np.ndarray:
    """Extend ``mu`` in Cartan coordinates to ``g*`` by zero off the Cartan."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.shape == (alg.dim,):
        return mu.copy()
    if mu.shape != (alg.rank,):
        raise ValueError(f"mu must have length {alg.rank} (Cartan) or {alg.dim}")
    xi = np.zeros(alg.dim)
    xi[list(alg.cartan_indices)] = mu
    return xi


def in_chamber(alg: LieAlgebraModel, mu) -> bool:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    return bool(np.all(alg.chamber @ mu > 0))


def orbit_base(alg: LieAlgebraModel, xi) -> np.ndarray:
    """Chamber coordinates of the orbit through ``xi`` (closed chamber)."""
    spec = orbit_spectrum(alg, xi)
    diag = np.diag(spec).astype(complex)
    return from_hermitian(alg, diag)[list(alg.cartan_indices)]


@dataclass(frozen=True)
class WeylChamberPoint:
    mu: np.ndarray
    algebra: str = "su2"

    def __post_init__(self):
        mu = _freeze(np.atleast_1d(np.asarray(self.mu, dtype=float)))
        object.__setattr__(self, "mu", mu)
        alg = build_algebra(self.algebra)
        if mu.shape != (alg.rank,):
            raise ValueError(f"{self.algebra} chamber points have {alg.rank} coordinates")
        if not in_chamber(alg, mu):
            raise ValueError(f"mu={mu.tolist()} is not strictly inside the Weyl chamber")


@dataclass(frozen=True)
class OrbitPoint:
    xi: np.ndarray
    base_mu: WeylChamberPoint
    casimir_tol: float = DEFAULT_CASIMIR_TOL

    def __post_init__(self):
        object.__setattr__(self, "xi", _freeze(np.asarray(self.xi, dtype=float)))
        alg = build_algebra(self.base_mu.algebra)
        drift = orbit_drift(alg, self.xi, self.base_mu.mu)
        if drift > self.casimir_tol:
            raise OrbitError(f"point is off the orbit by {drift:.3e} > {self.casimir_tol:.1e}")


def orbit_drift(alg: LieAlgebraModel, xi, mu) -> float:
    """Max spectral mismatch between ``xi`` and the orbit through ``mu``, relative to ``|mu|``."""
    target = orbit_spectrum(alg, embed_mu(alg, mu))
    scale = max(1.0, float(np.abs(target).max()))
    return float(np.abs(orbit_spectrum(alg, xi) - target).max() / scale)


def project_to_orbit(alg: LieAlgebraModel, xi, mu) -> np.ndarray:
    """Nearest point (Frobenius norm on ``M``) on the orbit through ``mu``."""
    m = hermitian_matrix(alg, xi)
    _, u = np.linalg.eigh(m)
    target = np.linalg.eigvalsh(hermitian_matrix(alg, embed_mu(alg, mu)))
    return from_hermitian(alg, (u * target) @ u.conj().T)


def orbit_point(alg: LieAlgebraModel, xi, mu, casimir_tol=DEFAULT_CASIMIR_TOL) -> OrbitPoint:
    base = mu if isinstance(mu, WeylChamberPoint) else WeylChamberPoint(mu, alg.name)
    xi = project_to_orbit(alg, xi, base.mu)
    return OrbitPoint(xi, base, casimir_tol)


def coadjoint_flow(alg: LieAlgebraModel, v, t: float, xi, casimir_tol=DEFAULT_CASIMIR_TOL) -> OrbitPoint:
    """Flow ``xi`` for time ``t`` along ``ad*_v`` and re-project onto its orbit.

    ``xi`` may be an :class:`OrbitPoint` or a raw dual vector; for a raw
    vector the orbit is the one through ``xi`` itself.
    """
    if isinstance(xi, OrbitPoint):
        base = xi.base_mu
        casimir_tol = xi.casimir_tol
        xi = xi.xi
    else:
        base = WeylChamberPoint(orbit_base(alg, xi), alg.name)
    moved = coadjoint_matrix(alg, v, t) @ np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(moved)):
        raise OrbitError("coadjoint flow produced non-finite values")
    return OrbitPoint(project_to_orbit(alg, moved, base.mu), base, casimir_tol)


def random_orbit_point(alg: LieAlgebraModel, mu, rng: np.random.Generator) -> np.ndarray:
    """Haar-random point ``U diag U^*`` on the orbit through ``mu``."""
    n = alg.basis.shape[1]
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    spec = np.linalg.eigvalsh(hermitian_matrix(alg, embed_mu(alg, mu)))
    return from_hermitian(alg, (q * spec) @ q.conj().T)
