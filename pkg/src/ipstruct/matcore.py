"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays. Operators on a ``d``-dimensional
space are vectorized by column stacking, ``vec(A X B) = (B^T kron A) vec(X)``,
which makes ``vec`` an isometry from the Hilbert-Schmidt inner product
``<X, Y> = tr(X^dag Y)`` onto the Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import ContractError, DimensionError, NumericError, ParameterError


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds, threaded explicitly through every computation.

    :param eig_cluster: radius around 1 (or the unit circle) inside which an
        eigenvalue counts as fixed (or peripheral).
    :param rank_cutoff: relative cutoff, scaled by the largest singular value,
        for support, rank and pseudo-inverse decisions.
    :param verify: acceptance threshold for verification predicates.
    """

    eig_cluster: float = 1e-9
    rank_cutoff: float = 1e-10
    verify: float = 1e-8

    def __post_init__(self):
        for name in ("eig_cluster", "rank_cutoff", "verify"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(f"tolerance {name} must be positive, got {value}")
        if self.rank_cutoff > self.eig_cluster:
            raise ParameterError("rank_cutoff must not exceed eig_cluster")

    def as_dict(self) -> dict:
        return {"eig_cluster": self.eig_cluster, "rank_cutoff": self.rank_cutoff,
                "verify": self.verify}


DEFAULT_TOL = Tolerance()


def as_matrix(X, square: bool = False, name: str = "matrix") -> np.ndarray:
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractError(f"{name} has non-finite entries")
    return A


def dag(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d, order="F")


def hs_inner(X: np.ndarray, Y: np.ndarray) -> complex:
    return complex(np.vdot(X, Y))


def trace_norm(X) -> float:
    """Sum of the singular values of a square matrix."""
    A = as_matrix(X, square=True)
    if A.size == 0:
        return 0.0
    return float(np.sum(sla.svdvals(A)))


# --------------------------------------------------------------------------
# Eigendecompositions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with matching right and left eigenvectors (as columns).

    ``left[:, j]`` satisfies ``left[:, j]^dag M = values[j] left[:, j]^dag``.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residual: float = 0.0

    def select(self, mask: np.ndarray) -> "Spectrum":
        return Spectrum(self.values[mask], self.right[:, mask], self.left[:, mask],
                        self.residual)


def is_fixed_eigenvalue(lam, tol: Tolerance) -> np.ndarray:
    return np.abs(np.asarray(lam) - 1.0) <= tol.eig_cluster


def is_peripheral_eigenvalue(lam, tol: Tolerance) -> np.ndarray:
    return np.abs(1.0 - np.abs(np.asarray(lam))) <= tol.eig_cluster


def eig_general(M, tol: Tolerance = DEFAULT_TOL) -> Spectrum:
    """Full non-Hermitian eigendecomposition with left and right vectors.

    The reconstruction residual ``||M r - lam r||`` is checked on the
    peripheral eigenvectors (``|lam| ~ 1``), which is where downstream code
    relies on it.
    """
    A = as_matrix(M, square=True)
    try:
        w, vl, vr = sla.eig(A, left=True, right=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(vr))):
        raise NumericError("eigendecomposition produced non-finite values")
    periph = is_peripheral_eigenvalue(w, tol)
    residual = 0.0
    if np.any(periph):
        R = vr[:, periph]
        residual = float(np.max(np.linalg.norm(A @ R - R * w[periph], axis=0)))
        if residual > tol.verify * max(1.0, np.linalg.norm(A, 2)):
            raise NumericError(
                f"peripheral eigenvector residual {residual:.3e} exceeds tolerance",
                residual=residual)
    return Spectrum(w, vr, vl, residual)


def invariant_subspace(M: np.ndarray, select: Callable[[complex], bool]):
    """Orthonormal basis of the invariant subspace for selected eigenvalues.

    Uses a reordered complex Schur form, so the basis stays well conditioned
    even when the selected eigenvalues are clustered or nearly defective.

    :return: ``(Q, T11, eigenvalues)`` where ``Q`` has orthonormal columns,
        ``M Q = Q T11`` and ``eigenvalues`` is the full spectrum.
    """
    try:
        T, Z, sdim = sla.schur(M, output="complex", sort=select)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericError(f"Schur decomposition failed: {exc}") from exc
    return Z[:, :sdim], T[:sdim, :sdim], np.diag(T).copy()


def herm_eig(H, tol: Tolerance = DEFAULT_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    A = as_matrix(H, square=True)
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    skew = float(np.max(np.abs(A - dag(A)))) if A.size else 0.0
    if skew > tol.verify * scale:
        raise ContractError(f"matrix is not Hermitian (residual {skew:.3e})", residual=skew)
    w, V = np.linalg.eigh((A + dag(A)) / 2)
    return w, V


def _psd_spectrum(H, tol: Tolerance):
    w, V = herm_eig(H, tol)
    top = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -tol.verify * max(1.0, top):
        raise ContractError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})",
                            residual=float(-w[0]))
    keep = w > tol.rank_cutoff * top if top > 0 else np.zeros(w.shape, bool)
    return w, V, keep


def support_isometry(H, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the support of a PSD matrix."""
    w, V, keep = _psd_spectrum(H, tol)
    return V[:, keep]


def support_projector(H, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    V = support_isometry(H, tol)
    return V @ dag(V)


def psd_inv_sqrt(H, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse square root; zero on the kernel."""
    w, V, keep = _psd_spectrum(H, tol)
    Vs = V[:, keep]
    return (Vs / np.sqrt(w[keep])) @ dag(Vs)


# --------------------------------------------------------------------------
# Operator subspaces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorSubspace:
    """A subspace of d x d operators with a Hilbert-Schmidt orthonormal basis.

    ``basis`` has shape ``(dim, d, d)``.
    """

    ambient_dim: int
    basis: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    def matrix(self) -> np.ndarray:
        """The basis as orthonormal columns of a ``d^2 x dim`` matrix."""
        d = self.ambient_dim
        return self.basis.transpose(0, 2, 1).reshape(self.dim, d * d).T

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return self.dim

    def coefficients(self, X) -> np.ndarray:
        return np.einsum("kij,ij->k", self.basis.conj(), np.asarray(X))

    def project(self, X) -> np.ndarray:
        return np.einsum("k,kij->ij", self.coefficients(X), self.basis)

    def distance_to(self, X) -> float:
        """Frobenius distance from ``X`` to the subspace."""
        X = np.asarray(X, dtype=complex)
        return float(np.linalg.norm(X - self.project(X)))

    def gram_error(self) -> float:
        Q = self.matrix()
        return float(np.max(np.abs(dag(Q) @ Q - np.eye(self.dim)))) if self.dim else 0.0

    @classmethod
    def from_columns(cls, Q: np.ndarray, d: int) -> "OperatorSubspace":
        k = Q.shape[1]
        basis = Q.T.reshape(k, d, d).transpose(0, 2, 1)
        return cls(d, np.ascontiguousarray(basis))

    @classmethod
    def empty(cls, d: int) -> "OperatorSubspace":
        return cls(d, np.zeros((0, d, d), dtype=complex))


def _fix_phase(Q: np.ndarray) -> np.ndarray:
    # Deterministic phase: largest-magnitude entry of each column real positive.
    idx = np.argmax(np.abs(Q) > np.max(np.abs(Q), axis=0) * (1 - 1e-8), axis=0)
    ph = Q[idx, np.arange(Q.shape[1])]
    ph = ph / np.where(np.abs(ph) > 0, np.abs(ph), 1.0)
    return Q / np.where(ph == 0, 1.0, ph)


def orthonormalize(vectors: Iterable, tol: Tolerance = DEFAULT_TOL,
                   d: int | None = None) -> OperatorSubspace:
    """Hilbert-Schmidt orthonormal basis for the span of ``vectors``.

    Linearly independent inputs are replaced by their closest orthonormal set
    (the polar factor), so an orthonormal input is returned unchanged.
    Dependent inputs are reduced to a rank-revealing SVD basis.
    """
    mats = [np.asarray(v, dtype=complex) for v in vectors]
    if not mats:
        if d is None:
            raise DimensionError("cannot infer ambient dimension of an empty set")
        return OperatorSubspace.empty(d)
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise DimensionError("all operators must share the same square shape")
    A = np.stack([vec(m) for m in mats], axis=1)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return OperatorSubspace.empty(d)
    rank = int(np.sum(s > tol.rank_cutoff * s[0]))
    if rank == A.shape[1]:
        Q = U @ Vh
    else:
        Q = _fix_phase(U[:, :rank])
    return OperatorSubspace.from_columns(Q, d)


def orthonormal_columns(A: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    return U[:, : int(np.sum(s > tol.rank_cutoff * s[0]))]


def null_space(A: np.ndarray, tol: Tolerance = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the kernel of ``A``.

    Singular values up to ``rank_cutoff * max(s_max, scale)`` count as zero;
    pass ``scale`` when ``A`` may vanish identically.
    """
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=complex)
    if A.shape[0] > 2 * n:
        # tall input: the triangular factor has the same kernel and singular values
        A = sla.qr(A, mode="r", check_finite=False)[0][:n]
    _, s, Vh = np.linalg.svd(A, full_matrices=A.shape[0] < n)
    top = max(float(s[0]) if s.size else 0.0, scale)
    rank = int(np.sum(s > tol.rank_cutoff * top)) if top > 0 else 0
    return dag(Vh[rank:])


def hermitian_basis(ops: Sequence[np.ndarray] | OperatorSubspace,
                    tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Real-orthonormal Hermitian basis of a ``*``-closed operator span."""
    mats = list(ops)
    if not mats:
        return np.zeros((0, 0, 0), dtype=complex)
    d = mats[0].shape[0]
    herm = []
    for m in mats:
        herm.append((m + dag(m)) / 2)
        herm.append((m - dag(m)) / 2j)
    real = np.stack([np.concatenate([h.real.ravel(), h.imag.ravel()]) for h in herm], axis=1)
    Q = orthonormal_columns(real, tol).real
    out = Q[: d * d].T + 1j * Q[d * d:].T
    out = out.reshape(-1, d, d)
    return (out + out.conj().transpose(0, 2, 1)) / 2


def principal_angles(A, B) -> np.ndarray:
    """Principal angles between two subspaces, largest first.

    ``A`` and ``B`` are :class:`OperatorSubspace` or matrices with orthonormal
    columns. Angles come from ``atan2(sin, cos)`` so small angles keep full
    precision.
    """
    Qa = A.matrix() if isinstance(A, OperatorSubspace) else np.asarray(A)
    Qb = B.matrix() if isinstance(B, OperatorSubspace) else np.asarray(B)
    if Qa.shape[1] < Qb.shape[1]:
        Qa, Qb = Qb, Qa
    k = Qb.shape[1]
    if k == 0:
        return np.zeros(0)
    cos = np.sort(np.clip(sla.svdvals(dag(Qa) @ Qb), 0, 1))
    sin = np.sort(np.clip(sla.svdvals(Qb - Qa @ (dag(Qa) @ Qb)), 0, 1))[::-1]
    return np.arctan2(sin[:k], cos[:k])


def subspace_distance(A, B) -> float:
    """Largest principal angle, or pi/2 if the dimensions differ."""
    da = A.dim if isinstance(A, OperatorSubspace) else np.asarray(A).shape[1]
    db = B.dim if isinstance(B, OperatorSubspace) else np.asarray(B).shape[1]
    if da != db:
        return float(np.pi / 2)
    if da == 0:
        return 0.0
    return float(np.max(principal_angles(A, B)))


# --------------------------------------------------------------------------
# Random matrices
# --------------------------------------------------------------------------


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    G = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    Q, _ = np.linalg.qr(G)
    return Q


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ dag(G)
    return rho / np.trace(rho).real
