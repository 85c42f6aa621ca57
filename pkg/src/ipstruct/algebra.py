"""Block structure of the algebra that the fixed points are isometric to.

Compressing the Heisenberg fixed space onto the joint support of the fixed
states yields a finite-dimensional ``*``-algebra, unitarily equivalent to
``(+)_k M_{d_k} (x) I_{n_k}``. The blocks are found from a generic element
of the center; each block is then split into its ``d_k`` and ``n_k`` tensor
factors with a generic element of the block itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, StructuralError
from .matcore import (
    DEFAULT_TOL,
    OperatorSubspace,
    Tolerance,
    dag,
    hermitian_basis,
    null_space,
    orthonormalize,
    vec,
)
from .spectral import FixedSpaces, SupportInfo

MAX_RESAMPLES = 8


@dataclass(frozen=True)
class AlgebraStructure:
    """Shape ``[(d_k, n_k), ...]`` plus the data realizing it inside ``H``.

    ``block_isometries[k]`` maps ``C^{d_k} (x) C^{n_k}`` (kron ordering) into
    ``H``; in those coordinates the algebra is ``M_{d_k} (x) I_{n_k}`` and the
    fixed states are ``M (x) tau_states[k]``.
    """

    shape: list
    block_isometries: list = field(repr=False)
    tau_states: list = field(repr=False)
    support: np.ndarray = field(repr=False)
    algebra: OperatorSubspace = field(repr=False)
    center_dim: int = 0
    closure_residual: float = 0.0

    @property
    def dim(self) -> int:
        return sum(a * a for a, _ in self.shape)

    @property
    def support_rank(self) -> int:
        return sum(a * b for a, b in self.shape)


@dataclass(frozen=True)
class EchoMap:
    """Linear map sending the support part of a fixed observable to its
    part on the orthogonal complement of the support.

    ``matrix`` acts on column-stacked ``r x r`` operators and returns
    column-stacked ``(d - r) x (d - r)`` ones.
    """

    domain_dim: int
    codomain_dim: int
    matrix: np.ndarray = field(repr=False)
    support_isometry: np.ndarray = field(repr=False)
    complement_isometry: np.ndarray = field(repr=False)
    corner_residual: float = 0.0
    multivalued_residual: float = 0.0

    def __call__(self, A) -> np.ndarray:
        c = self.codomain_dim
        return (self.matrix @ vec(np.asarray(A, dtype=complex))).reshape(c, c, order="F")

    def extend(self, A) -> np.ndarray:
        """The full observable ``A (+) F(A)`` on ``H``."""
        V, W = self.support_isometry, self.complement_isometry
        out = V @ np.asarray(A) @ dag(V)
        if self.codomain_dim:
            out = out + W @ self(A) @ dag(W)
        return out


def commutant(ops: Sequence, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """All ``X`` with ``X K = K X`` for every ``K`` in ``ops``."""
    mats = [np.asarray(K, dtype=complex) for K in ops]
    if not mats:
        raise DimensionError("commutant of an empty set is undefined here")
    d = mats[0].shape[0]
    if any(K.shape != (d, d) for K in mats):
        raise DimensionError("operators must be square and share a dimension")
    eye = np.eye(d)
    # vec(XK - KX) = (K^T kron I - I kron K) vec(X)
    A = np.concatenate([np.kron(K.T, eye) - np.kron(eye, K) for K in mats], axis=0)
    scale = max(np.linalg.norm(K, 2) for K in mats)
    return OperatorSubspace.from_columns(null_space(A, tol, scale=scale), d)


def _coeffs(basis: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.einsum("kij,...ij->...k", basis.conj(), X)


def _closure_residual(basis: np.ndarray) -> float:
    worst = 0.0
    adj = basis.conj().transpose(0, 2, 1)
    worst = float(np.max(np.linalg.norm(adj - np.einsum("mk,kij->mij", _coeffs(basis, adj), basis),
                                        axis=(1, 2))))
    for a in basis:
        prods = a @ basis
        resid = prods - np.einsum("mk,kij->mij", _coeffs(basis, prods), basis)
        worst = max(worst, float(np.max(np.linalg.norm(resid, axis=(1, 2)))))
    return worst


def _split_clusters(w: np.ndarray, count: int, tol: Tolerance):
    """Split ascending ``w`` into ``count`` groups at the largest gaps.

    Returns the groups as index arrays, or ``None`` when the split is not
    clean (some gap between groups is within ``10 * eig_cluster`` or a group is
    wider than ``eig_cluster``).
    """
    scale = max(1.0, float(np.max(np.abs(w))))
    if count == 1:
        cuts = np.array([], dtype=int)
    else:
        gaps = np.diff(w)
        cuts = np.sort(np.argsort(gaps)[::-1][:count - 1])
        if np.min(gaps[cuts]) <= 10 * tol.eig_cluster * scale:
            return None
    groups = np.split(np.arange(w.size), cuts + 1)
    for g in groups:
        if w[g[-1]] - w[g[0]] > tol.eig_cluster * scale:
            return None
    return groups


def _generic_hermitian(herm: np.ndarray, rng) -> np.ndarray:
    h = np.einsum("k,kij->ij", rng.standard_normal(herm.shape[0]), herm)
    return h / np.linalg.norm(h, 2)


def _center(basis: np.ndarray, tol: Tolerance, rng) -> np.ndarray:
    m, r, _ = basis.shape
    if m <= 32:
        gens = basis
    else:
        # a few generic elements generate the whole algebra; the result is re-verified
        g = rng.standard_normal((6, m)) + 1j * rng.standard_normal((6, m))
        gens = np.einsum("gk,kij->gij", g, basis)
    rows = []
    for g in gens:
        comm = basis @ g - g @ basis  # [a_j, g]
        rows.append(comm.transpose(0, 2, 1).reshape(m, r * r).T)
    N = null_space(np.concatenate(rows, axis=0), tol,
                   scale=float(np.max(np.linalg.norm(gens, axis=(1, 2)))))
    Z = np.einsum("kz,kij->zij", N, basis)
    for z in Z:
        res = float(np.max(np.linalg.norm(z @ basis - basis @ z, axis=(1, 2))))
        if res > 10 * tol.verify:
            raise StructuralError(f"center element fails to commute with the algebra "
                                  f"(residual {res:.3e})", residual=res)
    return Z


def _central_projections(Z: np.ndarray, tol: Tolerance, rng) -> list[np.ndarray]:
    """Isometries onto the ranges of the minimal central projections."""
    herm = hermitian_basis(Z, tol)
    count = herm.shape[0]
    if count != Z.shape[0]:
        raise StructuralError("center is not closed under adjoint")
    for _ in range(MAX_RESAMPLES):
        h = _generic_hermitian(herm, rng)
        w, V = np.linalg.eigh(h)
        groups = _split_clusters(w, count, tol)
        if groups is not None:
            return [V[:, g] for g in groups]
    raise StructuralError(f"could not separate {count} central blocks after "
                          f"{MAX_RESAMPLES} random draws")


def _factorize_block(block_basis: np.ndarray, d_k: int, n_k: int, tol: Tolerance, rng):
    """Unitary ``F`` on the block such that ``F^dag a F = A (x) I_{n_k}``."""
    size = d_k * n_k
    if d_k == 1:
        return np.eye(size, dtype=complex)
    herm = hermitian_basis(block_basis, tol)
    for _ in range(MAX_RESAMPLES):
        h = _generic_hermitian(herm, rng)
        w, V = np.linalg.eigh(h)
        groups = _split_clusters(w, d_k, tol)
        if groups is None or any(len(g) != n_k for g in groups):
            continue
        spaces = [V[:, g] for g in groups]
        coeff = rng.standard_normal(block_basis.shape[0]) \
            + 1j * rng.standard_normal(block_basis.shape[0])
        g_el = np.einsum("k,kij->ij", coeff, block_basis)
        cols = [spaces[0]]
        ok = True
        for Ei in spaces[1:]:
            U, s, Vh = np.linalg.svd(dag(Ei) @ g_el @ spaces[0])
            # must be a nonzero multiple of a unitary
            if s[-1] < 1e-3 * np.linalg.norm(g_el, 2) or s[0] - s[-1] > 1e3 * tol.verify * s[0]:
                ok = False
                break
            cols.append(Ei @ (U @ Vh))
        if ok:
            return np.concatenate(cols, axis=1)
    raise StructuralError(f"could not split a block of size {size} into "
                          f"{d_k} x {n_k} tensor factors")


def _ptrace_second(X: np.ndarray, a: int, b: int) -> np.ndarray:
    return np.einsum("ijkj->ik", X.reshape(a, b, a, b))


def _ptrace_first(X: np.ndarray, a: int, b: int) -> np.ndarray:
    return np.einsum("ijil->jl", X.reshape(a, b, a, b))


def structure_from_fixed_spaces(fs: FixedSpaces, sup: SupportInfo, E=None,
                                tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> AlgebraStructure:
    """Recover the shape, block isometries and cofactor states.

    :param fs: fixed (or rotating) spaces of the channel.
    :param sup: joint support computed from ``fs``.
    :param E: unused except for API symmetry with the analysis pipeline.
    :param seed: seeds the generic elements drawn from the center and blocks.
    :raises StructuralError: if the compressed dual space is not an algebra,
        or a dimension count is not an exact integer identity.
    """
    rng = np.random.default_rng(seed)
    Vp = sup.isometry
    r = Vp.shape[1]
    compressed = [dag(Vp) @ Y @ Vp for Y in fs.b_space]
    alg = orthonormalize(compressed, tol, d=r)
    if alg.dim != fs.dim:
        raise StructuralError(f"compressing the dual fixed space onto the support gives "
                              f"dimension {alg.dim}, expected {fs.dim}")
    basis = alg.basis
    closure = _closure_residual(basis)
    if closure > 10 * tol.verify:
        raise StructuralError(f"compressed fixed observables are not closed under product "
                              f"and adjoint (residual {closure:.3e})", residual=closure)

    Z = _center(basis, tol, rng)
    blocks = []
    for W in _central_projections(Z, tol, rng):
        m_k = W.shape[1]
        local = np.stack([dag(W) @ a @ W for a in basis])
        local_alg = orthonormalize(local, tol, d=m_k)
        d_k = int(round(np.sqrt(local_alg.dim)))
        if d_k * d_k != local_alg.dim or m_k % d_k:
            raise StructuralError(f"block of size {m_k} carries an algebra of dimension "
                                  f"{local_alg.dim}, which is not of the form d^2 with d | {m_k}")
        n_k = m_k // d_k
        F = _factorize_block(local_alg.basis, d_k, n_k, tol, rng)
        rotated = dag(F) @ local_alg.basis @ F
        A = np.stack([_ptrace_second(b, d_k, n_k) / n_k for b in rotated])
        resid = float(np.max(np.linalg.norm(
            rotated - np.stack([np.kron(a, np.eye(n_k)) for a in A]), axis=(1, 2))))
        if resid > 10 * tol.verify:
            raise StructuralError(f"block algebra is not of the form M_{d_k} (x) I_{n_k} "
                                  f"(residual {resid:.3e})", residual=resid)
        iso = Vp @ W @ F
        rho = dag(iso) @ sup.max_rank_fixed_state @ iso
        tau = _ptrace_first(rho, d_k, n_k)
        tau = (tau + dag(tau)) / 2
        tau = tau / np.trace(tau).real
        M = _ptrace_second(rho, d_k, n_k)
        resid = float(np.linalg.norm(rho - np.kron(M, tau)))
        if resid > 10 * tol.verify:
            raise StructuralError(f"fixed state does not factor as M (x) tau on a block "
                                  f"(residual {resid:.3e})", residual=resid)
        blocks.append(((d_k, n_k), iso, tau))

    if sum(a * a for (a, _), _, _ in blocks) != fs.dim:
        raise StructuralError("block dimensions do not add up to the algebra dimension")
    if sum(a * b for (a, b), _, _ in blocks) != r:
        raise StructuralError("block sizes do not add up to the support rank")
    blocks.sort(key=lambda t: (-t[0][0], -t[0][1]))
    return AlgebraStructure(
        shape=[s for s, _, _ in blocks],
        block_isometries=[iso for _, iso, _ in blocks],
        tau_states=[tau for _, _, tau in blocks],
        support=sup.projector,
        algebra=alg,
        center_dim=Z.shape[0],
        closure_residual=closure,
    )


def fixed_state_form(structure: AlgebraStructure, M_blocks: Sequence) -> np.ndarray:
    """Assemble ``sum_k V_k (M_k (x) tau_k) V_k^dag``."""
    if len(M_blocks) != len(structure.shape):
        raise DimensionError(f"expected {len(structure.shape)} blocks, got {len(M_blocks)}")
    d = structure.support.shape[0]
    out = np.zeros((d, d), dtype=complex)
    for (d_k, _), V, tau, M in zip(structure.shape, structure.block_isometries,
                                   structure.tau_states, M_blocks):
        M = np.asarray(M, dtype=complex)
        if M.shape != (d_k, d_k):
            raise DimensionError(f"block matrix must be {d_k}x{d_k}, got {M.shape}")
        out += V @ np.kron(M, tau) @ dag(V)
    return out


def echo_map(fs: FixedSpaces, sup: SupportInfo, tol: Tolerance = DEFAULT_TOL) -> EchoMap:
    """Fit the linear map ``F`` with every fixed observable equal to ``A (+) F(A)``.

    :raises StructuralError: if fixed observables have weight between the
        support and its complement, or ``F`` would be multivalued.
    """
    Vp = sup.isometry
    d, r = Vp.shape
    c = d - r
    Wc = null_space(dag(Vp), tol) if c else np.zeros((d, 0), dtype=complex)
    if Wc.shape[1] != c:
        raise StructuralError("could not complete the support to an orthonormal basis")
    Ys = fs.b_space.basis
    A = np.stack([dag(Vp) @ Y @ Vp for Y in Ys])
    Fs = np.stack([dag(Wc) @ Y @ Wc for Y in Ys]) if c else np.zeros((len(Ys), 0, 0))
    corner = 0.0
    if c:
        corner = float(max(np.max(np.linalg.norm(dag(Vp) @ Ys @ Wc, axis=(1, 2))),
                           np.max(np.linalg.norm(dag(Wc) @ Ys @ Vp, axis=(1, 2)))))
    if corner > tol.verify:
        raise StructuralError(f"fixed observables couple the support to its complement "
                              f"(residual {corner:.3e})", residual=corner)
    Amat = A.transpose(0, 2, 1).reshape(len(Ys), r * r).T
    Fmat = Fs.transpose(0, 2, 1).reshape(len(Ys), c * c).T
    kernel = null_space(Amat, tol)
    multi = float(np.linalg.norm(Fmat @ kernel)) if kernel.size and c else 0.0
    if multi > tol.verify:
        raise StructuralError(f"echo map is multivalued (residual {multi:.3e})", residual=multi)
    T = Fmat @ np.linalg.pinv(Amat, rcond=tol.rank_cutoff) if c else np.zeros((0, r * r))
    return EchoMap(r, c, T, Vp, Wc, corner, multi)
