"""Fixed points, rotating points and their joint support.

Both the Schroedinger-picture fixed space and the Heisenberg-picture one are
read off invariant subspaces of the superoperator: the right invariant
subspace for the eigenvalue 1 (or the whole unit circle) gives the states,
the left one gives the observables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import KrausMap, power_mean
from .errors import ContractError, NumericError, ParameterError
from .matcore import (
    DEFAULT_TOL,
    OperatorSubspace,
    Tolerance,
    dag,
    invariant_subspace,
    support_isometry,
    unvec,
    vec,
)


@dataclass(frozen=True)
class FixedSpaces:
    """Fixed points of ``E`` (``sigma``) and of its adjoint (``b_space``).

    ``einf`` is the superoperator of the idempotent projecting onto
    ``sigma`` along the rest of the spectrum. With ``mode == "rotating"`` the
    same fields describe the peripheral (unit-modulus) part instead.
    """

    sigma: OperatorSubspace
    b_space: OperatorSubspace
    einf: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    mode: str = "fixed"
    warnings: tuple = ()

    @property
    def dim(self) -> int:
        return self.sigma.dim

    def apply_einf(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        return unvec(self.einf @ vec(X), X.shape[0])


@dataclass(frozen=True)
class RotatingSpace:
    """Span of the eigenoperators of ``E`` with unit-modulus eigenvalues."""

    basis: OperatorSubspace
    eigenphases: np.ndarray
    eigenoperators: np.ndarray = field(repr=False)
    dual: OperatorSubspace = field(repr=False)
    projector: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    warnings: tuple = ()

    @property
    def dim(self) -> int:
        return self.basis.dim

    def as_fixed_spaces(self) -> FixedSpaces:
        """View the peripheral projector as the fixed-point data of itself."""
        return FixedSpaces(self.basis, self.dual, self.projector, self.eigenvalues,
                           mode="rotating", warnings=self.warnings)


@dataclass(frozen=True)
class SupportInfo:
    projector: np.ndarray = field(repr=False)
    rank: int
    max_rank_fixed_state: np.ndarray = field(repr=False)
    isometry: np.ndarray = field(repr=False)


def _superop(E) -> np.ndarray:
    return E.superoperator if isinstance(E, KrausMap) else np.asarray(E, dtype=complex)


def _near_misses(eigenvalues, distance, tol: Tolerance, what: str) -> tuple:
    amb = (distance > tol.eig_cluster) & (distance <= 10 * tol.eig_cluster)
    return tuple(f"eigenvalue {lam:.12g} lies {dist:.2e} from the {what}, just outside "
                 f"the clustering radius {tol.eig_cluster:g}"
                 for lam, dist in zip(eigenvalues[amb], distance[amb]))


def _spectral_split(S: np.ndarray, select, tol: Tolerance):
    R, T11, ev = invariant_subspace(S, select)
    L, _, _ = invariant_subspace(dag(S), lambda z: select(np.conj(z)))
    if R.shape[1] != L.shape[1]:
        raise NumericError(f"right and left invariant subspaces disagree in dimension "
                           f"({R.shape[1]} vs {L.shape[1]}); the spectrum is mis-clustered")
    if R.shape[1] == 0:
        raise NumericError("no eigenvalue found on the selected part of the spectrum; "
                           "the map is not trace preserving")
    G = dag(L) @ R
    if np.linalg.cond(G) > 1 / tol.rank_cutoff:
        raise NumericError("left and right invariant subspaces are nearly orthogonal")
    proj = R @ np.linalg.solve(G, dag(L))
    return R, L, T11, proj, ev


def fixed_spaces(E, tol: Tolerance = DEFAULT_TOL) -> FixedSpaces:
    """Eigenvalue-1 right and left eigenspaces of ``E`` plus the projector onto them.

    :param E: a :class:`~ipstruct.channel.KrausMap` or its superoperator.
    """
    S = _superop(E)
    d = int(round(np.sqrt(S.shape[0])))
    R, L, T11, einf, ev = _spectral_split(S, lambda z: abs(z - 1) <= tol.eig_cluster, tol)
    scale = max(1.0, np.linalg.norm(S, 2))
    # eigenvalue 1 must be semisimple: S R = R, not just an invariant subspace
    res_r = float(np.linalg.norm(S @ R - R, 2))
    res_l = float(np.linalg.norm(dag(S) @ L - L, 2))
    if max(res_r, res_l) > tol.verify * scale:
        raise NumericError(f"eigenvalue 1 is not semisimple within tolerance "
                           f"(residual {max(res_r, res_l):.3e})", residual=max(res_r, res_l))
    warns = _near_misses(ev, np.abs(ev - 1), tol, "fixed eigenvalue 1")
    return FixedSpaces(OperatorSubspace.from_columns(R, d), OperatorSubspace.from_columns(L, d),
                       einf, ev, mode="fixed", warnings=warns)


def rotating_space(E, tol: Tolerance = DEFAULT_TOL) -> RotatingSpace:
    """Span of unit-modulus eigenoperators, with their eigenvalues."""
    S = _superop(E)
    d = int(round(np.sqrt(S.shape[0])))
    select = lambda z: abs(1 - abs(z)) <= tol.eig_cluster  # noqa: E731
    R, L, T11, proj, ev = _spectral_split(S, select, tol)
    phases, V = np.linalg.eig(T11)
    X = R @ V
    X = X / np.linalg.norm(X, axis=0)
    scale = max(1.0, np.linalg.norm(S, 2))
    res = float(np.max(np.linalg.norm(S @ X - X * phases, axis=0)))
    if res > tol.verify * scale or np.linalg.cond(V) > 1 / tol.rank_cutoff:
        raise NumericError(f"peripheral spectrum is not diagonalizable within tolerance "
                           f"(residual {res:.3e})", residual=res)
    order = np.argsort(np.angle(phases), kind="stable")
    phases, X = phases[order], X[:, order]
    eigenops = X.T.reshape(-1, d, d).transpose(0, 2, 1)
    warns = _near_misses(ev, np.abs(1 - np.abs(ev)), tol, "unit circle")
    return RotatingSpace(OperatorSubspace.from_columns(R, d), phases, eigenops,
                         OperatorSubspace.from_columns(L, d), proj, ev, warns)


def spectral_gap(eigenvalues, tol: Tolerance = DEFAULT_TOL) -> float:
    """``1 - max |lam|`` over the eigenvalues off the unit circle (1 if there are none)."""
    lam = np.abs(np.asarray(eigenvalues))
    inner = lam[np.abs(1 - lam) > tol.eig_cluster]
    return float(1 - inner.max()) if inner.size else 1.0


def einf_cesaro_oracle(E, N: int) -> np.ndarray:
    """Cesaro mean of the first ``N + 1`` powers of ``E``.

    Converges to the spectral projector ``einf`` like ``O(1 / (N * gap))``
    when every non-peripheral eigenvalue has modulus at most ``1 - gap``.
    """
    if N < 1:
        raise ParameterError("N must be at least 1")
    return power_mean(E, N)


def _hermitian_part(X):
    return (X + dag(X)) / 2


def joint_support(fs: FixedSpaces, E=None, tol: Tolerance = DEFAULT_TOL,
                  union_fallback: bool = False) -> SupportInfo:
    """Smallest subspace supporting every fixed state.

    The support of ``einf(I/d)`` contains the support of every fixed state,
    since any PSD ``sigma`` in the range of ``einf`` satisfies
    ``sigma = einf(sigma) <= c einf(I)``. With ``union_fallback`` the support
    is instead taken over the images of a full matrix-unit basis.
    """
    d = fs.sigma.ambient_dim
    rho = fs.apply_einf(np.eye(d) / d)
    herm_err = float(np.max(np.abs(rho - dag(rho))))
    if herm_err > tol.verify:
        raise NumericError(f"einf(I/d) is not Hermitian (residual {herm_err:.3e})",
                           residual=herm_err)
    rho = _hermitian_part(rho)
    try:
        if union_fallback:
            acc = np.zeros((d, d), dtype=complex)
            for i in range(d):
                for j in range(d):
                    unit = np.zeros((d, d), dtype=complex)
                    unit[i, j] = 1
                    Y = fs.apply_einf(unit)
                    acc += Y @ dag(Y) + dag(Y) @ Y
            V = support_isometry(_hermitian_part(acc), tol)
        else:
            V = support_isometry(rho, tol)
        # PSD check on the state itself
        support_isometry(rho, tol)
    except ContractError as exc:
        raise NumericError(f"einf(I/d) is not positive semidefinite: {exc}",
                           residual=exc.residual) from exc
    return SupportInfo(V @ dag(V), V.shape[1], rho, V)
