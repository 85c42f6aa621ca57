"""Quantum processes in Kraus form, their matrix representations and
reference constructions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ContractError, DimensionError, ParameterError
from .matcore import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    dag,
    random_density,
    random_isometry,
    random_unitary,
)


class KrausMap:
    """A completely positive map ``X -> sum_i K_i X K_i^dag``.

    No trace condition is imposed; :class:`Channel` adds it. Instances are
    immutable and the matrix representations are computed once on demand.
    """

    def __init__(self, kraus: np.ndarray):
        kraus = np.array(kraus, dtype=complex)
        kraus.setflags(write=False)
        self._kraus = kraus

    @property
    def kraus(self) -> np.ndarray:
        """Kraus operators stacked as an array of shape ``(k, d, d)``."""
        return self._kraus

    @property
    def dim(self) -> int:
        return int(self._kraus.shape[1])

    @property
    def num_kraus(self) -> int:
        return int(self._kraus.shape[0])

    @cached_property
    def superoperator(self) -> np.ndarray:
        K = self._kraus
        d = self.dim
        # S[(i,j),(l,m)] = sum_k conj(K)[k,i,l] K[k,j,m], i.e. sum_k kron(conj K_k, K_k)
        S = np.einsum("kil,kjm->ijlm", K.conj(), K).reshape(d * d, d * d)
        S.setflags(write=False)
        return S

    @cached_property
    def choi(self) -> np.ndarray:
        V = self._kraus.transpose(0, 2, 1).reshape(self.num_kraus, -1).T
        J = V @ dag(V)
        J.setflags(write=False)
        return J

    def __call__(self, X) -> np.ndarray:
        return self.apply(X)

    def apply(self, X) -> np.ndarray:
        X = as_matrix(X, square=True)
        if X.shape[0] != self.dim:
            raise DimensionError(f"operator of dimension {X.shape[0]} applied to a map on "
                                 f"dimension {self.dim}")
        K = self._kraus
        return np.einsum("kij,jl,kml->im", K, X, K.conj())

    def adjoint(self) -> "KrausMap":
        return KrausMap(self._kraus.conj().transpose(0, 2, 1))

    def tp_residual(self) -> float:
        K = self._kraus
        return float(np.linalg.norm(np.einsum("kji,kjl->il", K.conj(), K) - np.eye(self.dim), 2))

    def unital_residual(self) -> float:
        K = self._kraus
        return float(np.linalg.norm(np.einsum("kij,klj->il", K, K.conj()) - np.eye(self.dim), 2))

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, num_kraus={self.num_kraus})"


class Channel(KrausMap):
    """A trace-preserving :class:`KrausMap`; use :func:`from_kraus` to build one."""

    def __init__(self, kraus, tol: Tolerance = DEFAULT_TOL, label: str = ""):
        super().__init__(kraus)
        self.label = label
        res = self.tp_residual()
        if res > tol.verify:
            raise ContractError(f"Kraus operators are not trace preserving "
                                f"(residual ||sum K^dag K - I|| = {res:.3e})", residual=res)

    def report(self, tol: Tolerance = DEFAULT_TOL) -> "ChannelReport":
        tp = self.tp_residual()
        un = self.unital_residual()
        min_choi = float(np.linalg.eigvalsh(self.choi)[0])
        return ChannelReport(dim=self.dim, is_tp=tp <= tol.verify, tp_residual=tp,
                             is_unital=un <= tol.verify, unital_residual=un,
                             is_cp=min_choi >= -tol.verify, min_choi_eigenvalue=min_choi)


@dataclass(frozen=True)
class ChannelReport:
    dim: int
    is_tp: bool
    tp_residual: float
    is_unital: bool
    unital_residual: float
    is_cp: bool
    min_choi_eigenvalue: float


def from_kraus(ops: Sequence, tol: Tolerance = DEFAULT_TOL, label: str = "") -> Channel:
    """Build a validated channel from a non-empty list of square Kraus operators."""
    ops = list(ops)
    if not ops:
        raise DimensionError("at least one Kraus operator is required")
    mats = [as_matrix(K, square=True, name="Kraus operator") for K in ops]
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionError("Kraus operators must all have the same dimension")
    return Channel(np.stack(mats), tol=tol, label=label)


def to_superoperator(E: KrausMap) -> np.ndarray:
    """``S`` with ``S vec(X) = vec(E(X))`` under column stacking."""
    return E.superoperator


def to_choi(E: KrausMap) -> np.ndarray:
    return E.choi


def apply(E: KrausMap, X) -> np.ndarray:
    return E.apply(X)


def adjoint(E: KrausMap) -> KrausMap:
    """Heisenberg-picture map ``X -> sum_i K_i^dag X K_i``."""
    return E.adjoint()


def compose(R: Channel, E: Channel, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """The channel ``R o E`` (``E`` first) with Kraus operators ``R_j K_i``."""
    if R.dim != E.dim:
        raise DimensionError(f"cannot compose channels on dimensions {R.dim} and {E.dim}")
    K = np.einsum("aij,bjk->abik", R.kraus, E.kraus).reshape(-1, E.dim, E.dim)
    return Channel(K, tol=tol)


def power_mean(E: KrausMap | np.ndarray, N: int) -> np.ndarray:
    """Superoperator of the Cesaro mean ``(1/(N+1)) sum_{n=0}^{N} E^n``.

    The partial sum is built by binary doubling, ``O(log N)`` products.
    """
    if N < 0:
        raise ParameterError("N must be non-negative")
    S = E.superoperator if isinstance(E, KrausMap) else np.asarray(E, dtype=complex)
    n = S.shape[0]
    acc = np.zeros_like(S)      # sum_{k<m} S^k
    pw = np.eye(n, dtype=S.dtype)  # S^m
    for bit in bin(N + 1)[2:]:
        acc = acc + pw @ acc
        pw = pw @ pw
        if bit == "1":
            acc = acc + pw
            pw = pw @ S
    return acc / (N + 1)


def matrix_power_map(E: KrausMap | np.ndarray, n: int) -> np.ndarray:
    S = E.superoperator if isinstance(E, KrausMap) else np.asarray(E)
    return np.linalg.matrix_power(S, n)


# --------------------------------------------------------------------------
# Reference channels
# --------------------------------------------------------------------------


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def outer(i: int, j: int, d: int) -> np.ndarray:
    return np.outer(ket(i, d), ket(j, d))


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def paper_example_factors():
    """Kraus lists of the qutrit and qubit factors of the reference example."""
    a = [outer(0, 0, 3) + outer(1, 1, 3),
         outer(0, 2, 3) / np.sqrt(2),
         outer(1, 2, 3) / np.sqrt(2)]
    b = [outer(0, 0, 2) / 2,
         outer(0, 1, 2) / 2,
         np.sqrt(3) / 2 * outer(1, 0, 2),
         np.sqrt(3) / 2 * outer(1, 1, 2)]
    return a, b


def make_paper_example() -> Channel:
    """The 6-dimensional product channel on a qutrit (A) tensor a qubit (B).

    On A it leaves ``span{|0>,|1>}`` alone and sends ``|2>`` to an equal
    mixture of ``|0>`` and ``|1>``; on B it resets every input to
    ``diag(1/4, 3/4)``. The twelve product Kraus operators are kept as listed,
    without minimization, ordered ``kron(K_A, K_B)``.
    """
    a, b = paper_example_factors()
    return from_kraus([np.kron(ka, kb) for ka in a for kb in b], label="paper_example")


def unitary_channel(U) -> Channel:
    return from_kraus([as_matrix(U, square=True)])


def identity_channel(d: int) -> Channel:
    return from_kraus([np.eye(d)], label=f"identity_{d}")


def dephasing_channel(d: int) -> Channel:
    return from_kraus([outer(i, i, d) for i in range(d)], label=f"dephasing_{d}")


def depolarizing_qubit() -> Channel:
    """Completely depolarizing qubit channel, Kraus ``{I, X, Y, Z} / 2``."""
    return from_kraus([P / 2 for P in PAULI.values()], label="depolarizing_qubit")


def amplitude_damping(gamma: float) -> Channel:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return from_kraus([k0, k1], label=f"amplitude_damping_{gamma}")


def bitflip_three_qubit(p_flip: float = 0.1) -> Channel:
    """Independent-style bit flip with at most one error on three qubits.

    Kraus ``sqrt(1 - 3p) I`` and ``sqrt(p) X_j`` for ``j = 1, 2, 3``.
    """
    if not 0 <= p_flip <= 1 / 3:
        raise ParameterError("p_flip must lie in [0, 1/3]")
    I, X = PAULI["I"], PAULI["X"]
    ops = [np.sqrt(1 - 3 * p_flip) * np.eye(8)]
    for j in range(3):
        f = [I, I, I]
        f[j] = X
        ops.append(np.sqrt(p_flip) * np.kron(np.kron(f[0], f[1]), f[2]))
    return from_kraus(ops, label="bitflip_three_qubit")


def random_channel(d: int, rank: int, rng: np.random.Generator) -> Channel:
    """Random channel from a Haar-random Stinespring isometry."""
    V = random_isometry(rank * d, d, rng)
    return from_kraus(V.reshape(rank, d, d))


def random_unital_channel(unitaries: Sequence[np.ndarray], probs) -> Channel:
    probs = np.asarray(probs, dtype=float)
    return from_kraus([np.sqrt(p) * U for p, U in zip(probs, unitaries)])


# --------------------------------------------------------------------------
# Planted-structure generator
# --------------------------------------------------------------------------


def canonical_shape(shape) -> list[tuple[int, int]]:
    return sorted(((int(a), int(b)) for a, b in shape), key=lambda t: (-t[0], -t[1]))


@dataclass(frozen=True)
class PlantedStructure:
    """Ground truth returned by :func:`make_planted`, blocks in canonical order."""

    shape: list
    support: np.ndarray = field(repr=False)
    tau_states: list = field(repr=False)
    block_isometries: list = field(repr=False)
    extra_dim: int = 0
    gap: float = 1.0

    @property
    def support_rank(self) -> int:
        return sum(a * b for a, b in self.shape)


def _block_noise_kraus(n: int, weight: float, rng):
    """Kraus operators of ``(1-w) U.U^dag + w tr(.) reset`` on ``n`` dimensions,
    and the unique fixed state of that map."""
    if n == 1:
        return [np.eye(1, dtype=complex)], np.ones((1, 1), dtype=complex)
    reset = 0.5 * random_density(n, rng) + 0.5 * np.eye(n) / n
    p, v = np.linalg.eigh(reset)
    U = random_unitary(n, rng)
    ops = [np.sqrt(1 - weight) * U]
    for a in range(n):
        for j in range(n):
            ops.append(np.sqrt(weight * p[a]) * np.outer(v[:, a], ket(j, n)))
    # unique fixed state: tau = (1-w) U tau U^dag + w reset
    lhs = np.eye(n * n) - (1 - weight) * np.kron(U.conj(), U)
    tau = np.linalg.solve(lhs, weight * reset.reshape(-1, order="F")).reshape(n, n, order="F")
    return ops, (tau + dag(tau)) / 2


def make_planted(shape, extra_dim: int, seed: int, max_dim: int = 32,
                 tol: Tolerance = DEFAULT_TOL):
    """Random channel with a prescribed fixed-point algebra.

    The space is ``(+)_k C^{d_k} (x) C^{n_k} (+) C^m``. Block ``k`` evolves as
    ``id (x) E_k`` where ``E_k`` mixes a random unitary with a reset to a
    random full-rank state, so it has a unique full-rank fixed state ``tau_k``; coherences between blocks are removed;
    ``C^m`` keeps part of its population under a random unitary and leaks the
    rest into the blocks. Everything is conjugated by a seeded Haar unitary.
    Mixing and leakage weights lie in ``[0.3, 0.6]``, so every non-peripheral
    eigenvalue has modulus at most ``0.7``.

    :return: ``(channel, PlantedStructure)``
    """
    shape = [(int(a), int(b)) for a, b in shape]
    if not shape or any(a < 1 or b < 1 for a, b in shape):
        raise ParameterError(f"invalid shape {shape}")
    if extra_dim < 0:
        raise ParameterError("extra_dim must be non-negative")
    block_dim = sum(a * b for a, b in shape)
    D = block_dim + extra_dim
    if D > max_dim:
        raise ParameterError(f"total dimension {D} exceeds the cap {max_dim}")
    rng = np.random.default_rng(seed)

    ops = []
    blocks = []
    gap = 1.0
    offset = 0
    for dk, nk in shape:
        w = rng.uniform(0.3, 0.6)
        noise, tau = _block_noise_kraus(nk, w, rng)
        if nk > 1:
            gap = min(gap, w)
        size = dk * nk
        for K in noise:
            full = np.zeros((D, D), dtype=complex)
            full[offset:offset + size, offset:offset + size] = np.kron(np.eye(dk), K)
            ops.append(full)
        blocks.append(((dk, nk), offset, tau))
        offset += size

    if extra_dim:
        leak = rng.uniform(0.3, 0.6)
        gap = min(gap, leak)
        keep = np.zeros((D, D), dtype=complex)
        keep[block_dim:, block_dim:] = np.sqrt(1 - leak) * random_unitary(extra_dim, rng)
        ops.append(keep)
        rank = 2
        V = random_isometry(rank * block_dim, extra_dim, rng)
        for j in range(rank):
            full = np.zeros((D, D), dtype=complex)
            full[:block_dim, block_dim:] = np.sqrt(leak) * V[j * block_dim:(j + 1) * block_dim]
            ops.append(full)

    Q = random_unitary(D, rng)
    channel = from_kraus([Q @ K @ dag(Q) for K in ops], tol=tol,
                         label=f"planted:{shape}:m={extra_dim}:seed={seed}")

    order = sorted(range(len(blocks)), key=lambda i: (-blocks[i][0][0], -blocks[i][0][1]))
    isos, taus, canon = [], [], []
    for i in order:
        (dk, nk), off, tau = blocks[i]
        isos.append(Q[:, off:off + dk * nk])
        taus.append(tau)
        canon.append((dk, nk))
    Pb = Q[:, :block_dim] @ dag(Q[:, :block_dim])
    truth = PlantedStructure(shape=canon, support=Pb, tau_states=taus,
                             block_isometries=isos, extra_dim=extra_dim, gap=gap)
    return channel, truth
