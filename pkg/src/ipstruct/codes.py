"""Distinguishability, preservation checks and the transpose recovery channel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    AlgebraStructure,
    EchoMap,
    commutant,
    echo_map,
    structure_from_fixed_spaces,
)
from .channel import Channel, ChannelReport, KrausMap, compose
from .errors import ContractError, IPSError, ParameterError
from .matcore import (
    DEFAULT_TOL,
    OperatorSubspace,
    Tolerance,
    as_matrix,
    dag,
    hermitian_basis,
    orthonormalize,
    psd_inv_sqrt,
    support_isometry,
    support_projector,
    trace_norm,
    unvec,
    vec,
)
from .spectral import (
    FixedSpaces,
    RotatingSpace,
    SupportInfo,
    fixed_spaces,
    joint_support,
    rotating_space,
    spectral_gap,
)

X_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
N_RANDOM_X = 16
UNITARY_POWERS = (1, 2, 3, 5, 8)
MAX_SAMPLE_PAIRS = 64


def _check_state(rho, tol: Tolerance, name: str = "state") -> np.ndarray:
    rho = as_matrix(rho, square=True, name=name)
    tr = np.trace(rho)
    if abs(tr - 1) > tol.verify:
        raise ContractError(f"{name} does not have unit trace (trace {tr:.6g})",
                            residual=float(abs(tr - 1)))
    support_isometry(rho, tol)  # raises if not Hermitian PSD
    return (rho + dag(rho)) / 2


def helstrom(rho, rho2, q: float = 0.5, tol: Tolerance = DEFAULT_TOL) -> float:
    """Optimal probability of telling ``rho`` (prior ``q``) from ``rho2``."""
    if not 0 <= q <= 1:
        raise ParameterError(f"prior q must lie in [0, 1], got {q}")
    rho = _check_state(rho, tol, "rho")
    rho2 = _check_state(rho2, tol, "rho2")
    return 0.5 * (1 + trace_norm(q * rho - (1 - q) * rho2))


# --------------------------------------------------------------------------
# Codes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Code:
    """A set of encoded states, closed to an adjoint-closed operator subspace.

    ``sample_states`` are PSD trace-one members of the span used to exercise
    the operational checks; ``support`` projects onto their joint support.
    """

    space: OperatorSubspace
    support: np.ndarray = field(repr=False)
    sample_states: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return self.space.ambient_dim

    def random_states(self, count: int, rng: np.random.Generator,
                      tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
        """States in the real span of the code.

        Each is a random mixture of the sample states, pushed along a random
        Hermitian direction of the span as far as positivity allows.
        """
        samples = np.stack(self.sample_states)
        herm = hermitian_basis(self.space, tol)
        out = []
        for _ in range(count):
            w = rng.dirichlet(np.ones(len(samples)))
            base = np.einsum("k,kij->ij", w, samples)
            V = support_isometry(base, tol)
            h = np.einsum("k,kij->ij", rng.standard_normal(herm.shape[0]), herm)
            h = h - np.trace(h).real * base
            outside = np.linalg.norm(h - V @ (dag(V) @ h @ V) @ dag(V))
            if V.shape[1] and outside <= tol.verify * max(1.0, np.linalg.norm(h)):
                b = dag(V) @ base @ V
                lam, U = np.linalg.eigh(b)
                isq = U / np.sqrt(lam) @ dag(U)
                hmin = np.linalg.eigvalsh(isq @ (dag(V) @ h @ V) @ isq)
                # base + t h >= 0  iff  1 + t * eig >= 0
                tmax = 1 / max(-hmin[0], 1e-300) if hmin[0] < 0 else 1.0
                rho = base + rng.uniform(0.0, 0.9) * min(tmax, 1e6) * h
            else:
                rho = base
            rho = (rho + dag(rho)) / 2
            out.append(rho / np.trace(rho).real)
        return out


def make_code(basis: Sequence, samples: Sequence | None = None,
              tol: Tolerance = DEFAULT_TOL) -> Code:
    """Build a :class:`Code` from spanning operators and optional sample states.

    Without ``samples``, the Hermitian PSD basis elements (trace-normalized)
    serve as samples.
    """
    mats = [as_matrix(b, square=True, name="code basis element") for b in basis]
    if not mats:
        raise ContractError("a code needs at least one basis element")
    d = mats[0].shape[0]
    if samples is None:
        samples = []
        for b in mats:
            if np.allclose(b, dag(b), atol=tol.verify) and np.trace(b).real > tol.verify:
                w = np.linalg.eigvalsh((b + dag(b)) / 2)
                if w[0] >= -tol.verify * max(1.0, w[-1]):
                    samples.append(b / np.trace(b).real)
        if not samples:
            raise ContractError("no sample states given and no basis element is a state")
    samples = [_check_state(s, tol, "sample state") for s in samples]
    span = orthonormalize(mats + [dag(m) for m in mats] + samples, tol, d=d)
    acc = np.zeros((d, d), dtype=complex)
    for m in list(span):
        acc += m @ dag(m) + dag(m) @ m
    P = support_projector((acc + dag(acc)) / 2, tol)
    for s in samples:
        if np.linalg.norm(s - P @ s @ P) > tol.verify:
            raise ContractError("sample state is not supported on the code support")
    return Code(span, P, tuple(samples))


def code_from_states(states: Sequence, tol: Tolerance = DEFAULT_TOL) -> Code:
    return make_code(states, states, tol)


# --------------------------------------------------------------------------
# Operational checks
# --------------------------------------------------------------------------


@dataclass
class VerificationReport:
    verdict: bool
    worst_pair_deviation: float
    pairs_tested: int
    mode: str
    diagnostics: list = field(default_factory=list)
    recovery: Channel | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "verdict": "pass" if self.verdict else "fail",
            "worst_pair_deviation": self.worst_pair_deviation,
            "pairs_tested": self.pairs_tested,
            "mode": self.mode,
            "diagnostics": list(self.diagnostics),
        }
        if self.recovery is not None:
            out["recovery_kraus_count"] = self.recovery.num_kraus
        return out


def _as_map(E) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(E, KrausMap):
        return E.apply
    S = np.asarray(E, dtype=complex)
    d = int(round(np.sqrt(S.shape[0])))
    return lambda X: unvec(S @ vec(X), d)


def _sample_pairs(C: Code, trials: int, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    samples = list(C.sample_states)
    pairs = [(a, b) for i, a in enumerate(samples) for j, b in enumerate(samples) if i != j]
    if len(pairs) > MAX_SAMPLE_PAIRS:
        keep = rng.choice(len(pairs), MAX_SAMPLE_PAIRS, replace=False)
        pairs = [pairs[k] for k in sorted(keep)]
    extra = C.random_states(2 * trials, rng)
    pairs += list(zip(extra[::2], extra[1::2]))
    return pairs


def _x_values(rng) -> np.ndarray:
    return np.concatenate([X_GRID, 10 ** rng.uniform(-2, 2, N_RANDOM_X)])


def _worst_deviation(E, pairs, xs) -> float:
    f = _as_map(E)
    worst = 0.0
    for rho, rho2 in pairs:
        a, b = f(rho), f(rho2)
        for x in xs:
            dev = abs(trace_norm(a - x * b) - trace_norm(rho - x * rho2))
            worst = max(worst, dev)
    return worst


def is_preserved(E, C: Code, tol: Tolerance = DEFAULT_TOL, trials: int = 8,
                 seed: int = 0, mode: str = "preserved") -> VerificationReport:
    """Sampled check that ``||E(rho - x rho')||_1 = ||rho - x rho'||_1`` on the code.

    A failure is a genuine counterexample; a pass is evidence only.

    :param E: channel, CP map or superoperator matrix.
    """
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    pairs = _sample_pairs(C, trials, rng)
    worst = _worst_deviation(E, pairs, _x_values(rng))
    return VerificationReport(worst <= tol.verify, worst, len(pairs), mode)


def _injectivity_witness(proj, C: Code, tol: Tolerance):
    """Check that ``proj`` is injective on the code span.

    :return: ``(ok, deviation, note)``; when not injective, ``deviation`` is
        the trace-norm loss on an explicit pair of code states that ``proj``
        maps to the same output.
    """
    f = _as_map(proj)
    herm = hermitian_basis(C.space, tol)
    images = np.stack([vec(f(h)) for h in herm], axis=1)
    _, s, Vh = np.linalg.svd(images, full_matrices=False)
    top = max(s[0] if s.size else 0.0, 1.0)
    rank = int(np.sum(s > tol.rank_cutoff * top))
    if rank == herm.shape[0]:
        return True, 0.0, None
    # images of Hermitian operators are Hermitian, so the real and imaginary
    # parts of a complex null vector are null vectors themselves
    c = Vh[-1].conj()
    coeff = c.real if np.linalg.norm(c.real) >= np.linalg.norm(c.imag) else c.imag
    coeff = coeff / np.linalg.norm(coeff)
    X = np.einsum("k,kij->ij", coeff, herm)
    base = np.mean(np.stack(C.sample_states), axis=0)
    V = support_isometry(base, tol)
    if np.linalg.norm(X - V @ dag(V) @ X @ V @ dag(V)) <= tol.verify:
        lam = np.linalg.eigvalsh(dag(V) @ base @ V)[0]
        t = 0.5 * lam / max(np.linalg.norm(X, 2), 1e-300)
        dev = trace_norm(2 * t * X) - trace_norm(f(2 * t * X))
    else:
        dev = trace_norm(X) - trace_norm(f(X))
    note = (f"map collapses a {herm.shape[0] - rank}-dimensional part of the code span "
            f"(lost distinguishability {dev:.3e})")
    return False, float(abs(dev)), note


def _combine(mode: str, reports, structural, tol: Tolerance) -> VerificationReport:
    injective, loss, note = structural
    worst = max([r.worst_pair_deviation for r in reports] + [loss])
    pairs = sum(r.pairs_tested for r in reports) + (0 if injective else 1)
    ok = all(r.verdict for r in reports) and injective and worst <= tol.verify
    return VerificationReport(ok, worst, pairs, mode, [] if note is None else [note])


def is_noiseless(E, C: Code, fs: FixedSpaces | None = None, tol: Tolerance = DEFAULT_TOL,
                 trials: int = 8, seed: int = 0) -> VerificationReport:
    """Preserved under ``E`` and under the projector onto its fixed points,
    which is injective on the code span."""
    fs = fixed_spaces(E, tol) if fs is None else fs
    reports = [is_preserved(E, C, tol, trials, seed),
               is_preserved(fs.einf, C, tol, trials, seed + 1)]
    return _combine("noiseless", reports, _injectivity_witness(fs.einf, C, tol), tol)


def is_unitarily_noiseless(E, C: Code, rs: RotatingSpace | None = None,
                           tol: Tolerance = DEFAULT_TOL, trials: int = 8,
                           seed: int = 0) -> VerificationReport:
    """Preserved under ``E^n`` for several ``n`` and under the peripheral
    projector, which is injective on the code span."""
    rs = rotating_space(E, tol) if rs is None else rs
    S = E.superoperator if isinstance(E, KrausMap) else np.asarray(E)
    reports = [is_preserved(np.linalg.matrix_power(S, n), C, tol, trials, seed + n)
               for n in UNITARY_POWERS]
    reports.append(is_preserved(rs.projector, C, tol, trials, seed))
    rep = _combine("unitarily_noiseless", reports,
                   _injectivity_witness(rs.projector, C, tol), tol)
    inside = max(rs.basis.distance_to(b) for b in C.space)
    rep.diagnostics.append(f"distance of code span from the rotating points: {inside:.3e}")
    return rep


def transpose_channel(E: Channel, P, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Recovery channel with Kraus operators ``P K_i^dag E(P)^{-1/2}``.

    One extra Kraus operator, the projector onto the kernel of ``E(P)``,
    makes the result trace preserving on the whole space. ``R(E(P)) = P``.
    """
    P = as_matrix(P, square=True, name="projector")
    res = float(max(np.linalg.norm(P - dag(P)), np.linalg.norm(P @ P - P)))
    if res > tol.verify:
        raise ContractError(f"P is not an orthogonal projector (residual {res:.3e})", residual=res)
    EP = E.apply(P)
    if np.linalg.norm(EP) <= tol.rank_cutoff:
        raise ParameterError("E(P) vanishes; the transpose channel is undefined")
    EP = (EP + dag(EP)) / 2
    inv = psd_inv_sqrt(EP, tol)
    ops = [P @ dag(K) @ inv for K in E.kraus]
    complement = np.eye(E.dim) - support_projector(EP, tol)
    ops.append(complement)
    ops = [K for K in ops if np.linalg.norm(K) > tol.rank_cutoff]
    return Channel(np.stack(ops), tol=tol, label="transpose_channel")


def is_correctable(E: Channel, C: Code, tol: Tolerance = DEFAULT_TOL, trials: int = 8,
                   seed: int = 0) -> VerificationReport:
    """Build the transpose channel on the code support and test ``R o E`` for noiselessness.

    The returned report carries the recovery channel in ``recovery``.
    """
    R = transpose_channel(E, C.support, tol)
    RE = compose(R, E, tol)
    rep = is_noiseless(RE, C, fixed_spaces(RE, tol), tol, trials, seed)
    rep.mode = "correctable"
    rep.recovery = R
    rep.diagnostics.append(f"recovery channel has {R.num_kraus} Kraus operators")
    return rep


# --------------------------------------------------------------------------
# End-to-end analysis
# --------------------------------------------------------------------------


@dataclass
class IPSReport:
    """Everything :func:`analyze` learns about a channel."""

    mode: str
    shape: list
    support_rank: int
    fixed_dim: int
    rotating_dim: int
    tau_states: list = field(repr=False)
    structure: AlgebraStructure = field(repr=False)
    spaces: FixedSpaces = field(repr=False)
    support: SupportInfo = field(repr=False)
    echo: EchoMap | None = field(repr=False)
    rotating: RotatingSpace = field(repr=False)
    channel_report: ChannelReport = field(repr=False)
    commutant_dim: int = 0
    spectral_gap: float = 1.0
    warnings: list = field(default_factory=list)

    @property
    def is_unital(self) -> bool:
        return self.channel_report.is_unital

    def summary(self) -> str:
        shape = ",".join(f"({a},{b})" for a, b in self.shape)
        return (f"shape=[{shape}] support_rank={self.support_rank} "
                f"unital={str(self.is_unital).lower()}")


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except IPSError as exc:
        exc.stage = name
        raise


def analyze(E: Channel, mode: str = "noiseless", tol: Tolerance = DEFAULT_TOL,
            seed: int = 0) -> IPSReport:
    """Find the noiseless (or unitarily noiseless) structure of ``E``.

    Superoperator, then fixed (or rotating) spaces, joint support, algebra
    shape with cofactor states, and the echo of fixed observables outside
    the support. Deterministic for fixed ``seed`` and ``tol``.
    """
    if mode not in ("noiseless", "unitarily_noiseless"):
        raise ParameterError(f"unknown mode {mode!r}")
    fs = _stage("spectral", fixed_spaces, E, tol)
    rs = _stage("spectral", rotating_space, E, tol)
    spaces = fs if mode == "noiseless" else rs.as_fixed_spaces()
    sup = _stage("support", joint_support, spaces, E, tol)
    structure = _stage("algebra", structure_from_fixed_spaces, spaces, sup, E, tol, seed)
    echo = _stage("echo", echo_map, spaces, sup, tol)
    warnings = list(fs.warnings) + [w for w in rs.warnings if w not in fs.warnings]
    return IPSReport(
        mode=mode,
        shape=list(structure.shape),
        support_rank=sup.rank,
        fixed_dim=fs.dim,
        rotating_dim=rs.dim,
        tau_states=list(structure.tau_states),
        structure=structure,
        spaces=spaces,
        support=sup,
        echo=echo,
        rotating=rs,
        channel_report=E.report(tol),
        commutant_dim=commutant(E.kraus, tol).dim,
        spectral_gap=spectral_gap(fs.eigenvalues, tol),
        warnings=warnings,
    )
