import numpy as np
import pytest

from ipstruct.channel import make_paper_example
from ipstruct.matcore import Tolerance


@pytest.fixture(scope="session")
def ref_channel():
    return make_paper_example()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tol():
    return Tolerance()


def ket_dm(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def tau_spectra_by_shape(shape, taus):
    """Group sorted tau spectra by block shape, so blocks of equal shape compare as multisets."""
    groups = {}
    for s, t in zip(shape, taus):
        groups.setdefault(tuple(s), []).append(np.sort(np.linalg.eigvalsh(t)))
    return {k: sorted(v, key=tuple) for k, v in groups.items()}


def random_unital(d, k, rng, structured=False):
    """Mixture of ``k`` unitary conjugations on ``C^d``.

    With ``structured`` the unitaries share a random block form
    ``Q (+)_j (I_{a_j} (x) U_j) Q^dag``, so the commutant is nontrivial.
    """
    from scipy.linalg import block_diag

    from ipstruct.channel import random_unital_channel
    from ipstruct.matcore import random_unitary

    if not structured:
        unitaries = [random_unitary(d, rng) for _ in range(k)]
    else:
        # split d into blocks a*n with n >= 1
        blocks, left = [], d
        while left:
            size = int(rng.integers(1, left + 1))
            divisors = [a for a in range(1, size + 1) if size % a == 0]
            a = int(rng.choice(divisors))
            blocks.append((a, size // a))
            left -= size
        Q = random_unitary(d, rng)
        unitaries = []
        for _ in range(k):
            parts = [np.kron(np.eye(a), random_unitary(n, rng)) for a, n in blocks]
            unitaries.append(Q @ block_diag(*parts) @ Q.conj().T)
    probs = rng.dirichlet(np.ones(k))
    return random_unital_channel(unitaries, probs)


def planted_code(truth, rng, cofactor="random", n_samples=4):
    """Code ``(+)_k V_k (M_k (x) tau'_k) V_k^dag`` on a planted structure.

    :param cofactor: ``"true"`` uses the planted tau states, ``"random"`` a
        random full-rank state and ``"pure"`` a random rank-one state.
    """
    from ipstruct.codes import make_code
    from ipstruct.matcore import random_density

    taus = []
    for (d_k, n_k), tau in zip(truth.shape, truth.tau_states):
        if cofactor == "true":
            taus.append(tau)
        else:
            taus.append(random_density(n_k, rng, rank=1 if cofactor == "pure" else None))
    D = truth.support.shape[0]
    basis = []
    for (d_k, _), V, t in zip(truth.shape, truth.block_isometries, taus):
        for i in range(d_k):
            for j in range(d_k):
                unit = np.zeros((d_k, d_k))
                unit[i, j] = 1
                basis.append(V @ np.kron(unit, t) @ V.conj().T)
    samples = []
    for _ in range(n_samples):
        w = rng.dirichlet(np.ones(len(truth.shape)))
        rho = np.zeros((D, D), dtype=complex)
        for wk, (d_k, _), V, t in zip(w, truth.shape, truth.block_isometries, taus):
            rho += wk * V @ np.kron(random_density(d_k, rng), t) @ V.conj().T
        samples.append(rho)
    return make_code(basis, samples)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
