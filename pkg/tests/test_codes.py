import numpy as np
import pytest

from ipstruct.channel import (
    PAULI,
    amplitude_damping,
    bitflip_three_qubit,
    compose,
    dephasing_channel,
    depolarizing_qubit,
    identity_channel,
    make_planted,
    outer,
    random_channel,
    to_superoperator,
    unitary_channel,
)
from ipstruct.codes import (
    analyze,
    code_from_states,
    helstrom,
    is_correctable,
    is_noiseless,
    is_preserved,
    is_unitarily_noiseless,
    make_code,
    transpose_channel,
)
from ipstruct.errors import ContractError, ParameterError
from ipstruct.matcore import random_density, random_unitary
from ipstruct.spectral import fixed_spaces, joint_support

from conftest import ket_dm, planted_code

TAU_B = np.diag([0.25, 0.75])
PHASE = np.diag([1, np.exp(1j)])


def ref_fixed_code(rng):
    basis = [np.kron(outer(i, j, 3), TAU_B) for i in range(2) for j in range(2)]
    samples = []
    for _ in range(4):
        s = np.zeros((3, 3), dtype=complex)
        s[:2, :2] = random_density(2, rng)
        samples.append(np.kron(s, TAU_B))
    return make_code(basis, samples)


def classical_bit():
    return make_code([outer(0, 0, 2), outer(1, 1, 2)])


def sigma_x_code():
    return make_code([outer(0, 0, 2), outer(1, 1, 2), PAULI["X"]],
                     [ket_dm([1, 0]), ket_dm([0, 1]), ket_dm([1, 1])])


def full_qubit_code():
    return make_code(list(PAULI.values()), [ket_dm([1, 0]), ket_dm([1, 1]), ket_dm([1, 1j])])


def bitflip_code():
    zero, one = np.eye(8)[0], np.eye(8)[7]
    basis = [np.outer(a, b) for a in (zero, one) for b in (zero, one)]
    return make_code(basis, [ket_dm(zero), ket_dm(one), ket_dm(zero + one), ket_dm(zero + 1j * one)])


class TestHelstrom:
    def test_orthogonal(self):
        assert helstrom(ket_dm([1, 0]), ket_dm([0, 1])) == pytest.approx(1)

    def test_equal(self, rng):
        rho = random_density(3, rng)
        assert helstrom(rho, rho) == pytest.approx(0.5)

    def test_zero_vs_plus(self):
        assert helstrom(ket_dm([1, 0]), ket_dm([1, 1])) == pytest.approx(0.5 * (1 + 1 / np.sqrt(2)))

    @pytest.mark.parametrize("q", [0.0, 0.3, 1.0])
    def test_bounds(self, q, rng):
        p = helstrom(random_density(2, rng), random_density(2, rng), q)
        assert max(q, 1 - q) - 1e-12 <= p <= 1 + 1e-12

    def test_bad_prior(self):
        with pytest.raises(ParameterError):
            helstrom(np.eye(2) / 2, np.eye(2) / 2, 1.5)

    def test_not_a_state(self):
        with pytest.raises(ContractError):
            helstrom(np.eye(2), np.eye(2) / 2)


class TestMakeCode:
    def test_support(self):
        C = classical_bit()
        assert np.allclose(C.support, np.eye(2))
        assert C.space.dim == 2

    def test_samples_default_from_basis(self):
        assert len(classical_bit().sample_states) == 2

    def test_rejects_sample_that_is_not_a_state(self):
        with pytest.raises(ContractError):
            make_code([outer(0, 0, 3)], [np.diag([1.0, -0.5, 0.5])])

    def test_needs_states(self):
        with pytest.raises(ContractError):
            make_code([PAULI["X"]])

    def test_random_states_are_states(self, rng):
        C = sigma_x_code()
        for rho in C.random_states(20, rng):
            assert np.trace(rho).real == pytest.approx(1)
            assert np.linalg.eigvalsh(rho)[0] >= -1e-10
            assert C.space.distance_to(rho) <= 1e-9

    def test_code_from_states(self):
        C = code_from_states([ket_dm([1, 0]), ket_dm([0, 1])])
        assert C.space.dim == 2


class TestIsPreserved:
    def test_identity(self, rng):
        C = ref_fixed_code(rng)
        rep = is_preserved(identity_channel(6), C)
        assert rep.verdict and rep.worst_pair_deviation <= 1e-12

    def test_reference_fixed_code(self, ref_channel, rng):
        assert is_preserved(ref_channel, ref_fixed_code(rng)).verdict

    def test_depolarizing_destroys(self):
        rep = is_preserved(depolarizing_qubit(), classical_bit())
        assert not rep.verdict
        assert rep.worst_pair_deviation == pytest.approx(2.0)

    def test_accepts_superoperator(self):
        rep = is_preserved(to_superoperator(dephasing_channel(2)), classical_bit())
        assert rep.verdict

    def test_trials(self):
        with pytest.raises(ParameterError):
            is_preserved(identity_channel(2), classical_bit(), trials=0)


class TestIsNoiseless:
    def test_reference_fixed_code(self, ref_channel, rng):
        assert is_noiseless(ref_channel, ref_fixed_code(rng)).verdict

    def test_rotating_code_fails(self):
        rep = is_noiseless(unitary_channel(PHASE), sigma_x_code())
        assert not rep.verdict
        assert rep.worst_pair_deviation > 0.1
        assert rep.diagnostics

    def test_identity(self):
        assert is_noiseless(identity_channel(2), full_qubit_code()).verdict

    @pytest.mark.parametrize("seed", range(4))
    def test_deviation_does_not_grow_with_powers(self, seed, rng):
        E, truth = make_planted([(2, 2), (1, 1)], 1, seed)
        C = planted_code(truth, rng, "true")
        S = to_superoperator(E)
        for n in range(1, 9):
            assert is_preserved(np.linalg.matrix_power(S, n), C).worst_pair_deviation <= 1e-8


class TestIsUnitarilyNoiseless:
    def test_full_qubit_under_unitary(self):
        assert is_unitarily_noiseless(unitary_channel(PHASE), full_qubit_code()).verdict

    def test_classical_under_dephasing(self):
        assert is_unitarily_noiseless(dephasing_channel(2), classical_bit()).verdict
        assert is_noiseless(dephasing_channel(2), classical_bit()).verdict

    def test_amplitude_damping_sigma_x(self):
        assert not is_unitarily_noiseless(amplitude_damping(0.3), sigma_x_code()).verdict

    def test_permutation_rotating_code(self):
        # a cyclic shift rotates the basis states; they stay distinguishable
        shift = np.roll(np.eye(3), 1, axis=0)
        C = make_code([outer(i, i, 3) for i in range(3)])
        E = unitary_channel(shift)
        assert is_unitarily_noiseless(E, C).verdict
        assert not is_noiseless(E, C).verdict


class TestTransposeChannel:
    def test_unitary(self, rng):
        U = random_unitary(3, rng)
        R = transpose_channel(unitary_channel(U), np.eye(3))
        X = rng.standard_normal((3, 3))
        assert np.allclose(R(X), U.conj().T @ X @ U)

    def test_identity_on_range(self, rng):
        P = np.diag([1.0, 1.0, 0.0])
        R = transpose_channel(identity_channel(3), P)
        X = np.zeros((3, 3), dtype=complex)
        X[:2, :2] = rng.standard_normal((2, 2))
        assert np.allclose(R(X), X)

    def test_reference_example(self, ref_channel, rng):
        fs = fixed_spaces(ref_channel)
        P = joint_support(fs, ref_channel).projector
        R = transpose_channel(ref_channel, P)
        RE = compose(R, ref_channel)
        assert np.linalg.norm(RE(P) - P) <= 1e-8
        # R o E is unital on the support: sigma_A (x) tau_B goes to sigma_A (x) I/2,
        # which R o E then keeps fixed
        for _ in range(10):
            s = np.zeros((3, 3), dtype=complex)
            s[:2, :2] = random_density(2, rng)
            out = RE(np.kron(s, TAU_B))
            assert np.linalg.norm(out - np.kron(s, np.eye(2) / 2)) <= 1e-8
            assert np.linalg.norm(RE(out) - out) <= 1e-8

    @pytest.mark.parametrize("seed", range(6))
    def test_trace_preserving(self, seed):
        rng = np.random.default_rng(seed)
        E = random_channel(4, 2, rng)
        V = np.linalg.qr(rng.standard_normal((4, 2)))[0]
        R = transpose_channel(E, V @ V.T)
        assert R.tp_residual() <= 1e-8

    def test_rejects_non_projector(self):
        with pytest.raises(ContractError):
            transpose_channel(identity_channel(2), np.diag([1.0, 0.5]))


class TestIsCorrectable:
    def test_bitflip_code(self):
        rep = is_correctable(bitflip_three_qubit(0.1), bitflip_code())
        assert rep.verdict
        assert rep.recovery.num_kraus == 4
        assert rep.to_dict()["recovery_kraus_count"] == 4

    def test_bitflip_fails_without_encoding(self):
        # a single physical qubit (the first) is not protected
        basis = [np.kron(outer(i, j, 2), ket_dm([1, 0, 0, 0])) for i in range(2) for j in range(2)]
        samples = [np.kron(ket_dm(v), ket_dm([1, 0, 0, 0])) for v in ([1, 0], [0, 1], [1, 1])]
        assert not is_correctable(bitflip_three_qubit(0.1), make_code(basis, samples)).verdict

    def test_fixed_states(self, ref_channel, rng):
        assert is_correctable(ref_channel, ref_fixed_code(rng)).verdict

    def test_depolarizing(self):
        assert not is_correctable(depolarizing_qubit(), classical_bit()).verdict

    @pytest.mark.parametrize("cofactor", ["true", "random", "pure"])
    @pytest.mark.parametrize("seed", range(3))
    def test_planted_codes(self, cofactor, seed, rng):
        E, truth = make_planted([(2, 2), (1, 2)], 2, seed)
        assert is_correctable(E, planted_code(truth, rng, cofactor)).verdict


@pytest.mark.parametrize("seed", range(6))
def test_hierarchy(seed, rng):
    E, truth = make_planted([(2, 1), (1, 2)], seed % 3, seed)
    for cofactor in ("true", "random"):
        C = planted_code(truth, rng, cofactor)
        if is_noiseless(E, C).verdict:
            assert is_unitarily_noiseless(E, C).verdict
            assert is_preserved(E, C).verdict
    assert is_noiseless(E, planted_code(truth, rng, "true")).verdict


class TestAnalyze:
    def test_reference_example(self, ref_channel):
        rep = analyze(ref_channel)
        assert rep.shape == [(2, 2)]
        assert rep.support_rank == 4 and rep.fixed_dim == 4 and rep.rotating_dim == 4
        assert rep.spaces.b_space.dim == 4
        assert rep.commutant_dim == 1
        assert not rep.is_unital
        assert rep.summary() == "shape=[(2,2)] support_rank=4 unital=false"

    def test_phase_unitary_modes(self):
        E = unitary_channel(PHASE)
        assert analyze(E).shape == [(1, 1), (1, 1)]
        assert analyze(E, "unitarily_noiseless").shape == [(2, 1)]

    @pytest.mark.parametrize("mode", ["noiseless", "unitarily_noiseless"])
    def test_depolarizing(self, mode):
        rep = analyze(depolarizing_qubit(), mode)
        assert rep.shape == [(1, 2)]
        assert np.allclose(rep.tau_states[0], np.eye(2) / 2)

    def test_bad_mode(self, ref_channel):
        with pytest.raises(ParameterError):
            analyze(ref_channel, "rotating")

    def test_deterministic(self):
        E, _ = make_planted([(2, 2), (2, 2)], 1, seed=2)
        a, b = analyze(E, seed=5), analyze(E, seed=5)
        assert a.shape == b.shape
        for x, y in zip(a.tau_states, b.tau_states):
            assert np.array_equal(x, y)
