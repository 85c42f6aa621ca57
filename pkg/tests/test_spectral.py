import numpy as np
import pytest

from ipstruct.algebra import commutant
from ipstruct.channel import (
    amplitude_damping,
    dephasing_channel,
    identity_channel,
    make_planted,
    outer,
    power_mean,
    to_superoperator,
    unitary_channel,
)
from ipstruct.errors import ParameterError
from ipstruct.matcore import (
    Tolerance,
    orthonormalize,
    random_density,
    subspace_distance,
    support_projector,
)
from ipstruct.spectral import (
    einf_cesaro_oracle,
    fixed_spaces,
    joint_support,
    rotating_space,
    spectral_gap,
)

from conftest import random_unital

TAU_B = np.diag([0.25, 0.75])


def ref_sigma():
    return orthonormalize([np.kron(outer(i, j, 3), TAU_B) for i in range(2) for j in range(2)])


def ref_b_space():
    ops = []
    for i in range(2):
        for j in range(2):
            s = outer(i, j, 3)
            ops.append(np.kron(s + 0.5 * np.trace(s) * outer(2, 2, 3), np.eye(2)))
    return orthonormalize(ops)


class TestFixedSpaces:
    def test_identity(self):
        fs = fixed_spaces(identity_channel(2))
        assert fs.dim == 4 and fs.b_space.dim == 4
        assert np.allclose(fs.einf, np.eye(4))

    def test_dephasing(self):
        fs = fixed_spaces(dephasing_channel(2))
        assert fs.dim == 2
        assert subspace_distance(fs.sigma, orthonormalize([outer(0, 0, 2), outer(1, 1, 2)])) < 1e-10

    def test_reference_example(self, ref_channel):
        fs = fixed_spaces(ref_channel)
        assert fs.dim == 4 and fs.b_space.dim == 4
        assert subspace_distance(fs.sigma, ref_sigma()) < 1e-8
        assert subspace_distance(fs.b_space, ref_b_space()) < 1e-8

    def test_reference_spaces_are_not_the_commutant(self, ref_channel, tol):
        fs = fixed_spaces(ref_channel)
        com = commutant(ref_channel.kraus)
        assert com.dim == 1
        # same dimension, so compare by principal angles
        assert subspace_distance(fs.sigma, fs.b_space) > 10 * tol.verify
        assert subspace_distance(fs.sigma, com) > 10 * tol.verify
        assert subspace_distance(fs.b_space, com) > 10 * tol.verify

    @pytest.mark.parametrize("seed", range(5))
    def test_projector_laws(self, seed, tol):
        E, _ = make_planted([(2, 1), (1, 2)], 1, seed)
        fs = fixed_spaces(E)
        S = to_superoperator(E)
        for M in (S @ fs.einf, fs.einf @ S, fs.einf @ fs.einf):
            assert np.linalg.norm(M - fs.einf, 2) <= tol.verify

    def test_image_in_sigma(self, ref_channel, rng):
        fs = fixed_spaces(ref_channel)
        for _ in range(200):
            X = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            Y = fs.apply_einf(X)
            assert fs.sigma.distance_to(Y) <= 1e-8 * max(1, np.linalg.norm(Y))

    def test_accepts_superoperator(self, ref_channel):
        a = fixed_spaces(ref_channel)
        b = fixed_spaces(to_superoperator(ref_channel))
        assert np.allclose(a.einf, b.einf)

    def test_near_miss_warning(self):
        # eigenvalue 1 - 5e-9 is in the ambiguity band (eig_cluster, 10 eig_cluster]
        E = amplitude_damping(1e-8)
        fs = fixed_spaces(E)
        assert fs.warnings


class TestUnitalLaws:
    @pytest.mark.parametrize("seed", range(12))
    def test_sigma_b_space_commutant_agree(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        E = random_unital(d, int(rng.integers(2, 5)), rng, structured=seed % 2 == 0)
        fs = fixed_spaces(E)
        com = commutant(E.kraus)
        assert fs.dim == fs.b_space.dim == com.dim
        assert subspace_distance(fs.sigma, fs.b_space) <= 1e-7
        assert subspace_distance(fs.sigma, com) <= 1e-7


class TestCesaro:
    @pytest.mark.parametrize("N", [1, 10, 100])
    def test_identity_exact(self, N):
        assert np.allclose(einf_cesaro_oracle(identity_channel(2), N),
                           fixed_spaces(identity_channel(2)).einf)

    def test_dephasing_error_is_one_over_n_plus_one(self):
        einf = fixed_spaces(dephasing_channel(2)).einf
        for N in (1, 10, 100):
            err = np.abs(einf_cesaro_oracle(dephasing_channel(2), N) - einf).max()
            assert err == pytest.approx(1 / (N + 1))

    def test_reference_example(self, ref_channel):
        fs = fixed_spaces(ref_channel)
        assert np.linalg.norm(einf_cesaro_oracle(ref_channel, 10_000) - fs.einf) <= 1e-3

    def test_monotone(self):
        E, _ = make_planted([(2, 2)], 2, seed=4)
        einf = fixed_spaces(E).einf
        errs = [np.linalg.norm(power_mean(E, N) - einf) for N in (100, 1000, 10_000)]
        assert errs[0] > errs[1] > errs[2]

    def test_rejects_zero(self):
        with pytest.raises(ParameterError):
            einf_cesaro_oracle(identity_channel(2), 0)


class TestRotatingSpace:
    def test_phase_unitary(self):
        theta = 1.0
        rs = rotating_space(unitary_channel(np.diag([1, np.exp(1j * theta)])))
        assert rs.dim == 4
        expected = np.sort_complex(np.array([1, 1, np.exp(1j * theta), np.exp(-1j * theta)]))
        assert np.allclose(np.sort_complex(rs.eigenphases), expected)
        for lam, X in zip(rs.eigenphases, rs.eigenoperators):
            U = np.diag([1, np.exp(1j * theta)])
            assert np.allclose(U @ X @ U.conj().T, lam * X)

    def test_dephasing_equals_fixed(self):
        rs = rotating_space(dephasing_channel(2))
        fs = fixed_spaces(dephasing_channel(2))
        assert rs.dim == 2
        assert subspace_distance(rs.basis, fs.sigma) < 1e-10

    def test_reference_example_equals_fixed(self, ref_channel):
        rs = rotating_space(ref_channel)
        assert rs.dim == 4
        assert subspace_distance(rs.basis, fixed_spaces(ref_channel).sigma) < 1e-8

    def test_projector_idempotent(self):
        rs = rotating_space(unitary_channel(np.diag([1, 1j, -1])))
        assert np.allclose(rs.projector @ rs.projector, rs.projector)

    def test_as_fixed_spaces(self):
        fs = rotating_space(unitary_channel(np.diag([1, 1j]))).as_fixed_spaces()
        assert fs.mode == "rotating" and fs.dim == 4


class TestSupport:
    def test_identity(self):
        sup = joint_support(fixed_spaces(identity_channel(3)))
        assert sup.rank == 3
        assert np.allclose(sup.projector, np.eye(3))

    def test_reference_example(self, ref_channel):
        sup = joint_support(fixed_spaces(ref_channel))
        assert sup.rank == 4
        P = np.kron(outer(0, 0, 3) + outer(1, 1, 3), np.eye(2))
        assert np.allclose(sup.projector, P, atol=1e-8)

    def test_planted(self):
        E, truth = make_planted([(2, 2)], 2, seed=7)
        sup = joint_support(fixed_spaces(E))
        assert sup.rank == 4
        assert np.allclose(sup.projector, truth.support, atol=1e-8)

    def test_union_fallback_agrees(self, ref_channel):
        fs = fixed_spaces(ref_channel)
        a = joint_support(fs)
        b = joint_support(fs, union_fallback=True)
        assert a.rank == b.rank
        assert np.allclose(a.projector, b.projector, atol=1e-8)

    def test_containment(self, rng):
        E, _ = make_planted([(2, 2), (1, 1)], 2, seed=9)
        fs = fixed_spaces(E)
        sup = joint_support(fs)
        Q = np.eye(E.dim) - sup.projector
        for _ in range(50):
            sigma = fs.apply_einf(random_density(E.dim, rng))
            sigma = (sigma + sigma.conj().T) / 2
            P_sigma = support_projector(sigma)
            assert np.linalg.norm(Q @ P_sigma) <= 1e-8

    def test_max_rank_state(self, ref_channel):
        sup = joint_support(fixed_spaces(ref_channel))
        rho = sup.max_rank_fixed_state
        assert np.trace(rho).real == pytest.approx(1)
        assert np.allclose(ref_channel(rho), rho, atol=1e-10)
        assert np.linalg.matrix_rank(rho, tol=1e-9) == 4


def test_spectral_gap():
    assert spectral_gap(np.array([1, 0.5, -0.2])) == pytest.approx(0.5)
    assert spectral_gap(np.array([1.0, 1.0])) == 1.0


def test_tolerance_controls_clustering():
    E = amplitude_damping(1e-6)
    assert fixed_spaces(E, Tolerance()).dim == 1
    loose = Tolerance(eig_cluster=1e-5, rank_cutoff=1e-10, verify=1e-4)
    # eigenvalues 1 - 1e-6 and sqrt(1 - 1e-6) all fall inside the loose radius
    assert fixed_spaces(E, loose).dim == 4
