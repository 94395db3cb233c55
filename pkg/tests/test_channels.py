import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minrenyi.channels import (
    RandomUnitaryChannel,
    apply,
    complex_conjugate,
    conjugate_apply,
    kraus_columns,
    load_channel,
    sample_channel,
    save_channel,
    tensor_apply,
)
from minrenyi.quantum import RngStream, eigenvalues, pure_density, random_pure_state, renyi_entropy

X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def flip_channel():
    return RandomUnitaryChannel(np.stack([I2, X]), [0.5, 0.5])


def nonzero(v, tol=1e-10):
    return np.sort(v[v > tol])


class TestChannel:
    def test_identity_channel(self):
        ch = RandomUnitaryChannel(np.stack([np.eye(3)] * 2), [0.3, 0.7])
        rho = pure_density(random_pure_state(3, RngStream(0)))
        np.testing.assert_allclose(apply(ch, rho), rho, atol=1e-12)

    def test_bit_flip(self):
        out = apply(flip_channel(), np.diag([1.0, 0.0]))
        np.testing.assert_allclose(out, np.eye(2) / 2, atol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError, match="unitary"):
            RandomUnitaryChannel(np.stack([I2, 2 * X]), [0.5, 0.5])
        with pytest.raises(ValueError, match="probability"):
            RandomUnitaryChannel(np.stack([I2, X]), [0.6, 0.6])
        with pytest.raises(ValueError, match="one weight"):
            RandomUnitaryChannel(np.stack([I2, X]), [1.0])

    def test_arrays_are_frozen(self):
        ch = sample_channel(2, 3, RngStream(0))
        with pytest.raises(ValueError):
            ch.weights[0] = 1.0

    def test_sampling_is_seeded(self):
        a = sample_channel(3, 4, RngStream(5))
        b = sample_channel(3, 4, RngStream(5))
        np.testing.assert_array_equal(a.unitaries, b.unitaries)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_save_load(self, tmp_path):
        ch = sample_channel(3, 4, RngStream(5))
        save_channel(ch, tmp_path / "c.json")
        back = load_channel(tmp_path / "c.json")
        np.testing.assert_array_equal(back.unitaries, ch.unitaries)
        np.testing.assert_array_equal(back.weights, ch.weights)

    def test_declared_sizes_checked(self):
        data = sample_channel(2, 3, RngStream(1)).to_dict()
        data["N"] = 4
        with pytest.raises(ValueError):
            RandomUnitaryChannel.from_dict(data)


class TestConjugation:
    def test_real_unitaries_unchanged(self):
        ch = flip_channel()
        np.testing.assert_array_equal(complex_conjugate(ch).unitaries, ch.unitaries)

    def test_involution(self):
        ch = sample_channel(3, 4, RngStream(2))
        back = complex_conjugate(complex_conjugate(ch))
        np.testing.assert_array_equal(back.unitaries, ch.unitaries)
        np.testing.assert_array_equal(back.weights, ch.weights)

    def test_single_kraus_conjugate_output(self):
        ch = sample_channel(1, 5, RngStream(3))
        out = conjugate_apply(ch, random_pure_state(5, RngStream(4)))
        np.testing.assert_allclose(out, [[1.0]], atol=1e-14)

    def test_entry_formula(self):
        ch = sample_channel(3, 4, RngStream(6))
        psi = random_pure_state(4, RngStream(7))
        out = conjugate_apply(ch, psi)
        w, u = ch.weights, ch.unitaries
        for i in range(3):
            for j in range(3):
                ref = np.sqrt(w[i] * w[j]) * np.vdot(psi, u[j] @ u[i].conj().T @ psi)
                assert abs(out[i, j] - ref) < 1e-14

    def test_kraus_columns_give_direct_output(self):
        ch = sample_channel(3, 4, RngStream(6))
        psi = random_pure_state(4, RngStream(7))
        a = kraus_columns(ch, psi)
        np.testing.assert_allclose(a @ a.conj().T, apply(ch, pure_density(psi)), atol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 5), st.integers(4, 16), st.integers(0, 2**32 - 1))
    def test_spectral_equivalence(self, D, N, seed):
        s = RngStream(seed)
        ch = sample_channel(D, N, s.child(0))
        psi = random_pure_state(N, s.child(1))
        direct = eigenvalues(apply(ch, pure_density(psi)))
        conj = eigenvalues(conjugate_apply(ch, psi))
        a, b = nonzero(direct), nonzero(conj)
        assert a.shape == b.shape
        np.testing.assert_allclose(a, b, atol=1e-8)
        for p in (0.25, 0.5, 0.75):
            assert abs(renyi_entropy(direct, p) - renyi_entropy(conj, p)) <= 1e-8

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_purity_not_increased(self, D, N, seed):
        s = RngStream(seed)
        ch = sample_channel(D, N, s.child(0))
        out = apply(ch, pure_density(random_pure_state(N, s.child(1))))
        assert eigenvalues(out)[0] <= 1 + 1e-10


class TestTensorApply:
    def test_trivial_channels(self):
        one = RandomUnitaryChannel(np.eye(3)[None], [1.0])
        two = RandomUnitaryChannel(np.eye(2)[None], [1.0])
        rho = pure_density(random_pure_state(6, RngStream(0)))
        np.testing.assert_allclose(tensor_apply(one, two, rho), rho, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_product_inputs_factorize(self, seed):
        s = RngStream(seed)
        ca = sample_channel(2, 3, s.child(0))
        cb = sample_channel(3, 4, s.child(1))
        ra = pure_density(random_pure_state(3, s.child(2)))
        rb = pure_density(random_pure_state(4, s.child(3)))
        out = tensor_apply(ca, cb, np.kron(ra, rb))
        np.testing.assert_allclose(out, np.kron(apply(ca, ra), apply(cb, rb)), atol=1e-10)

    def test_matches_dense_kraus_sum(self):
        s = RngStream(12)
        ca = sample_channel(2, 3, s.child(0))
        cb = sample_channel(2, 2, s.child(1))
        rho = pure_density(random_pure_state(6, s.child(2)))
        ref = np.zeros_like(rho)
        for wa, ua in zip(ca.weights, ca.unitaries):
            for wb, ub in zip(cb.weights, cb.unitaries):
                k = np.kron(ua, ub)
                ref += wa * wb * k.conj().T @ rho @ k
        np.testing.assert_allclose(tensor_apply(ca, cb, rho), ref, atol=1e-13)

    def test_shape_checked(self):
        ch = sample_channel(2, 2, RngStream(0))
        with pytest.raises(ValueError):
            tensor_apply(ch, ch, np.eye(3) / 3)
