import numpy as np
import pytest

from waamcell import quaternion as quat


def random_quaternions(n, seed=0):
    rng = np.random.default_rng(seed)
    return [quat.normalize(rng.normal(size=4)) for _ in range(n)]


class TestBasics:
    def test_normalize_unit(self):
        q = quat.normalize([1.0, 2.0, 3.0, 4.0])
        assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)

    def test_normalize_zero_raises(self):
        with pytest.raises(ValueError):
            quat.normalize([0.0, 0.0, 0.0, 0.0])

    def test_canonical_flips_negative_scalar(self):
        q = np.array([-0.5, 0.5, 0.5, 0.5])
        assert quat.canonical(q)[0] == 0.5
        assert np.allclose(quat.canonical(-q), -q)

    def test_conjugate_inverse(self):
        for q in random_quaternions(20):
            assert np.allclose(quat.product(q, quat.inverse(q)),
                               quat.IDENTITY, atol=1e-12)

    def test_product_matches_matrix_composition(self):
        for a, b in zip(random_quaternions(20, seed=1), random_quaternions(20, seed=2)):
            Rab = quat.to_rotation_matrix(quat.product(a, b))
            assert np.allclose(Rab, quat.to_rotation_matrix(a) @ quat.to_rotation_matrix(b),
                               atol=1e-12)

    def test_product_not_commutative(self):
        a = quat.from_axis_angle([1, 0, 0], 0.7)
        b = quat.from_axis_angle([0, 1, 0], 0.4)
        assert not np.allclose(quat.product(a, b), quat.product(b, a))


class TestRotations:
    def test_axis_angle_quarter_turn(self):
        q = quat.from_axis_angle([0, 0, 1], np.pi / 2)
        assert np.allclose(quat.rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-12)

    def test_rotate_matches_matrix(self):
        rng = np.random.default_rng(3)
        for q in random_quaternions(20, seed=4):
            v = rng.normal(size=3)
            assert np.allclose(quat.rotate(q, v),
                               quat.to_rotation_matrix(q) @ v, atol=1e-12)

    def test_matrix_round_trip(self):
        for q in random_quaternions(50, seed=5):
            back = quat.from_rotation_matrix(quat.to_rotation_matrix(q))
            assert np.allclose(back, quat.canonical(q), atol=1e-9)

    def test_from_matrix_near_pi_rotation(self):
        # trace < 0 branch of the conversion
        q = quat.from_axis_angle([1, 2, -1], np.pi - 1e-4)
        back = quat.from_rotation_matrix(quat.to_rotation_matrix(q))
        assert quat.rotation_distance(back, q) < 1e-9

    def test_hat_cross(self):
        v, w = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.7, -1.1])
        assert np.allclose(quat.hat(v) @ w, np.cross(v, w), atol=1e-12)


class TestRepresentationJacobian:
    @pytest.mark.parametrize("representation", ["spatial", "body"])
    def test_matches_finite_difference(self, representation):
        # q_dot = B(q) w  against FD of the quaternion propagation
        h = 1e-7
        rng = np.random.default_rng(6)
        for q in random_quaternions(10, seed=7):
            w = rng.normal(size=3)
            B = quat.representation_jacobian(q, representation)
            dw = quat.from_axis_angle(w, np.linalg.norm(w) * h) if np.linalg.norm(w) else quat.IDENTITY
            if representation == "spatial":
                q_next = quat.product(dw, q)
            else:
                q_next = quat.product(q, dw)
            if np.dot(q_next, q) < 0:
                q_next = -q_next
            assert np.allclose((q_next - q) / h, B @ w, atol=1e-5)

    def test_unknown_representation(self):
        with pytest.raises(ValueError):
            quat.representation_jacobian(quat.IDENTITY, "euler")

    def test_norm_preserving(self):
        # q^T B(q) == 0: quaternion derivative is tangent to the sphere
        for q in random_quaternions(20, seed=8):
            B = quat.representation_jacobian(q)
            assert np.allclose(q @ B, 0.0, atol=1e-12)


def test_rotation_distance():
    a = quat.from_axis_angle([0, 1, 0], 0.3)
    b = quat.from_axis_angle([0, 1, 0], 0.8)
    assert quat.rotation_distance(a, b) == pytest.approx(0.5, abs=1e-12)
    # arccos loses half the digits near 1; 1e-7 is machine-level here
    assert quat.rotation_distance(a, -a) == pytest.approx(0.0, abs=1e-7)
