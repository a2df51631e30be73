"""Quaternion, Sim(3), and alignment primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segdrift.geometry import (
    PoseSE3,
    Sim3,
    quat_conjugate,
    quat_from_axis_angle,
    quat_from_matrix,
    quat_identity,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_slerp,
    quat_to_matrix,
    segment_vector,
    umeyama_alignment,
)

rng = np.random.default_rng(1234)


def random_quat(r):
    q = r.normal(size=4)
    return quat_normalize(q)


unit_vectors = st.tuples(
    st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10)
).map(np.array)


class TestQuaternions:
    def test_identity_rotates_nothing(self):
        v = np.array([1.0, -2.0, 3.0])
        assert np.allclose(quat_rotate(quat_identity(), v), v)

    def test_axis_angle_matches_matrix(self):
        for _ in range(50):
            axis = rng.normal(size=3)
            angle = rng.uniform(-np.pi, np.pi)
            q = quat_from_axis_angle(axis, angle)
            v = rng.normal(size=3)
            assert np.allclose(quat_rotate(q, v), quat_to_matrix(q) @ v, atol=1e-12)

    def test_multiply_composes_rotations(self):
        for _ in range(50):
            a, b = random_quat(rng), random_quat(rng)
            v = rng.normal(size=3)
            lhs = quat_rotate(quat_multiply(a, b), v)
            rhs = quat_rotate(a, quat_rotate(b, v))
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_conjugate_inverts(self):
        for _ in range(20):
            q = random_quat(rng)
            v = rng.normal(size=3)
            assert np.allclose(quat_rotate(quat_conjugate(q), quat_rotate(q, v)), v)

    def test_from_matrix_round_trip(self):
        for _ in range(100):
            q = random_quat(rng)
            p = quat_from_matrix(quat_to_matrix(q))
            # q and -q encode the same rotation.
            assert np.allclose(p, q, atol=1e-9) or np.allclose(p, -q, atol=1e-9)

    def test_rotate_batched(self):
        q = random_quat(rng)
        vs = rng.normal(size=(7, 3))
        batched = quat_rotate(q, vs)
        for i, v in enumerate(vs):
            assert np.allclose(batched[i], quat_rotate(q, v), atol=1e-12)

    def test_slerp_endpoints(self):
        a, b = random_quat(rng), random_quat(rng)
        assert np.allclose(quat_slerp(a, b, 0.0), a, atol=1e-12) or np.allclose(
            quat_slerp(a, b, 0.0), -a, atol=1e-12
        )
        assert np.allclose(quat_slerp(a, b, 1.0), b, atol=1e-12) or np.allclose(
            quat_slerp(a, b, 1.0), -b, atol=1e-12
        )

    def test_slerp_halfway_angle(self):
        a = quat_identity()
        b = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), 1.0)
        mid = quat_slerp(a, b, 0.5)
        expected = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), 0.5)
        assert np.allclose(mid, expected, atol=1e-12)


class TestSim3:
    def test_identity(self):
        p = np.array([1.0, 2.0, 3.0])
        assert np.allclose(Sim3.identity().apply(p), p)

    @settings(max_examples=50, deadline=None)
    @given(unit_vectors)
    def test_compose_matches_sequential_apply(self, p):
        a = Sim3(1.3, quat_from_axis_angle(np.array([1.0, 2.0, 0.5]), 0.7), np.array([1.0, -1.0, 2.0]))
        b = Sim3(0.8, quat_from_axis_angle(np.array([0.0, 1.0, 1.0]), -0.4), np.array([0.5, 0.0, -3.0]))
        assert np.allclose(a.compose(b).apply(p), a.apply(b.apply(p)), atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(unit_vectors)
    def test_inverse_round_trip(self, p):
        t = Sim3(2.1, quat_from_axis_angle(np.array([1.0, 0.0, 3.0]), 1.1), np.array([4.0, 5.0, -6.0]))
        assert np.allclose(t.inverse().apply(t.apply(p)), p, atol=1e-9)

    def test_matrix_agrees_with_apply(self):
        t = Sim3(1.7, quat_from_axis_angle(np.array([1.0, 1.0, 1.0]), 0.9), np.array([1.0, 2.0, 3.0]))
        p = np.array([0.3, -0.4, 0.5, 1.0])
        assert np.allclose((t.matrix() @ p)[:3], t.apply(p[:3]), atol=1e-12)

    def test_invalid_scale_rejected(self):
        with pytest.raises(ValueError):
            Sim3(0.0, quat_identity(), np.zeros(3))
        with pytest.raises(ValueError):
            Sim3(-1.0, quat_identity(), np.zeros(3))


class TestPoseSE3:
    def test_compose_and_inverse(self):
        a = PoseSE3(quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), 0.5), np.array([1.0, 2.0, 3.0]))
        b = PoseSE3(quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), -0.3), np.array([-1.0, 0.5, 0.0]))
        p = np.array([0.2, 0.4, -0.6])
        assert np.allclose(a.compose(b).apply(p), a.apply(b.apply(p)), atol=1e-12)
        assert np.allclose(a.inverse().apply(a.apply(p)), p, atol=1e-12)


class TestSegmentVector:
    def test_difference(self):
        assert np.allclose(
            segment_vector(np.array([1.0, 1.0, 1.0]), np.array([4.0, 0.0, 2.0])),
            np.array([3.0, -1.0, 1.0]),
        )

    @settings(max_examples=50, deadline=None)
    @given(unit_vectors, unit_vectors, unit_vectors)
    def test_translation_invariance(self, p1, p2, t):
        # Shifting both endpoints cancels in the segment vector.
        assert np.allclose(
            segment_vector(p1 + t, p2 + t), segment_vector(p1, p2), atol=1e-9
        )


class TestUmeyama:
    def test_recovers_known_transform(self):
        src = rng.normal(size=(10, 3))
        t = Sim3(1.4, quat_from_axis_angle(np.array([1.0, 2.0, 3.0]), 0.8), np.array([0.5, -1.0, 2.0]))
        dst = np.array([t.apply(p) for p in src])
        fit = umeyama_alignment(src, dst)
        assert abs(fit.scale - t.scale) < 1e-9
        assert np.allclose(fit.translation, t.translation, atol=1e-9)
        assert np.allclose(quat_to_matrix(fit.rotation), quat_to_matrix(t.rotation), atol=1e-9)

    def test_rigid_mode_fixes_scale(self):
        src = rng.normal(size=(8, 3))
        dst = 2.0 * src
        fit = umeyama_alignment(src, dst, with_scale=False)
        assert fit.scale == 1.0

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            umeyama_alignment(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_coincident_sources_rejected(self):
        src = np.ones((5, 3))
        with pytest.raises(ValueError):
            umeyama_alignment(src, rng.normal(size=(5, 3)))
