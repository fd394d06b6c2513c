"""Rotation/pose primitives, geodesic metric, seeds, and pose file I/O."""

import math

import numpy as np
import pytest

from grr import (
    Pose,
    Rotation,
    Seed,
    UnitVec3,
    compose,
    geodesic_distance,
    inverse,
    load_poses,
    random_rotation,
    random_rotation_matrices,
    save_poses,
)


class TestRotation:
    def test_identity(self):
        assert np.array_equal(Rotation.identity().m, np.eye(3))

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            Rotation(np.eye(3) + 1e-3)

    def test_rejects_reflection(self):
        with pytest.raises(ValueError, match="determinant"):
            Rotation(np.diag([1.0, 1.0, -1.0]))

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            Rotation(np.eye(4))

    def test_matrix_is_frozen(self):
        r = Rotation.identity()
        with pytest.raises(ValueError):
            r.m[0, 0] = 2.0

    def test_axis_angle_zero_is_exact_identity(self):
        r = Rotation.from_axis_angle([0.0, 0.0, 1.0], 0.0)
        assert np.array_equal(r.m, np.eye(3))

    def test_axis_angle_quarter_turn_about_z(self):
        r = Rotation.from_axis_angle([0, 0, 1], math.pi / 2)
        np.testing.assert_allclose(r.apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(r.apply([0.0, 1.0, 0.0]), [-1.0, 0.0, 0.0], atol=1e-15)

    def test_axis_angle_normalizes_axis(self):
        a = Rotation.from_axis_angle([0, 0, 10.0], 0.7)
        b = Rotation.from_axis_angle([0, 0, 1.0], 0.7)
        np.testing.assert_allclose(a.m, b.m, atol=1e-15)

    def test_axis_angle_zero_axis_rejected(self):
        with pytest.raises(ValueError, match="near-zero"):
            Rotation.from_axis_angle([0.0, 0.0, 0.0], 1.0)

    def test_apply_rows_matches_loop(self, rng):
        r = random_rotation(Seed(3))
        v = rng.normal(size=(5, 3))
        out = r.apply(v)
        for i in range(5):
            np.testing.assert_allclose(out[i], r.m @ v[i], atol=1e-15)

    def test_inverse_roundtrip(self):
        r = random_rotation(Seed(8))
        assert geodesic_distance(r @ r.inverse(), Rotation.identity()) < 1e-15

    def test_matmul_composes_rotations(self):
        a = random_rotation(Seed(11))
        b = random_rotation(Seed(12))
        np.testing.assert_allclose((a @ b).m, a.m @ b.m, atol=1e-15)
        with pytest.raises(TypeError):
            a @ 3


class TestQuaternion:
    # One rotation per branch of the conversion: trace-positive plus each
    # dominant diagonal element.
    BRANCHY = [
        Rotation.from_axis_angle([1, 2, 3], 0.4),
        Rotation.from_axis_angle([1, 0, 0], math.pi),
        Rotation.from_axis_angle([0, 1, 0], math.pi),
        Rotation.from_axis_angle([0, 0, 1], math.pi),
    ]

    @pytest.mark.parametrize("r", BRANCHY, ids=["generic", "x180", "y180", "z180"])
    def test_roundtrip(self, r: Rotation):
        q = r.to_quaternion()
        assert q[0] >= 0.0
        assert abs(np.linalg.norm(q) - 1.0) < 1e-12
        back = Rotation.from_quaternion(q)
        assert geodesic_distance(r, back) < 1e-12

    def test_identity_quaternion(self):
        np.testing.assert_allclose(
            Rotation.identity().to_quaternion(), [1.0, 0.0, 0.0, 0.0], atol=1e-15
        )

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError, match="norm"):
            Rotation.from_quaternion([1.0, 1.0, 0.0, 0.0])


class TestPose:
    def test_apply_matches_homogeneous_matrix(self, rng):
        p = Pose(random_rotation(Seed(4)), np.array([1.0, -2.0, 0.5]))
        x = rng.normal(size=3)
        hom = p.matrix() @ np.append(x, 1.0)
        np.testing.assert_allclose(p.apply(x), hom[:3], atol=1e-15)

    def test_compose_matches_homogeneous_product(self):
        # Axis-aligned pair checked against the brute-force 4x4 product.
        p = Pose(Rotation.from_axis_angle([0, 0, 1], math.pi / 2), [1.0, 2.0, 3.0])
        q = Pose(Rotation.from_axis_angle([1, 0, 0], math.pi), [-1.0, 0.0, 5.0])
        np.testing.assert_allclose(
            compose(p, q).matrix(), p.matrix() @ q.matrix(), atol=1e-15
        )

    def test_compose_application_order(self, rng, make_poses):
        p, q = make_poses(21, 2)
        x = rng.normal(size=3)
        np.testing.assert_allclose(
            compose(p, q).apply(x), p.apply(q.apply(x)), atol=1e-12
        )

    def test_inverse(self, make_poses):
        (p,) = make_poses(22, 1)
        rt = compose(p, inverse(p))
        assert geodesic_distance(rt.r, Rotation.identity()) < 1e-15
        np.testing.assert_allclose(rt.t, np.zeros(3), atol=1e-15)

    def test_accepts_raw_matrix(self):
        p = Pose(np.eye(3), np.zeros(3))
        assert isinstance(p.r, Rotation)

    def test_identity(self):
        p = Pose.identity()
        assert np.array_equal(p.matrix(), np.eye(4))


class TestGeodesicDistance:
    def test_identical_rotations_give_exact_zero(self):
        for s in range(10):
            r = random_rotation(Seed(s))
            assert geodesic_distance(r, r) == 0.0

    def test_half_turn_gives_exact_pi(self):
        r = Rotation.from_axis_angle([0, 0, 1], math.pi)
        assert geodesic_distance(Rotation.identity(), r) == math.pi

    def test_recovers_rotation_angle(self):
        r = Rotation.from_axis_angle([1.0, 0.0, 0.0], 0.3)
        assert abs(geodesic_distance(Rotation.identity(), r) - 0.3) < 1e-12

    def test_symmetry_and_bi_invariance(self):
        a, b, q = (random_rotation(Seed(s)) for s in (31, 32, 33))
        d = geodesic_distance(a, b)
        assert abs(d - geodesic_distance(b, a)) < 1e-12
        assert abs(d - geodesic_distance(q @ a, q @ b)) < 1e-9
        assert abs(d - geodesic_distance(a @ q, b @ q)) < 1e-9

    def test_haar_mean_matches_density_integral(self):
        """Mean angle between a fixed and a uniform random rotation.

        The rotation-angle density under the Haar measure is
        (1 - cos(theta)) / pi on [0, pi]; the test integrates it
        independently with scipy and compares the Monte Carlo mean.
        """
        from scipy.integrate import quad

        expected, quad_err = quad(lambda t: t * (1.0 - math.cos(t)) / math.pi, 0.0, math.pi)
        assert quad_err < 1e-10
        assert abs(expected - 2.207416099162478) < 1e-12  # pi/2 + 2/pi

        mats = random_rotation_matrices(Seed(1234), 20000)
        eye = Rotation.identity()
        angles = [geodesic_distance(eye, Rotation(m)) for m in mats]
        assert abs(float(np.mean(angles)) - expected) < 0.02


class TestRandomRotations:
    def test_matrices_are_rotations(self):
        mats = random_rotation_matrices(Seed(5), 50)
        assert mats.shape == (50, 3, 3)
        for m in mats:
            np.testing.assert_allclose(m.T @ m, np.eye(3), atol=1e-12)
            assert abs(np.linalg.det(m) - 1.0) < 1e-12

    def test_deterministic_per_seed(self):
        a = random_rotation_matrices(Seed(6), 4)
        b = random_rotation_matrices(Seed(6), 4)
        assert np.array_equal(a, b)
        c = random_rotation_matrices(Seed(7), 4)
        assert not np.array_equal(a, c)


class TestSeed:
    @pytest.mark.parametrize("bad", [-1, 2**64, True, 1.5, "7"])
    def test_rejects_invalid_values(self, bad):
        with pytest.raises((TypeError, ValueError)):
            Seed(bad)

    def test_derive_is_stable_and_distinct(self):
        s = Seed(42)
        assert s.derive(3) == s.derive(3)
        assert s.derive(3) != s.derive(4)
        assert s.derive(1, 2) != s.derive(2, 1)

    def test_rng_streams_reproducible(self):
        a = Seed(9).rng(1).normal(size=4)
        b = Seed(9).rng(1).normal(size=4)
        assert np.array_equal(a, b)


class TestUnitVec3:
    def test_normalize(self):
        u = UnitVec3.normalize([3.0, 0.0, 4.0])
        np.testing.assert_allclose(u.v, [0.6, 0.0, 0.8], atol=1e-15)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            UnitVec3([1.0, 1.0, 0.0])

    def test_rejects_near_zero(self):
        with pytest.raises(ValueError):
            UnitVec3.normalize([0.0, 0.0, 1e-15])


class TestPoseFileIO:
    def test_roundtrip_is_exact(self, tmp_path, make_poses):
        poses = make_poses(77, 5)
        path = tmp_path / "poses.txt"
        save_poses(poses, path)
        loaded = load_poses(path)
        assert len(loaded) == 5
        for a, b in zip(poses, loaded):
            assert np.array_equal(a.r.m, b.r.m)
            assert np.array_equal(a.t, b.t)

    def test_rejects_wrong_field_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 0 0 0 1 0 0 0 1 0 0\n")
        with pytest.raises(ValueError):
            load_poses(path)

    def test_rejects_non_rotation_rows(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 0 0 0 1 0 0 0 1 0 0 0\n")
        with pytest.raises(ValueError):
            load_poses(path)
