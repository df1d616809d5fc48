import math

import numpy as np
import pytest

from fabrik_sqp.geometry import rotation_defect
from fabrik_sqp.robots import (
    DHRow,
    dh_transform,
    fk_frames,
    forward_kinematics,
    get_model,
    kuka_model,
    model_from_json,
    model_to_json,
    pose_mismatch,
    ur5_model,
)


def dh_oracle(a, alpha, d, theta):
    """Hand-multiplied Rz(theta) Tz(d) Tx(a) Rx(alpha), written out."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


class TestDHTransform:
    def test_all_zero_row_is_identity(self):
        assert np.array_equal(dh_transform(DHRow(0.0, 0.0, 0.0), 0.0), np.eye(4))

    def test_pure_x_translation(self):
        t = dh_transform(DHRow(a=1.0, alpha=0.0, d=0.0), 0.0)
        assert np.allclose(t, np.array([[1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]))

    def test_ur5_first_row_matches_hand_product(self, ur5_model):
        row = ur5_model.dh[0]
        got = dh_transform(row, 0.0)
        want = np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, -1.0, 0.0],
                [0.0, 1.0, 0.0, 0.089159],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
        assert np.allclose(got, want, atol=1e-12)

    def test_matches_symbolic_oracle_randomly(self, ur5_model, kuka_model):
        rng = np.random.default_rng(0)
        for model in (ur5_model, kuka_model):
            for row in model.dh:
                theta = float(rng.uniform(-math.pi, math.pi))
                assert np.allclose(
                    dh_transform(row, theta),
                    dh_oracle(row.a, row.alpha, row.d, theta + row.theta_offset),
                    atol=1e-15,
                )

    def test_alpha_wrapped(self):
        assert DHRow(0.0, 3 * math.pi, 0.0).alpha == pytest.approx(math.pi)
        assert DHRow(0.0, -math.pi, 0.0).alpha == pytest.approx(math.pi)


def fk_oracle(model, theta):
    """Standalone matrix-product chain, independent of forward_kinematics."""
    t = np.eye(4)
    for row, th in zip(model.dh, theta):
        t = t @ dh_oracle(row.a, row.alpha, row.d, th + row.theta_offset)
    return t


class TestForwardKinematics:
    def test_ur5_zero_pose(self, ur5_model):
        t = forward_kinematics(ur5_model, np.zeros(6))
        assert np.allclose(t, fk_oracle(ur5_model, np.zeros(6)), atol=1e-15)
        assert np.allclose(t[:3, 3], [-0.81725, -0.19145, -0.005491], atol=1e-9)

    def test_kuka_zero_pose_fully_extended(self, kuka_model):
        t = forward_kinematics(kuka_model, np.zeros(7))
        lengths = kuka_model.link_lengths
        assert np.allclose(t[:3, 3], [0.0, 0.0, float(np.sum(lengths))], atol=1e-12)

    def test_matches_oracle_randomly(self, ur5_model, kuka_model):
        rng = np.random.default_rng(1)
        for model in (ur5_model, kuka_model):
            for _ in range(100):
                theta = rng.uniform(-math.pi, math.pi, model.dof)
                assert np.allclose(
                    forward_kinematics(model, theta), fk_oracle(model, theta), atol=1e-12
                )

    def test_rotation_parts_orthonormal(self, ur5_model, kuka_model):
        rng = np.random.default_rng(2)
        for model in (ur5_model, kuka_model):
            for _ in range(500):
                theta = rng.uniform(model.joint_limits[:, 0], model.joint_limits[:, 1])
                t = forward_kinematics(model, theta)
                assert rotation_defect(t[:3, :3]) <= 1e-9

    def test_length_mismatch_rejected(self, ur5_model):
        with pytest.raises(ValueError):
            forward_kinematics(ur5_model, np.zeros(5))

    def test_frames_are_cumulative(self, kuka_model):
        theta = np.linspace(-1.0, 1.0, 7)
        frames = fk_frames(kuka_model, theta)
        assert len(frames) == 8
        assert np.allclose(frames[-1], forward_kinematics(kuka_model, theta), atol=1e-14)


class TestPoseMismatch:
    def test_exact_roundtrip_is_zero(self, ur5_model, kuka_model):
        rng = np.random.default_rng(3)
        for model in (ur5_model, kuka_model):
            for _ in range(500):
                theta = rng.uniform(model.joint_limits[:, 0], model.joint_limits[:, 1])
                assert pose_mismatch(model, theta, forward_kinematics(model, theta)) <= 1e-10

    def test_pure_position_offset(self, ur5_model):
        theta = np.array([0.2, -0.8, 1.0, -0.5, 0.4, 0.1])
        t = forward_kinematics(ur5_model, theta)
        t_shift = t.copy()
        t_shift[:3, 3] += [0.001, 0.0, 0.0]
        assert pose_mismatch(ur5_model, theta, t_shift) == pytest.approx(0.001, abs=1e-12)

    def test_composes_position_and_rotation(self, ur5_model):
        rng = np.random.default_rng(4)
        from fabrik_sqp.geometry import cartesian_error

        theta = rng.uniform(-math.pi, math.pi, 6)
        other = rng.uniform(-math.pi, math.pi, 6)
        t_des = forward_kinematics(ur5_model, other)
        err = cartesian_error(forward_kinematics(ur5_model, theta), t_des)
        assert pose_mismatch(ur5_model, theta, t_des) == pytest.approx(
            err.eps_pos + err.eps_rot, abs=1e-14
        )


class TestModelData:
    def test_link_lengths_consistent_with_dh(self, ur5_model, kuka_model):
        assert ur5_model.link_lengths[1] == abs(ur5_model.dh[1].a)
        assert ur5_model.link_lengths[2] == abs(ur5_model.dh[2].a)
        assert kuka_model.link_lengths[0] == kuka_model.dh[0].d
        assert kuka_model.link_lengths[3] == kuka_model.dh[6].d

    def test_default_limits(self, ur5_model):
        assert np.allclose(ur5_model.joint_limits[:, 0], -math.pi)
        assert np.allclose(ur5_model.joint_limits[:, 1], math.pi)

    def test_json_roundtrip(self, kuka_model):
        doc = model_to_json(kuka_model)
        loaded = model_from_json(doc)
        assert loaded.name == kuka_model.name
        assert np.allclose(loaded.joint_limits, kuka_model.joint_limits)
        assert np.allclose(loaded.link_lengths, kuka_model.link_lengths)
        theta = np.linspace(-0.5, 0.5, 7)
        assert np.allclose(
            forward_kinematics(loaded, theta), forward_kinematics(kuka_model, theta)
        )

    def test_json_missing_field(self):
        with pytest.raises(ValueError, match="dh"):
            model_from_json('{"name": "ur5", "limits": []}')

    def test_bad_limits_rejected(self):
        import json

        doc = json.loads(model_to_json(ur5_model()))
        doc["limits"][2] = [1.0, -1.0]
        with pytest.raises(ValueError):
            model_from_json(json.dumps(doc))

    def test_get_model(self):
        assert get_model("UR5").name == "ur5"
        assert get_model("kuka").dof == 7
        with pytest.raises(ValueError):
            get_model("puma")
