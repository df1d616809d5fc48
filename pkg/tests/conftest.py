import numpy as np
import pytest

from fabrik_sqp import kuka, robots
from fabrik_sqp.geometry import make_transform, polar_rotation

# Reference IK pair for the UR5: a desired pose and the joint vector
# known to reach it. Both carry 3-decimal rounding; the homogeneous
# bottom row was corrected and the rotation block is re-orthonormalized
# before use.
UR5_REF_ROTATION = np.array(
    [
        [-0.770, 0.618, 0.156],
        [-0.638, -0.740, -0.214],
        [-0.017, -0.265, 0.964],
    ]
)
UR5_REF_POSITION = np.array([-0.296, -0.869, 0.288])
UR5_REF_THETA = np.array([1.103, -0.107, -0.114, -1.226, 1.333, -1.995])

# Same for the KUKA. The printed elbow bend is also recorded: the
# 3-decimal position rounds the wrist target ~1.2e-4 m outside the
# 0.82 m reach, so the fixture restores the wrist radius implied by the
# printed elbow angle (see golden_kuka_pose).
KUKA_REF_ROTATION = np.array(
    [
        [0.537, 0.838, 0.094],
        [-0.654, 0.344, 0.674],
        [0.532, -0.423, 0.733],
    ]
)
KUKA_REF_POSITION = np.array([0.618, -0.463, 0.382])
KUKA_REF_THETA = np.array([-0.745, 1.655, -1.686, -0.019, 1.003, -2.025, -0.505])
KUKA_REF_ELBOW_BEND = 0.019


@pytest.fixture(scope="session")
def ur5_model():
    return robots.ur5_model()


@pytest.fixture(scope="session")
def kuka_model():
    return robots.kuka_model()


@pytest.fixture(scope="session")
def golden_ur5_pose():
    return make_transform(polar_rotation(UR5_REF_ROTATION), UR5_REF_POSITION)


@pytest.fixture(scope="session")
def golden_kuka_pose_raw():
    """The printed pose as-is (wrist target just beyond reach)."""
    return make_transform(polar_rotation(KUKA_REF_ROTATION), KUKA_REF_POSITION)


@pytest.fixture(scope="session")
def golden_kuka_pose(golden_kuka_pose_raw, kuka_model):
    """Printed pose with the wrist radius print-rounding undone.

    The end-effector is pulled toward the shoulder along the wrist ray
    until the wrist sits at the radius implied by the printed elbow
    bend (|theta4| = 0.019, ~40 um inside the reach sphere).
    """
    model = kuka_model
    t = golden_kuka_pose_raw.copy()
    l2, l3 = model.link_lengths[1], model.link_lengths[2]
    r_ref = np.sqrt(l2 * l2 + l3 * l3 + 2 * l2 * l3 * np.cos(KUKA_REF_ELBOW_BEND))
    shoulder = np.array([0.0, 0.0, model.link_lengths[0]])
    d = kuka.wrist_target(t, model) - shoulder
    shift = (float(np.linalg.norm(d)) - r_ref) * d / float(np.linalg.norm(d))
    t[:3, 3] = t[:3, 3] - shift
    return t
