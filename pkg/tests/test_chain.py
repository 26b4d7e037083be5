import numpy as np
import pytest
import yaml

import waamcell as wc
from waamcell import quaternion as quat
from waamcell.chain import (ChainDescription, ConfigurationError, Joint, Pose,
                            arm_body_jacobian, arm_forward_kinematics,
                            body_jacobian, chain_from_dict, forward_kinematics,
                            full_kinematics, load_chain, system_jacobian,
                            table_forward_kinematics)


@pytest.fixture(scope="module")
def chain():
    return wc.default_chain()


def random_config(rng, chain):
    return rng.uniform(-1.5, 1.5, chain.dof)


def fd_jacobian(chain, theta, h=1e-6):
    """Central finite-difference oracle for the system Jacobian."""
    J = np.zeros((6, chain.dof))
    q0 = forward_kinematics(chain, theta).q
    B = quat.representation_jacobian(q0, "spatial")
    for i in range(chain.dof):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        fp, fm = forward_kinematics(chain, tp), forward_kinematics(chain, tm)
        J[:3, i] = (fp.p - fm.p) / (2 * h)
        qp, qm = fp.q, fm.q
        if np.dot(qp, qm) < 0:
            qm = -qm
        dq = (qp - qm) / (2 * h)
        J[3:, i], *_ = np.linalg.lstsq(B, dq, rcond=None)[0:1]
    return J


class TestPose:
    def test_compose_inverse_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            pose = Pose(rng.normal(size=3), quat.normalize(rng.normal(size=4)))
            ident = pose.compose(pose.inverse())
            assert np.allclose(ident.p, 0.0, atol=1e-9)
            assert quat.rotation_distance(ident.q, quat.IDENTITY) < 1e-9

    def test_matrix_consistent_with_compose(self):
        rng = np.random.default_rng(1)
        a = Pose(rng.normal(size=3), quat.normalize(rng.normal(size=4)))
        b = Pose(rng.normal(size=3), quat.normalize(rng.normal(size=4)))
        assert np.allclose(a.compose(b).matrix(), a.matrix() @ b.matrix(), atol=1e-9)


class TestJoint:
    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            Joint(kind="helical", axis=[0, 0, 1], origin=Pose.identity())

    def test_zero_axis(self):
        with pytest.raises(ConfigurationError):
            Joint(kind="revolute", axis=[0, 0, 0], origin=Pose.identity())

    def test_revolute_transform(self):
        j = Joint(kind="revolute", axis=[0, 0, 1],
                  origin=Pose([1.0, 0.0, 0.0], quat.IDENTITY))
        t = j.transform(np.pi / 2)
        assert np.allclose(t.p, [1, 0, 0], atol=1e-12)
        assert np.allclose(quat.rotate(t.q, [1, 0, 0]), [0, 1, 0], atol=1e-12)

    def test_prismatic_transform(self):
        j = Joint(kind="prismatic", axis=[0, 1, 0], origin=Pose.identity())
        assert np.allclose(j.transform(2.5).p, [0, 2.5, 0], atol=1e-12)


class TestForwardKinematics:
    def test_home_config_within_reach(self, chain):
        pose = forward_kinematics(chain, chain.home_config)
        assert np.linalg.norm(pose.p) < 4000.0

    def test_single_revolute_hand_computation(self):
        # one revolute table joint, one revolute arm joint, trivial offsets
        mini = ChainDescription(
            table_joints=[Joint("revolute", [0, 0, 1], Pose.identity())],
            arm_joints=[Joint("revolute", [0, 0, 1],
                              Pose([1000.0, 0.0, 0.0], quat.IDENTITY))],
            t_ab_tb=Pose([1000.0, 0.0, 0.0], quat.IDENTITY),
            tool_offset=Pose([100.0, 0.0, 0.0], quat.IDENTITY),
        )
        # all zeros: torch at [1100,0,0], F_d at [1000,0,0] -> relative [100,0,0]
        pose = forward_kinematics(mini, np.zeros(2))
        assert np.allclose(pose.p, [100.0, 0.0, 0.0], atol=1e-9)
        assert quat.rotation_distance(pose.q, quat.IDENTITY) < 1e-12
        # rotate F_d by pi/2: the torch appears rotated -pi/2 in F_d
        pose = forward_kinematics(mini, [np.pi / 2, 0.0])
        assert np.allclose(pose.p, [0.0, -100.0, 0.0], atol=1e-9)

    def test_table_arm_split_consistency(self, chain):
        rng = np.random.default_rng(2)
        theta = random_config(rng, chain)
        t_pose = table_forward_kinematics(chain, theta[:chain.n_table])
        a_pose = arm_forward_kinematics(chain, theta[chain.n_table:])
        rel = t_pose.inverse().compose(a_pose)
        pose = forward_kinematics(chain, theta)
        assert np.allclose(pose.p, rel.p, atol=1e-9)
        assert quat.rotation_distance(pose.q, rel.q) < 1e-12

    def test_canonical_quaternion_output(self, chain):
        rng = np.random.default_rng(3)
        for _ in range(20):
            assert forward_kinematics(chain, random_config(rng, chain)).q[0] >= 0.0

    def test_wrong_length_raises(self, chain):
        with pytest.raises(ConfigurationError):
            forward_kinematics(chain, np.zeros(5))
        with pytest.raises(ConfigurationError):
            table_forward_kinematics(chain, np.zeros(3))
        with pytest.raises(ConfigurationError):
            arm_forward_kinematics(chain, np.zeros(2))


class TestJacobian:
    def test_matches_finite_difference(self, chain):
        rng = np.random.default_rng(4)
        for _ in range(25):
            theta = random_config(rng, chain)
            J = system_jacobian(chain, theta)
            Jfd = fd_jacobian(chain, theta)
            scale = max(1.0, np.max(np.abs(J)))
            assert np.max(np.abs(J - Jfd)) / scale < 1e-6

    def test_full_kinematics_pose_agrees(self, chain):
        rng = np.random.default_rng(5)
        theta = random_config(rng, chain)
        tcp, arm, _ = full_kinematics(chain, theta)
        assert np.allclose(tcp.p, forward_kinematics(chain, theta).p, atol=1e-9)
        assert np.allclose(arm.p, arm_forward_kinematics(chain, theta[2:]).p, atol=1e-9)

    def test_table_columns_oppose_arm_motion(self, chain):
        # a pure table turn and the matching arm base turn cancel:
        # their angular columns are opposite in F_d at aligned configs
        theta = np.zeros(chain.dof)
        J = system_jacobian(chain, theta)
        # turn axis (joint 2) and arm joint 1 are both +z at zeros
        assert np.allclose(J[3:, 1], -J[3:, 2], atol=1e-12)

    def test_body_jacobian_rotation(self, chain):
        rng = np.random.default_rng(6)
        theta = random_config(rng, chain)
        pose = forward_kinematics(chain, theta)
        J = system_jacobian(chain, theta)
        Jb = body_jacobian(J, pose.rotation())
        R = pose.rotation()
        assert np.allclose(Jb[:3], R.T @ J[:3], atol=1e-12)
        # twist magnitude is representation independent
        assert np.allclose(np.linalg.norm(Jb, axis=0), np.linalg.norm(J, axis=0),
                           atol=1e-9)

    def test_body_jacobian_rejects_non_rotation(self, chain):
        J = np.zeros((6, 8))
        with pytest.raises(ConfigurationError):
            body_jacobian(J, np.eye(3) * 2.0)

    def test_arm_body_jacobian_shape(self, chain):
        Jb2 = arm_body_jacobian(chain, chain.home_config)
        assert Jb2.shape == (6, chain.n_arm)


class TestChainLoading:
    def test_yaml_round_trip(self, chain, tmp_path):
        loaded = load_chain("configs/default_cell.yaml")
        rng = np.random.default_rng(7)
        theta = random_config(rng, chain)
        a, b = forward_kinematics(chain, theta), forward_kinematics(loaded, theta)
        assert np.allclose(a.p, b.p, atol=1e-9)
        assert quat.rotation_distance(a.q, b.q) < 1e-12

    def test_missing_field(self):
        with pytest.raises(ConfigurationError, match="tool_offset"):
            chain_from_dict({"schema": 1, "table_joints": [], "arm_joints": [],
                             "t_ab_tb": {}})

    def test_bad_schema(self):
        with pytest.raises(ConfigurationError, match="schema"):
            chain_from_dict({"schema": 99})

    def test_joint_diagnostic_is_located(self):
        data = {"schema": 1,
                "table_joints": [{"type": "revolute", "axis": [0, 0, 0]}],
                "arm_joints": [], "t_ab_tb": {}, "tool_offset": {}}
        with pytest.raises(ConfigurationError, match=r"table_joints\[0\]"):
            chain_from_dict(data)

    def test_non_unit_rotation_rejected(self):
        data = {"schema": 1, "table_joints": [], "arm_joints": [],
                "t_ab_tb": {"rotation": [1.0, 1.0, 0.0, 0.0]}, "tool_offset": {}}
        with pytest.raises(ConfigurationError, match="norm"):
            chain_from_dict(data)

    def test_malformed_yaml_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("schema: [unclosed\n")
        with pytest.raises(ConfigurationError):
            load_chain(path)

    def test_home_config_length_checked(self):
        data = dict(yaml.safe_load(open("configs/default_cell.yaml")))
        data["home_config"] = [0.0, 0.0]
        with pytest.raises(ConfigurationError, match="home_config"):
            chain_from_dict(data)
