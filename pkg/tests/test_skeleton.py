import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossmotion.skeleton import (
    NUM_BONES,
    NUM_JOINTS,
    MappingIncompleteError,
    canonical_topology,
    extract_bone_lengths,
    forward_kinematics_tpose,
    frame_bone_lengths,
    retarget_to_unified,
)

TOPO = canonical_topology()


def test_topology_counts():
    assert TOPO.num_joints == 25
    assert TOPO.num_bones == 24
    assert TOPO.parent_index[0] == -1


def test_tail_chain_parents():
    assert TOPO.parent_index[22] == 0
    assert TOPO.parent_index[23] == 22
    assert TOPO.parent_index[24] == 23


def test_topology_is_single_rooted_tree():
    assert len(TOPO.bone_edges) == len(TOPO.joint_names) - 1
    visited = set()
    stack = [0]
    while stack:
        j = stack.pop()
        assert j not in visited, "cycle detected"
        visited.add(j)
        stack.extend(TOPO.children(j))
    assert visited == set(range(25))


def test_bone_directions_unit_norm():
    norms = np.linalg.norm(TOPO.bone_directions, axis=1)
    assert np.abs(norms - 1.0).max() <= 1e-9


def test_edges_ordered_by_child():
    for e, (parent, child) in enumerate(TOPO.bone_edges):
        assert child == e + 1
        assert parent == TOPO.parent_index[child]


def test_extract_uniform_chain():
    # every child 0.5 m from its parent along the canonical direction
    tpose = forward_kinematics_tpose(np.full(NUM_BONES, 0.5), TOPO)
    lengths = extract_bone_lengths(tpose, TOPO)
    assert np.allclose(lengths, 0.5, atol=1e-12)


def test_extract_colocated_tail_gives_zero():
    b = np.full(NUM_BONES, 0.3)
    b[21:] = 0.0
    tpose = forward_kinematics_tpose(b, TOPO)
    assert np.all(tpose[22] == tpose[0])
    lengths = extract_bone_lengths(tpose, TOPO)
    assert tuple(lengths[21:]) == (0.0, 0.0, 0.0)


def test_extract_matches_per_edge_norm_oracle():
    rng = np.random.default_rng(7)
    tpose = rng.normal(size=(NUM_JOINTS, 3))
    lengths = extract_bone_lengths(tpose, TOPO)
    for e, (parent, child) in enumerate(TOPO.bone_edges):
        expected = np.sqrt(((tpose[child] - tpose[parent]) ** 2).sum())
        assert abs(lengths[e] - expected) <= 1e-12


def test_extract_rejects_non_finite():
    bad = np.zeros((NUM_JOINTS, 3))
    bad[3, 1] = np.nan
    with pytest.raises(ValueError):
        extract_bone_lengths(bad, TOPO)


def test_fk_zero_lengths_collapse_to_origin():
    joints = forward_kinematics_tpose(np.zeros(NUM_BONES), TOPO)
    assert np.all(joints == 0.0)


def test_fk_single_bone_translates_descendants():
    b = np.zeros(NUM_BONES)
    b[0] = 1.0  # pelvis -> spine1
    joints = forward_kinematics_tpose(b, TOPO)
    offset = TOPO.bone_directions[0]
    moved = {1} | set(TOPO.descendants(1))
    for j in range(NUM_JOINTS):
        expected = offset if j in moved else np.zeros(3)
        assert np.allclose(joints[j], expected)


def test_fk_rejects_negative_lengths():
    b = np.zeros(NUM_BONES)
    b[3] = -0.1
    with pytest.raises(ValueError):
        forward_kinematics_tpose(b, TOPO)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=NUM_BONES, max_size=NUM_BONES))
def test_fk_extract_round_trip(lengths):
    b = np.array(lengths)
    recovered = extract_bone_lengths(forward_kinematics_tpose(b, TOPO), TOPO)
    assert np.abs(recovered - b).max() <= 1e-9


def _random_rigid(rng):
    angle = rng.uniform(0, 2 * np.pi)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
    t = rng.normal(size=3)
    return R, t


def test_frame_lengths_invariant_under_rigid_transform():
    rng = np.random.default_rng(11)
    joints = rng.normal(size=(NUM_JOINTS, 3))
    base = frame_bone_lengths(joints, TOPO)
    for _ in range(5):
        R, t = _random_rigid(rng)
        moved = joints @ R.T + t
        assert np.abs(frame_bone_lengths(moved, TOPO) - base).max() <= 1e-9


def test_frame_lengths_identity_pose_matches_extract():
    b = np.random.default_rng(3).uniform(0.05, 0.8, NUM_BONES)
    tpose = forward_kinematics_tpose(b, TOPO)
    assert np.array_equal(frame_bone_lengths(tpose, TOPO), extract_bone_lengths(tpose, TOPO))


def test_frame_lengths_bent_knee_unchanged():
    # rotate the left-knee subtree rigidly about the knee joint
    b = np.random.default_rng(5).uniform(0.1, 0.5, NUM_BONES)
    joints = forward_kinematics_tpose(b, TOPO)
    base = frame_bone_lengths(joints, TOPO)
    angle = 0.7
    R = np.array(
        [[1, 0, 0], [0, np.cos(angle), -np.sin(angle)], [0, np.sin(angle), np.cos(angle)]]
    )
    bent = joints.copy()
    pivot = joints[7]
    for j in [8, 9]:
        bent[j] = pivot + R @ (joints[j] - pivot)
    assert np.abs(frame_bone_lengths(bent, TOPO) - base).max() <= 1e-9


def _identity_map():
    return {j: j for j in range(NUM_JOINTS)}


def test_retarget_identity():
    rng = np.random.default_rng(0)
    frames = rng.normal(size=(6, NUM_JOINTS, 3))
    out = retarget_to_unified(frames, _identity_map(), 1.0, TOPO)
    assert np.array_equal(out, frames)


def test_retarget_virtual_tail_colocated_with_pelvis():
    rng = np.random.default_rng(1)
    src = rng.normal(size=(4, 22, 3))  # human-like source without tail joints
    joint_map = {j: (j if j < 22 else None) for j in range(NUM_JOINTS)}
    out = retarget_to_unified(src, joint_map, 1.0, TOPO)
    for tail in (22, 23, 24):
        assert np.array_equal(out[:, tail], out[:, 0])
    lengths = frame_bone_lengths(out[0], TOPO)
    assert tuple(lengths[21:]) == (0.0, 0.0, 0.0)


def test_retarget_scale_doubles_bone_lengths():
    rng = np.random.default_rng(2)
    frames = rng.normal(size=(3, NUM_JOINTS, 3))
    before = frame_bone_lengths(frames, TOPO)
    out = retarget_to_unified(frames, _identity_map(), 2.0, TOPO)
    after = frame_bone_lengths(out, TOPO)
    assert np.abs(after - 2.0 * before).max() <= 1e-9


def test_retarget_unmapped_joint_raises():
    joint_map = _identity_map()
    del joint_map[17]
    with pytest.raises(MappingIncompleteError):
        retarget_to_unified(np.zeros((2, NUM_JOINTS, 3)), joint_map, 1.0, TOPO)


def test_retarget_virtual_pelvis_raises():
    joint_map = _identity_map()
    joint_map[0] = None
    with pytest.raises(MappingIncompleteError):
        retarget_to_unified(np.zeros((2, NUM_JOINTS, 3)), joint_map, 1.0, TOPO)
