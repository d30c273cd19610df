"""Forward kinematics and reverse-mode gradients through the kinematic chain.

Conventions: a link pose (R, t) maps link-local coordinates to the world frame.
The pose of a child link is the parent pose composed with the joint's fixed
origin transform and then the joint motion (rotation about, or translation
along, the joint axis). Gradients are propagated analytically with per-joint
screw derivatives: perturbing a revolute joint swings every descendant point
about the joint's world axis line, a prismatic joint slides it along the axis.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .robot import Embodiment
from .transforms import rotation_about_axis


@dataclass
class LinkPoseSet:
    """World poses for every link of an embodiment, in its link order."""

    rotations: np.ndarray  # (L, 3, 3)
    translations: np.ndarray  # (L, 3)

    def pose_of(self, index: int):
        return self.rotations[index], self.translations[index]


@dataclass(frozen=True)
class _ChainTable:
    """Precomputed per-embodiment indexing for the FK walk and the pullback."""

    parent_of_link: np.ndarray  # (L,) link index, -1 for the root
    joint_of_link: np.ndarray  # (L,) joint index whose child is this link, -1 root
    kinds: tuple[str, ...]  # per joint
    dof_of_joint: np.ndarray  # (J,) dof index, -1 for fixed joints
    axes: np.ndarray  # (J, 3)
    origin_rotations: np.ndarray  # (J, 3, 3)
    origin_translations: np.ndarray  # (J, 3)
    ancestor_dofs: tuple[tuple[int, ...], ...]  # per link, root-to-link dof indices
    dof_kinds: tuple[str, ...]  # per dof: revolute | prismatic


_chain_cache: "weakref.WeakKeyDictionary[Embodiment, _ChainTable]" = weakref.WeakKeyDictionary()


def _chain(e: Embodiment) -> _ChainTable:
    table = _chain_cache.get(e)
    if table is not None:
        return table

    link_index = {l.name: i for i, l in enumerate(e.links)}
    joint_index = {j.name: i for i, j in enumerate(e.joints)}
    n_links = len(e.links)
    parent_of_link = np.full(n_links, -1, dtype=np.int64)
    joint_of_link = np.full(n_links, -1, dtype=np.int64)
    for i, link in enumerate(e.links):
        if link.parent_joint is None:
            continue
        j = joint_index[link.parent_joint]
        joint_of_link[i] = j
        parent_of_link[i] = link_index[e.joints[j].parent_link]

    dof_of_joint = np.full(len(e.joints), -1, dtype=np.int64)
    dof_kinds = []
    for j, joint in enumerate(e.joints):
        if joint.kind != "fixed":
            dof_of_joint[j] = len(dof_kinds)
            dof_kinds.append(joint.kind)

    ancestor_dofs: list[tuple[int, ...]] = []
    for i in range(n_links):
        if parent_of_link[i] == -1:
            ancestor_dofs.append(())
            continue
        inherited = ancestor_dofs[parent_of_link[i]]
        d = dof_of_joint[joint_of_link[i]]
        ancestor_dofs.append(inherited + ((int(d),) if d >= 0 else ()))

    table = _ChainTable(
        parent_of_link=parent_of_link,
        joint_of_link=joint_of_link,
        kinds=tuple(j.kind for j in e.joints),
        dof_of_joint=dof_of_joint,
        axes=np.array([j.axis for j in e.joints]).reshape(len(e.joints), 3),
        origin_rotations=np.array([j.origin_rotation for j in e.joints]).reshape(-1, 3, 3),
        origin_translations=np.array([j.origin_translation for j in e.joints]).reshape(-1, 3),
        ancestor_dofs=tuple(ancestor_dofs),
        dof_kinds=tuple(dof_kinds),
    )
    _chain_cache[e] = table
    return table


def _fk_frames(e: Embodiment, q: np.ndarray):
    """FK walk returning link poses plus per-dof world axes and pivot points."""
    table = _chain(e)
    n_links = len(e.links)
    rot = np.empty((n_links, 3, 3))
    trans = np.empty((n_links, 3))
    dof = e.dof
    axis_world = np.zeros((dof, 3))
    pivot_world = np.zeros((dof, 3))

    for i in range(n_links):
        j = table.joint_of_link[i]
        if j < 0:
            rot[i] = e.base_rotation
            trans[i] = e.base_translation
            continue
        p = table.parent_of_link[i]
        pre_rot = rot[p] @ table.origin_rotations[j]
        pre_trans = rot[p] @ table.origin_translations[j] + trans[p]
        kind = table.kinds[j]
        if kind == "fixed":
            rot[i] = pre_rot
            trans[i] = pre_trans
            continue
        d = table.dof_of_joint[j]
        a = pre_rot @ table.axes[j]
        axis_world[d] = a
        pivot_world[d] = pre_trans
        if kind == "revolute":
            rot[i] = pre_rot @ rotation_about_axis(table.axes[j], q[d])
            trans[i] = pre_trans
        else:  # prismatic
            rot[i] = pre_rot
            trans[i] = pre_trans + q[d] * a
    return rot, trans, axis_world, pivot_world


def forward_kinematics(e: Embodiment, q: np.ndarray) -> LinkPoseSet:
    """World pose of every link for joint configuration `q` (length = dof)."""
    q = e.check_configuration(q)
    rot, trans, _, _ = _fk_frames(e, q)
    return LinkPoseSet(rot, trans)


def forward_kinematics_batch(e: Embodiment, qs: np.ndarray):
    """Vectorized FK over a (B, dof) batch; returns ((B, L, 3, 3), (B, L, 3))."""
    qs = np.asarray(qs, dtype=float)
    if qs.ndim != 2 or qs.shape[1] != e.dof:
        raise ValidationError(f"batch shape {qs.shape} does not match dof {e.dof}")
    table = _chain(e)
    b, n_links = qs.shape[0], len(e.links)
    rot = np.empty((b, n_links, 3, 3))
    trans = np.empty((b, n_links, 3))
    for i in range(n_links):
        j = table.joint_of_link[i]
        if j < 0:
            rot[:, i] = e.base_rotation
            trans[:, i] = e.base_translation
            continue
        p = table.parent_of_link[i]
        pre_rot = rot[:, p] @ table.origin_rotations[j]
        pre_trans = np.einsum("bij,j->bi", rot[:, p], table.origin_translations[j]) + trans[:, p]
        kind = table.kinds[j]
        if kind == "fixed":
            rot[:, i] = pre_rot
            trans[:, i] = pre_trans
            continue
        d = table.dof_of_joint[j]
        if kind == "revolute":
            rot[:, i] = pre_rot @ _batch_axis_rotation(table.axes[j], qs[:, d])
            trans[:, i] = pre_trans
        else:
            rot[:, i] = pre_rot
            trans[:, i] = pre_trans + qs[:, d, None] * np.einsum("bij,j->bi", pre_rot, table.axes[j])
    return rot, trans


def _batch_axis_rotation(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    x, y, z = axis
    c = np.cos(angles)
    s = np.sin(angles)
    t = 1.0 - c
    out = np.empty((len(angles), 3, 3))
    out[:, 0, 0] = t * x * x + c
    out[:, 0, 1] = t * x * y - s * z
    out[:, 0, 2] = t * x * z + s * y
    out[:, 1, 0] = t * x * y + s * z
    out[:, 1, 1] = t * y * y + c
    out[:, 1, 2] = t * y * z - s * x
    out[:, 2, 0] = t * x * z - s * y
    out[:, 2, 1] = t * y * z + s * x
    out[:, 2, 2] = t * z * z + c
    return out


def _resolve_link_indices(e: Embodiment, link_ids) -> np.ndarray:
    if len(link_ids) and isinstance(link_ids[0], str):
        index = {l.name: i for i, l in enumerate(e.links)}
        try:
            return np.array([index[name] for name in link_ids], dtype=np.int64)
        except KeyError as err:
            raise ValidationError(f"unknown link id {err.args[0]!r}") from None
    idx = np.asarray(link_ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(e.links)):
        raise ValidationError(f"link index out of range for {len(e.links)} links")
    return idx


def evaluate_world_set(e: Embodiment, q: np.ndarray, link_ids, points: np.ndarray,
                       normals: np.ndarray):
    """Transform link-local (point, direction) pairs to the world frame.

    `link_ids` may be link names or integer link indices, one per row of
    `points`/`normals`.
    """
    q = e.check_configuration(q)
    idx = _resolve_link_indices(e, link_ids)
    points = np.asarray(points, dtype=float)
    normals = np.asarray(normals, dtype=float)
    if points.shape != normals.shape or points.ndim != 2 or points.shape[1] != 3:
        raise ValidationError(
            f"points {points.shape} and normals {normals.shape} must both be (N, 3)"
        )
    if len(idx) != len(points):
        raise ValidationError("one link id is required per point")
    rot, trans, _, _ = _fk_frames(e, q)
    r = rot[idx]  # (N, 3, 3)
    world_points = np.einsum("nij,nj->ni", r, points) + trans[idx]
    world_dirs = np.einsum("nij,nj->ni", r, normals)
    return world_points, world_dirs


def evaluate_world_set_batch(e: Embodiment, qs: np.ndarray, link_ids,
                             points: np.ndarray, normals: np.ndarray):
    """Batched `evaluate_world_set` over (B, dof) configurations."""
    idx = _resolve_link_indices(e, link_ids)
    rot, trans = forward_kinematics_batch(e, qs)
    r = rot[:, idx]  # (B, N, 3, 3)
    t = trans[:, idx]  # (B, N, 3)
    world_points = np.einsum("bnij,nj->bni", r, points) + t
    world_dirs = np.einsum("bnij,nj->bni", r, normals)
    return world_points, world_dirs


def _cross_rows(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    out[:, 0] = u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1]
    out[:, 1] = u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2]
    out[:, 2] = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    return out


def evaluate_with_pullback(e: Embodiment, q: np.ndarray, link_indices: np.ndarray,
                           points: np.ndarray, normals: np.ndarray):
    """One FK pass: world sets plus an exact reverse-mode pullback closure.

    Returns (world_points, world_dirs, pullback) where
    pullback(d_points, d_normals) contracts world-frame cotangents to dL/dq.
    The per-dof derivative is assembled from per-link moments: for rows on one
    link, sum dp.(a x (p - o)) = a.(sum p x dp - o x sum dp), so each link
    needs its moments once, not once per ancestor joint.
    """
    table = _chain(e)
    rot, trans, axis_world, pivot_world = _fk_frames(e, q)
    r = rot[link_indices]
    world_points = np.einsum("nij,nj->ni", r, points) + trans[link_indices]
    world_dirs = np.einsum("nij,nj->ni", r, normals)
    unique_links = np.unique(link_indices)

    def pullback(d_points: np.ndarray, d_normals: np.ndarray) -> np.ndarray:
        grad = np.zeros(e.dof)
        for link in unique_links:
            dofs = table.ancestor_dofs[link]
            if not dofs:
                continue
            rows = link_indices == link
            dp = d_points[rows]
            fx, fy, fz = dp.sum(axis=0)  # sum dp
            torque = _cross_rows(world_points[rows], dp).sum(axis=0)  # sum p x dp
            spin = _cross_rows(world_dirs[rows], d_normals[rows]).sum(axis=0)  # sum n x dn
            moment = torque + spin
            for d in dofs:
                a = axis_world[d]
                if table.dof_kinds[d] == "revolute":
                    ox, oy, oz = pivot_world[d]
                    grad[d] += (a[0] * (moment[0] - (oy * fz - oz * fy))
                                + a[1] * (moment[1] - (oz * fx - ox * fz))
                                + a[2] * (moment[2] - (ox * fy - oy * fx)))
                else:
                    grad[d] += a[0] * fx + a[1] * fy + a[2] * fz
        return grad

    return world_points, world_dirs, pullback


def pullback_to_joints(e: Embodiment, q: np.ndarray, link_ids, points: np.ndarray,
                       normals: np.ndarray, d_points: np.ndarray,
                       d_normals: np.ndarray) -> np.ndarray:
    """Contract world-frame cotangents back to a joint-space gradient.

    Given dL/d(world point) and dL/d(world direction) for the evaluated set,
    returns the exact dL/dq of length dof for the composition
    evaluate_world_set(forward_kinematics(q)).
    """
    q = e.check_configuration(q)
    idx = _resolve_link_indices(e, link_ids)
    points = np.asarray(points, dtype=float)
    normals = np.asarray(normals, dtype=float)
    d_points = np.asarray(d_points, dtype=float)
    d_normals = np.asarray(d_normals, dtype=float)
    if d_points.shape != points.shape or d_normals.shape != normals.shape:
        raise ValidationError("cotangent shapes must match the evaluated set")
    if not (np.all(np.isfinite(d_points)) and np.all(np.isfinite(d_normals))):
        raise ValidationError("cotangent contains non-finite entries")
    _, _, pullback = evaluate_with_pullback(e, q, idx, points, normals)
    return pullback(d_points, d_normals)
