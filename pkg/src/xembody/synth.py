"""Synthesis of target-embodiment demonstrations.

Actions are next-frame joint targets from the aligned trajectory. Observations
run a fixed point-cloud pipeline per frame: crop to the workspace box, mask
points near the source robot's surface, add a sampled cloud of the target
robot at its aligned configuration, then farthest-point downsample to a fixed
size. All per-frame randomness derives from hash(global seed, demo id, frame).
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .align import AlignedTrajectory
from .errors import ValidationError
from .kinematics import forward_kinematics
from .robot import Embodiment

try:  # optional JIT for the farthest-point loop; the numpy path is identical
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    _njit = None

TAG_SCENE = 0
TAG_ROBOT = 1


def _fps_indices_numpy(points: np.ndarray, n: int, start: int) -> np.ndarray:
    selected = np.empty(n, dtype=np.int64)
    selected[0] = start
    diff = points - points[start]
    dist = np.einsum("mk,mk->m", diff, diff)
    for k in range(1, n):
        pick = int(np.argmax(dist))  # first occurrence = lowest index on ties
        selected[k] = pick
        diff = points - points[pick]
        np.minimum(dist, np.einsum("mk,mk->m", diff, diff), out=dist)
    return selected


if _njit is not None:
    @_njit(cache=True)
    def _fps_indices_jit(points, n, start):  # pragma: no cover - exercised via wrapper
        m = points.shape[0]
        selected = np.empty(n, dtype=np.int64)
        dist = np.empty(m)
        for i in range(m):
            dx = points[i, 0] - points[start, 0]
            dy = points[i, 1] - points[start, 1]
            dz = points[i, 2] - points[start, 2]
            dist[i] = (dx * dx + dy * dy) + dz * dz
        selected[0] = start
        for k in range(1, n):
            pick = 0
            best = dist[0]
            for i in range(1, m):
                if dist[i] > best:
                    best = dist[i]
                    pick = i
            selected[k] = pick
            for i in range(m):
                dx = points[i, 0] - points[pick, 0]
                dy = points[i, 1] - points[pick, 1]
                dz = points[i, 2] - points[pick, 2]
                d = (dx * dx + dy * dy) + dz * dz
                if d < dist[i]:
                    dist[i] = d
        return selected
else:  # pragma: no cover
    _fps_indices_jit = None


def _fps_indices(points: np.ndarray, n: int, start: int) -> np.ndarray:
    # Both paths compute squared distances with the same operation order, so
    # they agree bitwise (asserted by tests); determinism does not depend on
    # whether numba is installed.
    if _fps_indices_jit is not None:
        return _fps_indices_jit(np.ascontiguousarray(points), n, start)
    return _fps_indices_numpy(points, n, start)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """World-frame points with an optional per-point provenance tag."""

    points: np.ndarray  # (M, 3)
    tags: np.ndarray | None = None  # (M,) uint8, TAG_SCENE or TAG_ROBOT

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ValidationError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", points)
        if self.tags is not None:
            tags = np.asarray(self.tags, dtype=np.uint8)
            if tags.shape != (len(points),):
                raise ValidationError("tags must be one per point")
            object.__setattr__(self, "tags", tags)

    def __len__(self) -> int:
        return len(self.points)

    def take(self, indices) -> "PointCloud":
        tags = None if self.tags is None else self.tags[indices]
        return PointCloud(self.points[indices], tags)


@dataclass(frozen=True, eq=False)
class Demonstration:
    """One observation-action trajectory for a named embodiment."""

    embodiment: str
    clouds: tuple[PointCloud, ...]  # per frame
    arm_positions: np.ndarray  # (L, arm dof) proprioception
    ee_positions: np.ndarray  # (L, ee dof)
    arm_targets: np.ndarray  # (L, arm dof) actions
    ee_targets: np.ndarray  # (L, ee dof)
    initial_state: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        length = len(self.clouds)
        if length < 1:
            raise ValidationError("demonstration must contain at least one frame")
        for name in ("arm_positions", "ee_positions", "arm_targets", "ee_targets"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or len(arr) != length:
                raise ValidationError(f"{name} must be (L, dof) with L = {length}")
            object.__setattr__(self, name, arr)
        if self.arm_positions.shape != self.arm_targets.shape \
                or self.ee_positions.shape != self.ee_targets.shape:
            raise ValidationError("action dof split must match proprioception")
        object.__setattr__(self, "clouds", tuple(self.clouds))

    def __len__(self) -> int:
        return len(self.clouds)

    def proprioception(self, t: int) -> np.ndarray:
        return np.concatenate([self.arm_positions[t], self.ee_positions[t]])


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the observation pipeline."""

    tau: float = 0.005  # source-robot masking distance, meters
    workspace: tuple | None = None  # (min, max) corners; falls back to the source manifest
    robot_points: int = 4096  # samples per robot for masking/augmentation
    output_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if self.output_size < 1:
            raise ValidationError("output size must be at least 1")
        if self.robot_points < 1:
            raise ValidationError("robot sample count must be at least 1")
        if self.workspace is not None:
            lo = np.asarray(self.workspace[0], dtype=float)
            hi = np.asarray(self.workspace[1], dtype=float)
            if not np.all(lo < hi):
                raise ValidationError("workspace box min must be strictly below max")
            object.__setattr__(self, "workspace", (lo, hi))


def derive_frame_seed(global_seed: int, demo_id: str, frame_index: int) -> int:
    """Stable per-frame seed; independent of processing order and worker count."""
    digest = hashlib.blake2b(
        f"{global_seed}:{demo_id}:{frame_index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def _subseed(seed: int, role: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{role}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def generate_actions(aligned: AlignedTrajectory | np.ndarray, e: Embodiment):
    """Actions a_t = q_{t+1} (hold-last at the end), split into arm/ee targets."""
    configs = aligned.configs if isinstance(aligned, AlignedTrajectory) else np.asarray(aligned)
    if configs.ndim != 2 or len(configs) < 1:
        raise ValidationError("aligned trajectory must be a non-empty (L, dof) array")
    targets = np.vstack([configs[1:], configs[-1:]])
    arm = np.array(e.arm_indices, dtype=np.int64)
    ee = np.array(e.ee_indices, dtype=np.int64)
    return targets[:, arm], targets[:, ee]


def crop_workspace(pc: PointCloud, box) -> PointCloud:
    """Keep points with box-min <= p <= box-max (inclusive), order preserved."""
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    keep = np.all((pc.points >= lo) & (pc.points <= hi), axis=1)
    return pc.take(np.flatnonzero(keep))


def mask_robot_points(pc: PointCloud, robot_samples, tau: float) -> PointCloud:
    """Remove points strictly closer than `tau` to any robot sample."""
    robot_points = robot_samples.points if isinstance(robot_samples, PointCloud) \
        else np.asarray(robot_samples, dtype=float)
    if len(robot_points) == 0:
        raise ValidationError("robot sample cloud must be non-empty")
    if len(pc) == 0:
        return pc
    distances, _ = cKDTree(robot_points).query(pc.points)
    return pc.take(np.flatnonzero(distances >= tau))


def sample_robot_cloud(e: Embodiment, q: np.ndarray, count: int, seed: int) -> PointCloud:
    """Area-weighted surface samples over all posed link meshes, tagged robot.

    Faces are weighted by area across the whole embodiment, so links split
    samples in proportion to their surface area. Links without geometry are
    skipped with a warning.
    """
    q = e.check_configuration(q)
    poses = forward_kinematics(e, q)
    meshed = []
    for i, link in enumerate(e.links):
        if link.mesh is None:
            warnings.warn(f"link {link.name!r} has no geometry; skipped in robot cloud",
                          stacklevel=2)
            continue
        meshed.append(i)
    if not meshed:
        raise ValidationError(f"embodiment {e.name!r} has no link geometry to sample")

    areas = [e.links[i].mesh.face_areas() for i in meshed]
    weights = np.concatenate(areas)
    total = weights.sum()
    if total <= 0:
        raise ValidationError(f"embodiment {e.name!r} has zero total surface area")
    rng = np.random.default_rng(seed)
    face_choice = rng.choice(len(weights), size=count, p=weights / total)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    bary = np.stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2], axis=1)

    # Map the flat face index back to (link, local face).
    offsets = np.cumsum([0] + [len(a) for a in areas])
    points = np.empty((count, 3))
    for slot, i in enumerate(meshed):
        in_link = (face_choice >= offsets[slot]) & (face_choice < offsets[slot + 1])
        if not np.any(in_link):
            continue
        local_faces = face_choice[in_link] - offsets[slot]
        tri = e.links[i].mesh.triangles[local_faces]
        local = np.einsum("nk,nkj->nj", bary[in_link], tri)
        r, t = poses.pose_of(i)
        points[in_link] = local @ r.T + t
    return PointCloud(points, np.full(count, TAG_ROBOT, dtype=np.uint8))


def fps_downsample(pc: PointCloud, n: int, start_index: int = 0,
                   seed: int | None = None) -> PointCloud:
    """Farthest-point downsample to exactly `n` points.

    With enough input points this is the greedy selection seeded at
    `start_index` (ties to the lowest index), returned in selection order. A
    deficit is padded by uniform resampling with `seed`. Empty input is an
    error.
    """
    if n < 1:
        raise ValidationError(f"target size must be at least 1, got {n}")
    m = len(pc)
    if m == 0:
        raise ValidationError("cannot downsample an empty point cloud")
    if m < n:
        rng = np.random.default_rng(0 if seed is None else seed)
        extra = rng.integers(0, m, size=n - m)
        return pc.take(np.concatenate([np.arange(m), extra]))
    if not 0 <= start_index < m:
        raise ValidationError(f"start index {start_index} out of range for {m} points")
    return pc.take(_fps_indices(pc.points, n, start_index))


def synthesize_observation(scene: PointCloud, source: Embodiment, source_q: np.ndarray,
                           target: Embodiment, target_q: np.ndarray,
                           cfg: SynthConfig, frame_seed: int | None = None) -> PointCloud:
    """One frame of the pipeline: crop, mask source robot, add target robot, FPS.

    The stage order is fixed; the output always has exactly cfg.output_size
    points. `frame_seed` defaults to cfg.seed; pass `derive_frame_seed(...)`
    for per-frame streams.
    """
    box = cfg.workspace if cfg.workspace is not None else source.workspace
    if box is None:
        raise ValidationError("no workspace box: set SynthConfig.workspace or the "
                              "source embodiment manifest")
    seed = cfg.seed if frame_seed is None else frame_seed

    cropped = crop_workspace(scene, box)
    source_cloud = sample_robot_cloud(source, source_q, cfg.robot_points,
                                      _subseed(seed, "mask"))
    masked = mask_robot_points(cropped, source_cloud, cfg.tau)
    if masked.tags is None:
        masked = PointCloud(masked.points, np.full(len(masked), TAG_SCENE, dtype=np.uint8))
    augmented = sample_robot_cloud(target, target_q, cfg.robot_points,
                                   _subseed(seed, "augment"))
    union = PointCloud(np.vstack([masked.points, augmented.points]),
                       np.concatenate([masked.tags, augmented.tags]))
    start = int(np.random.default_rng(_subseed(seed, "fps")).integers(len(union)))
    return fps_downsample(union, cfg.output_size, start, _subseed(seed, "pad"))


def synthesize_demonstration(source_demo: Demonstration, source: Embodiment,
                             target: Embodiment, aligned: AlignedTrajectory,
                             cfg: SynthConfig, demo_id: str = "") -> Demonstration:
    """Full target demonstration: per-frame observations, proprioception, actions."""
    length = len(source_demo)
    if len(aligned) != length:
        raise ValidationError(
            f"aligned trajectory has {len(aligned)} frames, source demo has {length}"
        )
    arm = np.array(target.arm_indices, dtype=np.int64)
    ee = np.array(target.ee_indices, dtype=np.int64)
    arm_targets, ee_targets = generate_actions(aligned, target)
    source_configs = source.configuration_from_split(source_demo.arm_positions,
                                                     source_demo.ee_positions)

    clouds = []
    for t in range(length):
        frame_seed = derive_frame_seed(cfg.seed, demo_id, t)
        clouds.append(
            synthesize_observation(source_demo.clouds[t], source, source_configs[t],
                                   target, aligned.configs[t], cfg, frame_seed)
        )
    return Demonstration(
        embodiment=target.name,
        clouds=tuple(clouds),
        arm_positions=aligned.configs[:, arm],
        ee_positions=aligned.configs[:, ee],
        arm_targets=arm_targets,
        ee_targets=ee_targets,
        initial_state=dict(source_demo.initial_state),
        seed=cfg.seed,
    )
