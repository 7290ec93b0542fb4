"""Polar pose chain, phase-based pose distance, and shot selection.

A skeleton is re-rooted at the nose and expressed as a chain of (length,
relative angle) pairs over a fixed predecessor tree.  Pose distance sums
phase (sine of relative angle) differences over jointly present joints,
making it invariant to limb length and body scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arpose import Skeleton
from .errors import (
    EmptyPreferred, EmptySession, EmptyTaken, MissingRoot, NoSharedJoints,
)
from .index import CompositionModel, FeatureRecord
from .retrieval import UspWeights, normalize, similarity

# Chain-order joint names; index 0 is the nose at the origin.
CHAIN_JOINTS = (
    "nose", "neck", "right eye", "left eye", "right ear", "left ear",
    "right shoulder", "left shoulder", "right elbow", "left elbow",
    "right wrist", "left wrist", "right hip", "left hip", "right knee",
    "left knee", "right ankle", "left ankle",
)

# Predecessor tree: neck and eyes hang off the nose, ears off the eyes,
# shoulders and hips off the neck, and each limb continues down its side.
PREDECESSOR = (0, 0, 0, 0, 2, 3, 1, 1, 6, 7, 8, 9, 1, 1, 12, 13, 14, 15)

# Chain index -> detector joint id (1-based) as stored in bundles.
_DETECTOR_ID = (1, 2, 16, 15, 18, 17, 3, 6, 4, 7, 5, 8, 9, 12, 10, 13, 11, 14)

_NOSE, _NECK = 0, 1
# Children appear after their predecessor in this evaluation order.
_TOPO_ORDER = (1, 2, 3, 4, 5, 6, 7, 12, 13, 8, 9, 10, 11, 14, 15, 16, 17)


@dataclass(frozen=True)
class PolarPose:
    """Chain parameterization: lengths and relative angles per joint."""

    present: np.ndarray  # (18,) bool, index 0 is the nose root
    r: np.ndarray        # (18,) float64 segment lengths in pixels
    theta: np.ndarray    # (18,) float64 relative angles in (-pi, pi]


def _wrap(angle: float) -> float:
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def _segment_angle(xy: np.ndarray, idx: int) -> float:
    """Absolute direction of the segment arriving at chain joint idx."""
    if idx == _NOSE:
        return 0.0  # the horizon through the nose
    pre = PREDECESSOR[idx]
    delta = xy[idx] - xy[pre]
    return math.atan2(delta[1], delta[0])


def to_polar(skeleton: Skeleton) -> PolarPose:
    """Chain parameters such that expansion reproduces the nose-relative
    coordinates; joints with any absent ancestor are flagged absent."""
    det_present = skeleton.present
    chain_present = np.array([det_present[_DETECTOR_ID[i] - 1] for i in range(18)])
    if not (chain_present[_NOSE] and chain_present[_NECK]):
        raise MissingRoot("polar conversion needs both nose and neck")
    xy = np.array([skeleton.xy[_DETECTOR_ID[i] - 1] for i in range(18)])

    present = np.zeros(18, dtype=bool)
    r = np.zeros(18)
    theta = np.zeros(18)
    present[_NOSE] = True
    for idx in _TOPO_ORDER:
        pre = PREDECESSOR[idx]
        if not (chain_present[idx] and present[pre]):
            continue
        present[idx] = True
        delta = xy[idx] - xy[pre]
        r[idx] = float(np.hypot(delta[0], delta[1]))
        theta[idx] = _wrap(math.atan2(delta[1], delta[0]) - _segment_angle(xy, pre))
    return PolarPose(present=present, r=r, theta=theta)


def to_cartesian(pose: PolarPose) -> np.ndarray:
    """Nose-relative coordinates of the present joints (absent rows NaN)."""
    xy = np.full((18, 2), np.nan)
    heading = np.zeros(18)  # absolute angle of the segment arriving at joint
    xy[_NOSE] = (0.0, 0.0)
    for idx in _TOPO_ORDER:
        if not pose.present[idx]:
            continue
        pre = PREDECESSOR[idx]
        heading[idx] = heading[pre] + pose.theta[idx]
        xy[idx] = xy[pre] + pose.r[idx] * np.array(
            [math.cos(heading[idx]), math.sin(heading[idx])])
    return xy


def shared_joints(a: PolarPose, b: PolarPose) -> np.ndarray:
    shared = a.present & b.present
    shared[_NOSE] = False  # the origin carries no angle
    return shared


def pose_distance(a: PolarPose, b: PolarPose, q: float = 1.0) -> float:
    """Phase distance: Lq norm of sine differences over shared joints."""
    shared = shared_joints(a, b)
    if not shared.any():
        raise NoSharedJoints("poses share no jointly present joints")
    diffs = np.abs(np.sin(a.theta[shared]) - np.sin(b.theta[shared]))
    if q == 1.0:
        return float(diffs.sum())
    return float((diffs ** q).sum() ** (1.0 / q))


def pose_shot(taken: list[PolarPose], preferred: list[PolarPose],
              ignored: list[PolarPose], q: float = 1.0) -> int:
    """Index of the taken shot farthest from the ignored poses relative to
    the preferred ones; an empty ignored set contributes distance zero."""
    if not taken:
        raise EmptyTaken("no taken shots to choose from")
    if not preferred:
        raise EmptyPreferred("pose-shot selection needs preferred poses")
    best_idx, best_value = 0, -math.inf
    for idx, shot in enumerate(taken):
        d_ignored = min((pose_distance(g, shot, q) for g in ignored), default=0.0)
        d_preferred = min(pose_distance(p, shot, q) for p in preferred)
        value = d_ignored - d_preferred
        if value > best_value:
            best_idx, best_value = idx, value
    return best_idx


@dataclass(frozen=True)
class StyleSession:
    """User selections driving shot matching."""

    preferred: tuple[str, ...]
    ignored: tuple[str, ...]
    usp: UspWeights

    def __post_init__(self):
        if set(self.preferred) & set(self.ignored):
            raise ValueError("preferred and ignored sets must be disjoint")


@dataclass(frozen=True)
class FavoriteShot:
    index: int
    shot_id: str
    scores: np.ndarray  # per-shot summed weighted similarity


def favorite_shot(style_model: CompositionModel, shots: list[FeatureRecord],
                  weights: UspWeights) -> FavoriteShot:
    """Shot with the largest summed preference-weighted similarity to the
    style set; ties go to the earliest shot.

    The similarity tensor over (style rows x shots) is normalized per
    detector across the whole slice so scores stay comparable between
    shots.
    """
    if style_model.row_count == 0 or not shots:
        raise EmptySession("favorite-shot selection needs a style set and shots")
    sn = normalize(similarity(style_model, shots))
    scores = weights.as_array() @ sn.sum(axis=1)
    index = int(np.argmax(scores))
    return FavoriteShot(index=index, shot_id=shots[index].image_id, scores=scores)


# ---------------------------------------------------------------------------
# Joint angle limit configuration (validation warnings only)

# Permissive defaults: every relative angle is allowed.  Deployments can
# narrow these per joint name via a JSON table.
DEFAULT_JOINT_LIMITS: dict[str, tuple[float, float]] = {}


def load_joint_limits(path: str | Path) -> dict[str, tuple[float, float]]:
    """JSON table: joint name -> [theta_min, theta_max] in radians."""
    table = json.loads(Path(path).read_text())
    limits = {}
    for name, pair in table.items():
        if name not in CHAIN_JOINTS:
            raise ValueError(f"unknown joint name {name!r}")
        lo, hi = float(pair[0]), float(pair[1])
        if lo > hi:
            raise ValueError(f"joint {name!r}: min exceeds max")
        limits[name] = (lo, hi)
    return limits


def angle_warnings(pose: PolarPose,
                   limits: dict[str, tuple[float, float]] | None = None) -> list[str]:
    """Joints whose relative angle leaves its configured band."""
    if limits is None:
        limits = DEFAULT_JOINT_LIMITS
    warnings = []
    for idx in range(1, 18):
        if not pose.present[idx]:
            continue
        band = limits.get(CHAIN_JOINTS[idx])
        if band and not (band[0] <= pose.theta[idx] <= band[1]):
            warnings.append(
                f"{CHAIN_JOINTS[idx]}: angle {pose.theta[idx]:.3f} outside "
                f"[{band[0]:.3f}, {band[1]:.3f}]")
    return warnings
