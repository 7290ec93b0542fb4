"""Scale-invariant pose features: joint-to-line distances and skeleton context.

Each body yields 2448 joint-to-line entries (one per joint and unordered
pair of the remaining 17) normalized by the body's maximum, plus an 18x18
row-normalized angular histogram, for a 2772-entry pose vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import JOINT_COUNT
from .errors import TooFewJoints

J2L_DIM = JOINT_COUNT * (JOINT_COUNT - 1) * (JOINT_COUNT - 2) // 2  # 2448
SC_BINS = 18
POSE_DIM = J2L_DIM + JOINT_COUNT * SC_BINS  # 2772
MIN_JOINTS = 3
# Joint pairs closer than this many pixels give no usable base line.
DEGENERATE_BASE = 1e-9


def _build_triples() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical (joint, pair) enumeration: for each joint l in order, all
    unordered pairs (m, n) with m < n drawn from the remaining joints."""
    ls, ms, ns = [], [], []
    for l in range(JOINT_COUNT):
        others = [j for j in range(JOINT_COUNT) if j != l]
        for a in range(len(others)):
            for b in range(a + 1, len(others)):
                ls.append(l)
                ms.append(others[a])
                ns.append(others[b])
    return np.array(ls), np.array(ms), np.array(ns)


_TRIPLE_L, _TRIPLE_M, _TRIPLE_N = _build_triples()


@dataclass(frozen=True)
class Skeleton:
    """18 joints with presence flags, pixel coordinates, and scores."""

    present: np.ndarray  # (18,) bool
    xy: np.ndarray       # (18, 2) float64
    score: np.ndarray    # (18,) float64

    @classmethod
    def from_person(cls, person) -> "Skeleton":
        present = np.zeros(JOINT_COUNT, dtype=bool)
        xy = np.zeros((JOINT_COUNT, 2))
        score = np.zeros(JOINT_COUNT)
        for joint in person:
            idx = joint.joint_id - 1
            present[idx] = True
            xy[idx] = (joint.x, joint.y)
            score[idx] = joint.score
        return cls(present=present, xy=xy, score=score)

    @property
    def joint_count(self) -> int:
        return int(self.present.sum())

    def mean_score(self) -> float:
        if not self.present.any():
            return 0.0
        return float(self.score[self.present].mean())


def _require_joints(skeleton: Skeleton) -> None:
    if skeleton.joint_count < MIN_JOINTS:
        raise TooFewJoints(
            f"need at least {MIN_JOINTS} joints, got {skeleton.joint_count}")


def j2l_features(skeleton: Skeleton) -> np.ndarray:
    """Joint-to-line distances for all 2448 triples, max-normalized.

    The raw value for (l, m, n) is twice the triangle area over the base
    length |j_m - j_n|; triples touching absent joints or a degenerate
    base are zero.
    """
    _require_joints(skeleton)
    xy = skeleton.xy
    pm = xy[_TRIPLE_M] - xy[_TRIPLE_L]
    pn = xy[_TRIPLE_N] - xy[_TRIPLE_L]
    cross = np.abs(pm[:, 0] * pn[:, 1] - pm[:, 1] * pn[:, 0])
    base = np.linalg.norm(xy[_TRIPLE_M] - xy[_TRIPLE_N], axis=1)
    valid = (
        skeleton.present[_TRIPLE_L]
        & skeleton.present[_TRIPLE_M]
        & skeleton.present[_TRIPLE_N]
        & (base >= DEGENERATE_BASE)
    )
    raw = np.zeros(J2L_DIM)
    raw[valid] = cross[valid] / base[valid]
    peak = raw.max()
    return raw / peak if peak > 0 else raw


def skeleton_context(skeleton: Skeleton) -> np.ndarray:
    """Row-normalized 18x18 angular histograms of inter-joint directions.

    Row r bins the directions from joint r to every other present joint
    into 18 uniform sectors of [0, 2pi); rows for absent joints stay zero.
    """
    _require_joints(skeleton)
    out = np.zeros((JOINT_COUNT, SC_BINS))
    idx = np.nonzero(skeleton.present)[0]
    bin_width = 2.0 * np.pi / SC_BINS
    for r in idx:
        others = idx[idx != r]
        delta = skeleton.xy[others] - skeleton.xy[r]
        angles = np.mod(np.arctan2(delta[:, 1], delta[:, 0]), 2.0 * np.pi)
        bins = np.minimum((angles / bin_width).astype(int), SC_BINS - 1)
        counts = np.bincount(bins, minlength=SC_BINS).astype(np.float64)
        out[r] = counts / counts.sum()
    return out


def pose_vector(skeleton: Skeleton) -> np.ndarray:
    """2772-entry pose feature: j2l followed by the flattened context."""
    return np.concatenate([j2l_features(skeleton), skeleton_context(skeleton).ravel()])


def image_pose_vector(people) -> np.ndarray:
    """L2-normalized pose vector of the image's best-scored usable person.

    Multi-person images are represented by the person with the highest
    mean joint score among those with enough joints; images without a
    usable skeleton map to the zero vector.
    """
    best, best_score = None, -1.0
    for person in people:
        skeleton = Skeleton.from_person(person)
        if skeleton.joint_count < MIN_JOINTS:
            continue
        score = skeleton.mean_score()
        if score > best_score:
            best, best_score = skeleton, score
    if best is None:
        return np.zeros(POSE_DIM)
    vec = pose_vector(best)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec
