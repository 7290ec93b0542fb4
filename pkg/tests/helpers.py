"""Shared fixtures-in-code: hand-built bundles and independent oracles."""
from __future__ import annotations

import numpy as np

from captain.bundles import AnnotationBundle, BoxDetection, Joint, VGG_DIM
from captain.classmap import MERGED_CLASS_COUNT


def simple_bundle(width=8, height=8, od=(), people=(), sp=None, saliency=None,
                  image_id="img", vgg=None, rating=0.0, views=0,
                  gender="unknown", category=None) -> AnnotationBundle:
    """Bundle with explicit detections and an all-zero descriptor."""
    if vgg is None:
        vgg = np.zeros(VGG_DIM, dtype=np.float32)
    sp_ids = sp_probs = None
    if sp is not None:
        sp_ids, sp_probs = sp
        sp_ids = np.asarray(sp_ids, dtype=np.int32)
        sp_probs = np.asarray(sp_probs, dtype=np.float64)
    return AnnotationBundle(
        image_id=image_id, width=width, height=height,
        od=tuple(od), people=tuple(people),
        vgg=np.asarray(vgg, dtype=np.float32),
        rating=rating, views=views, gender=gender,
        sp_ids=sp_ids, sp_probs=sp_probs,
        saliency=None if saliency is None else np.asarray(saliency, dtype=np.float64),
        category=category,
    )


def box(class_id, probability, x0, y0, x1, y1) -> BoxDetection:
    return BoxDetection(class_id, probability, (x0, y0, x1, y1))


def joint(joint_id, x, y, score=0.5) -> Joint:
    return Joint(joint_id, x, y, score)


def importance_oracle(weighted: np.ndarray, merged_ids: np.ndarray) -> np.ndarray:
    """Per-pixel summation of importance shares, written as plain loops."""
    sums = np.zeros(MERGED_CLASS_COUNT)
    total = 0.0
    m, n = weighted.shape
    for i in range(m):
        for j in range(n):
            total += weighted[i, j]
            k = merged_ids[i, j]
            if k != 0:
                sums[k - 1] += weighted[i, j]
    if total <= 0:
        return np.zeros(MERGED_CLASS_COUNT)
    return sums / total


def adjusted_rand_index(labels_a, labels_b) -> float:
    """ARI from the contingency table."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    n = len(labels_a)
    classes_a, ia = np.unique(labels_a, return_inverse=True)
    classes_b, ib = np.unique(labels_b, return_inverse=True)
    table = np.zeros((len(classes_a), len(classes_b)), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))
