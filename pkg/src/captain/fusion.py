"""Detector fusion: hysteresis detection, weighted saliency, importance.

The three unified planes are fused per merged class with LOW/HIGH
hysteresis thresholds (union across detectors), then pixel scores are
weighted by saliency and a center-of-mass distance falloff to produce the
210-entry object importance vector.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundles import AnnotationBundle, DetectionTensor
from .classmap import MERGED_CLASS_COUNT, ClassMap
from .errors import MalformedBundle, ZeroSaliency

DEFAULT_LOW = 0.09
DEFAULT_HIGH = 0.44
# Person existence cut-offs: detector probability and pose-plane area.
DEFAULT_PERSON_PROB_CUTOFF = 0.40
DEFAULT_PERSON_AREA_CUTOFF = 0.10
# Detected objects below this fraction of the image are dropped before
# importance computation.
MIN_AREA_FRACTION = 0.0115

DETECTOR_KINDS = ("od", "sp", "pe")


@dataclass(frozen=True)
class HysteresisThresholds:
    """LOW/HIGH probability bands per (merged class, detector kind).

    Pairs without an explicit row fall back to the global defaults.
    """

    default_low: float = DEFAULT_LOW
    default_high: float = DEFAULT_HIGH
    overrides: dict[tuple[int, str], tuple[float, float]] = field(default_factory=dict)
    person_prob_cutoff: float = DEFAULT_PERSON_PROB_CUTOFF
    person_area_cutoff: float = DEFAULT_PERSON_AREA_CUTOFF

    def __post_init__(self):
        self._check(self.default_low, self.default_high)
        for low, high in self.overrides.values():
            self._check(low, high)

    @staticmethod
    def _check(low: float, high: float) -> None:
        if not (0.0 <= low < high < 1.0):
            raise ValueError(f"need 0 <= low < high < 1, got low={low} high={high}")

    def band(self, merged_id: int, kind: str) -> tuple[float, float]:
        return self.overrides.get((merged_id, kind), (self.default_low, self.default_high))


def load_thresholds(path: str | Path, **kwargs) -> HysteresisThresholds:
    """Parse the threshold table: rows of ``merged_class,detector,low,high``."""
    overrides = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 4:
                raise MalformedBundle(f"threshold row needs 4 fields: {row}")
            merged_id = int(row[0])
            kind = row[1].strip()
            if kind not in DETECTOR_KINDS:
                raise MalformedBundle(f"unknown detector kind {kind!r} in {row}")
            overrides[(merged_id, kind)] = (float(row[2]), float(row[3]))
    return HysteresisThresholds(overrides=overrides, **kwargs)


@dataclass(frozen=True)
class HysteresisResult:
    present: frozenset[int]
    uncertain: frozenset[int]


def _mean_probs_by_class(tensor: DetectionTensor, merged_ids: np.ndarray) -> dict[int, float]:
    """Mean detection probability per merged class over its labeled pixels."""
    flat_ids = merged_ids.ravel()
    flat_p = tensor.probs.ravel()
    mask = flat_ids != 0
    if not mask.any():
        return {}
    counts = np.bincount(flat_ids[mask], minlength=MERGED_CLASS_COUNT + 1)
    sums = np.bincount(flat_ids[mask], weights=flat_p[mask], minlength=MERGED_CLASS_COUNT + 1)
    labeled = np.nonzero(counts)[0]
    return {int(k): float(sums[k] / counts[k]) for k in labeled}


def detector_class_means(tensors, class_map: ClassMap) -> dict[str, dict[int, float]]:
    """Per-detector mean probability by merged class.

    The pose plane carries joint ids, all of which attribute to the merged
    person class.
    """
    t_od, t_sp, t_pe = tensors
    means = {
        "od": _mean_probs_by_class(t_od, class_map.merge_od(t_od.ids)),
        "sp": _mean_probs_by_class(t_sp, class_map.merge_sp(t_sp.ids)),
    }
    pe_mask = t_pe.ids != 0
    if pe_mask.any():
        means["pe"] = {class_map.person_id: float(t_pe.probs[pe_mask].mean())}
    else:
        means["pe"] = {}
    return means


def hysteresis_detect(tensors, class_map: ClassMap,
                      thresholds: HysteresisThresholds) -> HysteresisResult:
    """Union hysteresis over detectors.

    A class is present when any detector's mean probability over its
    pixels exceeds the pair's HIGH threshold, absent when every labeling
    detector stays below LOW, and uncertain in between.
    """
    means = detector_class_means(tensors, class_map)
    present, uncertain = set(), set()
    candidates = set()
    for per_class in means.values():
        candidates.update(per_class)
    for k in candidates:
        any_high = False
        all_low = True
        for kind in DETECTOR_KINDS:
            p = means[kind].get(k)
            if p is None:
                continue
            low, high = thresholds.band(k, kind)
            if p > high:
                any_high = True
            if not (p < low):
                all_low = False
        if any_high:
            present.add(k)
        elif not all_low:
            uncertain.add(k)
    return HysteresisResult(present=frozenset(present), uncertain=frozenset(uncertain))


def person_present(tensors, class_map: ClassMap,
                   thresholds: HysteresisThresholds) -> bool:
    """Person exists when the detector's mean person probability or the
    pose plane's labeled-area fraction reaches its cut-off."""
    t_od, _, t_pe = tensors
    merged_od = class_map.merge_od(t_od.ids)
    person_mask = merged_od == class_map.person_id
    od_prob = float(t_od.probs[person_mask].mean()) if person_mask.any() else 0.0
    n_pixels = t_pe.ids.size
    pe_area = float((t_pe.ids != 0).sum() / n_pixels) if n_pixels else 0.0
    return od_prob >= thresholds.person_prob_cutoff or pe_area >= thresholds.person_area_cutoff


def saliency_or_default(bundle: AnnotationBundle) -> np.ndarray:
    """Bundle saliency when present, else the uniform all-ones map."""
    if bundle.saliency is not None:
        return bundle.saliency
    return np.ones((bundle.width, bundle.height))


def centric_distance(saliency: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Center of mass of the saliency map and its normalized L1 falloff.

    Returns (c, D) where c is the saliency-weighted mean pixel coordinate
    and D(i,j) = exp(-|[i,j] - c|_1) / K with K chosen so D sums to one.
    """
    total = saliency.sum()
    if saliency.size == 0 or total <= 0.0:
        raise ZeroSaliency("saliency map has no positive entries")
    m, n = saliency.shape
    ii = np.arange(m, dtype=np.float64)
    jj = np.arange(n, dtype=np.float64)
    ci = float((saliency.sum(axis=1) @ ii) / total)
    cj = float((saliency.sum(axis=0) @ jj) / total)
    l1 = np.abs(ii - ci)[:, None] + np.abs(jj - cj)[None, :]
    decay = np.exp(-l1)
    d = decay / decay.sum()
    return np.array([ci, cj]), d


def fused_score_planes(t_od: DetectionTensor, t_sp: DetectionTensor,
                       class_map: ClassMap,
                       present: frozenset[int]) -> tuple[np.ndarray, np.ndarray]:
    """Hysteresis max over detector score planes restricted to present classes.

    Returns (scores, merged ids) where each pixel carries the class of the
    detector that supplied the winning score; ties go to the detector plane.
    """
    merged_od = class_map.merge_od(t_od.ids)
    merged_sp = class_map.merge_sp(t_sp.ids)
    if present:
        lut = np.zeros(MERGED_CLASS_COUNT + 1, dtype=bool)
        lut[list(present)] = True
        od_scores = np.where(lut[merged_od], t_od.scores, 0.0)
        sp_scores = np.where(lut[merged_sp], t_sp.scores, 0.0)
    else:
        od_scores = np.zeros_like(t_od.scores)
        sp_scores = np.zeros_like(t_sp.scores)
    od_wins = od_scores >= sp_scores
    scores = np.where(od_wins, od_scores, sp_scores)
    ids = np.where(od_wins, merged_od, merged_sp)
    ids = np.where(scores > 0.0, ids, 0).astype(np.int32)
    return scores, ids


def weighted_saliency(tensors, present: frozenset[int], saliency: np.ndarray,
                      centric: np.ndarray, class_map: ClassMap) -> np.ndarray:
    """Pointwise product of the fused score max, saliency, and falloff."""
    t_od, t_sp, _ = tensors
    scores, _ = fused_score_planes(t_od, t_sp, class_map, present)
    return scores * saliency * centric


def importance_vector(weighted: np.ndarray, merged_ids: np.ndarray) -> np.ndarray:
    """Per-class share of the weighted saliency mass (210 entries).

    All-zero when nothing carries weight; otherwise sums to one.
    """
    total = weighted.sum()
    if total <= 0.0:
        return np.zeros(MERGED_CLASS_COUNT)
    sums = np.bincount(merged_ids.ravel(), weights=weighted.ravel(),
                       minlength=MERGED_CLASS_COUNT + 1)
    return sums[1:] / total


def class_area_fractions(tensors, class_map: ClassMap) -> dict[int, float]:
    """Labeled-area fraction per merged class: the larger of the two
    detector coverages, with the pose plane counting toward person."""
    t_od, t_sp, t_pe = tensors
    n_pixels = t_od.ids.size
    if n_pixels == 0:
        return {}
    counts_od = np.bincount(class_map.merge_od(t_od.ids).ravel(),
                            minlength=MERGED_CLASS_COUNT + 1)
    counts_sp = np.bincount(class_map.merge_sp(t_sp.ids).ravel(),
                            minlength=MERGED_CLASS_COUNT + 1)
    counts = np.maximum(counts_od, counts_sp)
    pe_count = int((t_pe.ids != 0).sum())
    counts[class_map.person_id] = max(counts[class_map.person_id], pe_count)
    labeled = np.nonzero(counts)[0]
    return {int(k): float(counts[k] / n_pixels) for k in labeled if k != 0}


@dataclass(frozen=True)
class FusionResult:
    """Everything the downstream feature extractors need from one image."""

    tensors: tuple[DetectionTensor, DetectionTensor, DetectionTensor]
    present: frozenset[int]
    uncertain: frozenset[int]
    retained: frozenset[int]  # present minus the small-area classes
    person: bool
    areas: dict[int, float]
    saliency: np.ndarray
    center: np.ndarray | None
    centric: np.ndarray | None
    weighted: np.ndarray | None
    object_ids: np.ndarray | None
    importance: np.ndarray
    thresholds: HysteresisThresholds


def fuse(bundle: AnnotationBundle, tensors, class_map: ClassMap,
         thresholds: HysteresisThresholds | None = None) -> FusionResult:
    """Run the full fusion pipeline for one image."""
    if thresholds is None:
        thresholds = HysteresisThresholds()
    detection = hysteresis_detect(tensors, class_map, thresholds)
    person = person_present(tensors, class_map, thresholds)
    areas = class_area_fractions(tensors, class_map)
    retained = frozenset(
        k for k in detection.present if areas.get(k, 0.0) >= MIN_AREA_FRACTION
    )
    saliency = saliency_or_default(bundle)
    if saliency.size == 0 or saliency.sum() <= 0.0:
        return FusionResult(
            tensors=tensors, present=detection.present, uncertain=detection.uncertain,
            retained=retained, person=person, areas=areas, saliency=saliency,
            center=None, centric=None, weighted=None, object_ids=None,
            importance=np.zeros(MERGED_CLASS_COUNT), thresholds=thresholds,
        )
    center, centric = centric_distance(saliency)
    t_od, t_sp, _ = tensors
    scores, object_ids = fused_score_planes(t_od, t_sp, class_map, retained)
    weighted = scores * saliency * centric
    importance = importance_vector(weighted, object_ids)
    return FusionResult(
        tensors=tensors, present=detection.present, uncertain=detection.uncertain,
        retained=retained, person=person, areas=areas, saliency=saliency,
        center=center, centric=centric, weighted=weighted, object_ids=object_ids,
        importance=importance, thresholds=thresholds,
    )
