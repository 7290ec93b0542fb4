"""Photography genre gate and 10-way portrait category classifier.

The gate first checks for a person, then for dominant scenery coverage.
Portrait images are classified with a one-vs-one multiclass SVM over a
40-entry feature vector summarizing person detections and limb scores.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundles import AnnotationBundle, JOINT_COUNT, joint_disc_radius
from .classmap import ClassMap
from .errors import DegenerateTraining, MalformedBundle, SingleClass
from .fusion import FusionResult, person_present
from .smo import BinarySvm, train_binary_svm

CATEGORIES = (
    "facial", "fullbody", "upperbody", "two", "group",
    "sideview", "leg", "noface", "hand", "nohead",
)
CADE_DIM = 40
LANDSCAPE_AREA_CUTOFF = 0.265
# Person counts by area use this fraction threshold.
PERSON_AREA_COUNT_CUTOFF = 0.05

GENRE_PORTRAIT = "portrait"
GENRE_LANDSCAPE = "landscape"
GENRE_OTHER = "other"

# Joint ids (1-based, detector order) used by the limb features.
_J = {
    "nose": 1, "neck": 2, "right shoulder": 3, "right elbow": 4,
    "right wrist": 5, "left shoulder": 6, "left elbow": 7, "left wrist": 8,
    "right hip": 9, "right knee": 10, "right ankle": 11, "left hip": 12,
    "left knee": 13, "left ankle": 14, "left eye": 15, "right eye": 16,
    "left ear": 17, "right ear": 18,
}

# The 24 limb features: single joints plus composite chains whose value is
# the weakest member score.
LIMB_FEATURES = (
    ("nose",), ("neck",),
    ("right shoulder",), ("right elbow",), ("right wrist",),
    ("right elbow", "right wrist"),            # right hand
    ("left shoulder",), ("left elbow",), ("left wrist",),
    ("left elbow", "left wrist"),              # left hand
    ("right hip",), ("right knee",), ("right ankle",),
    ("right hip", "right knee", "right ankle"),  # right leg
    ("left hip",), ("left knee",), ("left ankle",),
    ("left hip", "left knee", "left ankle"),     # left leg
    ("right eye",), ("left eye",),
    ("left eye", "right eye"),                 # both eyes
    ("right ear",), ("left ear",),
    ("left ear", "right ear"),                 # both ears
)


def scenery_area_fraction(fusion: FusionResult, class_map: ClassMap) -> float:
    """Fraction of pixels labeled with any scenery-like merged class."""
    t_od, t_sp, _ = fusion.tensors
    n_pixels = t_od.ids.size
    if n_pixels == 0:
        return 0.0
    lut = np.zeros(len(class_map.merged_names) + 1, dtype=bool)
    lut[list(class_map.scenery_ids)] = True
    covered = lut[class_map.merge_od(t_od.ids)] | lut[class_map.merge_sp(t_sp.ids)]
    return float(covered.sum() / n_pixels)


def genre_gate(fusion: FusionResult, class_map: ClassMap) -> str:
    """portrait > landscape > other, in that priority order."""
    if fusion.person:
        return GENRE_PORTRAIT
    if scenery_area_fraction(fusion, class_map) > LANDSCAPE_AREA_CUTOFF:
        return GENRE_LANDSCAPE
    return GENRE_OTHER


# ---------------------------------------------------------------------------
# Person statistics feeding the 40-entry feature vector


@dataclass(frozen=True)
class PersonStat:
    probability: float
    area: float  # fraction of the image


def od_person_stats(bundle: AnnotationBundle, class_map: ClassMap) -> list[PersonStat]:
    n_pixels = bundle.width * bundle.height
    stats = []
    for det in bundle.od:
        if class_map.od_to_merged.get(det.class_id) != class_map.person_id:
            continue
        i0, i1, j0, j1 = det.pixel_span()
        pixels = (i1 - i0 + 1) * (j1 - j0 + 1)
        stats.append(PersonStat(det.probability, pixels / n_pixels if n_pixels else 0.0))
    return stats


def _person_mask(person, width: int, height: int) -> np.ndarray:
    mask = np.zeros((width, height), dtype=bool)
    radius = joint_disc_radius(width, height)
    for joint in person:
        i0 = max(0, int(math.floor(joint.x - radius)))
        i1 = min(width - 1, int(math.ceil(joint.x + radius)))
        j0 = max(0, int(math.floor(joint.y - radius)))
        j1 = min(height - 1, int(math.ceil(joint.y + radius)))
        if i0 > i1 or j0 > j1:
            continue
        ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
        hit = (ii - joint.x) ** 2 + (jj - joint.y) ** 2 <= radius ** 2
        mask[ii[hit], jj[hit]] = True
    return mask


def pe_person_stats(bundle: AnnotationBundle) -> list[PersonStat]:
    """Per person: mean joint score and disc-union area fraction."""
    n_pixels = bundle.width * bundle.height
    stats = []
    for person in bundle.people:
        if not person:
            continue
        prob = float(np.mean([j.score for j in person]))
        area = _person_mask(person, bundle.width, bundle.height).sum() / n_pixels \
            if n_pixels else 0.0
        stats.append(PersonStat(prob, float(area)))
    return stats


def extract_cade_features(bundle: AnnotationBundle, fusion: FusionResult,
                          class_map: ClassMap) -> np.ndarray:
    """The 40 category features; absent quantities contribute zeros.

    Layout: (0-3) per-detector max person score and area, (4-8) overlap
    and score/area of each detector's most probable person, (9-15) person
    counts by score and by area with their maxima, (16-39) limb scores.
    """
    feats = np.zeros(CADE_DIM)
    od_stats = od_person_stats(bundle, class_map)
    pe_stats = pe_person_stats(bundle)

    if od_stats:
        feats[0] = max(s.probability for s in od_stats)
        feats[2] = max(s.area for s in od_stats)
    if pe_stats:
        feats[1] = max(s.probability for s in pe_stats)
        feats[3] = max(s.area for s in pe_stats)

    best_od = max(range(len(od_stats)), key=lambda i: od_stats[i].probability) \
        if od_stats else None
    best_pe = max(range(len(pe_stats)), key=lambda i: pe_stats[i].probability) \
        if pe_stats else None
    if best_od is not None and best_pe is not None:
        n_pixels = bundle.width * bundle.height
        if n_pixels:
            person_boxes = [det for det in bundle.od
                            if class_map.od_to_merged.get(det.class_id) == class_map.person_id]
            i0, i1, j0, j1 = person_boxes[best_od].pixel_span()
            mask = _person_mask(bundle.people[best_pe], bundle.width, bundle.height)
            feats[4] = mask[i0:i1 + 1, j0:j1 + 1].sum() / n_pixels
    if best_od is not None:
        feats[5] = od_stats[best_od].probability
        feats[7] = od_stats[best_od].area
    if best_pe is not None:
        feats[6] = pe_stats[best_pe].probability
        feats[8] = pe_stats[best_pe].area

    thresholds = fusion.thresholds
    _, od_high = thresholds.band(class_map.person_id, "od")
    _, pe_high = thresholds.band(class_map.person_id, "pe")
    feats[9] = sum(1 for s in od_stats if s.probability > od_high)
    feats[10] = sum(1 for s in pe_stats if s.probability > pe_high)
    feats[11] = sum(1 for s in od_stats if s.area > PERSON_AREA_COUNT_CUTOFF)
    feats[12] = sum(1 for s in pe_stats if s.area > PERSON_AREA_COUNT_CUTOFF)
    feats[13] = max(feats[9], feats[10])
    feats[14] = max(feats[11], feats[12])
    feats[15] = max(feats[13], feats[14])

    joint_scores = np.zeros(JOINT_COUNT + 1)
    for person in bundle.people:
        for joint in person:
            joint_scores[joint.joint_id] = max(joint_scores[joint.joint_id], joint.score)
    for offset, members in enumerate(LIMB_FEATURES):
        feats[16 + offset] = min(joint_scores[_J[name]] for name in members)
    return feats


# ---------------------------------------------------------------------------
# One-vs-one multiclass SVM


@dataclass
class SvmModel:
    """k(k-1)/2 pairwise RBF classifiers plus feature standardization."""

    classes: tuple[int, ...]            # sorted class labels (1..10)
    pairs: tuple[tuple[int, int], ...]  # (a, b) with a < b per binary model
    binaries: list[BinarySvm]
    mean: np.ndarray   # (40,)
    scale: np.ndarray  # (40,)
    c: float
    gamma: float

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.scale

    def votes(self, features: np.ndarray) -> np.ndarray:
        """Pairwise vote counts indexed by class label (entry 0 unused)."""
        z = self.standardize(np.atleast_2d(features))
        counts = np.zeros((z.shape[0], len(CATEGORIES) + 1), dtype=np.int64)
        for (a, b), model in zip(self.pairs, self.binaries):
            positive = model.decision(z) >= 0.0
            counts[np.arange(z.shape[0]), np.where(positive, a, b)] += 1
        return counts

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Winning class labels; vote ties go to the lowest class index."""
        return np.argmax(self.votes(features), axis=1)


def train_mcmsvm(features: np.ndarray, labels: np.ndarray,
                 c: float = 1.0, gamma: float | None = None,
                 tol: float = 1e-3, max_passes: int = 10_000) -> SvmModel:
    """Train the one-vs-one model on (n, 40) features and labels in 1..10."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if gamma is None:
        gamma = 1.0 / features.shape[1]
    classes = tuple(sorted(int(k) for k in np.unique(labels)))
    if len(classes) < 2:
        raise SingleClass("training needs at least two distinct classes")
    for k in classes:
        if (labels == k).sum() < 2:
            raise DegenerateTraining(f"class {k} has fewer than 2 samples")

    mean = features.mean(axis=0)
    std = features.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    z = (features - mean) / scale

    pairs, binaries = [], []
    for ai in range(len(classes)):
        for bi in range(ai + 1, len(classes)):
            a, b = classes[ai], classes[bi]
            mask = (labels == a) | (labels == b)
            y = np.where(labels[mask] == a, 1.0, -1.0)
            binaries.append(train_binary_svm(z[mask], y, c=c, gamma=gamma,
                                             tol=tol, max_passes=max_passes))
            pairs.append((a, b))
    return SvmModel(classes=classes, pairs=tuple(pairs), binaries=binaries,
                    mean=mean, scale=scale, c=c, gamma=gamma)


def classify(model: SvmModel, features: np.ndarray) -> np.ndarray:
    """One-hot category vector over the 10 portrait classes."""
    label = int(model.predict(features)[0])
    vec = np.zeros(len(CATEGORIES))
    vec[label - 1] = 1.0
    return vec


def category_one_hot(name: str) -> np.ndarray:
    vec = np.zeros(len(CATEGORIES))
    vec[CATEGORIES.index(name)] = 1.0
    return vec


# ---------------------------------------------------------------------------
# Model persistence: header JSON + little-endian f64 blocks

_MAGIC = b"CADEMCM1"


def save_svm_model(model: SvmModel, path: str | Path) -> None:
    header = {
        "version": 1,
        "dims": int(model.mean.shape[0]),
        "c": model.c,
        "gamma": model.gamma,
        "classes": list(model.classes),
        "models": [
            {"pair": list(pair), "n_sv": int(m.support_vectors.shape[0]),
             "bias": m.bias}
            for pair, m in zip(model.pairs, model.binaries)
        ],
    }
    blob = json.dumps(header).encode()
    chunks = [_MAGIC, struct.pack("<I", len(blob)), blob,
              model.mean.astype("<f8").tobytes(), model.scale.astype("<f8").tobytes()]
    for m in model.binaries:
        chunks.append(m.support_vectors.astype("<f8").tobytes())
        chunks.append(m.dual_coef.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_svm_model(path: str | Path) -> SvmModel:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise MalformedBundle(f"{path} is not a category SVM model file")
    (header_len,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + header_len].decode())
    dims = header["dims"]
    offset = 12 + header_len

    def take(count):
        nonlocal offset
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).astype(np.float64)
        offset += count * 8
        return arr

    mean = take(dims)
    scale = take(dims)
    pairs, binaries = [], []
    for entry in header["models"]:
        n_sv = entry["n_sv"]
        sv = take(n_sv * dims).reshape(n_sv, dims)
        coef = take(n_sv)
        pairs.append(tuple(entry["pair"]))
        binaries.append(BinarySvm(support_vectors=sv, dual_coef=coef,
                                  bias=entry["bias"], gamma=header["gamma"],
                                  c=header["c"]))
    return SvmModel(classes=tuple(header["classes"]), pairs=tuple(pairs),
                    binaries=binaries, mean=mean, scale=scale,
                    c=header["c"], gamma=header["gamma"])
