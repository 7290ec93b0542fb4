"""Merged semantic class table for the two object-label vocabularies.

The object detector labels 80 classes and the scene parser labels 150.
Twenty classes exist in both vocabularies; merging them yields the 210
merged ids used everywhere downstream (importance vectors, thresholds,
genre gating).  The merge table is configuration: the default below is a
reasonable name-based pairing and can be replaced by an edited JSON file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedBundle

OD_CLASS_COUNT = 80
SP_CLASS_COUNT = 150
MERGED_CLASS_COUNT = 210

OD_CLASSES = (
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
    "truck", "boat", "traffic light", "fire hydrant", "stop sign",
    "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
    "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard",
    "sports ball", "kite", "baseball bat", "baseball glove", "skateboard",
    "surfboard", "tennis racket", "bottle", "wine glass", "cup", "fork",
    "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair",
    "couch", "potted plant", "bed", "dining table", "toilet", "tv",
    "laptop", "mouse", "remote", "keyboard", "cell phone", "microwave",
    "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase",
    "scissors", "teddy bear", "hair drier", "toothbrush",
)

SP_CLASSES = (
    "wall", "building", "sky", "floor", "tree", "ceiling", "road", "bed",
    "windowpane", "grass", "cabinet", "sidewalk", "person", "earth", "door",
    "table", "mountain", "plant", "curtain", "chair", "car", "water",
    "painting", "sofa", "shelf", "house", "sea", "mirror", "rug", "field",
    "armchair", "seat", "fence", "desk", "rock", "wardrobe", "lamp",
    "bathtub", "railing", "cushion", "base", "box", "column", "signboard",
    "chest of drawers", "counter", "sand", "sink", "skyscraper",
    "fireplace", "refrigerator", "grandstand", "path", "stairs", "runway",
    "case", "pool table", "pillow", "screen door", "stairway", "river",
    "bridge", "bookcase", "blind", "coffee table", "toilet", "flower",
    "book", "hill", "bench", "countertop", "stove", "palm",
    "kitchen island", "computer", "swivel chair", "boat", "bar",
    "arcade machine", "hovel", "bus", "towel", "light", "truck", "tower",
    "chandelier", "awning", "streetlight", "booth", "television",
    "airplane", "dirt track", "apparel", "pole", "land", "bannister",
    "escalator", "ottoman", "bottle", "buffet", "poster", "stage", "van",
    "ship", "fountain", "conveyer belt", "canopy", "washer", "plaything",
    "swimming pool", "stool", "barrel", "basket", "waterfall", "tent",
    "bag", "minibike", "cradle", "oven", "ball", "food", "step", "tank",
    "trade name", "microwave", "pot", "animal", "bicycle", "lake",
    "dishwasher", "screen", "blanket", "sculpture", "hood", "sconce",
    "vase", "traffic light", "tray", "ashcan", "fan", "pier", "crt screen",
    "plate", "monitor", "bulletin board", "shower", "radiator", "glass",
    "clock", "flag",
)

# Default pairing of the 20 duplicated classes: (detector id, parser id).
# Name-matched where possible; minibike pairs with motorcycle, plant with
# potted plant, table with dining table, television with tv.
DEFAULT_SHARED_PAIRS = (
    (1, 13),    # person
    (2, 128),   # bicycle
    (3, 21),    # car
    (4, 117),   # motorcycle / minibike
    (5, 91),    # airplane
    (6, 81),    # bus
    (8, 84),    # truck
    (9, 77),    # boat
    (10, 137),  # traffic light
    (14, 70),   # bench
    (59, 18),   # potted plant / plant
    (60, 8),    # bed
    (61, 16),   # dining table / table
    (62, 66),   # toilet
    (63, 90),   # tv / television
    (69, 125),  # microwave
    (70, 119),  # oven
    (72, 48),   # sink
    (73, 51),   # refrigerator
    (74, 68),   # book
)

# Merged-class names composing the landscape gate: water-like,
# mountain-like, plant-like, cloud-like, and building-like scenery.
SCENERY_NAMES = frozenset({
    "water", "sea", "river", "lake", "waterfall", "swimming pool",
    "mountain", "hill", "rock",
    "tree", "grass", "potted plant", "field", "flower", "palm",
    "sky",
    "building", "house", "skyscraper", "tower",
})


@dataclass(frozen=True)
class ClassMap:
    """Bidirectional merge table between detector/parser ids and merged ids."""

    od_to_merged: dict[int, int]
    sp_to_merged: dict[int, int]
    merged_names: tuple[str, ...]  # index k-1 names merged class k
    scenery_ids: frozenset[int]
    person_id: int
    # Lookup tables indexed by raw id (0 maps to 0) for vectorized use.
    _od_lut: np.ndarray = field(repr=False, default=None)
    _sp_lut: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        od_lut = np.zeros(OD_CLASS_COUNT + 1, dtype=np.int32)
        for raw, merged in self.od_to_merged.items():
            od_lut[raw] = merged
        sp_lut = np.zeros(SP_CLASS_COUNT + 1, dtype=np.int32)
        for raw, merged in self.sp_to_merged.items():
            sp_lut[raw] = merged
        object.__setattr__(self, "_od_lut", od_lut)
        object.__setattr__(self, "_sp_lut", sp_lut)
        covered = set(self.od_to_merged.values()) | set(self.sp_to_merged.values())
        if covered != set(range(1, MERGED_CLASS_COUNT + 1)):
            raise MalformedBundle("merge table does not cover merged ids 1..210")
        shared = set(self.od_to_merged.values()) & set(self.sp_to_merged.values())
        if len(shared) != len(DEFAULT_SHARED_PAIRS):
            raise MalformedBundle(
                f"merge table must de-duplicate exactly {len(DEFAULT_SHARED_PAIRS)} "
                f"classes, got {len(shared)}"
            )

    def merge_od(self, ids: np.ndarray) -> np.ndarray:
        """Map a plane of detector ids (0 = none) to merged ids."""
        return self._od_lut[ids]

    def merge_sp(self, ids: np.ndarray) -> np.ndarray:
        """Map a plane of parser ids (0 = none) to merged ids."""
        return self._sp_lut[ids]

    def name_of(self, merged_id: int) -> str:
        return self.merged_names[merged_id - 1]


def default_class_map() -> ClassMap:
    """Build the default 210-class merge table.

    Detector classes keep their ids (1..80); the 20 paired parser classes
    collapse onto them; the remaining 130 parser classes take ids 81..210
    in ascending parser-id order.
    """
    od_to_merged = {i: i for i in range(1, OD_CLASS_COUNT + 1)}
    sp_to_merged = {sp: od for od, sp in DEFAULT_SHARED_PAIRS}
    next_id = OD_CLASS_COUNT + 1
    for sp in range(1, SP_CLASS_COUNT + 1):
        if sp in sp_to_merged:
            continue
        sp_to_merged[sp] = next_id
        next_id += 1
    names = list(OD_CLASSES)
    for sp in range(1, SP_CLASS_COUNT + 1):
        merged = sp_to_merged[sp]
        if merged > OD_CLASS_COUNT:
            names.append(SP_CLASSES[sp - 1])
    name_to_id = {n: i + 1 for i, n in enumerate(names)}
    scenery = frozenset(name_to_id[n] for n in SCENERY_NAMES)
    return ClassMap(
        od_to_merged=od_to_merged,
        sp_to_merged=sp_to_merged,
        merged_names=tuple(names),
        scenery_ids=scenery,
        person_id=name_to_id["person"],
    )


def save_class_map(cmap: ClassMap, path: str | Path) -> None:
    payload = {
        "version": 1,
        "od_to_merged": {str(k): v for k, v in cmap.od_to_merged.items()},
        "sp_to_merged": {str(k): v for k, v in cmap.sp_to_merged.items()},
        "merged_names": list(cmap.merged_names),
        "scenery_ids": sorted(cmap.scenery_ids),
        "person_id": cmap.person_id,
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_class_map(path: str | Path) -> ClassMap:
    try:
        payload = json.loads(Path(path).read_text())
        return ClassMap(
            od_to_merged={int(k): int(v) for k, v in payload["od_to_merged"].items()},
            sp_to_merged={int(k): int(v) for k, v in payload["sp_to_merged"].items()},
            merged_names=tuple(payload["merged_names"]),
            scenery_ids=frozenset(int(x) for x in payload["scenery_ids"]),
            person_id=int(payload["person_id"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedBundle(f"bad class map file {path}: {exc}") from exc
