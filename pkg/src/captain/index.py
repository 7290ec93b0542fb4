"""Composition model: per-image feature records, corpus indexing, persistence.

Each image contributes one row to six column blocks (vgg 4096, iod 210,
cade 10, arpose 2772, stat 2, gender 3).  Blocks are float32 in memory and
on disk so save/load round-trips are bit-exact and appends match rebuilds.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import arpose, cade
from .bundles import AnnotationBundle, gender_vector, list_corpus, load_bundle, unify
from .classmap import ClassMap, default_class_map
from .errors import DuplicateId, EmptyCorpus, MalformedBundle
from .fusion import HysteresisThresholds, fuse

BLOCKS = {
    "vgg": 4096,
    "iod": 210,
    "cade": 10,
    "arpose": 2772,
    "stat": 2,
    "gender": 3,
}
BLOCK_ORDER = tuple(BLOCKS)
FORMAT_VERSION = 1
HEADER_NAME = "model.json"


@dataclass(frozen=True)
class FeatureRecord:
    """One image's six feature vectors, stored float32."""

    image_id: str
    vgg: np.ndarray
    iod: np.ndarray
    cade: np.ndarray
    arpose: np.ndarray
    stat: np.ndarray
    gender: np.ndarray

    def __post_init__(self):
        for name, dim in BLOCKS.items():
            vec = getattr(self, name)
            if vec.shape != (dim,):
                raise ValueError(f"{name} block must have shape ({dim},), got {vec.shape}")

    def block(self, name: str) -> np.ndarray:
        return getattr(self, name)


def decompose(bundle: AnnotationBundle,
              class_map: ClassMap | None = None,
              thresholds: HysteresisThresholds | None = None,
              cade_model: cade.SvmModel | None = None) -> FeatureRecord:
    """Run the full per-image pipeline and assemble one feature record.

    The category block is the classifier output for portraits when a
    trained model is supplied, else the ground-truth label's one-hot when
    the bundle carries one; everything else degrades to zeros.
    """
    if class_map is None:
        class_map = default_class_map()
    tensors = unify(bundle)
    fusion = fuse(bundle, tensors, class_map, thresholds)

    genre = cade.genre_gate(fusion, class_map)
    cade_vec = np.zeros(len(cade.CATEGORIES))
    if genre == cade.GENRE_PORTRAIT:
        if cade_model is not None:
            features = cade.extract_cade_features(bundle, fusion, class_map)
            cade_vec = cade.classify(cade_model, features)
        elif bundle.category in cade.CATEGORIES:
            cade_vec = cade.category_one_hot(bundle.category)

    return FeatureRecord(
        image_id=bundle.image_id,
        vgg=bundle.vgg.astype(np.float32),
        iod=fusion.importance.astype(np.float32),
        cade=cade_vec.astype(np.float32),
        arpose=arpose.image_pose_vector(bundle.people).astype(np.float32),
        stat=np.array([bundle.rating, bundle.views], dtype=np.float32),
        gender=gender_vector(bundle.gender).astype(np.float32),
    )


@dataclass(frozen=True)
class CompositionModel:
    """Row-aligned feature matrices over the indexed corpus."""

    ids: tuple[str, ...]
    blocks: dict[str, np.ndarray]  # name -> (n, dim) float32
    version: int = FORMAT_VERSION
    _id_index: dict[str, int] = field(repr=False, default=None)
    _f64_cache: dict[str, np.ndarray] = field(repr=False, default=None)

    def __post_init__(self):
        n = len(self.ids)
        for name, dim in BLOCKS.items():
            mat = self.blocks[name]
            if mat.shape != (n, dim):
                raise ValueError(f"block {name} must have shape ({n}, {dim}), got {mat.shape}")
        index = {image_id: row for row, image_id in enumerate(self.ids)}
        if len(index) != n:
            raise DuplicateId("model ids must be unique")
        object.__setattr__(self, "_id_index", index)
        object.__setattr__(self, "_f64_cache", {})

    @property
    def row_count(self) -> int:
        return len(self.ids)

    def block64(self, name: str) -> np.ndarray:
        """Float64 view of a block, cached so repeated queries skip the cast."""
        cached = self._f64_cache.get(name)
        if cached is None:
            cached = self.blocks[name].astype(np.float64)
            self._f64_cache[name] = cached
        return cached

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._id_index

    def row_of(self, image_id: str) -> int:
        return self._id_index[image_id]

    def record(self, image_id: str) -> FeatureRecord:
        row = self.row_of(image_id)
        return FeatureRecord(
            image_id=image_id,
            **{name: self.blocks[name][row].copy() for name in BLOCK_ORDER},
        )

    def submodel(self, image_ids) -> "CompositionModel":
        """New model holding the given rows, in the given order."""
        rows = [self.row_of(i) for i in image_ids]
        return CompositionModel(
            ids=tuple(image_ids),
            blocks={name: self.blocks[name][rows].copy() for name in BLOCK_ORDER},
            version=self.version,
        )

    @classmethod
    def empty(cls) -> "CompositionModel":
        return cls(ids=(), blocks={name: np.zeros((0, dim), dtype=np.float32)
                                   for name, dim in BLOCKS.items()})

    @classmethod
    def from_records(cls, records) -> "CompositionModel":
        records = list(records)
        return cls(
            ids=tuple(r.image_id for r in records),
            blocks={
                name: (
                    np.stack([r.block(name) for r in records]).astype(np.float32)
                    if records else np.zeros((0, BLOCKS[name]), dtype=np.float32)
                )
                for name in BLOCK_ORDER
            },
        )


def append_record(model: CompositionModel, record: FeatureRecord) -> CompositionModel:
    """Model with one added row; equivalent to rebuilding on the larger corpus."""
    if record.image_id in model:
        raise DuplicateId(f"image id {record.image_id!r} already indexed")
    return CompositionModel(
        ids=model.ids + (record.image_id,),
        blocks={
            name: np.vstack([model.blocks[name], record.block(name)[None, :]])
            for name in BLOCK_ORDER
        },
        version=model.version,
    )


@dataclass(frozen=True)
class BuildReport:
    model: CompositionModel
    errors: tuple[tuple[str, str], ...]  # (bundle path, message)


def build(corpus_dir: str | Path,
          class_map: ClassMap | None = None,
          thresholds: HysteresisThresholds | None = None,
          cade_model: cade.SvmModel | None = None) -> BuildReport:
    """Index every bundle the corpus manifest lists, in manifest order.

    Per-bundle failures are collected instead of aborting the build.
    """
    bundle_dirs = list_corpus(corpus_dir)
    if not bundle_dirs:
        raise EmptyCorpus(f"corpus manifest in {corpus_dir} lists no bundles")
    records, errors = [], []
    for bundle_dir in bundle_dirs:
        try:
            bundle = load_bundle(bundle_dir)
            records.append(decompose(bundle, class_map, thresholds, cade_model))
        except Exception as exc:  # noqa: BLE001 - report and continue
            errors.append((str(bundle_dir), f"{type(exc).__name__}: {exc}"))
    return BuildReport(model=CompositionModel.from_records(records),
                       errors=tuple(errors))


def append_bundle(model: CompositionModel, bundle_dir: str | Path,
                  class_map: ClassMap | None = None,
                  thresholds: HysteresisThresholds | None = None,
                  cade_model: cade.SvmModel | None = None) -> CompositionModel:
    bundle = load_bundle(bundle_dir)
    return append_record(model, decompose(bundle, class_map, thresholds, cade_model))


# ---------------------------------------------------------------------------
# Persistence: header JSON + one little-endian float32 file per block


def save_model(model: CompositionModel, path: str | Path) -> Path:
    """Write the model directory.

    Every file lands via an atomic rename and the header goes last, so a
    reader racing an in-place update either gets a consistent model or a
    loud size-mismatch error, never silently mixed rows.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    def put(name: str, data: bytes) -> None:
        tmp = path / (name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path / name)

    for name in BLOCK_ORDER:
        put(f"{name}.f32", model.blocks[name].astype("<f4").tobytes())
    header = {
        "format_version": model.version,
        "rows": model.row_count,
        "blocks": {name: BLOCKS[name] for name in BLOCK_ORDER},
        "ids": list(model.ids),
    }
    put(HEADER_NAME, json.dumps(header).encode())
    return path


def load_model(path: str | Path) -> CompositionModel:
    path = Path(path)
    header_path = path / HEADER_NAME
    if not header_path.is_file():
        raise MalformedBundle(f"no {HEADER_NAME} in {path}")
    header = json.loads(header_path.read_text())
    if header.get("format_version") != FORMAT_VERSION:
        raise MalformedBundle(
            f"unsupported model format version {header.get('format_version')}")
    rows = header["rows"]
    blocks = {}
    for name in BLOCK_ORDER:
        dim = BLOCKS[name]
        raw = (path / f"{name}.f32").read_bytes()
        if len(raw) != rows * dim * 4:
            raise MalformedBundle(f"block {name} has wrong size in {path}")
        blocks[name] = np.frombuffer(raw, dtype="<f4").reshape(rows, dim).copy()
    return CompositionModel(ids=tuple(header["ids"]), blocks=blocks,
                            version=header["format_version"])
