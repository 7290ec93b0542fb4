"""Annotation bundle data model, on-disk format, and value unification.

A bundle is a directory holding ``manifest.json`` plus optional binary
planes (``sp.bin``, ``saliency.bin``).  Planes are stored row-major with
the first axis ``m`` (image width) and the second ``n`` (image height), so
a pixel index ``[i, j]`` addresses ``(x, y)``.  Boxes and joints use the
same pixel coordinates.

Value unification turns raw detections into per-pixel (id, score) planes
where score = -log2(1 - p), with p clamped so the score never exceeds 20.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MalformedBundle, ValueOutOfRange

VGG_DIM = 4096
JOINT_COUNT = 18
# Probability clamp: keeps scores finite with max exactly 20.
PROB_CLAMP = 1.0 - 2.0 ** -20

GENDERS = ("male", "female", "unknown")

# Joint ids 1..18 in detector output order.
JOINT_NAMES = (
    "nose", "neck", "right shoulder", "right elbow", "right wrist",
    "left shoulder", "left elbow", "left wrist", "right hip", "right knee",
    "right ankle", "left hip", "left knee", "left ankle", "left eye",
    "right eye", "left ear", "right ear",
)

MANIFEST_NAME = "manifest.json"
SP_PLANE_NAME = "sp.bin"
SALIENCY_NAME = "saliency.bin"
CORPUS_NAME = "corpus.json"


@dataclass(frozen=True)
class BoxDetection:
    """One detector box: class id, probability, inclusive pixel extent."""

    class_id: int
    probability: float
    box: tuple[float, float, float, float]  # x0, y0, x1, y1

    def pixel_span(self) -> tuple[int, int, int, int]:
        """Integer pixel range (i0, i1, j0, j1), all inclusive."""
        x0, y0, x1, y1 = self.box
        return (
            int(math.floor(x0)), int(math.floor(x1)),
            int(math.floor(y0)), int(math.floor(y1)),
        )


@dataclass(frozen=True)
class Joint:
    joint_id: int
    x: float
    y: float
    score: float


@dataclass(frozen=True)
class AnnotationBundle:
    """Validated per-image annotations; the engine's sole raw input."""

    image_id: str
    width: int
    height: int
    od: tuple[BoxDetection, ...]
    people: tuple[tuple[Joint, ...], ...]
    vgg: np.ndarray  # (4096,) float32
    rating: float
    views: int
    gender: str
    sp_ids: np.ndarray | None = None     # (m, n) int32, 0 = no label
    sp_probs: np.ndarray | None = None   # (m, n) float64 in [0, 1)
    saliency: np.ndarray | None = None   # (m, n) float64 in [0, 1]
    category: str | None = None
    tags: tuple[str, ...] = ()
    image_path: str | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.height)


@dataclass(frozen=True)
class DetectionTensor:
    """Per-pixel class/score planes for one detector.

    ``probs`` keeps the primal probabilities the scores were derived from
    so threshold comparisons stay exact at configured boundaries.
    """

    kind: str  # od | sp | pe
    ids: np.ndarray     # (m, n) int32, 0 = no detection
    scores: np.ndarray  # (m, n) float64, 0 where ids == 0
    probs: np.ndarray = field(repr=False, default=None)  # (m, n) float64


def gender_vector(tag: str) -> np.ndarray:
    """One-hot over (male, female, unknown)."""
    vec = np.zeros(3)
    vec[GENDERS.index(tag)] = 1.0
    return vec


def score_from_probability(p: np.ndarray | float) -> np.ndarray | float:
    """-log2(1 - p) with p clamped to keep the score at most 20."""
    return -np.log2(1.0 - np.minimum(p, PROB_CLAMP))


# ---------------------------------------------------------------------------
# Validation and loading


def _require(cond: bool, message: str, error=MalformedBundle) -> None:
    if not cond:
        raise error(message)


def _probability(value, what: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             f"{what} must be a number")
    p = float(value)
    if not (0.0 <= p < 1.0):
        raise ValueOutOfRange(f"{what} must lie in [0, 1), got {p}")
    return p


def bundle_from_manifest(manifest: dict,
                         sp_raw: bytes | None = None,
                         saliency_raw: bytes | None = None,
                         sp_inline: dict | None = None,
                         saliency_inline=None,
                         base_dir: Path | None = None) -> AnnotationBundle:
    """Validate a parsed manifest (plus optional planes) into a bundle."""
    _require(isinstance(manifest, dict), "manifest must be a JSON object")
    for key in ("image_id", "width", "height", "vgg"):
        _require(key in manifest, f"manifest missing required field '{key}'")

    image_id = manifest["image_id"]
    _require(isinstance(image_id, str) and image_id != "", "image_id must be a non-empty string")
    width, height = manifest["width"], manifest["height"]
    _require(isinstance(width, int) and isinstance(height, int) and width >= 0 and height >= 0,
             "width/height must be non-negative integers")

    vgg_list = manifest["vgg"]
    _require(isinstance(vgg_list, list), "vgg must be a list")
    if len(vgg_list) != VGG_DIM:
        raise MalformedBundle(f"vgg must have exactly {VGG_DIM} entries, got {len(vgg_list)}")
    vgg = np.asarray(vgg_list, dtype=np.float32)
    _require(bool(np.isfinite(vgg).all()), "vgg entries must be finite", ValueOutOfRange)

    rating = manifest.get("rating", 0.0)
    _require(isinstance(rating, (int, float)) and not isinstance(rating, bool),
             "rating must be a number")
    if rating < 0:
        raise ValueOutOfRange(f"rating must be >= 0, got {rating}")
    views = manifest.get("views", 0)
    _require(isinstance(views, int) and not isinstance(views, bool), "views must be an integer")
    if views < 0:
        raise ValueOutOfRange(f"views must be >= 0, got {views}")

    gender = manifest.get("gender", "unknown")
    _require(gender in GENDERS, f"gender must be one of {GENDERS}, got {gender!r}")

    category = manifest.get("category")
    _require(category is None or isinstance(category, str), "category must be a string")
    tags = manifest.get("tags", [])
    _require(isinstance(tags, list) and all(isinstance(t, str) for t in tags),
             "tags must be a list of strings")
    image_path = manifest.get("image_path")
    _require(image_path is None or isinstance(image_path, str), "image_path must be a string")

    boxes = []
    for idx, entry in enumerate(manifest.get("objects", [])):
        _require(isinstance(entry, dict), f"objects[{idx}] must be an object")
        cid = entry.get("class_id")
        _require(isinstance(cid, int), f"objects[{idx}].class_id must be an integer")
        if not 1 <= cid <= 80:
            raise ValueOutOfRange(f"objects[{idx}].class_id must lie in 1..80, got {cid}")
        p = _probability(entry.get("probability"), f"objects[{idx}].probability")
        box = entry.get("box")
        _require(isinstance(box, list) and len(box) == 4
                 and all(isinstance(v, (int, float)) for v in box),
                 f"objects[{idx}].box must be [x0, y0, x1, y1]")
        x0, y0, x1, y1 = (float(v) for v in box)
        if not (0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height):
            raise ValueOutOfRange(
                f"objects[{idx}].box must lie within [0,{width})x[0,{height})")
        boxes.append(BoxDetection(cid, p, (x0, y0, x1, y1)))

    people = []
    for pidx, person in enumerate(manifest.get("people", [])):
        _require(isinstance(person, list), f"people[{pidx}] must be a list of joints")
        _require(len(person) <= JOINT_COUNT, f"people[{pidx}] has more than {JOINT_COUNT} joints")
        joints, seen = [], set()
        for jidx, entry in enumerate(person):
            _require(isinstance(entry, dict), f"people[{pidx}][{jidx}] must be an object")
            jid = entry.get("joint_id")
            _require(isinstance(jid, int), f"people[{pidx}][{jidx}].joint_id must be an integer")
            if not 1 <= jid <= JOINT_COUNT:
                raise ValueOutOfRange(
                    f"people[{pidx}][{jidx}].joint_id must lie in 1..{JOINT_COUNT}")
            _require(jid not in seen, f"people[{pidx}] repeats joint id {jid}")
            seen.add(jid)
            x, y = entry.get("x"), entry.get("y")
            _require(isinstance(x, (int, float)) and isinstance(y, (int, float)),
                     f"people[{pidx}][{jidx}] needs numeric x, y")
            if not (0 <= x < width and 0 <= y < height):
                raise ValueOutOfRange(
                    f"people[{pidx}][{jidx}] coordinates outside [0,{width})x[0,{height})")
            score = _probability(entry.get("score"), f"people[{pidx}][{jidx}].score")
            joints.append(Joint(jid, float(x), float(y), score))
        people.append(tuple(joints))

    n_pixels = width * height

    sp_ids = sp_probs = None
    if sp_inline is not None:
        ids = np.asarray(sp_inline.get("ids"), dtype=np.int32)
        probs = np.asarray(sp_inline.get("probs"), dtype=np.float64)
        if ids.shape != (width, height) or probs.shape != (width, height):
            raise DimensionMismatch("inline sp planes must be width x height")
        sp_ids, sp_probs = ids, probs
    elif sp_raw is not None:
        expected = n_pixels * 2 + n_pixels * 4
        if len(sp_raw) != expected:
            raise DimensionMismatch(
                f"sp plane file must hold {expected} bytes for {width}x{height}, "
                f"got {len(sp_raw)}")
        sp_ids = np.frombuffer(sp_raw[: n_pixels * 2], dtype="<u2").astype(np.int32)
        sp_ids = sp_ids.reshape(width, height)
        sp_probs = np.frombuffer(sp_raw[n_pixels * 2:], dtype="<f4").astype(np.float64)
        sp_probs = sp_probs.reshape(width, height)
    if sp_ids is not None:
        if sp_ids.min(initial=0) < 0 or sp_ids.max(initial=0) > 150:
            raise ValueOutOfRange("sp ids must lie in 0..150")
        if n_pixels and (sp_probs.min() < 0 or sp_probs.max() >= 1.0):
            raise ValueOutOfRange("sp probabilities must lie in [0, 1)")

    saliency = None
    if saliency_inline is not None:
        saliency = np.asarray(saliency_inline, dtype=np.float64)
        if saliency.shape != (width, height):
            raise DimensionMismatch("inline saliency must be width x height")
    elif saliency_raw is not None:
        if len(saliency_raw) != n_pixels * 4:
            raise DimensionMismatch(
                f"saliency file must hold {n_pixels * 4} bytes for {width}x{height}")
        saliency = np.frombuffer(saliency_raw, dtype="<f4").astype(np.float64)
        saliency = saliency.reshape(width, height)
    if saliency is not None and n_pixels:
        if saliency.min() < 0 or saliency.max() > 1.0:
            raise ValueOutOfRange("saliency entries must lie in [0, 1]")

    return AnnotationBundle(
        image_id=image_id, width=width, height=height,
        od=tuple(boxes), people=tuple(people), vgg=vgg,
        rating=float(rating), views=int(views), gender=gender,
        sp_ids=sp_ids, sp_probs=sp_probs, saliency=saliency,
        category=category, tags=tuple(tags), image_path=image_path,
    )


def load_bundle(path: str | Path) -> AnnotationBundle:
    """Load and fully validate a bundle directory."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.is_file():
        raise MalformedBundle(f"no {MANIFEST_NAME} in {path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedBundle(f"invalid JSON in {manifest_path}: {exc}") from exc
    sp_raw = (path / SP_PLANE_NAME).read_bytes() if (path / SP_PLANE_NAME).is_file() else None
    sal_raw = (path / SALIENCY_NAME).read_bytes() if (path / SALIENCY_NAME).is_file() else None
    return bundle_from_manifest(manifest, sp_raw=sp_raw, saliency_raw=sal_raw, base_dir=path)


def save_bundle(bundle: AnnotationBundle, path: str | Path) -> Path:
    """Write a bundle directory (manifest plus binary planes)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "image_id": bundle.image_id,
        "width": bundle.width,
        "height": bundle.height,
        "rating": bundle.rating,
        "views": bundle.views,
        "gender": bundle.gender,
        "vgg": [float(v) for v in bundle.vgg],
        "objects": [
            {"class_id": b.class_id, "probability": b.probability, "box": list(b.box)}
            for b in bundle.od
        ],
        "people": [
            [{"joint_id": j.joint_id, "x": j.x, "y": j.y, "score": j.score} for j in person]
            for person in bundle.people
        ],
        "tags": list(bundle.tags),
    }
    if bundle.category is not None:
        manifest["category"] = bundle.category
    if bundle.image_path is not None:
        manifest["image_path"] = bundle.image_path
    (path / MANIFEST_NAME).write_text(json.dumps(manifest))
    if bundle.sp_ids is not None:
        blob = bundle.sp_ids.astype("<u2").tobytes() + bundle.sp_probs.astype("<f4").tobytes()
        (path / SP_PLANE_NAME).write_bytes(blob)
    if bundle.saliency is not None:
        (path / SALIENCY_NAME).write_bytes(bundle.saliency.astype("<f4").tobytes())
    return path


def list_corpus(corpus_dir: str | Path) -> list[Path]:
    """Bundle directories listed by a corpus manifest, in listed order."""
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / CORPUS_NAME
    if not manifest_path.is_file():
        raise MalformedBundle(f"no {CORPUS_NAME} in {corpus_dir}")
    try:
        listing = json.loads(manifest_path.read_text())
        names = listing["bundles"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MalformedBundle(f"invalid corpus manifest {manifest_path}: {exc}") from exc
    return [corpus_dir / name for name in names]


def write_corpus_manifest(corpus_dir: str | Path, bundle_names: list[str]) -> None:
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    (corpus_dir / CORPUS_NAME).write_text(json.dumps({"version": 1, "bundles": bundle_names}))


# ---------------------------------------------------------------------------
# Value unification


def joint_disc_radius(width: int, height: int) -> int:
    """Disc radius for rasterizing point joints: max(2, 1% of the long side)."""
    return max(2, round(0.01 * max(width, height)))


def _paint(ids: np.ndarray, probs: np.ndarray, region, class_id: int, p: float) -> None:
    """Claim region pixels for (class_id, p) if p beats the current holder.

    Ties go to the lower class id so rasterization is order-independent.
    """
    cur_p = probs[region]
    cur_id = ids[region]
    take = (p > cur_p) | ((p == cur_p) & ((cur_id == 0) | (class_id < cur_id)))
    cur_p[take] = p
    cur_id[take] = class_id
    probs[region] = cur_p
    ids[region] = cur_id


def rasterize_boxes(boxes, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    ids = np.zeros((width, height), dtype=np.int32)
    probs = np.zeros((width, height), dtype=np.float64)
    for det in boxes:
        i0, i1, j0, j1 = det.pixel_span()
        _paint(ids, probs, (slice(i0, i1 + 1), slice(j0, j1 + 1)),
               det.class_id, det.probability)
    return ids, probs


def rasterize_joints(people, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    ids = np.zeros((width, height), dtype=np.int32)
    probs = np.zeros((width, height), dtype=np.float64)
    radius = joint_disc_radius(width, height)
    for person in people:
        for joint in person:
            i0 = max(0, int(math.floor(joint.x - radius)))
            i1 = min(width - 1, int(math.ceil(joint.x + radius)))
            j0 = max(0, int(math.floor(joint.y - radius)))
            j1 = min(height - 1, int(math.ceil(joint.y + radius)))
            if i0 > i1 or j0 > j1:
                continue
            ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
            mask = (ii - joint.x) ** 2 + (jj - joint.y) ** 2 <= radius ** 2
            region = (ii[mask], jj[mask])
            _paint(ids, probs, region, joint.joint_id, joint.score)
    return ids, probs


def _tensor(kind: str, ids: np.ndarray, probs: np.ndarray) -> DetectionTensor:
    # Zero-probability labels are dropped so id == 0 holds exactly where
    # score == 0.
    labeled = (ids != 0) & (probs > 0.0)
    ids = np.where(labeled, ids, 0).astype(np.int32)
    probs = np.where(labeled, probs, 0.0)
    scores = np.where(labeled, score_from_probability(probs), 0.0)
    return DetectionTensor(kind=kind, ids=ids, scores=scores, probs=probs)


def unify(bundle: AnnotationBundle) -> tuple[DetectionTensor, DetectionTensor, DetectionTensor]:
    """Rasterize raw detections into the (od, sp, pe) plane triple."""
    w, h = bundle.width, bundle.height
    od_ids, od_probs = rasterize_boxes(bundle.od, w, h)
    if bundle.sp_ids is not None:
        sp_ids = bundle.sp_ids.astype(np.int32)
        sp_probs = np.asarray(bundle.sp_probs, dtype=np.float64)
    else:
        sp_ids = np.zeros((w, h), dtype=np.int32)
        sp_probs = np.zeros((w, h), dtype=np.float64)
    pe_ids, pe_probs = rasterize_joints(bundle.people, w, h)
    return (
        _tensor("od", od_ids, od_probs),
        _tensor("sp", sp_ids, sp_probs),
        _tensor("pe", pe_ids, pe_probs),
    )
