"""Seeded synthetic bundles and corpora for tests, benchmarks, and demos.

Real detector outputs are not required anywhere in the engine, so small
generated annotation bundles stand in for a crawled corpus.
"""
from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from .bundles import (
    AnnotationBundle, BoxDetection, Joint, VGG_DIM, save_bundle,
    write_corpus_manifest,
)
from .cade import CATEGORIES
from .matching import PREDECESSOR, _DETECTOR_ID

# Base standing pose: per chain joint, the absolute direction of the
# segment arriving from its predecessor and the segment length in head
# units.  Index 0 is the nose and carries no segment.
_HALF_PI = math.pi / 2.0
BASE_ANGLES = np.array([
    0.0,
    _HALF_PI,            # neck: straight down
    -_HALF_PI - 0.6,     # right eye
    -_HALF_PI + 0.6,     # left eye
    math.pi + 0.4,       # right ear, off the right eye
    -0.4,                # left ear, off the left eye
    math.pi - 0.25,      # right shoulder
    0.25,                # left shoulder
    _HALF_PI + 0.55,     # right elbow
    _HALF_PI - 0.55,     # left elbow
    _HALF_PI + 0.35,     # right wrist
    _HALF_PI - 0.35,     # left wrist
    _HALF_PI + 0.22,     # right hip
    _HALF_PI - 0.22,     # left hip
    _HALF_PI + 0.10,     # right knee
    _HALF_PI - 0.10,     # left knee
    _HALF_PI + 0.05,     # right ankle
    _HALF_PI - 0.05,     # left ankle
])
BASE_LENGTHS = np.array([
    0.0, 1.0, 0.28, 0.28, 0.30, 0.30, 0.55, 0.55, 0.50, 0.50,
    0.45, 0.45, 1.15, 1.15, 0.85, 0.85, 0.80, 0.80,
])


def random_pose_prototype(rng: np.random.Generator) -> np.ndarray:
    """A pose archetype: base segment directions with large random offsets."""
    offsets = rng.uniform(-0.8, 0.8, size=18)
    offsets[0] = 0.0
    return BASE_ANGLES + offsets


def pose_coordinates(angles: np.ndarray, lengths: np.ndarray | None = None,
                     origin=(0.0, 0.0), scale: float = 1.0) -> np.ndarray:
    """Chain-ordered joint coordinates from absolute segment directions."""
    if lengths is None:
        lengths = BASE_LENGTHS
    xy = np.zeros((18, 2))
    xy[0] = origin
    for idx in range(1, 18):
        pre = PREDECESSOR[idx]
        step = scale * lengths[idx]
        xy[idx] = xy[pre] + step * np.array([math.cos(angles[idx]), math.sin(angles[idx])])
    return xy


def jittered_pose(rng: np.random.Generator, prototype: np.ndarray,
                  jitter_deg: float = 5.0) -> np.ndarray:
    """Prototype directions perturbed by at most the given degrees."""
    jitter = rng.uniform(-math.radians(jitter_deg), math.radians(jitter_deg), size=18)
    jitter[0] = 0.0
    return prototype + jitter


def joints_from_chain(xy: np.ndarray, rng: np.random.Generator,
                      width: int, height: int,
                      drop: float = 0.0) -> tuple[Joint, ...]:
    """Fit chain coordinates into the image and emit detector joints."""
    span = xy.max(axis=0) - xy.min(axis=0)
    margin = 2.0
    fit = min(
        (width - 1 - 2 * margin) / max(span[0], 1e-9),
        (height - 1 - 2 * margin) / max(span[1], 1e-9),
    )
    scaled = (xy - xy.min(axis=0)) * fit + margin
    joints = []
    for chain_idx in range(18):
        if drop > 0.0 and rng.random() < drop and chain_idx > 1:
            continue
        x = float(np.clip(scaled[chain_idx, 0], 0.0, width - 1 - 1e-6))
        y = float(np.clip(scaled[chain_idx, 1], 0.0, height - 1 - 1e-6))
        joints.append(Joint(
            joint_id=_DETECTOR_ID[chain_idx],
            x=x, y=y,
            score=float(rng.uniform(0.45, 0.95)),
        ))
    return tuple(joints)


def random_skeleton(rng: np.random.Generator, width: int, height: int,
                    drop: float = 0.0) -> tuple[Joint, ...]:
    angles = jittered_pose(rng, random_pose_prototype(rng), jitter_deg=12.0)
    return joints_from_chain(pose_coordinates(angles), rng, width, height, drop)


def _box_around(rng: np.random.Generator, width: int, height: int,
                min_frac: float = 0.15) -> tuple[float, float, float, float]:
    bw = rng.uniform(min_frac, 0.7) * width
    bh = rng.uniform(min_frac, 0.7) * height
    x0 = rng.uniform(0, max(width - 1 - bw, 1e-3))
    y0 = rng.uniform(0, max(height - 1 - bh, 1e-3))
    return (x0, y0, min(x0 + bw, width - 1 - 1e-6), min(y0 + bh, height - 1 - 1e-6))


def _scene_planes(rng: np.random.Generator, width: int, height: int,
                  sky_frac: float) -> tuple[np.ndarray, np.ndarray]:
    """Scene parse with a sky band on top and earth/sea below."""
    ids = np.zeros((width, height), dtype=np.int32)
    probs = np.zeros((width, height), dtype=np.float64)
    horizon = int(sky_frac * height)
    ids[:, :horizon] = 3        # sky
    ids[:, horizon:] = int(rng.choice([27, 17, 14]))  # sea / mountain / earth
    probs[:] = rng.uniform(0.5, 0.95, size=(width, height))
    return ids, probs


def synth_bundle(rng: np.random.Generator, image_id: str,
                 width: int = 96, height: int = 64,
                 kind: str = "portrait",
                 people_count: int | None = None,
                 with_saliency: bool | None = None) -> AnnotationBundle:
    """One random annotation bundle of the requested flavor."""
    vgg = rng.normal(size=VGG_DIM).astype(np.float32)
    vgg /= np.linalg.norm(vgg)
    rating = float(np.round(rng.uniform(0, 80), 2))
    views = int(rng.integers(0, 200_000))
    gender = str(rng.choice(["male", "female", "unknown"]))

    boxes: list[BoxDetection] = []
    people: list[tuple[Joint, ...]] = []
    sp_ids = sp_probs = None
    category = None

    if kind == "portrait":
        count = people_count if people_count is not None else int(rng.integers(1, 4))
        for _ in range(count):
            people.append(random_skeleton(rng, width, height, drop=float(rng.uniform(0, 0.15))))
            boxes.append(BoxDetection(1, float(rng.uniform(0.45, 0.95)),
                                      _box_around(rng, width, height, min_frac=0.3)))
        if rng.random() < 0.5:
            extra = int(rng.choice([57, 15, 40]))  # chair / bird / bottle
            boxes.append(BoxDetection(extra, float(rng.uniform(0.3, 0.9)),
                                      _box_around(rng, width, height)))
        category = str(rng.choice(CATEGORIES))
    elif kind == "landscape":
        sp_ids, sp_probs = _scene_planes(rng, width, height,
                                         sky_frac=float(rng.uniform(0.35, 0.6)))
    else:
        if rng.random() < 0.7:
            small = int(rng.choice([40, 42, 75]))  # bottle / cup / clock
            boxes.append(BoxDetection(small, float(rng.uniform(0.05, 0.3)),
                                      _box_around(rng, width, height, min_frac=0.02)))

    saliency = None
    use_sal = with_saliency if with_saliency is not None else rng.random() < 0.5
    if use_sal and width * height:
        ii = np.linspace(-1, 1, width)[:, None]
        jj = np.linspace(-1, 1, height)[None, :]
        peak_i, peak_j = rng.uniform(-0.5, 0.5, size=2)
        saliency = np.exp(-((ii - peak_i) ** 2 + (jj - peak_j) ** 2) / 0.4)
        saliency = saliency / saliency.max()

    return AnnotationBundle(
        image_id=image_id, width=width, height=height,
        od=tuple(boxes), people=tuple(people), vgg=vgg,
        rating=rating, views=views, gender=gender,
        sp_ids=sp_ids, sp_probs=sp_probs, saliency=saliency,
        category=category, tags=(kind,),
    )


def write_synth_corpus(corpus_dir: str | Path, count: int, seed: int = 0,
                       width: int = 96, height: int = 64,
                       with_images: bool = False) -> list[str]:
    """Write a corpus of generated bundles; returns the bundle names."""
    corpus_dir = Path(corpus_dir)
    rng = np.random.default_rng(seed)
    names = []
    kinds = ["portrait", "portrait", "portrait", "landscape", "other"]
    for i in range(count):
        name = f"img{i:04d}"
        kind = kinds[int(rng.integers(len(kinds)))]
        bundle = synth_bundle(rng, name, width=width, height=height, kind=kind)
        if with_images:
            bundle = dataclasses.replace(bundle, image_path="photo.png")
        save_bundle(bundle, corpus_dir / name)
        if with_images:
            _write_placeholder_png(corpus_dir / name / "photo.png", rng)
        names.append(name)
    write_corpus_manifest(corpus_dir, names)
    return names


def _write_placeholder_png(path: Path, rng: np.random.Generator) -> None:
    try:
        from PIL import Image
    except ImportError:  # demo images are optional
        return
    pixels = rng.integers(0, 255, size=(48, 64, 3), dtype=np.uint8)
    Image.fromarray(pixels, "RGB").save(path)
