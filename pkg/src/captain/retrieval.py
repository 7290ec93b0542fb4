"""Similarity scoring, normalization, and preference-weighted ranking.

Six per-detector similarity rows are computed between the query record
and every indexed image, each row is normalized into a distribution, and
the user's preference weights combine them into one ranking score.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import matvec64
from .errors import EmptyModel
from .index import CompositionModel, FeatureRecord

FEATURES = ("vgg", "iod", "cade", "arpose", "stat", "gender")
# Slices whose total falls below this become uniform distributions.
DEGENERATE_SUM = 1e-12


@dataclass(frozen=True)
class UspWeights:
    """Non-negative preference weights, normalized to sum to one."""

    vgg: float = 0.0
    iod: float = 0.0
    cade: float = 0.0
    arpose: float = 0.0
    stat: float = 0.0
    gender: float = 0.0

    def __post_init__(self):
        values = [getattr(self, name) for name in FEATURES]
        if any(v < 0 for v in values):
            raise ValueError(f"weights must be non-negative, got {values}")
        total = sum(values)
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        for name, v in zip(FEATURES, values):
            object.__setattr__(self, name, v / total)

    @classmethod
    def from_mapping(cls, mapping) -> "UspWeights":
        unknown = set(mapping) - set(FEATURES)
        if unknown:
            raise ValueError(f"unknown weight keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in mapping.items()})

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURES])

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in FEATURES}


def _query_blocks(queries: list[FeatureRecord]):
    stack = {
        name: np.stack([q.block(name) for q in queries]).astype(np.float64)
        for name in ("vgg", "iod", "cade", "arpose", "gender")
    }
    return stack


def similarity(model: CompositionModel, queries) -> np.ndarray:
    """Raw similarity tensor of shape (6, rows, len(queries)).

    vgg/cade/arpose are dot products, the importance row is a Gaussian of
    the mass the indexed image carries on classes absent from the query,
    the stat row is the indexed image's rating, and the gender row is +1
    on match and -1 otherwise.
    """
    if isinstance(queries, FeatureRecord):
        queries = [queries]
    if model.row_count == 0:
        raise EmptyModel("composition model has no rows")
    q = _query_blocks(list(queries))
    n_q = q["vgg"].shape[0]

    ratings = model.block64("stat")[:, 0]
    out = np.empty((len(FEATURES), model.row_count, n_q))
    if n_q == 1:
        # Single-query fast path through the mixed-precision kernel.
        out[0, :, 0] = matvec64(model, "vgg", q["vgg"][0])
        # Importance mass of each indexed image on classes the query
        # lacks; mathematically in [0, 1], clipped against float32
        # storage drift.
        missing = np.clip(matvec64(model, "iod", 1.0 - np.sign(q["iod"][0])),
                          0.0, 1.0)
        out[1, :, 0] = np.exp(-(missing ** 2))
        out[2, :, 0] = model.block64("cade") @ q["cade"][0]
        out[3, :, 0] = matvec64(model, "arpose", q["arpose"][0])
        out[4, :, 0] = ratings
        same = model.block64("gender") @ q["gender"][0]
        out[5, :, 0] = 2.0 * same - 1.0
        return out

    out[0] = model.block64("vgg") @ q["vgg"].T
    missing = np.clip(model.block64("iod") @ (1.0 - np.sign(q["iod"])).T, 0.0, 1.0)
    out[1] = np.exp(-(missing ** 2))
    out[2] = model.block64("cade") @ q["cade"].T
    out[3] = model.block64("arpose") @ q["arpose"].T
    out[4] = ratings[:, None]
    same = model.block64("gender") @ q["gender"].T  # one-hot dot
    out[5] = 2.0 * same - 1.0
    return out


def normalize(raw: np.ndarray) -> np.ndarray:
    """Normalize each detector slice into a distribution.

    The gender slice is first mapped from {-1, +1} to {0, 1}; every slice
    is then divided by its total, and slices without meaningful mass
    become uniform.
    """
    sn = np.array(raw, dtype=np.float64)
    sn[5] = 0.5 * (sn[5] + 1.0)
    size = sn[0].size
    for d in range(sn.shape[0]):
        total = sn[d].sum()
        if total < DEGENERATE_SUM:
            sn[d].fill(1.0 / size)
        else:
            sn[d] /= total
    return sn


@dataclass(frozen=True)
class SimilarityTensor:
    raw: np.ndarray         # (6, rows, queries)
    normalized: np.ndarray  # (6, rows, queries)


def score_query(model: CompositionModel, query: FeatureRecord) -> SimilarityTensor:
    raw = similarity(model, query)
    return SimilarityTensor(raw=raw, normalized=normalize(raw))


@dataclass(frozen=True)
class RankedItem:
    image_id: str
    score: float
    breakdown: dict[str, float]  # normalized per-detector similarity


def rank(model: CompositionModel, query: FeatureRecord, weights: UspWeights,
         top_k: int | None = None) -> list[RankedItem]:
    """Descending preference order; score ties break by ascending image id."""
    sn = score_query(model, query).normalized[:, :, 0]
    scores = weights.as_array() @ sn
    ids = np.array(model.ids)
    order = np.lexsort((ids, -scores))
    if top_k is not None:
        order = order[:top_k]
    return [
        RankedItem(
            image_id=str(ids[row]),
            score=float(scores[row]),
            breakdown={name: float(sn[d, row]) for d, name in enumerate(FEATURES)},
        )
        for row in order
    ]
