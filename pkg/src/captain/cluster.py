"""K-means over pose vectors, fuzzy memberships, and the elbow scan."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, KTooLarge

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 200
DEFAULT_FUZZINESS = 2.0
_COINCIDENT = 1e-12


@dataclass(frozen=True)
class PoseClusters:
    centers: np.ndarray       # (k, d)
    assignments: np.ndarray   # (n,)
    distortion: float         # sum of squared distances to assigned centers
    fuzziness: float
    # Distortion after each Lloyd iteration of the winning restart.
    history: tuple[float, ...] = ()


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * (x @ centers.T)
        + np.sum(centers * centers, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = int(rng.choice(n, p=probs))
        else:
            # All remaining mass sits on already-chosen points (duplicates).
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(remaining[0]) if remaining.size else int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return x[chosen].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray,
           max_iter: int = DEFAULT_MAX_ITER) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    k = centers.shape[0]
    assign = np.full(x.shape[0], -1)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _sq_dists(x, centers)
        new_assign = np.argmin(d2, axis=1)
        # Re-seed any emptied cluster at the point farthest from its center.
        for c in range(k):
            if not (new_assign == c).any():
                farthest = int(np.argmax(d2[np.arange(len(x)), new_assign]))
                centers[c] = x[farthest]
                d2[:, c] = np.sum((x - centers[c]) ** 2, axis=1)
                new_assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), new_assign].sum()))
        if (new_assign == assign).all():
            break
        assign = new_assign
        for c in range(k):
            members = x[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    d2 = _sq_dists(x, centers)
    assign = np.argmin(d2, axis=1)
    distortion = float(d2[np.arange(len(x)), assign].sum())
    history.append(distortion)
    return centers, assign, distortion, history


def kmeans(x: np.ndarray, k: int, restarts: int = DEFAULT_RESTARTS,
           seed: int = 0, max_iter: int = DEFAULT_MAX_ITER,
           fuzziness: float = DEFAULT_FUZZINESS) -> PoseClusters:
    """Best-of-restarts Lloyd clustering, deterministic for a given seed."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInput("kmeans needs a non-empty 2D sample matrix")
    if not 1 <= k <= x.shape[0]:
        raise KTooLarge(f"k must lie in 1..{x.shape[0]}, got {k}")
    best = None
    streams = np.random.SeedSequence(seed).spawn(restarts)
    for stream in streams:
        rng = np.random.default_rng(stream)
        centers = _kmeanspp_init(x, k, rng)
        centers, assign, distortion, history = _lloyd(x, centers, max_iter)
        if best is None or distortion < best.distortion:
            best = PoseClusters(centers=centers, assignments=assign,
                                distortion=distortion, fuzziness=fuzziness,
                                history=tuple(history))
    return best


def fuzzy_membership(x: np.ndarray, centers: np.ndarray,
                     m: float = DEFAULT_FUZZINESS) -> np.ndarray:
    """Degree of membership of one sample in each cluster (sums to one).

    Standard fuzzy weighting by inverse distance ratios; a sample sitting
    on a center belongs fully to it.
    """
    if m <= 1.0:
        raise ValueError(f"fuzziness must exceed 1, got {m}")
    centers = np.atleast_2d(centers)
    d = np.linalg.norm(centers - np.asarray(x, dtype=np.float64)[None, :], axis=1)
    hit = d < _COINCIDENT
    if hit.any():
        q = np.zeros(len(centers))
        q[int(np.argmax(hit))] = 1.0
        return q
    w = d ** (-2.0 / (m - 1.0))
    return w / w.sum()


@dataclass(frozen=True)
class ElbowResult:
    distortions: tuple[tuple[int, float], ...]  # (k, distortion)
    deltas: tuple[float, ...]                   # first differences


def elbow_scan(x: np.ndarray, k_max: int, restarts: int = DEFAULT_RESTARTS,
               seed: int = 0) -> ElbowResult:
    """Distortions for k = 1..k_max with best-of-restarts at each k.

    Besides the fresh restarts, each k also tries the previous best
    centers plus the farthest point, which keeps the curve non-increasing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInput("elbow scan needs a non-empty 2D sample matrix")
    if k_max > x.shape[0]:
        raise KTooLarge(f"k_max must not exceed the sample count {x.shape[0]}")
    pairs = []
    prev_centers = None
    for k in range(1, k_max + 1):
        result = kmeans(x, k, restarts=restarts, seed=seed)
        if prev_centers is not None:
            d2 = _sq_dists(x, prev_centers).min(axis=1)
            seeded = np.vstack([prev_centers, x[int(np.argmax(d2))]])
            centers, assign, distortion, history = _lloyd(x, seeded.copy())
            if distortion < result.distortion:
                result = PoseClusters(centers=centers, assignments=assign,
                                      distortion=distortion,
                                      fuzziness=result.fuzziness,
                                      history=tuple(history))
        pairs.append((k, result.distortion))
        prev_centers = result.centers
    deltas = tuple(pairs[i][1] - pairs[i - 1][1] for i in range(1, len(pairs)))
    return ElbowResult(distortions=tuple(pairs), deltas=deltas)
