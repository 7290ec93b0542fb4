"""Binary soft-margin SVM trained by sequential minimal optimization.

Works on a precomputed RBF kernel matrix, which is cheap at the corpus
sizes this engine targets.  The optimizer sweeps the sample set, picks the
partner multiplier by maximum error gap, and stops when a full sweep makes
no progress (all KKT conditions hold within the tolerance).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 10_000
_STEP_EPS = 1e-12
_SV_EPS = 1e-12


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2) for all row pairs."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    sq = (
        np.sum(a * a, axis=1)[:, None]
        - 2.0 * (a @ b.T)
        + np.sum(b * b, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class BinarySvm:
    """One trained binary classifier: support vectors and dual weights."""

    support_vectors: np.ndarray  # (n_sv, d)
    dual_coef: np.ndarray        # (n_sv,), alpha_i * y_i
    bias: float
    gamma: float
    c: float
    # Full training multipliers, kept for KKT diagnostics; not persisted.
    train_alphas: np.ndarray | None = None

    def decision(self, x: np.ndarray) -> np.ndarray:
        """Signed distance values for rows of x."""
        k = rbf_kernel(np.atleast_2d(x), self.support_vectors, self.gamma)
        return k @ self.dual_coef + self.bias


def train_binary_svm(x: np.ndarray, y: np.ndarray, c: float, gamma: float,
                     tol: float = DEFAULT_TOL,
                     max_passes: int = DEFAULT_MAX_PASSES) -> BinarySvm:
    """SMO on labels y in {-1, +1}; returns the fitted classifier.

    Each iteration solves the two-multiplier subproblem for the maximal
    violating pair; optimization stops when the violation gap drops below
    the tolerance, which bounds every sample's KKT slack by tol/2 around
    the recovered bias.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot train on an empty sample set")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be -1 or +1")

    kernel = rbf_kernel(x, x, gamma)
    alphas = np.zeros(n)
    # f[i] = sum_j alpha_j y_j K(i, j), the bias-free decision values.
    f = np.zeros(n)

    def take_step(i: int, j: int) -> bool:
        nonlocal f
        if i == j:
            return False
        a_i, a_j = alphas[i], alphas[j]
        y_i, y_j = y[i], y[j]
        if y_i != y_j:
            low, high = max(0.0, a_j - a_i), min(c, c + a_j - a_i)
        else:
            low, high = max(0.0, a_i + a_j - c), min(c, a_i + a_j)
        if high - low < _STEP_EPS:
            return False
        eta = 2.0 * kernel[i, j] - kernel[i, i] - kernel[j, j]
        if eta >= -_STEP_EPS:
            return False
        e_i, e_j = f[i] - y_i, f[j] - y_j
        a_j_new = np.clip(a_j - y_j * (e_i - e_j) / eta, low, high)
        # Relative minimum-progress criterion; absolute cutoffs let the
        # pair oscillate in microscopic steps forever.
        if abs(a_j_new - a_j) < 1e-12 * (a_j_new + a_j + 1e-12):
            return False
        a_i_new = a_i + y_i * y_j * (a_j - a_j_new)
        f += y_i * (a_i_new - a_i) * kernel[i] + y_j * (a_j_new - a_j) * kernel[j]
        alphas[i], alphas[j] = a_i_new, a_j_new
        return True

    max_steps = max_passes * max(n, 1)
    for _ in range(max_steps):
        # Violation measure per sample: -y * gradient of the dual.
        v = y - f
        up = ((y > 0) & (alphas < c - _SV_EPS)) | ((y < 0) & (alphas > _SV_EPS))
        low_set = ((y < 0) & (alphas < c - _SV_EPS)) | ((y > 0) & (alphas > _SV_EPS))
        if not up.any() or not low_set.any():
            break
        up_idx = np.nonzero(up)[0]
        low_idx = np.nonzero(low_set)[0]
        i = int(up_idx[np.argmax(v[up_idx])])
        j = int(low_idx[np.argmin(v[low_idx])])
        if v[i] - v[j] <= tol:
            break
        if not take_step(i, j):
            # The top pair is blocked; try the next most violating partners.
            stepped = False
            for j_alt in low_idx[np.argsort(v[low_idx])]:
                if take_step(i, int(j_alt)):
                    stepped = True
                    break
            if not stepped:
                for i_alt in up_idx[np.argsort(-v[up_idx])]:
                    if take_step(int(i_alt), j):
                        stepped = True
                        break
            if not stepped:
                break

    # Bias from the converged multipliers: free support vectors pin it
    # exactly; otherwise take the midpoint of the feasible interval the
    # bound constraints leave open.
    free = (alphas > _SV_EPS) & (alphas < c - _SV_EPS)
    if free.any():
        bias = float(np.mean(y[free] - f[free]))
    else:
        lower = [y[i] - f[i] for i in range(n)
                 if (alphas[i] <= _SV_EPS and y[i] > 0)
                 or (alphas[i] >= c - _SV_EPS and y[i] < 0)]
        upper = [y[i] - f[i] for i in range(n)
                 if (alphas[i] >= c - _SV_EPS and y[i] > 0)
                 or (alphas[i] <= _SV_EPS and y[i] < 0)]
        if lower and upper:
            bias = 0.5 * (max(lower) + min(upper))
        else:
            bias = 0.0

    sv = alphas > _SV_EPS
    return BinarySvm(
        support_vectors=x[sv].copy(),
        dual_coef=(alphas * y)[sv].copy(),
        bias=float(bias),
        gamma=gamma,
        c=c,
        train_alphas=alphas,
    )


def kkt_violation(model: BinarySvm, x: np.ndarray, y: np.ndarray) -> float:
    """Largest KKT violation of the trained model over its training set.

    Margin-side samples must satisfy y*f >= 1, bound support vectors
    y*f <= 1, and free support vectors y*f = 1; the return value is the
    worst slack against those conditions (0 when all hold exactly).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margins = y * model.decision(x)
    alphas = model.train_alphas
    if alphas is None:
        raise ValueError("model carries no training multipliers")
    worst = 0.0
    for a, m in zip(alphas, margins):
        if a <= _SV_EPS:
            worst = max(worst, 1.0 - m)
        elif a >= model.c - _SV_EPS:
            worst = max(worst, m - 1.0)
        else:
            worst = max(worst, abs(m - 1.0))
    return max(worst, 0.0)
