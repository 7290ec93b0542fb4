"""Hot kernel for the ranking path: float32-storage matvec with float64
accumulation.

BLAS offers no mixed-precision gemv, so the numpy route must first widen
the whole block to float64, doubling memory traffic on the two large
feature matrices.  When numba is importable the widening happens in
registers instead; both routes accumulate in float64 and agree to ~1e-12.
The numpy fallback is selected automatically when numba is missing.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    # fastmath only relaxes the f64 summation order (enables SIMD lanes);
    # every product is still computed and accumulated in float64.
    @njit(cache=True, fastmath=True)
    def _widen_matvec(m32, q64, out):  # pragma: no cover - compiled
        rows, cols = m32.shape
        for i in range(rows):
            acc = 0.0
            row = m32[i]
            for j in range(cols):
                acc += row[j] * q64[j]
            out[i] = acc

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - exercised where numba is absent
    _widen_matvec = None
    HAVE_COMPILED = False


def matvec64(model, name: str, q64: np.ndarray) -> np.ndarray:
    """block[name] @ q in float64, reading the float32 block directly
    when the compiled kernel is available."""
    block = model.blocks[name]
    if (
        HAVE_COMPILED
        and block.dtype == np.float32
        and block.flags.c_contiguous
        and block.shape[0] >= 1024  # JIT call overhead dominates below this
    ):
        out = np.empty(block.shape[0])
        _widen_matvec(block, np.ascontiguousarray(q64, dtype=np.float64), out)
        return out
    return model.block64(name) @ q64


def matvec64_reference(model, name: str, q64: np.ndarray) -> np.ndarray:
    """The numpy route, exposed for the kernel benchmark and tests."""
    return model.block64(name) @ q64
