"""Pin BLAS threading before numpy loads: the performance acceptance
criteria are stated single-threaded.  Exported values can be overridden
from the environment."""
import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")
