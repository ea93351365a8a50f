import os

# two-core CI boxes: single-threaded BLAS is faster for this workload and
# keeps timing stable; must be set before numpy loads
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
