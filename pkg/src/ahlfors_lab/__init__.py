"""Numerical laboratory for an explicit entire curve in a ruled surface over a torus."""

import os

# the TBB layer shipped here is too old; the portable queue avoids a noisy warning
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

__version__ = "0.1.0"
