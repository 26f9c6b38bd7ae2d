"""Interval exchange transformations and their renormalization dynamics.

Subpackages split along the mathematical structure: ``iet`` for the maps
themselves, ``rauzy`` for the combinatorics, ``induction`` for the
renormalization and its symbolic coding, ``projective`` for the Hilbert
metric, ``zippered`` for the suspended flow, ``density`` for the exact
invariant-density cone volumes, and ``experiments`` for the Monte Carlo
verification harness.
"""

from . import density, experiments, iet, induction, projective, rauzy, zippered
from .errors import BoundaryError

__version__ = "0.1.0"

__all__ = [
    "BoundaryError",
    "density",
    "experiments",
    "iet",
    "induction",
    "projective",
    "rauzy",
    "zippered",
    "__version__",
]
