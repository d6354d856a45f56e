"""Connectedness of attractors of two-map iterated function systems.

The package approximates attractors by certified lattice covers, decides
connectedness of ``{f, g + w}`` for translations ``w``, rasterises the set
of translations with connected attractors, and probes how that set shrinks
as the dimension grows.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .connectivity import Class, Policy, Verdict, classify, epsilon_components
from .mandelbrot import ParamWindow, TileSpec, det_fastpath, sweep, tile_ifs
from .maps import AffineMap, ContractionMap, ContractionModulus, fixed_point
from .sets import AttractorApprox, BudgetExceeded, CellSet, attractor_approx, hausdorff_distance

__all__ = [
    "AffineMap",
    "AttractorApprox",
    "BudgetExceeded",
    "CellSet",
    "Class",
    "ContractionMap",
    "ContractionModulus",
    "ParamWindow",
    "Policy",
    "TileSpec",
    "Verdict",
    "attractor_approx",
    "classify",
    "det_fastpath",
    "epsilon_components",
    "fixed_point",
    "hausdorff_distance",
    "sweep",
    "tile_ifs",
]
