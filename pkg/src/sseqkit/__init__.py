"""sseqkit: exact filtration spectral sequences over prime fields.

Desk-scale engine for filtered differential graded algebras: pages and
differentials, survivor tables, matric Massey products and smash Toda
brackets, bar constructions and Koszulity certificates, plus the
truncated cobar model of the mod-2 Adams E_2 chart.
"""

from .linalg import FpMatrix, Subspace
from .complexes import Chain, ChainMap, DGAlgebra, GradedComplex
from .filtration import FilteredDGA, FiltrationQuotient

__all__ = [
    "FpMatrix",
    "Subspace",
    "Chain",
    "ChainMap",
    "DGAlgebra",
    "GradedComplex",
    "FilteredDGA",
    "FiltrationQuotient",
]
