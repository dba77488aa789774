"""KP hierarchy with coefficients in a commutative Frobenius algebra.

Symbolic work is exact; soliton evaluation uses numpy Taylor jets.
"""

from .frobenius import (
    AlgebraElement,
    FrobeniusAlgebra,
    build_trn,
    build_z2_eps_mu,
    build_zn,
    check_frobenius,
    parse_algebra,
)
from .psido import PsiDO

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement",
    "FrobeniusAlgebra",
    "PsiDO",
    "build_trn",
    "build_z2_eps_mu",
    "build_zn",
    "check_frobenius",
    "parse_algebra",
]
