"""Truncated monotone and weakly monotone product bimodules."""
from .element import FockElement, moment_dump
from .ops import (Annihilate, Create, FockOp, Lambda, LeftMul, Product, Slot, SmallOp, Sum,
                  annihilate, apply, create, gauss, lambda_embed, unit, vacuum_phi)
from .space import (MONOTONE, WEAKLY_MONOTONE, FockSpace, FockVec, GenVec, gen_inner, genvec,
                    inner, random_genvec, zeta)

__all__ = [
    "Annihilate", "Create", "FockElement", "FockOp", "FockSpace", "FockVec", "GenVec", "Lambda",
    "LeftMul", "MONOTONE", "Product", "Slot", "SmallOp", "Sum", "WEAKLY_MONOTONE", "annihilate",
    "apply", "create", "gauss", "gen_inner", "genvec", "inner", "lambda_embed", "moment_dump",
    "random_genvec", "unit", "vacuum_phi", "zeta",
]
