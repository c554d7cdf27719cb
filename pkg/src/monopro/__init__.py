"""Operator-valued monotone probability over B = M_d(C).

Submodules:

* :mod:`monopro.core` - matrices, completely positive maps, vectorization.
* :mod:`monopro.mfs` - truncated multilinear function series (Mul[[B]]).
* :mod:`monopro.fock` - monotone and weakly monotone Fock bimodules and operators.
* :mod:`monopro.moments` - one-generator moment data (:class:`MomentSpec`).
* :mod:`monopro.transforms` - the h, kappa, rho transforms and their multilinear versions.
* :mod:`monopro.ncpart` - non-crossing partitions and the monotone central limit theorem.
* :mod:`monopro.cfree` - monotone, free and conditionally free product functionals.
"""
from __future__ import annotations

from . import cfree, core, errors, fock, mfs, moments, ncpart, transforms
from .core import CPMap
from .errors import MonoproError
from .mfs import Series
from .moments import MomentSpec

__version__ = "0.1.0"

__all__ = [
    "CPMap", "MomentSpec", "MonoproError", "Series", "cfree", "core", "errors", "fock", "mfs",
    "moments", "ncpart", "transforms", "__version__",
]
