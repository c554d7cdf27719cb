"""Creation/annihilation normal ordering for words over a single generator index.

A word in ``a(f)``, ``a^*(f)``, ``G(f)`` (all ``f`` in the same ``E_k``) and
left multiplications is expanded into ``2^n`` letter strings and rewritten with

* ``a(f) a^*(g) = <f, g>``
* ``a^*(h) b = a^*(h b)``,  ``a(h) b = a(b^* h)``
* ``b a^*(h) = a^*(b h)``,  ``b a(h) = a(h b^*)``

until every creation stands left of every annihilation.  The identities
hold on the invariant subspace spanned by words with leading index ``<= k``;
on words led by a larger index the original word vanishes while the
constant term of the normal form does not.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import core
from ..errors import SpecMismatch
from .ops import Annihilate, Create, FockOp, LeftMul, Product, Sum
from .space import FockSpace, GenVec, gen_inner

_CRE, _ANN, _MAT = "c", "a", "b"


@dataclass
class NormalForm:
    """``P = phi + sum A^*(e) + sum A(g) + sum A^*(h) A(k)``."""

    phi: np.ndarray
    creation: list[tuple[GenVec, ...]] = field(default_factory=list)
    annihilation: list[tuple[GenVec, ...]] = field(default_factory=list)
    mixed: list[tuple[tuple[GenVec, ...], tuple[GenVec, ...]]] = field(default_factory=list)

    def to_op(self) -> FockOp:
        terms: list[FockOp] = [LeftMul(self.phi)]
        for e in self.creation:
            terms.append(Product(tuple(Create(f) for f in e)))
        for g in self.annihilation:
            terms.append(Product(tuple(Annihilate(f) for f in g)))
        for h, k in self.mixed:
            terms.append(Product(tuple(Create(f) for f in h) + tuple(Annihilate(f) for f in k)))
        return Sum(tuple(terms))


def _letters(op: FockOp) -> list[list[tuple[str, object]]]:
    """Alternatives for one factor: each is a list of letters."""
    if isinstance(op, Create):
        return [[(_CRE, op.f)]]
    if isinstance(op, Annihilate):
        return [[(_ANN, op.f)]]
    if isinstance(op, LeftMul):
        return [[(_MAT, np.asarray(op.b, dtype=complex))]]
    if isinstance(op, Product):
        out = [[]]
        for f in op.factors:
            out = [a + b for a in out for b in _letters(f)]
        return out
    if isinstance(op, Sum) and all(w == 1 for w in op.weights):
        return [alt for t in op.terms for alt in _letters(t)]
    raise SpecMismatch(f"normal ordering supports creation/annihilation words only, got {type(op).__name__}")


def _absorb(word: list, pos: int, b: np.ndarray) -> bool:
    """Push the matrix ``b`` sitting at ``pos`` into a neighboring letter."""
    if pos + 1 < len(word) and word[pos + 1][0] != _MAT:
        kind, f = word[pos + 1]
        word[pos + 1] = (kind, f.left(b) if kind == _CRE else f.right(core.adjoint(b)))
    elif pos > 0 and word[pos - 1][0] != _MAT:
        kind, f = word[pos - 1]
        word[pos - 1] = (kind, f.right(b) if kind == _CRE else f.left(core.adjoint(b)))
    else:
        return False
    del word[pos]
    return True


def _reduce(space: FockSpace, word: list) -> list:
    word = list(word)
    while True:
        # merge adjacent matrices
        for p in range(len(word) - 1):
            if word[p][0] == _MAT and word[p + 1][0] == _MAT:
                word[p:p + 2] = [(_MAT, word[p][1] @ word[p + 1][1])]
                break
        else:
            for p, (kind, val) in enumerate(word):
                if kind == _MAT and len(word) > 1 and _absorb(word, p, val):
                    break
            else:
                for p in range(len(word) - 1):
                    if word[p][0] == _ANN and word[p + 1][0] == _CRE:
                        word[p:p + 2] = [(_MAT, gen_inner(space, word[p][1], word[p + 1][1]))]
                        break
                else:
                    return word


def normal_form(space: FockSpace, word: Sequence[FockOp] | FockOp) -> NormalForm:
    """Normal-ordered decomposition of a single-index creation/annihilation word."""
    op = word if isinstance(word, FockOp) else Product(tuple(word))
    alternatives = _letters(op)
    indices = {f.index for alt in alternatives for kind, f in alt if kind != _MAT}
    if len(indices) > 1:
        raise SpecMismatch(f"all letters must share one generator index, got {sorted(indices)}")
    out = NormalForm(core.zeros(space.d))
    for alt in alternatives:
        red = _reduce(space, alt)
        if not red:
            out.phi = out.phi + core.identity(space.d)
            continue
        if red[0][0] == _MAT:
            out.phi = out.phi + red[0][1]
            continue
        cre = tuple(f for kind, f in red if kind == _CRE)
        ann = tuple(f for kind, f in red if kind == _ANN)
        if cre and ann:
            out.mixed.append((cre, ann))
        elif cre:
            out.creation.append(cre)
        else:
            out.annihilation.append(ann)
    return out
