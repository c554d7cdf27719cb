"""Algebra elements realized on a Fock module, viewed through their vacuum moments."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .. import core
from ..moments import MomentSpec
from .ops import FockOp, LeftMul, Product, Slot, depth_feasible, phi_batched, vacuum_phi
from .space import FockSpace

MAX_ORDER_CAP = 32


@dataclass(frozen=True, eq=False)
class FockElement:
    """Element handle ``X`` acting on ``space``; moments are exact vacuum values."""

    space: FockSpace
    op: FockOp

    @property
    def d(self) -> int:
        return self.space.d

    @property
    def max_order(self) -> int:
        """Largest ``n`` for which every ``Phi(c_0 X ... X c_n)`` is computable exactly."""
        n = 0
        while n < MAX_ORDER_CAP and depth_feasible(self.space, self.word_op([core.identity(self.d)] * (n + 2))):
            n += 1
        return n

    def word_op(self, coeffs: Sequence[np.ndarray]) -> FockOp:
        factors: list[FockOp] = [LeftMul(coeffs[0])]
        for c in coeffs[1:]:
            factors.extend([self.op, LeftMul(c)])
        return Product(tuple(factors))

    def phi_word(self, coeffs: Sequence[np.ndarray]) -> np.ndarray:
        if len(coeffs) == 1:
            return np.asarray(coeffs[0], dtype=complex)
        return vacuum_phi(self.space, self.word_op(coeffs), prune=True)

    def moment_kernel(self, n: int) -> np.ndarray:
        """Kernel of ``(c_1..c_{n-1}) -> Phi(X c_1 X ... c_{n-1} X)`` via one batched run."""
        d = self.d
        factors: list[FockOp] = [self.op]
        for _ in range(n - 1):
            factors.extend([Slot(), self.op])
        vals = phi_batched(self.space, Product(tuple(factors)))
        vals = vals.reshape((d * d,) * (n - 1) + (d, d))
        return np.moveaxis(vals, (-2, -1), (0, 1))

    def moments(self, max_order: int | None = None) -> MomentSpec:
        order = self.max_order if max_order is None else max_order
        return MomentSpec(self.d, tuple(self.moment_kernel(n) for n in range(1, order + 1)))


def moment_dump(space: FockSpace, words: Iterable[tuple[str, Sequence[FockOp]]]) -> str:
    """CSV with one row per named word: ``word, re_ij..., im_ij...``."""
    d = space.d
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["word"] + [f"re_{i}{j}" for i in range(d) for j in range(d)] \
        + [f"im_{i}{j}" for i in range(d) for j in range(d)]
    writer.writerow(header)
    for name, word in words:
        val = vacuum_phi(space, word, prune=True)
        writer.writerow([name] + [f"{x:.12e}" for x in val.real.ravel()]
                        + [f"{x:.12e}" for x in val.imag.ravel()])
    return buf.getvalue()
