"""Randomized checks of monotonic independence for operator algebras on a Fock module.

Each algebra is the non-unital B-algebra generated by its operators: its
elements are sums of words ``b_0 Y_1 b_1 ... Y_n b_n`` with ``n >= 1``.  (If
the algebras contained the unit, condition (a) with ``X_i = 1`` would demand
``Phi(A X_j X_k B) = Phi(A Phi(X_j) X_k B)`` for arbitrary ``A``, which fails
for every non-trivial example.)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import core
from .ops import FockOp, LeftMul, Product, Sum, apply, gauss, lambda_embed, vacuum_phi
from .ops import SmallOp
from .space import FockSpace, FockVec, random_genvec

TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorAlgebra:
    """An index in the ordered set together with a sampler of random elements."""

    index: int
    sample: Callable[[np.random.Generator], FockOp]
    name: str = ""


def _random_word(d: int, rng: np.random.Generator, letters: Sequence[FockOp]) -> FockOp:
    factors: list[FockOp] = [LeftMul(core.random_matrix(d, rng))]
    for y in letters:
        factors.extend([y, LeftMul(core.random_matrix(d, rng))])
    return Product(tuple(factors))


def gauss_algebra(space: FockSpace, i: int, max_degree: int = 2, terms: int = 2) -> OperatorAlgebra:
    """Random elements of the algebra generated over B by ``{G(f) : f in E_i}``."""
    def sample(rng: np.random.Generator) -> FockOp:
        words = []
        for _ in range(terms):
            deg = int(rng.integers(1, max_degree + 1))
            words.append(_random_word(space.d, rng,
                                      [gauss(random_genvec(i, space.d, rng)) for _ in range(deg)]))
        return Sum(tuple(words))
    return OperatorAlgebra(i, sample, f"G[{i}]")


def lambda_algebra(space: FockSpace, i: int) -> OperatorAlgebra:
    """Random elements ``lambda_i(A)`` (the image is already an algebra)."""
    def sample(rng: np.random.Generator) -> FockOp:
        return lambda_embed(space, i, SmallOp.random(space.d, rng))
    return OperatorAlgebra(i, sample, f"lambda[{i}]")


@dataclass
class IndependenceReport:
    trials: int
    by_condition: dict[str, float] = field(default_factory=dict)
    tol: float = TOL

    @property
    def max_violation(self) -> float:
        return max(self.by_condition.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def record(self, name: str, value: float) -> None:
        self.by_condition[name] = max(self.by_condition.get(name, 0.0), float(value))


def _phi(space: FockSpace, ops: Sequence[FockOp]) -> np.ndarray:
    return vacuum_phi(space, Product(tuple(ops)), prune=True)


def _dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b), initial=0.0))


def _chain(rng: np.random.Generator, pool: Sequence[int], decreasing: bool) -> list[int]:
    if not pool:
        return []
    n = int(rng.integers(1, len(pool) + 1))
    picked = sorted(rng.choice(np.asarray(pool), size=n, replace=False).tolist())
    return picked[::-1] if decreasing else picked


def check_monotone_independence(space: FockSpace, algebras: Sequence[OperatorAlgebra],
                                trials: int = 100, seed: int = 0, strict: bool = True,
                                tol: float = TOL) -> IndependenceReport:
    """Max violation of conditions (a), (b) and, if ``strict``, (a') over random samples.

    Trial ``t`` uses its own generator seeded by ``(seed, t)``.
    """
    report = IndependenceReport(trials, tol=tol)
    by_index = {a.index: a for a in algebras}
    idx = sorted(by_index)
    for name in ("a", "b.decreasing", "b.increasing", "b.valley") + (("a.strict",) if strict else ()):
        report.record(name, 0.0)
    if len(idx) < 2:
        return report
    d = space.d
    triples = [(i, j, k) for j in idx for i in idx for k in idx if i < j > k]
    for t in range(trials):
        rng = np.random.default_rng([seed, t])

        def x(i: int) -> FockOp:
            return by_index[i].sample(rng)

        # (a): Phi(A X_i X_j X_k B) = Phi(A X_i Phi(X_j) X_k B)
        i, j, k = triples[int(rng.integers(len(triples)))]
        xi, xj, xk = x(i), x(j), x(k)
        a = [x(idx[int(rng.integers(len(idx)))])] if rng.random() < 0.7 else []
        b = [x(idx[int(rng.integers(len(idx)))])] if rng.random() < 0.7 else []
        phij = LeftMul(_phi(space, [xj]))
        report.record("a", _dev(_phi(space, a + [xi, xj, xk] + b), _phi(space, a + [xi, phij, xk] + b)))

        # (b): ordered tails factorize
        dec = _chain(rng, idx, decreasing=True)
        xs = [x(i) for i in dec]
        report.record("b.decreasing", _dev(_phi(space, xs), _prod_phi(space, xs)))
        inc = _chain(rng, idx, decreasing=False)
        xs = [x(i) for i in inc]
        report.record("b.increasing", _dev(_phi(space, xs), _prod_phi(space, xs)))
        valley = idx[int(rng.integers(len(idx) - 1))]
        above = [i for i in idx if i > valley]
        left = _chain(rng, above, decreasing=True) if rng.random() < 0.8 else []
        right = _chain(rng, above, decreasing=False)
        xs = [x(i) for i in left] + [x(valley)] + [x(i) for i in right]
        report.record("b.valley", _dev(_phi(space, xs), _prod_phi(space, xs)))

        if strict:
            # (a'): X_i X_j X_k v = X_i Phi(X_j) X_k v on vectors within the depth budget
            lhs_op = Product((xi, xj, xk))
            room = space.L - lhs_op.raise_
            if room >= 0:
                v = FockVec.random(space, rng, max_depth=room)
                lhs = apply(lhs_op, v)
                rhs = apply(Product((xi, phij, xk)), v)
                report.record("a.strict", lhs.residual(rhs))
    return report


def _prod_phi(space: FockSpace, xs: Sequence[FockOp]) -> np.ndarray:
    out = core.identity(space.d)
    for y in xs:
        out = out @ _phi(space, [y])
    return out
