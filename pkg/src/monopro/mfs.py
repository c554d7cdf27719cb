"""Truncated multilinear function series over B = M_d(C).

A series ``F = (F_0, F_1, ..., F_N)`` has ``F_0`` in B and ``F_n`` an
n-linear map ``B^n -> B``.  Internally ``F_n`` is an array of shape
``(d, d) + (d*d,)*n``: the first two axes are the output matrix (row, col),
and slot ``k`` is indexed by ``vec(b_k)`` (column stacking).  The exported
form (:meth:`Series.matrix`) is the ``d^2 x d^{2n}`` matrix acting on
``vec(b_1) (x) ... (x) vec(b_n)`` with slot 1 the leftmost Kronecker factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import core
from .errors import (DimensionMismatch, NonzeroConstantTerm, SingularConstantTerm,
                     SingularLinearTerm)

ATOL = 1e-10


@lru_cache(maxsize=None)
def compositions(n: int, k: int | None = None) -> tuple[tuple[int, ...], ...]:
    """All tuples of positive integers summing to ``n`` (with ``k`` parts, if given)."""
    if n == 0:
        return ((),) if k in (None, 0) else ()
    out = []
    for first in range(1, n + 1):
        if k is not None and k < 1:
            break
        for rest in compositions(n - first, None if k is None else k - 1):
            out.append((first,) + rest)
    return tuple(out)


# -- multilinear map kernels -------------------------------------------------

def to_vec_out(t: np.ndarray) -> np.ndarray:
    """Reindex the (row, col) output axes of a kernel into one vec axis."""
    d = t.shape[0]
    return np.swapaxes(t, 0, 1).reshape((d * d,) + t.shape[2:])


def from_vec_out(t: np.ndarray, d: int) -> np.ndarray:
    return np.swapaxes(t.reshape((d, d) + t.shape[1:]), 0, 1)


def mm_eval(t: np.ndarray, bs: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate a kernel on matrices ``b_1, ..., b_n``."""
    n = t.ndim - 2
    if len(bs) != n:
        raise DimensionMismatch(f"{n}-linear map evaluated on {len(bs)} arguments")
    out = t
    for b in reversed(bs):
        out = out @ core.vec(b)
    return out


def mm_product(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Kernel of ``(b_1..b_{k+l}) -> f(b_1..b_k) g(b_{k+1}..b_{k+l})``."""
    k = f.ndim - 2
    out = np.tensordot(f, g, axes=([1], [0]))
    return np.moveaxis(out, 1 + k, 1)


def mm_substitute(f: np.ndarray, gs: Sequence[np.ndarray]) -> np.ndarray:
    """Kernel of ``f(g_1(...), ..., g_k(...))`` with consecutive argument blocks."""
    if f.ndim - 2 != len(gs):
        raise DimensionMismatch("number of inner maps must match the arity of the outer map")
    out = f
    for g in gs:
        out = np.tensordot(out, to_vec_out(g), axes=([2], [0]))
    return out


def mm_matrix(t: np.ndarray) -> np.ndarray:
    d = t.shape[0]
    return to_vec_out(t).reshape(d * d, -1)


def mm_from_matrix(m: np.ndarray, d: int, n: int) -> np.ndarray:
    return from_vec_out(np.asarray(m, dtype=complex).reshape((d * d,) + (d * d,) * n), d)


def identity_kernel(d: int) -> np.ndarray:
    return from_vec_out(np.eye(d * d, dtype=complex), d)


def left_mul(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.tensordot(a, t, axes=([1], [0]))


# -- series ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Series:
    """Truncated element of Mul[[B]] with terms of degree 0..order."""

    d: int
    terms: tuple[np.ndarray, ...]

    def __post_init__(self):
        d = self.d
        terms = tuple(np.asarray(t, dtype=complex) for t in self.terms)
        for n, t in enumerate(terms):
            if t.shape != (d, d) + (d * d,) * n:
                raise DimensionMismatch(f"degree {n} term has shape {t.shape}")
        object.__setattr__(self, "terms", terms)

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def __getitem__(self, n: int) -> np.ndarray:
        return self.terms[n]

    def _check(self, other: Series) -> int:
        if not isinstance(other, Series):
            return NotImplemented
        if other.d != self.d:
            raise DimensionMismatch(f"series over M_{self.d} and M_{other.d}")
        return min(self.order, other.order)

    def truncate(self, order: int) -> Series:
        return Series(self.d, self.terms[:order + 1])

    def __add__(self, other: Series) -> Series:
        n = self._check(other)
        return Series(self.d, tuple(a + b for a, b in zip(self.terms[:n + 1], other.terms)))

    def __sub__(self, other: Series) -> Series:
        n = self._check(other)
        return Series(self.d, tuple(a - b for a, b in zip(self.terms[:n + 1], other.terms)))

    def __neg__(self) -> Series:
        return Series(self.d, tuple(-t for t in self.terms))

    def scale(self, c: complex) -> Series:
        return Series(self.d, tuple(c * t for t in self.terms))

    def __mul__(self, other: Series) -> Series:
        return series_mul(self, other)

    def evaluate(self, bs: Sequence[np.ndarray]) -> np.ndarray:
        """The degree ``len(bs)`` term evaluated on ``bs``."""
        return mm_eval(self.terms[len(bs)], bs)

    def diagonal(self, z: np.ndarray) -> np.ndarray:
        """Coefficients ``F_n(z, ..., z)``, shape ``(order+1, d, d)``."""
        return np.stack([mm_eval(t, [z] * n) for n, t in enumerate(self.terms)])

    def matrix(self, n: int) -> np.ndarray:
        return mm_matrix(self.terms[n])

    def residual(self, other: Series) -> float:
        n = self._check(other)
        return max(float(np.max(np.abs(a - b), initial=0.0))
                   for a, b in zip(self.terms[:n + 1], other.terms))

    def allclose(self, other: Series, atol: float = ATOL) -> bool:
        return self.residual(other) <= atol

    def to_json(self) -> dict:
        terms = [core.mat_to_json(self.terms[0])]
        for n in range(1, self.order + 1):
            m = self.matrix(n)
            terms.append({"shape": list(m.shape), "re": m.real.tolist(), "im": m.imag.tolist()})
        return {"d": self.d, "order": self.order, "terms": terms}

    @classmethod
    def from_json(cls, obj: dict) -> Series:
        d, order = int(obj["d"]), int(obj["order"])
        raw = obj["terms"]
        if len(raw) != order + 1:
            raise DimensionMismatch(f"order {order} series needs {order + 1} terms, got {len(raw)}")
        terms = [core.mat_from_json(raw[0])]
        for n in range(1, order + 1):
            m = np.asarray(raw[n]["re"], dtype=float) + 1j * np.asarray(raw[n]["im"], dtype=float)
            if m.shape != (d * d, (d * d) ** n):
                raise DimensionMismatch(f"degree {n} matrix has shape {m.shape}")
            terms.append(mm_from_matrix(m, d, n))
        return cls(d, tuple(terms))


def zero(d: int, order: int) -> Series:
    return Series(d, tuple(np.zeros((d, d) + (d * d,) * n, dtype=complex) for n in range(order + 1)))


def one(d: int, order: int) -> Series:
    """Multiplicative unit ``(I, 0, 0, ...)``."""
    z = zero(d, order)
    return Series(d, (core.identity(d),) + z.terms[1:])


def ident(d: int, order: int) -> Series:
    """Compositional unit ``(0, id_B, 0, ...)``."""
    z = zero(d, order)
    if order == 0:
        return z
    return Series(d, (z.terms[0], identity_kernel(d)) + z.terms[2:])


def from_terms(terms: Sequence[np.ndarray]) -> Series:
    return Series(np.asarray(terms[0]).shape[0], tuple(terms))


def random_series(d: int, order: int, rng: np.random.Generator, constant: bool = True,
                  scale: float = 1.0) -> Series:
    terms = []
    for n in range(order + 1):
        shape = (d, d) + (d * d,) * n
        t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        terms.append(scale * t / np.sqrt(2 * d ** (n + 1)))
    if not constant:
        terms[0] = np.zeros((d, d), dtype=complex)
    return Series(d, tuple(terms))


def series_add(f: Series, g: Series) -> Series:
    return f + g


def series_mul(f: Series, g: Series) -> Series:
    """Formal product ``(FG)_n = sum_k F_k(b_1..b_k) G_{n-k}(b_{k+1}..b_n)``."""
    order = f._check(g)
    terms = []
    for n in range(order + 1):
        acc = sum(mm_product(f.terms[k], g.terms[n - k]) for k in range(n + 1))
        terms.append(acc)
    return Series(f.d, tuple(terms))


def _constant_is_zero(g: Series, atol: float) -> bool:
    return float(np.max(np.abs(g.terms[0]))) <= atol


def series_compose(f: Series, g: Series, atol: float = 1e-12) -> Series:
    """Formal composition ``F o G``; requires ``G_0 = 0``."""
    order = f._check(g)
    if not _constant_is_zero(g, atol):
        raise NonzeroConstantTerm("composition needs an inner series with zero constant term")
    terms = [f.terms[0].copy()]
    for n in range(1, order + 1):
        acc = np.zeros((f.d, f.d) + (f.d * f.d,) * n, dtype=complex)
        for k in range(1, n + 1):
            for parts in compositions(n, k):
                acc = acc + mm_substitute(f.terms[k], [g.terms[p] for p in parts])
        terms.append(acc)
    return Series(f.d, tuple(terms))


def series_mul_inverse(f: Series) -> Series:
    """Multiplicative inverse; needs an invertible constant term."""
    try:
        inv0 = np.linalg.inv(f.terms[0])
    except np.linalg.LinAlgError as exc:
        raise SingularConstantTerm("constant term is not invertible") from exc
    if not np.all(np.isfinite(inv0)) or np.linalg.cond(f.terms[0]) > 1e12:
        raise SingularConstantTerm("constant term is numerically singular")
    g = [inv0]
    for n in range(1, f.order + 1):
        acc = sum(mm_product(f.terms[k], g[n - k]) for k in range(1, n + 1))
        g.append(-left_mul(inv0, acc))
    return Series(f.d, tuple(g))


def series_comp_inverse(f: Series, atol: float = 1e-12) -> Series:
    """Compositional inverse; needs ``F_0 = 0`` and ``F_1`` invertible on B."""
    if not _constant_is_zero(f, atol):
        raise NonzeroConstantTerm("compositional inverse needs a zero constant term")
    d = f.d
    if f.order == 0:
        return zero(d, 0)
    lin = mm_matrix(f.terms[1])
    if np.linalg.cond(lin) > 1e12:
        raise SingularLinearTerm("linear term is not invertible on B")
    lin_inv = np.linalg.inv(lin)
    g = [np.zeros((d, d), dtype=complex), mm_from_matrix(lin_inv, d, 1)]
    for n in range(2, f.order + 1):
        acc = np.zeros((d, d) + (d * d,) * n, dtype=complex)
        for k in range(2, n + 1):
            for parts in compositions(n, k):
                acc = acc + mm_substitute(f.terms[k], [g[p] for p in parts])
        g.append(-from_vec_out(np.tensordot(lin_inv, to_vec_out(acc), axes=([1], [0])), d))
    return Series(d, tuple(g))


LAWS = ("i", "ii", "iii", "iv.sum", "iv.product", "v", "vi", "vii", "associativity")


def _well_conditioned(d: int, order: int, rng: np.random.Generator, constant: bool) -> Series:
    """Random series whose constant (or linear) term is a perturbation of the identity."""
    f = random_series(d, order, rng, constant=constant, scale=0.5)
    terms = list(f.terms)
    if constant:
        terms[0] = core.identity(d) + terms[0]
    elif order >= 1:
        terms[1] = identity_kernel(d) + 0.3 * terms[1]
    return Series(d, tuple(terms))


def law_residuals(d: int, order: int, rng: np.random.Generator) -> dict[str, float]:
    """One random instance of each algebra law of Mul[[B]]; values are max residuals."""
    e, f, g = (random_series(d, order, rng) for _ in range(3))
    f0, g0 = (random_series(d, order, rng, constant=False) for _ in range(2))
    unit, idn = one(d, order), ident(d, order)
    out: dict[str, float] = {}
    out["i"] = max((unit * f).residual(f), (f * unit).residual(f))
    h = _well_conditioned(d, order, rng, constant=True)
    hinv = series_mul_inverse(h)
    out["ii"] = max((h * hinv).residual(unit), (hinv * h).residual(unit))
    out["iii"] = series_compose(series_compose(e, f0), g0).residual(series_compose(e, series_compose(f0, g0)))
    out["iv.sum"] = series_compose(e + f, g0).residual(series_compose(e, g0) + series_compose(f, g0))
    out["iv.product"] = series_compose(e * f, g0).residual(series_compose(e, g0) * series_compose(f, g0))
    out["v"] = max(series_compose(f, idn).residual(f), series_compose(idn, g0).residual(g0))
    k = _well_conditioned(d, order, rng, constant=False)
    kinv = series_comp_inverse(k)
    out["vi"] = max(series_compose(k, kinv).residual(idn), series_compose(kinv, k).residual(idn))
    lhs = series_mul_inverse(unit - f0)
    rhs, power = unit, unit
    for _ in range(order):
        power = power * f0
        rhs = rhs + power
    out["vii"] = lhs.residual(rhs)
    out["associativity"] = ((e * f) * g).residual(e * (f * g))
    return out


def law_suite(d: int, order: int, trials: int, seed: int = 0) -> dict[str, float]:
    """Max residual per law over ``trials`` random instances (trial ``t`` seeded by ``(seed, t)``)."""
    worst = {name: 0.0 for name in LAWS}
    for t in range(trials):
        for name, r in law_residuals(d, order, np.random.default_rng([seed, t])).items():
            worst[name] = max(worst[name], r)
    return worst
