"""Operators on the truncated product bimodules and the vacuum functional.

Operators are symbolic trees (creation, annihilation, left multiplication,
lambda-embedded small operators, sums and products) applied lazily to
:class:`FockVec` values; no module-space matrix is ever formed.

Every operator records how far it can raise and lower word depth.  The
vacuum evaluator walks a product right to left and discards components
deeper than the lowering capacity still to its left, since those can no
longer reach the vacuum.  Truncation at depth ``L`` is therefore harmless
exactly when every component it would drop is discarded anyway; anything
else raises :class:`DepthBudgetExceeded`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import core
from ..errors import DepthBudgetExceeded, DimensionMismatch, ModeError, SpecMismatch
from .space import MONOTONE, FockSpace, FockVec, GenVec

INF = math.inf


def _accumulate(comps: dict, word, t: np.ndarray) -> None:
    if word in comps:
        comps[word] = comps[word] + t
    else:
        comps[word] = t


class FockOp:
    """Base class; subclasses are frozen dataclasses."""

    raise_: int = 0
    lower: int = 0

    def act(self, v: FockVec) -> FockVec:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, v: FockVec) -> FockVec:
        return apply(self, v)

    def __mul__(self, other):
        if isinstance(other, FockOp):
            return Product((self, other))
        if np.isscalar(other):
            return Sum((self,), (complex(other),))
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Sum((self,), (complex(other),))
        return NotImplemented

    def __add__(self, other: FockOp) -> FockOp:
        return Sum((self, other))

    def __sub__(self, other: FockOp) -> FockOp:
        return Sum((self, other), (1.0, -1.0))

    def __neg__(self) -> FockOp:
        return Sum((self,), (-1.0,))


@dataclass(frozen=True, eq=False)
class Create(FockOp):
    """Creation operator ``a^*(f)``."""

    f: GenVec
    raise_ = 1
    lower = 0

    def act(self, v: FockVec) -> FockVec:
        space = v.space
        i = self.f.index
        if not 1 <= i <= space.K:
            raise SpecMismatch(f"generator index {i} outside 1..{space.K}")
        d = space.d
        comps: dict = {}
        for w, t in v.comps.items():
            if len(w) >= space.L or (w and not space.allows(i, w[0])):
                continue
            new = np.einsum("rcpm,bmkR->brcpkR", self.f.coeff, t)
            comps[(i,) + w] = new.reshape(v.batch, d, d, -1)
        return FockVec(space, comps, v.batch)


@dataclass(frozen=True, eq=False)
class Annihilate(FockOp):
    """Annihilation operator ``a(f)``."""

    f: GenVec
    raise_ = 0
    lower = 1

    def act(self, v: FockVec) -> FockVec:
        space = v.space
        i = self.f.index
        d = space.d
        s = space.eta(i).superop if 1 <= i <= space.K else None
        comps: dict = {}
        for w, t in v.comps.items():
            if not w or w[0] != i:
                continue
            t6 = t.reshape(v.batch, d, d, d, d, -1)
            new = np.einsum("abpx,plbn,Banlyr->Bxyr", self.f.coeff.conj(), s, t6)
            _accumulate(comps, w[1:], new)
        return FockVec(space, comps, v.batch)


@dataclass(frozen=True, eq=False)
class LeftMul(FockOp):
    """Left multiplication by ``b`` in B."""

    b: np.ndarray

    def act(self, v: FockVec) -> FockVec:
        return v.left_mul(self.b)


@dataclass(frozen=True, eq=False)
class Slot(FockOp):
    """Left multiplication by every matrix unit at once, along a new batch axis.

    Batch entry ``alpha * batch + B`` carries ``E_{a c}`` with ``alpha = a + d*c``
    (the vec index of ``E_{a c}``); used for moment-kernel extraction.
    """

    def act(self, v: FockVec) -> FockVec:
        d = v.space.d
        eye = core.identity(d)
        comps = {}
        for w, t in v.comps.items():
            new = np.einsum("xa,bkcr->kabxcr", eye, t)
            comps[w] = new.reshape(d * d * v.batch, d, d, t.shape[-1])
        return FockVec(v.space, comps, d * d * v.batch)


@dataclass(frozen=True, eq=False)
class SmallOp:
    """Right-B-linear operator on ``B (+) E_i`` as a ``(1+d^2) x (1+d^2)`` matrix over B.

    Basis: ``e_0 = 1`` and ``e_q = E_{kl} zeta_i`` with ``q = 1 + k + d*l``;
    ``A(e_q) = sum_p e_p A[p, q]``.  ``matrix`` has shape ``(Q, Q, d, d)``.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 4 or m.shape[2] != m.shape[3] or m.shape[0] != m.shape[1] \
                or m.shape[0] != 1 + m.shape[2] ** 2:
            raise DimensionMismatch(f"small operator must have shape (1+d^2, 1+d^2, d, d), got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[2]

    @classmethod
    def identity(cls, d: int) -> SmallOp:
        q = 1 + d * d
        return cls(np.einsum("pq,xy->pqxy", np.eye(q), np.eye(d)))

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, scale: float = 1.0) -> SmallOp:
        q = 1 + d * d
        shape = (q, q, d, d)
        m = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * scale / np.sqrt(2 * q * d)
        return cls(m)

    def __matmul__(self, other: SmallOp) -> SmallOp:
        return SmallOp(np.einsum("pqxz,qrzy->prxy", self.matrix, other.matrix))

    def vacuum_value(self) -> np.ndarray:
        """``<1, A 1>`` in ``B (+) E_i``: the B-coordinate of ``A e_0``."""
        return self.matrix[0, 0].copy()


@dataclass(frozen=True, eq=False)
class Lambda(FockOp):
    """``lambda_i(A)``: ``A`` acts on the leading ``B (+) E_i`` factor, zero on words led by ``> i``."""

    index: int
    op: SmallOp
    raise_ = 1
    lower = 1

    def act(self, v: FockVec) -> FockVec:
        space = v.space
        if space.mode != MONOTONE:
            raise ModeError("lambda embeddings act on the monotone product only")
        i, d, B = self.index, space.d, v.batch
        a = self.op.matrix
        if a.shape[2] != d:
            raise DimensionMismatch("small operator dimension differs from the module's")
        a00 = a[0, 0]
        a0e = a[0, 1:].reshape(d, d, d, d)          # (l, k, x, z)
        ae0 = a[1:, 0].reshape(d, d, d, d)          # (l', k', x, z)
        aee = a[1:, 1:].reshape(d, d, d, d, d, d)   # (l', k', l, k, x, z)
        comps: dict = {}
        for w, t in v.comps.items():
            if w and w[0] > i:
                continue
            if w and w[0] == i:
                t6 = t.reshape(B, d, d, d, d, -1)
                _accumulate(comps, w[1:], np.einsum("lkxz,bklzyR->bxyR", a0e, t6))
                e = np.einsum("LKlkxz,bklzyR->bKLxyR", aee, t6)
                _accumulate(comps, w, e.reshape(B, d, d, -1))
            else:
                _accumulate(comps, w, np.einsum("xz,bzcR->bxcR", a00, t))
                if len(w) < space.L:
                    e = np.einsum("LKxz,bzcR->bKLxcR", ae0, t)
                    _accumulate(comps, (i,) + w, e.reshape(B, d, d, -1))
        return FockVec(space, comps, B)


@dataclass(frozen=True, eq=False)
class Product(FockOp):
    """``factors[0] factors[1] ...`` (the last factor acts first)."""

    factors: tuple[FockOp, ...]

    def __post_init__(self):
        flat = []
        for f in self.factors:
            flat.extend(f.factors if isinstance(f, Product) else (f,))
        object.__setattr__(self, "factors", tuple(flat))

    @property
    def raise_(self) -> int:
        return sum(f.raise_ for f in self.factors)

    @property
    def lower(self) -> int:
        return sum(f.lower for f in self.factors)

    def act(self, v: FockVec) -> FockVec:
        for f in reversed(self.factors):
            v = f.act(v)
        return v


@dataclass(frozen=True, eq=False)
class Sum(FockOp):
    """Weighted sum of operators (weights default to 1)."""

    terms: tuple[FockOp, ...]
    weights: tuple[complex, ...] | None = None

    def __post_init__(self):
        w = (1.0,) * len(self.terms) if self.weights is None else tuple(self.weights)
        if len(w) != len(self.terms):
            raise DimensionMismatch("one weight per term")
        object.__setattr__(self, "weights", w)

    @property
    def raise_(self) -> int:
        return max((t.raise_ for t in self.terms), default=0)

    @property
    def lower(self) -> int:
        return max((t.lower for t in self.terms), default=0)

    def act(self, v: FockVec) -> FockVec:
        out = FockVec.zero(v.space, v.batch)
        for t, w in zip(self.terms, self.weights):
            out = out + t.act(v).scale(w)
        return out


# -- constructors --------------------------------------------------------------

def gauss(f: GenVec) -> FockOp:
    """``G(f) = a(f) + a^*(f)``."""
    return Sum((Annihilate(f), Create(f)))


def unit(d: int) -> LeftMul:
    return LeftMul(core.identity(d))


def lambda_embed(space: FockSpace, i: int, a: SmallOp) -> Lambda:
    if space.mode != MONOTONE:
        raise ModeError("lambda embeddings need a monotone module")
    if not 1 <= i <= space.K:
        raise SpecMismatch(f"generator index {i} outside 1..{space.K}")
    return Lambda(i, a)


def create(f: GenVec, v: FockVec) -> FockVec:
    return Create(f).act(v)


def annihilate(f: GenVec, v: FockVec) -> FockVec:
    return Annihilate(f).act(v)


def word_op(word: Sequence[FockOp] | FockOp) -> FockOp:
    if isinstance(word, FockOp):
        return word
    word = tuple(word)
    return word[0] if len(word) == 1 else Product(word)


# -- budgeted application --------------------------------------------------------

def _run(op: FockOp, v: FockVec, cap: float) -> FockVec:
    """Apply ``op`` to ``v``; afterwards only depths ``<= cap`` matter."""
    if isinstance(op, Product):
        lowers = [f.lower for f in op.factors]
        left = 0
        caps = []
        for lw in lowers:
            caps.append(cap + left)
            left += lw
        for f, c in zip(reversed(op.factors), reversed(caps)):
            v = _run(f, v, c)
        return v
    if isinstance(op, Sum):
        out = FockVec.zero(v.space, v.batch)
        for t, w in zip(op.terms, op.weights):
            out = out + _run(t, v, cap).scale(w)
        return out
    L = v.space.L
    if op.raise_ and v.depth + op.raise_ > L and cap > L:
        raise DepthBudgetExceeded(
            f"operator would create depth {v.depth + op.raise_} > L={L} on components that still matter")
    out = op.act(v)
    return out.prune(int(cap)) if cap < INF else out


def apply(op: FockOp, v: FockVec) -> FockVec:
    """Apply ``op`` exactly; raises if truncation at depth L could alter the result."""
    return _run(op, v, INF)


def vacuum_phi(space: FockSpace, word: Sequence[FockOp] | FockOp, prune: bool = False) -> np.ndarray:
    """``Phi(word) = <1, word 1>``.

    By default the total creation count of the word must not exceed ``L``.
    With ``prune=True`` longer words are accepted whenever the depth-pruned
    evaluation is still provably exact.
    """
    if isinstance(word, Sequence) and len(word) == 0:
        return core.identity(space.d)
    op = word_op(word)
    if not prune and op.raise_ > space.L:
        raise DepthBudgetExceeded(f"word can create depth {op.raise_} > L={space.L}")
    return _run(op, FockVec.vacuum(space), 0).depth0()


def phi_batched(space: FockSpace, op: FockOp) -> np.ndarray:
    """Vacuum value of a word containing :class:`Slot` factors, shape ``(batch, d, d)``."""
    out = _run(op, FockVec.vacuum(space), 0)
    d = space.d
    t = out.comps.get(())
    if t is None:
        batch = out.batch
        return np.zeros((batch, d, d), dtype=complex)
    return t[..., 0]


def _max_depth(op: FockOp, depth: int, cap: float, L: int) -> int:
    """Upper bound on the depth after ``_run``; raises where ``_run`` might."""
    if isinstance(op, Product):
        left = 0
        caps = []
        for f in op.factors:
            caps.append(cap + left)
            left += f.lower
        for f, c in zip(reversed(op.factors), reversed(caps)):
            depth = _max_depth(f, depth, c, L)
        return depth
    if isinstance(op, Sum):
        return max((_max_depth(t, depth, cap, L) for t in op.terms), default=depth)
    if op.raise_ and depth + op.raise_ > L and cap > L:
        raise DepthBudgetExceeded(f"depth {depth + op.raise_} > L={L}")
    return int(min(depth + op.raise_, L, cap))


def depth_feasible(space: FockSpace, op: FockOp) -> bool:
    """Would the pruned vacuum evaluation of ``op`` be exact for every input coefficient?"""
    try:
        _max_depth(op, 0, 0, space.L)
    except DepthBudgetExceeded:
        return False
    return True
