"""Truncated monotone / weakly monotone product bimodules.

Each generator bimodule is ``E_i = B zeta_i B``, identified with ``B (x) B``,
with pairing ``<a zeta c, b zeta e> = c^* eta_i(a^* b) e``.  A word
``(i_1, ..., i_n)`` carries the amalgamated tensor
``b_0 zeta_{i_1} b_1 ... zeta_{i_n} b_n``, stored as an array of shape
``(batch, d, d, d**(2n))``: axes 1-2 are the first factor ``b_0`` and the
last axis flattens ``b_1, ..., b_n`` in C order, two axes per factor.
The leading batch axis is 1 for ordinary vectors; moment extraction uses
it to carry matrix-unit slot arguments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

from .. import core
from ..core import CPMap
from ..errors import DimensionMismatch, SpecMismatch

MONOTONE = "monotone"
WEAKLY_MONOTONE = "weakly_monotone"
MODES = (MONOTONE, WEAKLY_MONOTONE)

Word = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class FockSpace:
    """Module data: dimension, generators ``1..K``, depth cap ``L`` and covariances."""

    d: int
    K: int
    L: int
    mode: str
    etas: tuple[CPMap, ...]

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecMismatch(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.K < 1 or self.L < 0 or self.d < 1:
            raise SpecMismatch("need d >= 1, K >= 1, L >= 0")
        etas = tuple(self.etas)
        if len(etas) != self.K:
            raise SpecMismatch(f"{self.K} generators but {len(etas)} covariance maps")
        if any(e.d != self.d for e in etas):
            raise DimensionMismatch("covariance map dimension differs from d")
        object.__setattr__(self, "etas", etas)

    @classmethod
    def uniform(cls, d: int, K: int, L: int, mode: str = WEAKLY_MONOTONE,
                eta: CPMap | None = None) -> FockSpace:
        eta = core.identity_map(d) if eta is None else eta
        return cls(d, K, L, mode, (eta,) * K)

    def eta(self, i: int) -> CPMap:
        return self.etas[i - 1]

    def allows(self, i: int, j: int) -> bool:
        """May index ``i`` stand directly left of index ``j`` in a word?"""
        return i > j if self.mode == MONOTONE else i >= j

    def is_legal(self, word: Word) -> bool:
        if len(word) > self.L or any(not 1 <= i <= self.K for i in word):
            return False
        return all(self.allows(a, b) for a, b in zip(word, word[1:]))

    def words(self, n: int) -> list[Word]:
        """All legal words of length ``n``."""
        if n > self.L:
            return []
        if self.mode == MONOTONE:
            pool = [tuple(sorted(c, reverse=True)) for c in
                    combinations_with_replacement(range(1, self.K + 1), n)]
            return [w for w in pool if len(set(w)) == n]
        return [tuple(sorted(c, reverse=True))
                for c in combinations_with_replacement(range(1, self.K + 1), n)]

    def to_json(self) -> dict:
        return {"d": self.d, "K": self.K, "L": self.L, "mode": self.mode,
                "etas": [core.cp_to_json(e) for e in self.etas]}

    @classmethod
    def from_json(cls, obj: Mapping) -> FockSpace:
        etas = tuple(core.cp_from_json(e) for e in obj["etas"])
        return cls(int(obj["d"]), int(obj["K"]), int(obj["L"]), obj["mode"], etas)


@dataclass(frozen=True, eq=False)
class GenVec:
    """Element ``sum c zeta_i c'`` of ``E_i``, stored as ``coeff[r, c, r', m]``."""

    index: int
    coeff: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=complex)
        if c.ndim != 4 or len(set(c.shape)) != 1:
            raise DimensionMismatch(f"generator coefficient must be (d, d, d, d), got {c.shape}")
        object.__setattr__(self, "coeff", c)

    @property
    def d(self) -> int:
        return self.coeff.shape[0]

    def __add__(self, other: GenVec) -> GenVec:
        if other.index != self.index:
            raise SpecMismatch("cannot add elements of different generator bimodules")
        return GenVec(self.index, self.coeff + other.coeff)

    def scale(self, s: complex) -> GenVec:
        return GenVec(self.index, s * self.coeff)

    def left(self, b: np.ndarray) -> GenVec:
        """``b . f``"""
        return GenVec(self.index, np.einsum("xr,rcpm->xcpm", b, self.coeff))

    def right(self, b: np.ndarray) -> GenVec:
        """``f . b``"""
        return GenVec(self.index, np.einsum("rcpm,my->rcpy", self.coeff, b))


def genvec(i: int, c: np.ndarray, c2: np.ndarray | None = None) -> GenVec:
    """Elementary ``c zeta_i c2`` (``c2`` defaults to the identity)."""
    c = np.asarray(c, dtype=complex)
    c2 = core.identity(c.shape[0]) if c2 is None else np.asarray(c2, dtype=complex)
    return GenVec(i, np.einsum("rc,pm->rcpm", c, c2))


def zeta(i: int, d: int) -> GenVec:
    return genvec(i, core.identity(d))


def random_genvec(i: int, d: int, rng: np.random.Generator, terms: int = 2,
                  scale: float = 1.0) -> GenVec:
    coeff = sum(np.einsum("rc,pm->rcpm", core.random_matrix(d, rng, scale),
                          core.random_matrix(d, rng)) for _ in range(terms))
    return GenVec(i, coeff)


@dataclass(frozen=True, eq=False)
class FockVec:
    """Vector of the truncated module; ``comps`` maps words to coefficient arrays."""

    space: FockSpace
    comps: Mapping[Word, np.ndarray] = field(default_factory=dict)
    batch: int = 1

    def __post_init__(self):
        d = self.space.d
        comps = {}
        for w, t in self.comps.items():
            w = tuple(w)
            if not self.space.is_legal(w):
                raise SpecMismatch(f"word {w} is not legal in {self.space.mode} mode with L={self.space.L}")
            t = np.asarray(t, dtype=complex)
            if t.shape != (self.batch, d, d, d ** (2 * len(w))):
                raise DimensionMismatch(f"component {w} has shape {t.shape}")
            comps[w] = t
        object.__setattr__(self, "comps", comps)

    # construction ---------------------------------------------------------
    @classmethod
    def vacuum(cls, space: FockSpace, b: np.ndarray | None = None) -> FockVec:
        b = core.identity(space.d) if b is None else np.asarray(b, dtype=complex)
        return cls(space, {(): b.reshape(1, space.d, space.d, 1)})

    @classmethod
    def zero(cls, space: FockSpace, batch: int = 1) -> FockVec:
        return cls(space, {}, batch)

    @classmethod
    def from_genvec(cls, space: FockSpace, f: GenVec) -> FockVec:
        d = space.d
        return cls(space, {(f.index,): f.coeff.reshape(1, d, d, d * d)})

    @classmethod
    def elementary(cls, space: FockSpace, word: Sequence[int],
                   factors: Sequence[np.ndarray]) -> FockVec:
        """``b_0 zeta_{i_1} b_1 ... zeta_{i_n} b_n`` from ``n + 1`` matrices."""
        if len(factors) != len(word) + 1:
            raise DimensionMismatch("need one more factor than letters")
        t = np.ones((), dtype=complex)
        for b in factors:
            t = np.multiply.outer(t, np.asarray(b, dtype=complex))
        d = space.d
        return cls(space, {tuple(word): t.reshape(1, d, d, d ** (2 * len(word)))})

    @classmethod
    def random(cls, space: FockSpace, rng: np.random.Generator, max_depth: int | None = None,
               words: Iterable[Word] | None = None) -> FockVec:
        d = space.d
        if words is None:
            top = space.L if max_depth is None else min(max_depth, space.L)
            words = [w for n in range(top + 1) for w in space.words(n)]
        comps = {}
        for w in words:
            shape = (1, d, d, d ** (2 * len(w)))
            comps[tuple(w)] = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        return cls(space, comps)

    # structure ------------------------------------------------------------
    @property
    def depth(self) -> int:
        """Largest word length carrying a component (-1 for the empty vector)."""
        return max((len(w) for w in self.comps), default=-1)

    def support(self, atol: float = 0.0) -> set[Word]:
        return {w for w, t in self.comps.items() if np.max(np.abs(t), initial=0.0) > atol}

    def component(self, word: Word) -> np.ndarray:
        d = self.space.d
        return self.comps.get(tuple(word), np.zeros((self.batch, d, d, d ** (2 * len(word))), dtype=complex))

    def depth0(self) -> np.ndarray:
        """The B-component: shape ``(d, d)`` or ``(batch, d, d)`` when batched."""
        t = self.component(())[..., 0]
        return t[0] if self.batch == 1 else t

    def prune(self, max_depth: int) -> FockVec:
        return FockVec(self.space, {w: t for w, t in self.comps.items() if len(w) <= max_depth}, self.batch)

    def restrict(self, words: Iterable[Word]) -> FockVec:
        keep = set(map(tuple, words))
        return FockVec(self.space, {w: t for w, t in self.comps.items() if w in keep}, self.batch)

    # linear structure -----------------------------------------------------
    def _combine(self, other: FockVec, sign: float) -> FockVec:
        if other.space is not self.space:
            raise SpecMismatch("vectors live in different modules")
        if other.batch != self.batch:
            raise DimensionMismatch("batch sizes differ")
        comps = dict(self.comps)
        for w, t in other.comps.items():
            comps[w] = comps[w] + sign * t if w in comps else sign * t
        return FockVec(self.space, comps, self.batch)

    def __add__(self, other: FockVec) -> FockVec:
        return self._combine(other, 1.0)

    def __sub__(self, other: FockVec) -> FockVec:
        return self._combine(other, -1.0)

    def scale(self, s: complex) -> FockVec:
        return FockVec(self.space, {w: s * t for w, t in self.comps.items()}, self.batch)

    def __rmul__(self, s: complex) -> FockVec:
        return self.scale(s)

    def left_mul(self, b: np.ndarray) -> FockVec:
        b = np.asarray(b, dtype=complex)
        return FockVec(self.space, {w: np.einsum("xa,Bacr->Bxcr", b, t)
                                    for w, t in self.comps.items()}, self.batch)

    def right_mul(self, b: np.ndarray) -> FockVec:
        d = self.space.d
        b = np.asarray(b, dtype=complex)
        comps = {}
        for w, t in self.comps.items():
            comps[w] = (t.reshape(self.batch, -1, d, d) @ b).reshape(t.shape)
        return FockVec(self.space, comps, self.batch)

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(t))) for t in self.comps.values()), default=0.0)

    def residual(self, other: FockVec) -> float:
        return (self - other).max_abs()


def _kraus_fold(space: FockSpace, word: Word, t: np.ndarray) -> np.ndarray:
    """Stack ``b_0 K_{s_1} b_1 ... K_{s_n} b_n`` over Kraus indices.

    Returns shape ``(batch, d, S, d)``; the semi-inner product of two
    components is ``sum_{a,s} conj(x[a,s,:]) y[a,s,:]`` in matrix form.
    """
    d = space.d
    B = t.shape[0]
    cur = t.reshape(B, d, 1, d, -1)
    for i in word:
        k = space.eta(i).kraus
        rest = cur.shape[-1] // (d * d)
        cur = cur.reshape(B, d, cur.shape[2], d, d, d, rest)
        cur = np.einsum("bascmyR,tcm->bastyR", cur, k)
        cur = cur.reshape(B, d, -1, d, rest)
    return cur[..., 0]


def inner(v: FockVec, w: FockVec) -> np.ndarray:
    """B-valued semi-inner product ``<v, w>``; conjugate-linear in ``v``."""
    if v.space is not w.space:
        raise SpecMismatch("vectors live in different modules")
    space = v.space
    d = space.d
    batch = max(v.batch, w.batch)
    out = np.zeros((batch, d, d), dtype=complex)
    for word in v.comps.keys() & w.comps.keys():
        x = _kraus_fold(space, word, v.comps[word])
        y = _kraus_fold(space, word, w.comps[word])
        out = out + np.einsum("basx,basy->bxy", x.conj(), y)
    return out[0] if batch == 1 else out


def gen_inner(space: FockSpace, f: GenVec, g: GenVec) -> np.ndarray:
    """``<f, g>`` in ``E_i`` (zero for different generators)."""
    if f.index != g.index:
        return core.zeros(space.d)
    return inner(FockVec.from_genvec(space, f), FockVec.from_genvec(space, g))
