"""B-valued moment data of a single generator.

Anything that can evaluate ``Phi(c_0 x c_1 x ... x c_n)`` for coefficient
lists ``[c_0, ..., c_n]`` is an *element handle*: it exposes ``d``,
``max_order`` and ``phi_word(coeffs)``.  :class:`MomentSpec` is the concrete,
tabulated handle: ``maps[n-1]`` is the kernel (see :mod:`monopro.mfs`) of
the ``(n-1)``-linear moment map ``m_n(c_1..c_{n-1}) = Phi(x c_1 x ... c_{n-1} x)``,
and B-bilinearity gives ``Phi(c_0 x ... x c_n) = c_0 m_n(c_1..c_{n-1}) c_n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from . import core
from .errors import DimensionMismatch, OrderExceeded
from .mfs import mm_eval, mm_from_matrix, mm_matrix


class ElementHandle(Protocol):
    d: int

    @property
    def max_order(self) -> int: ...

    def phi_word(self, coeffs: Sequence[np.ndarray]) -> np.ndarray: ...


def basis_kernel(d: int, n_slots: int, fn: Callable[[list[np.ndarray]], np.ndarray]) -> np.ndarray:
    """Kernel of a multilinear map known only through evaluation on matrix units."""
    D = d * d
    units = [core.unvec(np.eye(D)[a], d) for a in range(D)]
    out = np.zeros((d, d) + (D,) * n_slots, dtype=complex)
    for idx in product(range(D), repeat=n_slots):
        out[(slice(None), slice(None)) + idx] = fn([units[a] for a in idx])
    return out


@dataclass(frozen=True, eq=False)
class MomentSpec:
    """Tabulated moments ``m_1, ..., m_N`` of one generator."""

    d: int
    maps: tuple[np.ndarray, ...]

    def __post_init__(self):
        d = self.d
        maps = tuple(np.asarray(m, dtype=complex) for m in self.maps)
        for n, m in enumerate(maps, start=1):
            if m.shape != (d, d) + (d * d,) * (n - 1):
                raise DimensionMismatch(f"moment map of order {n} has shape {m.shape}")
        object.__setattr__(self, "maps", maps)

    @property
    def max_order(self) -> int:
        return len(self.maps)

    def moment(self, n: int, cs: Sequence[np.ndarray] = ()) -> np.ndarray:
        """``m_n(c_1..c_{n-1})``; ``m_0`` is the identity."""
        if n == 0:
            return core.identity(self.d)
        if n > self.max_order:
            raise OrderExceeded(f"moment of order {n} requested, spec has {self.max_order}")
        return mm_eval(self.maps[n - 1], cs)

    def phi_word(self, coeffs: Sequence[np.ndarray]) -> np.ndarray:
        n = len(coeffs) - 1
        if n < 0:
            raise DimensionMismatch("a word needs at least one coefficient")
        if n == 0:
            return np.asarray(coeffs[0], dtype=complex)
        return coeffs[0] @ self.moment(n, coeffs[1:-1]) @ coeffs[-1]

    def truncate(self, order: int) -> MomentSpec:
        return MomentSpec(self.d, self.maps[:order])

    # constructors ------------------------------------------------------------
    @classmethod
    def zero(cls, d: int, max_order: int) -> MomentSpec:
        """All moments vanish: the expectation onto the B-part."""
        return cls(d, tuple(np.zeros((d, d) + (d * d,) * n, dtype=complex) for n in range(max_order)))

    @classmethod
    def deterministic(cls, beta: np.ndarray, max_order: int) -> MomentSpec:
        """The generator equals ``beta`` in B."""
        beta = np.asarray(beta, dtype=complex)
        d = beta.shape[0]

        def word(cs):
            out = beta
            for c in cs:
                out = out @ c @ beta
            return out
        return cls.from_function(d, max_order, word)

    @classmethod
    def from_function(cls, d: int, max_order: int,
                      fn: Callable[[list[np.ndarray]], np.ndarray]) -> MomentSpec:
        """Tabulate ``fn(cs) = m_{len(cs)+1}(cs)`` for orders ``1..max_order``."""
        return cls(d, tuple(basis_kernel(d, n - 1, fn) for n in range(1, max_order + 1)))

    @classmethod
    def from_handle(cls, handle: ElementHandle, max_order: int | None = None) -> MomentSpec:
        order = handle.max_order if max_order is None else max_order
        eye = core.identity(handle.d)
        return cls.from_function(handle.d, order, lambda cs: handle.phi_word([eye, *cs, eye]))

    # checks ------------------------------------------------------------------
    def hermitian_residual(self, rng: np.random.Generator, trials: int = 20) -> float:
        """Max of ``|Phi(w^*) - Phi(w)^*|`` over random words (generator selfadjoint)."""
        worst = 0.0
        for _ in range(trials):
            n = int(rng.integers(1, self.max_order + 1))
            cs = [core.random_matrix(self.d, rng) for _ in range(n + 1)]
            lhs = self.phi_word([core.adjoint(c) for c in reversed(cs)])
            worst = max(worst, float(np.max(np.abs(lhs - core.adjoint(self.phi_word(cs))))))
        return worst

    def gram(self, degree: int) -> np.ndarray:
        """Block Gram matrix ``[Phi(w_i^* w_j)]`` over words ``E_{a_0} x E_{a_1} x ... x`` of degree <= ``degree``."""
        if 2 * degree > self.max_order:
            raise OrderExceeded(f"degree {degree} Gram needs moments of order {2 * degree}")
        d = self.d
        units = [core.unvec(np.eye(d * d)[a], d) for a in range(d * d)]
        words: list[list[np.ndarray]] = []
        for p in range(degree + 1):
            words.extend([list(ix) for ix in product(units, repeat=p)])
        nw = len(words)
        g = np.zeros((nw * d, nw * d), dtype=complex)
        for a, u in enumerate(words):
            ustar = [core.adjoint(c) for c in reversed(u)]
            for b, v in enumerate(words):
                if not ustar and not v:
                    coeffs = [core.identity(d)]
                elif not ustar:
                    coeffs = [*v, core.identity(d)]
                elif not v:
                    coeffs = [core.identity(d), *ustar]
                else:
                    coeffs = [core.identity(d), *ustar[:-1], ustar[-1] @ v[0], *v[1:], core.identity(d)]
                g[a * d:(a + 1) * d, b * d:(b + 1) * d] = self.phi_word(coeffs)
        return g

    def min_gram_eigenvalue(self, degree: int) -> float:
        return core.min_eigenvalue(self.gram(degree))

    def is_positive(self, degree: int | None = None, tol: float = 1e-8) -> bool:
        degree = self.max_order // 2 if degree is None else degree
        return self.min_gram_eigenvalue(degree) >= -tol

    def residual(self, other: MomentSpec) -> float:
        n = min(self.max_order, other.max_order)
        return max((float(np.max(np.abs(a - b))) for a, b in zip(self.maps[:n], other.maps[:n])),
                   default=0.0)

    # JSON --------------------------------------------------------------------
    def to_json(self) -> dict:
        maps = []
        for m in self.maps:
            mat = mm_matrix(m)
            maps.append({"shape": list(mat.shape), "re": mat.real.tolist(), "im": mat.imag.tolist()})
        return {"d": self.d, "max_order": self.max_order, "maps": maps}

    @classmethod
    def from_json(cls, obj: Mapping) -> MomentSpec:
        d = int(obj["d"])
        raw = obj["maps"]
        if "max_order" in obj and int(obj["max_order"]) != len(raw):
            raise DimensionMismatch("max_order disagrees with the number of moment maps")
        maps = []
        for n, m in enumerate(raw, start=1):
            mat = np.asarray(m["re"], dtype=float) + 1j * np.asarray(m["im"], dtype=float)
            if mat.shape != (d * d, (d * d) ** (n - 1)):
                raise DimensionMismatch(f"moment map of order {n} has matrix shape {mat.shape}")
            maps.append(mm_from_matrix(mat, d, n - 1))
        return cls(d, tuple(maps))


@dataclass(frozen=True, eq=False)
class Shifted:
    """Handle for ``X + beta`` built from a handle for ``X`` by expanding each factor."""

    base: ElementHandle
    beta: np.ndarray

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def max_order(self) -> int:
        return self.base.max_order

    def phi_word(self, coeffs: Sequence[np.ndarray]) -> np.ndarray:
        n = len(coeffs) - 1
        beta = np.asarray(self.beta, dtype=complex)
        total = np.zeros((self.d, self.d), dtype=complex)
        for choice in product((False, True), repeat=n):
            merged = [coeffs[0]]
            for keep, c in zip(choice, coeffs[1:]):
                if keep:
                    merged.append(c)
                else:
                    merged[-1] = merged[-1] @ beta @ c
            total = total + self.base.phi_word(merged)
        return total


def shifted(handle: ElementHandle, beta: np.ndarray) -> Shifted:
    return Shifted(handle, np.asarray(beta, dtype=complex))
