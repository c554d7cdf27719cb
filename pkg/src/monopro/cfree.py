"""Product functionals on the free product of two one-generator B-algebras.

Each algebra ``A_j`` is generated over B by one selfadjoint letter ``x_(j)``
whose distribution is a :class:`~monopro.moments.MomentSpec`.  A :class:`Word`
``c_0 x_(t_1) c_1 ... x_(t_n) c_n`` lies in the amalgamated free product; its
maximal same-tag runs are the algebra "letters" of the product constructions.

* :func:`monotone_eval` - the monotone product ``Phi_1 |> Phi_2``: every tag-2 run
  collapses through ``Phi_2``, then ``Phi_1`` evaluates what is left.
* :func:`free_eval` - the amalgamated free product ``Psi_1 * Psi_2``.
* :func:`cfree_eval` - the conditionally free product ``Phi_1 *_(Psi_1, Psi_2) Phi_2``.
* :func:`delta_eval` - the expectation of ``A_1 = B + A_1^0`` onto its B-part, where
  ``A_1^0`` is the span of words containing at least one generator.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import core
from .errors import DimensionMismatch, NonPositiveInput, OrderExceeded, SpecMismatch, WrongAlgebra
from .moments import MomentSpec

TOL = 1e-9
PSD_TOL = 1e-8

Letter = tuple[int, tuple[np.ndarray, ...]]


@dataclass(frozen=True, eq=False)
class Word:
    """``coeffs[0] x_(tags[0]) coeffs[1] ... x_(tags[-1]) coeffs[-1]``."""

    coeffs: tuple[np.ndarray, ...]
    tags: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(np.asarray(c, dtype=complex) for c in self.coeffs)
        tags = tuple(int(t) for t in self.tags)
        if len(coeffs) != len(tags) + 1:
            raise DimensionMismatch(f"{len(tags)} letters need {len(tags) + 1} coefficients")
        if any(t not in (1, 2) for t in tags):
            raise SpecMismatch(f"tags must be 1 or 2, got {tags}")
        d = coeffs[0].shape[0]
        if any(c.shape != (d, d) for c in coeffs):
            raise DimensionMismatch("all coefficients must be d x d")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "tags", tags)

    @property
    def d(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.tags)

    @classmethod
    def constant(cls, b: np.ndarray) -> Word:
        return cls((b,), ())

    @classmethod
    def letter(cls, tag: int, d: int) -> Word:
        return cls((core.identity(d), core.identity(d)), (tag,))

    @classmethod
    def from_tags(cls, tags: Sequence[int], coeffs: Sequence[np.ndarray] | None = None, d: int = 1) -> Word:
        if coeffs is None:
            coeffs = [core.identity(d)] * (len(tags) + 1)
        return cls(tuple(coeffs), tuple(tags))

    def __mul__(self, other: Word) -> Word:
        if isinstance(other, Word):
            return Word(self.coeffs[:-1] + (self.coeffs[-1] @ other.coeffs[0],) + other.coeffs[1:],
                        self.tags + other.tags)
        return NotImplemented

    def left(self, b: np.ndarray) -> Word:
        return Word((b @ self.coeffs[0],) + self.coeffs[1:], self.tags)

    def right(self, b: np.ndarray) -> Word:
        return Word(self.coeffs[:-1] + (self.coeffs[-1] @ b,), self.tags)

    def adjoint(self) -> Word:
        """Reverse the letters and adjoint the coefficients (generators are selfadjoint)."""
        return Word(tuple(core.adjoint(c) for c in reversed(self.coeffs)), self.tags[::-1])

    def runs(self) -> tuple[np.ndarray, list[Letter]]:
        """Leading coefficient and the maximal same-tag runs.

        Each run is returned as ``(tag, (I, c_1, ..., c_end))``: the internal coefficients
        of the run followed by the coefficient after its last generator.
        """
        letters: list[Letter] = []
        for p, t in enumerate(self.tags):
            c = self.coeffs[p + 1]
            if letters and letters[-1][0] == t:
                letters[-1] = (t, letters[-1][1] + (c,))
            else:
                letters.append((t, (core.identity(self.d), c)))
        return self.coeffs[0], letters


def random_word(d: int, rng: np.random.Generator, maxlen: int, tags: Sequence[int] = (1, 2),
                minlen: int = 1, scale: float = 1.0) -> Word:
    n = int(rng.integers(minlen, maxlen + 1))
    ts = [int(rng.choice(np.asarray(tags))) for _ in range(n)]
    return Word(tuple(core.random_matrix(d, rng, scale) for _ in range(n + 1)), tuple(ts))


# -- evaluators ---------------------------------------------------------------------------

def _check_d(w: Word, *specs: MomentSpec) -> None:
    for s in specs:
        if s.d != w.d:
            raise DimensionMismatch(f"word over M_{w.d} evaluated with a spec over M_{s.d}")


def monotone_eval(w: Word, phi1: MomentSpec, phi2: MomentSpec) -> np.ndarray:
    """``(Phi_1 |> Phi_2)(w)``: collapse tag-2 runs through ``Phi_2``, then apply ``Phi_1``."""
    _check_d(w, phi1, phi2)
    lead, letters = w.runs()
    coeffs = [lead]
    for tag, lc in letters:
        if tag == 2:
            coeffs[-1] = coeffs[-1] @ phi2.phi_word(lc)
        else:
            coeffs[-1] = coeffs[-1] @ lc[0]
            coeffs.extend(lc[1:])
    return phi1.phi_word(coeffs)


def delta_eval(w: Word) -> np.ndarray:
    """B-part of a tag-1 word: the coefficient if there are no generators, else 0."""
    if any(t != 1 for t in w.tags):
        raise WrongAlgebra("delta is defined on the first algebra only")
    if w.n == 0:
        return w.coeffs[0]
    return core.zeros(w.d)


def delta_spec(d: int, max_order: int) -> MomentSpec:
    """``delta`` as a moment spec: every word containing a generator has value 0."""
    return MomentSpec.zero(d, max_order)


def _key(letters: Sequence[Letter]) -> tuple:
    return tuple((t, b"".join(c.tobytes() for c in lc)) for t, lc in letters)


class _Expander:
    """Centering expansion ``L = L° + Psi(L)`` over alternating letters, memoized per call."""

    def __init__(self, phis: dict[int, MomentSpec], psis: dict[int, MomentSpec], free: bool, d: int):
        self.phis, self.psis, self.free, self.d = phis, psis, free, d
        self.memo: dict[tuple, np.ndarray] = {}

    def value(self, letters: list[Letter]) -> np.ndarray:
        if not letters:
            return core.identity(self.d)
        key = _key(letters)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if len(letters) == 1:
            t, lc = letters[0]
            out = self.phis[t].phi_word(lc)
        else:
            out = self._expand(letters)
        self.memo[key] = out
        return out

    def _expand(self, letters: list[Letter]) -> np.ndarray:
        k = len(letters)
        psi = [self.psis[t].phi_word(lc) for t, lc in letters]
        # product of centered letters: 0 (free) or prod Phi(L°) (conditionally free)
        if self.free:
            total = core.zeros(self.d)
        else:
            total = core.identity(self.d)
            for (t, lc), p in zip(letters, psi):
                total = total @ (self.phis[t].phi_word(lc) - p)
        # L_1 ... L_k = prod L° - sum_{T nonempty} (-1)^|T| (word with Psi(L_r) for r in T)
        for size in range(1, k + 1):
            sign = -(-1) ** size
            for subset in combinations(range(k), size):
                chosen = set(subset)
                lead = core.identity(self.d)
                out: list[Letter] = []
                for r, (t, lc) in enumerate(letters):
                    if r in chosen:
                        if out:
                            pt, pc = out[-1]
                            out[-1] = (pt, pc[:-1] + (pc[-1] @ psi[r],))
                        else:
                            lead = lead @ psi[r]
                    elif out and out[-1][0] == t:
                        pt, pc = out[-1]
                        out[-1] = (t, pc[:-1] + (pc[-1] @ lc[0],) + lc[1:])
                    else:
                        out.append((t, lc))
                total = total + sign * (lead @ self.value(out))
        return total


def cfree_eval(w: Word, phi1: MomentSpec, phi2: MomentSpec,
               psi1: MomentSpec, psi2: MomentSpec) -> np.ndarray:
    """``(Phi_1 *_(Psi_1, Psi_2) Phi_2)(w)``.

    Alternating products of ``Psi``-centered letters evaluate to the product of their
    ``Phi`` values; every other term is reduced by substituting ``Psi`` values.
    """
    _check_d(w, phi1, phi2, psi1, psi2)
    lead, letters = w.runs()
    return lead @ _Expander({1: phi1, 2: phi2}, {1: psi1, 2: psi2}, False, w.d).value(letters)


def free_eval(w: Word, psi1: MomentSpec, psi2: MomentSpec) -> np.ndarray:
    """``(Psi_1 * Psi_2)(w)``: alternating products of centered letters vanish."""
    _check_d(w, psi1, psi2)
    lead, letters = w.runs()
    return lead @ _Expander({1: psi1, 2: psi2}, {1: psi1, 2: psi2}, True, w.d).value(letters)


def monotone_as_cfree(w: Word, phi1: MomentSpec, phi2: MomentSpec) -> np.ndarray:
    """``(Phi_1 *_(delta, Phi_2) Phi_2)(w)``."""
    return cfree_eval(w, phi1, phi2, delta_spec(phi1.d, phi1.max_order), phi2)


def verify_monotone_equals_cfree(phi1: MomentSpec, phi2: MomentSpec, trials: int = 500,
                                 maxlen: int = 6, seed: int = 0) -> float:
    """Max entrywise ``|monotone_eval - cfree_eval(., Phi_1, Phi_2, delta, Phi_2)|`` over random words."""
    if maxlen > min(phi1.max_order, phi2.max_order):
        raise OrderExceeded(f"maxlen {maxlen} exceeds the specs' orders")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        w = random_word(phi1.d, rng, maxlen)
        worst = max(worst, float(np.max(np.abs(monotone_eval(w, phi1, phi2) - monotone_as_cfree(w, phi1, phi2)))))
    return worst


# -- positivity -----------------------------------------------------------------------------

def check_input_positive(*specs: MomentSpec, tol: float = PSD_TOL) -> None:
    """Raise :class:`NonPositiveInput` unless every spec passes its own Gram test."""
    for s in specs:
        degree = s.max_order // 2
        if degree and s.min_gram_eigenvalue(degree) < -tol:
            raise NonPositiveInput(f"input spec fails its Gram test (min eigenvalue {s.min_gram_eigenvalue(degree):.3e})")


def gram_matrix(evaluate: Callable[[Word], np.ndarray], words: Sequence[Word]) -> np.ndarray:
    """Block matrix ``[evaluate(w_i^* w_j)]``."""
    d = words[0].d
    n = len(words)
    g = np.zeros((n * d, n * d), dtype=complex)
    for i, wi in enumerate(words):
        wis = wi.adjoint()
        for j, wj in enumerate(words):
            g[i * d:(i + 1) * d, j * d:(j + 1) * d] = evaluate(wis * wj)
    return g


def gram_min_eigenvalue(evaluate: Callable[[Word], np.ndarray], words: Sequence[Word]) -> float:
    return core.min_eigenvalue(gram_matrix(evaluate, words))


def gram_psd_check(evaluate: Callable[[Word], np.ndarray], words: Sequence[Word], tol: float = PSD_TOL,
                   inputs: Sequence[MomentSpec] = ()) -> bool:
    """PSD test of the Gram matrix; ``inputs`` are the evaluator's specs, checked first."""
    check_input_positive(*inputs, tol=tol)
    return gram_min_eigenvalue(evaluate, words) >= -tol


def mixed_gram(phi1: MomentSpec, phi2: MomentSpec, a: Sequence[Word], b: Sequence[Word]) -> np.ndarray:
    """Block matrix over tag-1 elements ``a`` and tag-2 elements ``b``.

    Quadrants: ``Phi_1(a_i^* a_j)``, ``Phi_1(a_i^*) Phi_2(b_j)``, ``Phi_2(b_i^*) Phi_1(a_j)``,
    ``Phi_2(b_i^* b_j)``.
    """
    if any(t != 1 for w in a for t in w.tags) or any(t != 2 for w in b for t in w.tags):
        raise WrongAlgebra("a must be tag-1 words and b tag-2 words")
    phi = {1: phi1, 2: phi2}

    def one(w: Word) -> np.ndarray:
        return monotone_eval(w, phi1, phi2) if w.n == 0 else phi[w.tags[0]].phi_word(w.coeffs)

    elems = [(1, w) for w in a] + [(2, w) for w in b]
    d = phi1.d
    n = len(elems)
    g = np.zeros((n * d, n * d), dtype=complex)
    for i, (ti, wi) in enumerate(elems):
        for j, (tj, wj) in enumerate(elems):
            if ti == tj:
                val = one(wi.adjoint() * wj)
            else:
                val = one(wi.adjoint()) @ one(wj)
            g[i * d:(i + 1) * d, j * d:(j + 1) * d] = val
    return g


# -- abstract independence --------------------------------------------------------------------

def _run_word(tag: int, d: int, rng: np.random.Generator, maxlen: int) -> Word:
    return random_word(d, rng, maxlen, tags=(tag,))


def check_abstract_independence(phi1: MomentSpec, phi2: MomentSpec, trials: int = 50,
                                seed: int = 0, maxlen: int = 2) -> dict[str, float]:
    """Conditions (a) and (b) for ``Phi_1 |> Phi_2``, with tag 2 as the larger index."""
    d = phi1.d
    rng = np.random.default_rng(seed)
    out = {"a": 0.0, "b.decreasing": 0.0, "b.increasing": 0.0, "b.valley": 0.0}

    def ev(w: Word) -> np.ndarray:
        return monotone_eval(w, phi1, phi2)

    def dev(x: np.ndarray, y: np.ndarray) -> float:
        return float(np.max(np.abs(x - y)))

    for _ in range(trials):
        x1, y, x1b = (_run_word(1, d, rng, maxlen), _run_word(2, d, rng, maxlen), _run_word(1, d, rng, maxlen))
        pre = random_word(d, rng, 1, minlen=0)
        post = random_word(d, rng, 1, minlen=0)
        lhs = ev(pre * x1 * y * x1b * post)
        rhs = ev(pre * x1 * Word.constant(ev(y)) * x1b * post)
        out["a"] = max(out["a"], dev(lhs, rhs))
        out["b.decreasing"] = max(out["b.decreasing"], dev(ev(y * x1), ev(y) @ ev(x1)))
        out["b.increasing"] = max(out["b.increasing"], dev(ev(x1 * y), ev(x1) @ ev(y)))
        yb = _run_word(2, d, rng, maxlen)
        out["b.valley"] = max(out["b.valley"], dev(ev(y * x1 * yb), ev(y) @ ev(x1) @ ev(yb)))
    return out


# -- positive specs from Fock realizations ----------------------------------------------------------

def positive_fock_spec(d: int, rng: np.random.Generator, max_order: int = 6, scale: float = 0.7) -> MomentSpec:
    """Moments of a random selfadjoint ``G(f) + s G(g)^2 + beta`` on a one-index Fock module."""
    from .fock import FockElement, FockSpace, LeftMul, Product, Sum, WEAKLY_MONOTONE, gauss, random_genvec

    space = FockSpace.uniform(d, 1, max_order, WEAKLY_MONOTONE, core.random_cp(d, rng, scale=scale))
    g = gauss(random_genvec(1, d, rng, scale=scale))
    op = Sum((gauss(random_genvec(1, d, rng, scale=scale)),
              Product((g, g)) * float(scale * rng.standard_normal()),
              LeftMul(scale * core.random_selfadjoint(d, rng))))
    return FockElement(space, op).moments(max_order)
