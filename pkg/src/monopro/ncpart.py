"""Non-crossing partitions, admissible configurations and the monotone central limit theorem.

A partition of ``{1..m}`` is a tuple of blocks, each a sorted tuple of
1-based positions, with blocks ordered by their minimum.  A configuration
``(i_1, ..., i_m)`` determines a non-crossing partition through
:func:`nc_of`; the configurations mapping to ``gamma`` are *admissible* for it.

For identically distributed, monotonically independent ``X_1, X_2, ...``
the value ``V(gamma, b) = Phi(X_{i_1} b_1 X_{i_2} ... b_{m-1} X_{i_m})`` is
the same for every admissible configuration, and

    Phi(S_N b_1 S_N ... b_{m-1} S_N) = sum_gamma V(gamma, b) card(a(gamma, N)),

with ``S_N = X_1 + ... + X_N``.
"""
from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from itertools import product
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

from . import core
from .core import CPMap
from .errors import CrossingPartition, OddSize, SizeLimit, SpecMismatch
from .moments import MomentSpec

Partition = tuple[tuple[int, ...], ...]
Config = tuple[int, ...]

MAX_NC = 12
MAX_PAIRINGS = 16
MAX_CLT = 10
MAX_SCAN = 2_000_000


def make_partition(blocks: Iterable[Iterable[int]]) -> Partition:
    """Canonical form: sorted blocks, ordered by minimum."""
    out = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))
    seen = [x for b in out for x in b]
    if sorted(seen) != list(range(1, len(seen) + 1)):
        raise SpecMismatch(f"blocks {out} do not partition 1..{len(seen)}")
    return out


def size(gamma: Partition) -> int:
    return sum(len(b) for b in gamma)


def is_noncrossing(gamma: Partition) -> bool:
    """No ``a < b < c < e`` with ``a, c`` in one block and ``b, e`` in another."""
    owner = {x: k for k, blk in enumerate(gamma) for x in blk}
    m = len(owner)
    for a in range(1, m + 1):
        for b in range(a + 1, m + 1):
            if owner[b] == owner[a]:
                continue
            for c in range(b + 1, m + 1):
                if owner[c] != owner[a]:
                    continue
                for e in range(c + 1, m + 1):
                    if owner[e] == owner[b]:
                        return False
    return True


def is_pairing(gamma: Partition) -> bool:
    return all(len(b) == 2 for b in gamma)


# -- enumeration ----------------------------------------------------------------------

def _nc_on(elems: tuple[int, ...]) -> list[list[tuple[int, ...]]]:
    if not elems:
        return [[]]
    first, rest = elems[0], elems[1:]
    out = []
    # choose the other members of the block of ``first``; the gaps are independent
    for mask in range(1 << len(rest)):
        chosen = [rest[k] for k in range(len(rest)) if mask >> k & 1]
        block = (first,) + tuple(chosen)
        cuts = [k for k in range(len(rest)) if mask >> k & 1]
        gaps, prev = [], 0
        for c in cuts:
            gaps.append(rest[prev:c])
            prev = c + 1
        gaps.append(rest[prev:])
        parts = [[block]]
        for g in gaps:
            parts = [p + q for p in parts for q in _nc_on(g)]
        out.extend(parts)
    return out


@lru_cache(maxsize=None)
def enum_nc(m: int) -> tuple[Partition, ...]:
    """All non-crossing partitions of ``{1..m}`` (Catalan(m) of them)."""
    if not 1 <= m <= MAX_NC:
        raise SizeLimit(f"enumeration supports 1 <= m <= {MAX_NC}")
    return tuple(sorted(make_partition(p) for p in _nc_on(tuple(range(1, m + 1)))))


def _pairings_on(elems: tuple[int, ...]) -> list[list[tuple[int, int]]]:
    if not elems:
        return [[]]
    first = elems[0]
    out = []
    for k in range(1, len(elems), 2):
        inner, outer = elems[1:k], elems[k + 1:]
        for p in _pairings_on(inner):
            for q in _pairings_on(outer):
                out.append([(first, elems[k])] + p + q)
    return out


@lru_cache(maxsize=None)
def enum_pairings(m: int) -> tuple[Partition, ...]:
    """All non-crossing pair partitions of ``{1..m}``."""
    if m % 2:
        raise OddSize("pair partitions need an even number of points")
    if not 0 <= m <= MAX_PAIRINGS:
        raise SizeLimit(f"pairing enumeration supports m <= {MAX_PAIRINGS}")
    return tuple(sorted(make_partition(p) for p in _pairings_on(tuple(range(1, m + 1)))))


# -- configurations -------------------------------------------------------------------

def nc_of(config: Sequence[int]) -> Partition:
    """The partition of a configuration: the positions holding the minimum form a block,
    and each maximal run of remaining positions between them is split recursively."""
    config = tuple(int(i) for i in config)
    if not config:
        raise SpecMismatch("configuration must be nonempty")
    blocks: list[tuple[int, ...]] = []

    def split(positions: tuple[int, ...]) -> None:
        if not positions:
            return
        low = min(config[p - 1] for p in positions)
        block = tuple(p for p in positions if config[p - 1] == low)
        blocks.append(block)
        run: list[int] = []
        for p in positions:
            if config[p - 1] == low:
                split(tuple(run))
                run = []
            else:
                run.append(p)
        split(tuple(run))

    split(tuple(range(1, len(config) + 1)))
    return make_partition(blocks)


def canonical_config(gamma: Partition) -> Config:
    """Admissible configuration labelling blocks ``1, 2, ...`` in order of their minima."""
    m = size(gamma)
    out = [0] * m
    for label, block in enumerate(gamma, start=1):
        for p in block:
            out[p - 1] = label
    return tuple(out)


def _threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    return max(1, int(os.environ.get("MONOPRO_THREADS", "1") or 1))


def _labelings(gamma: Partition, N: int) -> Counter:
    """Admissible configurations with values in ``1..N``, counted by number of distinct values."""
    if N ** len(gamma) > MAX_SCAN:
        raise SizeLimit(f"{N}^{len(gamma)} block labelings exceed the scan limit")
    m = size(gamma)
    counts: Counter = Counter()
    for labels in product(range(1, N + 1), repeat=len(gamma)):
        cfg = [0] * m
        for lab, block in zip(labels, gamma):
            for p in block:
                cfg[p - 1] = lab
        if nc_of(cfg) == gamma:
            counts[len(set(labels))] += 1
    return counts


def scan_configs(m: int, N: int, threads: int | None = None) -> Counter:
    """Brute force over all ``N^m`` configurations: counts keyed by ``(gamma, k)``.

    The scan is split by leading value across threads; merging is order-independent.
    """
    if N ** m > MAX_SCAN:
        raise SizeLimit(f"{N}^{m} configurations exceed the scan limit")

    def part(first: int) -> Counter:
        c: Counter = Counter()
        for tail in product(range(1, N + 1), repeat=m - 1):
            cfg = (first,) + tail
            c[(nc_of(cfg), len(set(cfg)))] += 1
        return c

    total: Counter = Counter()
    with ThreadPoolExecutor(_threads(threads)) as pool:
        for c in pool.map(part, range(1, N + 1)):
            total.update(c)
    return total


@lru_cache(maxsize=None)
def _exact_k(gamma: Partition, k: int) -> int:
    """``card(a(gamma, k, k))``: admissible configurations using every value of ``1..k``."""
    if k > len(gamma) or k < 1:
        return 0
    return _labelings(gamma, k)[k]


def admissible_count(gamma: Partition, N: int, k: int | None = None) -> int:
    """``card(a(gamma, N, k))``, or ``card(a(gamma, N))`` when ``k`` is None.

    Uses ``card(a(gamma, N, k)) = C(N, k) card(a(gamma, k, k))``; the exact-k counts
    are brute-forced over block labelings.
    """
    gamma = make_partition(gamma)
    if size(gamma) > MAX_CLT:
        raise SizeLimit(f"admissible counts support m <= {MAX_CLT}")
    if N < 1:
        return 0
    ks = range(1, len(gamma) + 1) if k is None else [k]
    return sum(comb(N, kk) * _exact_k(gamma, kk) for kk in ks if kk <= N)


def admissible_count_bruteforce(gamma: Partition, N: int, k: int | None = None) -> int:
    """Same count by direct scan over block labelings in ``1..N``."""
    counts = _labelings(make_partition(gamma), N)
    return sum(counts.values()) if k is None else counts.get(k, 0)


# -- values -----------------------------------------------------------------------------

def pair_value(gamma: Partition, b: Sequence[np.ndarray], eta: CPMap,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """``V(gamma, b)`` for a pairing by repeatedly collapsing adjacent pairs ``X b X -> eta(b)``.

    With ``rng`` the adjacent pair to collapse is chosen at random each step.
    """
    gamma = make_partition(gamma)
    m = size(gamma)
    if not is_pairing(gamma):
        raise SpecMismatch("pair_value needs a pair partition")
    if len(b) != m - 1:
        raise SpecMismatch(f"{m} points need {m - 1} coefficients, got {len(b)}")
    partner = {}
    for x, y in gamma:
        partner[x], partner[y] = y, x
    d = eta.d
    coeffs = [core.identity(d)] + [np.asarray(c, dtype=complex) for c in b] + [core.identity(d)]
    pos = list(range(1, m + 1))
    while pos:
        cand = [t for t in range(len(pos) - 1) if partner[pos[t]] == pos[t + 1]]
        if not cand:
            raise CrossingPartition(f"{gamma} is crossing")
        t = cand[int(rng.integers(len(cand)))] if rng is not None else cand[0]
        merged = coeffs[t] @ eta(coeffs[t + 1]) @ coeffs[t + 2]
        coeffs[t:t + 3] = [merged]
        del pos[t:t + 2]
    return coeffs[0]


def block_value(gamma: Partition, b: Sequence[np.ndarray], spec: MomentSpec) -> np.ndarray:
    """``V(gamma, b)`` for identically distributed monotone variables with moments ``spec``.

    Blocks are collapsed in decreasing order of their minima; each is contiguous
    in the reduced word when its turn comes and is replaced by its moment.
    """
    gamma = make_partition(gamma)
    if not is_noncrossing(gamma):
        raise CrossingPartition(f"{gamma} is crossing")
    m = size(gamma)
    if len(b) != m - 1:
        raise SpecMismatch(f"{m} points need {m - 1} coefficients, got {len(b)}")
    d = spec.d
    coeffs = [core.identity(d)] + [np.asarray(c, dtype=complex) for c in b] + [core.identity(d)]
    pos = list(range(1, m + 1))
    for block in reversed(gamma):
        t = pos.index(block[0])
        k = len(block)
        if tuple(pos[t:t + k]) != block:  # pragma: no cover - guaranteed by non-crossing
            raise CrossingPartition(f"block {block} is not contiguous")
        val = spec.moment(k, coeffs[t + 1:t + k])
        coeffs[t:t + k + 1] = [coeffs[t] @ val @ coeffs[t + k]]
        del pos[t:t + k]
    return coeffs[0]


def semicircle_moments(eta: CPMap, max_order: int) -> MomentSpec:
    """Moments of a centered B-Gaussian with covariance ``eta``: sums over non-crossing pairings."""
    def m(cs):
        n = len(cs) + 1
        if n % 2:
            return core.zeros(eta.d)
        return sum(pair_value(g, cs, eta) for g in enum_pairings(n))
    return MomentSpec.from_function(eta.d, max_order, m)


def value_via_fock(gamma: Partition, b: Sequence[np.ndarray], eta: CPMap,
                   config: Sequence[int] | None = None) -> np.ndarray:
    """``Phi(X_{i_1} b_1 ... X_{i_m})`` on the weakly monotone module with ``X_i = G(zeta_i)``."""
    from .fock import FockSpace, LeftMul, WEAKLY_MONOTONE, gauss, vacuum_phi, zeta

    gamma = make_partition(gamma)
    cfg = canonical_config(gamma) if config is None else tuple(config)
    if nc_of(cfg) != gamma:
        raise SpecMismatch(f"configuration {cfg} is not admissible for {gamma}")
    labels = sorted(set(cfg))
    relabel = {v: k for k, v in enumerate(labels, start=1)}
    m = len(cfg)
    space = FockSpace(eta.d, len(labels), m, WEAKLY_MONOTONE, (eta,) * len(labels))
    word = [gauss(zeta(relabel[cfg[0]], eta.d))]
    for c, i in zip(b, cfg[1:]):
        word += [LeftMul(np.asarray(c, dtype=complex)), gauss(zeta(relabel[i], eta.d))]
    return vacuum_phi(space, word)


# -- CLT ------------------------------------------------------------------------------------

def _check_b(m: int, b: Sequence[np.ndarray] | None, d: int) -> list[np.ndarray]:
    if b is None:
        return [core.identity(d)] * max(m - 1, 0)
    if len(b) != m - 1:
        raise SpecMismatch(f"moment of order {m} needs {m - 1} coefficients, got {len(b)}")
    return [np.asarray(c, dtype=complex) for c in b]


def clt_limit_moment(m: int, b: Sequence[np.ndarray] | None, eta: CPMap) -> np.ndarray:
    """``nu_m(b) = (1/(m/2)!) sum_{gamma in PP(m)} V(gamma, b) card(a(gamma, m/2, m/2))``."""
    if m > MAX_CLT:
        raise SizeLimit(f"limit moments support m <= {MAX_CLT}")
    b = _check_b(m, b, eta.d)
    if m % 2:
        return core.zeros(eta.d)
    k = m // 2
    total = core.zeros(eta.d)
    for gamma in enum_pairings(m):
        total = total + pair_value(gamma, b, eta) * admissible_count(gamma, k, k)
    return total / factorial(k)


def finite_n_moment(m: int, N: int, b: Sequence[np.ndarray] | None, eta: CPMap,
                    spec: MomentSpec | None = None) -> np.ndarray:
    """``Phi(S_N b_1 ... b_{m-1} S_N) / N^{m/2}`` by the partition expansion.

    ``spec`` gives the common distribution (default: centered B-Gaussian with covariance
    ``eta``).  Blocks of every size contribute; singletons vanish for centered marginals.
    """
    if m > MAX_CLT:
        raise SizeLimit(f"finite-N moments support m <= {MAX_CLT}")
    b = _check_b(m, b, eta.d)
    spec = semicircle_moments(eta, m) if spec is None else spec
    total = core.zeros(eta.d)
    for gamma in enum_nc(m):
        value = block_value(gamma, b, spec)
        if np.any(value):  # exact zeros (e.g. singleton blocks of centered laws) need no count
            total = total + value * admissible_count(gamma, N)
    return total / N ** (m / 2)


def finite_n_moment_fock(m: int, N: int, b: Sequence[np.ndarray] | None, eta: CPMap) -> np.ndarray:
    """Direct evaluation with ``S_N = G(zeta_1) + ... + G(zeta_N)`` on the weakly monotone module."""
    from .fock import FockSpace, LeftMul, Sum, WEAKLY_MONOTONE, gauss, vacuum_phi, zeta

    b = _check_b(m, b, eta.d)
    space = FockSpace(eta.d, N, m, WEAKLY_MONOTONE, (eta,) * N)
    s = Sum(tuple(gauss(zeta(i, eta.d)) for i in range(1, N + 1)))
    word = [s]
    for c in b:
        word += [LeftMul(c), s]
    return vacuum_phi(space, word, prune=True) / N ** (m / 2)


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out
