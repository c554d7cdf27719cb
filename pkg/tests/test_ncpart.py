from __future__ import annotations

from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monopro import core, ncpart
from monopro.errors import CrossingPartition, OddSize, SizeLimit, SpecMismatch
from monopro.moments import MomentSpec


def catalan(n):
    return comb(2 * n, n) // (n + 1)


def all_set_partitions(m):
    """Restricted growth strings -> every set partition of 1..m."""
    out = []

    def rec(prefix, top):
        if len(prefix) == m:
            blocks = {}
            for pos, lab in enumerate(prefix, start=1):
                blocks.setdefault(lab, []).append(pos)
            out.append(ncpart.make_partition(blocks.values()))
            return
        for lab in range(top + 2):
            rec(prefix + [lab], max(top, lab))

    rec([], -1)
    return out


@pytest.mark.parametrize("m", range(1, 8))
def test_enum_nc_matches_bruteforce(m):
    brute = sorted(p for p in all_set_partitions(m) if ncpart.is_noncrossing(p))
    assert list(ncpart.enum_nc(m)) == brute
    assert len(brute) == catalan(m)


@pytest.mark.parametrize("k", range(1, 6))
def test_enum_pairings(k):
    pp = ncpart.enum_pairings(2 * k)
    assert len(pp) == catalan(k)
    assert set(pp) == {p for p in ncpart.enum_nc(2 * k) if ncpart.is_pairing(p)}


def test_crossing_detection():
    assert not ncpart.is_noncrossing(((1, 3), (2, 4)))
    assert ncpart.is_noncrossing(((1, 4), (2, 3)))


@pytest.mark.parametrize("config,expected", [
    ((5, 5, 5), ((1, 2, 3),)),
    ((1, 2, 1), ((1, 3), (2,))),
    ((2, 1, 2), ((1,), (2,), (3,))),
    ((1, 2, 2, 1), ((1, 4), (2, 3))),
    ((1, 1, 2, 2), ((1, 2), (3, 4))),
    ((1, 1, 1, 1), ((1, 2, 3, 4),)),
])
def test_nc_of_examples(config, expected):
    assert ncpart.nc_of(config) == expected


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=8))
def test_nc_of_is_noncrossing(config):
    gamma = ncpart.nc_of(config)
    assert ncpart.is_noncrossing(gamma)
    # every block carries a single value
    assert all(len({config[p - 1] for p in b}) == 1 for b in gamma)


@pytest.mark.parametrize("m", range(1, 7))
def test_canonical_config_is_admissible(m):
    for gamma in ncpart.enum_nc(m):
        cfg = ncpart.canonical_config(gamma)
        assert ncpart.nc_of(cfg) == gamma
        assert len(set(cfg)) == len(gamma)


@pytest.mark.parametrize("m,N", [(3, 3), (4, 3), (4, 4), (5, 3)])
def test_counts_match_full_configuration_scan(m, N):
    scan = ncpart.scan_configs(m, N)
    assert sum(scan.values()) == N ** m
    for gamma in ncpart.enum_nc(m):
        for k in range(1, N + 1):
            assert scan.get((gamma, k), 0) == ncpart.admissible_count(gamma, N, k)


def test_scan_is_thread_independent():
    assert ncpart.scan_configs(4, 3, threads=1) == ncpart.scan_configs(4, 3, threads=3)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_binomial_identity_small(m):
    for gamma in ncpart.enum_nc(m):
        for N in range(1, 6):
            for k in range(1, len(gamma) + 1):
                brute = ncpart.admissible_count_bruteforce(gamma, N, k)
                assert brute == comb(N, k) * ncpart.admissible_count_bruteforce(gamma, k, k)


def test_admissible_count_examples():
    assert ncpart.admissible_count(((1, 4), (2, 3)), 2, 2) == 1
    assert ncpart.admissible_count(((1, 2), (3, 4)), 2, 2) == 2
    assert ncpart.admissible_count(((1, 2, 3, 4),), 2) == 2


@pytest.mark.parametrize("k", range(1, 5))
def test_arcsine_sum_rule(k):
    total = sum(ncpart.admissible_count(g, k, k) for g in ncpart.enum_pairings(2 * k))
    assert total == ncpart.double_factorial(2 * k - 1)


# -- values ---------------------------------------------------------------------------------------

def test_pair_value_order_independent():
    rng = np.random.default_rng(0)
    eta = core.random_cp(2, rng)
    for gamma in ncpart.enum_pairings(6):
        b = [core.random_matrix(2, rng) for _ in range(5)]
        ref = ncpart.pair_value(gamma, b, eta)
        for s in range(5):
            assert np.allclose(ncpart.pair_value(gamma, b, eta, rng=np.random.default_rng(s)), ref)


def test_pair_value_examples():
    rng = np.random.default_rng(1)
    eta = core.random_cp(2, rng)
    b1, b2, b3 = (core.random_matrix(2, rng) for _ in range(3))
    assert np.allclose(ncpart.pair_value(((1, 2), (3, 4)), [b1, b2, b3], eta), eta(b1) @ b2 @ eta(b3))
    assert np.allclose(ncpart.pair_value(((1, 4), (2, 3)), [b1, b2, b3], eta), eta(b1 @ eta(b2) @ b3))


def test_pair_value_errors():
    eta = core.identity_map(1)
    one = [np.eye(1)] * 3
    with pytest.raises(CrossingPartition):
        ncpart.pair_value(((1, 3), (2, 4)), one, eta)
    with pytest.raises(SpecMismatch):
        ncpart.pair_value(((1, 2, 3, 4),), one, eta)
    with pytest.raises(SpecMismatch):
        ncpart.pair_value(((1, 2), (3, 4)), one[:2], eta)


@pytest.mark.parametrize("m", [2, 4, 6])
def test_pair_value_matches_fock(m):
    rng = np.random.default_rng(m)
    eta = core.random_cp(2, rng)
    for gamma in ncpart.enum_pairings(m):
        b = [core.random_matrix(2, rng) for _ in range(m - 1)]
        assert np.allclose(ncpart.pair_value(gamma, b, eta), ncpart.value_via_fock(gamma, b, eta), atol=1e-10)


def test_value_independent_of_admissible_config():
    rng = np.random.default_rng(3)
    eta = core.random_cp(2, rng)
    gamma = ((1, 2), (3, 6), (4, 5))
    b = [core.random_matrix(2, rng) for _ in range(5)]
    configs = [c for c in product(range(1, 4), repeat=6) if ncpart.nc_of(c) == gamma]
    assert len(configs) > 1
    ref = ncpart.value_via_fock(gamma, b, eta)
    for c in configs:
        assert np.allclose(ncpart.value_via_fock(gamma, b, eta, config=c), ref, atol=1e-10)
    with pytest.raises(SpecMismatch):
        ncpart.value_via_fock(gamma, b, eta, config=(1, 1, 1, 1, 1, 1))


@pytest.mark.parametrize("m", [3, 4, 5])
def test_block_value_matches_fock_for_all_partitions(m):
    rng = np.random.default_rng(10 + m)
    eta = core.random_cp(2, rng)
    spec = ncpart.semicircle_moments(eta, m)
    for gamma in ncpart.enum_nc(m):
        b = [core.random_matrix(2, rng) for _ in range(m - 1)]
        assert np.allclose(ncpart.block_value(gamma, b, spec), ncpart.value_via_fock(gamma, b, eta), atol=1e-10)


def test_singleton_blocks_vanish_for_centered_marginals():
    eta = core.random_cp(2, np.random.default_rng(4))
    b = [np.eye(2)] * 3
    assert np.allclose(ncpart.value_via_fock(((1, 4), (2,), (3,)), b, eta), 0)


# -- central limit -----------------------------------------------------------------------------------

@pytest.mark.parametrize("m,expected", [(2, 1.0), (4, 1.5), (6, 2.5), (8, 35 / 8)])
def test_scalar_limit_moments(m, expected):
    val = ncpart.clt_limit_moment(m, None, core.identity_map(1))
    assert abs(val[0, 0] - expected) <= 1e-9
    assert abs(expected - comb(m, m // 2) / 2 ** (m // 2)) <= 1e-12


def test_odd_limit_moments_vanish():
    eta = core.random_cp(2, np.random.default_rng(5))
    b = [core.random_matrix(2, np.random.default_rng(6)) for _ in range(4)]
    assert np.allclose(ncpart.clt_limit_moment(5, b, eta), 0)


def test_finite_n_scalar_example():
    val = ncpart.finite_n_moment(4, 2, None, core.identity_map(1))
    assert abs(val[0, 0] - 7 / 4) <= 1e-12


def test_finite_n_single_variable():
    eta = core.random_cp(2, np.random.default_rng(7))
    spec = ncpart.semicircle_moments(eta, 4)
    b = [core.random_matrix(2, np.random.default_rng(8)) for _ in range(3)]
    assert np.allclose(ncpart.finite_n_moment(4, 1, b, eta), spec.moment(4, b))


@pytest.mark.parametrize("m,N", [(2, 3), (4, 2), (4, 4), (5, 3), (6, 3)])
def test_finite_n_matches_fock(m, N):
    rng = np.random.default_rng(m * 10 + N)
    eta = core.random_cp(2, rng)
    b = [core.random_matrix(2, rng) for _ in range(m - 1)]
    assert np.allclose(ncpart.finite_n_moment(m, N, b, eta), ncpart.finite_n_moment_fock(m, N, b, eta), atol=1e-10)


def test_finite_n_converges_monotonically():
    eta = core.identity_map(1)
    lim = ncpart.clt_limit_moment(4, None, eta)
    res = [abs(ncpart.finite_n_moment(4, N, None, eta) - lim)[0, 0] for N in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_limit_functional_is_positive():
    rng = np.random.default_rng(9)
    eta = core.random_cp(2, rng)
    spec = MomentSpec.from_function(2, 4, lambda cs: ncpart.clt_limit_moment(len(cs) + 1, cs, eta))
    assert spec.min_gram_eigenvalue(2) >= -1e-8


def test_limit_depends_only_on_covariance():
    rng = np.random.default_rng(10)
    eta = core.random_cp(2, rng)
    b = [core.random_matrix(2, rng) for _ in range(3)]
    # the four-point limit: (1/2!)(V_disjoint * 2 + V_nested * 1) = V_disjoint + V_nested / 2
    expected = eta(b[0]) @ b[1] @ eta(b[2]) + 0.5 * eta(b[0] @ eta(b[1]) @ b[2])
    assert np.allclose(ncpart.clt_limit_moment(4, b, eta), expected)


def test_size_errors():
    eta = core.identity_map(1)
    with pytest.raises(SizeLimit):
        ncpart.clt_limit_moment(12, None, eta)
    with pytest.raises(OddSize):
        ncpart.enum_pairings(5)
    with pytest.raises(SizeLimit):
        ncpart.enum_nc(20)
    with pytest.raises(SpecMismatch):
        ncpart.clt_limit_moment(4, [np.eye(1)], eta)
