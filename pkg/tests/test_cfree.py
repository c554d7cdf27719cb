from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monopro import cfree, core
from monopro.cfree import Word
from monopro.errors import DimensionMismatch, NonPositiveInput, OrderExceeded, SpecMismatch, WrongAlgebra
from monopro.fock import LeftMul, vacuum_phi
from monopro.moments import MomentSpec
from monopro.transforms import random_instance, tabulated


@pytest.fixture(scope="module")
def specs():
    rng = np.random.default_rng(0)
    return [cfree.positive_fock_spec(2, rng) for _ in range(4)]


def _mats(d, n, rng):
    return [core.random_matrix(d, rng) for _ in range(n)]


def _dev(x, y):
    return float(np.max(np.abs(x - y)))


# -- words ------------------------------------------------------------------------------------

def test_word_runs():
    rng = np.random.default_rng(1)
    cs = _mats(2, 5, rng)
    lead, letters = Word(tuple(cs), (1, 1, 2, 1)).runs()
    assert np.array_equal(lead, cs[0])
    assert [t for t, _ in letters] == [1, 2, 1]
    assert [len(lc) for _, lc in letters] == [3, 2, 2]
    assert np.array_equal(letters[0][1][1], cs[1]) and np.array_equal(letters[0][1][2], cs[2])


def test_word_product_and_adjoint():
    rng = np.random.default_rng(2)
    u = Word(tuple(_mats(2, 2, rng)), (1,))
    v = Word(tuple(_mats(2, 3, rng)), (2, 1))
    uv = u * v
    assert uv.tags == (1, 2, 1)
    assert np.allclose(uv.coeffs[1], u.coeffs[1] @ v.coeffs[0])
    assert (uv.adjoint()).tags == (1, 2, 1)
    assert np.allclose(uv.adjoint().coeffs[0], uv.coeffs[-1].conj().T)


def test_word_errors(specs):
    with pytest.raises(DimensionMismatch):
        Word((np.eye(2),), (1,))
    with pytest.raises(SpecMismatch):
        Word((np.eye(2), np.eye(2)), (3,))
    with pytest.raises(DimensionMismatch):
        Word((np.eye(2), np.eye(3)), (1,))
    with pytest.raises(DimensionMismatch):
        cfree.monotone_eval(Word.letter(1, 1), specs[0], specs[1])


# -- monotone product ---------------------------------------------------------------------------

def test_monotone_hand_values(specs):
    p1, p2 = specs[:2]
    rng = np.random.default_rng(3)
    c0, c1, c2, c3 = _mats(2, 4, rng)
    w = Word((c0, c1, c2, c3), (1, 2, 1))
    expected = p1.phi_word([c0, c1 @ p2.moment(1) @ c2, c3])
    assert np.allclose(cfree.monotone_eval(w, p1, p2), expected)
    # a lone tag-2 run passes straight through Phi_2
    w2 = Word((c0, c1, c2), (2, 2))
    assert np.allclose(cfree.monotone_eval(w2, p1, p2), c0 @ p2.phi_word([np.eye(2), c1, c2]))
    # a tag-1 word ignores Phi_2
    w1 = Word((c0, c1, c2), (1, 1))
    assert np.allclose(cfree.monotone_eval(w1, p1, p2), p1.phi_word([c0, c1, c2]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_evaluators_are_b_bimodule_maps(seed):
    rng = np.random.default_rng(seed)
    p1, p2, q1, q2 = (cfree.positive_fock_spec(1 + seed % 2, rng, max_order=4) for _ in range(4))
    d = p1.d
    w = cfree.random_word(d, rng, 4)
    a, b = core.random_matrix(d, rng), core.random_matrix(d, rng)
    for ev in (lambda x: cfree.monotone_eval(x, p1, p2),
               lambda x: cfree.free_eval(x, q1, q2),
               lambda x: cfree.cfree_eval(x, p1, p2, q1, q2)):
        assert np.allclose(ev(w.left(a).right(b)), a @ ev(w) @ b, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_evaluators_respect_adjoint(seed):
    rng = np.random.default_rng(seed)
    p1, p2, q1, q2 = (cfree.positive_fock_spec(2, rng, max_order=4) for _ in range(4))
    w = cfree.random_word(2, rng, 4)
    for ev in (lambda x: cfree.monotone_eval(x, p1, p2),
               lambda x: cfree.free_eval(x, q1, q2),
               lambda x: cfree.cfree_eval(x, p1, p2, q1, q2)):
        assert np.allclose(ev(w.adjoint()), ev(w).conj().T, atol=1e-10)


# -- free and conditionally free products ---------------------------------------------------------

def test_free_hand_values(specs):
    q1, q2 = specs[2:]
    rng = np.random.default_rng(4)
    c0, c1, c2, c3 = _mats(2, 4, rng)
    eye = np.eye(2)
    # x_1 c_1 x_2 c_2 factors
    w = Word((c0, c1, c2), (1, 2))
    assert np.allclose(cfree.free_eval(w, q1, q2), c0 @ q1.phi_word([eye, c1]) @ q2.phi_word([eye, c2]))
    # a_1 b a_2 = a_1 E(b) a_2
    w = Word((c0, c1, c2, c3), (1, 2, 1))
    expected = c0 @ q1.phi_word([eye, c1 @ q2.phi_word([eye, c2]), c3])
    assert np.allclose(cfree.free_eval(w, q1, q2), expected)


def test_free_centered_alternating_product_vanishes(specs):
    q1, q2 = specs[2:]
    # (x_1 - Psi_1(x_1)) (x_2 - Psi_2(x_2)) expands into four words
    m1, m2 = q1.moment(1), q2.moment(1)
    eye = np.eye(2)
    total = (cfree.free_eval(Word((eye, eye, eye), (1, 2)), q1, q2)
             - cfree.free_eval(Word((eye, m2), (1,)), q1, q2)
             - m1 @ cfree.free_eval(Word((eye, eye), (2,)), q1, q2)
             + m1 @ m2)
    assert np.allclose(total, 0, atol=1e-12)


def test_cfree_scalar_hand_value():
    rng = np.random.default_rng(5)
    p1, p2, q1, q2 = (cfree.positive_fock_spec(1, rng) for _ in range(4))
    one = np.eye(1)
    w = Word((one, one, one, one), (1, 2, 1))
    # phi(a b a') = psi_2(b) phi_1(a a') + (phi_2(b) - psi_2(b)) phi_1(a) phi_1(a')
    expected = (q2.moment(1) * p1.moment(2, [one]) + (p2.moment(1) - q2.moment(1)) * p1.moment(1) ** 2)
    assert np.allclose(cfree.cfree_eval(w, p1, p2, q1, q2), expected)


@pytest.mark.parametrize("seed", range(5))
def test_cfree_with_equal_states_is_free(seed):
    rng = np.random.default_rng(seed)
    q1, q2 = cfree.positive_fock_spec(2, rng), cfree.positive_fock_spec(2, rng)
    for _ in range(20):
        w = cfree.random_word(2, rng, 6)
        assert _dev(cfree.cfree_eval(w, q1, q2, q1, q2), cfree.free_eval(w, q1, q2)) <= 1e-12


def test_free_and_monotone_differ(specs):
    p1, p2 = specs[:2]
    w = Word.from_tags((1, 2, 1, 2), d=2)
    assert _dev(cfree.free_eval(w, p1, p2), cfree.monotone_eval(w, p1, p2)) > 1e-3


def test_cfree_restricts_to_marginals(specs):
    p1, p2, q1, q2 = specs
    rng = np.random.default_rng(6)
    for tag, p in ((1, p1), (2, p2)):
        w = cfree.random_word(2, rng, 5, tags=(tag,))
        assert np.allclose(cfree.cfree_eval(w, p1, p2, q1, q2), p.phi_word(w.coeffs))


# -- delta and the monotone/c-free identity --------------------------------------------------------

def test_delta():
    b = core.random_matrix(2, np.random.default_rng(7))
    assert np.array_equal(cfree.delta_eval(Word.constant(b)), b)
    assert np.array_equal(cfree.delta_eval(Word.from_tags((1, 1), d=2)), np.zeros((2, 2)))
    with pytest.raises(WrongAlgebra):
        cfree.delta_eval(Word.letter(2, 2))
    spec = cfree.delta_spec(2, 4)
    w = Word.from_tags((1, 1, 1), d=2)
    assert np.array_equal(spec.phi_word(w.coeffs), cfree.delta_eval(w))


@pytest.mark.parametrize("d", [1, 2])
def test_monotone_equals_cfree(d):
    rng = np.random.default_rng(8 + d)
    p1, p2 = cfree.positive_fock_spec(d, rng), cfree.positive_fock_spec(d, rng)
    assert cfree.verify_monotone_equals_cfree(p1, p2, trials=200, maxlen=6, seed=d) <= 1e-10


def test_monotone_equals_cfree_rejects_long_words(specs):
    with pytest.raises(OrderExceeded):
        cfree.verify_monotone_equals_cfree(specs[0], specs[1], maxlen=7)


def test_cfree_with_wrong_psi_is_not_monotone(specs):
    p1, p2 = specs[:2]
    w = Word.from_tags((2, 1, 2), d=2)
    # replacing delta by Phi_1 changes the answer
    assert _dev(cfree.cfree_eval(w, p1, p2, p1, p2), cfree.monotone_eval(w, p1, p2)) > 1e-3


# -- positivity -----------------------------------------------------------------------------------

def _words(rng, n=6, maxlen=2):
    return [Word.constant(np.eye(2))] + [cfree.random_word(2, rng, maxlen) for _ in range(n)]


@pytest.mark.parametrize("seed", range(3))
def test_gram_psd_for_all_products(seed):
    rng = np.random.default_rng(seed)
    p1, p2, q1, q2 = (cfree.positive_fock_spec(2, rng) for _ in range(4))
    words = _words(rng)
    assert cfree.gram_psd_check(lambda w: cfree.monotone_eval(w, p1, p2), words, inputs=(p1, p2))
    assert cfree.gram_psd_check(lambda w: cfree.free_eval(w, q1, q2), words, inputs=(q1, q2))
    assert cfree.gram_psd_check(lambda w: cfree.cfree_eval(w, p1, p2, q1, q2), words,
                                inputs=(p1, p2, q1, q2))


def test_gram_matrix_is_hermitian(specs):
    p1, p2 = specs[:2]
    g = cfree.gram_matrix(lambda w: cfree.monotone_eval(w, p1, p2), _words(np.random.default_rng(9)))
    assert np.allclose(g, g.conj().T, atol=1e-10)


def test_non_positive_input_is_rejected(specs):
    bad = MomentSpec.from_function(2, 4, lambda cs: -np.eye(2, dtype=complex))
    with pytest.raises(NonPositiveInput):
        cfree.check_input_positive(bad)
    with pytest.raises(NonPositiveInput):
        cfree.gram_psd_check(lambda w: cfree.monotone_eval(w, bad, specs[1]), _words(np.random.default_rng(10)),
                             inputs=(bad, specs[1]))


def test_mixed_gram(specs):
    p1, p2 = specs[:2]
    rng = np.random.default_rng(11)
    a = [cfree.random_word(2, rng, 2, tags=(1,)) for _ in range(3)]
    b = [cfree.random_word(2, rng, 2, tags=(2,)) for _ in range(3)]
    g = cfree.mixed_gram(p1, p2, a, b)
    assert np.allclose(g, g.conj().T, atol=1e-10)
    assert core.min_eigenvalue(g) >= -1e-8
    # off-diagonal quadrant factorises
    assert np.allclose(g[0:2, 6:8], p1.phi_word(a[0].adjoint().coeffs) @ p2.phi_word(b[0].coeffs))
    with pytest.raises(WrongAlgebra):
        cfree.mixed_gram(p1, p2, b, a)


# -- independence ---------------------------------------------------------------------------------

def test_abstract_independence(specs):
    res = cfree.check_abstract_independence(specs[0], specs[1], trials=30, seed=1)
    assert set(res) == {"a", "b.decreasing", "b.increasing", "b.valley"}
    assert max(res.values()) <= 1e-10


def test_abstract_independence_fails_for_free_product(specs):
    # under the free product the valley factorisation fails while the sandwich rule still holds
    p1, p2 = specs[:2]
    rng = np.random.default_rng(12)
    x1, y, x1b = (cfree.random_word(2, rng, 2, tags=(t,), minlen=2) for t in (1, 2, 1))

    def ev(w):
        return cfree.free_eval(w, p1, p2)

    yb = cfree.random_word(2, rng, 2, tags=(2,), minlen=2)
    assert _dev(ev(y * x1 * yb), ev(y) @ ev(x1) @ ev(yb)) > 1e-3
    assert _dev(ev(x1 * y * x1b), ev(x1 * Word.constant(ev(y)) * x1b)) <= 1e-10


def test_monotone_eval_matches_fock_realization():
    inst = random_instance(2, 0, L=8)
    p1, p2 = tabulated(inst.x, 4), tabulated(inst.y, 4)
    rng = np.random.default_rng(13)
    for _ in range(40):
        w = cfree.random_word(2, rng, 4)
        ops = [LeftMul(w.coeffs[0])]
        for tag, c in zip(w.tags, w.coeffs[1:]):
            ops += [(inst.x if tag == 1 else inst.y).op, LeftMul(c)]
        assert _dev(vacuum_phi(inst.space, ops, prune=True), cfree.monotone_eval(w, p1, p2)) <= 1e-10
