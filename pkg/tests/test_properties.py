"""Invariants that must hold for every admissible input."""

import itertools
import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from thermoform.estimates import aitken, fekete_trace
from thermoform.measures import cylinder_invariance_defect, integrate, ks_entropy, markov_measure, max_cycle_mean
from thermoform.observables import cylinder_function
from thermoform.systems import Word, build_subshift, dn_distance, doubling_map, word_distance
from thermoform.tentropy import t_entropy_closed_form, t_entropy_radon
from thermoform.transfer import log_norms, perron_frobenius, sft_spectral_oracle

FULL = build_subshift(2, [[1, 1], [1, 1]])
GOLDEN = build_subshift(2, [[1, 1], [1, 0]])

probs = st.floats(0.05, 0.95)
logs = st.floats(-3.0, 3.0)
words = st.builds(Word, st.lists(st.integers(0, 1), max_size=4).map(tuple),
                  st.lists(st.integers(0, 1), min_size=1, max_size=3).map(tuple))


def _full_markov(p, q):
    return markov_measure(FULL, [[1 - p, p], [q, 1 - q]])


@st.composite
def weighted_graphs(draw):
    n = draw(st.integers(1, 7))
    edges = []
    for u, v in itertools.product(range(n), repeat=2):
        if draw(st.booleans()):
            edges.append((u, v, draw(st.floats(-5, 5, allow_nan=False))))
    return n, edges


def _brute(n, edges):
    wt = {(u, v): w for u, v, w in edges}
    best = -math.inf
    for k in range(1, n + 1):
        for cyc in itertools.permutations(range(n), k):
            if cyc[0] != min(cyc):
                continue
            pairs = list(zip(cyc, cyc[1:] + cyc[:1]))
            if all(p in wt for p in pairs):
                best = max(best, sum(wt[p] for p in pairs) / k)
    return best


@given(weighted_graphs())
def test_karp_matches_cycle_enumeration(g):
    n, edges = g
    brute = _brute(n, edges)
    assume(brute > -math.inf)
    assert abs(max_cycle_mean(n, edges).value - brute) <= 1e-12


@given(probs, probs)
def test_markov_measures_are_invariant(p, q):
    mu = _full_markov(p, q)
    assert cylinder_invariance_defect(mu, 4) < 1e-12
    assert 0.0 <= ks_entropy(mu) <= math.log(2) + 1e-12


@given(probs, probs, logs, logs)
def test_norm_sequence_bounds_spectral_potential(p, q, a, b):
    T = perron_frobenius(FULL, cylinder_function([math.exp(a), math.exp(b)]))
    lam = sft_spectral_oracle(FULL, cylinder_function([math.exp(a), math.exp(b)]))
    ln = log_norms(T, 10).values
    # each (1/n) log ||A^n 1|| bounds lambda from above; log ||A^n 1|| is subadditive
    assert all(v / n >= lam - 1e-9 for n, v in zip(range(1, 11), ln))
    assert all(ln[i + j + 1] <= ln[i] + ln[j] + 1e-9 for i in range(5) for j in range(5))


@given(probs, probs, logs, logs)
def test_variational_inequality(p, q, a, b):
    mu = _full_markov(p, q)
    T = perron_frobenius(FULL, cylinder_function(1.0))
    psi = cylinder_function([a, b])
    lam = sft_spectral_oracle(FULL, cylinder_function([math.exp(a), math.exp(b)]))
    assert integrate(mu, psi) + t_entropy_closed_form(T, mu) <= lam + 1e-9


@given(probs, logs, logs)
def test_radon_matches_closed_form_on_golden(p, a, b):
    mu = markov_measure(GOLDEN, [[1 - p, p], [1, 0]])
    T = perron_frobenius(GOLDEN, cylinder_function([math.exp(a), math.exp(b)]))
    assert abs(t_entropy_radon(T, mu).headline - t_entropy_closed_form(T, mu)) <= 1e-6


@given(logs, st.floats(-2, 2))
def test_constant_weight_shifts_oracle(a, c):
    base = sft_spectral_oracle(GOLDEN, cylinder_function([1.0, math.exp(a)]))
    moved = sft_spectral_oracle(GOLDEN, cylinder_function([math.exp(c), math.exp(a + c)]))
    assert abs(moved - base - c) <= 1e-9


@given(words, words, words)
def test_word_metric_is_ultrametric(x, y, z):
    assert word_distance(x, y) == word_distance(y, x)
    assert word_distance(x, z) <= max(word_distance(x, y), word_distance(y, z))


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True), st.integers(1, 12))
def test_bowen_metric_monotone(x, y, n):
    S = doubling_map()
    assert dn_distance(S, x, y, n) <= dn_distance(S, x, y, n + 1) + 1e-15
    assert dn_distance(S, x, y, n) >= S.distance(x, y) - 1e-15


@given(st.floats(-2, 2), st.floats(0.1, 5), st.floats(0.2, 0.8))
def test_aitken_exact_on_geometric_tail(limit, amp, ratio):
    seq = [limit + amp * ratio ** k for k in range(6)]
    assert abs(aitken(seq) - limit) <= 1e-9 * max(1.0, amp)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=12))
def test_fekete_headline_is_minimum(vals):
    ns = list(range(1, len(vals) + 1))
    tr = fekete_trace("q", "test", ns, [v * n for v, n in zip(vals, ns)])
    assert np.isclose(tr.headline, min(tr.values))
    if tr.accelerated is not None:
        assert tr.accelerated <= tr.headline + 1e-12
