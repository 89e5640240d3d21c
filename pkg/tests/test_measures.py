import itertools
import math

import numpy as np
import pytest

from thermoform.fixtures import get_fixture
from thermoform.measures import (DiracMeasure, PeriodicOrbitMeasure, bernoulli, cylinder_invariance_defect,
                                 essential_set, integrate, is_essential, ks_entropy, markov_measure,
                                 max_cycle_mean, max_ergodic_average, nonwandering_chain,
                                 stationary_vector)
from thermoform.observables import cylinder_function, cylinder_indicator
from thermoform.systems import Word, build_finite_map, build_subshift

PHI = (1 + math.sqrt(5)) / 2


@pytest.fixture
def full2():
    return build_subshift(2, [[1, 1], [1, 1]])


@pytest.fixture
def golden():
    return build_subshift(2, [[1, 1], [1, 0]])


class TestMarkov:
    def test_bernoulli_half(self, full2):
        mu = bernoulli(full2, [0.5, 0.5])
        assert mu.pi == pytest.approx([0.5, 0.5])
        assert mu.cylinder_mass([[0, 1]])[0] == pytest.approx(0.25)
        assert ks_entropy(mu) == pytest.approx(math.log(2), abs=1e-12)

    def test_bernoulli_biased_entropy(self, full2):
        mu = bernoulli(full2, [0.2, 0.8])
        assert ks_entropy(mu) == pytest.approx(-0.2 * math.log(0.2) - 0.8 * math.log(0.8), abs=1e-12)

    def test_parry_measure_maximises_entropy(self, golden):
        mu = markov_measure(golden, [[1 / PHI, 1 / PHI ** 2], [1, 0]])
        assert ks_entropy(mu) == pytest.approx(math.log(PHI), abs=1e-12)
        best = max(ks_entropy(markov_measure(golden, [[1 - p, p], [1, 0]])) for p in np.linspace(0.01, 0.99, 99))
        assert best <= math.log(PHI) + 1e-12

    def test_reducible_rejected(self, full2):
        with pytest.raises(ValueError, match="reducible"):
            markov_measure(full2, np.eye(2))

    def test_stationary_vector(self):
        P = np.array([[0.9, 0.1], [0.5, 0.5]])
        pi = stationary_vector(P)
        assert pi @ P == pytest.approx(pi, abs=1e-13)
        assert pi == pytest.approx([5 / 6, 1 / 6])

    def test_shift_invariance(self, golden):
        mu = markov_measure(golden, [[0.3, 0.7], [1, 0]])
        assert cylinder_invariance_defect(mu, 5) < 1e-13


class TestIntegrate:
    def test_cylinder_indicator(self, full2):
        assert integrate(bernoulli(full2, [0.5, 0.5]), cylinder_indicator((0,), 2)) == pytest.approx(0.5)

    def test_dirac_is_evaluation(self, full2):
        d = DiracMeasure(full2, Word.periodic((0,)))
        assert ks_entropy(d) == 0.0
        assert integrate(d, cylinder_function([3.0, 5.0])) == pytest.approx(3.0)

    def test_cycle_average(self, full2):
        mu = PeriodicOrbitMeasure(full2, (Word.periodic((0, 1)), Word.periodic((1, 0))))
        assert integrate(mu, cylinder_function([3.0, 5.0])) == pytest.approx(4.0)

    def test_non_cycle_rejected(self, full2):
        with pytest.raises(ValueError):
            PeriodicOrbitMeasure(full2, (Word.periodic((0, 1)), Word.periodic((0, 1))))

    def test_depth2_integral_against_enumeration(self, golden):
        mu = markov_measure(golden, [[0.4, 0.6], [1, 0]])
        tab = np.array([[1.0, -2.0], [0.5, 7.0]])
        direct = sum(mu.cylinder_mass([[a, b]])[0] * tab[a, b] for a, b in itertools.product(range(2), repeat=2))
        assert integrate(mu, cylinder_function(tab)) == pytest.approx(direct, abs=1e-13)


class TestEssential:
    def test_e11_points(self):
        S = get_fixture("e11").system()
        assert is_essential(S, 1.0, 0.01, 64, [1.0]).positive
        neg = is_essential(S, 0.25, 0.05, 256, list(np.linspace(0, 1, 33)))
        assert neg.status == "NEGATIVE-AT-RESOLUTION"

    def test_finite_map_cycles(self):
        S = build_finite_map(3, [1, 0, 0])
        E = essential_set(S)
        assert E.exact and E.points == [0, 1]
        chain = nonwandering_chain(S)
        assert chain[0] == [0, 1] and chain[-1] == [0, 1]

    def test_fixed_point_chain(self):
        S = build_finite_map(2, [0, 0])
        assert nonwandering_chain(S)[-1] == [0]

    def test_cantor_star_point(self):
        S = get_fixture("cantor").system()
        x = Word.periodic((0,))
        for r in (0.5, 2.0 ** -4, 2.0 ** -8):
            v = is_essential(S, x, r, 128, [x])
            assert v.positive


class TestCycleMean:
    def test_first_symbol_weights(self, full2):
        val, mu = max_ergodic_average(full2, cylinder_function([0.0, math.log(3)]))
        assert val == pytest.approx(math.log(3))
        assert [p.head(1) for p in mu.points] == [(1,)]

    def test_constant_weight(self, golden):
        val, _ = max_ergodic_average(golden, cylinder_function([-0.7, -0.7]))
        assert val == pytest.approx(-0.7)

    def test_no_cycle_raises(self):
        with pytest.raises(ValueError):
            max_cycle_mean(3, [(0, 1, 1.0), (1, 2, 2.0)])

    def test_self_loop(self):
        r = max_cycle_mean(2, [(0, 0, 1.5), (0, 1, 9.0), (1, 0, -10.0)])
        assert r.value == pytest.approx(1.5)
        assert r.cycle == [0]
