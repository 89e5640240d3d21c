import math

import numpy as np
import pytest

from thermoform.complexity import (NetSchedule, check_property_star, essential_spectral_potential,
                                   forward_entropy, inverse_rami_rate, non_contracting_radius,
                                   separated_set, shift_sep_depth, shift_span_depth, spanning_set,
                                   topological_entropy, topological_pressure)
from thermoform.fixtures import FLOAT_SCHEDULE, get_fixture
from thermoform.observables import cylinder_function
from thermoform.systems import build_circle_rotation, build_subshift, dn_distance, doubling_map, preimages

PHI = (1 + math.sqrt(5)) / 2
FULL = build_subshift(2, [[1, 1], [1, 1]])
GOLDEN = build_subshift(2, [[1, 1], [1, 0]])


def _is_spanning(S, X, pts, n, eps):
    return all(min(dn_distance(S, x, p, n) for p in pts) < eps for x in X)


class TestNets:
    def test_full_shift_depth_one_cover(self):
        assert len(spanning_set(FULL, 1, 0.5)) == 2

    def test_large_epsilon_single_point(self):
        assert len(spanning_set(FULL, 3, 2.0)) == 1
        assert len(separated_set(FULL, 3, 2.0)) == 1
        assert len(spanning_set(doubling_map(), 1, 2.0)) == 1

    def test_full_shift_separated_cylinders(self):
        assert len(separated_set(FULL, 2, 0.25)) == 4

    def test_doubling_span_size(self):
        S = doubling_map()
        pts = spanning_set(S, 3, 1 / 8)
        assert 2 ** 5 <= len(pts) <= 2 ** 7
        probe = list(np.random.default_rng(0).random(400))
        assert _is_spanning(S, probe, pts, 3, 1 / 8)

    def test_doubling_preimages_are_separated(self):
        S = doubling_map()
        pre = preimages(S, 0.3, 5)
        eps = 0.25
        assert min(dn_distance(S, a, b, 5) for i, a in enumerate(pre) for b in pre[i + 1:]) >= eps

    def test_shift_depths(self):
        # metric 2^-(k+1): a d_n ball of radius eps is a cylinder
        assert shift_span_depth(3, 0.25) == 4
        assert shift_sep_depth(3, 0.25) == 3

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            NetSchedule(eps_ladder=(0.1, 0.2))
        with pytest.raises(ValueError):
            NetSchedule(n_ladder=(3, 2))


class TestGrowthRates:
    def test_golden_entropy(self):
        assert abs(topological_entropy(GOLDEN).headline - math.log(PHI)) <= 0.02

    def test_doubling_entropy(self):
        assert abs(topological_entropy(doubling_map(), FLOAT_SCHEDULE).headline - math.log(2)) <= 0.05

    def test_doubling_unit_pressure(self):
        tr = topological_pressure(doubling_map(), get_fixture("tripling").cocycle(doubling_map()), FLOAT_SCHEDULE)
        assert abs(tr.headline - math.log(2)) <= 0.05

    def test_omega(self):
        assert inverse_rami_rate(doubling_map(), 12).best == pytest.approx(math.log(2), abs=1e-9)
        assert inverse_rami_rate(GOLDEN).best == pytest.approx(math.log(PHI), abs=1e-3)
        assert inverse_rami_rate(build_circle_rotation(0.3)).best == 0.0

    def test_gamma_vanishes(self):
        assert forward_entropy(doubling_map(), FLOAT_SCHEDULE).headline == pytest.approx(0.0, abs=0.05)
        assert forward_entropy(build_circle_rotation(0.3), FLOAT_SCHEDULE).headline == pytest.approx(0.0, abs=0.05)

    def test_gamma_vanishes_off_the_dyadic_grid(self):
        fx = get_fixture("tripling")
        assert forward_entropy(fx.alpha_system(), fx.schedule).headline == pytest.approx(0.0, abs=0.05)

    def test_finite_restriction_is_exact(self):
        fx = get_fixture("e11")
        S = fx.alpha_system()
        assert topological_entropy(S, fx.schedule).headline == pytest.approx(0.0, abs=1e-12)
        assert forward_entropy(S, fx.schedule).headline == 0.0

    def test_ell_matrix_oracles(self):
        assert essential_spectral_potential(FULL, cylinder_function(1.0)).best == pytest.approx(math.log(2))
        assert essential_spectral_potential(FULL, cylinder_function([2.0, 3.0])).best == \
            pytest.approx(math.log(5), abs=1e-9)
        assert essential_spectral_potential(FULL, cylinder_function([1.0, 0.0])).best == \
            pytest.approx(0.0, abs=1e-12)

    def test_rotation_ell_is_log_integral(self):
        fx = get_fixture("rotation")
        tr = essential_spectral_potential(fx.alpha_system(), fx.weight(None), 4000, 2.0 ** -12)
        exact = math.log((1 + math.sqrt(1 - 0.25)) / 2)
        assert abs(tr.best - exact) <= 1e-2


class TestPropertyStar:
    def test_doubling_certified(self):
        v = check_property_star(doubling_map(), 1 / 16)
        assert v.status == "CERTIFIED"
        assert v.details["F_size"] == 16

    def test_golden_certified(self):
        assert check_property_star(GOLDEN, 1 / 8).status == "CERTIFIED"

    def test_contraction_not_found(self):
        S = get_fixture("contraction").host()
        assert non_contracting_radius(S) is None
        assert check_property_star(S, 1 / 16).status == "NOT-FOUND"
