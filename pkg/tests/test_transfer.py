import itertools
import math

import numpy as np
import pytest

from thermoform.fixtures import get_fixture
from thermoform.observables import NodeFunction, cylinder_function
from thermoform.systems import (PointSet, ShiftRestriction, Word, build_finite_map, build_ladder_fixture,
                                build_subshift, doubling_map, rungs_boxes)
from thermoform.transfer import (apply, check_compatibility, classify_point, cocycle, functional_family,
                                 perron_frobenius, spectral_potential, sft_spectral_oracle,
                                 trace_operator, with_weight)

PHI = (1 + math.sqrt(5)) / 2
FULL = [[1, 1], [1, 1]]
GOLDEN = [[1, 1], [1, 0]]


def _word_matrix_radius(M, tab):
    """Spectral radius of the depth-2 word graph by dense eigenvalues."""
    K = len(M)
    words = [w for w in itertools.product(range(K), repeat=2) if M[w[0]][w[1]]]
    idx = {w: i for i, w in enumerate(words)}
    W = np.zeros((len(words), len(words)))
    for w in words:
        for s in range(K):
            if M[w[1]][s]:
                W[idx[w], idx[(w[1], s)]] = tab[w[0], w[1]]
    return math.log(max(abs(np.linalg.eigvals(W))))


class TestOperators:
    def test_counting_operator(self):
        T = perron_frobenius(build_subshift(2, FULL), cylinder_function(1.0))
        for x in (Word.periodic((0,)), Word((1, 1), (0, 1))):
            assert apply(T, cylinder_function(1.0), x) == pytest.approx(2.0)
            fam = functional_family(T, x)
            assert [m for _, m in fam.atoms] == [1.0, 1.0]

    def test_rotation_is_weighted_shift(self):
        fx = get_fixture("rotation")
        T = fx.operator()
        theta = (math.sqrt(5) - 1) / 2
        for x in (0.05, 0.3, 0.77):
            (y, m), = functional_family(T, x).atoms
            assert y == pytest.approx((x - theta) % 1.0)
            assert m == pytest.approx(1 + 0.5 * math.cos(2 * math.pi * y))

    def test_square_single_unit_atom(self):
        T = get_fixture("square").operator()
        (y, m), = functional_family(T, (0.5, 0.3)).atoms
        assert y == pytest.approx((0.5, 0.3 ** 2 * 1.5 / 2))
        assert m == 1.0

    def test_xsquared_atom(self):
        fx = get_fixture("xsquared")
        T = fx.operator()
        (y, m), = functional_family(T, 0.25).atoms
        assert y == pytest.approx(0.5)
        assert m == pytest.approx(0.5 + abs(0.5 - 0.8))

    def test_unit_weight_is_identity(self):
        S = build_subshift(2, GOLDEN)
        T = perron_frobenius(S, cylinder_function([2.0, 3.0]))
        a = spectral_potential(T, 10).values
        b = spectral_potential(with_weight(T, cylinder_function(1.0)), 10).values
        assert a == pytest.approx(b, abs=1e-14)

    def test_scalar_weight_shifts_lambda(self):
        S = build_subshift(2, GOLDEN)
        T = perron_frobenius(S, cylinder_function(1.0))
        a = spectral_potential(T, 12).headline
        b = spectral_potential(with_weight(T, cylinder_function(math.exp(0.7))), 12).headline
        assert b - a == pytest.approx(0.7, abs=1e-12)


class TestSpectral:
    def test_full_shift_flat(self):
        tr = spectral_potential(perron_frobenius(build_subshift(2, FULL), cylinder_function(1.0)), 20)
        assert all(abs(v - math.log(2)) <= 1e-12 for v in tr.values)

    def test_golden_headline(self):
        tr = spectral_potential(perron_frobenius(build_subshift(2, GOLDEN), cylinder_function(1.0)), 20)
        assert abs(tr.headline - math.log(PHI)) <= 1e-2
        assert tr.headline >= math.log(PHI) - 1e-12

    def test_oracle_values(self):
        assert sft_spectral_oracle(build_subshift(2, FULL), cylinder_function(1.0)) == pytest.approx(math.log(2), abs=1e-12)
        assert sft_spectral_oracle(build_subshift(2, GOLDEN), cylinder_function(1.0)) == pytest.approx(math.log(PHI), abs=1e-12)
        assert sft_spectral_oracle(build_subshift(2, FULL), cylinder_function([2.0, 3.0])) == \
            pytest.approx(math.log(5), abs=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_oracle_against_eigenvalues(self, seed):
        rng = np.random.default_rng(seed)
        tab = np.exp(rng.normal(scale=3.0, size=(2, 2)))
        for M in (FULL, GOLDEN):
            S = build_subshift(2, M)
            tab_m = tab * np.asarray(M)
            got = sft_spectral_oracle(S, cylinder_function(tab_m))
            assert got == pytest.approx(_word_matrix_radius(M, tab_m), abs=1e-9)

    def test_vanishing_on_symbol_one(self):
        S = build_subshift(2, FULL)
        T = perron_frobenius(S, cylinder_function([1.0, 0.0]))
        assert spectral_potential(T, 12).headline == pytest.approx(0.0, abs=1e-12)


class TestCompatibility:
    def test_invariant_subset_compatible(self):
        T = perron_frobenius(build_subshift(2, FULL), cylinder_function(1.0))
        assert check_compatibility(T, ShiftRestriction(np.array(GOLDEN))).status == "COMPATIBLE"

    def test_xsquared_jump(self):
        fx = get_fixture("xsquared")
        v = check_compatibility(fx.operator(), fx.essential(fx.system()))
        assert v.status == "INCOMPATIBLE"
        assert v.witness["jump"] >= 0.4

    def test_square_incompatible_near_corner(self):
        fx = get_fixture("square")
        v = check_compatibility(fx.operator(), fx.essential(fx.system()))
        assert v.status == "INCOMPATIBLE"
        assert v.witness["limit"] == pytest.approx([0.0, 1.0], abs=1e-2)

    def test_golden_trace(self):
        T = perron_frobenius(build_subshift(2, FULL), cylinder_function(1.0))
        TY = trace_operator(T, ShiftRestriction(np.array(GOLDEN)))
        lam_y = spectral_potential(TY, 16).headline
        assert abs(lam_y - math.log(PHI)) < 0.02
        assert lam_y < math.log(2)

    def test_finite_trace(self):
        S = build_finite_map(3, [1, 0, 0])
        T = perron_frobenius(S, NodeFunction(np.array([2.0, 5.0, 1.0])))
        TY = trace_operator(T, PointSet((0, 1)))
        assert spectral_potential(TY, 10).headline == pytest.approx(0.5 * math.log(10), abs=1e-12)


class TestLocalStructure:
    def test_doubling_local_homeo(self):
        S = doubling_map()
        for x in (0.0, 0.3, 0.71):
            f = classify_point(S, x)
            assert f.LIP and f.LOP and f.LHP

    def test_ladder_lip_not_lhp(self):
        S = build_ladder_fixture()
        f = classify_point(S, (0.5, 1.0), rungs_boxes(0.5, 1.0, 12))
        assert f.LIP and not f.LHP

    def test_e11_constant_branch(self):
        assert not classify_point(get_fixture("e11").system(), 0.75).LIP

    def test_rotation_cocycle_continuous(self):
        assert cocycle(get_fixture("rotation").operator()).continuous_at(0.3)
