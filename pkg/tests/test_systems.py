import itertools
import math

import numpy as np
import pytest

from thermoform.systems import (NonDiscretePreimageError, PointSet, Word, build_finite_map,
                                build_ladder_fixture, build_piecewise_cover, build_square_fixture,
                                build_subshift, dn_distance, doubling_map, expanding_circle_map,
                                from_descriptor, orbit, preimages, to_descriptor, word_distance)


def _fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def _brute_count(M, n):
    M = np.asarray(M)
    return sum(all(M[a, b] for a, b in zip(w, w[1:])) for w in itertools.product(range(len(M)), repeat=n))


class TestSubshift:
    def test_full_shift_has_two_preimages(self):
        S = build_subshift(2, [[1, 1], [1, 1]])
        for x in (Word.periodic((0,)), Word((1, 0), (1,)), Word.periodic((0, 1))):
            assert len(preimages(S, x, 1)) == 2

    @pytest.mark.parametrize("n", range(1, 13))
    def test_golden_word_count_is_fibonacci(self, n):
        S = build_subshift(2, [[1, 1], [1, 0]])
        assert S.count_words(n) == _fib(n + 2)
        if n <= 10:
            assert S.count_words(n) == _brute_count([[1, 1], [1, 0]], n)

    def test_identity_matrix_gives_single_preimages(self):
        S = build_subshift(2, [[1, 0], [0, 1]])
        for x in (Word.periodic((0,)), Word.periodic((1,))):
            assert len(preimages(S, x, 1)) == 1

    def test_rejects_non_binary_matrix(self):
        with pytest.raises(ValueError):
            build_subshift(2, [[1, 2], [1, 0]])

    def test_golden_symbol_one_has_one_preimage(self):
        S = build_subshift(2, [[1, 1], [1, 0]])
        pre = preimages(S, Word((1,), (0,)), 1)
        assert [p.head(2) for p in pre] == [(0, 1)]

    def test_full_shift_depth_three(self):
        S = build_subshift(2, [[1, 1], [1, 1]])
        pre = preimages(S, Word.periodic((0,)), 3)
        assert len(pre) == 8
        assert len({p.head(3) for p in pre}) == 8

    def test_word_metric(self):
        x = Word((1,), (0,))
        assert word_distance(x, Word((1, 0), (0, 1))) == 2.0 ** -4
        assert word_distance(x, x) == 0.0
        assert word_distance(Word.periodic((0,)), Word.periodic((1,))) == 0.5

    def test_eventually_periodic_shift(self):
        w = Word((1, 1, 0), (0, 1))
        tail = w.shift(3)
        assert tail.is_periodic
        assert tail.head(6) == (0, 1, 0, 1, 0, 1)
        assert w.prepend(0).shift(1) == w


class TestPiecewise:
    def test_doubling_preimages(self):
        S = doubling_map()
        assert sorted(preimages(S, 0.0, 2)) == pytest.approx([0.0, 0.25, 0.5, 0.75])
        for x in np.linspace(0, 1, 17, endpoint=False):
            assert len(preimages(S, float(x), 1)) == 2

    def test_tripling_preimages(self):
        S = expanding_circle_map(3)
        for x in (0.0, 0.2, 0.9):
            assert len(preimages(S, x, 1)) == 3

    def test_e11_flags_constant_branch(self):
        S = build_piecewise_cover([(0.0, 0.5, "affine", (2.0, 0.0)), (0.5, 1.0, "constant", (1.0,))])
        with pytest.raises(NonDiscretePreimageError):
            preimages(S, 1.0, 1)
        assert preimages(S, 0.5, 1) == pytest.approx([0.25])

    def test_dn_distance_doubling(self):
        S = doubling_map()
        for k in range(1, 8):
            assert dn_distance(S, 0.0, 2.0 ** -k, k) == pytest.approx(0.5)
        assert dn_distance(S, 0.3, 0.4, 1) == pytest.approx(0.1)
        assert dn_distance(S, 0.3, 0.3, 9) == 0.0


class TestFixturesMaps:
    def test_square_forward_branches(self):
        S = build_square_fixture()
        assert S.forward((0.5, 1.0)) == pytest.approx((0.5, 1.0))
        for x2 in (0.0, 0.25, 0.81, 1.0):
            assert S.forward((0.0, x2)) == pytest.approx((0.0, math.sqrt(x2)))

    def test_square_beta_orbit(self):
        S = build_square_fixture()
        pts = orbit(S, (0.0, 0.5), 3, step=S.beta)
        assert [tuple(p) for p in pts] == [pytest.approx(q) for q in ((0, 0.5), (0, 0.25), (0, 0.0625))]

    def test_ladder_moves_rungs_up(self):
        S = build_ladder_fixture()
        for n in range(1, 8):
            assert S.forward((0.3, 2.0 ** -n)) == pytest.approx((0.3, 2.0 ** -(n - 1)))
        assert S.forward((0.25, 1.0)) == pytest.approx((0.5, 1.0))


class TestFiniteMap:
    def test_two_cycle_plus_tail(self):
        S = build_finite_map(3, [1, 0, 0])
        assert sorted(S.periodic_points()) == [0, 1]

    def test_self_loop(self):
        assert build_finite_map(1, [0]).periodic_points() == [0]

    @pytest.mark.parametrize("seed", range(10))
    def test_periodic_set_matches_iteration(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.integers(0, 5, size=5)
        S = build_finite_map(5, img)
        brute = set()
        for x in range(5):
            y = x
            for _ in range(5):
                y = int(img[y])
                if y == x:
                    brute.add(x)
                    break
        assert set(S.periodic_points()) == brute

    def test_fixed_point_orbit_constant(self):
        S = build_finite_map(3, [1, 0, 2])
        assert orbit(S, 2, 5) == [2] * 5


class TestDescriptors:
    @pytest.mark.parametrize("S", [build_subshift(2, [[1, 1], [1, 0]]), doubling_map(), expanding_circle_map(3),
                                   build_finite_map(3, [1, 0, 0]), build_square_fixture(),
                                   build_ladder_fixture(6)])
    def test_round_trip(self, S):
        d = to_descriptor(S)
        assert to_descriptor(from_descriptor(d)) == d

    def test_restriction_round_trip(self):
        S = build_subshift(2, [[1, 1], [1, 1]]).restrict(PointSet((Word.periodic((0,)),)))
        d = to_descriptor(S)
        assert to_descriptor(from_descriptor(d)) == d
