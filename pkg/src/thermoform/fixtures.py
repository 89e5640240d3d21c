"""Catalog of worked systems with their operators, essential sets, potentials and
certified hypothesis flags."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .complexity import SHIFT_SCHEDULE, NetSchedule
from .measures import (DiracMeasure, LebesgueMeasure, PeriodicOrbitMeasure, bernoulli,
                       markov_measure)
from .observables import (CylinderFunction, NodeFunction, PointFunction, constant,
                          cylinder_function)
from .systems import (BoxUnion, Branch, DisjointUnion, PointSet, SquareFixture, Word,
                      build_circle_rotation, build_finite_map, build_ladder_fixture,
                      build_piecewise_cover, build_square_fixture, build_subshift,
                      doubling_map, expanding_circle_map, rungs_boxes)
from .transfer import ComponentFunction, TransferOperator, perron_frobenius

GOLDEN_ANGLE = (math.sqrt(5.0) - 1.0) / 2.0

HYPOTHESIS_KEYS = ("discrete_preimages", "local_homeo_on_X_alpha", "non_contracting",
                   "X_alpha_compatible", "invertible_on_X_alpha", "property_star_star")


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    summary: str
    example: str
    system: Callable
    essential: Callable | None
    cocycle: Callable
    psis: Callable
    hypotheses: dict
    schedule: NetSchedule
    lam: dict = field(default_factory=dict)
    measures: Callable | None = None
    pressure_potential: Callable | None = None
    declared_essential: str = "whole space"
    # identity rows report both sides even when the hypotheses fail
    report_inapplicable: bool = False

    def host(self):
        return self.system()

    def alpha_system(self):
        S = self.system()
        return S if self.essential is None else S.restrict(self.essential(S))

    def operator(self, S=None) -> TransferOperator:
        S = S or self.system()
        return perron_frobenius(S, self.cocycle(S), label=self.name)

    def weight(self, psi=None):
        """``rho * exp(psi)`` as one observable on the essential system."""
        S = self.system()
        rho = self.cocycle(S)
        if psi is None:
            return rho
        return _times_exp(rho, psi)

    def pressure_observable(self, psi):
        """Potential handed to the pressure estimator (``psi + ln rho`` unless overridden)."""
        if self.pressure_potential is not None:
            return self.pressure_potential(psi)
        return _plus_log(psi, self.cocycle(self.system()))

    def catalog_entry(self) -> dict:
        return {"name": self.name, "summary": self.summary, "example": self.example,
                "essential_set": self.declared_essential,
                "hypotheses": dict(self.hypotheses), "schedule": self.schedule.describe()}


def _times_exp(rho, psi):
    if isinstance(rho, ComponentFunction):
        return ComponentFunction(tuple(_times_exp(r, p) for r, p in zip(rho.parts, psi.parts)))
    if isinstance(rho, CylinderFunction) and isinstance(psi, CylinderFunction):
        k, K = max(rho.depth, psi.depth, 1), max(rho.alphabet_size, psi.alphabet_size, 2)
        return CylinderFunction(_table(rho, k, K) * np.exp(_table(psi, k, K)), f"{rho.name}*exp({psi.name})")
    if isinstance(rho, NodeFunction) and isinstance(psi, NodeFunction):
        return NodeFunction(rho.values * np.exp(psi.values), f"{rho.name}*exp({psi.name})")
    return PointFunction(lambda p: rho(p) * np.exp(psi(p)), f"{rho.name}*exp({psi.name})")


def _table(f: CylinderFunction, k: int, K: int) -> np.ndarray:
    if f.depth == 0:
        return np.full((K,) * k, float(f.table))
    return f.lift(k).table


def _plus_log(psi, rho):
    if isinstance(rho, ComponentFunction):
        return ComponentFunction(tuple(_plus_log(p, r) for p, r in zip(psi.parts, rho.parts)))
    if isinstance(rho, CylinderFunction) and isinstance(psi, CylinderFunction):
        k = max(rho.depth, psi.depth, 1)
        K = max(rho.alphabet_size, psi.alphabet_size, 2)
        with np.errstate(divide="ignore"):
            return CylinderFunction(_table(psi, k, K) + np.log(_table(rho, k, K)), f"{psi.name}+ln({rho.name})")
    if isinstance(rho, NodeFunction) and isinstance(psi, NodeFunction):
        with np.errstate(divide="ignore"):
            return NodeFunction(psi.values + np.log(rho.values), f"{psi.name}+ln({rho.name})")

    def f(p):
        with np.errstate(divide="ignore"):
            return psi(p) + np.log(rho(p))
    return PointFunction(f, f"{psi.name}+ln({rho.name})")


# ---------------------------------------------------------------------------
# potentials


def _shift_psis():
    return [cylinder_function([0.0, 0.0], "zero"), cylinder_function([0.3, -0.2], "psi1"),
            cylinder_function([-0.5, 0.4], "psi2"), cylinder_function([1.0, 0.0], "psi3"),
            cylinder_function([0.0, 0.7], "psi4")]


def _circle_psis():
    out = [PointFunction(lambda x: np.zeros(np.shape(x)[0]), "zero")]
    for c, s, name in ((0.3, 0.0, "0.3cos"), (-0.3, 0.0, "-0.3cos"), (0.0, 0.4, "0.4sin"), (0.2, 0.2, "0.2cos+0.2sin")):
        out.append(PointFunction(lambda x, c=c, s=s: c * np.cos(2 * np.pi * x) + s * np.sin(2 * np.pi * x), name))
    return out


def _square_psis():
    return [PointFunction(lambda P: P[:, 0] + P[:, 1], "x1+x2")]


def _ones(S):
    return cylinder_function(1.0, "one")


def _unit_point(S):
    return constant(1.0, "one")


# ---------------------------------------------------------------------------
# catalog


def _full2():
    return build_subshift(2, [[1, 1], [1, 1]])


def _golden():
    return build_subshift(2, [[1, 1], [1, 0]])


def _cantor():
    return build_subshift(2, [[1, 1], [1, 1]], labels=(0, 2), rule="dyadic_sparse")


def _e11():
    return build_piecewise_cover([Branch(0.0, 0.5, "affine", (2.0, 0.0)), Branch(0.5, 1.0, "constant", (1.0,))],
                                 name="e11")


def _xsquared():
    return build_piecewise_cover([Branch(0.0, 1.0, "power", (1.0, 2.0))], name="x^2")


def _tent():
    return build_piecewise_cover([Branch(0.0, 0.5, "affine", (2.0, 0.0)), Branch(0.5, 1.0, "affine", (-2.0, 2.0))],
                                 name="tent")


def _contraction():
    return build_piecewise_cover([Branch(0.0, 1.0, "affine", (0.5, 0.0))], name="x/2")


def _finite():
    return build_finite_map(3, [1, 0, 0])


def _product():
    return DisjointUnion((doubling_map(), build_circle_rotation(GOLDEN_ANGLE)))


def _rotation_rho(S):
    return PointFunction(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), "1+0.5cos")


def _doubling_rho(S):
    return PointFunction(lambda x: 0.5 + x / 2.0, "0.5+x/2")


def _lower(S):
    return PointFunction(lambda P: SquareFixture.in_lower(P).astype(float), "lower-region")


def xsquared_cocycle(c: float):
    return PointFunction(lambda x, c=c: c + np.abs(np.asarray(x) - 0.8), f"{c:g}+|x-0.8|")


def _markov_family(S):
    if S.transitions.all():
        return [bernoulli(S, [0.5, 0.5]), bernoulli(S, [0.2, 0.8]),
                DiracMeasure(S, Word.periodic((0,)))]
    return [markov_measure(S, np.array([[0.5, 0.5], [1.0, 0.0]])),
            DiracMeasure(S, Word.periodic((0,)))]


def _square_family(S):
    xs = np.linspace(0.0, 1.0, 5)
    return ([DiracMeasure(S, (float(x), 0.0)) for x in xs]
            + [DiracMeasure(S, (float(x), 1.0)) for x in xs])


FLOAT_SCHEDULE = NetSchedule(eps_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6),
                             resolution=(2.0 ** -16, 2.0 ** -17, 2.0 ** -18))
PLANE_SCHEDULE = NetSchedule(eps_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6), resolution=2.0 ** -10)

_LH = {"discrete_preimages": True, "local_homeo_on_X_alpha": True, "non_contracting": True,
       "X_alpha_compatible": True, "invertible_on_X_alpha": False, "property_star_star": "certified"}

CATALOG: dict[str, Fixture] = {}


def _add(fx: Fixture):
    CATALOG[fx.name] = fx


_add(Fixture("full2", "full shift on two symbols", "counting oracle 2^n",
             _full2, None, _ones, _shift_psis, dict(_LH), SHIFT_SCHEDULE, {"n_max": 20},
             _markov_family))
_add(Fixture("golden", "golden-mean shift [[1,1],[1,0]]", "Fibonacci word counts, h = ln phi",
             _golden, None, _ones, _shift_psis, dict(_LH), SHIFT_SCHEDULE, {"n_max": 20},
             _markov_family))
_add(Fixture("cantor", "Cantor-digit shift with at most n marked digits in every 2^n window",
             "every point non-wandering, single essential point 0^inf",
             _cantor, lambda S: PointSet((Word.periodic((0,)),)), _ones, _shift_psis,
             {"discrete_preimages": True, "local_homeo_on_X_alpha": True, "non_contracting": False,
              "X_alpha_compatible": False, "invertible_on_X_alpha": True, "property_star_star": "unchecked"},
             SHIFT_SCHEDULE, {"n_max": 12}, None, None, "{0^inf}"))
_add(Fixture("doubling", "x -> 2x mod 1 with cocycle 0.5 + x/2", "non-contracting local homeomorphism",
             doubling_map, None, _doubling_rho, _circle_psis, dict(_LH), FLOAT_SCHEDULE,
             {"n_max": 12, "resolution": 2.0 ** -8, "refine": 2},
             lambda S: [LebesgueMeasure(S), DiracMeasure(S, 0.0)]))
_add(Fixture("tripling", "x -> 3x mod 1 with unit cocycle", "degree-3 cover",
             lambda: expanding_circle_map(3), None, _unit_point, _circle_psis, dict(_LH), FLOAT_SCHEDULE,
             {"n_max": 10, "resolution": 2.0 ** -8, "refine": 2},
             lambda S: [LebesgueMeasure(S), DiracMeasure(S, 0.0)]))
_add(Fixture("rotation", "rotation by the golden angle with cocycle 1 + 0.5cos", "uniquely ergodic isometry",
             lambda: build_circle_rotation(GOLDEN_ANGLE), None, _rotation_rho, _circle_psis,
             {**_LH, "invertible_on_X_alpha": True}, NetSchedule(eps_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6),
                                                                 n_ladder=tuple(range(20, 401, 20)),
                                                                 resolution=2.0 ** -12),
             {"n_max": 4000, "resolution": 2.0 ** -8, "refine": 1},
             lambda S: [LebesgueMeasure(S)]))
_add(Fixture("e11", "2x on [0,1/2], constant 1 on [1/2,1]", "essential set {0,1} is not invariant-closed",
             _e11, lambda S: PointSet([0.0, 1.0]),
             lambda S: PointFunction(lambda x: (np.asarray(x) < 0.5).astype(float), "1[x<1/2]"), _circle_psis,
             {"discrete_preimages": False, "local_homeo_on_X_alpha": False, "non_contracting": False,
              "X_alpha_compatible": False, "invertible_on_X_alpha": False, "property_star_star": "unchecked"},
             FLOAT_SCHEDULE, {}, None, None, "{0, 1}"))
_add(Fixture("square", "unit square folding onto its top edge", "spectral potential differs from pressure",
             build_square_fixture, lambda S: BoxUnion((((0, 1), (0, 0)), ((0, 1), (1, 1)))), _lower, _square_psis,
             {"discrete_preimages": False, "local_homeo_on_X_alpha": False, "non_contracting": False,
              "X_alpha_compatible": False, "invertible_on_X_alpha": True, "property_star_star": "unchecked"},
             NetSchedule(eps_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6), n_ladder=tuple(range(8, 129, 8)),
                         resolution=2.0 ** -13),
             {"n_max": 400, "resolution": 2.0 ** -5, "refine": 2}, _square_family,
             lambda psi: psi, "[0,1]x{0,1}", report_inapplicable=True))
_add(Fixture("ladder", "[0,1] x {0, 2^-n} climbing ladder", "local homeomorphism that is not compatible",
             build_ladder_fixture, lambda S: rungs_boxes(0.5, 1.0, S.levels), _unit_point, _square_psis,
             {"discrete_preimages": True, "local_homeo_on_X_alpha": False, "non_contracting": False,
              "X_alpha_compatible": False, "invertible_on_X_alpha": False, "property_star_star": "unchecked"},
             PLANE_SCHEDULE, {}, None, None, "[1/2,1]x{0,2^-n}"))
_add(Fixture("xsquared", "x -> x^2 on [0,1] traced to [0,0.8]", "compatible iff the cocycle vanishes at 0.8",
             _xsquared, lambda S: BoxUnion((((0.0, 0.8),),)), lambda S: xsquared_cocycle(0.5), _circle_psis,
             {"discrete_preimages": True, "local_homeo_on_X_alpha": False, "non_contracting": False,
              "X_alpha_compatible": False, "invertible_on_X_alpha": True, "property_star_star": "unchecked"},
             FLOAT_SCHEDULE, {}, None, None, "[0,0.8]"))
_add(Fixture("contraction", "x -> x/2 on [0,1]", "strict contraction, no non-contracting radius",
             _contraction, lambda S: PointSet([0.0]), _unit_point, _circle_psis,
             {"discrete_preimages": True, "local_homeo_on_X_alpha": True, "non_contracting": False,
              "X_alpha_compatible": False, "invertible_on_X_alpha": True, "property_star_star": "not-found"},
             FLOAT_SCHEDULE, {}, None, None, "{0}"))
_add(Fixture("tent", "full tent map with the Lebesgue cocycle 1/2", "fold point breaks local injectivity",
             _tent, None, lambda S: constant(0.5, "1/2"), _circle_psis,
             {"discrete_preimages": True, "local_homeo_on_X_alpha": False, "non_contracting": True,
              "X_alpha_compatible": True, "invertible_on_X_alpha": False, "property_star_star": "unchecked"},
             FLOAT_SCHEDULE, {"n_max": 12, "resolution": 2.0 ** -8, "refine": 2}))
_add(Fixture("product", "doubling map beside a golden rotation", "h = max(omega, gamma) per factor",
             _product, None, lambda S: ComponentFunction((constant(1.0), constant(1.0))),
             lambda: [ComponentFunction((p, p), p.name) for p in _circle_psis()[:2]],
             {**_LH, "property_star_star": "unchecked"}, FLOAT_SCHEDULE,
             {"n_max": 12, "resolution": 2.0 ** -8, "refine": 1}))
_add(Fixture("finite", "3-node map 0<->1, 2->0 with weights (2,5,1)", "exact miniature",
             _finite, lambda S: PointSet((0, 1)), lambda S: NodeFunction(np.array([2.0, 5.0, 1.0]), "w"),
             lambda: [NodeFunction(np.zeros(3), "zero"), NodeFunction(np.array([0.3, -0.1, 0.0]), "psi1")],
             {"discrete_preimages": True, "local_homeo_on_X_alpha": True, "non_contracting": True,
              "X_alpha_compatible": True, "invertible_on_X_alpha": True, "property_star_star": "certified"},
             SHIFT_SCHEDULE, {"n_max": 20},
             lambda S: [PeriodicOrbitMeasure(S, (0, 1))], None, "{0, 1}"))


def get_fixture(name: str) -> Fixture:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"fixture: unknown fixture {name!r}; known: {', '.join(sorted(CATALOG))}") from None


def list_fixtures(filter_text: str = "") -> list[dict]:
    f = filter_text.lower()
    return [fx.catalog_entry() for fx in CATALOG.values()
            if not f or f in fx.name.lower() or f in fx.summary.lower()]


__all__ = ["Fixture", "CATALOG", "get_fixture", "list_fixtures", "xsquared_cocycle", "GOLDEN_ANGLE",
           "HYPOTHESIS_KEYS", "FLOAT_SCHEDULE"]
