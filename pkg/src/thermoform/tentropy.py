"""t-entropy of invariant measures and the checks tying it to spectral
potential, pressure and integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .estimates import jsonable
from .measures import (DiracMeasure, LebesgueMeasure, MarkovMeasure, PeriodicOrbitMeasure,
                       integrate, ks_entropy, markov_measure, max_ergodic_average,
                       periodic_words)
from .observables import (CylinderFunction, NodeFunction, PointFunction, all_words,
                          cylinder_function, cylinder_indicator)
from .systems import (CircleRotation, FiniteMap, PiecewiseCover, Subshift, Word, _FloatModel)
from .transfer import (TransferOperator, log_weight, log_weight_table, sft_spectral_oracle,
                       spectral_potential)

NEG_INF = -math.inf


# ---------------------------------------------------------------------------
# partitions of unity


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    functions: tuple
    tag: str

    def check(self, points) -> float:
        """``max |sum g_i - 1|`` on the given batch; raises on negative values."""
        vals = np.array([g(points) for g in self.functions])
        if np.any(vals < -1e-15):
            raise ValueError("partition function takes negative values")
        return float(np.max(np.abs(vals.sum(axis=0) - 1.0)))


def cylinder_partition(S: Subshift, depth: int) -> PartitionOfUnity:
    W = S.words(depth, within=False)
    return PartitionOfUnity(tuple(cylinder_indicator(tuple(w), S.alphabet_size) for w in W),
                            f"cylinders depth {depth}")


def _hat1(c, h, periodic):
    def f(x):
        x = np.asarray(x, dtype=float)
        d = np.abs(x - c)
        if periodic:
            d = np.minimum(d, 1.0 - d)
        return np.maximum(0.0, 1.0 - d / h)
    return f


def hat_partition(S: _FloatModel, spacing: float) -> PartitionOfUnity:
    """Tensor hat functions on a uniform grid; sums to one on the bounding box."""
    if S.dim == 1:
        lo, hi = (0.0, 1.0) if S.periodic else (S.lo, S.hi)
        m = int(round((hi - lo) / spacing))
        cs = lo + spacing * np.arange(m if S.periodic else m + 1)
        fs = tuple(PointFunction(_hat1(c, spacing, S.periodic), f"hat({c:g})") for c in cs)
        return PartitionOfUnity(fs, f"hats {spacing:g}")
    m = int(round(1.0 / spacing))
    cs = spacing * np.arange(m + 1)
    fs = []
    for a in cs:
        for b in cs:
            fa, fb = _hat1(a, spacing, False), _hat1(b, spacing, False)
            fs.append(PointFunction(lambda P, fa=fa, fb=fb: fa(P[:, 0]) * fb(P[:, 1]), f"hat({a:g},{b:g})"))
    return PartitionOfUnity(tuple(fs), f"hats {spacing:g}")


# ---------------------------------------------------------------------------
# estimates


@dataclass
class TEntropyEstimate:
    method: str
    cells: list = field(default_factory=list)
    headline: float = math.nan
    running_inf: list = field(default_factory=list)
    bound: str = "upper"
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable({"method": self.method, "cells": self.cells, "headline": self.headline,
                         "running_inf": self.running_inf, "bound": self.bound, "meta": self.meta})


def _summand(mg: float, mag: float) -> float:
    if mg <= 0:
        return 0.0
    if mag <= 0:
        return NEG_INF
    return mg * math.log(mag / mg)


def _atoms(mu):
    if isinstance(mu, PeriodicOrbitMeasure):
        return list(mu.points), np.full(len(mu.points), 1.0 / len(mu.points))
    if isinstance(mu, LebesgueMeasure):
        x = mu.nodes()
        return list(x), np.full(len(x), 1.0 / len(x))
    raise TypeError(f"no atomic description for {type(mu).__name__}")


def _shift_pushforward(T: TransferOperator, mu, words: np.ndarray, n: int) -> np.ndarray:
    """``(A*^n mu)([w])`` for each row ``w`` of ``words``."""
    S = T.system
    tab = log_weight_table(T)
    k = tab.depth
    m = words.shape[1]
    L = max(m, n + k - 1, n + 1)
    Y = S.words(L)
    if len(Y) == 0:
        return np.zeros(len(words))
    lw = np.zeros(len(Y))
    for i in range(n):
        lw += tab(Y[:, i:i + k])
    mass = np.exp(lw) * mu.cylinder_mass(Y[:, n:])
    keys = {tuple(w): i for i, w in enumerate(words.tolist())}
    out = np.zeros(len(words))
    for y, v in zip(Y[:, :m].tolist(), mass):
        j = keys.get(tuple(y))
        if j is not None:
            out[j] += v
    return out


def _float_power(T: TransferOperator, g, X0: np.ndarray, n: int) -> np.ndarray:
    """``(A^n g)(x)`` for every row of ``X0`` by explicit preimage trees."""
    from .transfer import _vanishing_skip
    S = T.system
    skip = _vanishing_skip(T)
    P, L, R = X0, np.zeros(len(X0)), np.arange(len(X0))
    for _ in range(n):
        if not len(P):
            break
        Q, idx = S.preimage_points(P, T.within, skip)
        L = L[idx] + log_weight(T, Q)
        R = R[idx]
        keep = np.isfinite(L)
        P, L, R = Q[keep], L[keep], R[keep]
    if not len(P):
        return np.zeros(len(X0))
    return np.bincount(R, np.exp(L) * g(S.obs_points(P)), minlength=len(X0))


def _finite_power(T: TransferOperator, g: NodeFunction, nodes, n: int) -> np.ndarray:
    S = T.system
    out = []
    for x in nodes:
        level = {int(x): 0.0}
        for _ in range(n):
            nxt = {}
            for p, lw in level.items():
                for q in S.preimages1(p, T.within):
                    w = lw + float(log_weight(T, np.array([q]))[0])
                    if w > NEG_INF:
                        nxt[q] = np.logaddexp(nxt.get(q, NEG_INF), w)
            level = nxt
        out.append(sum(math.exp(w) * float(g(np.array([q]))[0]) for q, w in level.items()))
    return np.array(out)


def t_entropy_partition(T: TransferOperator, mu, depth_max: int = 4, n_max: int = 6,
                        partitions=None) -> TEntropyEstimate:
    """``(1/n) sum_g mu[g] ln(mu[A^n g] / mu[g])`` over ``n <= n_max`` and a refining
    family of partitions; every cell is an upper bound, the headline is their infimum."""
    S = T.system
    if partitions is None:
        if isinstance(S, Subshift):
            partitions = [cylinder_partition(S, m) for m in range(1, depth_max + 1)]
        elif isinstance(S, FiniteMap):
            partitions = [PartitionOfUnity(tuple(NodeFunction(np.eye(S.nodes)[i], f"1[{i}]")
                                                 for i in range(S.nodes)), "points")]
        else:
            partitions = [hat_partition(S.unrestricted(), 2.0 ** -m) for m in range(1, depth_max + 1)]
    cells, running = [], []
    best = math.inf
    for part in partitions:
        for n in range(1, n_max + 1):
            if isinstance(S, Subshift) and isinstance(mu, (MarkovMeasure, PeriodicOrbitMeasure)):
                W = np.array([np.argwhere(g.table == 1)[0] for g in part.functions])
                mg = mu.cylinder_mass(W)
                mag = _shift_pushforward(T, mu, W, n)
            else:
                pts, wts = _atoms(mu)
                if isinstance(S, FiniteMap):
                    mg = np.array([float(np.dot(wts, g(np.array(pts, dtype=int)))) for g in part.functions])
                    mag = np.array([float(np.dot(wts, _finite_power(T, g, pts, n))) for g in part.functions])
                else:
                    X0 = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p in pts])
                    mg = np.array([float(np.dot(wts, g(S.obs_points(X0)))) for g in part.functions])
                    mag = np.array([float(np.dot(wts, _float_power(T, g, X0, n))) for g in part.functions])
            terms = [_summand(a, b) for a, b in zip(mg, mag)]
            val = NEG_INF if any(t == NEG_INF for t in terms) else sum(terms) / n
            best = min(best, val)
            cells.append({"n": n, "partition": part.tag, "value": val})
            running.append(best)
    bound = "upper" if isinstance(S, (Subshift, FiniteMap)) else "upper-at-resolution"
    return TEntropyEstimate("partition", cells, best, running, bound,
                            {"partitions": [p.tag for p in partitions], "n_max": n_max})


def _radon_value(T, mu, n: int, max_depth: int, stab_tol: float):
    S = T.system
    m = 1
    prev = None
    while m <= max_depth:
        W = S.words(m, within=False)
        mw = mu.cylinder_mass(W)
        push = _shift_pushforward(T, mu, W, n)
        pos = mw > 0
        dens = np.zeros(len(W))
        dens[pos] = push[pos] / mw[pos]
        if prev is not None:
            pW, pd = prev
            parent = {tuple(w): d for w, d in zip(pW.tolist(), pd)}
            moved = 0.0
            for w, d, q in zip(W.tolist(), dens, mw):
                if q > 0:
                    pdv = parent.get(tuple(w[:-1]), 0.0)
                    if abs(d - pdv) > 1e-10 * max(1.0, abs(pdv)):
                        moved += q
            if moved <= stab_tol:
                with np.errstate(divide="ignore"):
                    logs = np.where(dens[pos] > 0, np.log(np.where(dens[pos] > 0, dens[pos], 1.0)), NEG_INF)
                if np.any(logs == NEG_INF):
                    return NEG_INF, m
                return float(np.dot(mw[pos], logs)) / n, m
        prev = (W, dens)
        m += 1
    raise ValueError(f"density did not stabilise within depth {max_depth} at n={n}")


def t_entropy_radon(T: TransferOperator, mu, n_max: int = 4, max_depth: int = 14,
                    stab_tol: float = 1e-9) -> TEntropyEstimate:
    """``inf_n (1/n) integral ln(d(A*^n mu)_ac / d mu) d mu`` with the density read off
    cylinder masses once it stops changing under refinement."""
    S = T.system
    if isinstance(S, FiniteMap):
        if not isinstance(mu, PeriodicOrbitMeasure):
            raise TypeError("finite-map measures are periodic-orbit measures")
        pts = list(mu.points)
        cells, running, best = [], [], math.inf
        for n in range(1, n_max + 1):
            total = 0.0
            for z in pts:
                lw, y = 0.0, z
                for _ in range(n):
                    lw += float(log_weight(T, np.array([y]))[0])
                    y = int(S.image[y])
                total += lw / len(pts)
            val = total / n if np.isfinite(total) else NEG_INF
            best = min(best, val)
            cells.append({"n": n, "value": val, "depth": 0})
            running.append(best)
        return TEntropyEstimate("radon", cells, best, running, "exact-per-n", {"n_max": n_max})
    if not isinstance(S, Subshift):
        raise TypeError("radon method needs a shift or finite map host")
    if not isinstance(mu, (MarkovMeasure, PeriodicOrbitMeasure)):
        raise TypeError("radon method needs a Markov or periodic-orbit measure")
    cells, running, best = [], [], math.inf
    for n in range(1, n_max + 1):
        val, depth = _radon_value(T, mu, n, max_depth, stab_tol)
        best = min(best, val)
        cells.append({"n": n, "value": val, "depth": depth})
        running.append(best)
    return TEntropyEstimate("radon", cells, best, running, "exact-per-n", {"n_max": n_max})


def closed_form_class(S) -> str | None:
    """Which closed form applies: ``"invertible"`` (single preimages on the essential set),
    ``"expanding"`` (open non-contracting local homeomorphism), or ``None``."""
    if isinstance(S, (CircleRotation, FiniteMap)):
        return "invertible"
    if isinstance(S, Subshift) and S.rule is None:
        return "expanding"
    if isinstance(S, PiecewiseCover) and S.circle and all(
            b.kind == "affine" and abs(b.params[0]) > 1 for b in S.branches):
        return "expanding"
    return None


def _entropy_of(mu, S) -> float:
    if isinstance(mu, LebesgueMeasure) and isinstance(S, PiecewiseCover):
        return math.log(len(S.branches))
    return ks_entropy(mu)


def integral_log_weight(T: TransferOperator, mu) -> float:
    S = T.system
    if isinstance(S, Subshift):
        tab = log_weight_table(T)
        if isinstance(mu, MarkovMeasure):
            W = S.words(tab.depth, within=False)
            m = mu.cylinder_mass(W)
            v = tab(W)
            pos = m > 0
            if np.any(v[pos] == NEG_INF):
                return NEG_INF
            return float(np.dot(m[pos], v[pos]))
        return float(np.mean(tab(np.array([p.head(tab.depth) for p in mu.points]))))
    if isinstance(S, FiniteMap):
        return float(np.mean(log_weight(T, np.array(mu.points, dtype=int))))
    if isinstance(mu, LebesgueMeasure):
        return float(np.mean(log_weight(T, mu.nodes()[:, None])))
    pts = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p in mu.points])
    return float(np.mean(log_weight(T, pts)))


def t_entropy_closed_form(T: TransferOperator, mu) -> float:
    """``integral ln rho d mu`` (invertible case) plus ``h(mu)`` (expanding case)."""
    cls = closed_form_class(T.host)
    if cls is None:
        raise ValueError(f"{type(T.host).__name__}: neither single preimages on the essential set "
                         "nor an open non-contracting local homeomorphism")
    base = integral_log_weight(T, mu)
    if base == NEG_INF:
        return NEG_INF
    return base if cls == "invertible" else base + _entropy_of(mu, T.host)


# ---------------------------------------------------------------------------
# variational principle


def _markov_from_logits(S: Subshift, z: np.ndarray) -> np.ndarray:
    t = S.effective_transitions()
    K = S.alphabet_size
    Z = np.full((K, K), -np.inf)
    Z[t == 1] = z
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def best_markov(T: TransferOperator, psi: CylinderFunction, starts: int = 4, seed: int = 0):
    """Maximise ``mu[psi] + tau(mu)`` over one-step Markov measures (closed-form tau)."""
    S = T.system
    n_free = int(S.effective_transitions().sum())
    rng = np.random.default_rng(seed)
    Tpsi = T.with_potential(psi)

    def objective(z):
        P = _markov_from_logits(S, z)
        try:
            mu = markov_measure(S, P)
        except ValueError:
            return 1e6
        v = t_entropy_closed_form(Tpsi, mu)
        return -v if np.isfinite(v) else 1e6

    best = None
    for s in range(starts):
        z0 = np.zeros(n_free) if s == 0 else rng.normal(size=n_free)
        res = minimize(objective, z0, method="L-BFGS-B", bounds=[(-30, 30)] * n_free)
        if best is None or res.fun < best.fun:
            best = res
    P = _markov_from_logits(S, best.x)
    return -float(best.fun), markov_measure(S, P)


@dataclass
class VPRow:
    psi: str
    family_max: float
    lam: float
    gap: float
    status: str
    argmax: str


def verify_variational_principle(T: TransferOperator, psi_family, measure_family=None,
                                 tol: float = 1e-3, n_max: int = 40) -> list:
    """Per potential: ``max over the family of mu[psi] + tau(mu)`` against ``lambda(psi)``."""
    S = T.system
    rows = []
    for psi in psi_family:
        Tpsi = T.with_potential(psi)
        if isinstance(S, Subshift) and S.rule is None:
            lam = sft_spectral_oracle(S, CylinderFunction(np.exp(log_weight_table(Tpsi).table)))
        else:
            tr = spectral_potential(Tpsi, n_max)
            lam = tr.best
        cands = []
        if measure_family is None and isinstance(S, Subshift):
            v, mu = best_markov(T, psi)
            cands.append((v, f"markov P={np.round(mu.P, 6).tolist()}"))
            for w in periodic_words(S, 3):
                pm = PeriodicOrbitMeasure(S, tuple(w.shift(i) for i in range(len(w.cycle))))
                cands.append((t_entropy_closed_form(Tpsi, pm), f"periodic {w}"))
        else:
            for mu in measure_family or []:
                try:
                    tau = t_entropy_closed_form(T, mu)
                except ValueError:
                    tau = t_entropy_partition(T, mu).headline
                integ = integrate(mu, psi) if tau > NEG_INF else 0.0
                cands.append((integ + tau if tau > NEG_INF else NEG_INF, _label(mu)))
        fam = max(c[0] for c in cands)
        arg = max(cands, key=lambda c: c[0])[1]
        gap = lam - fam
        ok = fam <= lam + tol and abs(gap) <= tol
        rows.append(VPRow(psi.name, float(fam), float(lam), float(gap), "PASS" if ok else "FAIL", arg))
    return rows


def _label(mu) -> str:
    if isinstance(mu, DiracMeasure) or (isinstance(mu, PeriodicOrbitMeasure) and len(mu.points) == 1):
        p = mu.points[0]
        return f"dirac {tuple(float(c) for c in p) if isinstance(p, tuple) else p}"
    if isinstance(mu, PeriodicOrbitMeasure):
        return f"periodic {[str(p) for p in mu.points]}"
    return type(mu).__name__


# ---------------------------------------------------------------------------
# duality


@dataclass
class DualReport:
    value: float
    coefficients: list
    tau: float
    gap: float
    samples: list
    max_violation: float
    iterations: int


def _lambda_of(T: TransferOperator, psi: CylinderFunction) -> float:
    S = T.system
    return sft_spectral_oracle(S, CylinderFunction(np.exp(log_weight_table(T.with_potential(psi)).table)))


def legendre_dual(T: TransferOperator, mu, depth: int = 1, iterations: int = 200, bound: float = 20.0,
                  extra_samples: int = 20, seed: int = 0) -> DualReport:
    """Coordinate ascent of ``mu[psi] - lambda(psi)`` over depth-``depth`` cylinder potentials
    with coefficients in ``[-bound, bound]``; also checks the one-sided bound on random samples."""
    S = T.system
    if not isinstance(S, Subshift) or depth > 3:
        raise ValueError("dual optimisation runs over cylinder potentials of depth <= 3 on a shift")
    K = S.alphabet_size
    W = all_words(K, depth)
    c = np.zeros(len(W))
    tab_shape = (K,) * depth

    def psi_of(coef):
        return CylinderFunction(coef.reshape(tab_shape), "psi")

    def value(coef):
        psi = psi_of(coef)
        return integrate(mu, psi) - _lambda_of(T, psi)

    try:
        tau = t_entropy_closed_form(T, mu)
    except ValueError:
        tau = t_entropy_radon(T, mu).headline
    samples = []
    cur = value(c)
    samples.append(cur)
    it = 0
    for it in range(1, iterations + 1):
        before = cur
        for j in range(len(c)):
            def f(t, j=j):
                cc = c.copy()
                cc[j] = t
                return -value(cc)
            res = minimize_scalar(f, bounds=(-bound, bound), method="bounded", options={"xatol": 1e-10})
            if -res.fun > cur:
                c[j] = res.x
                cur = -res.fun
            samples.append(cur)
        if cur - before < 1e-13:
            break
    rng = np.random.default_rng(seed)
    for _ in range(extra_samples):
        samples.append(value(rng.normal(scale=2.0, size=len(c))))
    viol = max(s - (-tau) for s in samples) if np.isfinite(tau) else NEG_INF
    return DualReport(cur, c.tolist(), tau, (-tau) - cur, samples, viol, it)


# ---------------------------------------------------------------------------
# identity harness


@dataclass
class IdentityRow:
    fixture: str
    identity: str
    lhs: float
    rhs: float
    gap: float
    tolerance: float
    status: str
    note: str = ""

    def as_dict(self) -> dict:
        return jsonable(self.__dict__)


def _row(fixture, name, lhs, rhs, tol, applicable, note="", one_sided=None):
    if not applicable:
        return IdentityRow(fixture, name, lhs, rhs, _gap(lhs, rhs), tol, "NOT-APPLICABLE", note)
    if one_sided == "le":
        ok = lhs <= rhs + tol
    elif one_sided == "ge":
        ok = lhs >= rhs - tol
    else:
        ok = (lhs == rhs) if not (np.isfinite(lhs) and np.isfinite(rhs)) else abs(lhs - rhs) <= tol
    return IdentityRow(fixture, name, lhs, rhs, _gap(lhs, rhs), tol, "PASS" if ok else "FAIL", note)


def _gap(a, b):
    if np.isfinite(a) and np.isfinite(b):
        return float(a - b)
    return 0.0 if a == b else math.inf


@dataclass
class IdentityBundle:
    """Inputs for :func:`cross_check_identities`.

    ``hypotheses`` uses the catalog keys (``local_homeo_on_X_alpha``,
    ``non_contracting``, ``X_alpha_compatible``, ...).  ``lam`` / ``pressure`` /
    ``ell`` are callables of a potential returning a number, so the caller
    chooses schedules and resolutions.  With ``evaluate_inapplicable`` both
    sides of a NOT-APPLICABLE row are still computed and reported.
    """

    fixture: str
    operator: TransferOperator
    psis: list
    hypotheses: dict
    lam: object
    pressure: object = None
    ell: object = None
    tau_pairs: list = field(default_factory=list)
    tol: float = 0.05
    evaluate_inapplicable: bool = False


def cross_check_identities(bundle: IdentityBundle) -> list:
    rows = []
    H = bundle.hypotheses
    lh = bool(H.get("local_homeo_on_X_alpha")) and bool(H.get("non_contracting"))
    compat = bool(H.get("X_alpha_compatible"))
    for psi in bundle.psis:
        lam = bundle.lam(psi)
        if bundle.ell is not None:
            ell = bundle.ell(psi) if (compat or bundle.evaluate_inapplicable) else math.nan
            rows.append(_row(bundle.fixture, f"lambda(psi)=ell(rho*exp(psi)) [{psi.name}]", lam, ell,
                             bundle.tol, compat, "" if compat else "essential-set compatibility not certified"))
        if bundle.pressure is not None:
            P = bundle.pressure(psi) if (lh or bundle.evaluate_inapplicable) else math.nan
            rows.append(_row(bundle.fixture, f"lambda(psi)=P(psi+ln rho) [{psi.name}]", lam, P,
                             bundle.tol, lh, "" if lh else "not a non-contracting local homeomorphism "
                                                            "on the essential set"))
    for name, lhs, rhs, tol in bundle.tau_pairs:
        rows.append(_row(bundle.fixture, name, lhs, rhs, tol, True))
    return rows


__all__ = [
    "PartitionOfUnity", "cylinder_partition", "hat_partition", "TEntropyEstimate", "t_entropy_partition",
    "t_entropy_radon", "t_entropy_closed_form", "closed_form_class", "integral_log_weight",
    "verify_variational_principle", "best_markov", "VPRow", "legendre_dual", "DualReport",
    "IdentityRow", "IdentityBundle", "cross_check_identities",
]
