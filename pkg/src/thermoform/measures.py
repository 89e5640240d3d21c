"""Invariant and empirical measures, essential sets, and maximum cycle means."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from .observables import CylinderFunction, NodeFunction, Observable, all_words
from .systems import (FiniteMap, PointSet, Subshift, SystemModel, Word, _FloatModel,
                      LANGUAGE_RULES)

MAX_CYLINDER_DEPTH = 16


# ---------------------------------------------------------------------------
# measure types


class InvariantMeasure:
    host: SystemModel
    variant: str = "abstract"

    def describe(self) -> dict:
        return {"variant": self.variant, "entropy": ks_entropy(self)}


@dataclass(frozen=True, eq=False)
class MarkovMeasure(InvariantMeasure):
    host: Subshift
    P: np.ndarray
    pi: np.ndarray
    variant: str = field(default="Markov", init=False)

    def cylinder_mass(self, words) -> np.ndarray:
        w = np.atleast_2d(np.asarray(words, dtype=np.int64))
        if w.shape[1] == 0:
            return np.ones(len(w))
        m = self.pi[w[:, 0]].copy()
        for i in range(w.shape[1] - 1):
            m *= self.P[w[:, i], w[:, i + 1]]
        return m

    def describe(self) -> dict:
        return {"variant": self.variant, "P": self.P.tolist(), "pi": self.pi.tolist(),
                "entropy": ks_entropy(self)}


@dataclass(frozen=True, eq=False)
class PeriodicOrbitMeasure(InvariantMeasure):
    """Uniform measure on a periodic orbit; ``points`` lists the whole cycle."""

    host: SystemModel
    points: tuple
    variant: str = field(default="PeriodicOrbit", init=False)

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("empty cycle")
        y = self.host.forward(pts[-1])
        if not _same_point(self.host, y, pts[0]):
            raise ValueError("points do not form a cycle")
        for a, b in zip(pts, pts[1:]):
            if not _same_point(self.host, self.host.forward(a), b):
                raise ValueError("points do not form a cycle")
        object.__setattr__(self, "points", pts)

    def cylinder_mass(self, words) -> np.ndarray:
        w = np.atleast_2d(np.asarray(words, dtype=np.int64))
        L = w.shape[1]
        heads = {}
        for p in self.points:
            h = p.head(L)
            heads[h] = heads.get(h, 0) + 1
        return np.array([heads.get(tuple(r), 0) for r in w.tolist()], dtype=float) / len(self.points)

    def describe(self) -> dict:
        return {"variant": self.variant, "points": [str(p) for p in self.points], "entropy": 0.0}


class DiracMeasure(PeriodicOrbitMeasure):
    variant = "Dirac"

    def __init__(self, host, point):
        super().__init__(host, (point,))
        object.__setattr__(self, "variant", "Dirac")

    @property
    def point(self):
        return self.points[0]


@dataclass(frozen=True, eq=False)
class LebesgueMeasure(InvariantMeasure):
    """Haar measure on the circle; integrals by the midpoint rule."""

    host: SystemModel
    quadrature: int = 1 << 14
    variant: str = field(default="Lebesgue", init=False)

    def nodes(self) -> np.ndarray:
        return (np.arange(self.quadrature) + 0.5) / self.quadrature


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniform atoms on the first ``n`` orbit points of ``y``."""

    host: SystemModel
    y: object
    n: int

    def atoms(self) -> list:
        from .systems import orbit
        return orbit(self.host, self.y, self.n)


def _same_point(S, a, b) -> bool:
    if isinstance(a, (Word, int, np.integer)):
        return a == b
    return S.distance(a, b) <= 1e-12


# ---------------------------------------------------------------------------
# constructors and closed forms


def _classes(P: np.ndarray):
    G = nx.DiGraph()
    G.add_nodes_from(range(len(P)))
    G.add_edges_from(zip(*np.nonzero(P > 0)))
    comps = [sorted(c) for c in nx.strongly_connected_components(G)]
    closed = [c for c in comps if all(set(G.successors(v)) <= set(c) for v in c)]
    return sorted(comps), sorted(closed)


def stationary_vector(P: np.ndarray, tol: float = 1e-14, max_iter: int = 200000) -> np.ndarray:
    """Dominant left fixed vector of a stochastic matrix by power iteration on ``(I + P)/2``."""
    comps, closed = _classes(P)
    if len(closed) != 1:
        raise ValueError(f"reducible chain: closed classes {closed} (communicating classes {comps})")
    K = len(P)
    lazy = 0.5 * (np.eye(K) + P)
    v = np.zeros(K)
    v[closed[0]] = 1.0 / len(closed[0])
    for _ in range(max_iter):
        w = v @ lazy
        w /= w.sum()
        if np.abs(w - v).sum() <= tol:
            v = w
            break
        v = w
    resid = np.abs(v @ P - v).sum()
    if resid > 1e-12:
        raise ArithmeticError(f"stationary vector residual {resid:.2e}")
    return v


def markov_measure(S: Subshift, P) -> MarkovMeasure:
    P = np.array(P, dtype=float)
    K = S.alphabet_size
    if P.shape != (K, K):
        raise ValueError(f"P must be {K}x{K}")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
        raise ValueError("P must be stochastic")
    if np.any((P > 0) & (S.transitions == 0)):
        raise ValueError("P charges a forbidden transition")
    pi = stationary_vector(P)
    P.setflags(write=False)
    pi.setflags(write=False)
    return MarkovMeasure(S, P, pi)


def bernoulli(S: Subshift, p) -> MarkovMeasure:
    p = np.asarray(p, dtype=float)
    return markov_measure(S, np.tile(p, (len(p), 1)))


def ks_entropy(mu) -> float:
    if isinstance(mu, MarkovMeasure):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(mu.P > 0, mu.P * np.log(mu.P), 0.0)
        return float(-(mu.pi[:, None] * terms).sum())
    if isinstance(mu, (PeriodicOrbitMeasure, LebesgueMeasure)):
        return 0.0
    raise TypeError(f"no closed-form entropy for {type(mu).__name__}")


def integrate(mu, f: Observable, max_depth: int = MAX_CYLINDER_DEPTH) -> float:
    """``mu[f]``: exact on cylinder functions and atomic measures, midpoint rule on Lebesgue."""
    if isinstance(mu, MarkovMeasure):
        if not isinstance(f, CylinderFunction):
            raise TypeError("Markov measures integrate cylinder functions only")
        if f.depth > max_depth:
            raise ValueError(f"observable depth {f.depth} exceeds truncation; required depth {f.depth}")
        if f.depth == 0:
            return float(f.table)
        W = mu.host.words(f.depth, within=False)
        return float(np.dot(mu.cylinder_mass(W), f(W)))
    if isinstance(mu, EmpiricalMeasure):
        return float(np.mean(_eval_points(mu.host, f, mu.atoms())))
    if isinstance(mu, PeriodicOrbitMeasure):
        return float(np.mean(_eval_points(mu.host, f, list(mu.points))))
    if isinstance(mu, LebesgueMeasure):
        return float(np.mean(f(mu.nodes())))
    raise TypeError(f"cannot integrate against {type(mu).__name__}")


def _eval_points(S, f, pts):
    if isinstance(S, Subshift):
        d = max(getattr(f, "depth", 1), 1)
        return f(np.array([p.head(d) for p in pts]))
    if isinstance(S, FiniteMap):
        return f(np.array(pts, dtype=int))
    P = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p in pts])
    return f(S.obs_points(P))


# ---------------------------------------------------------------------------
# essential points


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return self.status == "POSITIVE"


def frequency_threshold(horizon: int) -> float:
    return max(1.0 / (2 * horizon), horizon ** -0.5)


def _tail_verdict(hits: np.ndarray, horizon: int, theta: float) -> np.ndarray:
    """``hits``: boolean (probes, horizon).  Frequencies are measured over the window
    starting at ``horizon // 2``; a probe passes if its running frequency exceeds
    ``theta`` for at least half of the tail."""
    h0 = horizon // 2
    tail = hits[:, h0:].astype(float)
    c = np.cumsum(tail, axis=1)
    n = np.arange(1, tail.shape[1] + 1)
    freq = c / n
    passed = (freq > theta).sum(axis=1) >= 0.5 * tail.shape[1]
    return passed, freq[:, -1]


def _shift_ball_depth(radius: float) -> int:
    """Smallest m with 2**-(m+1) < radius: the ball is the depth-m cylinder."""
    m = 0
    while 2.0 ** -(m + 1) >= radius:
        m += 1
    return m


def _probe_array(S: Subshift, y, length: int) -> np.ndarray:
    if isinstance(y, Word):
        return np.array(y.head(length), dtype=np.int64)
    arr = np.asarray(y, dtype=np.int64)
    if len(arr) < length:
        arr = np.concatenate([arr, np.zeros(length - len(arr), dtype=np.int64)])
    return arr[:length]


def is_essential(S: SystemModel, x, radius: float, horizon: int, probe_set, theta: float | None = None) -> Verdict:
    """Empirical check of "some orbit visits ``B(x, radius)`` with positive upper frequency"."""
    if radius <= 0 or horizon < 2:
        raise ValueError("radius > 0 and horizon >= 2 required")
    theta = frequency_threshold(horizon) if theta is None else theta
    probes = list(probe_set)
    if isinstance(S, Subshift):
        m = _shift_ball_depth(radius)
        target = np.array(x.head(m) if isinstance(x, Word) else x[:m], dtype=np.int64)
        hits = []
        for y in probes:
            seq = _probe_array(S, y, horizon + m)
            if m == 0:
                hits.append(np.ones(horizon, dtype=bool))
                continue
            win = np.lib.stride_tricks.sliding_window_view(seq, m)[:horizon]
            hits.append(np.all(win == target, axis=1))
        hits = np.array(hits)
    elif isinstance(S, FiniteMap):
        hits = []
        for y in probes:
            o, z = [], int(y)
            for _ in range(horizon):
                o.append(z)
                z = int(S.image[z])
            d = np.array([0.0 if v == x else 1.0 for v in o])
            hits.append(d < radius)
        hits = np.array(hits)
    else:
        Y = np.array([np.atleast_1d(np.asarray(y, dtype=float)) for y in probes])
        X = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
        hits = np.zeros((len(Y), horizon), dtype=bool)
        Z = Y
        for i in range(horizon):
            hits[:, i] = S.distance_array(Z, X) < radius
            Z = S.forward_array(Z)
    passed, final = _tail_verdict(hits, horizon, theta)
    details = {"radius": radius, "horizon": horizon, "threshold": theta, "probes": len(probes)}
    if passed.any():
        i = int(np.flatnonzero(passed)[0])
        y = probes[i]
        return Verdict("POSITIVE", {"probe": str(y) if isinstance(y, Word) else y,
                                    "frequency": float(final[i])}, details)
    return Verdict("NEGATIVE-AT-RESOLUTION", None, details)


@dataclass(frozen=True)
class EssentialSet:
    points: list
    method: str
    exact: bool
    declared: object = None
    details: dict = field(default_factory=dict)


def _float_essential(S: _FloatModel, resolution: float, horizon: int, theta: float, probes=None):
    C = S.sample(resolution, 0.0, within=False)
    Y = C if probes is None else np.asarray(probes, dtype=float).reshape(-1, S.dim)
    radius = 0.49 * resolution
    Z = Y
    for _ in range(horizon // 2):
        Z = S.forward_array(Z)
    tree = cKDTree(S.embed(C), boxsize=S.boxsize)
    tail = horizon - horizon // 2
    counts: dict = {}
    traj = np.empty((len(Y), tail, S.dim))
    for i in range(tail):
        traj[:, i] = Z
        Z = S.forward_array(Z)
    flat = traj.reshape(-1, S.dim)
    uniq, inv = np.unique(np.round(flat, 12), axis=0, return_inverse=True)
    inv = inv.ravel()
    near = tree.query_ball_point(S.embed(uniq), r=radius, p=np.inf)
    probe_of = np.repeat(np.arange(len(Y)), tail)
    time_of = np.tile(np.arange(tail), len(Y))
    for u, cand in enumerate(near):
        if not cand:
            continue
        rows = np.flatnonzero(inv == u)
        for c in cand:
            counts.setdefault(c, []).append(rows)
    keep = []
    for c, rows in sorted(counts.items()):
        rows = np.concatenate(rows)
        hits = np.zeros((len(Y), tail), dtype=bool)
        hits[probe_of[rows], time_of[rows]] = True
        full = np.concatenate([np.zeros((len(Y), horizon // 2), dtype=bool), hits], axis=1)
        passed, _ = _tail_verdict(full, horizon, theta)
        if passed.any():
            keep.append(c)
    return C[keep]


def essential_set(S: SystemModel, resolution: float = 2.0 ** -10, horizon: int = 256,
                  depth: int = 4, probes=None, declared=None) -> EssentialSet:
    """Exact cycle union on finite maps; witnessed candidate cells otherwise."""
    if isinstance(S, FiniteMap):
        pts = sorted(S.periodic_points())
        return EssentialSet(pts, "cycles", True, declared)
    theta = frequency_threshold(horizon)
    if isinstance(S, Subshift):
        reps = [Word(tuple(w), (int(np.flatnonzero(S.live_symbols())[0]),)) for w in S.words(depth)]
        probe_list = list(probes) if probes is not None else shift_probes(S, depth, horizon)
        radius = 2.0 ** -depth
        pts = [r for r in reps if is_essential(S, r, radius, horizon, probe_list, theta).positive]
        return EssentialSet(pts, f"cylinders depth {depth}", False, declared,
                            {"horizon": horizon, "threshold": theta, "probes": len(probe_list)})
    pts = _float_essential(S, resolution, horizon, theta, probes)
    return EssentialSet(S.from_points(pts), f"grid {resolution:g}", False, declared,
                        {"horizon": horizon, "threshold": theta, "resolution": resolution})


def periodic_words(S: Subshift, max_period: int) -> list[Word]:
    """Periodic points of period at most ``max_period`` (one per orbit point)."""
    out = set()
    for p in range(1, max_period + 1):
        for w in S.words(p, within=False):
            cyc = tuple(int(s) for s in w)
            rep = np.array([cyc * max(2, 64 // p + 2)])
            if S.admissible(rep, within=False)[0] and S.transitions[cyc[-1], cyc[0]]:
                if S.rule is None or LANGUAGE_RULES[S.rule](np.array([cyc * (1024 // p + 2)]))[0]:
                    out.add(Word.periodic(cyc))
    return sorted(out, key=lambda w: (len(w.cycle), w.cycle))


def dense_sequence(S: Subshift, length: int, prefer: int = 1) -> np.ndarray:
    """Greedy admissible sequence placing ``prefer`` whenever allowed."""
    seq = []
    for _ in range(length):
        ok = False
        for s in [prefer] + [t for t in range(S.alphabet_size) if t != prefer]:
            cand = np.array([seq + [s]])
            if (not seq or S.transitions[seq[-1], s]) and (S.rule is None or LANGUAGE_RULES[S.rule](cand)[0]):
                seq.append(s)
                ok = True
                break
        if not ok:
            raise ValueError("dead end while generating sequence")
    return np.array(seq, dtype=np.int64)


def shift_probes(S: Subshift, depth: int, horizon: int) -> list:
    probes: list = periodic_words(S, max(depth + 2, 6))
    if S.rule is not None:
        probes.append(dense_sequence(S, horizon + depth + 1))
    return probes


# ---------------------------------------------------------------------------
# non-wandering sets


def nonwandering_chain(S: SystemModel, max_levels: int = 4, depth: int = 4, n_max: int = 256) -> list:
    """``Omega_1 >= Omega_2 >= ...`` until stabilisation.

    Finite maps: exact.  Subshifts: each level is the set of depth-``depth``
    cylinders that return to themselves within ``n_max`` steps inside the
    previous level.
    """
    if isinstance(S, FiniteMap):
        level = set(range(S.nodes))
        chain = []
        for _ in range(max_levels):
            img = S.image
            nxt = set()
            for x in level:
                y = x
                for _ in range(len(level)):
                    y = int(img[y])
                    if y not in level:
                        break
                    if y == x:
                        nxt.add(x)
                        break
            chain.append(sorted(nxt))
            if nxt == level:
                break
            level = nxt
        return chain
    if isinstance(S, Subshift):
        words = [tuple(w) for w in S.words(depth)]
        level = set(words)
        chain = []
        for _ in range(max_levels):
            nxt = {w for w in level if _returns(S, w, n_max, level)}
            chain.append(sorted(nxt))
            if nxt == level:
                break
            level = nxt
        return chain
    raise TypeError("non-wandering chain needs a finite map or a subshift")


def _returns(S: Subshift, w: tuple, n_max: int, allowed: set) -> bool:
    m = len(w)
    t = S.transitions
    for n in range(1, n_max + 1):
        if n < m:
            if w[n:] != w[:m - n]:
                continue
            v = w + w[m - n:]
        elif S.rule is None:
            # path of n - m + 1 steps from w[-1] to w[0]
            if n == m:
                if not t[w[-1], w[0]]:
                    continue
                v = w + w
            else:
                v = _bridge(S, w, n - m)
                if v is None:
                    continue
        else:
            v = w + (0,) * (n - m) + w
        arr = np.array([v])
        if not S.admissible(arr)[0]:
            continue
        if all(tuple(v[i:i + m]) in allowed for i in range(0, n + 1, max(1, n))):
            return True
    return False


def _bridge(S: Subshift, w: tuple, gap: int):
    t = S.transitions
    # breadth-first over intermediate symbols
    frontier = {w[-1]: ()}
    for _ in range(gap):
        nxt = {}
        for s, path in frontier.items():
            for r in np.flatnonzero(t[s]):
                nxt.setdefault(int(r), path + (int(r),))
        frontier = nxt
    for s, path in frontier.items():
        if t[s, w[0]]:
            return w + path + w
    return None


# ---------------------------------------------------------------------------
# maximum cycle mean


@dataclass(frozen=True)
class CycleMean:
    value: float
    cycle: list


def max_cycle_mean(n: int, edges) -> CycleMean:
    """Karp's algorithm for the maximum mean cycle of a weighted digraph.

    ``edges`` is a list of ``(u, v, w)``; ``w = -inf`` marks an unusable edge.
    Raises ``ValueError`` when the graph has no cycle.
    """
    edges = [(int(u), int(v), float(w)) for u, v, w in edges]
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    G.add_edges_from((u, v) for u, v, _ in edges)
    try:
        nx.find_cycle(G)
    except nx.NetworkXNoCycle:
        raise ValueError("graph has no cycle: no invariant measure") from None
    live = [(u, v, w) for u, v, w in edges if w > -math.inf]
    if not live:
        return CycleMean(-math.inf, [])
    U = np.array([e[0] for e in live])
    V = np.array([e[1] for e in live])
    Wt = np.array([e[2] for e in live])
    D = np.full((n + 1, n), -np.inf)
    D[0] = 0.0
    for k in range(1, n + 1):
        np.maximum.at(D[k], V, D[k - 1, U] + Wt)
    best = -math.inf
    for v in range(n):
        if D[n, v] == -np.inf:
            continue
        vals = [(D[n, v] - D[k, v]) / (n - k) for k in range(n) if D[k, v] > -np.inf]
        best = max(best, min(vals))
    if best == -math.inf:
        return CycleMean(-math.inf, [])
    return CycleMean(best, _critical_cycle(n, U, V, Wt, best))


def _critical_cycle(n, U, V, Wt, lam) -> list:
    w = Wt - lam
    p = np.zeros(n)
    for _ in range(n + 1):
        q = p.copy()
        np.maximum.at(q, V, p[U] + w)
        if np.allclose(q, p, atol=0, rtol=0):
            break
        p = q
    scale = 1e-9 * max(1.0, float(np.abs(Wt).max()))
    tight = np.abs(p[U] + w - p[V]) <= scale * n
    G = nx.DiGraph()
    G.add_edges_from(zip(U[tight].tolist(), V[tight].tolist()))
    try:
        cyc = nx.find_cycle(G)
    except nx.NetworkXNoCycle:
        return []
    return [int(e[0]) for e in cyc]


def brute_force_max_cycle_mean(n: int, edges) -> float:
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    wt = {}
    for u, v, w in edges:
        G.add_edge(int(u), int(v))
        wt[(int(u), int(v))] = float(w)
    best = -math.inf
    found = False
    for cyc in nx.simple_cycles(G):
        found = True
        s = sum(wt[(cyc[i], cyc[(i + 1) % len(cyc)])] for i in range(len(cyc)))
        best = max(best, s / len(cyc))
    if not found:
        raise ValueError("graph has no cycle")
    return best


def max_ergodic_average(S: SystemModel, w: Observable):
    """``max`` over ergodic measures of ``integral w`` as a maximum cycle mean.

    Returns ``(value, PeriodicOrbitMeasure | None)``.
    """
    if isinstance(S, FiniteMap):
        vals = w(np.arange(S.nodes)) if not isinstance(w, NodeFunction) else w.values
        edges = [(x, int(S.image[x]), vals[x]) for x in range(S.nodes)]
        res = max_cycle_mean(S.nodes, edges)
        mu = None
        if res.cycle:
            mu = PeriodicOrbitMeasure(S, tuple(_order_cycle(S, res.cycle)))
        return res.value, mu
    if isinstance(S, Subshift):
        if not isinstance(w, CylinderFunction):
            raise TypeError("shift weights must be cylinder functions")
        k = max(w.depth, 1)
        nodes = [tuple(r) for r in S.words(k)]
        index = {u: i for i, u in enumerate(nodes)}
        vals = w(np.array(nodes)) if w.depth else np.full(len(nodes), float(w.table))
        t = S.effective_transitions()
        edges = []
        for u in nodes:
            for s in range(S.alphabet_size):
                if t[u[-1], s]:
                    v = u[1:] + (s,)
                    if v in index:
                        edges.append((index[u], index[v], vals[index[u]]))
        res = max_cycle_mean(len(nodes), edges)
        mu = None
        if res.cycle:
            cyc = tuple(nodes[i][0] for i in res.cycle)
            p = Word.periodic(cyc)
            mu = PeriodicOrbitMeasure(S, tuple(p.shift(i) for i in range(len(p.cycle))))
        return res.value, mu
    raise TypeError("max_ergodic_average needs a finite map or a subshift")


def _order_cycle(S: FiniteMap, nodes: list) -> list:
    x = nodes[0]
    out = [x]
    y = int(S.image[x])
    while y != x:
        out.append(y)
        y = int(S.image[y])
    return out


def support_within(mu, S_alpha_points, S: SystemModel) -> bool:
    """Atoms of an atomic measure lie in the given finite set."""
    if isinstance(mu, PeriodicOrbitMeasure):
        pts = set(S_alpha_points) if not isinstance(S_alpha_points, PointSet) else None
        if pts is not None:
            return all(p in pts for p in mu.points)
        return bool(np.all(S_alpha_points.contains(np.array([np.atleast_1d(p) for p in mu.points]))))
    return True


def cylinder_invariance_defect(mu, depth: int) -> float:
    """``max |mu(shift^-1 [w]) - mu([w])|`` over cylinders of the given depth."""
    S = mu.host
    W = S.words(depth, within=False)
    lhs = np.zeros(len(W))
    for s in range(S.alphabet_size):
        ext = np.concatenate([np.full((len(W), 1), s), W], axis=1)
        ok = S.admissible(ext, within=False)
        lhs += np.where(ok, mu.cylinder_mass(ext), 0.0)
    return float(np.abs(lhs - mu.cylinder_mass(W)).max())


__all__ = [
    "InvariantMeasure", "MarkovMeasure", "PeriodicOrbitMeasure", "DiracMeasure", "LebesgueMeasure",
    "EmpiricalMeasure", "markov_measure", "bernoulli", "stationary_vector", "ks_entropy", "integrate",
    "Verdict", "is_essential", "essential_set", "EssentialSet", "nonwandering_chain",
    "max_cycle_mean", "brute_force_max_cycle_mean", "max_ergodic_average", "CycleMean",
    "periodic_words", "dense_sequence", "shift_probes", "cylinder_invariance_defect",
    "all_words",
]
