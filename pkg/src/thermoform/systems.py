"""Model zoo: dynamical systems with metrics and exact inverse branches.

Floating models (piecewise covers, rotations, the square and ladder fixtures)
work on batches of points stored as ``(N, dim)`` float arrays.  Shift points
are exact eventually periodic :class:`Word` values; finite map points are node
ids.  Single-point helpers (:func:`preimages`, :func:`orbit`,
:func:`dn_distance`) accept floats for 1-D models and pairs for 2-D models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

TOL = 1e-12


class NonDiscretePreimageError(ValueError):
    """Preimage set of ``point`` contains the continuum ``[lo, hi]``."""

    def __init__(self, point, lo, hi):
        self.point = point
        self.lo = tuple(np.atleast_1d(lo).tolist())
        self.hi = tuple(np.atleast_1d(hi).tolist())
        super().__init__(f"non-discrete preimage of {point}: box {self.lo}..{self.hi}")


# ---------------------------------------------------------------------------
# restrictions


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite restriction. ``points`` is ``(M, dim)`` for floating models,
    a tuple of node ids for finite maps or a tuple of :class:`Word` for shifts."""

    points: object

    def __post_init__(self):
        p = self.points
        if isinstance(p, np.ndarray) or (len(p) and isinstance(p[0], (float, int, np.floating, tuple, list))
                                        and not isinstance(p[0], Word)):
            arr = np.array(p, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            arr.setflags(write=False)
            object.__setattr__(self, "points", arr)
        else:
            object.__setattr__(self, "points", tuple(p))

    def contains(self, P):
        P = np.asarray(P, dtype=float)
        if len(self.points) == 0:
            return np.zeros(len(P), dtype=bool)
        d = np.max(np.abs(P[:, None, :] - self.points[None, :, :]), axis=2)
        return np.any(d <= 1e-9, axis=1)

    def sample(self, resolution=None, offset=0.0):
        return np.array(self.points)

    def in_box(self, lo, hi):
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        m = np.all((self.points >= lo - TOL) & (self.points <= hi + TOL), axis=1)
        return self.points[m]

    def describe(self):
        pts = self.points.tolist() if isinstance(self.points, np.ndarray) else [str(p) for p in self.points]
        return {"kind": "points", "points": pts}


@dataclass(frozen=True)
class BoxUnion:
    """Finite union of closed axis-aligned boxes; ``boxes[i][d] = (lo, hi)``."""

    boxes: tuple

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(tuple((float(a), float(b)) for a, b in box)
                                                for box in self.boxes))

    @property
    def dim(self):
        return len(self.boxes[0])

    def contains(self, P):
        P = np.asarray(P, dtype=float)
        out = np.zeros(len(P), dtype=bool)
        for box in self.boxes:
            m = np.ones(len(P), dtype=bool)
            for d, (a, b) in enumerate(box):
                m &= (P[:, d] >= a - 1e-9) & (P[:, d] <= b + 1e-9)
            out |= m
        return out

    def sample(self, resolution, offset=0.0):
        chunks = []
        for box in self.boxes:
            axes = []
            for a, b in box:
                if b - a <= TOL:
                    axes.append(np.array([a]))
                else:
                    m = int(round((b - a) / resolution))
                    xs = a + (np.arange(m + 1) + offset) * resolution
                    axes.append(xs[xs <= b + TOL])
            mesh = np.meshgrid(*axes, indexing="ij")
            chunks.append(np.stack([g.ravel() for g in mesh], axis=1))
        P = np.concatenate(chunks)
        _, idx = np.unique(np.round(P, 12), axis=0, return_index=True)
        return P[np.sort(idx)]

    def overlap(self, lo, hi):
        """Closed overlaps of ``[lo, hi]`` with the boxes; empty ones dropped."""
        out = []
        for box in self.boxes:
            a = np.array([max(l, bx[0]) for l, bx in zip(lo, box)])
            b = np.array([min(h, bx[1]) for h, bx in zip(hi, box)])
            if np.all(a <= b + TOL):
                out.append((a, np.maximum(a, b)))
        return out

    def describe(self):
        return {"kind": "boxes", "boxes": [list(map(list, b)) for b in self.boxes]}


@dataclass(frozen=True, eq=False)
class ShiftRestriction:
    """Sub-shift of finite type given by a 0/1 matrix on the host alphabet."""

    transitions: np.ndarray

    def __post_init__(self):
        t = np.array(self.transitions, dtype=np.int64)
        t.setflags(write=False)
        object.__setattr__(self, "transitions", t)

    def describe(self):
        return {"kind": "subshift", "transitions": self.transitions.tolist()}


# ---------------------------------------------------------------------------
# shift points


def _primitive(cycle: tuple) -> tuple:
    n = len(cycle)
    for p in range(1, n + 1):
        if n % p == 0 and cycle[:p] * (n // p) == cycle:
            return cycle[:p]
    return cycle


@dataclass(frozen=True)
class Word:
    """Eventually periodic sequence ``prefix + cycle cycle cycle ...`` in canonical form."""

    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        prefix = tuple(int(s) for s in self.prefix)
        cycle = _primitive(tuple(int(s) for s in self.cycle))
        if not cycle:
            raise ValueError("cycle must be non-empty")
        while prefix and prefix[-1] == cycle[-1]:
            prefix = prefix[:-1]
            cycle = (cycle[-1],) + cycle[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "cycle", cycle)

    @classmethod
    def periodic(cls, cycle) -> "Word":
        return cls((), tuple(cycle))

    def symbol(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def head(self, length: int) -> tuple:
        return tuple(self.symbol(i) for i in range(length))

    def shift(self, k: int = 1) -> "Word":
        if k <= len(self.prefix):
            return Word(self.prefix[k:], self.cycle)
        r = (k - len(self.prefix)) % len(self.cycle)
        return Word((), self.cycle[r:] + self.cycle[:r])

    def prepend(self, s: int) -> "Word":
        return Word((int(s),) + self.prefix, self.cycle)

    @property
    def is_periodic(self) -> bool:
        return not self.prefix

    def __str__(self):
        p = "".join(map(str, self.prefix))
        return f"{p}({''.join(map(str, self.cycle))})"


def word_distance(x: Word, y: Word) -> float:
    """``2**-(k+1)`` where ``k`` is the first index at which ``x`` and ``y`` differ."""
    if x == y:
        return 0.0
    span = max(len(x.prefix), len(y.prefix)) + math.lcm(len(x.cycle), len(y.cycle))
    for k in range(span):
        if x.symbol(k) != y.symbol(k):
            return 2.0 ** -(k + 1)
    return 0.0


def dyadic_sparse_ok(words: np.ndarray, marked: int = 1) -> np.ndarray:
    """For each row ``w``: does ``w 0 0 0 ...`` have at most ``n`` marked symbols
    in every window of length ``2**n`` (``n >= 1``)?"""
    w = np.atleast_2d(words)
    N, L = w.shape
    ones = (w == marked).astype(np.int64)
    padded = np.concatenate([ones, np.zeros((N, L), dtype=np.int64)], axis=1)
    c = np.concatenate([np.zeros((N, 1), dtype=np.int64), np.cumsum(padded, axis=1)], axis=1)
    ok = np.ones(N, dtype=bool)
    n = 1
    while True:
        win = 2 ** n
        if win >= 2 * L:
            ok &= ones.sum(axis=1) <= n
            break
        counts = c[:, win:] - c[:, :-win]
        ok &= counts.max(axis=1) <= n
        n += 1
    return ok


LANGUAGE_RULES: dict[str, Callable[[np.ndarray], np.ndarray]] = {"dyadic_sparse": dyadic_sparse_ok}


# ---------------------------------------------------------------------------
# systems


class SystemModel:
    variant: str = "abstract"
    restriction = None

    def restrict(self, Y):
        return replace(self, restriction=Y)

    def unrestricted(self):
        return replace(self, restriction=None)


@dataclass(frozen=True, eq=False)
class FiniteMap(SystemModel):
    image: np.ndarray
    restriction: PointSet | None = None
    variant: str = field(default="FiniteMap", init=False)

    def __post_init__(self):
        im = np.array(self.image, dtype=np.int64)
        if im.ndim != 1 or np.any(im < 0) or np.any(im >= len(im)):
            raise ValueError("image must map range(n) into itself")
        im.setflags(write=False)
        object.__setattr__(self, "image", im)

    @property
    def nodes(self) -> int:
        return len(self.image)

    def active(self) -> np.ndarray:
        if self.restriction is None:
            return np.arange(self.nodes)
        return np.array(sorted(int(p) for p in np.asarray(self.restriction.points).ravel()))

    def forward(self, x):
        return int(self.image[x])

    def distance(self, x, y) -> float:
        return 0.0 if x == y else 1.0

    def preimages1(self, x, within=False):
        pre = [int(y) for y in np.flatnonzero(self.image == x)]
        if within and self.restriction is not None:
            act = set(self.active().tolist())
            pre = [y for y in pre if y in act]
        return pre

    def sheet_bound(self) -> int:
        return int(np.bincount(self.image, minlength=self.nodes).max())

    def periodic_points(self) -> list[int]:
        out = []
        for x in range(self.nodes):
            y = x
            for _ in range(self.nodes):
                y = self.image[y]
                if y == x:
                    out.append(x)
                    break
        return out

    def cycles(self) -> list[list[int]]:
        seen, out = set(), []
        for x in self.periodic_points():
            if x in seen:
                continue
            cyc = [x]
            y = int(self.image[x])
            while y != x:
                cyc.append(y)
                y = int(self.image[y])
            seen.update(cyc)
            out.append(cyc)
        return out

    def descriptor(self) -> dict:
        return {"variant": self.variant, "image": self.image.tolist()}


@dataclass(frozen=True, eq=False)
class Subshift(SystemModel):
    """One-sided subshift on symbols ``0..K-1``.

    ``rule`` names an extra language constraint from :data:`LANGUAGE_RULES`;
    ``labels`` are display symbols only.
    """

    transitions: np.ndarray
    labels: tuple = ()
    rule: str | None = None
    restriction: object = None
    variant: str = field(default="Subshift", init=False)

    def __post_init__(self):
        t = np.array(self.transitions, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.all((t == 0) | (t == 1)):
            raise ValueError("transition matrix must be 0/1")
        dead = np.flatnonzero(t.sum(axis=1) == 0)
        if len(dead):
            raise ValueError(f"all-zero rows {dead.tolist()}: shift map not total")
        t.setflags(write=False)
        object.__setattr__(self, "transitions", t)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(t.shape[0])))
        if self.rule is not None and self.rule not in LANGUAGE_RULES:
            raise ValueError(f"unknown language rule {self.rule!r}")

    @property
    def alphabet_size(self) -> int:
        return self.transitions.shape[0]

    def effective_transitions(self, within=True) -> np.ndarray:
        t = self.transitions
        if within and isinstance(self.restriction, ShiftRestriction):
            t = t * self.restriction.transitions
        return t

    def live_symbols(self, within=True) -> np.ndarray:
        """Symbols that start an infinite admissible path."""
        t = self.effective_transitions(within)
        live = np.ones(self.alphabet_size, dtype=bool)
        while True:
            new = live & ((t[:, live].sum(axis=1)) > 0)
            if np.array_equal(new, live):
                return live
            live = new

    def admissible(self, words: np.ndarray, within=True) -> np.ndarray:
        w = np.atleast_2d(words)
        t = self.effective_transitions(within)
        ok = np.ones(len(w), dtype=bool)
        if w.shape[1] > 1:
            ok &= np.all(t[w[:, :-1], w[:, 1:]] == 1, axis=1)
        if self.rule is not None:
            ok &= LANGUAGE_RULES[self.rule](w)
        return ok

    def contains(self, x: Word, within=True) -> bool:
        if within and isinstance(self.restriction, PointSet):
            return x in self.restriction.points
        L = len(x.prefix) + 2 * len(x.cycle) + 1
        if self.rule is not None:
            if any(s != 0 for s in x.cycle):
                return False
            L = max(L, 2 * len(x.prefix) + 2)
        return bool(self.admissible(np.array([x.head(L)]), within)[0])

    def words(self, length: int, budget: int = 1 << 21, within=True) -> np.ndarray:
        """All right-extendable admissible words of ``length`` in lexicographic order."""
        t = self.effective_transitions(within)
        live = self.live_symbols(within)
        if within and isinstance(self.restriction, PointSet):
            heads = sorted({x.head(length) for x in self.restriction.points})
            return np.array(heads, dtype=np.int64).reshape(len(heads), length)
        W = np.flatnonzero(live)[:, None].astype(np.int64)
        if length == 0:
            return np.zeros((1, 0), dtype=np.int64)
        for _ in range(length - 1):
            last = W[:, -1]
            cand = []
            for s in range(self.alphabet_size):
                if not live[s]:
                    continue
                m = t[last, s] == 1
                if m.any():
                    cand.append(np.concatenate([W[m], np.full((m.sum(), 1), s)], axis=1))
            W = np.concatenate(cand)
            if self.rule is not None:
                W = W[LANGUAGE_RULES[self.rule](W)]
            order = np.lexsort(W.T[::-1])
            W = W[order]
            if len(W) > budget:
                raise MemoryError(f"{len(W)} words of length {W.shape[1]} exceed budget {budget}")
        return W

    def count_words(self, length: int, within=True) -> int:
        if self.rule is None and not isinstance(self.restriction, PointSet):
            t = self.effective_transitions(within).astype(object)
            live = self.live_symbols(within)
            v = np.array([1 if l else 0 for l in live], dtype=object)
            for _ in range(length - 1):
                v = t.T.dot(v) * np.array([1 if l else 0 for l in live], dtype=object)
            return int(sum(v))
        return len(self.words(length, within=within))

    def forward(self, x: Word) -> Word:
        return x.shift(1)

    def distance(self, x: Word, y: Word) -> float:
        return word_distance(x, y)

    def preimages1(self, x: Word, within=False):
        t = self.effective_transitions(within)
        x0 = x.symbol(0)
        out = []
        for s in range(self.alphabet_size):
            if t[s, x0]:
                y = x.prepend(s)
                if self.rule is not None and not self.contains(y, within=False):
                    continue
                if within and isinstance(self.restriction, PointSet) and y not in self.restriction.points:
                    continue
                out.append(y)
        return out

    def sheet_bound(self) -> int:
        return int(self.transitions.sum(axis=0).max())

    def descriptor(self) -> dict:
        d = {"variant": self.variant, "transitions": self.transitions.tolist(),
             "labels": list(self.labels)}
        if self.rule:
            d["rule"] = self.rule
        return d


class _FloatModel(SystemModel):
    """Shared machinery for models on subsets of R or R^2."""

    dim: int = 1
    periodic: bool = False

    # subclasses implement forward_array, inverse_array, nondiscrete_array, domain_sample

    def contains_array(self, P, within=True):
        P = np.asarray(P, dtype=float)
        if within and self.restriction is not None:
            return self.restriction.contains(P)
        return self.domain_contains(P)

    def sample(self, resolution: float, offset: float = 0.0, within=True) -> np.ndarray:
        if within and self.restriction is not None:
            return self.restriction.sample(resolution, offset)
        return self.domain_sample(resolution, offset)

    def distance_array(self, P, Q):
        D = np.abs(np.asarray(P, dtype=float) - np.asarray(Q, dtype=float))
        if self.periodic:
            D = np.minimum(D, 1.0 - D)
        return D.max(axis=-1)

    def embed(self, P):
        """Coordinates in which the metric is the (optionally periodic) sup-norm."""
        return np.asarray(P, dtype=float)

    @property
    def boxsize(self):
        return 1.0 if self.periodic else None

    def to_points(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(1, self.dim)

    def from_points(self, P):
        P = np.asarray(P)
        if self.dim == 1:
            return [float(p[0]) for p in P]
        return [tuple(float(c) for c in p) for p in P]

    def obs_points(self, P):
        """Batch format handed to observables: ``(N,)`` in 1-D, ``(N, 2)`` in 2-D."""
        P = np.asarray(P)
        return P[:, 0] if self.dim == 1 else P

    def forward(self, x):
        return self.from_points(self.forward_array(self.to_points(x)))[0]

    def distance(self, x, y) -> float:
        return float(self.distance_array(self.to_points(x), self.to_points(y))[0])

    def preimage_points(self, P, within=False, skip_nondiscrete=None):
        """One inverse step for a batch.

        Returns ``(Q, root)``: preimage points and the index of the point of ``P``
        each one belongs to, branch by branch in declared order.  Continuum
        preimages are intersected with the restriction when ``within`` is set;
        if they stay non-discrete, ``skip_nondiscrete(lo, hi)`` decides whether
        to drop them, otherwise :class:`NonDiscretePreimageError` is raised.
        """
        P = np.asarray(P, dtype=float)
        Qs, roots = [], []
        for Q, mask in self.inverse_array(P):
            if within and self.restriction is not None:
                mask = mask & self.restriction.contains(Q)
            idx = np.flatnonzero(mask)
            Qs.append(Q[idx])
            roots.append(idx)
        nd_mask, lo, hi = self.nondiscrete_array(P)
        for i in np.flatnonzero(nd_mask):
            extra = self._resolve_continuum(P[i], lo[i], hi[i], within, skip_nondiscrete)
            if len(extra):
                # drop points already produced by a discrete branch
                have = np.concatenate([q[r == i] for q, r in zip(Qs, roots)]) if Qs else np.zeros((0, self.dim))
                keep = [e for e in extra if not len(have) or np.min(np.max(np.abs(have - e), axis=1)) > 1e-9]
                if keep:
                    Qs.append(np.array(keep))
                    roots.append(np.full(len(keep), i))
        if not Qs:
            return np.zeros((0, self.dim)), np.zeros(0, dtype=np.int64)
        return np.concatenate(Qs), np.concatenate(roots).astype(np.int64)

    def _resolve_continuum(self, x, lo, hi, within, skip):
        Y = self.restriction if within else None
        if isinstance(Y, PointSet):
            return list(Y.in_box(lo, hi))
        pieces = [(lo, hi)] if Y is None else Y.overlap(lo, hi)
        out = []
        for a, b in pieces:
            if np.all(b - a <= TOL):
                out.append(a)
            elif skip is not None and skip(a, b):
                continue
            else:
                raise NonDiscretePreimageError(self.from_points(x[None])[0], a, b)
        return out

    def preimages1(self, x, within=False):
        Q, _ = self.preimage_points(self.to_points(x), within)
        return self.from_points(Q)


@dataclass(frozen=True)
class Branch:
    """Monotone piece on ``[lo, hi]``: ``affine`` (slope, intercept),
    ``power`` (coef, exponent) meaning ``coef * x**exponent``, or ``constant`` (value)."""

    lo: float
    hi: float
    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in ("affine", "power", "constant"):
            raise ValueError(f"unknown branch kind {self.kind!r}")
        if not self.lo < self.hi:
            raise ValueError("branch interval must have lo < hi")
        if self.kind == "affine" and self.params[0] == 0:
            raise ValueError("zero slope: use kind='constant'")

    def value(self, x):
        if self.kind == "affine":
            return self.params[0] * x + self.params[1]
        if self.kind == "power":
            return self.params[0] * np.power(np.maximum(x, 0.0), self.params[1])
        return np.full_like(np.asarray(x, dtype=float), self.params[0])

    def inverse(self, y):
        if self.kind == "affine":
            return (y - self.params[1]) / self.params[0]
        if self.kind == "power":
            with np.errstate(invalid="ignore"):
                return np.power(y / self.params[0], 1.0 / self.params[1])
        raise ValueError("constant branch has no inverse")


@dataclass(frozen=True, eq=False)
class PiecewiseCover(_FloatModel):
    """Interval or circle map given by monotone branches.

    On the circle (``circle=True``) values are taken mod 1 and the domain is
    ``[0, 1)``.  Shared endpoints belong to the branch on their right
    (left-closed rule); on an interval the last branch also owns its right end.
    """

    branches: tuple
    circle: bool = False
    restriction: object = None
    name: str = "piecewise"
    variant: str = field(default="PiecewiseCover", init=False)

    def __post_init__(self):
        br = tuple(sorted((b if isinstance(b, Branch) else Branch(*b) for b in self.branches),
                          key=lambda b: b.lo))
        for a, b in zip(br, br[1:]):
            if b.lo < a.hi - TOL:
                raise ValueError(f"overlapping branch interiors [{a.lo},{a.hi}] and [{b.lo},{b.hi}]")
            if b.lo > a.hi + TOL:
                raise ValueError(f"gap between branches at {a.hi}")
        object.__setattr__(self, "branches", br)
        object.__setattr__(self, "_cuts", np.array([b.lo for b in br] + [br[-1].hi]))

    dim = 1

    @property
    def periodic(self):
        return self.circle

    @property
    def lo(self):
        return self.branches[0].lo

    @property
    def hi(self):
        return self.branches[-1].hi

    def _snap(self, x):
        x = np.asarray(x, dtype=float)
        for c in self._cuts:
            x = np.where(np.abs(x - c) <= 1e-11, c, x)
        return x

    def owner(self, x):
        x = self._snap(x)
        idx = np.searchsorted(self._cuts, x, side="right") - 1
        return np.clip(idx, 0, len(self.branches) - 1)

    def _wrap(self, y):
        if self.circle:
            y = np.mod(y, 1.0)
            y = np.where(y >= 1.0 - 1e-13, 0.0, y)
        return y

    def forward_array(self, P):
        x = np.asarray(P, dtype=float)[:, 0]
        own = self.owner(x)
        y = np.empty_like(x)
        for b, br in enumerate(self.branches):
            m = own == b
            y[m] = br.value(x[m])
        return self._wrap(y)[:, None]

    def inverse_array(self, P):
        y = np.asarray(P, dtype=float)[:, 0]
        out = []
        for b, br in enumerate(self.branches):
            if br.kind == "constant":
                continue
            with np.errstate(invalid="ignore", divide="ignore"):
                x = br.inverse(y)
                if self.circle:
                    # affine circle branches may hit y or y + k for integer k
                    cands = []
                    for k in range(-3, 4):
                        cands.append(br.inverse(y + k))
                    x = np.full_like(y, np.nan)
                    for c in cands:
                        ok = (c >= br.lo - 1e-11) & (c < br.hi - 1e-11)
                        x = np.where(np.isnan(x) & ok, c, x)
            x = self._snap(x)
            valid = np.isfinite(x) & (x >= br.lo - 1e-11) & (x <= br.hi + 1e-11)
            x = np.where(valid, np.clip(x, br.lo, br.hi), 0.0)
            valid &= self.owner(x) == b
            if self.circle:
                valid &= x < 1.0
            img = self.forward_array(x[:, None])[:, 0]
            err = np.abs(img - y)
            if self.circle:
                err = np.minimum(err, 1 - err)
            valid &= err <= 1e-9
            out.append((x[:, None], valid))
        return out

    def nondiscrete_array(self, P):
        y = np.asarray(P, dtype=float)[:, 0]
        mask = np.zeros(len(y), dtype=bool)
        lo = np.zeros((len(y), 1))
        hi = np.zeros((len(y), 1))
        for br in self.branches:
            if br.kind == "constant":
                m = np.abs(self._wrap(np.array(br.params[0])) - y) <= TOL
                mask |= m
                lo[m] = br.lo
                hi[m] = br.hi
        return mask, lo, hi

    def domain_contains(self, P):
        x = np.asarray(P, dtype=float)[:, 0]
        if self.circle:
            return (x >= 0) & (x < 1)
        return (x >= self.lo - TOL) & (x <= self.hi + TOL)

    def domain_sample(self, resolution, offset=0.0):
        m = int(round((self.hi - self.lo) / resolution))
        xs = self.lo + (np.arange(m + 1) + offset) * resolution
        xs = xs[xs < self.hi - TOL] if self.circle else xs[xs <= self.hi + TOL]
        return xs[:, None]

    def sheet_bound(self) -> int:
        return sum(1 for b in self.branches if b.kind != "constant")

    def descriptor(self) -> dict:
        return {"variant": self.variant, "circle": self.circle, "name": self.name,
                "branches": [[b.lo, b.hi, b.kind, list(b.params)] for b in self.branches]}


@dataclass(frozen=True, eq=False)
class CircleRotation(_FloatModel):
    theta: float
    restriction: object = None
    variant: str = field(default="CircleRotation", init=False)

    dim = 1
    periodic = True

    def forward_array(self, P):
        y = np.mod(np.asarray(P, dtype=float) + self.theta, 1.0)
        return np.where(y >= 1.0 - 1e-13, 0.0, y)

    def inverse_array(self, P):
        x = np.mod(np.asarray(P, dtype=float) - self.theta, 1.0)
        x = np.where(x >= 1.0 - 1e-13, 0.0, x)
        return [(x, np.ones(len(x), dtype=bool))]

    def nondiscrete_array(self, P):
        n = len(P)
        return np.zeros(n, dtype=bool), np.zeros((n, 1)), np.zeros((n, 1))

    def domain_contains(self, P):
        x = np.asarray(P)[:, 0]
        return (x >= 0) & (x < 1)

    def domain_sample(self, resolution, offset=0.0):
        m = int(round(1.0 / resolution))
        return ((np.arange(m) + offset) * resolution)[:, None]

    def sheet_bound(self) -> int:
        return 1

    def descriptor(self) -> dict:
        return {"variant": self.variant, "theta": self.theta}


@dataclass(frozen=True, eq=False)
class SquareFixture(_FloatModel):
    """Map of the unit square that folds the region above the line
    ``x2 = (2 - x1)/2`` onto the top edge and stretches the region below it.

    Sup-norm metric.  :meth:`beta` is the inverse of the stretching branch.
    """

    restriction: object = None
    variant: str = field(default="SquareFixture", init=False)

    dim = 2
    periodic = False

    @staticmethod
    def in_lower(P):
        P = np.asarray(P, dtype=float)
        return P[:, 1] <= (2.0 - P[:, 0]) / 2.0 + TOL

    def forward_array(self, P):
        P = np.asarray(P, dtype=float)
        x1, x2 = P[:, 0], P[:, 1]
        low = self.in_lower(P)
        y2 = np.where(low, np.sqrt(np.clip(2.0 * x2 / (2.0 - x1), 0.0, 1.0)), 1.0)
        return np.stack([x1, y2], axis=1)

    @staticmethod
    def beta_array(P):
        P = np.asarray(P, dtype=float)
        return np.stack([P[:, 0], P[:, 1] ** 2 * (2.0 - P[:, 0]) / 2.0], axis=1)

    def beta(self, x):
        return tuple(float(c) for c in self.beta_array(np.asarray(x, dtype=float)[None])[0])

    def inverse_array(self, P):
        return [(self.beta_array(P), np.ones(len(P), dtype=bool))]

    def nondiscrete_array(self, P):
        P = np.asarray(P, dtype=float)
        mask = P[:, 1] >= 1.0 - TOL
        lo = np.stack([P[:, 0], (2.0 - P[:, 0]) / 2.0], axis=1)
        hi = np.stack([P[:, 0], np.ones(len(P))], axis=1)
        # the lower end is the stretching-branch preimage itself
        mask &= hi[:, 1] - lo[:, 1] > TOL
        return mask, lo, hi

    def domain_contains(self, P):
        P = np.asarray(P)
        return np.all((P >= -TOL) & (P <= 1 + TOL), axis=1)

    def domain_sample(self, resolution, offset=0.0):
        return BoxUnion((((0, 1), (0, 1)),)).sample(resolution, offset)

    def sheet_bound(self) -> int:
        return 1

    def descriptor(self) -> dict:
        return {"variant": self.variant}


@dataclass(frozen=True, eq=False)
class LadderFixture(_FloatModel):
    """``[0,1] x D`` with ``D = {0} U {2**-n : 0 <= n <= levels}``.

    Rung ``2**-n`` moves up to ``2**-(n-1)``, the bottom rung ``0`` is fixed
    pointwise and the top rung ``1`` carries ``t -> sqrt(t)``.  The rung
    ``2**-levels`` has no represented preimage (truncation of the countable ladder).
    """

    levels: int = 12
    restriction: object = None
    variant: str = field(default="LadderFixture", init=False)

    dim = 2
    periodic = False

    def rungs(self) -> np.ndarray:
        return np.array([0.0] + [2.0 ** -n for n in range(self.levels + 1)])

    @staticmethod
    def _level(y):
        with np.errstate(divide="ignore"):
            return np.where(y > 0, np.rint(-np.log2(np.where(y > 0, y, 1.0))), -1).astype(int)

    def forward_array(self, P):
        P = np.asarray(P, dtype=float)
        t, y = P[:, 0], P[:, 1]
        lev = self._level(y)
        t2 = np.where(lev == 0, np.sqrt(t), t)
        y2 = np.where(lev >= 1, 2.0 ** -(lev - 1.0), y)
        return np.stack([t2, y2], axis=1)

    def inverse_array(self, P):
        P = np.asarray(P, dtype=float)
        t, y = P[:, 0], P[:, 1]
        lev = self._level(y)
        ones = np.ones(len(P), dtype=bool)
        # rung 0 -> itself; rung 2^-m -> rung 2^-(m+1)
        down = np.stack([t, np.where(lev >= 0, 2.0 ** -(lev + 1.0), 0.0)], axis=1)
        down_ok = (lev < 0) | (lev + 1 <= self.levels)
        top = np.stack([t ** 2, y], axis=1)
        return [(down, down_ok & ones), (top, lev == 0)]

    def nondiscrete_array(self, P):
        n = len(P)
        return np.zeros(n, dtype=bool), np.zeros((n, 2)), np.zeros((n, 2))

    def domain_contains(self, P):
        P = np.asarray(P, dtype=float)
        r = self.rungs()
        on = np.min(np.abs(P[:, 1:2] - r[None, :]), axis=1) <= 1e-12
        return on & (P[:, 0] >= -TOL) & (P[:, 0] <= 1 + TOL)

    def domain_sample(self, resolution, offset=0.0):
        return rungs_boxes(0.0, 1.0, self.levels).sample(resolution, offset)

    def sheet_bound(self) -> int:
        return 2

    def descriptor(self) -> dict:
        return {"variant": self.variant, "levels": self.levels}


def rungs_boxes(t0: float, t1: float, levels: int) -> BoxUnion:
    ys = [0.0] + [2.0 ** -n for n in range(levels + 1)]
    return BoxUnion(tuple(((t0, t1), (y, y)) for y in ys))


@dataclass(frozen=True, eq=False)
class DisjointUnion(SystemModel):
    """Disjoint union; points are ``(component, point)``; distinct components are at distance 1."""

    components: tuple
    restriction: object = None
    variant: str = field(default="DisjointUnion", init=False)

    def forward(self, x):
        k, p = x
        return (k, self.components[k].forward(p))

    def distance(self, x, y) -> float:
        if x[0] != y[0]:
            return 1.0
        return self.components[x[0]].distance(x[1], y[1])

    def preimages1(self, x, within=False):
        k, p = x
        return [(k, q) for q in self.components[k].preimages1(p, within)]

    def sheet_bound(self) -> int:
        return max(c.sheet_bound() for c in self.components)

    def descriptor(self) -> dict:
        return {"variant": self.variant, "components": [c.descriptor() for c in self.components]}


# ---------------------------------------------------------------------------
# builders


def build_subshift(alphabet_size: int, transitions, labels=(), rule=None) -> Subshift:
    t = np.asarray(transitions)
    if t.shape != (alphabet_size, alphabet_size):
        raise ValueError(f"expected a {alphabet_size}x{alphabet_size} matrix, got {t.shape}")
    return Subshift(t, tuple(labels), rule)


def build_piecewise_cover(branches: Sequence, circle: bool = False, name: str = "piecewise") -> PiecewiseCover:
    return PiecewiseCover(tuple(branches), circle, None, name)


def build_square_fixture() -> SquareFixture:
    return SquareFixture()


def build_ladder_fixture(levels: int = 12) -> LadderFixture:
    return LadderFixture(levels)


def build_finite_map(nodes: int, image) -> FiniteMap:
    image = list(image)
    if len(image) != nodes:
        raise ValueError("image must list a target for every node")
    return FiniteMap(np.array(image))


def build_circle_rotation(theta: float) -> CircleRotation:
    return CircleRotation(float(theta) % 1.0)


def doubling_map() -> PiecewiseCover:
    return expanding_circle_map(2)


def expanding_circle_map(degree: int) -> PiecewiseCover:
    brs = [Branch(b / degree, (b + 1) / degree, "affine", (float(degree), -float(b))) for b in range(degree)]
    return PiecewiseCover(tuple(brs), True, None, f"x->{degree}x mod 1")


# ---------------------------------------------------------------------------
# single-point operations


def _dedupe(points: list) -> list:
    out = []
    for p in points:
        if isinstance(p, (float, tuple)) and not isinstance(p, Word):
            if any(_close(p, q) for q in out):
                continue
        elif p in out:
            continue
        out.append(p)
    return out


def _is_union_point(p) -> bool:
    return isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], int) and not isinstance(p[1], (int,))


def _close(p, q) -> bool:
    if _is_union_point(p) or _is_union_point(q):
        return _is_union_point(p) and _is_union_point(q) and p[0] == q[0] and _close(p[1], q[1])
    if isinstance(p, Word) or isinstance(q, Word):
        return p == q
    return bool(np.max(np.abs(np.atleast_1d(np.asarray(p, float)) - np.atleast_1d(np.asarray(q, float)))) <= 1e-12)


def preimages(S: SystemModel, x, n: int = 1, within_restriction: bool = False) -> list:
    """Exact ``n``-th preimage set of ``x`` (deduplicated)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    level = [x]
    for _ in range(n):
        nxt = []
        for p in level:
            nxt.extend(S.preimages1(p, within_restriction))
        level = _dedupe(nxt)
    return level


def orbit(S: SystemModel, x, n: int, step: Callable | None = None) -> list:
    """``(x, a x, ..., a^{n-1} x)`` for the forward map ``a`` (or ``step`` if given)."""
    f = step or S.forward
    out = []
    for _ in range(n):
        out.append(x)
        x = f(x)
    return out


def dn_distance(S: SystemModel, x, y, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(S.distance(a, b) for a, b in zip(orbit(S, x, n), orbit(S, y, n)))


# ---------------------------------------------------------------------------
# descriptors


def restriction_from_descriptor(d: dict | None):
    if d is None:
        return None
    kind = d["kind"]
    if kind == "points":
        return PointSet(d["points"])
    if kind == "boxes":
        return BoxUnion(tuple(tuple(tuple(iv) for iv in box) for box in d["boxes"]))
    if kind == "subshift":
        return ShiftRestriction(np.array(d["transitions"]))
    raise ValueError(f"unknown restriction kind {kind!r}")


def from_descriptor(d: dict) -> SystemModel:
    """Build a system from its JSON-compatible descriptor (see README for the schema)."""
    v = d.get("variant")
    if v == "FiniteMap":
        S = build_finite_map(len(d["image"]), d["image"])
    elif v == "Subshift":
        t = d["transitions"]
        S = build_subshift(len(t), t, d.get("labels", ()), d.get("rule"))
    elif v == "PiecewiseCover":
        S = build_piecewise_cover([Branch(b[0], b[1], b[2], tuple(b[3])) for b in d["branches"]],
                                  d.get("circle", False), d.get("name", "piecewise"))
    elif v == "CircleRotation":
        S = build_circle_rotation(d["theta"])
    elif v == "SquareFixture":
        S = build_square_fixture()
    elif v == "LadderFixture":
        S = build_ladder_fixture(d.get("levels", 12))
    elif v == "DisjointUnion":
        S = DisjointUnion(tuple(from_descriptor(c) for c in d["components"]))
    else:
        raise ValueError(f"variant: unknown system variant {v!r}")
    if d.get("restriction") is not None:
        S = S.restrict(restriction_from_descriptor(d["restriction"]))
    return S


def to_descriptor(S: SystemModel) -> dict:
    d = S.descriptor()
    if S.restriction is not None:
        d["restriction"] = S.restriction.describe()
    return d
