"""Real-valued functions on the state spaces of the model zoo.

Three representations are used throughout the package:

* :class:`CylinderFunction` -- locally constant functions on a subshift, stored
  as a table indexed by the first ``depth`` symbols.
* :class:`PointFunction` -- a vectorised callable on floating point models,
  finite maps or coordinate pairs.
* :class:`GridFunction` -- samples on a uniform 1-D grid with piecewise linear
  interpolation.

Every observable is called on a *batch* of points and returns a float array.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class Observable:
    """Base class. Subclasses implement :meth:`__call__` on point batches."""

    name: str = "observable"

    def __call__(self, points):  # pragma: no cover - abstract
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "name": self.name}


@dataclass(frozen=True, eq=False)
class CylinderFunction(Observable):
    """Function of the first ``depth`` symbols of a shift point.

    Parameters
    ----------
    table : ndarray
        Array of shape ``(K,) * depth``; ``table[w0, ..., w_{k-1}]`` is the value
        on the cylinder ``[w0 ... w_{k-1}]``.  ``depth == 0`` means a constant.
    name : str
        Label used in reports.
    """

    table: np.ndarray
    name: str = "cylinder"

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def depth(self) -> int:
        return self.table.ndim

    @property
    def alphabet_size(self) -> int:
        return self.table.shape[0] if self.table.ndim else 0

    def __call__(self, words):
        from .systems import Word

        if isinstance(words, Word):
            words = np.array([words.head(max(self.depth, 1))])
        w = np.asarray(words)
        if w.ndim == 1:
            w = w[None, :]
        if self.depth == 0:
            return np.full(w.shape[0], float(self.table))
        if w.shape[1] < self.depth:
            raise ValueError(f"words of length {w.shape[1]} too short for depth {self.depth}")
        return self.table[tuple(w[:, i] for i in range(self.depth))]

    def lift(self, depth: int) -> "CylinderFunction":
        """Same function tabulated at a larger depth."""
        if depth < self.depth:
            raise ValueError("cannot lower depth")
        k = self.alphabet_size or 1
        extra = depth - self.depth
        t = self.table.reshape(self.table.shape + (1,) * extra)
        t = np.broadcast_to(t, (k,) * depth) if depth else t
        return CylinderFunction(np.array(t), self.name)

    def describe(self) -> dict:
        return {"kind": "CylinderFunction", "name": self.name, "depth": self.depth,
                "table": self.table.tolist()}


def cylinder_function(values, name: str = "cylinder") -> CylinderFunction:
    return CylinderFunction(np.asarray(values, dtype=float), name)


def cylinder_indicator(word, alphabet_size: int, name: str | None = None) -> CylinderFunction:
    t = np.zeros((alphabet_size,) * len(word))
    t[tuple(word)] = 1.0
    return CylinderFunction(t, name or "1[" + "".join(map(str, word)) + "]")


def combine_cylinder(fs, op: Callable, alphabet_size: int, name: str) -> CylinderFunction:
    """Pointwise combination of cylinder functions lifted to a common depth."""
    depth = max(f.depth for f in fs)
    lifted = []
    for f in fs:
        if f.depth == 0:
            lifted.append(np.full((alphabet_size,) * depth, float(f.table)))
        else:
            lifted.append(f.lift(depth).table)
    return CylinderFunction(op(*lifted), name)


@dataclass(frozen=True, eq=False)
class PointFunction(Observable):
    """Wraps a numpy-vectorised callable ``fn(points) -> values``."""

    fn: Callable
    name: str = "function"

    def __call__(self, points):
        pts = np.asarray(points)
        out = np.asarray(self.fn(pts), dtype=float)
        if out.shape == () and pts.ndim >= 1:
            out = np.full(pts.shape[0], float(out))
        return out


def constant(c: float, name: str | None = None) -> PointFunction:
    c = float(c)

    def fn(points):
        return np.full(np.asarray(points).shape[0] if np.ndim(points) else 1, c)

    return PointFunction(fn, name or f"const({c:g})")


@dataclass(frozen=True, eq=False)
class NodeFunction(Observable):
    """Values attached to the nodes of a finite map."""

    values: np.ndarray
    name: str = "node"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, nodes):
        return self.values[np.asarray(nodes, dtype=int)]

    def describe(self) -> dict:
        return {"kind": "NodeFunction", "name": self.name, "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class GridFunction(Observable):
    """Uniform-grid samples on an interval with linear interpolation.

    ``periodic=True`` wraps the argument into ``[lo, hi)`` first.
    """

    lo: float
    hi: float
    values: np.ndarray
    periodic: bool = False
    name: str = "grid"
    _grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_grid", np.linspace(self.lo, self.hi, len(v)))

    @classmethod
    def from_function(cls, fn, resolution: float, lo=0.0, hi=1.0, periodic=False, name="grid"):
        m = int(round((hi - lo) / resolution))
        xs = np.linspace(lo, hi, m + 1)
        return cls(lo, hi, fn(xs), periodic, name)

    @property
    def resolution(self) -> float:
        return (self.hi - self.lo) / (len(self.values) - 1)

    def __call__(self, points):
        x = np.asarray(points, dtype=float)
        if self.periodic:
            x = self.lo + np.mod(x - self.lo, self.hi - self.lo)
        return np.interp(x, self._grid, self.values)

    def describe(self) -> dict:
        return {"kind": "GridFunction", "name": self.name, "resolution": self.resolution}


def exp_of(f: Observable) -> Observable:
    if isinstance(f, CylinderFunction):
        return CylinderFunction(np.exp(f.table), f"exp({f.name})")
    if isinstance(f, NodeFunction):
        return NodeFunction(np.exp(f.values), f"exp({f.name})")
    return PointFunction(lambda p: np.exp(f(p)), f"exp({f.name})")


def log_of(f: Observable) -> Observable:
    """Natural log with ``log 0 = -inf``."""
    with np.errstate(divide="ignore"):
        if isinstance(f, CylinderFunction):
            return CylinderFunction(np.log(f.table), f"ln({f.name})")
        if isinstance(f, NodeFunction):
            return NodeFunction(np.log(f.values), f"ln({f.name})")

    def fn(p):
        with np.errstate(divide="ignore"):
            return np.log(f(p))

    return PointFunction(fn, f"ln({f.name})")


def add(f: Observable, g: Observable, alphabet_size: int | None = None) -> Observable:
    if isinstance(f, CylinderFunction) and isinstance(g, CylinderFunction):
        k = alphabet_size or max(f.alphabet_size, g.alphabet_size)
        return combine_cylinder([f, g], np.add, k, f"{f.name}+{g.name}")
    if isinstance(f, NodeFunction) and isinstance(g, NodeFunction):
        return NodeFunction(f.values + g.values, f"{f.name}+{g.name}")
    return PointFunction(lambda p: f(p) + g(p), f"{f.name}+{g.name}")


def all_words(alphabet_size: int, depth: int) -> np.ndarray:
    """All words of a given length over ``range(alphabet_size)`` in lexicographic order."""
    if depth == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(alphabet_size), repeat=depth)), dtype=np.int64)
