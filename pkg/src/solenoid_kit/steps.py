"""Piecewise-constant functions and measures on the cells of a system."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import (Point, System, cell_midpoints, cell_table, point_value,
                       system_to_json)
from .errors import InvalidPoint, ResolutionMismatch


def _same_system(a, b):
    if a.sys != b.sys:
        raise ResolutionMismatch("functions live on different systems")


@dataclass
class StepFunction:
    """Values on the depth-``depth`` cells, in canonical ascending order.

    ``values`` may carry trailing axes (matrix-valued filters).  Binary
    operations refine the shallower operand, which is exact.
    """

    sys: System
    depth: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        n = cell_table(self.sys, self.depth).size
        if self.values.shape[:1] != (n,):
            raise ResolutionMismatch(
                f"{self.values.shape[0] if self.values.ndim else 0} values "
                f"for {n} cells at depth {self.depth}")

    @classmethod
    def constant(cls, sys, depth, c, dtype=float):
        return cls(sys, depth, np.full(cell_table(sys, depth).size, c, dtype=dtype))

    @classmethod
    def indicator(cls, sys, depth, cells):
        v = np.zeros(cell_table(sys, depth).size)
        v[np.asarray(cells, dtype=np.int64)] = 1.0
        return cls(sys, depth, v)

    @classmethod
    def sample(cls, sys, depth, func: Callable):
        """Evaluate ``func`` at the cell midpoints (circle, IFS).  For
        subshifts ``func`` receives the (cells, depth) array of symbols."""
        if sys.kind == "sft":
            vals = func(cell_table(sys, depth).symbol_words())
        else:
            vals = func(cell_midpoints(sys, depth))
        return cls(sys, depth, np.asarray(vals))

    @property
    def size(self):
        return self.values.shape[0]

    def refine(self, depth):
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise ResolutionMismatch("refine() cannot go to a coarser depth")
        anc = cell_table(self.sys, depth).ancestors(self.depth)
        return StepFunction(self.sys, depth, self.values[anc])

    def coarsen(self, depth):
        """Exact coarsening; raises if the values are not constant on the
        depth-``depth`` cylinders."""
        if depth == self.depth:
            return self
        if depth > self.depth:
            raise ResolutionMismatch("coarsen() cannot go to a finer depth")
        anc = cell_table(self.sys, self.depth).ancestors(depth)
        n = cell_table(self.sys, depth).size
        out = np.zeros((n,) + self.values.shape[1:], dtype=self.values.dtype)
        out[anc] = self.values
        if not np.array_equal(out[anc], self.values):
            raise ResolutionMismatch(
                f"function is not constant on depth-{depth} cylinders")
        return StepFunction(self.sys, depth, out)

    def try_coarsen(self, depth):
        try:
            return self.coarsen(depth)
        except ResolutionMismatch:
            return None

    def effective_depth(self):
        """Smallest depth on which the function is exactly representable."""
        d = self.depth
        while d > 1 and self.try_coarsen(d - 1) is not None:
            d -= 1
        return d

    def compose_r(self):
        """``f o r`` as a step function one level deeper."""
        table = cell_table(self.sys, self.depth + 1)
        return StepFunction(self.sys, self.depth + 1, self.values[table.tail])

    def compose_r_power(self, n):
        g = self
        for _ in range(n):
            g = g.compose_r()
        return g

    def at(self, p: Point):
        return self.values[cell_table(self.sys, self.depth).cell_of(p)]

    def eval_cells(self, depth, cells):
        """Values at cells given by index at a (finer) depth."""
        anc = cell_table(self.sys, depth).ancestors(self.depth)
        return self.values[anc[cells]]

    def __call__(self, x):
        """Evaluate a circle step function at real ``x`` (periodised)."""
        if self.sys.kind != "circle":
            raise InvalidPoint("real evaluation is only defined on the circle")
        x = np.asarray(x, dtype=float)
        frac = x - np.floor(x)
        n = self.sys.N ** self.depth
        idx = np.minimum(np.floor(frac * n).astype(np.int64), n - 1)
        return self.values[idx]

    # arithmetic -------------------------------------------------------
    def _align(self, other):
        if isinstance(other, StepFunction):
            _same_system(self, other)
            d = max(self.depth, other.depth)
            return self.refine(d), other.refine(d).values
        return self, other

    def _binary(self, other, op):
        a, b = self._align(other)
        return StepFunction(a.sys, a.depth, op(a.values, b))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return StepFunction(self.sys, self.depth, -self.values)

    def conj(self):
        return StepFunction(self.sys, self.depth, np.conj(self.values))

    def abs2(self):
        return StepFunction(self.sys, self.depth, np.abs(self.values) ** 2)

    def real(self):
        return StepFunction(self.sys, self.depth, np.real(self.values))

    def sup(self):
        return float(np.max(np.abs(self.values))) if self.size else 0.0

    def dist(self, other):
        """Sup-norm distance after alignment."""
        a, b = self._align(other)
        return float(np.max(np.abs(a.values - b))) if a.size else 0.0

    def to_json(self):
        vals = self.values
        if np.iscomplexobj(vals):
            payload = [[float(v.real), float(v.imag)] for v in vals.ravel()]
        else:
            payload = [float(v) for v in vals.ravel()]
        return {"system": system_to_json(self.sys), "resolution": self.depth,
                "values": payload}

    @classmethod
    def from_json(cls, sys, obj):
        vals = np.asarray(obj["values"], dtype=float)
        if vals.ndim == 2 and vals.shape[1] == 2:
            vals = vals[:, 0] + 1j * vals[:, 1]
        return cls(sys, int(obj["resolution"]), vals)


def safe_divide(num: StepFunction, den: StepFunction):
    """``num / den`` with cells where ``den == 0`` set to 0.

    Returns the quotient and the indices of zero-denominator cells where the
    numerator was non-zero.
    """
    a, b = num._align(den)
    b = np.broadcast_to(b, a.values.shape)
    zero = b == 0
    out = np.zeros_like(a.values, dtype=np.result_type(a.values, b, float))
    np.divide(a.values, b, out=out, where=~zero)
    flagged = np.nonzero(zero & (a.values != 0))[0]
    return StepFunction(a.sys, a.depth, out), flagged


@dataclass
class MeasureVector:
    """Masses of the depth-``depth`` cells."""

    sys: System
    depth: int
    masses: np.ndarray

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        n = cell_table(self.sys, self.depth).size
        if self.masses.shape != (n,):
            raise ResolutionMismatch(f"{self.masses.shape} masses for {n} cells")
        if np.any(self.masses < 0):
            raise ValueError("measure masses must be nonnegative")

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def coarsen(self, depth):
        if depth == self.depth:
            return self
        if depth > self.depth:
            raise ResolutionMismatch("a measure cannot be refined without more data")
        anc = cell_table(self.sys, self.depth).ancestors(depth)
        out = np.zeros(cell_table(self.sys, depth).size)
        np.add.at(out, anc, self.masses)
        return MeasureVector(self.sys, depth, out)

    def integrate(self, f: StepFunction):
        """``sum f * mass``; ``f`` deeper than the measure must coarsen exactly."""
        if f.sys != self.sys:
            raise ResolutionMismatch("function and measure live on different systems")
        if f.depth > self.depth:
            g = f
            while g.depth > self.depth:
                g = g.try_coarsen(g.depth - 1)
                if g is None:
                    raise ResolutionMismatch(
                        f"depth-{f.depth} function cannot be integrated against a "
                        f"depth-{self.depth} measure")
            f = g
        vals = f.refine(self.depth).values
        return np.tensordot(self.masses, vals, axes=(0, 0))

    def to_json(self):
        return {"system": system_to_json(self.sys), "resolution": self.depth,
                "values": [float(m) for m in self.masses]}


def lebesgue(sys: System, depth: int) -> MeasureVector:
    """Uniform cell masses: Lebesgue measure on the circle, the uniform
    Bernoulli measure on an IFS coding space."""
    if sys.kind == "sft" and not sys.full:
        raise ValueError("use transfer.standard_measure for subshifts")
    n = cell_table(sys, depth).size
    return MeasureVector(sys, depth, np.full(n, 1.0 / n))


def bernoulli(sys: System, depth: int, weights) -> MeasureVector:
    """Product measure with the given per-symbol weights (full shifts)."""
    if not sys.full:
        raise ValueError("Bernoulli measures need a full shift")
    w = np.asarray(weights, dtype=float)
    table = cell_table(sys, depth)
    return MeasureVector(sys, depth, np.prod(w[table.words], axis=1))


def dirac(sys: System, depth: int, p: Point) -> MeasureVector:
    table = cell_table(sys, depth)
    m = np.zeros(table.size)
    m[table.cell_of(p)] = 1.0
    return MeasureVector(sys, depth, m)


@dataclass
class CircleFunction:
    """A function on the circle given by a vectorised callable of ``x``.

    Used where exact point evaluation matters (path measures started at a
    given point); ``sample`` produces the midpoint step approximation.
    """

    sys: System
    func: Callable
    name: str = field(default="f")

    def __post_init__(self):
        if self.sys.kind != "circle":
            raise ValueError("CircleFunction needs a CircleMap system")

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def at(self, p: Point):
        return self.func(np.asarray(float(point_value(self.sys, p))))[()]

    def sample(self, depth):
        return StepFunction.sample(self.sys, depth, self.func)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
