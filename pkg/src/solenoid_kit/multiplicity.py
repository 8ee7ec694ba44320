"""Multiplicity functions with values in ``{0, 1, ..., inf}`` and their
behaviour under the map: ``m^r(x) = sum_{r(y)=x} m(y)`` and the detail
multiplicity ``m^r - m``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import cell_table, parse_system, system_to_json
from .errors import ConfigError, NegativeDetail, ResolutionMismatch
from .steps import StepFunction
from .transfer import preimage_sum

INF = np.inf


@dataclass
class MultFn:
    """Cellwise multiplicities; ``np.inf`` stands for an infinite count."""

    sys: object
    depth: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = cell_table(self.sys, self.depth).size
        if v.shape != (n,):
            raise ResolutionMismatch(f"{v.shape} values for {n} cells")
        finite = v[np.isfinite(v)]
        if np.any(v < 0) or np.any(finite != np.round(finite)):
            raise ValueError("multiplicities are nonnegative integers or inf")
        self.values = v

    @classmethod
    def constant(cls, sys, depth, c):
        return cls(sys, depth, np.full(cell_table(sys, depth).size, float(c)))

    def refine(self, depth):
        return MultFn(self.sys, depth,
                      StepFunction(self.sys, self.depth, self.values).refine(depth).values)

    def to_json(self):
        return {"system": system_to_json(self.sys), "resolution": self.depth,
                "values": [int(v) if np.isfinite(v) else "inf" for v in self.values]}

    @classmethod
    def from_json(cls, obj, sys=None):
        try:
            sys = sys or parse_system(obj["system"])
            vals = [INF if v == "inf" else float(v) for v in obj["values"]]
            return cls(sys, int(obj["resolution"]), np.array(vals))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad multiplicity function: {exc}") from exc


def induced_multiplicity(m: MultFn) -> MultFn:
    """``sum_{r(y)=x} m(y)`` at the depth of ``m``; ``inf`` absorbs."""
    out = preimage_sum(StepFunction(m.sys, m.depth, m.values))
    return MultFn(m.sys, m.depth, out.values)


def detail_multiplicity(m: MultFn) -> MultFn:
    """``induced(m) - m``; ``inf - inf`` is taken to be ``inf``."""
    ind = induced_multiplicity(m).values
    both_inf = np.isinf(ind) & np.isinf(m.values)
    diff = np.where(both_inf, INF, ind - np.where(both_inf, 0.0, m.values))
    bad = np.nonzero(diff < 0)[0]
    if bad.size:
        raise NegativeDetail(int(bad[0]))
    return MultFn(m.sys, m.depth, diff)
