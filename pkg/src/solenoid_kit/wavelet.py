"""Frequency-side MRA computations in one dimension: filters ``m0`` from
coefficients or as step functions, the QMF check, the cascade product for
``phi-hat`` and residuals of the scaling and embedding identities."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import CircleMap
from .errors import ConfigError, QuadratureUnderresolved
from .steps import StepFunction
from .transfer import prf_residual


@dataclass
class FilterCoeffs:
    """``m0(x) = sum_n a_n exp(-2 pi i n x)``."""

    N: int
    a: dict

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError("N must be at least 2")
        self.a = {int(k): complex(v) for k, v in self.a.items()}

    @property
    def support(self):
        return (min(self.a), max(self.a)) if self.a else (0, 0)

    @property
    def unit_norm(self):
        return abs(sum(abs(v) ** 2 for v in self.a.values()) - 1.0) < 1e-12

    def __call__(self, x):
        return m0_eval(self, x)


class StepFilter:
    """A filter given directly as a step function on ``CircleMap(N)``,
    evaluated 1-periodically at real ``x``."""

    def __init__(self, m0: StepFunction):
        if m0.sys.kind != "circle":
            raise ConfigError("step filters live on a circle map")
        self.m0 = m0
        self.N = m0.sys.N

    def __call__(self, x):
        return np.asarray(self.m0(x), dtype=complex)


def haar(N=2):
    return FilterCoeffs(N, {k: 1 / np.sqrt(N) for k in range(N)})


def shannon(N=2):
    """``sqrt(2) * chi_[-1/4, 1/4)`` as a level-2 step function (N = 2)."""
    if N != 2:
        raise ConfigError("the Shannon filter is provided for N = 2")
    sys = CircleMap(2)
    return StepFilter(StepFunction(sys, 2, np.sqrt(2) * np.array([1.0, 0.0, 0.0, 1.0])))


def m0_eval(c, x):
    if isinstance(c, StepFilter):
        return c(x)
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for n in sorted(c.a):
        out += c.a[n] * np.exp(-2j * np.pi * n * x)
    return out


def as_step(c, level=10) -> StepFunction:
    """Step function of a filter: exact for step filters, sampled at cell
    midpoints otherwise."""
    if isinstance(c, StepFilter):
        return c.m0
    return StepFunction.sample(CircleMap(c.N), level, lambda x: m0_eval(c, x))


def qmf_residual(c, level=10) -> float:
    """``||R_{m0} 1 - 1||_inf`` on ``CircleMap(N)``.

    A coefficient filter is sampled at cell midpoints; because the ``N``
    preimages of a cell have midpoints ``1/N`` apart, ``sum_k |m0|^2`` is
    evaluated at the same spacing as in the continuous identity.
    """
    m = as_step(c, level)
    return prf_residual(m, StepFunction.constant(m.sys, 1, 1.0))


@dataclass(frozen=True)
class FreqGrid:
    T: float
    M: int

    def __post_init__(self):
        if self.M < 2 or self.T <= 0:
            raise ConfigError("grid needs M >= 2 and T > 0")

    @property
    def step(self):
        return 2 * self.T / self.M

    @property
    def x(self):
        return -self.T + self.step * np.arange(self.M)


@dataclass
class ScalingApprox:
    grid: FreqGrid
    values: np.ndarray
    K: int

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re", "im"])
            for x, v in zip(self.grid.x, self.values):
                w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def cascade_product(m0, N: int, K: int, grid: FreqGrid) -> ScalingApprox:
    """``prod_{k=1..K} N^{-1/2} m0(x / N^k)`` on the grid."""
    if K < 1:
        raise ValueError("K must be at least 1")
    return ScalingApprox(grid, cascade_eval(m0, N, K, grid.x), K)


def cascade_eval(m0, N: int, K: int, x):
    """The cascade product at arbitrary points ``x``."""
    x = np.asarray(x, dtype=float)
    vals = np.ones(x.shape, dtype=complex)
    for k in range(1, K + 1):
        vals = vals * m0_eval(m0, x / N ** k) / np.sqrt(N)
    return vals


def haar_phi_hat(x):
    """``exp(-i pi x) sin(pi x) / (pi x)``."""
    x = np.asarray(x, dtype=float)
    return np.exp(-1j * np.pi * x) * np.sinc(x)


def scaling_residual(s: ScalingApprox, m0, N: int, aligned_only=False) -> float:
    """``max |phi(x) - N^{-1/2} m0(x/N) phi(x/N)|`` over the grid.

    ``phi(x/N)`` is read by linear interpolation.  With ``aligned_only`` the
    maximum runs over points whose ``x/N`` falls exactly on the grid.
    """
    x = s.grid.x
    y = x / N
    pos = (y + s.grid.T) / s.grid.step
    idx = np.rint(pos).astype(np.int64)
    on_grid = np.isclose(pos, idx, rtol=0, atol=1e-9) & (idx >= 0) & (idx < s.grid.M)
    if aligned_only:
        phi_y = s.values[idx[on_grid]]
        rhs = m0_eval(m0, y[on_grid]) * phi_y / np.sqrt(N)
        diff = s.values[on_grid] - rhs
    else:
        phi_y = np.interp(y, x, s.values.real) + 1j * np.interp(y, x, s.values.imag)
        phi_y[on_grid] = s.values[idx[on_grid]]
        diff = s.values - m0_eval(m0, y) * phi_y / np.sqrt(N)
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def _quad(xi: StepFunction, n, N, phi, T, M):
    step = 2 * T / M
    x = -T + step * (np.arange(M) + 0.5)
    return float(np.sum(np.abs(xi(x / N ** n) * phi(x)) ** 2) * step)


def embed_isometry_residual(fam, xi: StepFunction, n: int, phi, T: float,
                            quad_M: int = 2 ** 16, tol=1e-8) -> float:
    """``|omega_n(|xi|^2) - integral_R |xi(x/N^n) phi(x)|^2 dx|``.

    ``phi`` is a vectorised callable for ``phi-hat`` (for instance an
    interpolant of a cascade product); the integral is a midpoint rule on
    ``[-T, T]``.
    """
    N = fam.sys.N
    lhs = float(np.real(fam.omega(xi.abs2(), n)))
    q1 = _quad(xi, n, N, phi, T, quad_M)
    q2 = _quad(xi, n, N, phi, T, 2 * quad_M)
    if abs(q2 - q1) > 10 * tol:
        raise QuadratureUnderresolved(
            f"quadrature changed by {abs(q2 - q1):.3g} when doubling M")
    return abs(lhs - q2)


def parse_filter(obj):
    """``{"N": 2, "a": {"0": ..}}`` or ``{"step": {"N": 2, "level": L, "values": [..]}}``."""
    try:
        if "step" in obj:
            st = obj["step"]
            sys = CircleMap(int(st["N"]))
            vals = np.asarray(st["values"], dtype=float)
            if vals.ndim == 2:
                vals = vals[:, 0] + 1j * vals[:, 1]
            return StepFilter(StepFunction(sys, int(st["level"]), vals))
        a = {}
        for k, v in obj["a"].items():
            a[int(k)] = complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return FilterCoeffs(int(obj["N"]), a)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad filter specification: {exc}") from exc
