"""The projective-limit (solenoid) side: the measures ``omega_n``, functions
on the solenoid as compatible sequences ``(xi_0, ..., xi_K)``, conditional
expectations, the operators U, U*, pi and the cocycle <-> harmonic function
correspondence.

A function on the solenoid is represented by its first ``K + 1`` levels
``xi_n`` with ``R(xi_{n+1} h) = xi_n h`` where ``R = R_{m0}``.  Level ``n``
usually lives at a deeper cell depth than level 0, since ``xi o r`` needs one
more symbol than ``xi``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (DepthExhausted, DominationFailure, LevelOutOfRange,
                     NotHarmonic, ResolutionMismatch)
from .steps import MeasureVector, StepFunction, safe_divide
from .transfer import (averaging_operator, filter_weight, ruelle_apply,
                       standard_measure, transfer_matrix)

NONSINGULAR_FLOOR = 1e-14


class OmegaFamily:
    """``omega_n(f) = integral of R^n(f h) dmu`` for a PRF pair ``(m0, h)``."""

    def __init__(self, m0: StepFunction, h: StepFunction, mu: MeasureVector = None):
        if m0.sys != h.sys:
            raise ResolutionMismatch("m0 and h live on different systems")
        self.sys = m0.sys
        self.m0 = m0
        self.h = h
        self.W = filter_weight(m0)
        self._standard = mu is None
        if mu is None:
            mu = standard_measure(self.sys, max(self.W.depth, h.depth))
        self.mu = mu
        self._deeper = {}

    def measure_at(self, depth):
        """The reference measure at ``depth`` or deeper, when it can be
        produced (the standard measure can; a user measure cannot)."""
        if depth <= self.mu.depth or not self._standard:
            return self.mu
        if depth not in self._deeper:
            self._deeper[depth] = standard_measure(self.sys, depth)
        return self._deeper[depth]

    def R(self, f):
        return ruelle_apply(self.W, f)

    def R_power(self, f, n):
        for _ in range(n):
            f = self.R(f)
        return f

    def omega(self, f: StepFunction, n: int):
        g = self.R_power(f * self.h, n)
        return self.measure_at(g.depth).integrate(g)

    def nonsingular(self):
        return bool(np.all(np.abs(self.m0.values) >= NONSINGULAR_FLOOR))


def omega_compat_residual(fam: OmegaFamily, f: StepFunction, n: int) -> float:
    return float(abs(fam.omega(f.compose_r(), n + 1) - fam.omega(f, n)))


def radon_nikodym_residual(fam: OmegaFamily, f: StepFunction, n: int) -> float:
    """``|omega_n(|m0|^2 o r^n * f o r) - omega_n(f)|``."""
    lhs = fam.omega(fam.m0.abs2().compose_r_power(n) * f.compose_r(), n)
    return float(abs(lhs - fam.omega(f, n)))


@dataclass
class MartingaleFn:
    family: OmegaFamily
    levels: list
    flagged: dict = field(default_factory=dict)

    @property
    def K(self):
        return len(self.levels) - 1

    def level(self, n):
        if not 0 <= n <= self.K:
            raise LevelOutOfRange(f"level {n} outside 0..{self.K}")
        return self.levels[n]

    def compat_residual(self):
        fam = self.family
        res = 0.0
        for n in range(self.K):
            lhs = fam.R(self.levels[n + 1] * fam.h)
            res = max(res, lhs.dist(self.levels[n] * fam.h))
        return res

    def level_norms(self):
        """``omega_n(|xi_n|^2)`` for n = 0..K (nondecreasing)."""
        return [float(np.real(self.family.omega(x.abs2(), n)))
                for n, x in enumerate(self.levels)]

    def norm(self):
        return float(np.sqrt(max(self.level_norms()[-1], 0.0)))

    def dist(self, other):
        """Sup-norm distance between levels 0..min(K, K')."""
        k = min(self.K, other.K)
        return max(a.dist(b) for a, b in zip(self.levels[:k + 1], other.levels[:k + 1]))

    def hilbert_dist(self, other):
        """``||m - m'||`` in the martingale Hilbert space, read at the common
        top level.  Differences on omega-null cells do not count."""
        k = min(self.K, other.K)
        diff = self.levels[k] - other.levels[k]
        return float(np.sqrt(max(np.real(self.family.omega(diff.abs2(), k)), 0.0)))

    def to_json(self, m0_ref="m0", h_ref="h"):
        return {"m0_ref": m0_ref, "h_ref": h_ref, "K": self.K,
                "levels": [lv.to_json() for lv in self.levels]}


def inner_product(m: MartingaleFn, m2: MartingaleFn):
    """Level-K value of ``omega_n(conj(xi_n) eta_n)`` and its last increment."""
    k = min(m.K, m2.K)
    fam = m.family
    vals = [fam.omega(m.levels[n].conj() * m2.levels[n], n) for n in (k - 1, k) if n >= 0]
    last = vals[-1]
    inc = vals[-1] - vals[0] if len(vals) == 2 else 0.0
    return complex(last), complex(inc)


def _divide_by_h(fam, g, flags, key):
    q, bad = safe_divide(g, fam.h)
    if len(bad):
        flags[key] = bad.tolist()
        warnings.warn(f"h vanishes where R^k(xi h) does not (level {key})",
                      RuntimeWarning, stacklevel=3)
    return q


def lift_to_martingale(fam: OmegaFamily, xi: StepFunction, n: int, K: int) -> MartingaleFn:
    """The sequence ``(R^n(xi h)/h, ..., R(xi h)/h, xi, xi o r, ...)``."""
    if K < n:
        raise LevelOutOfRange("K must be >= n")
    flags = {}
    levels = [None] * (K + 1)
    levels[n] = xi
    g = xi * fam.h
    for j in range(n - 1, -1, -1):
        g = fam.R(g)
        levels[j] = _divide_by_h(fam, g, flags, j)
    for j in range(n + 1, K + 1):
        levels[j] = levels[j - 1].compose_r()
    return MartingaleFn(fam, levels, flags)


def cond_expect(m: MartingaleFn, n: int, k: int) -> StepFunction:
    """``E_n(xi_{n+k} o theta_{n+k})`` as a level-n function: ``R^k(xi h)/h``."""
    if n < 0 or k < 0 or n + k > m.K:
        raise LevelOutOfRange(f"need 0 <= n, k and n + k <= {m.K}")
    fam = m.family
    g = fam.R_power(m.levels[n + k] * fam.h, k)
    return _divide_by_h(fam, g, m.flagged, ("E", n, k))


def project(m: MartingaleFn, n: int) -> MartingaleFn:
    """``P_n``: keep level n and rebuild the martingale it generates."""
    return lift_to_martingale(m.family, m.level(n), n, m.K)


def tower_residual(m: MartingaleFn, n: int, k: int) -> float:
    """``|| P_n P_k m - P_n m ||`` (sup over levels) for ``n <= k``."""
    return project(project(m, k), n).dist(project(m, n))


def apply_U(m: MartingaleFn) -> MartingaleFn:
    """``(m0 o r^n * xi_{n+1})_n``; K drops by one."""
    if m.K < 1:
        raise DepthExhausted("U needs at least two levels")
    m0 = m.family.m0
    levels = []
    g = m0
    for n in range(m.K):
        levels.append(g * m.levels[n + 1])
        g = g.compose_r()
    return MartingaleFn(m.family, levels)


def apply_U_star(m: MartingaleFn) -> MartingaleFn:
    """``chi_{m0 o r^-1 != 0} / (m0 o r^-1) * f o r^-1``; K grows by one.

    Level n >= 1 is ``xi_{n-1} / m0 o r^{n-1}`` (0 where m0 vanishes); level
    0 is its conditional expectation ``R(xi'_1 h) / h``.
    """
    fam = m.family
    inv, _ = safe_divide(StepFunction.constant(fam.sys, fam.m0.depth, 1.0), fam.m0)
    levels = [None]
    g = inv
    for n in range(1, m.K + 2):
        levels.append(g * m.levels[n - 1])
        g = g.compose_r()
    flags = {}
    levels[0] = _divide_by_h(fam, fam.R(levels[1] * fam.h), flags, 0)
    return MartingaleFn(fam, levels, flags)


def apply_pi(g: StepFunction, m: MartingaleFn) -> MartingaleFn:
    levels = []
    gn = g
    for x in m.levels:
        levels.append(gn * x)
        gn = gn.compose_r()
    return MartingaleFn(m.family, levels)


def compose_rhat(m: MartingaleFn) -> MartingaleFn:
    """``f o rhat`` <-> ``(xi_1, xi_2, ...)``."""
    if m.K < 1:
        raise DepthExhausted("need at least two levels")
    return MartingaleFn(m.family, list(m.levels[1:]))


def compose_rhat_inv(m: MartingaleFn) -> MartingaleFn:
    """``f o rhat^-1`` <-> ``(R(xi_0 h)/h, xi_0, xi_1, ...)``."""
    fam = m.family
    flags = {}
    first = _divide_by_h(fam, fam.R(m.levels[0] * fam.h), flags, 0)
    return MartingaleFn(fam, [first] + list(m.levels), flags)


def constant_martingale(fam: OmegaFamily, K: int, c=1.0) -> MartingaleFn:
    return lift_to_martingale(fam, StepFunction.constant(fam.sys, 1, c), 0, K)


@dataclass
class Cocycle:
    martingale: MartingaleFn

    @property
    def value(self) -> StepFunction:
        return self.martingale.levels[0]

    def level_residual(self):
        lv = self.martingale.levels
        return max((a.dist(b) for a, b in zip(lv, lv[1:])), default=0.0)


def harmonic_to_cocycle(fam: OmegaFamily, h0: StepFunction, K: int = 4,
                        tol=1e-10) -> Cocycle:
    """The cocycle ``lim (h0/h) o theta_n`` of a bounded harmonic ``h0``."""
    res = fam.R(h0).dist(h0)
    if res > tol:
        raise NotHarmonic(res)
    d = max(h0.depth, fam.h.depth)
    a = h0.refine(d).values
    b = np.real(fam.h.refine(d).values)
    zero = b == 0
    if np.any(np.abs(a[zero]) > tol):
        raise DominationFailure("h0 is non-zero where h vanishes")
    c = np.max(np.abs(a[~zero]) ** 2 / b[~zero] ** 2) if np.any(~zero) else 0.0
    if not np.isfinite(c):
        raise DominationFailure("|h0|^2 <= c h^2 fails for every finite c")
    xi, _ = safe_divide(h0, fam.h)
    return Cocycle(MartingaleFn(fam, [xi] * (K + 1)))


def harmonic_space(fam: OmegaFamily, depth: int, tol=1e-10):
    """Basis (list of real StepFunctions) of ``{h0 : R h0 = h0}`` among
    depth-``depth`` step functions."""
    from scipy.linalg import null_space
    M = transfer_matrix(fam.W, depth).toarray()
    basis = null_space(M - np.eye(M.shape[0]), rcond=tol)
    d = max(depth, fam.W.depth)
    return [StepFunction(fam.sys, d, basis[:, i]) for i in range(basis.shape[1])]


def cocycle_to_harmonic(c: Cocycle) -> StepFunction:
    return c.value * c.martingale.family.h


def intertwine_residual(m0: StepFunction, m0p: StepFunction, c: Cocycle) -> float:
    """Defect of ``m0 f = m0' f o rhat`` level by level, plus the defect of
    ``h0`` under ``(1/#r^-1) sum conj(m0') m0 h0``."""
    lv = c.martingale.levels
    res = 0.0
    a, b = m0, m0p
    for n in range(len(lv) - 1):
        res = max(res, (a * lv[n]).dist(b * lv[n + 1]))
        a, b = a.compose_r(), b.compose_r()
    h0 = cocycle_to_harmonic(c)
    avg = averaging_operator(m0p.conj() * m0 * h0)
    return max(res, avg.dist(h0))


def shift_dilation_check(k, jmin: int, jmax: int) -> float:
    """``max_j || S pi(g_k) delta_j - pi(g_{k/2}) S delta_j ||`` on the
    truncated bilateral lattice, ``S delta_j = delta_{j-1}`` and
    ``pi(g_k) delta_j = exp(i 2 pi k 2^-j) delta_j``."""
    if jmin >= jmax:
        raise ValueError("need jmin < jmax")
    k = Fraction(k)
    if k.denominator & (k.denominator - 1):
        raise ValueError("k must be a dyadic rational")
    js = np.arange(jmin - 1, jmax)
    n = len(js)
    pos = {int(j): i for i, j in enumerate(js)}
    S = np.zeros((n, n))
    for j in range(jmin, jmax):
        S[pos[j - 1], pos[j]] = 1.0

    def pi(kk):
        phase = np.array([float(kk * Fraction(2) ** -int(j)) for j in js])
        return np.diag(np.exp(2j * np.pi * phase))

    lhs = S @ pi(k)
    rhs = pi(k / 2) @ S
    res = 0.0
    for j in range(jmin, jmax):
        e = np.zeros(n)
        e[pos[j]] = 1.0
        res = max(res, float(np.linalg.norm(lhs @ e - rhs @ e)))
    return res
