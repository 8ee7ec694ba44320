"""Ruelle transfer operators on step functions, their Perron-Frobenius data,
and residual checks for invariance, filters and isometries.

Everything is index arithmetic on cell tables.  For a depth-d cell ``x`` the
preimage cells are ``k + x[:-1]``; a depth-d step function read on them gives
``R_W f`` exactly, at depth d (it is in fact constant on depth d-1 cylinders).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .dynamics import cell_table, structure_flags
from .errors import (DimensionMismatch, NoConvergence, NotPSD,
                     ResolutionMismatch, ZeroWeight)
from .steps import MeasureVector, StepFunction, lebesgue

log = logging.getLogger(__name__)


def preimage_sum(g: StepFunction) -> StepFunction:
    """``x -> sum_{r(y)=x} g(y)`` at the depth of ``g``.

    Summation runs over branch letters in ascending order, so results do not
    depend on how callers batch the work.
    """
    table = cell_table(g.sys, g.depth)
    out = np.zeros_like(g.values, dtype=np.result_type(g.values, float))
    for k in range(table.n_letters):
        ok = table.valid[k]
        out[ok] += g.values[table.pre[k, ok]]
    return StepFunction(g.sys, g.depth, out)


def branch_counts(sys, depth) -> StepFunction:
    """``#r^{-1}(x)`` on depth-d cells."""
    return StepFunction(sys, depth, cell_table(sys, depth).nbranch.astype(float))


def ruelle_apply(W: StepFunction, f: StepFunction) -> StepFunction:
    if W.sys != f.sys:
        raise ResolutionMismatch("weight and function live on different systems")
    d = max(W.depth, f.depth)
    return preimage_sum(W.refine(d) * f.refine(d))


def ruelle_power(W, f, n):
    for _ in range(n):
        f = ruelle_apply(W, f)
    return f


def filter_weight(m0: StepFunction) -> StepFunction:
    """``W(y) = |m0(y)|^2 / #r^{-1}(r(y))``.

    For a subshift the fibre size at ``r(y)`` depends on ``y``'s second
    symbol, so the weight is built at depth >= 2.
    """
    d = max(m0.depth, 2) if m0.sys.kind == "sft" else m0.depth
    m = m0.refine(d)
    table = cell_table(m.sys, d)
    if m.sys.kind == "sft":
        up = cell_table(m.sys, d - 1)
        nb = up.nbranch[table.tail]
    else:
        nb = np.full(table.size, table.n_letters)
    return StepFunction(m.sys, d, np.abs(m.values) ** 2 / nb)


def normalized_weight(sys, depth=2) -> StepFunction:
    """``1 / #r^{-1}(r(y))``: the weight of the averaging operator R_0."""
    return filter_weight(StepFunction.constant(sys, depth, 1.0))


def averaging_operator(f: StepFunction) -> StepFunction:
    """``R_0 f(x) = (1/#r^{-1}(x)) sum_{r(y)=x} f(y)``."""
    s = preimage_sum(f)
    nb = cell_table(f.sys, f.depth).nbranch
    return StepFunction(f.sys, f.depth, s.values / nb.reshape((-1,) + (1,) * (s.values.ndim - 1)))


@dataclass
class PerronData:
    lambda0: float
    h: StepFunction
    nu: MeasureVector
    iterations: int
    residual: float

    def to_json(self):
        return {"lambda0": float(self.lambda0),
                "h": [float(v) for v in self.h.values],
                "nu": [float(v) for v in self.nu.masses],
                "iterations": int(self.iterations),
                "residual": float(self.residual)}


def transfer_matrix(W: StepFunction, depth=None):
    """Sparse matrix ``M`` with ``R_W f = M f`` on depth-d step functions."""
    d = max(W.depth, depth or 1)
    Wd = W.refine(d)
    table = cell_table(W.sys, d)
    rows, cols, vals = [], [], []
    for k in range(table.n_letters):
        ok = np.nonzero(table.valid[k])[0]
        src = table.pre[k, ok]
        rows.append(ok)
        cols.append(src)
        vals.append(Wd.values[src])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals).astype(float)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(table.size, table.size))


def solve_perron(W: StepFunction, tol=1e-12, maxit=10000, depth=None) -> PerronData:
    """Leading eigenvalue, eigenfunction and left eigenmeasure of ``R_W``.

    Power iteration in the sup norm from ``h = 1``; the measure comes from
    the same iteration on the transpose and is scaled so that ``nu(h) = 1``.
    """
    if np.any(np.real(W.values) < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(W.values):
        raise ZeroWeight("weight vanishes identically")
    if not structure_flags(W.sys)["aperiodic"]:
        warnings.warn("transition matrix is not aperiodic: Perron data may not be unique",
                      RuntimeWarning, stacklevel=2)
    M = transfer_matrix(W, depth)
    n = M.shape[0]
    MT = M.T.tocsr()

    def iterate(op, v0):
        v = v0
        delta = np.inf
        for it in range(1, maxit + 1):
            w = op @ v
            lam = np.max(np.abs(w))
            if lam == 0:
                raise ZeroWeight("iteration collapsed to zero")
            w = w / lam
            delta = np.max(np.abs(w - v))
            v = w
            if delta < tol:
                return v, lam, it
        raise NoConvergence(maxit, delta)

    h, lam, it_h = iterate(M, np.ones(n))
    nu, _, it_nu = iterate(MT, np.ones(n) / n)
    nu = nu / np.dot(nu, h)
    depth_used = max(W.depth, depth or 1)
    hs = StepFunction(W.sys, depth_used, h)
    residual = float(np.max(np.abs(M @ h - lam * h)) / np.max(np.abs(h)))
    log.debug("perron: lambda0=%.15g after %d/%d iterations", lam, it_h, it_nu)
    return PerronData(float(lam), hs, MeasureVector(W.sys, depth_used, nu),
                      max(it_h, it_nu), residual)


def standard_measure(sys, depth) -> MeasureVector:
    """The strongly invariant probability measure used as default.

    Lebesgue on the circle, uniform Bernoulli on an IFS, and for subshifts
    the left eigenmeasure of the averaging operator R_0.
    """
    if sys.full:
        return lebesgue(sys, depth)
    W = normalized_weight(sys, max(depth, 2))
    data = solve_perron(W, tol=1e-15, maxit=100000, depth=max(depth, 2))
    nu = data.nu
    nu = MeasureVector(sys, nu.depth, nu.masses / nu.masses.sum())
    return nu.coarsen(depth) if depth < nu.depth else nu


def strong_invariance_residual(mu: MeasureVector) -> float:
    """``max_c |mu(1_c) - mu(R_0 1_c)|`` over the depth-L cells."""
    table = cell_table(mu.sys, mu.depth)
    rhs = np.zeros(table.size)
    share = mu.masses / table.nbranch
    for k in range(table.n_letters):
        ok = np.nonzero(table.valid[k])[0]
        np.add.at(rhs, table.pre[k, ok], share[ok])
    return float(np.max(np.abs(mu.masses - rhs)))


def invariance_residual(mu: MeasureVector) -> float:
    """``max_f |mu(f o r) - mu(f)|`` over depth-(L-1) cell indicators."""
    if mu.depth < 2:
        return 0.0
    table = cell_table(mu.sys, mu.depth)
    n_up = cell_table(mu.sys, mu.depth - 1).size
    pulled = np.zeros(n_up)
    np.add.at(pulled, table.tail, mu.masses)
    direct = mu.coarsen(mu.depth - 1).masses
    return float(np.max(np.abs(pulled - direct)))


def invariant_from_eigen(nu: MeasureVector, h: StepFunction) -> MeasureVector:
    if h.depth > nu.depth:
        raise ResolutionMismatch("h is finer than the eigenmeasure")
    if nu.sys != h.sys:
        raise ResolutionMismatch("h and nu live on different systems")
    return MeasureVector(nu.sys, nu.depth, nu.masses * np.real(h.refine(nu.depth).values))


def prf_residual(m0: StepFunction, h: StepFunction) -> float:
    """``||R_{m0} h - h||_inf``."""
    return ruelle_apply(filter_weight(m0), h).dist(h)


def matrix_prf_residual(M0: StepFunction, H: StepFunction, tol=1e-12) -> float:
    """``max_x || (1/#r^{-1}(x)) sum M0(y)^* H(y) M0(y) - H(x) ||_2``."""
    if M0.values.ndim == 1 and H.values.ndim == 1:
        return prf_residual(M0, H)
    if M0.values.ndim != 3 or H.values.ndim != 3:
        raise DimensionMismatch("matrix filters need values of shape (cells, D, D)")
    if M0.values.shape[1:] != H.values.shape[1:] or M0.values.shape[1] != M0.values.shape[2]:
        raise DimensionMismatch(
            f"incompatible matrix shapes {M0.values.shape[1:]} and {H.values.shape[1:]}")
    if M0.sys != H.sys:
        raise ResolutionMismatch("M0 and H live on different systems")
    herm = 0.5 * (H.values + np.conj(np.swapaxes(H.values, 1, 2)))
    if np.min(np.linalg.eigvalsh(herm)) < -tol:
        raise NotPSD("H is not positive semidefinite")
    d = max(M0.depth, H.depth)
    M = M0.refine(d).values
    Hd = H.refine(d)
    inner = np.conj(np.swapaxes(M, 1, 2)) @ Hd.values @ M
    avg = averaging_operator(StepFunction(M0.sys, d, inner))
    diff = avg.values - Hd.values
    return float(np.max(np.linalg.norm(diff, ord=2, axis=(1, 2))))


def isometry_gap(m0: StepFunction, h: StepFunction, f: StepFunction, mu=None) -> float:
    """``||S_{m0} f||^2 - ||f||^2`` in ``L^2(h dmu)``, ``S f = m0 * f o r``."""
    Sf = m0 * f.compose_r()
    d = max(Sf.depth, h.depth)
    if mu is None:
        mu = standard_measure(f.sys, d)
    lhs = mu.integrate((Sf.abs2() * h))
    rhs = mu.integrate((f.abs2() * h))
    return float(np.real(lhs - rhs))


def ifs_moment(sys, k: int, depth: int = 16, weights=None) -> float:
    """``integral x^k dnu`` for the invariant measure of an affine IFS.

    ``nu`` is the Perron measure of ``R_W`` with ``W`` the symbol weights
    (uniform by default); ``x^k`` is sampled at cylinder hull centres,
    which costs ``O(scale^(-2 depth))`` for ``k >= 2``.
    """
    if sys.kind != "ifs":
        raise ValueError("moments are defined for affine IFS systems")
    K = len(sys.symbols)
    w = np.full(K, 1.0 / K) if weights is None else np.asarray(weights, dtype=float)
    table = cell_table(sys, 1)
    W = StepFunction(sys, 1, w[table.words[:, 0]])
    data = solve_perron(W, depth=depth)
    nu = MeasureVector(sys, data.nu.depth, data.nu.masses * np.real(data.h.values))
    f = StepFunction.sample(sys, depth, lambda x: np.asarray(x, dtype=float) ** k)
    return float(nu.integrate(f) / nu.total_mass)
