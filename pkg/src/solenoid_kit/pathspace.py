"""Path-space measures ``P_x`` on branch sequences, a seeded random-walk
sampler for them, the conjugacy ``Psi`` between solenoid orbits and
``X x Omega``, and the disintegration of ``mu-hat`` over ``x``.

``P_x`` is unnormalised (total mass ``h(x)``).  The sampler draws from the
normalised kernel ``p_k(z) = W(tau_k z) h(tau_k z) / h(z)``, so sampled
frequencies estimate ``cylinder_mass / h(x)``.

Randomness: paths are grouped in fixed blocks of ``BLOCK`` consecutive
indices; block ``b`` draws from ``Philox(key=seed ^ b)``.  Path ``i`` is
therefore the same whatever the number of paths requested or the number of
worker threads (``SOLENOID_KIT_THREADS``).
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (Point, branch, branch_count, branch_of, cell_table,
                       forward, point_value, same_point)
from .errors import (DeadEnd, InvalidPoint, InvalidWord, NotAnOrbit,
                     ResolutionMismatch, ZeroMass)
from .steps import CircleFunction, StepFunction, safe_divide

BLOCK = 4096


def worker_count():
    try:
        return max(1, int(os.environ.get("SOLENOID_KIT_THREADS", "1")))
    except ValueError:
        return 1


def block_uniforms(seed: int, block: int, width: int) -> np.ndarray:
    """The ``(BLOCK, width)`` uniforms of one path block."""
    key = (int(seed) ^ int(block)) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=key)).random((BLOCK, width))


def _evaluate(fn, p: Point):
    return fn.at(p)


@dataclass
class PathMeasure:
    """``P_x`` built from a weight ``W``, a function ``h`` with
    ``sum_k W(tau_k z) h(tau_k z) = h(z)``, and a start point ``x``.

    ``W`` and ``h`` are step functions or, on the circle, CircleFunctions
    evaluated at exact points.
    """

    sys: object
    W: object
    h: object
    x: Point

    def kernel(self, z: Point):
        hz = float(np.real(_evaluate(self.h, z)))
        ys = [branch(self.sys, k, z) for k in range(branch_count(self.sys, z))]
        w = np.array([float(np.real(_evaluate(self.W, y) * _evaluate(self.h, y))) for y in ys])
        if hz == 0:
            return w, 0.0
        return w / hz, hz


def _orbit(P: PathMeasure, word):
    z = P.x
    pts = [z]
    for k in word:
        try:
            z = branch(P.sys, int(k), z)
        except Exception as exc:
            raise InvalidWord(f"word {tuple(word)} is not valid along the orbit: {exc}") from exc
        pts.append(z)
    return pts


def cylinder_mass(P: PathMeasure, word) -> float:
    """``W(y_1) ... W(y_n) h(y_n)`` along ``y_j = tau_{w_j}(y_{j-1})``, ``y_0 = x``."""
    pts = _orbit(P, word)
    mass = 1.0
    for y in pts[1:]:
        mass *= float(np.real(_evaluate(P.W, y)))
    return mass * float(np.real(_evaluate(P.h, pts[-1])))


def consistency_residual(P: PathMeasure, word) -> float:
    pts = _orbit(P, word)
    n = branch_count(P.sys, pts[-1])
    children = sum(cylinder_mass(P, tuple(word) + (k,)) for k in range(n))
    return abs(children - cylinder_mass(P, word))


def all_words(P: PathMeasure, n: int):
    """Every admissible branch word of length ``n`` from ``P.x``."""
    def rec(z, depth):
        if depth == 0:
            yield ()
            return
        for k in range(branch_count(P.sys, z)):
            for rest in rec(branch(P.sys, k, z), depth - 1):
                yield (k,) + rest
    return list(rec(P.x, n))


# ---------------------------------------------------------------------------
# vectorised sampler

class _StateEval:
    """Evaluates step functions on cell indices at a common depth and circle
    functions on tracked real coordinates."""

    def __init__(self, sys, depth):
        self.sys = sys
        self.depth = depth
        self.table = cell_table(sys, depth)
        self._cache = {}

    def __call__(self, fn, cells, xs):
        if isinstance(fn, CircleFunction):
            return np.real(fn(xs))
        key = id(fn)
        if key not in self._cache:
            if fn.depth > self.depth:
                raise InvalidPoint("sampler depth is shallower than a function")
            self._cache[key] = (fn, np.real(fn.refine(self.depth).values))
        return self._cache[key][1][cells]


def _state_depth(*fns):
    return max([1] + [f.depth for f in fns if isinstance(f, StepFunction)])


def _step(ev, W, h, cells, xs, hz, u):
    """One transition for every path; returns new cells, coords and letters."""
    table = ev.table
    sys = ev.sys
    K = table.n_letters
    probs = np.zeros((len(cells), K))
    cand_cells = np.empty((len(cells), K), dtype=np.int64)
    cand_x = None if xs is None else np.empty((len(cells), K))
    for k in range(K):
        pc = table.pre[k, cells]
        ok = pc >= 0
        cand_cells[:, k] = np.where(ok, pc, 0)
        if xs is not None:
            cand_x[:, k] = (xs + sys.symbols[k]) / sys.N
        wk = ev(W, cand_cells[:, k], None if xs is None else cand_x[:, k])
        hk = ev(h, cand_cells[:, k], None if xs is None else cand_x[:, k])
        probs[:, k] = np.where(ok, wk * hk, 0.0)
    live = hz > 0
    probs[live] /= hz[live, None]
    # paths of zero weight walk uniformly; their contribution is zero anyway
    valid = table.valid[:, cells].T
    probs[~live] = valid[~live] / valid[~live].sum(axis=1, keepdims=True)
    total = probs.sum(axis=1)
    if np.any(total <= 0):
        raise DeadEnd("all transition probabilities vanish at a visited point")
    cum = np.cumsum(probs, axis=1) / total[:, None]
    letters = np.argmax(u[:, None] < cum, axis=1)
    # guard against u landing above a cumulative sum rounded below 1
    over = u >= cum[:, -1]
    if np.any(over):
        letters[over] = K - 1 - np.argmax((probs[over] > 0)[:, ::-1], axis=1)
    rows = np.arange(len(cells))
    new_cells = cand_cells[rows, letters]
    new_x = None if xs is None else cand_x[rows, letters]
    return new_cells, new_x, letters


def _needs_coords(*fns):
    return any(isinstance(f, CircleFunction) for f in fns)


def _ordinals(table, cells, letters):
    """Branch ordinal of each chosen letter (admissible prefixes counted
    in ascending order)."""
    valid = table.valid[:, cells].T
    before = np.cumsum(valid, axis=1) - valid
    return before[np.arange(len(cells)), letters]


def _run_block(sys, W, h, observe, n, start, u, depth):
    """Simulate one block.  ``start`` is ``(cells, xs)`` or a measure."""
    ev = _StateEval(sys, depth)
    cells, xs = start
    if not _needs_coords(W, h, *observe):
        xs = None
    words = np.empty((len(cells), n), dtype=np.int64)
    obs = [np.empty((len(cells), n + 1)) for _ in observe]
    for i, fn in enumerate(observe):
        obs[i][:, 0] = ev(fn, cells, xs)
    h0 = ev(h, cells, xs)
    hz = h0
    for t in range(n):
        new_cells, new_x, letters = _step(ev, W, h, cells, xs, hz, u[:, t])
        words[:, t] = _ordinals(ev.table, cells, letters)
        cells, xs = new_cells, new_x
        hz = ev(h, cells, xs)
        for i, fn in enumerate(observe):
            obs[i][:, t + 1] = ev(fn, cells, xs)
    return words, h0, obs, cells, xs


def _start_state(sys, depth, p: Point):
    table = cell_table(sys, depth)
    c = table.cell_of(p)
    x = None
    if sys.kind == "circle":
        x = float(point_value(sys, p))
    return c, x


def sample_paths(P: PathMeasure, n: int, samples: int, seed: int, observe=()):
    """Draw ``samples`` paths of length ``n`` from the normalised ``P_x``.

    Returns ``(words, observations)``: branch ordinals of shape
    ``(samples, n)`` and, for each function in ``observe``, its value at
    ``x_0, ..., x_n`` (shape ``(samples, n + 1)``).
    """
    depth = _state_depth(P.W, P.h, *observe)
    c0, x0 = _start_state(P.sys, depth, P.x)
    ev = _StateEval(P.sys, depth)
    if ev(P.h, np.array([c0]), None if x0 is None else np.array([x0]))[0] <= 0:
        raise ZeroMass("h vanishes at the start point")
    nblocks = -(-samples // BLOCK)

    def block(b):
        u = block_uniforms(seed, b, n + 1)[:, 1:]
        cells = np.full(BLOCK, c0)
        xs = None if x0 is None else np.full(BLOCK, x0)
        return _run_block(P.sys, P.W, P.h, observe, n, (cells, xs), u, depth)

    results = _map_blocks(block, nblocks)
    words = np.concatenate([r[0] for r in results])[:samples]
    obs = [np.concatenate([r[2][i] for r in results])[:samples] for i in range(len(observe))]
    return words, obs


def _map_blocks(fn, nblocks):
    workers = min(worker_count(), nblocks)
    if workers <= 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(nblocks)))


def sample_path(P: PathMeasure, n: int, seed: int):
    """One path (path index 0 of the seed's stream) and its visited points."""
    words, _ = sample_paths(P, n, 1, seed)
    word = tuple(int(k) for k in words[0])
    return word, psi_inv(P.sys, P.x, word)


def _sample_from_measure(mu, u, sys, depth):
    """Start cells drawn from ``mu``, which must live at ``depth``."""
    if mu.depth != depth:
        raise InvalidPoint("start measure must live at the sampler depth")
    cum = np.cumsum(mu.masses / mu.total_mass)
    cells = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    xs = None
    if sys.kind == "circle":
        xs = cells / float(sys.N ** depth)
    return cells, xs


def _walk_from_measure(fam, W, observe, n, samples, seed):
    sys = fam.sys
    depth = max(_state_depth(W, fam.h, *observe), fam.mu.depth)
    mu = fam.measure_at(depth)
    if mu.depth < depth:
        raise ResolutionMismatch("the start measure is coarser than the functions")
    nblocks = -(-samples // BLOCK)

    def block(b):
        u = block_uniforms(seed, b, n + 1)
        start = _sample_from_measure(mu, u[:, 0], sys, depth)
        return _run_block(sys, W, fam.h, observe, n, start, u[:, 1:], depth)

    results = _map_blocks(block, nblocks)
    words = np.concatenate([r[0] for r in results])[:samples]
    h0 = np.concatenate([r[1] for r in results])[:samples]
    obs = [np.concatenate([r[2][i] for r in results])[:samples] for i in range(len(observe))]
    return words, h0, obs, mu.total_mass


def disintegration_exact(fam, f: StepFunction, n: int) -> float:
    """``sum_x mu(x) sum_w cylinder_mass(P_x, w) f(tau_w x)`` by explicit
    enumeration of cells and branch words."""
    depth = max(fam.mu.depth, fam.W.depth, fam.h.depth, f.depth)
    mu = fam.measure_at(depth)
    if mu.depth < depth:
        raise ResolutionMismatch("the start measure is coarser than the functions")
    table = cell_table(fam.sys, depth)
    syms = table.symbol_words()
    total = 0.0
    for c in range(table.size):
        if mu.masses[c] == 0:
            continue
        x = Point(tuple(syms[c]))
        P = PathMeasure(fam.sys, fam.W, fam.h, x)
        acc = 0.0
        for w in all_words(P, n):
            pts = _orbit(P, w)
            acc += cylinder_mass(P, w) * f.at(pts[-1])
        total += mu.masses[c] * acc
    return total


def disintegration_residual(fam, f: StepFunction, n: int, samples=0, seed=0):
    """Compare ``omega_n(f)`` with its disintegration over ``x ~ mu``.

    Always includes the exact enumeration; with ``samples > 0`` also a Monte
    Carlo estimate and its standard error.
    """
    target = complex(fam.omega(f, n))
    exact = complex(disintegration_exact(fam, f, n))
    out = {"n": n, "omega": target.real if target.imag == 0 else target,
           "exact": exact.real if exact.imag == 0 else exact,
           "exact_residual": abs(exact - target)}
    if samples:
        words, h0, obs, mass = _walk_from_measure(fam, fam.W, [f], n, samples, seed)
        y = mass * h0 * obs[0][:, -1]
        mean = float(np.mean(y))
        stderr = float(np.std(y, ddof=1) / np.sqrt(samples))
        out.update({"samples": samples, "mean": mean, "stderr": stderr,
                    "mc_residual": abs(mean - target.real),
                    "z": abs(mean - target.real) / stderr if stderr > 0 else 0.0})
    return out


# ---------------------------------------------------------------------------
# Psi: solenoid prefixes <-> (x, word)

def psi(sys, x_hat):
    """``(x_0, (w_1, ..., w_n))`` with ``x_j = tau_{w_j}(x_{j-1})``."""
    x_hat = list(x_hat)
    if not x_hat:
        raise NotAnOrbit("empty prefix")
    word = []
    for prev, cur in zip(x_hat, x_hat[1:]):
        if not same_point(sys, forward(sys, cur), prev):
            raise NotAnOrbit(f"r({cur.word}) != {prev.word}")
        word.append(branch_of(sys, cur))
    return x_hat[0], tuple(word)


def psi_inv(sys, x: Point, word):
    pts = [x]
    for k in word:
        pts.append(branch(sys, int(k), pts[-1]))
    return pts


def rhat_prefix(sys, x_hat):
    """``rhat(x_0, x_1, ...) = (r(x_0), x_0, x_1, ...)`` on a finite prefix."""
    x_hat = list(x_hat)
    return [forward(sys, x_hat[0])] + x_hat


def shift_S(sys, x: Point, word):
    """``S(x, w) = (r(x), w_x w)``."""
    return forward(sys, x), (branch_of(sys, x),) + tuple(word)


def conjugacy_residual(sys, x_hat) -> int:
    """Number of mismatching symbols between ``Psi(rhat x)`` and
    ``S(Psi x)`` (0 when the conjugacy holds)."""
    y0, w1 = psi(sys, rhat_prefix(sys, x_hat))
    y1, w2 = shift_S(sys, *psi(sys, x_hat))
    bad = 0 if same_point(sys, y0, y1) else 1
    bad += sum(a != b for a, b in itertools.zip_longest(w1, w2))
    return bad


# ---------------------------------------------------------------------------

def cocycle_convergence(fam, h0: StepFunction, n=200, samples=10_000, seed=0,
                        eps=1e-3, checkpoints=None):
    """Follow ``(h0/h)(x_j)`` along sampled paths from ``x ~ mu``.

    The late fluctuation of a path after step ``m`` is
    ``max_{j >= m} |v_j - v_n|``; the summary reports, per checkpoint ``m``,
    the fraction of paths whose fluctuation exceeds ``eps``.
    """
    ratio, _ = safe_divide(h0, fam.h)
    words, hstart, obs, _ = _walk_from_measure(fam, fam.W, [ratio.real()], n, samples, seed)
    v = obs[0]
    if checkpoints is None:
        checkpoints = sorted({n // 4, n // 2})
    final = v[:, -1:]
    stats = {}
    for m in checkpoints:
        fl = np.max(np.abs(v[:, m:] - final), axis=1)
        stats[int(m)] = {"fraction_above_eps": float(np.mean(fl > eps)),
                         "max_fluctuation": float(fl.max()),
                         "mean_fluctuation": float(fl.mean())}
    mid = n // 2
    late = np.max(np.abs(v[:, mid:] - final), axis=1)
    return {"n": n, "samples": samples, "eps": eps,
            "fraction_above_eps": float(np.mean(late > eps)),
            "checkpoints": stats, "per_path_fluctuation": late}
