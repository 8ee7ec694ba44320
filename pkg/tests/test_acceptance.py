"""Acceptance criteria 1-12, each at its stated tolerance.

Every test prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary.
"""

import time
from pathlib import Path

import numpy as np

import oracles as o
from solenoid_kit.cli import main
from solenoid_kit.dynamics import CircleMap, circle_point
from solenoid_kit.multiplicity import MultFn, detail_multiplicity, induced_multiplicity
from solenoid_kit.pathspace import (PathMeasure, all_words, cocycle_convergence,
                                    consistency_residual, disintegration_residual)
from solenoid_kit.solenoid import (apply_U, apply_U_star, cocycle_to_harmonic, cond_expect,
                                   harmonic_space, harmonic_to_cocycle, lift_to_martingale,
                                   omega_compat_residual, radon_nikodym_residual,
                                   shift_dilation_check, tower_residual)
from solenoid_kit.steps import StepFunction, bernoulli, dirac, lebesgue
from solenoid_kit.transfer import (ifs_moment, invariance_residual, normalized_weight,
                                   prf_residual, solve_perron, strong_invariance_residual)
from solenoid_kit.wavelet import (FreqGrid, cascade_eval, cascade_product,
                                  embed_isometry_residual, haar, haar_phi_hat,
                                  qmf_residual, shannon)

from conftest import CANTOR, GOLDEN, haar_family, random_step, shannon_family

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_criterion_01_golden_perron(report):
    W = StepFunction.constant(GOLDEN, 1, 1.0)
    t0 = time.perf_counter()
    data = solve_perron(W, tol=1e-13)
    dt = time.perf_counter() - t0
    dense = max(np.linalg.eigvals(np.array([[1.0, 1.0], [1.0, 0.0]])).real)
    err = abs(data.lambda0 - o.GOLDEN_LAMBDA)
    ok = err <= 1e-10 and abs(dense - o.GOLDEN_LAMBDA) <= 1e-12 \
        and data.iterations <= 200 and dt < 0.1
    assert report(1, ok, f"lambda0 err {err:.1e} (tol 1e-10), {data.iterations} iterations "
                         f"(max 200), {dt * 1e3:.1f} ms (max 100)")


def test_criterion_02_normalized_ruelle(report):
    worst = {"lambda": 0.0, "h": 0.0, "nu": 0.0}
    for sys in [CircleMap(2), CircleMap(3), CircleMap(4), CANTOR]:
        data = solve_perron(normalized_weight(sys, 1), depth=4)
        ref = lebesgue(sys, 4) if sys.kind == "circle" else bernoulli(sys, 4, [0.5, 0.5])
        worst["lambda"] = max(worst["lambda"], abs(data.lambda0 - 1))
        worst["h"] = max(worst["h"], np.max(np.abs(data.h.values - 1)))
        worst["nu"] = max(worst["nu"], np.max(np.abs(data.nu.masses - ref.masses)))
    ok = all(v <= 1e-12 for v in worst.values())
    assert report(2, ok, "N=2,3,4 and Cantor: " + ", ".join(
        f"{k} dev {v:.1e}" for k, v in worst.items()) + " (tol 1e-12)")


def test_criterion_03_strong_invariance(report):
    res = 0.0
    for L in range(1, 11):
        res = max(res, strong_invariance_residual(lebesgue(CircleMap(2), L)),
                  strong_invariance_residual(bernoulli(CANTOR, L, [0.5, 0.5])))
    for L in range(1, 7):
        res = max(res, strong_invariance_residual(lebesgue(CircleMap(3), L)))
    d = dirac(CircleMap(2), 6, circle_point(2, 0, 1))
    inv, strong = invariance_residual(d), strong_invariance_residual(d)
    ok = res <= 1e-14 and inv <= 1e-14 and strong >= 0.1
    assert report(3, ok, f"Lebesgue/Bernoulli L<=10 residual {res:.1e} (tol 1e-14); "
                         f"Dirac invariance {inv:.1e}, strong {strong:.2f} (>= 0.1)")


def test_criterion_04_shannon(report):
    sh = shannon()
    prf = prf_residual(sh.m0, StepFunction.constant(sh.m0.sys, 1, 1.0))
    g = FreqGrid(8.0, 8 * 2 ** 8)
    s = cascade_product(sh, 2, 8, g)
    exact = np.array_equal(s.values, ((g.x >= -0.5) & (g.x < 0.5)).astype(complex))
    fam = shannon_family()
    phi = lambda x: cascade_eval(sh, 2, 8, x)
    emb = max(embed_isometry_residual(fam, StepFunction.constant(fam.sys, 1, 1.0), 0, phi, 1.0),
              embed_isometry_residual(fam, StepFunction.indicator(fam.sys, 1, [0]), 1, phi, 1.0))
    ok = prf <= 1e-15 and exact and emb <= 1e-8
    assert report(4, ok, f"prf {prf:.1e} (tol 1e-15), cascade exact on 2048 points: {exact}, "
                         f"embedding {emb:.1e} (tol 1e-8)")


def test_criterion_05_haar(report):
    q = qmf_residual(haar())
    g = FreqGrid(8.0, 8 * 2 ** 8)
    s = cascade_product(haar(), 2, 25, g)
    dev = float(np.max(np.abs(s.values - haar_phi_hat(g.x))))
    ok = q <= 1e-12 and dev <= 1e-6
    assert report(5, ok, f"qmf {q:.1e} (tol 1e-12), cascade K=25 sup dev {dev:.1e} (tol 1e-6)")


def test_criterion_06_solenoid_identities(report):
    rng = np.random.default_rng(6)
    worst = {"compat": 0.0, "rn": 0.0, "mart": 0.0, "tower": 0.0}
    for fam in (haar_family(), shannon_family()):
        for _ in range(20):
            f = random_step(fam.sys, 3, rng)
            for n in range(7):
                worst["compat"] = max(worst["compat"], omega_compat_residual(fam, f, n))
                worst["rn"] = max(worst["rn"], radon_nikodym_residual(fam, f, n))
            m = lift_to_martingale(fam, f, 3, 6)
            for n in range(7):
                for k in range(7 - n):
                    worst["mart"] = max(worst["mart"], cond_expect(m, n, k).dist(m.levels[n]))
            for n in range(4):
                worst["tower"] = max(worst["tower"], tower_residual(m, n, n + 2))
    haar_fam = haar_family()
    iso = 0.0
    for _ in range(20):
        m = lift_to_martingale(haar_fam, random_step(haar_fam.sys, 2, rng), 2, 5)
        iso = max(iso, abs(apply_U(m).norm() - m.norm()),
                  apply_U_star(apply_U(m)).hilbert_dist(m))
    sh = shannon_family()
    m = lift_to_martingale(sh, StepFunction.constant(sh.sys, 1, 1.0), 0, 4)
    P = apply_U(apply_U_star(m))
    idem = apply_U(apply_U_star(P)).hilbert_dist(P)
    gap = P.hilbert_dist(m)
    # as level arrays U*U m differs from m on omega-null cells
    array_gap = apply_U_star(apply_U(m)).dist(m)
    ok = all(v <= 1e-12 for v in worst.values()) and iso <= 1e-10 and idem <= 1e-10 \
        and abs(gap - o.SHANNON_UUSTAR_GAP) <= 1e-12 and array_gap > 0.1
    assert report(6, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
                  + f" (tol 1e-12); Haar U isometry {iso:.1e} (tol 1e-10); Shannon UU* "
                    f"idempotency {idem:.1e} (tol 1e-10), ||UU*1 - 1|| = {gap:.4f}, "
                    f"U*U vs I on levels {array_gap:.2f}")


def _path_pairs():
    haar_fam = haar_family(4)
    sh = shannon_family()
    out = []
    for fam in (haar_fam, sh):
        for j in (0, 3, 5):
            out.append(PathMeasure(fam.sys, fam.W, fam.h, circle_point(2, j, 3)))
    return out


def test_criterion_07_path_space(report):
    cons = 0.0
    for P in _path_pairs():
        for d in range(8):
            for w in all_words(P, d):
                cons = max(cons, consistency_residual(P, w))
    rng = np.random.default_rng(7)
    exact = 0.0
    for fam in (haar_family(4), shannon_family()):
        for n in range(6):
            exact = max(exact, disintegration_residual(fam, random_step(fam.sys, 3, rng), n)
                        ["exact_residual"])
    fam = haar_family(4)
    f = random_step(fam.sys, 3, rng)
    t0 = time.perf_counter()
    mc = disintegration_residual(fam, f, 5, samples=100_000, seed=2024)
    dt = time.perf_counter() - t0
    ok = cons <= 1e-12 and exact <= 1e-12 and mc["z"] <= 4 and dt < 5
    assert report(7, ok, f"consistency to depth 8 {cons:.1e} (tol 1e-12), exact "
                         f"disintegration n<=5 {exact:.1e} (tol 1e-12), Monte Carlo "
                         f"{mc['z']:.2f} s.e. (max 4) in {dt:.2f} s (max 5)")


def test_criterion_08_multiplicity(report):
    circ = detail_multiplicity(MultFn.constant(CircleMap(2), 4, 1)).values
    g1 = induced_multiplicity(MultFn.constant(GOLDEN, 1, 1)).values
    m = MultFn(GOLDEN, 1, [2, 1])
    gi, gd = induced_multiplicity(m).values, detail_multiplicity(m).values
    ok = bool(np.all(circ == 1)) and tuple(g1) == o.GOLDEN_INDUCED_OF_ONE \
        and tuple(gi) == o.GOLDEN_INDUCED_OF_21 and tuple(gd) == o.GOLDEN_DETAIL_OF_21
    assert report(8, ok, f"circle detail all 1: {bool(np.all(circ == 1))}; golden induced "
                         f"{tuple(int(v) for v in gi)}, detail {tuple(int(v) for v in gd)} "
                         f"vs enumeration {o.GOLDEN_INDUCED_OF_21}, {o.GOLDEN_DETAIL_OF_21}")


def test_criterion_09_cocycles(report):
    rt = 0.0
    for fam in (haar_family(), shannon_family()):
        for a in (1.0, -0.5, 2.0):
            h0 = a * fam.h
            rt = max(rt, cocycle_to_harmonic(harmonic_to_cocycle(fam, h0)).dist(h0))
    sh = shannon_family()
    basis = harmonic_space(sh, 3)
    h0 = StepFunction.indicator(sh.sys, 1, [0])
    rt = max(rt, cocycle_to_harmonic(harmonic_to_cocycle(sh, h0)).dist(h0))
    out = cocycle_convergence(sh, h0, n=200, samples=10_000, seed=9, checkpoints=[50, 100, 200])
    frac = out["fraction_above_eps"]
    ok = rt <= 1e-12 and frac < 0.01 and len(basis) == 2
    assert report(9, ok, f"round trip {rt:.1e} (tol 1e-12); harmonic space dim {len(basis)}; "
                         f"late-fluctuation fraction {frac:.4f} (< 0.01) over 10^4 paths, "
                         f"n=200")


def test_criterion_10_shift_dilation(report):
    res = max(shift_dilation_check(k, -16, 16) for k in (1, "3/2", -2))
    assert report(10, res <= 1e-15, f"residual {res:.1e} (tol 1e-15)")


def test_criterion_11_cantor_moments(report):
    m1, m2 = ifs_moment(CANTOR, 1), ifs_moment(CANTOR, 2)
    e1, e2 = abs(m1 - float(o.CANTOR_M1)), abs(m2 - float(o.CANTOR_M2))
    assert report(11, e1 <= 1e-12 and e2 <= 1e-10,
                  f"first moment err {e1:.1e} (tol 1e-12), second moment err {e2:.1e} (tol 1e-10)")


def test_criterion_12_cli(report, tmp_path):
    codes = {name: main(["check", "--config", str(CONFIGS / name), "--out", str(tmp_path / name)])
             for name in ("haar_check.json", "shannon_check.json", "haar_corrupted_h.json")}
    same = True
    for cmd, cfg in [("pathsim", "haar_pathsim.json"), ("cascade", "shannon_cascade.json"),
                     ("solenoid", "haar_solenoid.json")]:
        outs = []
        for i in range(2):
            d = tmp_path / f"{cmd}{i}"
            main([cmd, "--config", str(CONFIGS / cfg), "--out", str(d), "--seed", "77"])
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        same = same and outs[0] == outs[1] and bool(outs[0])
    ok = codes == {"haar_check.json": 0, "shannon_check.json": 0,
                   "haar_corrupted_h.json": 2} and same
    assert report(12, ok, f"exit codes {list(codes.values())} (want [0, 0, 2]), "
                          f"byte-identical reruns: {same}")
