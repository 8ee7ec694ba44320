import numpy as np
import pytest

from solenoid_kit.errors import DepthExhausted, DominationFailure, LevelOutOfRange, NotHarmonic
from solenoid_kit.solenoid import (apply_pi, apply_U, apply_U_star, cocycle_to_harmonic,
                                   compose_rhat, compose_rhat_inv, cond_expect,
                                   constant_martingale, harmonic_space,
                                   harmonic_to_cocycle, inner_product,
                                   intertwine_residual, lift_to_martingale,
                                   omega_compat_residual, radon_nikodym_residual,
                                   shift_dilation_check, tower_residual)
from solenoid_kit.steps import StepFunction

from conftest import haar_family, random_step, shannon_family


def test_omega_family_is_compatible(prf_family, rng):
    for n in range(5):
        f = random_step(prf_family.sys, 3, rng)
        assert omega_compat_residual(prf_family, f, n) <= 1e-12
        assert radon_nikodym_residual(prf_family, f, n) <= 1e-12


def test_broken_h_breaks_radon_nikodym(rng):
    fam = haar_family()
    fam.h = StepFunction(fam.sys, 1, [1.0, 0.5])
    f = random_step(fam.sys, 3, rng)
    assert radon_nikodym_residual(fam, f, 2) > 1e-6


def test_lift_is_martingale(prf_family, rng):
    m = lift_to_martingale(prf_family, random_step(prf_family.sys, 3, rng), 2, 5)
    assert m.compat_residual() <= 1e-12
    for n in range(m.K + 1):
        for k in range(m.K - n + 1):
            assert cond_expect(m, n, k).dist(m.levels[n]) <= 1e-12


def test_level_norms_nondecreasing_then_flat(rng):
    fam = haar_family()
    m = lift_to_martingale(fam, random_step(fam.sys, 2, rng), 2, 5)
    norms = m.level_norms()
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))
    assert abs(norms[-1] - norms[-2]) < 1e-10


def test_inner_product_of_constant():
    fam = haar_family()
    val, inc = inner_product(constant_martingale(fam, 3), constant_martingale(fam, 3))
    assert val == pytest.approx(1.0)
    assert abs(inc) <= 1e-14


def test_tower_property(prf_family, rng):
    m = lift_to_martingale(prf_family, random_step(prf_family.sys, 3, rng), 3, 5)
    for n in range(4):
        for k in range(n, 5):
            assert tower_residual(m, n, k) <= 1e-12


def test_U_is_isometric_and_unitary_for_haar(rng):
    fam = haar_family()
    m = lift_to_martingale(fam, random_step(fam.sys, 2, rng), 1, 4)
    assert abs(apply_U(m).norm() - m.norm()) <= 1e-10
    assert abs(apply_U_star(m).norm() - m.norm()) <= 1e-10
    assert apply_U_star(apply_U(m)).hilbert_dist(m) <= 1e-10
    assert apply_U(apply_U_star(m)).hilbert_dist(m) <= 1e-10


def test_shannon_UUstar_is_a_proper_projection():
    fam = shannon_family()
    m = constant_martingale(fam, 4)
    P = apply_U(apply_U_star(m))
    assert apply_U(apply_U_star(P)).hilbert_dist(P) <= 1e-10
    assert P.hilbert_dist(m) == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert apply_U(m).norm() == pytest.approx(m.norm())


def test_U_covariance(prf_family, rng):
    m = lift_to_martingale(prf_family, random_step(prf_family.sys, 2, rng), 1, 4)
    g = random_step(prf_family.sys, 2, rng)
    lhs = apply_U(apply_pi(g, m))
    rhs = apply_pi(g.compose_r(), apply_U(m))
    assert lhs.dist(rhs) <= 1e-12


def test_rhat_roundtrip(prf_family, rng):
    m = lift_to_martingale(prf_family, random_step(prf_family.sys, 2, rng), 2, 4)
    back = compose_rhat(compose_rhat_inv(m))
    assert back.dist(m) <= 1e-12
    c = constant_martingale(prf_family, 3)
    assert compose_rhat_inv(c).levels[0].dist(c.levels[0]) <= 1e-14
    with pytest.raises(DepthExhausted):
        compose_rhat(constant_martingale(prf_family, 0))


def test_level_out_of_range():
    m = constant_martingale(haar_family(), 2)
    with pytest.raises(LevelOutOfRange):
        m.level(3)
    with pytest.raises(LevelOutOfRange):
        cond_expect(m, 1, 2)


def test_cocycle_roundtrip(prf_family):
    h = prf_family.h
    c = harmonic_to_cocycle(prf_family, 2.5 * h)
    assert c.value.dist(StepFunction.constant(h.sys, 1, 2.5)) <= 1e-12
    assert cocycle_to_harmonic(c).dist(2.5 * h) <= 1e-12
    assert c.level_residual() == 0.0


def test_shannon_harmonic_space_and_cocycle():
    fam = shannon_family()
    basis = harmonic_space(fam, 3)
    assert len(basis) == 2
    h0 = StepFunction.indicator(fam.sys, 1, [0])
    c = harmonic_to_cocycle(fam, h0)
    assert c.martingale.compat_residual() <= 1e-10
    assert fam.R(cocycle_to_harmonic(c)).dist(h0) <= 1e-10


def test_cocycle_errors():
    fam = shannon_family()
    with pytest.raises(NotHarmonic):
        harmonic_to_cocycle(fam, StepFunction(fam.sys, 2, [1.0, 0.0, 0.0, 0.0]))
    fam.h = StepFunction(fam.sys, 1, [1.0, 0.0])
    with pytest.raises((DominationFailure, NotHarmonic)):
        harmonic_to_cocycle(fam, StepFunction.constant(fam.sys, 1, 1.0))


def test_intertwiners():
    haar, shan = haar_family(), shannon_family()
    c = harmonic_to_cocycle(haar, haar.h)
    assert intertwine_residual(haar.m0, haar.m0, c) <= 1e-12
    assert intertwine_residual(haar.m0, shan.m0.refine(haar.m0.depth), c) > 0.1


@pytest.mark.parametrize("k,jmin,jmax", [(1, -8, 8), (0, -4, 4), ("3/2", -16, 16), (-2, -16, 16)])
def test_shift_dilation(k, jmin, jmax):
    assert shift_dilation_check(k, jmin, jmax) <= 1e-15


def test_shift_dilation_rejects_non_dyadic():
    with pytest.raises(ValueError):
        shift_dilation_check("1/3", 0, 4)
