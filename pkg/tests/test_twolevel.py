import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import two_level_energies
from quasiherm import matops, metric, twolevel
from quasiherm.errors import DegenerateParams, LoopHitsEP, NotPositiveDefinite
from quasiherm.twolevel import TwoLevelParams

EP = TwoLevelParams(1, 1, math.pi / 2)
thetas = st.floats(-1.2, 1.2)
gammas = st.floats(-0.5, 0.5)


def test_hermitian_limit_theta_zero():
    np.testing.assert_allclose(twolevel.build_H(TwoLevelParams(1, 1, 0)), [[1, 1], [1, 1]])


def test_zero_coupling_with_nonzero_imaginary_part_rejected():
    with pytest.raises(DegenerateParams):
        TwoLevelParams(1, 0, 0.3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 2), st.floats(0.2, 2), thetas)
def test_exact_eigensystem_matches_closed_form_and_numerics(r, s, th):
    p = TwoLevelParams(r, s, th)
    ex = twolevel.exact_eigensystem(p)
    Em, Ep = two_level_energies(r, s, th)
    assert ex.E_minus == pytest.approx(Em, abs=1e-12)
    assert ex.E_plus == pytest.approx(Ep, abs=1e-12)
    H = twolevel.build_H(p)
    if abs(p.discriminant) > 1e-6:
        for E, v in ((ex.E_minus, ex.v_minus), (ex.E_plus, ex.v_plus)):
            np.testing.assert_allclose(H @ v, E * v, atol=1e-10)
    assert ex.complex_regime == (not p.real_spectrum)


def test_broken_regime_has_conjugate_pair():
    ex = twolevel.exact_eigensystem(TwoLevelParams(2, 1, math.pi / 2))
    assert ex.complex_regime
    assert ex.E_minus == pytest.approx(ex.E_plus.conjugate())


def test_build_theta_refuses_off_domain():
    with pytest.raises(NotPositiveDefinite):
        twolevel.build_theta(TwoLevelParams(1, 1, math.pi / 2))
    with pytest.raises(NotPositiveDefinite):
        twolevel.build_theta(TwoLevelParams(1, 1, 0.7, 1.0))


@settings(max_examples=50, deadline=None)
@given(thetas, gammas)
def test_theta_is_metric(th, g):
    p = TwoLevelParams(1, 1, th, g)
    if not p.positive_metric or 1 - (math.sin(g) ** 2 + p.sin_alpha**2) < 1e-6:
        return
    T = twolevel.build_theta(p).theta
    H = twolevel.build_H(p)
    assert np.abs(T @ H - H.conj().T @ T).max() < 1e-12
    assert np.linalg.eigvalsh(T)[0] == pytest.approx(1 - math.hypot(math.sin(g), p.sin_alpha), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(thetas, gammas)
def test_hermitize_offdiagonal_closed_form(th, g):
    p = TwoLevelParams(1, 1, th, g)
    if 1 - (math.sin(g) ** 2 + p.sin_alpha**2) < 1e-3:
        return
    h = twolevel.hermitize(p)
    assert matops.is_hermitian(h, 1e-12)[0]
    # S is determined up to a unitary; |h01| and the diagonal are invariants here
    if g == 0:
        assert abs(h[0, 1]) == pytest.approx(math.sqrt(p.discriminant), abs=1e-12)
        assert abs(twolevel.offdiagonal_f(p)) == pytest.approx(math.sqrt(p.discriminant), abs=1e-12)


def test_hermitize_at_pi_over_six():
    h = twolevel.hermitize(TwoLevelParams(1, 1, math.pi / 6))
    np.testing.assert_allclose(h, np.full((2, 2), math.sqrt(3) / 2), atol=1e-12)


def test_ep_report():
    rep = twolevel.ep_report(EP)
    assert rep.is_ep
    np.testing.assert_allclose(rep.jordan_form, [[0, 1], [0, 0]], atol=1e-12)
    assert rep.alignment_angle <= 1e-6
    assert rep.theta_min_eigenvalue <= 1e-12
    assert not twolevel.ep_report(TwoLevelParams(1, 1, math.pi / 6)).is_ep


def test_branch_point_loops():
    assert twolevel.branch_point_check(EP, 0.1, parameter="s")
    assert twolevel.branch_point_check(EP, 0.1, parameter="r")
    assert not twolevel.branch_point_check(TwoLevelParams(1, 1, math.pi / 6), 0.1, parameter="s")
    # simple zero of the discriminant in θ when r > s
    assert twolevel.branch_point_check(TwoLevelParams(1.2, 1, math.asin(1 / 1.2)), 0.1)


def test_branch_point_theta_loop_double_zero_at_r_equals_s():
    assert not twolevel.branch_point_check(EP, 0.1, parameter="theta")


def test_branch_loop_through_ep():
    with pytest.raises(LoopHitsEP):
        twolevel.branch_point_check(EP, 0.1, parameter="s", center=1.1)


@settings(max_examples=40, deadline=None)
@given(thetas, gammas)
def test_sigma_z_residual_closed_form(th, g):
    p = TwoLevelParams(1, 1, th, g)
    if not p.positive_metric:
        return
    ok, res = twolevel.sigma_z_admissibility(p)
    assert res == pytest.approx(2 * math.hypot(math.sin(g), p.sin_alpha), abs=1e-12)
    assert ok == (res <= 1e-10)


def test_proper_spin_observable_spectrum():
    p = TwoLevelParams(1, 1, 0.7, 0.2)
    Sz = twolevel.proper_spin_observable(p)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(Sz).real), [-1, 1], atol=1e-12)
    assert metric.is_observable(Sz, twolevel.certified_metric(p))[0]


def test_pauli_verdicts_at_gamma_zero():
    v = twolevel.pauli_verdicts(TwoLevelParams(1, 1, math.pi / 6))
    assert v["sigma_y"]["observable"] and v["Sigma_z"]["observable"]
    assert not v["sigma_z"]["observable"] and not v["sigma_x"]["observable"]


def test_theta_norms_vanish_at_ep_in_both_conventions():
    at_ep = twolevel.ep_report(TwoLevelParams(1, 1, math.pi / 2))
    np.testing.assert_allclose(at_ep.theta_norms_raw, 0.0, atol=1e-12)
    np.testing.assert_allclose(at_ep.theta_norms_unit, 0.0, atol=1e-12)
    away = twolevel.ep_report(TwoLevelParams(1, 1, math.pi / 6))
    # the raw vectors have Euclidean norm² 2
    np.testing.assert_allclose(away.theta_norms_raw, 2 * np.array(away.theta_norms_unit))
    assert min(away.theta_norms_unit) > 0
