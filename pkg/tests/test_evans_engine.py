import math

import numpy as np
import pytest

from src.errors import DomainError
from src.evans_engine import (
    assemble_A, asymptotic_matrix, convergence_arc, count_zeros, d2_lambda_at_origin, evans,
    evans_derivative, evans_kdv_closed, evans_kdv_ode, evans_product_profile, evans_scaled,
    kdv_convergence, kdv_ray_edge, shoot,
)
from src.models import Contour, EvansMethod, EvansOptions, PlasmaParams, WaveSample
from src.stability_criteria import dq_dc


def test_constant_state_is_one():
    value = evans(0.3 + 0.1j, PlasmaParams(1.0, 0.0))
    assert value.D == 1.0
    assert value.method is EvansMethod.CONSTANT_STATE


def test_origin_of_constant_state_is_excluded():
    with pytest.raises(DomainError):
        evans(0.0, PlasmaParams(1.0, 0.0))


def test_far_field_matrix(k1_params):
    lam = 0.4 - 0.2j
    np.testing.assert_allclose(assemble_A(WaveSample.far_field(50.0), lam, k1_params),
                               asymptotic_matrix(lam, k1_params))


def test_matrix_is_affine_in_lambda(k1_profile):
    sample = k1_profile.sample_at(1.5)
    params = k1_profile.params
    A0 = assemble_A(sample, 0.0, params)
    A1 = assemble_A(sample, 1.0, params)
    A2 = assemble_A(sample, 0.3 + 0.7j, params)
    np.testing.assert_allclose(A2, A0 + (0.3 + 0.7j) * (A1 - A0), atol=1e-14)


def test_sonic_point_is_rejected(k1_params):
    u = k1_params.c - 0.5 * math.sqrt(k1_params.K)
    sample = WaveSample(x=0.0, n=0.1, u=u, phi=0.1, E=0.0, dn_dx=0.0, du_dx=0.0, d2phi_dx2=0.0)
    with pytest.raises(DomainError) as info:
        assemble_A(sample, 0.1, k1_params)
    assert info.value.tag == "sonic_point"


def test_conjugate_symmetry(k1_params, k1_profile):
    lam = 0.004 + 0.003j
    upper = evans(lam, k1_params, k1_profile).D
    lower = evans(lam.conjugate(), k1_params, k1_profile).D
    assert lower == pytest.approx(upper.conjugate(), rel=1e-6, abs=1e-9)


def test_meet_at_zero_agrees_with_backward_sweep(k1_params, k1_profile):
    lam = 0.01 + 0.01j
    backward = evans(lam, k1_params, k1_profile)
    meet = evans(lam, k1_params, k1_profile, EvansOptions(meet_at_zero=True))
    assert meet.method is EvansMethod.MEET_AT_ZERO
    assert meet.D == pytest.approx(backward.D, rel=1e-6, abs=1e-8)
    assert set(backward.residuals) >= {"boundary_mismatch", "alignment_residual", "X", "nfev"}


def test_bidirectional_product_is_constant(k1_params, k1_profile):
    values = evans_product_profile(0.02 - 0.01j, k1_params, [-5.0, 0.0, 5.0], k1_profile)
    for v in values[1:]:
        assert v == pytest.approx(values[0], rel=1e-6, abs=1e-9)


def test_shoot_starts_on_decaying_mode(k1_params, k1_profile):
    theta = shoot(0.05, k1_params, [0.0, 10.0], k1_profile)
    assert theta.shape == (2, 4)
    assert np.all(np.isfinite(theta))


def test_profile_mismatch_is_rejected(k1_profile):
    with pytest.raises(DomainError):
        evans(0.01, PlasmaParams(1.0, 0.04), k1_profile)


def test_kdv_closed_value():
    assert evans_kdv_closed(1.0, 1.0).real == pytest.approx(0.012443, abs=1e-5)
    assert abs(evans_kdv_closed(1.0, 1.0).imag) < 1e-12


def test_kdv_closed_has_double_zero_at_origin():
    assert abs(evans_kdv_closed(1e-4, 1.0)) < 1e-6


def test_kdv_excluded_ray():
    assert kdv_ray_edge(1.0) == pytest.approx(-2.0 * math.sqrt(2.0) / (3.0 * math.sqrt(3.0)))
    with pytest.raises(DomainError):
        evans_kdv_closed(-1.0, 1.0)


@pytest.mark.slow
@pytest.mark.parametrize("V", [1.0, math.sqrt(2.0)])
def test_kdv_closed_form_matches_shooting(V):
    radii = [0.5, 1.0, 2.5, 5.0]
    angles = np.linspace(-math.pi / 2 + 0.1, math.pi / 2 - 0.1, 5)
    for r in radii:
        for a in angles:
            L = r * complex(math.cos(a), math.sin(a))
            assert abs(evans_kdv_closed(L, V) - evans_kdv_ode(L, V)) < 1e-6


def test_scaled_evans_at_zero_amplitude_is_kdv():
    assert evans_scaled(1.0 + 1j, 0.0, 1.0) == evans_kdv_closed(1.0 + 1j, math.sqrt(2.0))


def test_scaled_evans_rejects_points_left_of_omega():
    with pytest.raises(DomainError):
        evans_scaled(-1.0, 0.05, 1.0)


def test_convergence_arc_endpoints():
    arc = convergence_arc(1.0, n=16, radius=5.0)
    V = math.sqrt(2.0)
    c0 = 0.5 * math.sqrt(2.0 * V)
    eta = c0 / 2.0 * (1.0 - c0 ** 2 / (2.0 * V))
    assert len(arc) == 16
    np.testing.assert_allclose(np.abs(arc), 5.0)
    assert arc.real.min() == pytest.approx(-eta)


def test_zero_count_of_constant_state():
    assert count_zeros(Contour.circle(0j, 0.1), PlasmaParams(1.0, 0.0)).count == 0


def test_cauchy_setup_is_validated(k1_params):
    with pytest.raises(DomainError):
        evans_derivative(0.0, k1_params, order=1, radius=0.01, n_nodes=7)


@pytest.mark.slow
@pytest.mark.parametrize("K, eps", [(1.0, 0.05), (1.0, 0.02), (0.001, 0.05)])
def test_double_zero_at_origin(K, eps):
    params = PlasmaParams(K, eps)
    inner = count_zeros(Contour.circle(0j, 0.5 * eps ** 1.5), params)
    assert inner.count == 2
    outer = count_zeros(Contour.half_annulus(0.1, 5.0), params)
    assert outer.count == 0


@pytest.mark.slow
def test_scaled_evans_converges_to_kdv():
    eps_list = [0.1, 0.05, 0.025, 0.0125]
    rows = kdv_convergence(1.0, eps_list, convergence_arc(1.0, n=16))
    diffs = [row["sup_diff"] for row in rows]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    assert diffs[2] < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("K, eps", [(1.0, 0.05), (1.0, 0.1), (0.001, 0.1)])
def test_second_derivative_sign_matches_criterion(K, eps):
    params = PlasmaParams(K, eps)
    d2 = d2_lambda_at_origin(params)
    assert abs(d2.imag) <= 1e-6 * abs(d2.real)
    assert d2.real > 0
    assert dq_dc(params) > 0


@pytest.mark.slow
def test_first_derivative_vanishes_at_origin(k1_params):
    r = 0.3 * k1_params.eps ** 1.5
    d1 = evans_derivative(0.0, k1_params, order=1, radius=r, check=False)
    d2 = d2_lambda_at_origin(k1_params)
    assert abs(d1) < 1e-4 * abs(d2) * r


@pytest.mark.parametrize("x0", [-2.0, 1.0])
def test_origin_solution_is_translation_mode(k1_params, k1_profile, x0):
    theta = shoot(0.0, k1_params, [x0], k1_profile)[0]
    sample = k1_profile.sample_at(x0)
    mode = np.array([sample.dn_dx, sample.du_dx, sample.dphi_dx, sample.d2phi_dx2])
    cosine = abs(np.vdot(mode, theta)) / (np.linalg.norm(mode) * np.linalg.norm(theta))
    assert math.acos(min(cosine, 1.0)) < 1e-4


def test_evans_function_is_analytic(k1_params, k1_profile):
    lam0, h = 0.02 + 0.01j, 3e-5

    def D(lam):
        return evans(lam, k1_params, k1_profile).D

    d_re = (D(lam0 + h) - D(lam0 - h)) / (2 * h)
    d_im = (D(lam0 + 1j * h) - D(lam0 - 1j * h)) / (2 * h)
    assert abs(d_im - 1j * d_re) < 1e-4 * abs(d_re)


def test_kdv_shooting_at_origin_vanishes():
    assert abs(evans_kdv_ode(0.0, 1.0)) < 1e-7


def test_kdv_shooting_is_real_on_positive_axis():
    value = evans_kdv_ode(1.0, math.sqrt(2.0))
    assert abs(value.imag) < 1e-9
    assert value.real > 0


@pytest.mark.slow
def test_large_lambda_limit_scales_with_amplitude():
    offsets = [abs(evans(50.0, PlasmaParams(1.0, eps)).D - 1.0) for eps in (0.01, 0.04)]
    assert offsets[0] < offsets[1]
    ratio = (offsets[0] / 0.1) / (offsets[1] / 0.2)
    assert 1.0 / 3.0 < ratio < 3.0
