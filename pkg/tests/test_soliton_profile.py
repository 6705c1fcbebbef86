import math

import numpy as np
import pytest

from src.errors import DomainError, ExistenceError
from src.models import PlasmaParams
from src.soliton_profile import (
    compute_profile, critical_amplitude, default_half_domain, enthalpy, far_field_decay_rate,
    first_integral_g, get_profile, ion_sound_speed, kdv_closeness, kdv_profile, peak_state,
    profile_c_derivative, sagdeev_potential_U,
)


@pytest.mark.parametrize("K, expected", [(0.001, 0.5475), (1.0, 0.1553), (10.0, 0.0524)])
def test_critical_amplitude(K, expected):
    assert critical_amplitude(K) == pytest.approx(expected, abs=1e-3)


def test_critical_amplitude_k0_matches_zeta0():
    zeta0 = 1.0 + critical_amplitude(0.0)
    assert zeta0 == pytest.approx(1.5852, abs=1e-3)
    assert zeta0 ** 2 + 1.0 == pytest.approx(math.exp(zeta0 ** 2 / 2.0), rel=1e-12)


def test_ion_sound_speed_rejects_negative_K():
    assert ion_sound_speed(1.0) == pytest.approx(math.sqrt(2.0))
    with pytest.raises(DomainError):
        ion_sound_speed(-0.1)


def test_params_reject_amplitudes_beyond_existence_range():
    with pytest.raises(ExistenceError) as info:
        PlasmaParams(1.0, 0.2)
    assert info.value.tag == "beyond_existence_range"
    with pytest.raises(DomainError):
        PlasmaParams(-1.0, 0.01)


def test_constant_state_has_no_peak():
    with pytest.raises(ExistenceError):
        peak_state(PlasmaParams(1.0, 0.0))


# (K, eps, n_s, n*, u*, phi*); n_s is None for K = 0
PEAK_ROWS = [
    (0.0, 0.01, None, 0.0305, 0.0299, 0.0298),
    (0.0, 0.03, None, 0.0950, 0.0893, 0.0880),
    (0.0, 0.40, None, 3.8463, 1.1111, 0.9383),
    (0.001, 0.01, 30.95, 0.0305, 0.0299, 0.0298),
    (0.001, 0.03, 31.58, 0.0949, 0.0893, 0.0880),
    (0.001, 0.40, 43.28, 3.8569, 1.1121, 0.9375),
    (0.001, 0.5465, 47.92, 38.6476, 1.5080, 1.1922),
    (0.001, 0.5470, 47.93, 41.2877, 1.5109, 1.1930),
    (0.001, 0.5474, 47.94, 45.3119, 1.5145, 1.1936),
    (1.0, 0.002, 0.4162, 0.0043, 0.0060, 0.0042),
    (1.0, 0.070, 0.4842, 0.1690, 0.2146, 0.1393),
    (1.0, 0.1550, 0.5692, 0.5529, 0.5587, 0.2805),
    (1.0, 0.1552, 0.5694, 0.5611, 0.5641, 0.2808),
    (10.0, 0.002, 0.0494, 0.0018, 0.0060, 0.0018),
    (10.0, 0.030, 0.0583, 0.0295, 0.0958, 0.0256),
    (10.0, 0.0522, 0.0653, 0.0634, 0.2009, 0.0417),
    (10.0, 0.0523, 0.0653, 0.0642, 0.2033, 0.0418),
]


@pytest.mark.parametrize("K, eps, n_s, n_star, u_star, phi_star", PEAK_ROWS)
def test_peak_values(K, eps, n_s, n_star, u_star, phi_star):
    params = PlasmaParams(K, eps)
    n, u, phi = peak_state(params)
    assert n == pytest.approx(n_star, abs=1e-3, rel=1e-3)
    assert u == pytest.approx(u_star, abs=1e-3)
    assert phi == pytest.approx(phi_star, abs=1e-3)
    if n_s is not None:
        assert params.c / math.sqrt(K) - 1.0 == pytest.approx(n_s, abs=1e-2)


@pytest.mark.parametrize("eps, n_star, u_star, phi_star", [
    (0.584, 870.5859, 1.5822, 1.2545),
    (0.5845, 1.492e3, 1.5834, 1.2553),
    (0.585, 5.209e3, 1.5847, 1.2561),
])
def test_peak_values_steep_k0_rows(eps, n_star, u_star, phi_star):
    n, u, phi = peak_state(PlasmaParams(0.0, eps))
    assert n == pytest.approx(n_star, rel=0.05)
    assert u == pytest.approx(u_star, abs=1e-3)
    assert phi == pytest.approx(phi_star, abs=1e-3)


def test_peak_density_increases_with_amplitude():
    grid = np.linspace(0.01, 0.15, 15)
    peaks = [peak_state(PlasmaParams(1.0, e))[0] for e in grid]
    assert all(b > a for a, b in zip(peaks, peaks[1:]))


def test_enthalpy_at_table_peak():
    H, dH = enthalpy(0.5529, PlasmaParams(1.0, 0.1550))
    assert H == pytest.approx(0.2805, abs=1e-3)
    assert dH > 0


def test_enthalpy_rejects_density_below_vacuum():
    with pytest.raises(DomainError):
        enthalpy(-1.0, PlasmaParams(1.0, 0.1))


@pytest.mark.parametrize("K, eps", [(0.001, 0.3), (1.0, 0.1), (1.0, 0.002), (10.0, 0.05)])
def test_first_integral_positive_below_peak_and_zero_at_peak(K, eps):
    params = PlasmaParams(K, eps)
    n_star = peak_state(params)[0]
    grid = np.linspace(0.0, n_star, 102)[1:-1]
    assert np.all(first_integral_g(grid, params) > 0)
    assert abs(first_integral_g(n_star, params)) < 1e-10


def test_first_integral_positive_sample():
    assert first_integral_g(0.25, PlasmaParams(1.0, 0.1)) > 0


@pytest.mark.parametrize("c, phi_star", [(1.40, 0.9383), (1.585, 1.2561)])
def test_sagdeev_root(c, phi_star):
    phi = peak_state(PlasmaParams(0.0, c - 1.0))[2]
    assert phi == pytest.approx(phi_star, abs=1e-3)
    assert abs(sagdeev_potential_U(phi, c)) < 1e-10


def test_sagdeev_potential_domain():
    assert sagdeev_potential_U(0.1, 1.2) > 0
    with pytest.raises(DomainError):
        sagdeev_potential_U(0.75, 1.2)


def test_profile_peak_and_symmetry(k1_profile):
    mid = len(k1_profile) // 2
    n_star = peak_state(k1_profile.params)[0]
    assert k1_profile.x[mid] == 0.0
    assert k1_profile.n[mid] == pytest.approx(n_star, rel=1e-12)
    assert k1_profile.E[mid] == 0.0
    np.testing.assert_allclose(k1_profile.n, k1_profile.n[::-1], rtol=0, atol=1e-15)
    np.testing.assert_allclose(k1_profile.E, -k1_profile.E[::-1], rtol=0, atol=1e-15)


def test_profile_increasing_up_to_peak(k1_profile):
    mid = len(k1_profile) // 2
    left = k1_profile.n[:mid + 1]
    resolved = left[left > 1e-8 * k1_profile.n_star]
    assert len(resolved) > mid // 2
    assert np.all(np.diff(resolved) > 0)


def test_profile_tail_bound(k1_profile):
    lam = far_field_decay_rate(k1_profile.params)
    assert abs(k1_profile.n[-1]) <= k1_profile.n_star * math.exp(-lam * k1_profile.X) * 10


def test_profile_fields_are_consistent(k1_profile):
    p = k1_profile.params
    np.testing.assert_allclose(k1_profile.u, p.c * k1_profile.n / (1.0 + k1_profile.n), rtol=1e-13, atol=1e-16)
    np.testing.assert_allclose(k1_profile.d2phi_dx2, np.expm1(k1_profile.phi) - k1_profile.n, atol=1e-14)
    dphi = np.gradient(k1_profile.phi, k1_profile.x)
    np.testing.assert_allclose(dphi, -k1_profile.E, atol=1e-5)
    dn = np.gradient(k1_profile.n, k1_profile.x)
    np.testing.assert_allclose(dn, k1_profile.dn_dx, atol=1e-5)


def test_profile_is_read_only(k1_profile):
    with pytest.raises(ValueError):
        k1_profile.n[0] = 1.0


def test_dense_samples_match_grid(k1_profile):
    i = len(k1_profile) // 3
    sample = k1_profile.sample_at(k1_profile.x[i])
    assert sample.n == pytest.approx(k1_profile.n[i], rel=1e-12)
    assert sample.dphi_dx == pytest.approx(-k1_profile.E[i], rel=1e-12)
    assert sample.J(k1_profile.params) > 0
    far = k1_profile.sample_at(k1_profile.X + 1.0)
    assert far.n == 0.0 and far.E == 0.0


def test_k0_profile_peak(k0_profile):
    n_star, u_star, phi_star = peak_state(k0_profile.params)
    mid = len(k0_profile) // 2
    assert k0_profile.phi[mid] == pytest.approx(phi_star, rel=1e-12)
    assert k0_profile.n[mid] == pytest.approx(n_star, rel=1e-10)
    assert k0_profile.u[mid] == pytest.approx(u_star, rel=1e-10)


def test_default_half_domain_covers_tail(k1_params):
    X = default_half_domain(k1_params, 1e-12)
    assert X == math.ceil(-math.log(1e-12) / far_field_decay_rate(k1_params))


def test_get_profile_is_cached(k1_params, k1_profile):
    assert get_profile(k1_params) is k1_profile


def test_compute_profile_rejects_bad_tolerance(k1_params):
    with pytest.raises(DomainError):
        compute_profile(k1_params, tol=1e-3)
    with pytest.raises(ExistenceError):
        compute_profile(PlasmaParams(1.0, 0.0))


def test_kdv_profile_peak():
    assert kdv_profile(0.0, 2.0) == pytest.approx(1.5)
    assert kdv_profile(1e4, 2.0) == 0.0


def test_kdv_closeness_shrinks_with_amplitude(k1_profile):
    coarse = kdv_closeness(k1_profile)
    fine = kdv_closeness(get_profile(PlasmaParams(1.0, 0.0125)))
    for key in ("n", "u", "phi"):
        assert fine[key] < coarse[key]


def test_profile_c_derivative_positive_at_peak(k1_params):
    out = profile_c_derivative(k1_params, [0.0, 2.0])
    assert out["dn_dc"][0] > 0
    assert out["dphi_dc"][0] > 0


@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_small_temperature_peak_matches_cold_limit(eps):
    cold = peak_state(PlasmaParams(0.0, eps))
    warm = peak_state(PlasmaParams(1e-6, eps))
    np.testing.assert_allclose(warm, cold, rtol=1e-3)


def test_tail_decays_at_far_field_rate(k1_profile):
    X = k1_profile.X
    tail = (k1_profile.x >= 0.6 * X) & (k1_profile.x <= X)
    slope = np.polyfit(k1_profile.x[tail], np.log(k1_profile.n[tail]), 1)[0]
    assert slope == pytest.approx(-k1_profile.decay_rate, rel=0.05)
