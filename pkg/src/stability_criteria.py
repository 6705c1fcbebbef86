"""
Instability-criterion integrals Q(c) and Q0(c), peak tables and the
gradient-threshold diagnostic.

Q(c) = integral of n_c u_c dx. Written over the density it becomes
integral_0^{n*} sqrt(2) c n^2 dH/dn / ((1+n) sqrt(g(n))) dn, whose integrand
has an inverse square-root singularity at the peak. The regularized policy
removes it with n = n* - t^2; the truncated policy reproduces cut-off
intervals as reported in the literature.
"""
import math
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import quad, simpson
from scipy.optimize import minimize_scalar

from .errors import DomainError, QuadratureError, RefinementError
from .models import (
    CriterionRow, CriterionSweep, PeakRow, PlasmaParams, PolicyKind, QuadraturePolicy, WaveProfile,
)
from .soliton_profile import (
    _U, _U_dphi, _enthalpy_dn, _g, _g_dn, critical_amplitude, peak_state,
)

Mapper = Callable[[Callable, Iterable], Iterable]

# Below t^2 < LIMIT_ZONE * peak the integrand is replaced by its t -> 0 limit
LIMIT_ZONE = 1e-8
# Slopes of the first integral at the peak below this use the t^3 substitution
FLAT_PEAK = 1e-10


def _singular_quad(numer: Callable[[float], float], G: Callable[[float], float], top: float,
                   G_slope_top: float, policy: QuadraturePolicy, details: Dict) -> float:
    """
    integral_0^top numer(s) / sqrt(G(s)) ds with G(top) = 0, G'(top) < 0.

    Substitutes s = top - t^2 (or t^3 when the peak is flat).
    """
    power = 2 if abs(G_slope_top) > FLAT_PEAK else 3
    if power == 2:
        limit = 2.0 * numer(top) / math.sqrt(-G_slope_top)

        def integrand(t):
            s = top - t * t
            if t * t < LIMIT_ZONE * top:
                return limit
            value = G(s)
            if value <= 0.0:
                return limit
            return numer(s) / math.sqrt(value) * 2.0 * t
    else:
        def integrand(t):
            s = top - t ** 3
            value = G(s)
            if value <= 0.0:
                return 0.0
            return numer(s) / math.sqrt(value) * 3.0 * t * t

    if policy.kind is PolicyKind.REGULARIZED:
        a, b = 0.0, top ** (1.0 / power)
    else:
        if top - policy.lower_cut <= policy.upper_gap:
            raise DomainError("truncation cuts overlap the integration interval", "policy_cuts",
                              dict(details, top=top, lower_cut=policy.lower_cut, upper_gap=policy.upper_gap))
        a, b = policy.upper_gap ** (1.0 / power), (top - policy.lower_cut) ** (1.0 / power)

    result = quad(integrand, a, b, epsabs=0.0, epsrel=policy.epsrel, limit=policy.limit, full_output=1)
    value, abserr = result[0], result[1]
    # quad appends a message (len > 3) only when it stopped short of its tolerance
    converged = len(result) == 3
    if not math.isfinite(value) or (not converged and abserr > max(policy.epsrel, 1e-9) * abs(value)):
        raise QuadratureError(
            f"quadrature did not converge: value={value}, error estimate={abserr}",
            "quadrature", dict(details, value=value, abserr=abserr,
                               message=result[3] if len(result) > 3 else ""),
        )
    return float(value)


def q_integral(params: PlasmaParams, policy: Optional[QuadraturePolicy] = None) -> float:
    """
    Q(c) from the density quadrature.

    Args:
        params: Wave parameters, 0 < eps < eps_K (K = 0 allowed)
        policy: Endpoint treatment, regularized by default

    Returns:
        Q(c) > 0
    """
    policy = policy or QuadraturePolicy.regularized()
    n_star = peak_state(params)[0]
    c, K = params.c, params.K

    def numer(n):
        return math.sqrt(2.0) * c * n * n * _enthalpy_dn(n, c, K) / (1.0 + n)

    return _singular_quad(numer, lambda n: _g(n, c, K), n_star, float(_g_dn(n_star, c, K)), policy,
                          {"K": K, "eps": params.eps, "policy": policy.label})


def q0_integral(c: float, policy: Optional[QuadraturePolicy] = None) -> float:
    """
    Q0(c) for K = 0 from the potential quadrature
    integral_0^{phi*} sqrt(2) (c - s)^2 / (s sqrt(U(phi))) dphi, s = sqrt(c^2 - 2 phi).

    Raises:
        ExistenceError: c outside (1, zeta_0)
    """
    policy = policy or QuadraturePolicy.regularized()
    params = PlasmaParams(0.0, c - 1.0)
    phi_star = peak_state(params)[2]

    def numer(phi):
        s = math.sqrt(c * c - 2.0 * phi)
        return math.sqrt(2.0) * (2.0 * phi / (c + s)) ** 2 / s

    return _singular_quad(numer, lambda p: _U(p, c), phi_star, float(_U_dphi(phi_star, c)), policy,
                          {"K": 0.0, "c": c, "policy": policy.label})


def q_direct(profile: WaveProfile) -> float:
    """Composite Simpson of n u over the samples plus the exponential tails beyond |x| = X"""
    core = float(simpson(profile.n * profile.u, x=profile.x))
    tail = float(profile.n[-1] * profile.u[-1]) / profile.decay_rate if profile.decay_rate > 0 else 0.0
    return core + tail


def _richardson_derivative(Q: Callable[[float], float], eps: float, h: float, details: Dict) -> float:
    coarse = (Q(eps + h) - Q(eps - h)) / (2.0 * h)
    fine = (Q(eps + h / 2.0) - Q(eps - h / 2.0)) / h
    if abs(coarse - fine) > 1e-3 * abs(fine):
        raise RefinementError(f"central differences disagree: {coarse} (h) vs {fine} (h/2)",
                              "richardson", dict(details, h=h, coarse=coarse, fine=fine))
    return (4.0 * fine - coarse) / 3.0


def _check_step(K: float, eps: float, h: float):
    eps_K = critical_amplitude(K)
    if eps - h <= 0.0 or eps + h >= eps_K:
        raise DomainError(f"eps ± h = {eps} ± {h:.3g} leaves (0, {eps_K:.6f})", "step_range",
                          {"K": K, "eps": eps, "h": h, "eps_K": eps_K})


def dq_dc(params: PlasmaParams, policy: Optional[QuadraturePolicy] = None, h_rel: float = 1e-4) -> float:
    """dQ/dc by Richardson-checked central differences with step h = h_rel * eps"""
    h = h_rel * params.eps
    _check_step(params.K, params.eps, h)
    return _richardson_derivative(lambda e: q_integral(params.with_eps(e), policy), params.eps, h,
                                  {"K": params.K, "eps": params.eps})


def dq0_dc(c: float, policy: Optional[QuadraturePolicy] = None, h_rel: float = 1e-4) -> float:
    """dQ0/dc, as dq_dc for the K = 0 potential quadrature"""
    eps = c - 1.0
    h = h_rel * eps
    _check_step(0.0, eps, h)
    return _richardson_derivative(lambda e: q0_integral(1.0 + e, policy), eps, h, {"K": 0.0, "eps": eps})


def default_eps_grid(K: float, n: int = 60) -> List[float]:
    """n log-spaced amplitudes from 0.01 eps_K to 0.99 eps_K"""
    eps_K = critical_amplitude(K)
    return [float(e) for e in np.geomspace(0.01 * eps_K, 0.99 * eps_K, n)]


def _criterion_row(eps: float, K: float, policy: QuadraturePolicy, derivative: bool) -> CriterionRow:
    params = PlasmaParams(K, eps)
    return CriterionRow(eps=eps, c=params.c, Q=q_integral(params, policy),
                        dQ_dc=dq_dc(params, policy) if derivative else None)


def _criterion_k0_row(eps: float, policy: QuadraturePolicy, derivative: bool) -> CriterionRow:
    c = 1.0 + eps
    return CriterionRow(eps=eps, c=c, Q=q0_integral(c, policy),
                        dQ_dc=dq0_dc(c, policy) if derivative else None)


def criterion_sweep(K: float, eps_grid: Optional[Sequence[float]] = None,
                    policy: Optional[QuadraturePolicy] = None, derivative: bool = True,
                    mapper: Mapper = map) -> CriterionSweep:
    """Q(c) and dQ/dc over an eps grid"""
    policy = policy or QuadraturePolicy.regularized()
    grid = list(eps_grid) if eps_grid is not None else default_eps_grid(K)
    sweep = CriterionSweep(K=K, eps_grid=grid, values=[], policy=policy)
    sweep.values = list(mapper(partial(_criterion_row, K=K, policy=policy, derivative=derivative), grid))
    return sweep


def criterion_k0_sweep(eps_grid: Optional[Sequence[float]] = None, policy: Optional[QuadraturePolicy] = None,
                       derivative: bool = True, mapper: Mapper = map) -> CriterionSweep:
    """Q0(c) and dQ0/dc over an eps grid (K = 0)"""
    policy = policy or QuadraturePolicy.regularized()
    grid = list(eps_grid) if eps_grid is not None else default_eps_grid(0.0)
    sweep = CriterionSweep(K=0.0, eps_grid=grid, values=[], policy=policy)
    sweep.values = list(mapper(partial(_criterion_k0_row, policy=policy, derivative=derivative), grid))
    return sweep


# ---------------------------------------------------------------------------
# Peak tables
# ---------------------------------------------------------------------------

def peaks_table(K: float, eps_list: Sequence[float]) -> List[PeakRow]:
    """One row (eps, n_s, n*, u*, phi*) per amplitude; n_s is omitted for K = 0"""
    rows = []
    for eps in eps_list:
        params = PlasmaParams(K, eps)
        n_star, u_star, phi_star = peak_state(params)
        n_s = params.c / math.sqrt(K) - 1.0 if K > 0 else None
        rows.append(PeakRow(eps=eps, n_s=n_s, n_star=n_star, u_star=u_star, phi_star=phi_star))
    return rows


def peaks_frame(rows: Sequence[PeakRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows])


def format_peak_value(value: float) -> str:
    """Four decimals, or scientific notation once the value reaches 1000"""
    return f"{value:.3e}" if abs(value) >= 1000 else f"{value:.4f}"


# ---------------------------------------------------------------------------
# Gradient threshold (K = 0)
# ---------------------------------------------------------------------------

def _require_k0(profile: WaveProfile):
    if profile.params.K != 0.0:
        raise DomainError("the gradient threshold is defined for K = 0 profiles", "requires_K0",
                          {"K": profile.params.K})


def threshold_curve(profile: WaveProfile) -> pd.DataFrame:
    """du/dx / sqrt(1 + n) along the sampled profile"""
    _require_k0(profile)
    return pd.DataFrame({"x": profile.x, "ratio": profile.du_dx / np.sqrt(1.0 + profile.n)})


def gradient_threshold(profile: WaveProfile) -> float:
    """
    min over x of du/dx / sqrt(1 + n), refined by bounded Brent minimization
    between the neighbours of the grid minimum.
    """
    _require_k0(profile)
    ratio = profile.du_dx / np.sqrt(1.0 + profile.n)
    i = int(np.argmin(ratio))
    lo = float(profile.x[max(i - 1, 0)])
    hi = float(profile.x[min(i + 1, len(profile.x) - 1)])

    def f(x):
        n, _, _, _, _, u_x, _ = profile.fields_at(x)
        return u_x / math.sqrt(1.0 + n)

    refined = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13, "maxiter": 500})
    return float(min(refined.fun, ratio[i]))
