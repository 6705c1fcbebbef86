"""
Evans function of the linearized Euler-Poisson operator about a solitary wave.

D(lambda, eps) = w_1 · theta(-X), where theta' = (A(x, lambda) - mu_1 I) theta is
integrated backward from theta(X) = v_1. The target mode is dominant in the
direction of integration, so plain adaptive Runge-Kutta shooting is stable.
"""
import math
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationError, RefinementError
from .models import (
    Contour, EvansMethod, EvansOptions, EvansValue, ModePair, PlasmaParams,
    WaveProfile, WaveSample, ZeroCount,
)
from .soliton_profile import get_profile, kdv_profile, kdv_profile_dxi
from .spectral_core import char_roots, mode_vectors, omega_region, weight_exponent

Mapper = Callable[[Callable, Iterable], Iterable]

# Shooting domain never shrinks below the profile's; contamination by the
# other modes is damped by exp(-gap * X) at the left end.
CONTAMINATION_DECADES = 30.0
MAX_DOMAIN_FACTOR = 4.0


def _assemble(n, u, phi, n_x, u_x, lam, c, K) -> np.ndarray:
    w = c - u
    J = w * w - K
    if J <= 0.0:
        raise DomainError(f"sonic point: J = (c-u)^2 - K = {J} <= 0", "sonic_point",
                          {"n": n, "u": u, "J": J})
    p = 1.0 + n
    A = np.zeros((4, 4), dtype=complex)
    A[0, 0] = (w * u_x - K * n_x / p + lam * w) / J
    A[0, 1] = (w * n_x + p * u_x + lam * p) / J
    A[0, 3] = p / J
    A[1, 0] = (K * u_x / p - K * w * n_x / (p * p) + lam * K / p) / J
    A[1, 1] = (K * n_x / p + w * u_x + lam * w) / J
    A[1, 3] = w / J
    A[2, 3] = 1.0
    A[3, 0] = -1.0
    A[3, 2] = math.exp(phi)
    return A


def assemble_A(sample: WaveSample, lam: complex, params: PlasmaParams) -> np.ndarray:
    """
    Coefficient matrix A = A1(x) + lambda A2(x) of the linearized first-order
    system in (n, u, phi, phi_x).

    Raises:
        DomainError: J <= 0 at the sample (sonic point)
    """
    return _assemble(sample.n, sample.u, sample.phi, sample.dn_dx, sample.du_dx,
                     complex(lam), params.c, params.K)


def asymptotic_matrix(lam: complex, params: PlasmaParams) -> np.ndarray:
    """A_inf(lambda), the limit of A as |x| -> inf"""
    return _assemble(0.0, 0.0, 0.0, 0.0, 0.0, complex(lam), params.c, params.K)


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------

class _Shot:
    """Everything needed to shoot at one lambda"""

    def __init__(self, lam: complex, params: PlasmaParams, profile: WaveProfile, opts: EvansOptions):
        if profile.params != params:
            raise DomainError("profile was computed for different parameters", "profile_mismatch",
                              {"profile": profile.params.to_dict(), "params": params.to_dict()})
        self.lam = lam
        self.params = params
        self.profile = profile
        self.opts = opts
        beta = weight_exponent(params, opts.c0)
        self.roots = char_roots(lam, params, beta).require_split()
        self.mode: ModePair = mode_vectors(1, self.roots, params)
        gap = self.roots.gap
        if opts.X is not None:
            if opts.X < profile.X:
                raise DomainError(f"X={opts.X} is below the profile half-domain {profile.X}", "X_range",
                                  {"X": opts.X, "profile_X": profile.X})
            self.X = opts.X
        else:
            self.X = max(profile.X, min(CONTAMINATION_DECADES / gap, MAX_DOMAIN_FACTOR * profile.X))

    def A(self, x: float) -> np.ndarray:
        n, u, phi, _, n_x, u_x, _ = self.profile.fields_at(x)
        return _assemble(n, u, phi, n_x, u_x, self.lam, self.params.c, self.params.K)

    def backward(self, t_end: float = None, dense: bool = False):
        """theta' = (A - mu_1 I) theta from +X down to t_end (default -X)"""
        mu1 = self.mode.mu
        t_end = -self.X if t_end is None else t_end

        def rhs(x, theta):
            return self.A(x) @ theta - mu1 * theta

        result = solve_ivp(rhs, (self.X, t_end), self.mode.v, method="DOP853",
                           rtol=self.opts.ode_tol, atol=self.opts.ode_tol, dense_output=dense)
        _check(result, "backward sweep", self.lam)
        return result

    def forward(self, t_end: float = 0.0, dense: bool = False):
        """zeta' = -zeta (A - mu_1 I) from -X up to t_end"""
        mu1 = self.mode.mu

        def rhs(x, zeta):
            return -(zeta @ self.A(x)) + mu1 * zeta

        result = solve_ivp(rhs, (-self.X, t_end), self.mode.w, method="DOP853",
                           rtol=self.opts.ode_tol, atol=self.opts.ode_tol, dense_output=dense)
        _check(result, "forward sweep", self.lam)
        return result

    def residuals(self, theta_left: np.ndarray, D: complex, nfev: int) -> Dict[str, float]:
        v = self.mode.v
        tail = (self.A(self.X) - asymptotic_matrix(self.lam, self.params)) @ v
        return {
            "boundary_mismatch": float(np.linalg.norm(tail) / self.roots.gap),
            "alignment_residual": float(np.linalg.norm(theta_left - D * v) / np.linalg.norm(v)),
            "X": float(self.X),
            "nfev": float(nfev),
        }


def _check(result, what: str, lam: complex):
    if result.status == -1:
        raise IntegrationError(f"{what} failed at x={result.t[-1]:.6g}: {result.message}", "ode_failure",
                               {"x": float(result.t[-1]), "lambda": complex(lam)})


def _shot(lam: complex, params: PlasmaParams, profile: Optional[WaveProfile],
          opts: Optional[EvansOptions]) -> _Shot:
    if params.eps == 0.0:
        raise DomainError("shooting needs a wave (eps > 0)", "constant_state", {"eps": 0.0})
    return _Shot(complex(lam), params, profile or get_profile(params), opts or EvansOptions())


def evans(lam: complex, params: PlasmaParams, profile: Optional[WaveProfile] = None,
          opts: Optional[EvansOptions] = None) -> EvansValue:
    """
    Evaluate the Evans function D(lambda, eps).

    Args:
        lam: Spectral parameter where the weighted splitting holds
        params: Wave parameters; eps = 0 gives the constant state, D = 1
        profile: Wave profile (computed and cached when omitted)
        opts: Shooting options

    Returns:
        EvansValue with integration diagnostics

    Raises:
        SplittingError: the far-field roots do not split at lambda
        RefinementError: meet-at-zero cross-check disagrees
    """
    lam = complex(lam)
    opts = opts or EvansOptions()
    if params.eps == 0.0:
        if lam == 0:
            raise DomainError("(lambda, eps) = (0, 0) is excluded", "origin_degenerate")
        return EvansValue(lam=lam, eps=0.0, D=1.0 + 0.0j, method=EvansMethod.CONSTANT_STATE)

    shot = _shot(lam, params, profile, opts)
    sweep = shot.backward()
    theta_left = sweep.y[:, -1]
    D = complex(shot.mode.w @ theta_left)
    residuals = shot.residuals(theta_left, D, sweep.nfev)
    if not opts.meet_at_zero:
        return EvansValue(lam=lam, eps=params.eps, D=D, method=EvansMethod.BACKWARD_SWEEP,
                          residuals=residuals)

    right = shot.backward(t_end=0.0)
    left = shot.forward(t_end=0.0)
    D_meet = complex(left.y[:, -1] @ right.y[:, -1])
    if abs(D_meet - D) > 1e-6 * max(abs(D), 1e-2):
        raise RefinementError(f"meet-at-zero value {D_meet} disagrees with backward sweep {D}",
                              "meet_mismatch", {"lambda": lam, "D_backward": D, "D_meet": D_meet})
    residuals["meet_difference"] = abs(D_meet - D)
    residuals["nfev"] += right.nfev + left.nfev
    return EvansValue(lam=lam, eps=params.eps, D=D_meet, method=EvansMethod.MEET_AT_ZERO,
                      residuals=residuals)


def evans_value(lam: complex, params: PlasmaParams, opts: Optional[EvansOptions] = None) -> complex:
    """D only, for parallel maps (the profile comes from the per-process cache)"""
    return evans(lam, params, None, opts).D


def shoot(lam: complex, params: PlasmaParams, xs: Sequence[float], profile: Optional[WaveProfile] = None,
          opts: Optional[EvansOptions] = None) -> np.ndarray:
    """theta(x) of the backward sweep at each x in xs, shape (len(xs), 4)"""
    shot = _shot(lam, params, profile, opts)
    sweep = shot.backward(dense=True)
    return np.array([sweep.sol(x) for x in xs])


def evans_product_profile(lam: complex, params: PlasmaParams, xs: Sequence[float],
                          profile: Optional[WaveProfile] = None,
                          opts: Optional[EvansOptions] = None) -> np.ndarray:
    """zeta(x) · theta(x) at each meeting point x; constant in x"""
    shot = _shot(lam, params, profile, opts)
    right = shot.backward(dense=True)
    left = shot.forward(t_end=shot.X, dense=True)
    return np.array([complex(left.sol(x) @ right.sol(x)) for x in xs])


# ---------------------------------------------------------------------------
# KdV limit
# ---------------------------------------------------------------------------

def kdv_ray_edge(V: float) -> float:
    """Right end -2 sqrt(2V)/(3 sqrt 3) of the excluded ray"""
    return -2.0 * math.sqrt(2.0 * V) / (3.0 * math.sqrt(3.0))


def _kdv_kappas(Lambda: complex, V: float) -> np.ndarray:
    L = complex(Lambda)
    if L.imag == 0.0 and L.real <= kdv_ray_edge(V):
        raise DomainError(f"Lambda={L} lies on the excluded ray (-inf, {kdv_ray_edge(V):.6f}]",
                          "excluded_ray", {"Lambda": L, "V": V})
    coeffs = np.array([1.0, 0.0, -2.0 * V, 2.0 * V * L], dtype=complex)
    deriv = np.polyder(coeffs)
    kappas = []
    for k in np.roots(coeffs):
        for _ in range(2):
            dp = np.polyval(deriv, k)
            if dp == 0:
                break
            k = k - np.polyval(coeffs, k) / dp
        kappas.append(complex(k))
    kappas.sort(key=lambda k: k.real)
    if kappas[1].real - kappas[0].real < 1e-12:
        raise DomainError(f"no strictly leftmost root at Lambda={L}", "excluded_ray", {"Lambda": L})
    return np.array(kappas)


def evans_kdv_closed(Lambda: complex, V: float) -> complex:
    """D_KdV(Lambda) = ((kappa_1 + sqrt(2V)) / (kappa_1 - sqrt(2V)))^2"""
    k1 = _kdv_kappas(Lambda, V)[0]
    s = math.sqrt(2.0 * V)
    return complex(((k1 + s) / (k1 - s)) ** 2)


def evans_kdv_ode(Lambda: complex, V: float, opts: Optional[EvansOptions] = None) -> complex:
    """
    KdV Evans function by shooting the third-order eigenvalue problem
    Lambda p - p' + V (Psi p)' + p'''/(2V) = 0 as a first-order system.
    """
    opts = opts or EvansOptions()
    L = complex(Lambda)
    kappas = _kdv_kappas(L, V)
    k1 = kappas[0]
    gap = min((k - k1).real for k in kappas[1:])
    Xi = opts.X or min(max(32.0 / math.sqrt(2.0 * V), CONTAMINATION_DECADES / gap), 200.0)

    def rhs(xi, theta):
        psi = kdv_profile(xi, V)
        dpsi = kdv_profile_dxi(xi, V)
        return np.array([
            theta[1] - k1 * theta[0],
            theta[2] - k1 * theta[1],
            -2.0 * V * (L + V * dpsi) * theta[0] + 2.0 * V * (1.0 - V * psi) * theta[1] - k1 * theta[2],
        ])

    start = np.array([1.0, k1, k1 * k1], dtype=complex)
    result = solve_ivp(rhs, (Xi, -Xi), start, method="DOP853", rtol=opts.ode_tol,
                       atol=opts.ode_tol * 1e-2)
    _check(result, "KdV sweep", L)
    w = np.array([k1 * k1 - 2.0 * V, k1, 1.0]) / (3.0 * k1 * k1 - 2.0 * V)
    return complex(w @ result.y[:, -1])


def evans_scaled(Lambda: complex, eps: float, K: float, profile: Optional[WaveProfile] = None,
                 opts: Optional[EvansOptions] = None) -> complex:
    """
    D*(Lambda, eps) = D(eps^{3/2} Lambda, eps); at eps = 0 the KdV Evans function.

    Raises:
        DomainError: Re Lambda below -eta(c0)
    """
    V = math.sqrt(1.0 + K)
    if eps == 0.0:
        return evans_kdv_closed(Lambda, V)
    params = PlasmaParams(K, eps)
    opts = opts or EvansOptions()
    region = omega_region(params, opts.c0)
    L = complex(Lambda)
    if L.real < -region.eta * (1.0 + 1e-12):
        raise DomainError(f"Lambda={L} lies left of Re Lambda = -eta = {-region.eta:.6f}", "outside_omega",
                          {"Lambda": L, "eta": region.eta})
    return evans(eps ** 1.5 * L, params, profile, opts).D


def _evans_scaled_value(Lambda: complex, eps: float, K: float, opts: Optional[EvansOptions]) -> complex:
    return evans_scaled(Lambda, eps, K, None, opts)


def convergence_arc(K: float, n: int = 16, radius: float = 5.0, c0: Optional[float] = None) -> np.ndarray:
    """n points on the arc |Lambda| = radius, Re Lambda >= -eta, end points included"""
    V = math.sqrt(1.0 + K)
    c0 = c0 if c0 is not None else 0.5 * math.sqrt(2.0 * V)
    eta = c0 / 2.0 * (1.0 - c0 ** 2 / (2.0 * V))
    top = math.pi / 2.0 + math.asin(min(eta / radius, 1.0))
    return radius * np.exp(1j * np.linspace(-top, top, n))


def kdv_convergence(K: float, eps_list: Sequence[float], Lambdas: Sequence[complex],
                    opts: Optional[EvansOptions] = None, mapper: Mapper = map) -> List[Dict[str, float]]:
    """sup over Lambdas of |D*(Lambda, eps) - D_KdV(Lambda)| for each eps"""
    V = math.sqrt(1.0 + K)
    reference = np.array([evans_kdv_closed(L, V) for L in Lambdas])
    rows = []
    for eps in eps_list:
        values = np.array(list(mapper(partial(_evans_scaled_value, eps=eps, K=K, opts=opts), list(Lambdas))))
        rows.append({"eps": float(eps), "sup_diff": float(np.max(np.abs(values - reference)))})
    return rows


# ---------------------------------------------------------------------------
# Zero counting and derivatives at the origin
# ---------------------------------------------------------------------------

def count_zeros(contour: Contour, params: PlasmaParams, opts: Optional[EvansOptions] = None,
                mapper: Mapper = map, max_refine: int = 8) -> ZeroCount:
    """
    Number of zeros of D inside the contour (with multiplicity), by the
    winding number of D along the nodes.

    Consecutive nodes whose phase jump exceeds pi/2 are bisected, up to
    max_refine rounds.

    Raises:
        RefinementError: phase jumps persist, |D| vanishes on the contour, or
            the winding number is not close to an integer
    """
    if params.eps == 0.0:
        return ZeroCount(contour=contour, nodes=contour.n_nodes, winding=0.0, count=0, min_abs_D=1.0)

    f = partial(evans_value, params=params, opts=opts)
    ts = [k / contour.n_nodes for k in range(contour.n_nodes)]
    values = list(mapper(f, [contour.point(t) for t in ts]))

    for _ in range(max_refine):
        coarse = [i for i, j in enumerate(_phase_jumps(values)) if abs(j) > math.pi / 2]
        if not coarse:
            break
        midpoints = [(ts[i] + (ts[i + 1] if i + 1 < len(ts) else 1.0)) / 2.0 for i in coarse]
        fresh = list(mapper(f, [contour.point(t) for t in midpoints]))
        merged = sorted(zip(ts + midpoints, values + fresh), key=lambda p: p[0])
        ts = [t for t, _ in merged]
        values = [v for _, v in merged]

    max_jump = float(np.max(np.abs(_phase_jumps(values))))
    if max_jump > math.pi / 2:
        raise RefinementError("contour too coarse or passes near a zero", "contour_refinement",
                              {"nodes": len(ts), "max_jump": max_jump})

    min_abs = float(min(abs(v) for v in values))
    if min_abs < 1e-12:
        raise RefinementError("Evans function vanishes on the contour", "contour_near_zero",
                              {"min_abs_D": min_abs})
    winding = float(np.sum(_phase_jumps(values)) / (2.0 * math.pi))
    count = int(round(winding))
    if abs(winding - count) > 1e-3:
        raise RefinementError(f"winding number {winding} is not an integer", "winding_not_integer",
                              {"winding": winding})
    return ZeroCount(contour=contour, nodes=len(ts), winding=winding, count=count, min_abs_D=min_abs)


def _phase_jumps(values: Sequence[complex]) -> np.ndarray:
    """Principal phase increments between cyclically consecutive values"""
    z = np.asarray(values, dtype=complex)
    return np.angle(np.roll(z, -1) / z)


def evans_derivative(lam0: complex, params: PlasmaParams, order: int, radius: float,
                     n_nodes: int = 128, opts: Optional[EvansOptions] = None,
                     mapper: Mapper = map, check: bool = True) -> complex:
    """
    d^m D / d lambda^m at lam0 by the trapezoid rule on a Cauchy circle.

    The estimate with n_nodes is compared to the one using every other node;
    a relative disagreement above 1e-4 raises RefinementError.
    """
    if order < 0 or n_nodes < 8 or n_nodes % 2:
        raise DomainError("order must be >= 0 and n_nodes even and >= 8", "cauchy_setup",
                          {"order": order, "n_nodes": n_nodes})
    theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    lams = complex(lam0) + radius * np.exp(1j * theta)
    values = np.array(list(mapper(partial(evans_value, params=params, opts=opts), list(lams))))
    weights = np.exp(-1j * order * theta)
    scale = math.factorial(order) / radius ** order
    fine = complex(scale * np.mean(values * weights))
    coarse = complex(scale * np.mean(values[::2] * weights[::2]))
    if check:
        floor = scale * float(np.max(np.abs(values))) * 1e-6
        if abs(fine - coarse) > 1e-4 * max(abs(fine), floor):
            raise RefinementError(f"Cauchy estimates disagree: {fine} vs {coarse}", "cauchy_refinement",
                                  {"fine": fine, "coarse": coarse, "n_nodes": n_nodes})
    return fine


def d2_lambda_at_origin(params: PlasmaParams, opts: Optional[EvansOptions] = None,
                        mapper: Mapper = map) -> complex:
    """Second lambda-derivative of D at the origin, on the circle r = 0.3 eps^{3/2}"""
    if params.eps <= 0.0:
        raise DomainError("the origin is degenerate at eps = 0", "origin_degenerate")
    return evans_derivative(0.0, params, order=2, radius=0.3 * params.eps ** 1.5,
                            n_nodes=128, opts=opts, mapper=mapper)
