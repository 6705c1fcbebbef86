"""
Solitary waves of the isothermal Euler-Poisson system.

Existence thresholds, peak states and full wave profiles with algebraic
derivative fields. The wave speed is c = sqrt(1+K) + eps; for K = 0 the
potential phi is the state variable and the Sagdeev potential U(phi) plays
the role of the first integral g(n).
"""
import math
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .config import config
from .errors import BracketError, DomainError, ExistenceError, IntegrationError
from .models import PlasmaParams, WaveProfile

# Below this amplitude the first integrals are evaluated from their Taylor
# series; the closed forms cancel to O(n^2) from O(n) terms.
SERIES_SWITCH = 0.05
SERIES_TERMS = 30


def ion_sound_speed(K: float) -> float:
    """V = sqrt(1 + K)"""
    if not (math.isfinite(K) and K >= 0):
        raise DomainError(f"K must be non-negative, got {K}", "negative_K", {"K": K})
    return math.sqrt(1.0 + K)


@lru_cache(maxsize=None)
def critical_amplitude(K: float) -> float:
    """
    Largest admissible amplitude eps_K for temperature ratio K.

    For K > 0 the root zeta > sqrt(K+1)/sqrt(K) of
    zeta^K [K (zeta-1)^2 + 1] = exp(K (zeta^2 - 1) / 2) is bracketed by a
    uniform scan and refined with Brent's method; eps_K = sqrt(K) zeta - V.
    For K = 0, eps_0 = zeta_0 - 1 where zeta_0^2 + 1 = exp(zeta_0^2 / 2).
    """
    V = ion_sound_speed(K)
    if K == 0.0:
        def f0(z):
            return math.log1p(z * z) - z * z / 2.0
        # z = 0 is the trivial root; the wanted one is above 1
        zeta0 = brentq(f0, 1.0, 3.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return zeta0 - 1.0

    def f(z):
        return K * np.log(z) + np.log(K * (z - 1.0) ** 2 + 1.0) - K * (z * z - 1.0) / 2.0

    lo = V / math.sqrt(K)
    start, stop = lo * (1.0 + 1e-9), lo + 10.0 * max(1.0, 1.0 / math.sqrt(K))
    grid = np.linspace(start, stop, 10_001)
    values = f(grid)
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if len(changes) == 0:
        raise BracketError(
            f"no sign change of the threshold equation on [{start:.6g}, {stop:.6g}] for K={K}",
            "threshold_bracket", {"K": K, "interval": [start, stop]},
        )
    i = int(changes[0])
    zeta = brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return math.sqrt(K) * zeta - V


def enthalpy(n, params: PlasmaParams) -> Tuple[float, float]:
    """
    Enthalpy H(n, c) and its n-derivative.

    Args:
        n: Density perturbation, n > -1 (scalar or array)
        params: Wave parameters

    Returns:
        (H, dH_dn)
    """
    n = _check_density(n)
    return _enthalpy(n, params.c, params.K), _enthalpy_dn(n, params.c, params.K)


def first_integral_g(n, params: PlasmaParams):
    """g(n, c) = c^2/(1+n) + K(1+n) + e^H - c^2 - K - 1"""
    n = _check_density(n)
    return _g(n, params.c, params.K)


def sagdeev_potential_U(phi, c: float):
    """U(phi) = e^phi + c sqrt(c^2 - 2 phi) - 1 - c^2, defined for phi < c^2/2"""
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr >= c * c / 2.0):
        raise DomainError(f"phi must stay below c^2/2 = {c * c / 2.0}", "sqrt_branch",
                          {"c": c, "phi_max": float(np.max(phi_arr))})
    value = _U(phi_arr, c)
    return float(value) if np.ndim(value) == 0 else value


def peak_state(params: PlasmaParams) -> Tuple[float, float, float]:
    """
    Peak (n*, u*, phi*) of the solitary wave.

    Raises:
        ExistenceError: eps = 0, or no sign change below the sonic density
    """
    if params.eps <= 0.0:
        raise ExistenceError("eps = 0 is the constant state, no solitary wave",
                             "beyond_existence_range", {"K": params.K, "eps": params.eps})
    return _peak_state(params.K, params.eps)


def far_field_decay_rate(params: PlasmaParams) -> float:
    """lambda_c = sqrt((c^2 - 1 - K) / (c^2 - K))"""
    c2 = params.c ** 2
    return math.sqrt(max(c2 - 1.0 - params.K, 0.0) / (c2 - params.K))


def default_half_domain(params: PlasmaParams, tail_tol: Optional[float] = None) -> float:
    """X = ceil(-ln(tail_tol) / lambda_c)"""
    tail_tol = tail_tol or config.tail_tol
    return float(math.ceil(-math.log(tail_tol) / far_field_decay_rate(params)))


def compute_profile(params: PlasmaParams, X: Optional[float] = None, tol: Optional[float] = None,
                    n_points: Optional[int] = None) -> WaveProfile:
    """
    Integrate the solitary wave from its peak and sample it on [-X, X].

    Args:
        params: Wave parameters with 0 < eps < eps_K
        X: Half-domain; defaults to ceil(-ln(tail_tol)/lambda_c)
        tol: Relative/absolute integrator tolerance in (1e-14, 1e-6)
        n_points: Odd number of samples over [-X, X]

    Returns:
        Immutable WaveProfile with dense-output evaluation
    """
    tol = tol or config.profile_tol
    if not 1e-14 < tol < 1e-6:
        raise DomainError(f"tol={tol} must lie in (1e-14, 1e-6)", "tolerance_range", {"tol": tol})
    peak_state(params)
    X = float(X) if X is not None else default_half_domain(params)
    if X <= 0:
        raise DomainError(f"X={X} must be positive", "X_range", {"X": X})
    n_points = n_points or config.profile_points
    if n_points % 2 == 0:
        n_points += 1

    evaluator = _WaveEvaluator.build(params, X, tol)

    x_half = np.linspace(0.0, X, n_points // 2 + 1)
    table = np.array([evaluator.evaluate(x) for x in x_half])
    x = np.concatenate([-x_half[:0:-1], x_half])
    columns = {}
    # n, u, phi, d2phi_dx2 are even; E, dn_dx, du_dx are odd
    parity = {"n": 1.0, "u": 1.0, "phi": 1.0, "E": -1.0, "dn_dx": -1.0, "du_dx": -1.0, "d2phi_dx2": 1.0}
    for j, name in enumerate(parity):
        col = table[:, j]
        columns[name] = np.concatenate([parity[name] * col[:0:-1], col])

    return WaveProfile(params=params, X=X, x=x, decay_rate=far_field_decay_rate(params),
                       evaluator=evaluator, **columns)


@lru_cache(maxsize=32)
def _cached_profile(K: float, eps: float, X: Optional[float], tol: Optional[float]) -> WaveProfile:
    return compute_profile(PlasmaParams(K, eps), X=X, tol=tol)


def get_profile(params: PlasmaParams, X: Optional[float] = None, tol: Optional[float] = None) -> WaveProfile:
    """Profile shared per process; profiles are immutable so reuse is safe"""
    return _cached_profile(params.K, params.eps, X, tol)


def kdv_profile(xi, V: float):
    """KdV soliton Psi(xi) = (3/V) sech^2(sqrt(V/2) xi)"""
    y = np.abs(np.asarray(xi, dtype=float)) * math.sqrt(V / 2.0)
    q = np.exp(-2.0 * y)
    value = (3.0 / V) * 4.0 * q / (1.0 + q) ** 2
    return float(value) if np.ndim(value) == 0 else value


def kdv_profile_dxi(xi, V: float):
    """d Psi / d xi"""
    xi = np.asarray(xi, dtype=float)
    a = math.sqrt(V / 2.0)
    y = np.abs(xi) * a
    q = np.exp(-2.0 * y)
    sech2 = 4.0 * q / (1.0 + q) ** 2
    tanh = np.sign(xi) * (1.0 - q) / (1.0 + q)
    value = -(3.0 / V) * 2.0 * a * sech2 * tanh
    return float(value) if np.ndim(value) == 0 else value


def kdv_closeness(profile: WaveProfile) -> Dict[str, float]:
    """
    Distance of the rescaled wave from the KdV soliton.

    Returns max over samples of |n/eps - Psi(sqrt(eps) x)|, and the same for
    u/(eps V) and phi/eps. Each is O(eps) as eps -> 0.
    """
    p = profile.params
    psi = kdv_profile(math.sqrt(p.eps) * profile.x, p.V)
    return {
        "n": float(np.max(np.abs(profile.n / p.eps - psi))),
        "u": float(np.max(np.abs(profile.u / (p.eps * p.V) - psi))),
        "phi": float(np.max(np.abs(profile.phi / p.eps - psi))),
    }


def profile_c_derivative(params: PlasmaParams, x_grid: Sequence[float],
                         rel_step: float = 1e-5) -> Dict[str, np.ndarray]:
    """
    Central differences in c of (n, u, phi) on x_grid, step rel_step * c.

    Raises:
        ExistenceError: eps - h <= 0 or eps + h beyond the existence range
    """
    h = rel_step * params.c
    if params.eps - h <= 0:
        raise ExistenceError(f"eps={params.eps} too small for step {h:.3g}", "beyond_existence_range",
                             {"eps": params.eps, "h": h})
    xs = np.asarray(x_grid, dtype=float)
    X = max(float(np.max(np.abs(xs))), default_half_domain(params))
    lo = compute_profile(params.with_eps(params.eps - h), X=X)
    hi = compute_profile(params.with_eps(params.eps + h), X=X)
    out: Dict[str, np.ndarray] = {}
    for j, name in enumerate(("dn_dc", "du_dc", "dphi_dc")):
        out[name] = np.array([(hi.fields_at(x)[j] - lo.fields_at(x)[j]) / (2 * h) for x in xs])
    return out


# ---------------------------------------------------------------------------
# Closed forms and their small-amplitude series
# ---------------------------------------------------------------------------

def _check_density(n):
    arr = np.asarray(n, dtype=float)
    if np.any(arr <= -1.0):
        raise DomainError("density perturbation must satisfy n > -1", "density_range",
                          {"n_min": float(np.min(arr))})
    return arr if arr.ndim else float(arr)


def _enthalpy(n, c, K):
    return c * c / 2.0 * n * (2.0 + n) / (1.0 + n) ** 2 - K * np.log1p(n)


def _enthalpy_dn(n, c, K):
    return (c * c / (1.0 + n) ** 2 - K) / (1.0 + n)


@lru_cache(maxsize=256)
def _g_series(c: float, K: float) -> np.ndarray:
    """Taylor coefficients g_0..g_m of g(n) about n = 0 (ascending)"""
    a = c * c
    m = SERIES_TERMS
    k = np.arange(m + 1, dtype=float)
    h = np.zeros(m + 1)
    h[1:] = a / 2.0 * ((-1.0) ** (k[1:] + 1) * (k[1:] + 1)) - K * (-1.0) ** (k[1:] + 1) / k[1:]
    h[1] = a - K
    e = np.zeros(m + 1)
    e[0] = 1.0
    for i in range(1, m + 1):
        e[i] = sum(j * h[j] * e[i - j] for j in range(1, i + 1)) / i
    g = -a * (-1.0) ** (k + 1) + e
    g[0] = 0.0
    g[1] = 0.0
    g[2] = (a - K) * (a - K - 1.0) / 2.0
    return g


@lru_cache(maxsize=256)
def _U_series(c: float) -> np.ndarray:
    """Taylor coefficients of U(phi) about phi = 0 (ascending)"""
    m = SERIES_TERMS
    coeffs = np.zeros(m + 1)
    binom = 1.0
    fact = 1.0
    for k in range(1, m + 1):
        binom *= (0.5 - (k - 1)) / k
        fact *= k
        coeffs[k] = 1.0 / fact + c * c * binom * (-2.0 / (c * c)) ** k
    coeffs[1] = 0.0
    coeffs[2] = (c * c - 1.0) / (2.0 * c * c)
    return coeffs


def _g(n, c, K):
    closed = -c * c * n / (1.0 + n) + K * n + np.expm1(_enthalpy(n, c, K))
    series = np.polynomial.polynomial.polyval(n, _g_series(c, K))
    return np.where(np.abs(n) < SERIES_SWITCH, series, closed) if np.ndim(n) else (
        float(series) if abs(n) < SERIES_SWITCH else float(closed))


def _g_dn(n, c, K):
    return _enthalpy_dn(n, c, K) * (np.expm1(_enthalpy(n, c, K)) - n)


def _U(phi, c):
    closed = np.expm1(phi) - 2.0 * c * phi / (np.sqrt(c * c - 2.0 * phi) + c)
    series = np.polynomial.polynomial.polyval(phi, _U_series(c))
    return np.where(np.abs(phi) < SERIES_SWITCH, series, closed) if np.ndim(phi) else (
        float(series) if abs(phi) < SERIES_SWITCH else float(closed))


def _U_dphi(phi, c):
    return np.exp(phi) - c / np.sqrt(c * c - 2.0 * phi)


# ---------------------------------------------------------------------------
# Peak state
# ---------------------------------------------------------------------------

def _two_sided_grid(top: float) -> np.ndarray:
    """Points in (0, top) clustered geometrically at both ends"""
    low = top * np.geomspace(1e-7, 0.5, 200)
    high = top - top * np.geomspace(0.5, 1e-14, 200)[1:]
    return np.concatenate([low, high])


def _bracket_first_drop(f, grid: np.ndarray, what: str, details: Dict) -> Tuple[float, float]:
    values = np.array([f(p) for p in grid])
    if values[0] <= 0:
        raise BracketError(f"{what} is not positive near zero", "peak_bracket",
                           dict(details, interval=[float(grid[0]), float(grid[-1])]))
    drops = np.nonzero(values <= 0)[0]
    if len(drops) == 0:
        raise ExistenceError(
            f"{what} has no sign change below the sonic point: beyond existence range",
            "beyond_existence_range", dict(details, interval=[float(grid[0]), float(grid[-1])]),
        )
    i = int(drops[0])
    return float(grid[i - 1]), float(grid[i])


def _polish(f, fprime, root: float, a: float, b: float) -> float:
    """One Newton step, kept only if it stays in [a, b] and improves |f|"""
    slope = fprime(root)
    if slope == 0 or not math.isfinite(slope):
        return root
    candidate = root - f(root) / slope
    if a <= candidate <= b and abs(f(candidate)) <= abs(f(root)):
        return candidate
    return root


@lru_cache(maxsize=1024)
def _peak_state(K: float, eps: float) -> Tuple[float, float, float]:
    c = math.sqrt(1.0 + K) + eps
    details = {"K": K, "eps": eps}
    if K == 0.0:
        top = c * c / 2.0
        a, b = _bracket_first_drop(lambda p: _U(p, c), _two_sided_grid(top), "U(phi)", details)
        phi = brentq(lambda p: _U(p, c), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        phi = _polish(lambda p: _U(p, c), lambda p: _U_dphi(p, c), phi, a, b)
        s = math.sqrt(c * c - 2.0 * phi)
        return (c - s) / s, c - s, phi

    n_s = c / math.sqrt(K) - 1.0
    a, b = _bracket_first_drop(lambda m: _g(m, c, K), _two_sided_grid(n_s), "g(n)", details)
    n = brentq(lambda m: _g(m, c, K), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    n = _polish(lambda m: _g(m, c, K), lambda m: _g_dn(m, c, K), n, a, b)
    return n, c * n / (1.0 + n), float(_enthalpy(n, c, K))


# ---------------------------------------------------------------------------
# Profile integration
# ---------------------------------------------------------------------------

class _WaveEvaluator:
    """
    Dense-output rule for x >= 0, extended to x < 0 by symmetry.

    Piece 1 integrates (s, E) from the peak down to s*/2; piece 2 integrates
    the first-integral reduction ds/dx = -sqrt(2 G(s)) / dH(s), which decays
    stably into the tail. s is n for K > 0 and phi for K = 0.
    """

    def __init__(self, params: PlasmaParams, x_mid: float, X: float, phase_sol, flank_sol):
        self.c = params.c
        self.K = params.K
        self.x_mid = x_mid
        self.X = X
        self.phase_sol = phase_sol
        self.flank_sol = flank_sol

    @classmethod
    def build(cls, params: PlasmaParams, X: float, tol: float) -> "_WaveEvaluator":
        c, K = params.c, params.K
        n_star, _, phi_star = peak_state(params)
        s0 = phi_star if K == 0.0 else n_star

        if K == 0.0:
            def phase_rhs(x, y):
                return [-y[1], c / math.sqrt(c * c - 2.0 * y[0]) - math.exp(y[0])]
        else:
            def phase_rhs(x, y):
                n = y[0]
                return [-y[1] / _enthalpy_dn(n, c, K), 1.0 + n - math.exp(_enthalpy(n, c, K))]

        def half_height(x, y):
            return y[0] - s0 / 2.0
        half_height.terminal = True
        half_height.direction = -1

        phase = solve_ivp(phase_rhs, (0.0, X), [s0, 0.0], method="DOP853", rtol=tol,
                          atol=tol * s0, dense_output=True, events=half_height)
        cls._check(phase, "phase-plane piece")
        if phase.status != 1:
            return cls(params, X, X, phase.sol, None)

        x_mid = float(phase.t_events[0][0])
        s_mid = float(phase.y_events[0][0][0])

        def flank_rhs(x, y):
            return [-cls._slope(y[0], c, K)]

        def left_range(x, y):
            return y[0]
        left_range.terminal = True

        flank = solve_ivp(flank_rhs, (x_mid, X), [s_mid], method="DOP853", rtol=tol,
                          atol=s0 * 1e-24, dense_output=True, events=left_range)
        cls._check(flank, "flank piece")
        if flank.status == 1:
            raise IntegrationError("wave profile crossed zero on the flank", "profile_blowup",
                                   {"x": float(flank.t_events[0][0]), "K": K, "eps": params.eps})
        return cls(params, x_mid, X, phase.sol, flank.sol)

    @staticmethod
    def _check(result, piece: str):
        if result.status == -1:
            raise IntegrationError(f"profile integration failed on the {piece}: {result.message}",
                                   "ode_failure", {"x": float(result.t[-1])})

    @staticmethod
    def _slope(s: float, c: float, K: float) -> float:
        """|ds/dx| on the flank from the first integral"""
        if s <= 0.0:
            return 0.0
        if K == 0.0:
            return math.sqrt(2.0 * max(_U(s, c), 0.0))
        return math.sqrt(2.0 * max(_g(s, c, K), 0.0)) / _enthalpy_dn(s, c, K)

    def evaluate(self, x: float) -> Tuple[float, float, float, float, float, float, float]:
        xa = abs(x)
        sign = 1.0 if x >= 0 else -1.0
        if xa > self.X:
            return (0.0,) * 7
        if xa <= self.x_mid or self.flank_sol is None:
            s, E = self.phase_sol(xa)
        else:
            s = float(self.flank_sol(xa)[0])
            E = self._E_from_first_integral(s)
        return self._fields(float(s), sign * float(E))

    def _E_from_first_integral(self, s: float) -> float:
        if s <= 0.0:
            return 0.0
        G = _U(s, self.c) if self.K == 0.0 else _g(s, self.c, self.K)
        return math.sqrt(2.0 * max(G, 0.0))

    def _fields(self, s: float, E: float):
        c, K = self.c, self.K
        if K == 0.0:
            phi = s
            root = math.sqrt(c * c - 2.0 * phi)
            n = 2.0 * phi / ((c + root) * root)
            u = 2.0 * phi / (c + root)
            dH = c * c / (1.0 + n) ** 3
            curvature = math.expm1(phi) - n
        else:
            n = s
            phi = float(_enthalpy(n, c, K))
            u = c * n / (1.0 + n)
            dH = _enthalpy_dn(n, c, K)
            curvature = math.expm1(phi) - n
        dn_dx = -E / dH
        du_dx = c * dn_dx / (1.0 + n) ** 2
        return n, u, phi, E, dn_dx, du_dx, curvature

