"""
Far-field spectral structure of the linearized Euler-Poisson operator.

The characteristic quartic (c^2-K) d(mu) = (mu^2-1)[(lambda-c mu)^2 - K mu^2] + mu^2,
its branch functions d±(mu) = mu (c ± sqrt(1/(1-mu^2) + K)), the labeled roots
mu_1..mu_4, eigenvectors of the asymptotic matrix, dispersion curves, the
weighted region Omega^eps and the S1 non-negativity check.
"""
import math
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .config import config
from .errors import DomainError, NonSemisimpleError
from .models import (
    ModePair, OmegaRegion, PlasmaParams, Regime, RootBranch, SpectralRoots,
    SpectrumCurve, SplitClass, WaveProfile,
)
from .soliton_profile import peak_state

# A root counts as left of -beta when Re mu + beta < -SPLIT_TOL
SPLIT_TOL = 1e-12
# Branch residuals closer than this cannot tell mu_2 from mu_3
TIE_TOL = 1e-12

Sign = Union[str, int, float]


def _sign_value(sign: Sign) -> float:
    if sign in ("+", "plus", 1, 1.0):
        return 1.0
    if sign in ("-", "minus", -1, -1.0):
        return -1.0
    raise DomainError(f"branch sign must be + or -, got {sign!r}", "branch_sign")


def _root_term(mu, K: float):
    """sqrt(1/(1-mu^2) + K) as a product of principal square roots, analytic off the real cut"""
    if K == 0.0:
        return 1.0 / (np.sqrt(1.0 + mu) * np.sqrt(1.0 - mu))
    a = math.sqrt(1.0 + 1.0 / K)
    return math.sqrt(K) * np.sqrt(a + mu) * np.sqrt(a - mu) / (np.sqrt(1.0 + mu) * np.sqrt(1.0 - mu))


def _on_cut(mu: np.ndarray) -> np.ndarray:
    return (mu.imag == 0.0) & (np.abs(mu.real) >= 1.0)


def branch_d(sign: Sign, mu, params: PlasmaParams):
    """
    Branch function d±(mu).

    Raises:
        DomainError: mu on (-inf, -1] or [1, inf)
    """
    s = _sign_value(sign)
    arr = np.asarray(mu, dtype=complex)
    if np.any(_on_cut(arr)):
        raise DomainError("mu lies on the branch cut (-inf,-1] U [1,inf)", "branch_cut",
                          {"mu": arr.tolist()})
    value = arr * (params.c + s * _root_term(arr, params.K))
    return complex(value) if value.ndim == 0 else value


def _branch_residual(sign: float, mu: complex, lam: complex, params: PlasmaParams) -> float:
    if mu.imag == 0.0 and abs(mu.real) >= 1.0:
        return math.inf
    return abs(mu * (params.c + sign * complex(_root_term(mu, params.K))) - lam)


def char_poly_coeffs(lam: complex, params: PlasmaParams) -> np.ndarray:
    """Descending coefficients of (c^2-K) d(mu)"""
    c, K = params.c, params.K
    D = c * c - K
    lam = complex(lam)
    return np.array([D, -2.0 * c * lam, lam * lam - D + 1.0, 2.0 * c * lam, -lam * lam], dtype=complex)


def _polish(coeffs: np.ndarray, root: complex, steps: int = 2) -> complex:
    deriv = np.polyder(coeffs)
    for _ in range(steps):
        p = np.polyval(coeffs, root)
        dp = np.polyval(deriv, root)
        if dp == 0:
            break
        candidate = root - p / dp
        if abs(np.polyval(coeffs, candidate)) >= abs(p):
            break
        root = candidate
    return complex(root)


def char_roots(lam: complex, params: PlasmaParams, beta: float = 0.0,
               previous: Optional[SpectralRoots] = None) -> SpectralRoots:
    """
    Labeled roots of the characteristic quartic at lambda.

    mu_1 is the root furthest left; the weighted splitting requires it to be
    the only one with Re mu + beta < 0. mu_4 is the remaining root nearest +1:
    it continues +mu* from lambda = 0 and tends to +1 as |lambda| grows.
    mu_2 (plus branch) and mu_3 (minus branch) are told apart by branch residuals,
    so for eps^{3/2} << |lambda| << 1 the root lambda/(c+V) is mu_2 and mu_4 is
    one of the cube roots.
    A splitting violation is recorded in `diagnostic`, never relabeled.

    Args:
        lam: Spectral parameter
        params: Wave parameters
        beta: Weight exponent (0 for the unweighted splitting)
        previous: Roots at a nearby lambda, used to break mu_2/mu_3 ties

    Returns:
        SpectralRoots
    """
    lam = complex(lam)
    coeffs = char_poly_coeffs(lam, params)
    raw = np.roots(coeffs)
    roots = [_polish(coeffs, r) for r in raw]

    scale = np.max(np.abs(coeffs))
    vieta = float(np.max(np.abs(coeffs[0] * np.poly(roots) - coeffs)) / scale)

    order = sorted(range(4), key=lambda i: roots[i].real)
    mu1 = roots[order[0]]
    rest = [roots[i] for i in order[1:]]
    i4 = min(range(3), key=lambda i: abs(rest[i] - 1.0))
    mu4 = rest.pop(i4)
    mu2, mu3 = _split_middle(rest[0], rest[1], lam, params, previous)
    mu = (mu1, mu2, mu3, mu4)

    branches = tuple(
        RootBranch.PLUS if _branch_residual(1.0, m, lam, params) <= _branch_residual(-1.0, m, lam, params)
        else RootBranch.MINUS
        for m in mu
    )
    classes = tuple(_split_class(m, beta) for m in mu)
    left = sum(1 for s in classes if s is SplitClass.LEFT)

    diagnostic = None
    if left != 1 or classes[0] is not SplitClass.LEFT:
        diagnostic = {
            "message": f"splitting violation at lambda={lam}: {left} roots with Re mu + beta < 0",
            "lambda": {"re": lam.real, "im": lam.imag},
            "beta": beta,
            "left_count": left,
            "roots": [{"re": m.real, "im": m.imag} for m in mu],
        }
    return SpectralRoots(lam=lam, beta=beta, mu=mu, branches=branches, classes=classes,
                         vieta_residual=vieta, diagnostic=diagnostic)


def _split_class(mu: complex, beta: float) -> SplitClass:
    shifted = mu.real + beta
    if shifted < -SPLIT_TOL:
        return SplitClass.LEFT
    if shifted > SPLIT_TOL:
        return SplitClass.RIGHT
    return SplitClass.NEUTRAL


def _split_middle(a: complex, b: complex, lam: complex, params: PlasmaParams,
                  previous: Optional[SpectralRoots]):
    def score(m):
        return _branch_residual(1.0, m, lam, params) - _branch_residual(-1.0, m, lam, params)

    sa, sb = score(a), score(b)
    if math.isfinite(sa) and math.isfinite(sb) and abs(sa - sb) >= TIE_TOL:
        return (a, b) if sa < sb else (b, a)
    if previous is not None:
        p2, p3 = previous.mu[1], previous.mu[2]
        keep = abs(a - p2) + abs(b - p3)
        swap = abs(b - p2) + abs(a - p3)
        return (a, b) if keep <= swap else (b, a)
    return (a, b) if a.imag <= b.imag else (b, a)


def split_counts(lambdas: Iterable[complex], params: PlasmaParams, beta: float) -> List[int]:
    """Number of roots with Re mu + beta < 0 at each lambda"""
    counts = []
    for lam in lambdas:
        roots = char_roots(lam, params, beta)
        counts.append(sum(1 for s in roots.classes if s is SplitClass.LEFT))
    return counts


def mode_vectors(root_index: int, roots: SpectralRoots, params: PlasmaParams) -> ModePair:
    """
    Right and left eigenvectors of the asymptotic matrix for mu_j.

    Raises:
        DomainError: mu_j = 0 or mu_j = ±1
        NonSemisimpleError: |pi_j · v_j| < 1e-12
    """
    if root_index not in (1, 2, 3, 4):
        raise DomainError(f"root index must be 1..4, got {root_index}", "root_index")
    mu = roots.mu[root_index - 1]
    lam = roots.lam
    c, K = params.c, params.K
    D = c * c - K
    if abs(mu) < 1e-14 or abs(1.0 - mu * mu) < 1e-14:
        raise DomainError(f"mu_{root_index}={mu} has no eigenvector of this form", "degenerate_root",
                          {"mu": mu})
    one_minus = 1.0 - mu * mu
    v = np.array([1.0, (c * mu - lam) / mu, 1.0 / one_minus, mu / one_minus], dtype=complex)
    pi = np.array([(c * lam / mu - D) * one_minus, -lam * one_minus / mu, 1.0, mu], dtype=complex)
    pi_dot_v = complex(pi @ v)
    if abs(pi_dot_v) < 1e-12:
        raise NonSemisimpleError(f"mu_{root_index}={mu} is not semi-simple (pi·v={pi_dot_v})",
                                 "non_semisimple", {"mu": mu, "pi_dot_v": pi_dot_v, "lambda": lam})
    return ModePair(mu=mu, v=v, w=pi / pi_dot_v, pi_dot_v=pi_dot_v)


def dispersion(k, params: PlasmaParams):
    """
    Dispersion curves omega±(k) = -k (c ± sqrt(1/(1+k^2) + K)) and group velocities.

    Returns:
        (omega_plus, omega_minus, group_plus, group_minus)
    """
    k = np.asarray(k, dtype=float)
    c, K = params.c, params.K
    q = 1.0 + k * k
    root = np.sqrt(1.0 / q + K)
    slope = (1.0 + K * q * q) / (q * q * root)
    out = (-k * (c + root), -k * (c - root), -(c + slope), -(c - slope))
    if k.ndim == 0:
        return tuple(float(v) for v in out)
    return out


def default_c0(params: PlasmaParams) -> float:
    """c0 = fraction * sqrt(2V), midpoint of (0, sqrt(2V)) by default"""
    return config.c0_fraction * math.sqrt(2.0 * params.V)


def omega_region(params: PlasmaParams, c0: Optional[float] = None) -> OmegaRegion:
    return OmegaRegion(K=params.K, eps=params.eps, c0=default_c0(params) if c0 is None else c0)


def weight_exponent(params: PlasmaParams, c0: Optional[float] = None) -> float:
    """beta = c0 sqrt(eps)"""
    return omega_region(params, c0).beta


def essential_spectrum_curve(beta: float, k_grid: Sequence[float], params: PlasmaParams) -> SpectrumCurve:
    """d±(ik - beta) over k_grid, the boundary of the weighted essential spectrum"""
    if not 0.0 <= beta < 1.0:
        raise DomainError(f"beta={beta} must lie in [0, 1)", "beta_range", {"beta": beta})
    k = np.asarray(k_grid, dtype=float)
    mu = 1j * k - beta
    return SpectrumCurve(beta=beta, k=k, d_plus=np.asarray(branch_d("+", mu, params)),
                         d_minus=np.asarray(branch_d("-", mu, params)))


def asymptotic_roots(lam: complex, params: PlasmaParams, regime: Union[Regime, str]) -> np.ndarray:
    """
    Leading-order approximations of the four roots.

    small: mu_j ~ (-2V lambda)^{1/3} e^{2 pi i j/3} (j=1,2,3), mu_4 ~ lambda/(c+V)
    large: mu_1 ~ -1, mu_{2,3} ~ (c lambda ∓ sqrt(K lambda^2 - c^2 + K))/(c^2-K), mu_4 ~ 1

    Entries follow the expansion, not the char_roots labels: in the small
    regime lambda/(c+V) is the plus-branch root char_roots calls mu_2.
    """
    regime = Regime(regime) if isinstance(regime, str) else regime
    lam = complex(lam)
    c, K, V = params.c, params.K, params.V
    if regime is Regime.SMALL:
        base = (-2.0 * V * lam) ** (1.0 / 3.0)
        cubes = [base * np.exp(2j * math.pi * j / 3.0) for j in (1, 2, 3)]
        return np.array(cubes + [lam / (c + V)], dtype=complex)
    D = c * c - K
    root = np.sqrt(complex(K * lam * lam - c * c + K))
    return np.array([-1.0, (c * lam - root) / D, (c * lam + root) / D, 1.0], dtype=complex)


# ---------------------------------------------------------------------------
# S1 non-negativity
# ---------------------------------------------------------------------------

def _s1_entries_at(n: float, u: float, c: float, K: float):
    J = (c - u) ** 2 - K
    D = c * c - K
    R11 = (c - u) / J - c / D
    R12 = (1.0 + n) / J - 1.0 / D
    R21 = K / ((1.0 + n) * J) - K / D
    return R11, R12, R21


def _min_eigenvalue(R11: float, R12: float, R21: float, K: float) -> float:
    return 2.0 * math.sqrt(K) * R11 - math.sqrt(2.0 * K * K * R12 * R12 + 2.0 * R21 * R21)


def _require_positive_K(K: float):
    if K <= 0.0:
        raise DomainError("the S1 matrix is defined for K > 0 only", "requires_positive_K", {"K": K})


def _s1_entries(x: float, profile: WaveProfile):
    params = profile.params
    _require_positive_K(params.K)
    n, u = profile.fields_at(x)[:2]
    return _s1_entries_at(n, u, params.c, params.K)


def s1_matrix(x: float, profile: WaveProfile) -> np.ndarray:
    """Symmetric 4x4 S1 at x, built from R = A2(x) - A2(inf)"""
    R11, R12, R21 = _s1_entries(x, profile)
    K = profile.params.K
    rk = math.sqrt(K)
    off = K * R12 - R21
    S = np.zeros((4, 4))
    S[1, 1] = 2.0 * rk * R11 - K * R12 - R21
    S[2, 2] = 2.0 * rk * R11 + K * R12 + R21
    S[1, 2] = S[2, 1] = off
    return S


def s1_min_eigenvalue(x: float, profile: WaveProfile) -> float:
    """2 sqrt(K) R11 - sqrt(2 K^2 R12^2 + 2 R21^2); the other eigenvalues are 0, 0 and the + branch"""
    R11, R12, R21 = _s1_entries(x, profile)
    return _min_eigenvalue(R11, R12, R21, profile.params.K)


def s1_density_min_eigenvalue(n: float, params: PlasmaParams) -> float:
    """Smallest S1 eigenvalue on the wave as a function of density, with u = c n / (1 + n)"""
    _require_positive_K(params.K)
    c, K = params.c, params.K
    return _min_eigenvalue(*_s1_entries_at(n, c * n / (1.0 + n), c, K), K)


def s1_density_crossover(params: PlasmaParams, tol: float = 1e-10, n_scan: int = 400) -> Optional[float]:
    """
    Smallest density in (0, n*] where the S1 minimum eigenvalue drops below -tol.

    The minimum eigenvalue is O(n) and positive for small n; it changes sign at
    a density fixed by higher-order terms (about 0.095 at K = 1, about 0.0025
    at K = 10), so non-negativity along the wave holds only while n* stays
    below it.

    Returns:
        The crossover density, 0.0 if the scan starts negative, None if the
        eigenvalue stays above -tol up to the peak
    """
    n_star = peak_state(params)[0]
    grid = np.geomspace(n_star * 1e-4, n_star, n_scan)
    values = np.array([s1_density_min_eigenvalue(float(n), params) for n in grid])
    if not np.any(values < -tol):
        return None
    i = int(np.flatnonzero(values < 0.0)[0])
    if i == 0:
        return 0.0
    return float(brentq(lambda n: s1_density_min_eigenvalue(n, params), grid[i - 1], grid[i],
                        xtol=1e-15, rtol=1e-12))


def s1_largest_nonnegative_eps(K: float, eps_grid: Sequence[float], tol: float = 1e-10) -> Optional[float]:
    """
    Largest eps on the grid up to which min S1 >= -tol along the whole wave.

    Scanning stops at the first failure.
    """
    best = None
    for eps in sorted(eps_grid):
        if s1_density_crossover(PlasmaParams(K, eps), tol) is not None:
            break
        best = eps
    return best


def s1_scan(profile: WaveProfile, stride: int = 1) -> pd.DataFrame:
    """S1 minimum eigenvalue at every stride-th sample of the wave"""
    x = profile.x[::stride]
    return pd.DataFrame({
        "x": x,
        "n": profile.n[::stride],
        "s1_min": [s1_min_eigenvalue(float(v), profile) for v in x],
    })


def largest_split_eps(K: float, eps_grid: Sequence[float], Lambdas: Sequence[complex],
                      c0_fraction: Optional[float] = None) -> Optional[float]:
    """
    Largest eps on the grid up to which the weighted splitting holds.

    Each scaled Lambda is mapped to lambda = eps^{3/2} Lambda; beta = c0 sqrt(eps)
    with c0 = c0_fraction * sqrt(2V). Scanning stops at the first failure.
    """
    fraction = config.c0_fraction if c0_fraction is None else c0_fraction
    best = None
    for eps in sorted(eps_grid):
        params = PlasmaParams(K, eps)
        beta = fraction * math.sqrt(2.0 * params.V) * math.sqrt(eps)
        counts = split_counts([eps ** 1.5 * complex(L) for L in Lambdas], params, beta)
        if any(n != 1 for n in counts):
            break
        best = eps
    return best
