"""
Data models for evans-ep
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import config
from .errors import DomainError, ExistenceError, SplittingError


class RootBranch(Enum):
    """Which branch function d± a far-field root belongs to"""
    MINUS = "minus_branch"
    PLUS = "plus_branch"


class SplitClass(Enum):
    """Position of a root relative to the shifted line Re mu = -beta"""
    LEFT = "left"
    RIGHT = "right"
    NEUTRAL = "neutral"


class EvansMethod(Enum):
    """How an Evans-function value was obtained"""
    BACKWARD_SWEEP = "backward_sweep"
    MEET_AT_ZERO = "meet_at_zero"
    CONSTANT_STATE = "constant_state"
    KDV_CLOSED = "kdv_closed"
    KDV_ODE = "kdv_ode"


class PolicyKind(Enum):
    """Endpoint treatment of the criterion quadratures"""
    TRUNCATED = "truncated"
    REGULARIZED = "regularized"


class Regime(Enum):
    """Asymptotic regime of the far-field roots"""
    SMALL = "small"
    LARGE = "large"


# ---------------------------------------------------------------------------
# Wave parameters and profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlasmaParams:
    """
    Wave parameters: temperature ratio K and amplitude eps.

    The speed c = V + eps is always derived. eps = 0 is the constant state
    (no wave); any eps at or beyond the critical amplitude is rejected.
    """
    K: float
    eps: float

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K >= 0.0):
            raise DomainError(f"K must be a finite non-negative number, got {self.K}", "negative_K",
                              {"K": self.K})
        if not (math.isfinite(self.eps) and self.eps >= 0.0):
            raise DomainError(f"eps must be non-negative, got {self.eps}", "negative_eps",
                              {"eps": self.eps})
        if self.eps > 0.0:
            from .soliton_profile import critical_amplitude
            eps_K = critical_amplitude(self.K)
            if self.eps >= eps_K:
                raise ExistenceError(
                    f"eps={self.eps} is beyond existence range (eps_K={eps_K:.6f} for K={self.K})",
                    "beyond_existence_range",
                    {"K": self.K, "eps": self.eps, "eps_K": eps_K},
                )

    @property
    def V(self) -> float:
        return math.sqrt(1.0 + self.K)

    @property
    def c(self) -> float:
        return self.V + self.eps

    def with_eps(self, eps: float) -> "PlasmaParams":
        return PlasmaParams(K=self.K, eps=eps)

    def to_dict(self) -> Dict[str, Any]:
        return {"K": self.K, "eps": self.eps, "c": self.c, "V": self.V}


@dataclass(frozen=True)
class WaveSample:
    """One point of a solitary wave with its algebraic derivative fields"""
    x: float
    n: float
    u: float
    phi: float
    E: float
    dn_dx: float
    du_dx: float
    d2phi_dx2: float

    @property
    def dphi_dx(self) -> float:
        return -self.E

    def J(self, params: PlasmaParams) -> float:
        """Sonic-point function (c - u)^2 - K"""
        return (params.c - self.u) ** 2 - params.K

    @classmethod
    def far_field(cls, x: float) -> "WaveSample":
        return cls(x=x, n=0.0, u=0.0, phi=0.0, E=0.0, dn_dx=0.0, du_dx=0.0, d2phi_dx2=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x, "n": self.n, "u": self.u, "phi": self.phi, "E": self.E,
            "dn_dx": self.dn_dx, "du_dx": self.du_dx, "dphi_dx": self.dphi_dx,
            "d2phi_dx2": self.d2phi_dx2,
        }


class ProfileEvaluator(Protocol):
    """Dense-output rule of a computed profile"""

    def evaluate(self, x: float) -> Tuple[float, float, float, float, float, float, float]:
        """Return (n, u, phi, E, dn_dx, du_dx, d2phi_dx2) at any real x"""
        ...


PROFILE_COLUMNS = ["x", "n", "u", "phi", "E", "dn_dx", "du_dx", "d2phi_dx2"]


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """
    A solitary wave sampled on a symmetric uniform grid over [-X, X].

    Arrays are read-only; `sample_at` uses the integrator's dense output,
    so the profile is safe to share between threads.
    """
    params: PlasmaParams
    X: float
    x: np.ndarray
    n: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    E: np.ndarray
    dn_dx: np.ndarray
    du_dx: np.ndarray
    d2phi_dx2: np.ndarray
    decay_rate: float
    evaluator: ProfileEvaluator = field(repr=False)

    def __post_init__(self):
        for name in PROFILE_COLUMNS:
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.x)

    @property
    def n_star(self) -> float:
        return float(self.n[len(self.x) // 2])

    @property
    def samples(self) -> List[WaveSample]:
        return [self.sample(i) for i in range(len(self.x))]

    def sample(self, i: int) -> WaveSample:
        return WaveSample(*(float(getattr(self, name)[i]) for name in PROFILE_COLUMNS))

    def fields_at(self, x: float) -> Tuple[float, float, float, float, float, float, float]:
        return self.evaluator.evaluate(x)

    def sample_at(self, x: float) -> WaveSample:
        return WaveSample(float(x), *self.evaluator.evaluate(float(x)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({name: np.asarray(getattr(self, name)) for name in PROFILE_COLUMNS})


# ---------------------------------------------------------------------------
# Spectral records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralRoots:
    """The four labeled roots mu_1..mu_4 of the characteristic quartic at lambda"""
    lam: complex
    beta: float
    mu: Tuple[complex, complex, complex, complex]
    branches: Tuple[RootBranch, ...]
    classes: Tuple[SplitClass, ...]
    vieta_residual: float
    diagnostic: Optional[Dict[str, Any]] = None

    @property
    def split_ok(self) -> bool:
        return self.diagnostic is None

    @property
    def mu1(self) -> complex:
        return self.mu[0]

    @property
    def gap(self) -> float:
        """Smallest Re(mu_j - mu_1) over j = 2, 3, 4"""
        return min((m - self.mu[0]).real for m in self.mu[1:])

    def require_split(self) -> "SpectralRoots":
        if self.diagnostic is not None:
            raise SplittingError(self.diagnostic["message"], "splitting_violation", self.diagnostic)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": {"re": self.lam.real, "im": self.lam.imag},
            "beta": self.beta,
            "mu": [{"re": m.real, "im": m.imag} for m in self.mu],
            "branches": [b.value for b in self.branches],
            "classes": [s.value for s in self.classes],
            "vieta_residual": self.vieta_residual,
            "diagnostic": self.diagnostic,
        }


@dataclass(frozen=True, eq=False)
class ModePair:
    """Right/left eigenvectors of the asymptotic matrix for one root"""
    mu: complex
    v: np.ndarray
    w: np.ndarray
    pi_dot_v: complex


@dataclass(frozen=True)
class OmegaRegion:
    """Half-plane Re lambda >= -eps^{3/2} eta(c0) on which the weighted splitting holds"""
    K: float
    eps: float
    c0: float

    def __post_init__(self):
        limit = math.sqrt(2.0 * math.sqrt(1.0 + self.K))
        if not 0.0 < self.c0 < limit:
            raise DomainError(f"c0={self.c0} must lie in (0, {limit:.6f})", "c0_range",
                              {"c0": self.c0, "upper": limit})

    @property
    def eta(self) -> float:
        return self.c0 / 2.0 * (1.0 - self.c0 ** 2 / (2.0 * math.sqrt(1.0 + self.K)))

    @property
    def boundary(self) -> float:
        return -self.eps ** 1.5 * self.eta

    @property
    def beta(self) -> float:
        return self.c0 * math.sqrt(self.eps)

    def contains(self, lam: complex) -> bool:
        return complex(lam).real >= self.boundary

    def to_dict(self) -> Dict[str, Any]:
        return {"K": self.K, "eps": self.eps, "c0": self.c0, "eta": self.eta, "boundary": self.boundary}


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    """Essential-spectrum curves d±(ik - beta) over a k grid"""
    beta: float
    k: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray

    @property
    def sup_re_plus(self) -> float:
        return float(np.max(self.d_plus.real))

    @property
    def sup_re_minus(self) -> float:
        return float(np.max(self.d_minus.real))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "k": self.k,
            "re_dplus": self.d_plus.real,
            "im_dplus": self.d_plus.imag,
            "re_dminus": self.d_minus.real,
            "im_dminus": self.d_minus.imag,
        })


# ---------------------------------------------------------------------------
# Evans records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvansOptions:
    """Shooting options for Evans-function evaluation"""
    X: Optional[float] = None
    ode_tol: float = field(default_factory=lambda: config.ode_tol)
    meet_at_zero: bool = False
    c0: Optional[float] = None

    def __post_init__(self):
        if not 1e-14 < self.ode_tol < 1e-6:
            raise DomainError(f"ode_tol={self.ode_tol} must lie in (1e-14, 1e-6)", "tolerance_range",
                              {"ode_tol": self.ode_tol})
        if self.X is not None and self.X <= 0:
            raise DomainError(f"X={self.X} must be positive", "X_range", {"X": self.X})


@dataclass(frozen=True)
class EvansValue:
    """A complex Evans-function value with integration diagnostics"""
    lam: complex
    eps: float
    D: complex
    method: EvansMethod
    residuals: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": {"re": self.lam.real, "im": self.lam.imag},
            "eps": self.eps,
            "D": {"re": self.D.real, "im": self.D.imag},
            "method": self.method.value,
            "residuals": dict(self.residuals),
        }


@dataclass(frozen=True)
class Contour:
    """
    Closed, counterclockwise contour in the lambda plane.

    kind is "circle", "polyline" or "half_annulus" (the boundary of
    {inner <= |lambda| <= radius, Re lambda >= 0}).
    """
    kind: str
    n_nodes: int = 64
    center: complex = 0j
    radius: float = 0.0
    inner_radius: float = 0.0
    vertices: Tuple[complex, ...] = ()

    def __post_init__(self):
        if self.n_nodes < 8:
            raise DomainError("contour needs at least 8 nodes", "contour_nodes", {"n_nodes": self.n_nodes})
        if self.kind == "circle" and self.radius <= 0:
            raise DomainError("circle radius must be positive", "contour_radius", {"radius": self.radius})
        if self.kind == "half_annulus" and not 0 < self.inner_radius < self.radius:
            raise DomainError("half annulus needs 0 < inner < outer radius", "contour_radius",
                              {"inner": self.inner_radius, "outer": self.radius})
        if self.kind == "polyline" and len(self.vertices) < 3:
            raise DomainError("polyline contour needs at least 3 vertices", "contour_vertices")
        if self.kind not in ("circle", "polyline", "half_annulus"):
            raise DomainError(f"unknown contour kind {self.kind!r}", "contour_kind")

    @classmethod
    def circle(cls, center: complex, radius: float, n_nodes: int = 64) -> "Contour":
        return cls(kind="circle", n_nodes=n_nodes, center=complex(center), radius=float(radius))

    @classmethod
    def polyline(cls, vertices: Sequence[complex], n_nodes: int = 64) -> "Contour":
        return cls(kind="polyline", n_nodes=n_nodes, vertices=tuple(complex(v) for v in vertices))

    @classmethod
    def half_annulus(cls, inner: float, outer: float, n_nodes: int = 128) -> "Contour":
        return cls(kind="half_annulus", n_nodes=n_nodes, radius=float(outer), inner_radius=float(inner))

    def point(self, t: float) -> complex:
        """Point at parameter t in [0, 1), proportional to arc length for polygonal parts"""
        t = t % 1.0
        if self.kind == "circle":
            return self.center + self.radius * complex(math.cos(2 * math.pi * t), math.sin(2 * math.pi * t))
        if self.kind == "polyline":
            return _walk_segments(self._segments(), t)
        return _walk_segments(self._annulus_pieces(), t)

    def nodes(self, n: Optional[int] = None) -> np.ndarray:
        n = n or self.n_nodes
        return np.array([self.point(k / n) for k in range(n)])

    def _segments(self):
        verts = list(self.vertices)
        return [("line", a, b) for a, b in zip(verts, verts[1:] + verts[:1])]

    def _annulus_pieces(self):
        r, q = self.radius, self.inner_radius
        return [
            ("arc", r, (-math.pi / 2, math.pi / 2)),
            ("line", 1j * r, 1j * q),
            ("arc", q, (math.pi / 2, -math.pi / 2)),
            ("line", -1j * q, -1j * r),
        ]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind, "n_nodes": self.n_nodes}
        if self.kind == "circle":
            data.update(center={"re": self.center.real, "im": self.center.imag}, radius=self.radius)
        elif self.kind == "half_annulus":
            data.update(inner_radius=self.inner_radius, radius=self.radius)
        else:
            data["vertices"] = [{"re": v.real, "im": v.imag} for v in self.vertices]
        return data


def _piece_length(piece) -> float:
    if piece[0] == "line":
        return abs(piece[2] - piece[1])
    _, r, (a, b) = piece
    return r * abs(b - a)


def _walk_segments(pieces, t: float) -> complex:
    lengths = [_piece_length(p) for p in pieces]
    s = t * sum(lengths)
    for piece, length in zip(pieces, lengths):
        if s <= length or piece is pieces[-1]:
            frac = s / length if length > 0 else 0.0
            if piece[0] == "line":
                return piece[1] + frac * (piece[2] - piece[1])
            _, r, (a, b) = piece
            angle = a + frac * (b - a)
            return complex(r * math.cos(angle), r * math.sin(angle))
        s -= length
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class ZeroCount:
    """Result of an argument-principle zero count"""
    contour: Contour
    nodes: int
    winding: float
    count: int
    min_abs_D: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "contour": self.contour.to_dict(),
            "nodes": self.nodes,
            "winding": self.winding,
            "count": self.count,
            "min_abs_D": self.min_abs_D,
        }


# ---------------------------------------------------------------------------
# Criterion records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraturePolicy:
    """Endpoint treatment for the criterion integrals"""
    kind: PolicyKind = PolicyKind.REGULARIZED
    lower_cut: float = 1e-4
    upper_gap: float = 1e-10
    limit: int = 400
    epsrel: float = 1e-10

    def __post_init__(self):
        if self.kind is PolicyKind.TRUNCATED and not (self.lower_cut > 0 and self.upper_gap > 0):
            raise DomainError("truncated policy needs positive cuts", "policy_cuts",
                              {"lower_cut": self.lower_cut, "upper_gap": self.upper_gap})

    @classmethod
    def regularized(cls) -> "QuadraturePolicy":
        return cls(kind=PolicyKind.REGULARIZED)

    @classmethod
    def truncated(cls, lower_cut: float = 1e-4, upper_gap: float = 1e-10) -> "QuadraturePolicy":
        return cls(kind=PolicyKind.TRUNCATED, lower_cut=lower_cut, upper_gap=upper_gap)

    @classmethod
    def interval_a(cls) -> "QuadraturePolicy":
        """[1e-4, peak - 1e-4]"""
        return cls.truncated(1e-4, 1e-4)

    @classmethod
    def interval_b(cls) -> "QuadraturePolicy":
        """[1e-4, peak - 1e-10]"""
        return cls.truncated(1e-4, 1e-10)

    @property
    def label(self) -> str:
        if self.kind is PolicyKind.REGULARIZED:
            return "regularized"
        return f"truncated[{self.lower_cut:.0e},{self.upper_gap:.0e}]"


@dataclass(frozen=True)
class CriterionRow:
    eps: float
    c: float
    Q: float
    dQ_dc: Optional[float] = None


@dataclass
class CriterionSweep:
    """Q(c) (or Q0(c)) and its c-derivative over an eps grid"""
    K: float
    eps_grid: List[float]
    values: List[CriterionRow]
    policy: QuadraturePolicy

    def __post_init__(self):
        if not self.eps_grid:
            raise DomainError("eps grid is empty", "empty_grid")
        if any(b <= a for a, b in zip(self.eps_grid, self.eps_grid[1:])):
            raise DomainError("eps grid must be strictly increasing", "grid_order",
                              {"eps_grid": list(self.eps_grid)})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "eps": [r.eps for r in self.values],
            "c": [r.c for r in self.values],
            "Q": [r.Q for r in self.values],
            "dQ_dc": [np.nan if r.dQ_dc is None else r.dQ_dc for r in self.values],
            "policy": [self.policy.label] * len(self.values),
        })


@dataclass(frozen=True)
class PeakRow:
    """One row of the peak-value table"""
    eps: float
    n_s: Optional[float]
    n_star: float
    u_star: float
    phi_star: float

    def to_dict(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"eps": self.eps}
        if self.n_s is not None:
            row["n_s"] = self.n_s
        row.update(n_star=self.n_star, u_star=self.u_star, phi_star=self.phi_star)
        return row
