"""
Configuration management for evans-ep
"""
import os
from dataclasses import dataclass, field
from dotenv import load_dotenv

load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


@dataclass
class Config:
    """Numerical defaults loaded from environment variables"""

    # Parallel workers for grid sweeps (mirrors --jobs)
    jobs: int = field(default_factory=lambda: _env_int("EVANS_EP_JOBS", os.cpu_count() or 1))

    # Tolerances
    ode_tol: float = field(default_factory=lambda: _env_float("EVANS_EP_ODE_TOL", 1e-10))
    profile_tol: float = field(default_factory=lambda: _env_float("EVANS_EP_PROFILE_TOL", 1e-11))
    tail_tol: float = field(default_factory=lambda: _env_float("EVANS_EP_TAIL_TOL", 1e-12))

    # Weight exponent beta = c0*sqrt(eps), c0 = fraction * sqrt(2V)
    c0_fraction: float = field(default_factory=lambda: _env_float("EVANS_EP_C0_FRACTION", 0.5))

    # Samples per wave profile over [-X, X] (odd, for Simpson)
    profile_points: int = field(default_factory=lambda: _env_int("EVANS_EP_PROFILE_POINTS", 4001))

    output_dir: str = field(default_factory=lambda: os.getenv("EVANS_EP_OUTPUT_DIR", "."))

    def validate(self) -> bool:
        """Validate tolerance ranges"""
        for name in ("ode_tol", "profile_tol"):
            value = getattr(self, name)
            if not 1e-14 < value < 1e-6:
                raise ValueError(f"{name}={value} must lie in (1e-14, 1e-6)")
        if not 0.0 < self.tail_tol < 1e-3:
            raise ValueError(f"tail_tol={self.tail_tol} must lie in (0, 1e-3)")
        if not 0.0 < self.c0_fraction < 1.0:
            raise ValueError(f"c0_fraction={self.c0_fraction} must lie in (0, 1)")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.profile_points < 101 or self.profile_points % 2 == 0:
            raise ValueError("profile_points must be odd and at least 101")
        return True


# Global config instance
config = Config()
