"""
Run configuration for the evans-ep command line.

A run is described by a RunConfig merged from an optional key=value file and
the command-line flags; flags win. Grid strings are parsed here:

    0.002,0.070,0.1550          explicit list
    lin:0.01:0.1:10             10 linearly spaced values
    log:1e-3:1e-1:5             5 log-spaced values
    auto                        the command's default grid
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import config


class Command(str, Enum):
    WAVE = "wave"
    PEAKS = "peaks"
    EVANS = "evans"
    EVANS_KDV = "evans-kdv"
    CONVERGE = "converge"
    ZEROS = "zeros"
    CRITERION = "criterion"
    CRITERION_K0 = "criterion-k0"
    SPECTRUM = "spectrum"
    THRESHOLD = "threshold"
    DISPERSION = "dispersion"
    S1 = "s1"
    SPLITTING = "splitting"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class PolicyName(str, Enum):
    REGULARIZED = "regularized"
    INTERVAL_A = "interval_a"
    INTERVAL_B = "interval_b"


def parse_grid(value: Any) -> Optional[List[float]]:
    """Parse a grid string (or pass a list through); 'auto' gives None"""
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value).strip()
    if text in ("", "auto"):
        return None
    if text.startswith(("lin:", "log:")):
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"grid {text!r} must look like lin:start:stop:count")
        kind, start, stop, count = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
        if count < 1:
            raise ValueError(f"grid {text!r} needs a positive count")
        if kind == "log":
            if start <= 0 or stop <= 0:
                raise ValueError(f"log grid {text!r} needs positive end points")
            return [float(v) for v in np.geomspace(start, stop, count)]
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(p) for p in text.split(",") if p.strip()]


def parse_complex_list(value: Any) -> Optional[List[Tuple[float, float]]]:
    """'0.1+0.2j,1,-0.5j' -> [(0.1, 0.2), (1, 0), (0, -0.5)]"""
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = [complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in value]
    else:
        text = str(value).strip()
        if text in ("", "auto"):
            return None
        items = [complex(p.strip().replace(" ", "")) for p in text.split(",") if p.strip()]
    return [(z.real, z.imag) for z in items]


class CircleSpec(BaseModel):
    """Circle contour 'cx,cy:r=auto' or 'cx,cy:r=0.01'; auto means 0.5 eps^{3/2}"""
    model_config = ConfigDict(extra="forbid")

    center: Tuple[float, float] = (0.0, 0.0)
    radius: Optional[float] = Field(default=None, gt=0)

    @classmethod
    def parse(cls, text: str) -> "CircleSpec":
        head, _, tail = text.partition(":")
        cx, cy = (float(p) for p in head.split(","))
        radius = None
        if tail:
            key, _, raw = tail.partition("=")
            if key.strip() != "r":
                raise ValueError(f"circle {text!r} must look like cx,cy:r=value")
            radius = None if raw.strip() == "auto" else float(raw)
        return cls(center=(cx, cy), radius=radius)

    def resolve_radius(self, eps: float) -> float:
        return self.radius if self.radius is not None else 0.5 * eps ** 1.5


class RunConfig(BaseModel):
    """One evans-ep run; unknown keys are rejected"""
    model_config = ConfigDict(extra="forbid")

    command: Command
    K: Optional[float] = Field(default=None, ge=0)
    eps: Optional[List[float]] = None
    lambdas: Optional[List[Tuple[float, float]]] = None
    re: Optional[List[float]] = None
    im: Optional[List[float]] = None
    k: Optional[List[float]] = None
    beta: Optional[float] = Field(default=None, ge=0)
    circle: Optional[CircleSpec] = None
    annulus: Optional[Tuple[float, float]] = None
    nodes: int = Field(default=64, ge=8)
    X: Optional[float] = Field(default=None, gt=0)
    c0: Optional[float] = Field(default=None, gt=0)
    meet_at_zero: bool = False
    derivative: bool = True
    c_derivative: bool = False
    policy: PolicyName = PolicyName.REGULARIZED
    ode_tol: float = Field(default_factory=lambda: config.ode_tol)
    profile_tol: float = Field(default_factory=lambda: config.profile_tol)
    tail_tol: float = Field(default_factory=lambda: config.tail_tol)
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    jobs: int = Field(default_factory=lambda: config.jobs, ge=1)
    quiet: bool = False

    @field_validator("eps", "re", "im", "k", mode="before")
    @classmethod
    def _grid(cls, value):
        return parse_grid(value)

    @field_validator("lambdas", mode="before")
    @classmethod
    def _complex_list(cls, value):
        return parse_complex_list(value)

    @field_validator("circle", mode="before")
    @classmethod
    def _circle(cls, value):
        if isinstance(value, str):
            return None if value.strip() in ("", "none") else CircleSpec.parse(value)
        return value

    @field_validator("annulus", mode="before")
    @classmethod
    def _annulus(cls, value):
        if isinstance(value, str):
            parts = [float(p) for p in value.split(",")]
            if len(parts) != 2:
                raise ValueError("annulus must look like inner,outer")
            return tuple(parts)
        return value

    @field_validator("ode_tol", "profile_tol")
    @classmethod
    def _tolerance(cls, value: float) -> float:
        if not 1e-14 < value < 1e-6:
            raise ValueError(f"tolerance {value} must lie in (1e-14, 1e-6)")
        return value

    @field_validator("tail_tol")
    @classmethod
    def _tail_tolerance(cls, value: float) -> float:
        if not 0.0 < value < 1e-3:
            raise ValueError(f"tail_tol {value} must lie in (0, 1e-3)")
        return value

    @model_validator(mode="after")
    def _check_grids(self) -> "RunConfig":
        for name in ("eps", "lambdas", "re", "im", "k"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ValueError(f"{name} grid is empty")
        if self.eps is not None and any(e < 0 for e in self.eps):
            raise ValueError("eps values must be non-negative")
        if (self.re is None) != (self.im is None):
            raise ValueError("--re and --im must be given together")
        if self.annulus is not None and not 0 < self.annulus[0] < self.annulus[1]:
            raise ValueError("annulus needs 0 < inner < outer")
        return self

    @property
    def lambda_values(self) -> Optional[List[complex]]:
        """Explicit lambdas, else the Cartesian re x im grid, else None"""
        if self.lambdas is not None:
            return [complex(a, b) for a, b in self.lambdas]
        if self.re is not None:
            return [complex(a, b) for b in self.im for a in self.re]
        return None

    def metadata(self) -> Dict[str, Any]:
        """Parameters and tolerances for the output header"""
        return self.model_dump(mode="json", exclude={"output", "format", "jobs", "quiet"}, exclude_none=True)


def read_config_file(path: str) -> Dict[str, str]:
    """
    Read `key = value` lines; `#` starts a comment. Hyphens in keys map to
    underscores so file keys match the flag names.

    Raises:
        ValueError: a non-empty line without '='
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{number}: expected 'key = value', got {raw.strip()!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def build_run_config(command: str, flags: Dict[str, Any], config_file: Optional[str] = None) -> RunConfig:
    """Merge file values with flags (flags win, None means not given)"""
    merged: Dict[str, Any] = read_config_file(config_file) if config_file else {}
    merged.update({k: v for k, v in flags.items() if v is not None})
    merged["command"] = command
    return RunConfig(**merged)
