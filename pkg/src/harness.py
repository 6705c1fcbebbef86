"""
evans-ep harness - runs one subcommand and exports its dataset.

Each dataset has one subcommand; every subcommand returns a
RunResult (a plot-ready frame plus a JSON summary) that save_results writes
as CSV with a metadata header line or as a JSON document.
"""
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional

import numpy as np
import pandas as pd
from rich.console import Console

from . import __version__
from .config import config
from .errors import DomainError, EvansEPError
from .evans_engine import (
    convergence_arc, count_zeros, evans, evans_kdv_closed, evans_kdv_ode, kdv_convergence,
)
from .models import Contour, EvansOptions, EvansValue, PlasmaParams, QuadraturePolicy
from .run_config import Command, OutputFormat, PolicyName, RunConfig
from .soliton_profile import critical_amplitude, get_profile, kdv_closeness, profile_c_derivative
from .spectral_core import (
    dispersion, essential_spectrum_curve, largest_split_eps, s1_density_crossover,
    s1_largest_nonnegative_eps, s1_scan, split_counts, weight_exponent,
)
from .stability_criteria import (
    criterion_k0_sweep, criterion_sweep, default_eps_grid, format_peak_value, gradient_threshold,
    peaks_frame, peaks_table, threshold_curve,
)

# Amplitudes used by the KdV convergence check when none are given
CONVERGE_EPS = [0.0125, 0.025, 0.05, 0.1]
S1_EPS = [0.005, 0.01, 0.02, 0.05]
DEFAULT_EPS = [0.05]


@dataclass
class RunResult:
    """Dataset and summary of one run"""
    command: str
    frame: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)


def _evans_point(lam: complex, params: PlasmaParams, opts: EvansOptions) -> EvansValue:
    return evans(lam, params, None, opts)


def _kdv_point(Lambda: complex, V: float, opts: EvansOptions) -> complex:
    return evans_kdv_ode(Lambda, V, opts)


def _split_complex(name: str, values) -> Dict[str, List[float]]:
    z = np.asarray(values, dtype=complex)
    return {f"re_{name}": z.real.tolist(), f"im_{name}": z.imag.tolist()}


def _clean(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class EvansHarness:
    """
    Orchestrates one evans-ep run.

    One method per subcommand; the numerical modules never print, the
    harness reports progress on stderr.
    """

    def __init__(self, run: RunConfig):
        """
        Args:
            run: Validated run configuration
        """
        self.run = run
        self.console = Console(stderr=True, quiet=run.quiet)
        self._apply_tolerances()
        config.validate()
        self.console.print(f"✓ evans-ep {__version__}: {run.command.value}, jobs={run.jobs}")

    def _apply_tolerances(self):
        # Worker processes re-read these from the environment when not forked
        for name, env in (("profile_tol", "EVANS_EP_PROFILE_TOL"), ("tail_tol", "EVANS_EP_TAIL_TOL")):
            value = getattr(self.run, name)
            setattr(config, name, value)
            os.environ[env] = repr(value)

    @property
    def options(self) -> EvansOptions:
        return EvansOptions(X=self.run.X, ode_tol=self.run.ode_tol, meet_at_zero=self.run.meet_at_zero,
                            c0=self.run.c0)

    @contextmanager
    def _mapper(self) -> Iterator[Callable]:
        """Order-stable map over independent grid points"""
        if self.run.jobs <= 1:
            yield map
            return
        with ProcessPoolExecutor(max_workers=self.run.jobs) as pool:
            yield pool.map

    def _K(self, default: float = 1.0) -> float:
        return self.run.K if self.run.K is not None else default

    def _eps(self, default: List[float]) -> List[float]:
        return list(self.run.eps) if self.run.eps is not None else list(default)

    def _lambdas(self, required_for: str) -> List[complex]:
        values = self.run.lambda_values
        if values is None:
            raise DomainError(f"{required_for} needs --lambdas or --re/--im", "missing_lambdas")
        return values

    def _k0_only(self) -> float:
        if self.run.K not in (None, 0.0):
            raise DomainError(f"{self.run.command.value} is defined for K = 0", "requires_K0", {"K": self.run.K})
        return 0.0

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def execute(self) -> RunResult:
        handler = {
            Command.WAVE: self.wave,
            Command.PEAKS: self.peaks,
            Command.EVANS: self.evans,
            Command.EVANS_KDV: self.evans_kdv,
            Command.CONVERGE: self.converge,
            Command.ZEROS: self.zeros,
            Command.CRITERION: self.criterion,
            Command.CRITERION_K0: self.criterion_k0,
            Command.SPECTRUM: self.spectrum,
            Command.THRESHOLD: self.threshold,
            Command.DISPERSION: self.dispersion,
            Command.S1: self.s1,
            Command.SPLITTING: self.splitting,
        }[self.run.command]
        return handler()

    def wave(self) -> RunResult:
        """Wave profiles (long format over eps)"""
        K = self._K()
        frames, summary = [], []
        for eps in self._eps(DEFAULT_EPS):
            params = PlasmaParams(K, eps)
            profile = get_profile(params, tol=self.run.profile_tol)
            frame = profile.to_frame()
            frame.insert(0, "eps", eps)
            if self.run.c_derivative:
                for name, values in profile_c_derivative(params, profile.x).items():
                    frame[name] = values
            frames.append(frame)
            summary.append({"eps": eps, "X": profile.X, "n_star": profile.n_star,
                            "decay_rate": profile.decay_rate, "kdv_closeness": kdv_closeness(profile)})
            self.console.print(f"✓ wave K={K} eps={eps}: n*={profile.n_star:.6f}, X={profile.X:g}")
        return RunResult("wave", pd.concat(frames, ignore_index=True), {"K": K, "waves": summary})

    def peaks(self) -> RunResult:
        """Peak-value table (n_s, n*, u*, phi*)"""
        K = self._K()
        if self.run.eps is None:
            raise DomainError("peaks needs --eps", "missing_eps")
        rows = peaks_table(K, self.run.eps)
        for row in rows:
            cells = [format_peak_value(v) for v in row.to_dict().values()]
            self.console.print("✓ " + "  ".join(cells))
        return RunResult("peaks", peaks_frame(rows), {"K": K, "eps_K": critical_amplitude(K)})

    def evans(self) -> RunResult:
        """Evans function on a lambda grid, for each eps"""
        K = self._K()
        lambdas = self._lambdas("evans")
        opts = self.options
        records = []
        with self._mapper() as mapper:
            for eps in self._eps(DEFAULT_EPS):
                params = PlasmaParams(K, eps)
                values = list(mapper(partial(_evans_point, params=params, opts=opts), lambdas))
                records.extend(values)
                self.console.print(f"✓ evans K={K} eps={eps}: {len(values)} values")
        frame = pd.DataFrame({
            "eps": [v.eps for v in records],
            **_split_complex("lambda", [v.lam for v in records]),
            **_split_complex("D", [v.D for v in records]),
            "abs_D": [abs(v.D) for v in records],
            "method": [v.method.value for v in records],
        })
        return RunResult("evans", frame, {"K": K, "values": [v.to_dict() for v in records]})

    def evans_kdv(self) -> RunResult:
        """KdV Evans function, closed form against the shooting oracle"""
        K = self._K()
        V = math.sqrt(1.0 + K)
        lambdas = self.run.lambda_values or list(convergence_arc(K, c0=self.run.c0))
        closed = [evans_kdv_closed(L, V) for L in lambdas]
        with self._mapper() as mapper:
            shot = list(mapper(partial(_kdv_point, V=V, opts=self.options), lambdas))
        diff = [abs(a - b) for a, b in zip(closed, shot)]
        self.console.print(f"✓ evans-kdv V={V:.6f}: max |closed - ode| = {max(diff):.3e}")
        frame = pd.DataFrame({
            **_split_complex("Lambda", lambdas),
            **_split_complex("closed", closed),
            **_split_complex("ode", shot),
            "abs_diff": diff,
        })
        return RunResult("evans-kdv", frame, {"V": V, "max_abs_diff": max(diff)})

    def converge(self) -> RunResult:
        """sup |D*(Lambda, eps) - D_KdV(Lambda)| for decreasing eps"""
        K = self._K()
        eps_list = self._eps(CONVERGE_EPS)
        lambdas = self.run.lambda_values or list(convergence_arc(K, c0=self.run.c0))
        with self._mapper() as mapper:
            rows = kdv_convergence(K, eps_list, lambdas, self.options, mapper)
        for row in rows:
            self.console.print(f"✓ eps={row['eps']}: sup diff {row['sup_diff']:.3e}")
        return RunResult("converge", pd.DataFrame(rows), {"K": K, "rows": rows})

    def zeros(self) -> RunResult:
        """Argument-principle zero counts on a circle or right half annulus"""
        K = self._K()
        rows = []
        with self._mapper() as mapper:
            for eps in self._eps(DEFAULT_EPS):
                contour = self._contour(eps)
                result = count_zeros(contour, PlasmaParams(K, eps), self.options, mapper)
                rows.append({"eps": eps, "contour": contour.kind, "count": result.count,
                             "winding": result.winding, "nodes": result.nodes, "min_abs_D": result.min_abs_D})
                self.console.print(f"✓ zeros K={K} eps={eps} ({contour.kind}): count={result.count}")
        summary: Dict[str, Any] = {"K": K, "results": rows}
        if len(rows) == 1:
            summary["count"] = rows[0]["count"]
        return RunResult("zeros", pd.DataFrame(rows), summary)

    def _contour(self, eps: float) -> Contour:
        if self.run.annulus is not None:
            inner, outer = self.run.annulus
            return Contour.half_annulus(inner, outer, n_nodes=max(self.run.nodes, 128))
        if self.run.circle is not None:
            cx, cy = self.run.circle.center
            return Contour.circle(complex(cx, cy), self.run.circle.resolve_radius(eps), self.run.nodes)
        return Contour.circle(0j, 0.5 * eps ** 1.5, self.run.nodes)

    def _policy(self) -> QuadraturePolicy:
        return {
            PolicyName.REGULARIZED: QuadraturePolicy.regularized,
            PolicyName.INTERVAL_A: QuadraturePolicy.interval_a,
            PolicyName.INTERVAL_B: QuadraturePolicy.interval_b,
        }[self.run.policy]()

    def criterion(self) -> RunResult:
        """Q(c) and dQ/dc"""
        K = self._K()
        with self._mapper() as mapper:
            sweep = criterion_sweep(K, self.run.eps, self._policy(), self.run.derivative, mapper)
        return self._criterion_result("criterion", sweep)

    def criterion_k0(self) -> RunResult:
        """Q0(c) and dQ0/dc (K = 0)"""
        self._k0_only()
        with self._mapper() as mapper:
            sweep = criterion_k0_sweep(self.run.eps, self._policy(), self.run.derivative, mapper)
        return self._criterion_result("criterion-k0", sweep)

    def _criterion_result(self, command: str, sweep) -> RunResult:
        frame = sweep.to_frame()
        negative = [r.eps for r in sweep.values if r.dQ_dc is not None and r.dQ_dc < 0]
        if negative:
            self.console.print(f"⚠ dQ/dc < 0 at eps = {negative}")
        self.console.print(f"✓ {command}: {len(frame)} amplitudes, policy {sweep.policy.label}")
        return RunResult(command, frame, {"K": sweep.K, "policy": sweep.policy.label, "negative_slope_eps": negative})

    def spectrum(self) -> RunResult:
        """Essential-spectrum curves, unweighted and weighted"""
        K = self._K()
        eps = self._eps(DEFAULT_EPS)[0]
        params = PlasmaParams(K, eps)
        beta = self.run.beta if self.run.beta is not None else weight_exponent(params, self.run.c0)
        k = self.run.k or [float(v) for v in np.linspace(-10.0, 10.0, 401)]
        frames, summary = [], []
        for b in (0.0, beta):
            curve = essential_spectrum_curve(b, k, params)
            frame = curve.to_frame()
            frame.insert(0, "beta", b)
            frames.append(frame)
            summary.append({"beta": b, "sup_re_dplus": curve.sup_re_plus, "sup_re_dminus": curve.sup_re_minus})
        self.console.print(f"✓ spectrum K={K} eps={eps}: beta={beta:.6f}")
        return RunResult("spectrum", pd.concat(frames, ignore_index=True), {"K": K, "eps": eps, "curves": summary})

    def threshold(self) -> RunResult:
        """du/dx / sqrt(1 + n) along the wave and its minimum (K = 0)"""
        K = self._k0_only()
        frames, minima = [], []
        for eps in self._eps([0.1, 0.3, 0.5]):
            profile = get_profile(PlasmaParams(K, eps), tol=self.run.profile_tol)
            frame = threshold_curve(profile)
            frame.insert(0, "eps", eps)
            frames.append(frame)
            minima.append({"eps": eps, "threshold": gradient_threshold(profile)})
            self.console.print(f"✓ threshold eps={eps}: min {minima[-1]['threshold']:.6f}")
        return RunResult("threshold", pd.concat(frames, ignore_index=True), {"K": K, "minima": minima})

    def dispersion(self) -> RunResult:
        """Dispersion curves omega±(k) with their group velocities"""
        K = self._K()
        eps = self._eps(DEFAULT_EPS)[0]
        params = PlasmaParams(K, eps)
        k = np.asarray(self.run.k or np.linspace(-10.0, 10.0, 401), dtype=float)
        w_plus, w_minus, g_plus, g_minus = dispersion(k, params)
        frame = pd.DataFrame({"k": k, "omega_plus": w_plus, "omega_minus": w_minus,
                              "group_plus": g_plus, "group_minus": g_minus})
        summary = {
            "K": K, "eps": eps, "c": params.c,
            "group_minus_at_0": dispersion(0.0, params)[3],
            "max_group_minus": float(np.max(g_minus)),
            "max_group_plus": float(np.max(g_plus)),
        }
        self.console.print(f"✓ dispersion K={K} eps={eps}: d omega_-/dk(0) = {summary['group_minus_at_0']:.6g}")
        return RunResult("dispersion", frame, summary)

    def s1(self) -> RunResult:
        """S1 minimum eigenvalue along each wave and the density where it changes sign"""
        K = self._K()
        eps_list = self._eps([e for e in S1_EPS if e < critical_amplitude(K)])
        frames, waves = [], []
        for eps in eps_list:
            params = PlasmaParams(K, eps)
            profile = get_profile(params, tol=self.run.profile_tol)
            frame = s1_scan(profile)
            frame.insert(0, "eps", eps)
            frames.append(frame)
            crossover = s1_density_crossover(params)
            waves.append({"eps": eps, "n_star": profile.n_star, "crossover": crossover,
                          "min_s1": float(frame["s1_min"].min()), "nonnegative": crossover is None})
            self.console.print(f"✓ s1 K={K} eps={eps}: min {waves[-1]['min_s1']:.3e}, crossover {crossover}")
        summary = {"K": K, "waves": waves, "largest_nonnegative_eps": s1_largest_nonnegative_eps(K, eps_list)}
        return RunResult("s1", pd.concat(frames, ignore_index=True), summary)

    def splitting(self) -> RunResult:
        """Weighted splitting at eps^{3/2} Lambda over scaled Lambdas, per amplitude"""
        K = self._K()
        eps_list = self._eps(default_eps_grid(K, 8))
        Lambdas = self.run.lambda_values or list(convergence_arc(K, c0=self.run.c0))
        fraction = None if self.run.c0 is None else self.run.c0 / math.sqrt(2.0 * math.sqrt(1.0 + K))
        rows = []
        for eps in eps_list:
            params = PlasmaParams(K, eps)
            beta = weight_exponent(params, self.run.c0)
            counts = split_counts([eps ** 1.5 * L for L in Lambdas], params, beta)
            rows.append({"eps": eps, "beta": beta, "min_left": min(counts), "max_left": max(counts),
                         "split_ok": all(n == 1 for n in counts)})
        largest = largest_split_eps(K, eps_list, Lambdas, fraction)
        self.console.print(f"✓ splitting K={K}: holds up to eps={largest}")
        return RunResult("splitting", pd.DataFrame(rows),
                         {"K": K, "n_lambdas": len(Lambdas), "largest_split_eps": largest})

    # ------------------------------------------------------------------
    # Output
    # ------------------------------------------------------------------

    def header_line(self) -> str:
        params = " ".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in sorted(self.run.metadata().items()))
        return f"# evans-ep {__version__} | {params}"

    def payload(self, result: Optional[RunResult], diagnostics: List[Dict[str, Any]]) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "tool": "evans-ep",
            "version": __version__,
            "command": self.run.command.value,
            "parameters": self.run.metadata(),
            "diagnostics": diagnostics,
        }
        if result is not None:
            data["summary"] = result.summary
            data["rows"] = [{k: _clean(v) for k, v in row.items()} for row in result.frame.to_dict("records")]
        return data

    def render(self, result: RunResult) -> str:
        if self.run.format is OutputFormat.JSON:
            return json.dumps(self.payload(result, result.diagnostics), indent=2, sort_keys=True,
                              default=_clean) + "\n"
        body = result.frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        return self.header_line() + "\n" + body

    def save_results(self, result: RunResult, output_path: Optional[str] = None):
        """Write the dataset to output_path, or stdout when no path is given"""
        text = self.render(result)
        output_path = output_path or self.run.output
        if output_path is None:
            sys.stdout.write(text)
            return
        path = Path(output_path)
        if not path.is_absolute():
            path = Path(config.output_dir) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.console.print(f"📁 Results saved to {path}")

    def save_diagnostics(self, error: EvansEPError):
        """JSON summary of a numerical failure, next to the requested output"""
        text = json.dumps(self.payload(None, [error.to_dict()]), indent=2, sort_keys=True, default=_clean) + "\n"
        if self.run.output is None:
            sys.stdout.write(text)
            return
        path = Path(self.run.output)
        if not path.is_absolute():
            path = Path(config.output_dir) / path
        if self.run.format is not OutputFormat.JSON:
            path = path.with_suffix(".diagnostics.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def run(run_config: RunConfig) -> int:
    """
    Execute a run and write its artifacts.

    Returns:
        0 on success, 2 on a numerical diagnostic, 1 on a usage or domain error
    """
    harness = EvansHarness(run_config)
    try:
        result = harness.execute()
    except EvansEPError as err:
        if not err.is_diagnostic:
            harness.console.print(f"❌ Error: {err.message}")
            return 1
        harness.console.print(f"⚠ Numerical diagnostic [{err.tag}]: {err.message}")
        harness.save_diagnostics(err)
        return 2
    harness.save_results(result)
    return 0
