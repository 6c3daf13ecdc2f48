"""Bit-exact file formats: trace CSV, run configuration, result reports.

All writers are deterministic functions of their inputs: no timestamps, no
locale-dependent formatting, `.` as the decimal separator, LF endings.
Data files use the shortest round-trip float representation (Python repr);
human-facing reports use %.4e.  SI-to-reduced conversion happens here and
nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ncring.constants import CODATA2018, PhysConstants
from ncring.errors import NonMonotonicFlux, ParseError, UnitMismatch
from ncring.model import RingSystem, SwParams
from ncring.pipeline import (
    MIN_TRACE_POINTS,
    AnalysisOptions,
    CurrentTrace,
    TraceMeta,
    Verdict,
)

__all__ = [
    "RunConfig",
    "parse_config",
    "serialize_config",
    "read_config",
    "write_config",
    "read_trace_csv",
    "write_trace_csv",
    "write_results_report",
]

_HEADER_REDUCED = "f,J"
_HEADER_SI = "phi_wb,J_A"

_RING_HINT_KEYS = ("n_electrons", "radius_m", "alpha", "theta_tilde")


@dataclass(frozen=True)
class RunConfig:
    """One run's worth of parameters, round-trippable through a config file."""

    radius_m: float = 1e-6
    n_electrons: int = 10000
    alpha: float = 1.0
    theta_tilde: float = 1.76e-61
    mass_kg: float = CODATA2018.m_electron
    f_min: float = 1e-3
    f_max: float = 0.4
    n_points: int = 256
    grid: str = "log"
    noise_sigma: float = 0.0
    seed: int = 42
    smoothing_window: int = 1
    fit_f_lo: float = 1e-3
    fit_f_hi: float = 1e-1
    exponent_tol: float = 0.3
    amplitude_floor_mult: float = 3.0
    units: str = "reduced"

    def __post_init__(self):
        for name in ("radius_m", "alpha", "mass_kg", "f_min", "f_max",
                     "fit_f_lo", "fit_f_hi", "exponent_tol", "amplitude_floor_mult"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.theta_tilde < 0.0:
            raise ValueError("theta_tilde must be non-negative")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be non-negative")
        if self.n_electrons < 1:
            raise ValueError("n_electrons must be a positive integer")
        if self.n_points < MIN_TRACE_POINTS:
            raise ValueError(f"n_points must be at least {MIN_TRACE_POINTS}")
        if not self.f_min < self.f_max:
            raise ValueError("f_min must be smaller than f_max")
        if not self.fit_f_lo < self.fit_f_hi:
            raise ValueError("fit_f_lo must be smaller than fit_f_hi")
        if self.grid not in ("log", "uniform"):
            raise ValueError(f"grid must be 'log' or 'uniform', got {self.grid!r}")
        if self.units not in ("reduced", "si"):
            raise ValueError(f"units must be 'reduced' or 'si', got {self.units!r}")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValueError("smoothing_window must be an odd integer >= 1")

    @property
    def fit_window(self) -> tuple[float, float]:
        return (self.fit_f_lo, self.fit_f_hi)

    def ring(self, constants: PhysConstants = CODATA2018) -> RingSystem:
        return RingSystem(
            radius=self.radius_m,
            n_electrons=self.n_electrons,
            sw=SwParams(alpha=self.alpha, theta_tilde=self.theta_tilde),
            mass=self.mass_kg,
            constants=constants,
        )

    def analysis_options(self, blind: bool = True) -> AnalysisOptions:
        return AnalysisOptions(
            fit_window=self.fit_window,
            smoothing_window=self.smoothing_window,
            exponent_tol=self.exponent_tol,
            amplitude_floor_mult=self.amplitude_floor_mult,
            radius=self.radius_m,
            alpha=self.alpha,
            blind=blind,
        )


_CONFIG_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_INT_FIELDS = {"n_electrons", "n_points", "seed", "smoothing_window"}
_STR_FIELDS = {"grid", "units"}


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; `#` starts a comment, blank lines ignored."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno)
        key, _, token = (part.strip() for part in line.partition("="))
        if key not in _CONFIG_FIELDS:
            raise ParseError(f"unknown configuration key {key!r}", line=lineno)
        if key in values:
            raise ParseError(f"duplicate configuration key {key!r}", line=lineno)
        try:
            if key in _INT_FIELDS:
                values[key] = int(token)
            elif key in _STR_FIELDS:
                values[key] = token
            else:
                values[key] = float(token)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", line=lineno) from None
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_config(config: RunConfig) -> str:
    """Canonical text form: declaration order, repr floats, LF endings."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        token = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {token}")
    return "\n".join(lines) + "\n"


def read_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def write_config(config: RunConfig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(serialize_config(config))


def _meta_lines(meta: TraceMeta) -> list[str]:
    lines = [f"# source: {meta.source}"]
    if meta.seed is not None:
        lines.append(f"# seed: {meta.seed}")
    lines.append(f"# noise_sigma: {meta.noise_sigma!r}")
    ring = meta.ring_hint
    if ring is not None:
        lines.append(f"# n_electrons: {ring.n_electrons}")
        lines.append(f"# radius_m: {ring.radius!r}")
        lines.append(f"# alpha: {ring.sw.alpha!r}")
        lines.append(f"# theta_tilde: {ring.sw.theta_tilde!r}")
        lines.append(f"# mass_kg: {ring.mass!r}")
    return lines


def write_trace_csv(
    trace: CurrentTrace,
    path: str | Path,
    units: str = "reduced",
    ring: RingSystem | None = None,
    constants: PhysConstants = CODATA2018,
) -> None:
    """Write a trace as CSV with `# key: value` metadata comments.

    Reduced units use the `f,J` header; SI output (`phi_wb,J_A`) needs a
    ring to supply the current scale.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _meta_lines(trace.meta)
    if units == "reduced":
        lines.append(_HEADER_REDUCED)
        for f, j in zip(trace.f, trace.j):
            lines.append(f"{float(f)!r},{float(j)!r}")
    elif units == "si":
        if ring is None:
            raise UnitMismatch("SI output needs a ring to fix the current scale")
        phi0 = constants.flux_quantum
        lines.append(_HEADER_SI)
        for f, j in zip(trace.f, trace.j):
            lines.append(f"{float(f) * phi0!r},{float(j) * ring.j0!r}")
    else:
        raise ValueError(f"units must be 'reduced' or 'si', got {units!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _ring_hint_from_meta(meta: dict[str, str]) -> RingSystem | None:
    if not all(key in meta for key in _RING_HINT_KEYS):
        return None
    try:
        return RingSystem(
            radius=float(meta["radius_m"]),
            n_electrons=int(meta["n_electrons"]),
            sw=SwParams(
                alpha=float(meta["alpha"]),
                theta_tilde=float(meta["theta_tilde"]),
            ),
            mass=float(meta.get("mass_kg", CODATA2018.m_electron)),
        )
    except ValueError:
        return None


def read_trace_csv(
    path: str | Path,
    ring: RingSystem | None = None,
    constants: PhysConstants = CODATA2018,
) -> CurrentTrace:
    """Parse a trace CSV written by :func:`write_trace_csv` (or compatible).

    Accepts the reduced header `f,J` or the SI header `phi_wb,J_A`; SI data
    is converted on load, which requires a ring (passed in, or reconstructed
    from the file's own metadata comments).  Raises ParseError with a line
    number for malformed content, NonMonotonicFlux for unsorted flux, and
    UnitMismatch when SI data has no usable scales.
    """
    path = Path(path)
    meta: dict[str, str] = {}
    header: str | None = None
    rows: list[tuple[float, float]] = []
    with open(path, "r", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, value = body.partition(":")
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = line
                if header not in (_HEADER_REDUCED, _HEADER_SI):
                    raise ParseError(
                        f"unrecognized header {line!r}; expected "
                        f"{_HEADER_REDUCED!r} or {_HEADER_SI!r}",
                        line=lineno,
                    )
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected two comma-separated fields, got {line!r}", line=lineno)
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ParseError(f"bad float in {line!r}", line=lineno) from None
    if header is None:
        raise ParseError("no header line found (empty file?)")
    if len(rows) < MIN_TRACE_POINTS:
        raise ParseError(f"trace needs at least {MIN_TRACE_POINTS} data rows, found {len(rows)}")

    f = np.array([r[0] for r in rows])
    j = np.array([r[1] for r in rows])
    ring_hint = _ring_hint_from_meta(meta)
    if header == _HEADER_SI:
        scale_ring = ring if ring is not None else ring_hint
        if scale_ring is None:
            raise UnitMismatch(
                "SI trace has no current scale: pass a ring or include ring metadata"
            )
        f = f / constants.flux_quantum
        j = j / scale_ring.j0
    if not np.all(np.diff(f) > 0.0):
        raise NonMonotonicFlux("flux values must be strictly increasing")
    if not np.all(f > 0.0):
        raise ParseError("all flux values must be positive")

    seed = None
    if "seed" in meta:
        try:
            seed = int(meta["seed"])
        except ValueError:
            seed = None
    try:
        noise_sigma = float(meta.get("noise_sigma", "0"))
    except ValueError:
        noise_sigma = 0.0
    trace_meta = TraceMeta(
        source=meta.get("source", "ingested"),
        seed=seed,
        noise_sigma=noise_sigma,
        ring_hint=ring_hint,
    )
    return CurrentTrace(f=f, j=j, meta=trace_meta)


def _fmt_report_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.4e}"
    return str(value)


def write_results_report(
    verdict: Verdict,
    config: RunConfig,
    path: str | Path,
    trace_noise_rms: float | None = None,
    residual_floor: float | None = None,
) -> None:
    """Write the analysis outcome as deterministic key-sorted `key: value` text."""
    entries: dict[str, object] = {
        "verdict": verdict.kind.value,
        "estimated_n": verdict.estimated_n,
        "estimated_parity": verdict.estimated_parity,
        "f_nc_hat": verdict.estimated_f_nc,
        "theta_tilde_hat": verdict.estimated_theta_tilde,
        "thresholds_exponent_tol": config.exponent_tol,
        "thresholds_amplitude_floor_mult": config.amplitude_floor_mult,
        "fit_window_lo": config.fit_f_lo,
        "fit_window_hi": config.fit_f_hi,
        "trace_noise_rms": trace_noise_rms,
        "residual_floor": residual_floor,
    }
    for name, fit in (("lambda", verdict.lambda_fit), ("sigma", verdict.sigma_fit)):
        if fit is None:
            entries[f"{name}_amplitude"] = None
            entries[f"{name}_exponent"] = None
            entries[f"{name}_r_squared"] = None
            entries[f"{name}_points_used"] = 0
        else:
            entries[f"{name}_amplitude"] = fit.amplitude
            entries[f"{name}_exponent"] = fit.exponent
            entries[f"{name}_r_squared"] = fit.r_squared
            entries[f"{name}_points_used"] = fit.n_points_used
    for i, note in enumerate(verdict.diagnostics, start=1):
        entries[f"diagnostic_{i:02d}"] = note

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for key in sorted(entries):
            fh.write(f"{key}: {_fmt_report_value(entries[key])}\n")
