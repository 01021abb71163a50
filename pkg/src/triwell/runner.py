"""Run configuration, presets, result files and the comparison harness.

A run is described by a flat key-value config (exact keys below, unknown
keys rejected).  Results go to a CSV with a fixed column order plus a JSON
sidecar carrying the full config echo, a build id and divergence counts.
For a fixed (seed, config) the CSV bytes are identical for any worker
count.

Presets reproduce the published parameter sets: J=1, 200 atoms starting in
the middle well, chi in {1e-3, 1e-4, 1e-5}, trajectory counts as used for
the four figures, and pulsed variants where the couplings are cut at the
first population-transfer maximum.
"""

from __future__ import annotations

import io
import json
import math
import subprocess
import time
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .engine import IntegratorConfig, simulate_ensemble
from .estimator import STAT_NAMES, TimeSeriesResult, finalize, stats_from_moments
from .model import FIRST_TRANSFER_TIME, ModelParams, Schedule
from .oracle import oracle_moments_at_times

MAX_DIVERGENT_FRACTION = 1e-4

CSV_COLUMNS = (
    "t",
    "n1", "n1_se", "n2", "n2_se", "n3", "n3_se",
    "vn1", "vn2", "vn3",
    "vn13", "vn13_se",
    "xi13", "xi13_se",
    "xis1", "xis1_se",
    "xis3", "xis3_se",
    "imag_residual",
    "source",
)

# (value column, se column) pairs a CSV-level comparison can z-test
CSV_SE_PAIRS = (
    ("n1", "n1_se"), ("n2", "n2_se"), ("n3", "n3_se"),
    ("vn13", "vn13_se"), ("xi13", "xi13_se"),
    ("xis1", "xis1_se"), ("xis3", "xis3_se"),
)


class ValidationError(ValueError):
    """Bad configuration or malformed inputs (CLI exit code 2)."""


class DivergenceBreachError(RuntimeError):
    """Too many divergent trajectories for trustworthy averages (exit code 3)."""


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run."""

    mode: str = "positive_p"  # positive_p | oracle | compare
    n_atoms: int = 200
    initial_state: str = "fock"
    initial_well: int = 2
    j: float = 1.0
    j_cutoff: float | None = None
    chi: float = 1e-3
    chi_cutoff: float | None = None
    dt: float = 1e-3
    scheme: str = "semi_implicit_midpoint"
    sample_interval: float = 1e-2
    t_final: float = 10.0
    divergence_cap: float = 1e6
    trajectories: int = 100_000
    seed: int = 1
    batches: int = 64
    output_path: str | None = None

    def model_params(self) -> ModelParams:
        return ModelParams(
            j_schedule=Schedule(self.j, self.j_cutoff),
            chi_schedule=Schedule(self.chi, self.chi_cutoff),
            n_atoms=self.n_atoms,
            initial_state_kind=self.initial_state,
            initial_well=self.initial_well,
        )

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.dt,
            scheme=self.scheme,
            sample_interval=self.sample_interval,
            t_final=self.t_final,
            divergence_cap=self.divergence_cap,
        )

    def validate(self) -> None:
        if self.mode not in ("positive_p", "oracle", "compare"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        try:
            self.model_params()
            self.integrator_config()
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        if self.mode == "positive_p":
            if self.batches < 8:
                raise ValidationError("batches must be at least 8")
            if self.trajectories < self.batches:
                raise ValidationError("trajectories must be at least the batch count")
        if not (0 <= self.seed < 2 ** 64):
            raise ValidationError("seed must fit in 64 bits")


_INT_KEYS = {"n_atoms", "initial_well", "trajectories", "seed", "batches"}
_FLOAT_KEYS = {"j", "chi", "dt", "sample_interval", "t_final", "divergence_cap"}
_OPT_FLOAT_KEYS = {"j_cutoff", "chi_cutoff"}
_STR_KEYS = {"mode", "initial_state", "scheme"}
_OPT_STR_KEYS = {"output_path"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _OPT_FLOAT_KEYS | _STR_KEYS | _OPT_STR_KEYS


def config_to_text(cfg: RunConfig) -> str:
    """Canonical flat key-value form (round-trips through parse_config)."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            v = "none"
        elif isinstance(v, float):
            v = f"{v:.17g}"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse the flat key-value document; unknown keys are errors."""
    values: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _ALL_KEYS:
            raise ValidationError(f"line {ln}: unknown key {key!r}")
        if key in values:
            raise ValidationError(f"line {ln}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _OPT_FLOAT_KEYS:
                values[key] = None if val.lower() == "none" else float(val)
            elif key in _OPT_STR_KEYS:
                values[key] = None if val.lower() == "none" else val
            else:
                values[key] = val
        except ValueError as exc:
            raise ValidationError(f"line {ln}: bad value for {key!r}: {val!r}") from exc
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# figure presets: captions pin chi, the pulse times, and the trajectory counts
PRESET_TABLE = {
    "fig1": dict(chi=1e-3, trajectories=1_080_000, seed=101),
    "fig2": dict(chi=1e-3, trajectories=397_000, seed=102),
    "fig3a": dict(chi=1e-3, trajectories=1_080_000, seed=103),
    "fig3b": dict(chi=1e-4, trajectories=364_000, seed=104),
    "fig3c": dict(chi=1e-5, trajectories=1_360_000, seed=105),
    "fig4a": dict(chi=1e-3, j_cutoff=FIRST_TRANSFER_TIME,
                  chi_cutoff=FIRST_TRANSFER_TIME, trajectories=735_000, seed=106),
    "fig4b": dict(chi=1e-3, j_cutoff=FIRST_TRANSFER_TIME,
                  trajectories=910_000, seed=107),
}


def preset(name: str, scale: int = 1) -> RunConfig:
    """Published parameter sets; --scale divides the trajectory count."""
    if name not in PRESET_TABLE:
        raise ValidationError(f"unknown preset {name!r} (have {', '.join(sorted(PRESET_TABLE))})")
    if scale < 1:
        raise ValidationError("scale must be a positive integer")
    spec = dict(PRESET_TABLE[name])
    spec["trajectories"] = max(64, round(spec["trajectories"] / scale))
    cfg = RunConfig(output_path=f"{name}.csv", **spec)
    cfg.validate()
    return cfg


def _format_row(values) -> str:
    out = []
    for v in values:
        out.append(v if isinstance(v, str) else f"{v:.17g}")
    return ",".join(out)


def result_rows(result: TimeSeriesResult, source: str) -> list[list]:
    idx = {name: i for i, name in enumerate(STAT_NAMES)}
    rows = []
    for s, t in enumerate(result.times):
        row = [float(t)]
        for name in ("n1", "n2", "n3"):
            row += [result.values[s, idx[name]], result.ses[s, idx[name]]]
        for name in ("vn1", "vn2", "vn3"):
            row.append(result.values[s, idx[name]])
        for name in ("vn13", "xi13", "xis1", "xis3"):
            row += [result.values[s, idx[name]], result.ses[s, idx[name]]]
        row.append(result.imag_residual[s])
        row.append(source)
        rows.append(row)
    return rows


def write_result_csv(path: str, result: TimeSeriesResult, source: str) -> None:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in result_rows(result, source):
        buf.write(_format_row(row) + "\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def read_result_csv(path: str) -> dict:
    """Columns by name; numeric ones as float arrays, source as a list."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty result file")
    header = lines[0].split(",")
    cols: dict = {name: [] for name in header}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValidationError(f"{path}: ragged CSV row")
        for name, tok in zip(header, parts):
            cols[name].append(tok)
    for name in header:
        if name != "source":
            cols[name] = np.array([float(v) for v in cols[name]])
    return cols


def oracle_result(cfg: RunConfig) -> TimeSeriesResult:
    """Exact statistics on the same sample grid, packaged with zero errors."""
    icfg = cfg.integrator_config()
    times = icfg.sample_times()
    moments = oracle_moments_at_times(cfg.model_params(), times)
    stats = stats_from_moments(moments)
    zeros = np.zeros_like(stats.real)
    return TimeSeriesResult(
        times=times,
        values=stats.real,
        ses=zeros,
        imag=stats.imag,
        imag_ses=zeros,
        imag_residual=np.max(np.abs(stats.imag), axis=-1),
        n_valid=0,
        n_excluded=0,
    )


def _build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5, check=False,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return f"triwell-{__version__}"


@dataclass
class RunOutput:
    result: TimeSeriesResult
    csv_path: str
    meta_path: str
    n_diverged: int
    wall_time_s: float


def run(cfg: RunConfig, workers: int | None = None, out_path: str | None = None) -> RunOutput:
    """Execute one configured run and write the CSV plus metadata sidecar."""
    cfg.validate()
    path = out_path or cfg.output_path
    if not path:
        raise ValidationError("no output path configured")
    started = time.monotonic()
    if cfg.mode == "positive_p":
        acc, report = simulate_ensemble(
            cfg.model_params(), cfg.integrator_config(), cfg.trajectories,
            cfg.seed, batches=cfg.batches, workers=workers,
        )
        if report.fraction > MAX_DIVERGENT_FRACTION:
            raise DivergenceBreachError(
                f"{report.n_diverged} of {report.n_total} trajectories diverged "
                f"(fraction {report.fraction:.2e} > {MAX_DIVERGENT_FRACTION:.0e}); "
                f"first at t={report.first_times[:3]}"
            )
        result = finalize(acc)
        n_diverged = report.n_diverged
        source = "positive_p"
    elif cfg.mode == "oracle":
        result = oracle_result(cfg)
        n_diverged = 0
        source = "oracle"
    else:
        raise ValidationError("compare mode is driven by the compare subcommand")

    wall = time.monotonic() - started
    write_result_csv(path, result, source)
    meta_path = path + ".meta.json"
    meta = {
        "config": config_to_text(cfg),
        "build_id": _build_id(),
        "mode": cfg.mode,
        "n_trajectories": cfg.trajectories if cfg.mode == "positive_p" else 0,
        "n_valid": result.n_valid,
        "n_diverged": n_diverged,
        "wall_time_s": wall,
        "package_version": __version__,
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return RunOutput(result=result, csv_path=path, meta_path=meta_path,
                     n_diverged=n_diverged, wall_time_s=wall)


@dataclass
class Comparison:
    """Per-observable z-score summary of two runs on a common grid."""

    observables: dict  # name -> {"max_z": float, "t_worst": float, "n_flagged": int}
    z_max: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps(
            {"passed": self.passed, "z_max": self.z_max, "observables": self.observables},
            indent=2,
        )


def _zscores(delta: np.ndarray, se: np.ndarray) -> np.ndarray:
    z = np.zeros_like(delta)
    nonzero = se > 0
    z[nonzero] = np.abs(delta[nonzero]) / se[nonzero]
    z[~nonzero & (np.abs(delta) > 0)] = np.inf
    return z


def compare_results(res_a: TimeSeriesResult, res_b: TimeSeriesResult,
                    z_max: float = 4.0, names=STAT_NAMES) -> Comparison:
    """Full-object comparison: every statistic carries a jackknife error."""
    if not np.array_equal(res_a.times, res_b.times):
        raise ValidationError("sample grids do not match")
    observables = {}
    ok = True
    for name in names:
        va, sa = res_a.stat(name)
        vb, sb = res_b.stat(name)
        z = _zscores(va - vb, np.sqrt(sa ** 2 + sb ** 2))
        worst = int(np.argmax(z))
        flagged = int(np.sum(z > z_max))
        observables[name] = {
            "max_z": float(z[worst]),
            "t_worst": float(res_a.times[worst]),
            "n_flagged": flagged,
        }
        ok = ok and flagged == 0
    return Comparison(observables=observables, z_max=z_max, passed=ok)


def compare_csv(path_a: str, path_b: str, z_max: float = 4.0) -> Comparison:
    """File-level comparison over every column pair that carries an error."""
    a = read_result_csv(path_a)
    b = read_result_csv(path_b)
    for cols, path in ((a, path_a), (b, path_b)):
        missing = [c for c in CSV_COLUMNS if c not in cols]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
    if a["t"].shape != b["t"].shape or not np.array_equal(a["t"], b["t"]):
        raise ValidationError("sample grids do not match")
    observables = {}
    ok = True
    for val, se in CSV_SE_PAIRS:
        z = _zscores(a[val] - b[val], np.sqrt(a[se] ** 2 + b[se] ** 2))
        worst = int(np.argmax(z))
        flagged = int(np.sum(z > z_max))
        observables[val] = {
            "max_z": float(z[worst]) if math.isfinite(z[worst]) else float("inf"),
            "t_worst": float(a["t"][worst]),
            "n_flagged": flagged,
        }
        ok = ok and flagged == 0
    return Comparison(observables=observables, z_max=z_max, passed=ok)


def scaled_preset(name: str, scale: int, seed: int | None = None,
                  trajectories: int | None = None) -> RunConfig:
    cfg = preset(name, scale)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if trajectories is not None:
        cfg = replace(cfg, trajectories=trajectories)
    cfg.validate()
    return cfg
