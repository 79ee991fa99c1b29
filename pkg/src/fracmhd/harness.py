"""Run orchestration: configuration, the time loop, and parameter sweeps."""

from __future__ import annotations

import concurrent.futures
import csv
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fracmhd import checkpoint, diagnostics, dynamics
from fracmhd.diagnostics import DiagnosticsRecord, RunningIntegrals
from fracmhd.dynamics import PhysParams
from fracmhd.errors import ConfigInvalid
from fracmhd.spectral import GridSpec

log = logging.getLogger(__name__)

# A step that would land within this fraction of dt short of a target is stretched onto it.
_SNAP = 1e-9


class InitialCondition(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["taylor-green", "orszag-tang-like", "random-band"] = "orszag-tang-like"
    seed: int = 0
    amplitude: float = Field(1.0, gt=0)
    # rescale so that ||u||^2 + ||b||^2 equals this value
    energy: Optional[float] = Field(None, gt=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid_n: int
    alpha: float = Field(ge=0)
    beta: float = Field(ge=0)
    nu: Optional[float] = Field(None, ge=0)
    kappa: Optional[float] = Field(None, ge=0)
    t_end: float = Field(ge=0)
    dt: Union[float, Literal["auto"]] = "auto"
    courant: float = 0.5
    dt_max: float = Field(0.01, gt=0)
    ic: InitialCondition = Field(default_factory=InitialCondition)
    diag_interval: float = Field(gt=0)
    lp_exponent: float = Field(4.0, ge=2)
    output_dir: str
    checkpoint_interval: Optional[float] = Field(None, gt=0)
    resume_from: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.grid_n < 16 or self.grid_n % 2:
            raise ValueError(f"grid_n must be even and >= 16, got {self.grid_n}")
        if self.dt == "auto":
            if not 0 < self.courant <= 1:
                raise ValueError(f"courant must lie in (0, 1], got {self.courant}")
        elif not self.dt > 0:
            raise ValueError(f"dt must be > 0 or 'auto', got {self.dt}")
        if self.t_end > 0 and self.diag_interval > self.t_end:
            raise ValueError("diag_interval must not exceed t_end")
        return self

    @property
    def params(self) -> PhysParams:
        return PhysParams(self.alpha, self.beta, self.nu, self.kappa)


def load_run_config(source: Union[str, Path, dict]) -> RunConfig:
    """Parse a run configuration from a JSON path or a mapping.

    Raises:
        ConfigInvalid: unreadable file, malformed JSON, unknown keys or
            out-of-range values.
    """
    data = _read_json(source)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigInvalid(str(exc)) from exc


def _read_json(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {source}: {exc}") from exc


@dataclass
class RunResult:
    summary: dict
    records: list[DiagnosticsRecord] = field(default_factory=list)
    state: Optional[dynamics.MhdState] = None

    @property
    def completed(self) -> bool:
        return self.summary["status"] == "completed"


def _finite_or_none(x):
    if x is None:
        return None
    return x if math.isfinite(x) else None


def summarize(records: list[DiagnosticsRecord]) -> dict:
    """Per-column maxima and final functionals of a diagnostics series."""
    if not records:
        return {}
    maxima = {}
    for name in diagnostics.COLUMNS:
        if name == "t":
            continue
        values = [getattr(r, name) for r in records if getattr(r, name) is not None]
        maxima[name] = _finite_or_none(max(values)) if values else None
    last = records[-1]
    energies = [r.energy for r in records]
    return {
        "max": maxima,
        "final_bkm_integral": _finite_or_none(last.bkm_integral),
        "final_lemma1_functional": _finite_or_none(last.lemma1_functional),
        "final_lemma2_functional": _finite_or_none(last.lemma2_functional),
        "max_spectral_tail_fraction": maxima["spectral_tail_fraction"],
        "energy_nonincreasing": all(b <= a for a, b in zip(energies, energies[1:])),
    }


def _next_target(t: float, interval: Optional[float]) -> float:
    if interval is None:
        return math.inf
    return (math.floor(t / interval + _SNAP) + 1) * interval


def run(config: Union[RunConfig, dict, str, Path]) -> RunResult:
    """Integrate to ``t_end`` (or until failure), writing CSV, checkpoint and summary.

    Failures are reported in the summary rather than raised: a NaN/Inf step
    sets ``failure = "non_finite"``, a spectral tail above 1e-3 sets
    ``failure = "resolution_loss"``; both mark the run ``"unresolved"``.

    Raises:
        ConfigInvalid: invalid configuration.
    """
    if not isinstance(config, RunConfig):
        config = load_run_config(config)
    started = time.perf_counter()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = config.params
    grid = GridSpec(config.grid_n)

    records: list[DiagnosticsRecord] = []
    if config.resume_from:
        try:
            state, _, extra = checkpoint.read_checkpoint(config.resume_from)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigInvalid(f"cannot resume from {config.resume_from}: {exc}") from exc
        if state.grid != grid:
            raise ConfigInvalid("checkpoint grid differs from grid_n")
        acc = RunningIntegrals.from_dict(extra.get("accumulators", {}))
    else:
        state = dynamics.init_condition(config.ic.kind, grid, config.ic.seed, config.ic.amplitude)
        if config.ic.energy is not None:
            state = dynamics.normalize_energy(state, config.ic.energy)
        acc = RunningIntegrals()
        records.append(diagnostics.sample(state, params, acc, config.lp_exponent))

    op = dynamics.operator_for(grid, params)
    w, j = dynamics.state_to_half(state)
    t = state.time
    next_sample = _next_target(t, config.diag_interval)
    next_ckpt = _next_target(t, config.checkpoint_interval)
    steps = 0
    failure = failure_time = None

    while t < config.t_end and failure is None:
        target = min(next_sample, next_ckpt, config.t_end)
        if config.dt == "auto":
            dt = min(config.courant * grid.spacing / max(op.sup_speed(w, j), dynamics.CFL_SPEED_FLOOR),
                     config.dt_max)
        else:
            dt = config.dt
        landed = t + dt * (1 + _SNAP) >= target
        if landed:
            dt = target - t
        w, j = op.advance(w, j, dt)
        t = target if landed else t + dt
        steps += 1
        if not (np.isfinite(w).all() and np.isfinite(j).all()):
            failure, failure_time = "non_finite", t
            log.warning("non-finite state at t=%r", t)
            break
        if not landed:
            continue
        state = dynamics.state_from_half(grid, w, j, t)
        if t >= next_sample or t >= config.t_end:
            rec = diagnostics.sample(state, params, acc, config.lp_exponent)
            records.append(rec)
            next_sample = _next_target(t, config.diag_interval)
            if rec.spectral_tail_fraction > diagnostics.TAIL_FRACTION_LIMIT:
                failure, failure_time = "resolution_loss", t
                log.warning("resolution lost at t=%r (tail %.3e)", t, rec.spectral_tail_fraction)
        if t >= next_ckpt:
            checkpoint.write_checkpoint(
                out / f"checkpoint_t{t:.6f}", state, params, {"accumulators": acc.to_dict()}
            )
            next_ckpt = _next_target(t, config.checkpoint_interval)

    state = dynamics.state_from_half(grid, w, j, t) if failure != "non_finite" else None
    diagnostics.write_csv(records, out / "diagnostics.csv")
    if state is not None:
        checkpoint.write_checkpoint(out / "checkpoint_final", state, params,
                                    {"accumulators": acc.to_dict()})

    summary = {
        "status": "completed" if failure is None else "unresolved",
        "failure": failure,
        "failure_time": failure_time,
        "t_final": t,
        "steps": steps,
        "samples": len(records),
        "grid_n": grid.n,
        "params": params.as_dict(),
        "region": diagnostics.classify_region(params.alpha, params.beta).region,
    }
    summary.update(summarize(records))
    summary["wall_clock_seconds"] = time.perf_counter() - started
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunResult(summary, records, state)


# -- sweeps --------------------------------------------------------------------


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha_values: list[float] = Field(default_factory=list)
    beta_values: list[float] = Field(default_factory=list)
    # explicit (alpha, beta) pairs, run after the Cartesian product
    points: list[tuple[float, float]] = Field(default_factory=list)
    base: RunConfig
    parallelism: int = Field(1, ge=1)

    def enumerate_points(self) -> list[tuple[float, float]]:
        grid_points = list(itertools.product(self.alpha_values, self.beta_values))
        return grid_points + [tuple(p) for p in self.points]


def load_sweep_spec(source: Union[str, Path, dict]) -> SweepSpec:
    data = _read_json(source)
    try:
        return SweepSpec.model_validate(data)
    except ValidationError as exc:
        raise ConfigInvalid(str(exc)) from exc


REPORT_COLUMNS = (
    "alpha", "beta", "region", "status", "failure", "failure_time",
    "max_omega_inf", "final_bkm_integral", "output_dir", "error",
)


def _point_config(base: RunConfig, alpha: float, beta: float) -> RunConfig:
    data = base.model_dump()
    data.update(
        alpha=alpha,
        beta=beta,
        output_dir=str(Path(base.output_dir) / f"alpha={alpha!r}_beta={beta!r}"),
    )
    return RunConfig.model_validate(data)


def _run_point(args) -> dict:
    base, alpha, beta = args
    row = dict.fromkeys(REPORT_COLUMNS)
    row.update(alpha=alpha, beta=beta, region=diagnostics.classify_region(alpha, beta).region)
    try:
        cfg = _point_config(RunConfig.model_validate(base), alpha, beta)
        row["output_dir"] = cfg.output_dir
        summary = run(cfg).summary
    except Exception as exc:  # recorded per point; a sweep never aborts
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return row
    row.update(
        status=summary["status"],
        failure=summary["failure"],
        failure_time=summary["failure_time"],
        max_omega_inf=summary["max"]["omega_inf"],
        final_bkm_integral=summary["final_bkm_integral"],
    )
    return row


def sweep(spec: Union[SweepSpec, dict, str, Path]) -> list[dict]:
    """Run every ``(alpha, beta)`` point and write ``sweep_report.{json,csv}``.

    Rows come back in enumeration order whatever the parallelism.
    """
    if not isinstance(spec, SweepSpec):
        spec = load_sweep_spec(spec)
    points = spec.enumerate_points()
    base = spec.base.model_dump()
    jobs = [(base, a, b) for a, b in points]
    if spec.parallelism == 1 or len(jobs) <= 1:
        rows = [_run_point(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            rows = list(pool.map(_run_point, jobs))
    out = Path(spec.base.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_report.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    with open(out / "sweep_report.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(["" if row[c] is None else row[c] for c in REPORT_COLUMNS])
    return rows
