"""Command line front end.

Commands: simulate (Monte Carlo exceedance curve), exact (dense kernel
evolution), meanfield (crossing epochs and iterates), bounds (overhead
report), couple (two-rate dominance check), sweep (bounds over a
parameter grid) and verify (built-in cross-check suite).

Parameters come from an optional key=value config file plus flags;
flags win. Unknown config keys are hard errors. Results are written
atomically (temp file then rename) as CSV or JSON, both carrying the
fully resolved configuration, and every emitted JSON config re-parses
to the same ExperimentConfig. Exit codes: 0 success (impossibility
verdicts included), 1 usage or parameter error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import bounds as bounds_mod
from . import exact as exact_mod
from . import meanfield as mf_mod
from . import montecarlo as mc_mod
from .chain import ModelParams, Noise

__all__ = ["GridAxis", "ExperimentConfig", "parse_config", "config_from_mapping", "run", "main"]

OUT_DIR_ENV = "QECBATCH_OUT_DIR"

COMMANDS = ("simulate", "exact", "meanfield", "bounds", "couple", "sweep", "verify")

_SWEEPABLE = ("l", "p", "alpha", "theta", "q")

_CAPACITY_CHOICES = {
    "hashing": bounds_mod.DEPOLARIZING_HASHING,
    "hashing-cutoff": bounds_mod.DEPOLARIZING_HASHING_CUTOFF,
}


class UsageError(Exception):
    """Bad flags or config; maps to exit code 1."""


@dataclass(frozen=True)
class GridAxis:
    """One sweep axis: `steps` evenly spaced values from start to stop."""

    name: str
    start: float
    stop: float
    steps: int

    def __post_init__(self) -> None:
        if self.name not in _SWEEPABLE:
            raise ValueError(
                f"grid axis '{self.name}' is not sweepable; choose from {', '.join(_SWEEPABLE)}"
            )
        if self.steps < 2:
            raise ValueError(f"grid axis '{self.name}' needs steps >= 2, got {self.steps}")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)

    @classmethod
    def parse(cls, token: str) -> "GridAxis":
        parts = token.split(":")
        if len(parts) != 4:
            raise ValueError(
                f"grid axis '{token}' must look like name:start:stop:steps"
            )
        name, start, stop, steps = parts
        return cls(name=name, start=float(start), stop=float(stop), steps=int(steps))

    def token(self) -> str:
        return f"{self.name}:{self.start!r}:{self.stop!r}:{self.steps}"


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved inputs for one CLI run."""

    command: str
    n: int | None = None
    p: float | None = None
    alpha: float | None = None
    q: float = 0.0
    q_period: int = 1
    noise: str = "erasure"
    l: int | None = None
    beta: float | None = None
    theta: float | None = None
    delta: float | None = None
    kappa: float | None = None
    t_g: float | None = None
    capacity: str = "hashing"
    n_traj: int | None = None
    t_max: int | None = None
    burn_in: int | None = None
    master_seed: int = 20260817
    q_low: float | None = None
    q_high: float | None = None
    threads: int = 1
    out: str | None = None
    format: str | None = None
    grid: tuple[GridAxis, ...] = ()

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command '{self.command}'")
        if self.noise not in ("erasure", "depolarizing"):
            raise ValueError(f"noise must be erasure or depolarizing, got '{self.noise}'")
        if self.capacity not in _CAPACITY_CHOICES:
            raise ValueError(
                f"capacity must be one of {', '.join(sorted(_CAPACITY_CHOICES))}, got '{self.capacity}'"
            )
        if self.format is not None and self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got '{self.format}'")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")

    def to_mapping(self) -> dict:
        out: dict = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "grid":
                if value:
                    out["grid"] = [axis.token() for axis in value]
                continue
            out[f.name] = value
        return out

    def noise_kind(self) -> Noise:
        return Noise(self.noise)

    def capacity_fn(self) -> bounds_mod.CapacityFn:
        return _CAPACITY_CHOICES[self.capacity]


def _parse_bool_free_int(key: str, raw: object) -> int:
    try:
        return int(str(raw))
    except ValueError:
        raise ValueError(f"config key '{key}' needs an integer, got '{raw}'") from None


def _parse_float(key: str, raw: object) -> float:
    try:
        return float(str(raw))
    except ValueError:
        raise ValueError(f"config key '{key}' needs a number, got '{raw}'") from None


def _parse_str(key: str, raw: object) -> str:
    return str(raw)


THETA_LIMIT_PRESET = 1e-6


def _parse_theta(key: str, raw: object) -> float:
    if isinstance(raw, str) and raw.strip().lower() == "limit":
        print(
            f"note: theta=limit evaluates the bound at the finite slack "
            f"theta={THETA_LIMIT_PRESET:g}, not at the theta -> 0 limit itself",
            file=sys.stderr,
        )
        return THETA_LIMIT_PRESET
    return _parse_float(key, raw)


def _parse_grid(key: str, raw: object) -> tuple[GridAxis, ...]:
    if isinstance(raw, (list, tuple)):
        tokens: list[str] = []
        for item in raw:
            tokens.extend(str(item).split())
    else:
        tokens = str(raw).split()
    return tuple(GridAxis.parse(token) for token in tokens)


_KEY_PARSERS = {
    "n": _parse_bool_free_int,
    "p": _parse_float,
    "alpha": _parse_float,
    "q": _parse_float,
    "q_period": _parse_bool_free_int,
    "noise": _parse_str,
    "l": _parse_bool_free_int,
    "beta": _parse_float,
    "theta": _parse_theta,
    "delta": _parse_float,
    "kappa": _parse_float,
    "t_g": _parse_float,
    "capacity": _parse_str,
    "n_traj": _parse_bool_free_int,
    "t_max": _parse_bool_free_int,
    "burn_in": _parse_bool_free_int,
    "master_seed": _parse_bool_free_int,
    "q_low": _parse_float,
    "q_high": _parse_float,
    "threads": _parse_bool_free_int,
    "out": _parse_str,
    "format": _parse_str,
    "grid": _parse_grid,
}


def parse_config(
    command: str,
    text: str | None = None,
    overrides: Mapping[str, object] | None = None,
) -> ExperimentConfig:
    """Build an ExperimentConfig from config-file text plus overrides.

    The file holds `key = value` lines ('#' starts a comment); flag
    overrides win over the file. Any key outside the schema is a hard
    error naming the offender.
    """
    merged: dict[str, object] = {}
    if text is not None:
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"config line {lineno} is not key = value: '{line.strip()}'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _KEY_PARSERS:
                raise ValueError(f"unknown config key '{key}' (line {lineno})")
            merged[key] = _KEY_PARSERS[key](key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _KEY_PARSERS:
            raise ValueError(f"unknown config key '{key}'")
        merged[key] = _KEY_PARSERS[key](key, raw)
    return ExperimentConfig(command=command, **merged)


def config_from_mapping(mapping: Mapping[str, object]) -> ExperimentConfig:
    """Rebuild a config from an emitted JSON `config` section."""
    data = dict(mapping)
    command = data.pop("command", None)
    if command is None:
        raise ValueError("config mapping is missing 'command'")
    parsed = {key: _KEY_PARSERS[key](key, value) if key in _KEY_PARSERS else value
              for key, value in data.items()}
    unknown = [key for key in parsed if key not in _KEY_PARSERS]
    if unknown:
        raise ValueError(f"unknown config key '{unknown[0]}'")
    return ExperimentConfig(command=str(command), **parsed)


def _require(config: ExperimentConfig, *names: str) -> None:
    missing = [name for name in names if getattr(config, name) is None]
    if missing:
        raise UsageError(
            f"command '{config.command}' needs {', '.join('--' + m.replace('_', '-') for m in missing)}"
        )


def _model_params(config: ExperimentConfig) -> ModelParams:
    return ModelParams(
        n=config.n,
        p=config.p,
        alpha=config.alpha,
        q=config.q,
        q_period=config.q_period,
        noise=config.noise_kind(),
    )


def _out_path(config: ExperimentConfig, default_name: str) -> Path:
    if config.out is not None:
        return Path(config.out)
    base = Path(os.environ.get(OUT_DIR_ENV, "."))
    return base / default_name


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _config_json(config: ExperimentConfig) -> str:
    return json.dumps(config.to_mapping(), sort_keys=True)


def _write_json(path: Path, config: ExperimentConfig, schema: str, payload: dict) -> None:
    doc = {"schema": schema, "config": config.to_mapping()}
    doc.update(payload)
    _write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(
    path: Path, config: ExperimentConfig, schema: str, header: Sequence[str],
    rows: Sequence[Sequence[object]],
) -> None:
    lines = [f"# schema={schema}", f"# config={_config_json(config)}", ",".join(header)]
    for row in rows:
        lines.append(",".join("" if cell is None else str(cell) for cell in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def _fmt(config: ExperimentConfig, default: str) -> str:
    return config.format or default


def _run_simulate(config: ExperimentConfig) -> int:
    _require(config, "n", "p", "alpha", "beta", "n_traj", "t_max")
    params = _model_params(config)
    spec = mc_mod.TrajectoryBatch(
        params=params, n_traj=config.n_traj, t_max=config.t_max,
        master_seed=config.master_seed,
    )
    threshold = config.n * config.beta
    est = mc_mod.run_batch(spec, threshold, n_workers=config.threads)
    fmt = _fmt(config, "csv")
    path = _out_path(config, f"simulate.{fmt}")
    if fmt == "csv":
        rows = [
            (t, repr(float(est.p_hat_by_t[t])), repr(float(est.ci_halfwidth_by_t[t])))
            for t in range(config.t_max + 1)
        ]
        _write_csv(path, config, "qecbatch.simulate.v1", ("t", "p_hat", "ci_halfwidth"), rows)
    else:
        _write_json(path, config, "qecbatch.simulate.v1", {
            "threshold": threshold,
            "t": list(range(config.t_max + 1)),
            "p_hat": est.p_hat_by_t.tolist(),
            "ci_halfwidth": est.ci_halfwidth_by_t.tolist(),
            "median_tau": None if math.isinf(est.median_tau()) else est.median_tau(),
        })
    final = est.p_hat_by_t[-1]
    print(f"simulate: P[X > {threshold:g}] at t={config.t_max} is {final:.4f} "
          f"({config.n_traj} trajectories); wrote {path}")
    return 0


def _run_exact(config: ExperimentConfig) -> int:
    _require(config, "n", "p", "alpha", "t_max")
    params = _model_params(config)
    kernel = exact_mod.build_kernel(params)
    fmt = _fmt(config, "csv")
    path = _out_path(config, f"exact.{fmt}")
    if config.beta is not None:
        threshold = config.n * config.beta
        dist = exact_mod.StateDistribution.point_mass(params.n)
        curve = [exact_mod.tail_prob(dist, threshold)]
        for _ in range(config.t_max):
            dist = exact_mod.evolve(kernel, dist, 1)
            curve.append(exact_mod.tail_prob(dist, threshold))
        if fmt == "csv":
            rows = [(t, repr(v)) for t, v in enumerate(curve)]
            _write_csv(path, config, "qecbatch.exact-tail.v1", ("t", "tail_prob"), rows)
        else:
            _write_json(path, config, "qecbatch.exact-tail.v1", {
                "threshold": threshold,
                "t": list(range(config.t_max + 1)),
                "tail_prob": curve,
                "mean_final": dist.mean(),
            })
        print(f"exact: P[X > {threshold:g}] at t={config.t_max} is {curve[-1]:.6g}; wrote {path}")
    else:
        dist = exact_mod.evolve(
            kernel, exact_mod.StateDistribution.point_mass(params.n), config.t_max
        )
        if fmt == "csv":
            rows = [(x, repr(float(dist.mass[x]))) for x in range(dist.n + 1)]
            _write_csv(path, config, "qecbatch.exact-dist.v1", ("state", "probability"), rows)
        else:
            _write_json(path, config, "qecbatch.exact-dist.v1", {
                "t": dist.t,
                "mass": dist.mass.tolist(),
                "mean": dist.mean(),
            })
        print(f"exact: mean error count at t={config.t_max} is {dist.mean():.4f}; wrote {path}")
    return 0


def _run_meanfield(config: ExperimentConfig) -> int:
    _require(config, "p", "alpha", "beta")
    crossing = mf_mod.epochs_to_cross(config.p, config.alpha, config.beta, config.delta)
    seq = mf_mod.MeanFieldSequence(
        p=config.p, alpha=config.alpha, beta=config.beta, delta=crossing.delta
    )
    fmt = _fmt(config, "json")
    path = _out_path(config, f"meanfield.{fmt}")
    if fmt == "csv":
        rows = [(k, repr(seq.x(k))) for k in range(crossing.T + 1)]
        _write_csv(path, config, "qecbatch.meanfield.v1", ("k", "x_k"), rows)
    else:
        _write_json(path, config, "qecbatch.meanfield.v1", {
            "T": crossing.T,
            "delta": crossing.delta,
            "fixed_point_fraction": seq.fixed_point,
            "steady_fraction": (config.p - config.alpha) / config.p,
        })
    print(f"meanfield: crossing epoch T={crossing.T} at delta={crossing.delta:.6g}; wrote {path}")
    return 0


def _run_bounds(config: ExperimentConfig) -> int:
    if config.kappa is not None or config.t_g is not None:
        return _run_kappa_surface(config)
    _require(config, "l", "p", "alpha", "theta")
    report = bounds_mod.overhead_bound(
        l=config.l, p=config.p, alpha=config.alpha, theta=config.theta,
        noise=config.noise_kind(), q=config.q,
        capacity_fn=None if config.noise == "erasure" else config.capacity_fn(),
    )
    path = _out_path(config, "bounds.json")
    _write_json(path, config, "qecbatch.bounds.v1", {"report": report.to_dict()})
    if report.feasible:
        print(f"bounds: n_min={report.n_min:.6g} (overhead {report.overhead_lb:.4f}, "
              f"crossing epochs {report.crossing_epochs}); wrote {path}")
    else:
        print(f"bounds: impossible, {report.verdict.reason}; wrote {path}")
    return 0


def _run_kappa_surface(config: ExperimentConfig) -> int:
    if config.p is not None:
        raise UsageError("give either --p or the pair --kappa/--t-g, not both")
    _require(config, "kappa", "t_g", "alpha")
    surface = bounds_mod.kappa_surface(config.kappa, config.t_g, config.noise_kind())
    overhead = surface.overhead(config.alpha)
    payload: dict = {
        "p": surface.p,
        "alpha_min": surface.alpha_min,
        "overhead": bounds_mod._serialize(overhead),
    }
    if config.noise == "erasure" and not isinstance(overhead, bounds_mod.Impossibility):
        check = surface.small_budget_check(config.alpha)
        payload["small_budget_check"] = {
            "exact": check.exact,
            "approx": check.approx,
            "displayed_ratio": check.displayed_ratio,
            "rel_error": check.rel_error,
        }
    path = _out_path(config, "bounds.json")
    _write_json(path, config, "qecbatch.kappa-surface.v1", payload)
    if isinstance(overhead, bounds_mod.Impossibility):
        print(f"bounds: impossible, {overhead.reason}; wrote {path}")
    else:
        print(f"bounds: overhead {overhead:.6g} at alpha={config.alpha:g} "
              f"(p={surface.p:.6g}, alpha_min={surface.alpha_min:.6g}); wrote {path}")
    return 0


def _run_couple(config: ExperimentConfig) -> int:
    _require(config, "n", "p", "alpha", "q_low", "q_high", "n_traj", "t_max")
    params = _model_params(config)
    report = mc_mod.run_coupled(
        params=params, q_low=config.q_low, q_high=config.q_high,
        n_traj=config.n_traj, t_max=config.t_max, master_seed=config.master_seed,
    )
    fmt = _fmt(config, "json")
    path = _out_path(config, f"couple.{fmt}")
    summary = report.to_dict()
    if fmt == "csv":
        row = tuple(repr(v) if isinstance(v, float) else v for v in summary.values())
        _write_csv(path, config, "qecbatch.couple.v1", tuple(summary), [row])
    else:
        _write_json(path, config, "qecbatch.couple.v1", {"report": summary})
    print(f"couple: inclusion holds on {report.inclusion_fraction:.4%} of "
          f"{report.pairs_checked} pairs, faithfulness p-value "
          f"{report.pit_chi2_pvalue}; wrote {path}")
    return 0


_SWEEP_COLUMNS = (
    "l", "p", "alpha", "theta", "q", "noise", "capacity_mode", "status",
    "n_min", "overhead_lb", "crossing_epochs", "alpha_threshold",
    "noise_threshold", "residual_rate", "crossover_alpha", "baseline_full_parallel",
)


def _sweep_row(report: bounds_mod.BoundReport) -> tuple:
    baseline = report.baseline_full_parallel
    return (
        report.l, report.p, report.alpha, report.theta, report.q,
        report.noise.value, report.capacity_mode,
        "ok" if report.feasible else "impossible",
        report.n_min, report.overhead_lb, report.crossing_epochs,
        report.alpha_threshold, report.noise_threshold, report.residual_rate,
        report.crossover_alpha,
        None if isinstance(baseline, bounds_mod.Impossibility) else baseline,
    )


def _run_sweep(config: ExperimentConfig) -> int:
    if not config.grid:
        raise UsageError("sweep needs at least one --grid axis (name:start:stop:steps)")
    _require(config, "l", "p", "alpha", "theta")
    axes = config.grid
    names = [axis.name for axis in axes]
    if len(set(names)) != len(names):
        raise UsageError("sweep grid axes must have distinct names")
    rows: list[tuple] = []
    meshes = np.meshgrid(*[axis.values() for axis in axes], indexing="ij")
    points = np.stack([mesh.ravel() for mesh in meshes], axis=-1)
    for point in points:
        kwargs = {
            "l": config.l, "p": config.p, "alpha": config.alpha,
            "theta": config.theta, "q": config.q,
        }
        for name, value in zip(names, point):
            kwargs[name] = int(round(value)) if name == "l" else float(value)
        try:
            report = bounds_mod.overhead_bound(
                noise=config.noise_kind(),
                capacity_fn=None if config.noise == "erasure" else config.capacity_fn(),
                **kwargs,
            )
        except ValueError:
            rows.append(tuple(
                [kwargs["l"], kwargs["p"], kwargs["alpha"], kwargs["theta"], kwargs["q"],
                 config.noise, "", "out-of-domain"] + [None] * 8
            ))
            continue
        rows.append(_sweep_row(report))
    fmt = _fmt(config, "csv")
    path = _out_path(config, f"sweep.{fmt}")
    if fmt == "csv":
        _write_csv(path, config, "qecbatch.sweep.v1", _SWEEP_COLUMNS, rows)
    else:
        _write_json(path, config, "qecbatch.sweep.v1", {
            "rows": [dict(zip(_SWEEP_COLUMNS, row)) for row in rows],
        })
    feasible = sum(1 for row in rows if row[7] == "ok")
    print(f"sweep: {len(rows)} grid points, {feasible} with finite bounds; wrote {path}")
    return 0


def _check_closed_form(seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        p = rng.uniform(0.02, 0.98)
        alpha = rng.uniform(0.02, 0.9) * p
        delta = rng.uniform(0.05, 0.95) * (p - alpha)
        k = int(rng.integers(0, 200))
        closed = mf_mod.mf_iterate(1.0, p, alpha, delta, k)
        looped = mf_mod.iterate_recursion(1.0, p, alpha, delta, k)
        worst = max(worst, abs(closed - looped))
    return worst <= 1e-9, f"max |closed - recursion| = {worst:.3g}"


def _check_crossing_formula(seed: int) -> tuple[bool, str]:
    fractions = np.linspace(0.1, 0.9, 6)
    mismatches = 0
    checked = 0
    for p in fractions:
        for fa in fractions:
            alpha = fa * p
            for fb in fractions:
                beta = fb * (p - alpha) / p
                crossing = mf_mod.epochs_to_cross(p, alpha, beta)
                x = 0.0
                iter_T = None
                for k in range(1, 100000):
                    x = x + (1.0 - x) * (p - crossing.delta) - alpha
                    if x > beta:
                        iter_T = k
                        break
                checked += 1
                if iter_T != crossing.T:
                    mismatches += 1
    return mismatches == 0, f"{checked} grid points, {mismatches} mismatches"


def _check_exact_dominance(seed: int) -> tuple[bool, str]:
    violations = 0
    checked = 0
    for n in (50, 200):
        for p in (0.2, 0.5):
            for fa in (0.25, 0.5):
                alpha = fa * p
                params = ModelParams(n=n, p=p, alpha=alpha)
                kernel = exact_mod.build_kernel(params)
                for fb in (0.25, 0.75):
                    beta = fb * (p - alpha) / p
                    bound = bounds_mod.hitting_prob_lb(n, p, alpha, beta)
                    dist = exact_mod.evolve(
                        kernel, exact_mod.StateDistribution.point_mass(n), bound.T
                    )
                    checked += 1
                    if exact_mod.tail_prob(dist, n * beta) < bound.value:
                        violations += 1
    return violations == 0, f"{checked} grid points, {violations} bound violations"


def _check_oracle_vs_mc(seed: int) -> tuple[bool, str]:
    n, p, alpha, t_max, n_traj = 60, 0.2, 0.05, 40, 20000
    beta = 0.5 * (p - alpha) / p
    params = ModelParams(n=n, p=p, alpha=alpha)
    kernel = exact_mod.build_kernel(params)
    spec = mc_mod.TrajectoryBatch(params=params, n_traj=n_traj, t_max=t_max, master_seed=seed)
    est = mc_mod.run_batch(spec, n * beta)
    dist = exact_mod.StateDistribution.point_mass(n)
    misses = 0
    for t in range(t_max + 1):
        truth = exact_mod.tail_prob(dist, n * beta)
        se = math.sqrt(truth * (1.0 - truth) / n_traj)
        if abs(est.p_hat_by_t[t] - truth) > 3.0 * se:
            misses += 1
        if t < t_max:
            dist = exact_mod.evolve(kernel, dist, 1)
    ok = misses <= math.floor(0.01 * (t_max + 1))
    return ok, f"{misses}/{t_max + 1} epochs beyond 3 standard errors"


_VERIFY_CHECKS = (
    ("closed-form vs recursion", _check_closed_form),
    ("crossing-epoch formula vs iteration", _check_crossing_formula),
    ("exact tail dominates closed-form bound", _check_exact_dominance),
    ("exact oracle vs Monte Carlo", _check_oracle_vs_mc),
)


def _run_verify(config: ExperimentConfig, checks=_VERIFY_CHECKS) -> int:
    failures = 0
    for name, check in checks:
        ok, detail = check(config.master_seed)
        print(f"[verify] {name}: {'ok' if ok else 'FAIL'} ({detail})")
        if not ok:
            failures += 1
    if failures:
        print(f"[verify] {failures} of {len(checks)} checks failed")
        return 2
    print(f"[verify] all {len(checks)} checks passed")
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "exact": _run_exact,
    "meanfield": _run_meanfield,
    "bounds": _run_bounds,
    "couple": _run_couple,
    "sweep": _run_sweep,
    "verify": _run_verify,
}


def run(config: ExperimentConfig) -> int:
    """Execute one fully resolved configuration; returns the exit code."""
    return _RUNNERS[config.command](config)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise UsageError(message)


_FLAG_HELP = {
    "n": ("int", "memory size in qubits"),
    "p": ("float", "per-batch decoherence probability"),
    "alpha": ("float", "correction budget fraction"),
    "q": ("float", "static-phase decoherence probability"),
    "q_period": ("int", "correction epochs per static phase"),
    "noise": ("str", "erasure or depolarizing"),
    "l": ("int", "logical qubits to store"),
    "beta": ("float", "target error fraction"),
    "theta": ("float", "slack below the steady fraction ('limit' = 1e-6 preset)"),
    "delta": ("float", "mean-field slack override"),
    "kappa": ("float", "decoherence rate (pairs with --t-g)"),
    "t_g": ("float", "duration of one correction batch"),
    "capacity": ("str", "depolarizing capacity mode: hashing or hashing-cutoff"),
    "n_traj": ("int", "number of trajectories"),
    "t_max": ("int", "number of correction epochs"),
    "burn_in": ("int", "epochs discarded before averaging"),
    "master_seed": ("int", "seed for all randomness"),
    "q_low": ("float", "static rate of the coupled low-noise memory"),
    "q_high": ("float", "static rate of the coupled high-noise memory"),
    "threads": ("int", "worker count hint (results do not depend on it)"),
    "out": ("path", "output file path"),
    "format": ("str", "csv or json"),
}

_COMMAND_FLAGS = {
    "simulate": ("n", "p", "alpha", "q", "q_period", "noise", "beta", "n_traj",
                 "t_max", "master_seed", "threads", "out", "format"),
    "exact": ("n", "p", "alpha", "q", "q_period", "noise", "beta", "t_max", "out", "format"),
    "meanfield": ("p", "alpha", "beta", "delta", "out", "format"),
    "bounds": ("l", "p", "alpha", "theta", "q", "noise", "capacity", "kappa", "t_g", "out"),
    "couple": ("n", "p", "alpha", "q_period", "q_low", "q_high", "n_traj",
               "t_max", "master_seed", "out", "format"),
    "sweep": ("l", "p", "alpha", "theta", "q", "noise", "capacity", "out", "format"),
    "verify": ("master_seed",),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="qecbatch", description=__doc__.split("\n\n")[0])
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", type=str, default=None,
                         help="key = value config file; flags override it")
        for key in _COMMAND_FLAGS[command]:
            kind, help_text = _FLAG_HELP[key]
            sub.add_argument(f"--{key.replace('_', '-')}", dest=key, type=str,
                             default=None, metavar=kind.upper(), help=help_text)
        if command == "sweep":
            sub.add_argument("--grid", dest="grid", action="append", default=None,
                             metavar="NAME:START:STOP:STEPS",
                             help="sweep axis, repeatable; names from "
                                  + ", ".join(_SWEEPABLE))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        text = None
        if args.config is not None:
            text = Path(args.config).read_text()
        overrides = {
            key: value
            for key, value in vars(args).items()
            if key not in ("command", "config") and value is not None
        }
        config = parse_config(args.command, text=text, overrides=overrides)
        return run(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
