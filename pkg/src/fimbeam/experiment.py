"""Seeded Monte Carlo experiments over the four transmission schemes.

A configuration is a nested mapping (TOML on disk, JSON in the result
sidecar).  Every trial draws one set of user positions and one channel
realization from ``numpy.random.default_rng(seed + trial)`` and runs every
scheme on it, so scheme comparisons are paired.  Trials are independent and
are reduced in trial order, which makes the output independent of the number
of worker processes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .beamforming import MMSE, ZF, InfeasibleError
from .channel import (ScenarioGeometry, make_link_budget, noise_power, sample_environment,
                      sample_user_positions)
from .geometry import SPEED_OF_LIGHT, FimGeometry
from .morphing import DUAL, RELAXED, STRICT, UNIFORM, MorphConfig
from .optimizer import MARGIN, POWER, AoConfig, optimize, transmit_power_dbm

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SINR_AXIS = "sinr_target_db"
PATH_AXIS = "path_count"
RANGE_AXIS = "morphing_range"
NO_SWEEP = "none"
AXES = (SINR_AXIS, PATH_AXIS, RANGE_AXIS, NO_SWEEP)

SCHEMES = {
    "mmse-rigid": (MMSE, False),
    "mmse-fim": (MMSE, True),
    "zf-rigid": (ZF, False),
    "zf-fim": (ZF, True),
}

CSV_HEADER = ["sweep_value", "scheme", "mean_power_dbm", "std_power_dbm", "trials_ok",
              "trials_failed"]
RESULTS_CSV = "results.csv"
SIDECAR_JSON = "results.json"
CONVERGENCE_CSV = "convergence.csv"


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` is the dotted path of the offender."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path
        self.message = message


def _int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _real(v):
    return (_int(v) or isinstance(v, (float, np.floating))) and math.isfinite(v)


# name -> (section, kind, check or None, requirement shown on failure)
_FIELDS = {
    "carrier_hz": ("system", "real", lambda v: v > 0, "must be positive"),
    "bandwidth_hz": ("system", "real", lambda v: v > 0, "must be positive"),
    "noise_density_dbm_hz": ("system", "real", None, ""),
    "n_x": ("array", "int", lambda v: v >= 1, "must be >= 1"),
    "n_z": ("array", "int", lambda v: v >= 1, "must be >= 1"),
    "spacing_x": ("array", "real", lambda v: v > 0, "must be positive (wavelengths)"),
    "spacing_z": ("array", "real", lambda v: v > 0, "must be positive (wavelengths)"),
    "bs_height": ("scenario", "real", lambda v: v > 0, "must be positive"),
    "user_radius": ("scenario", "real", lambda v: v >= 0, "must be non-negative"),
    "center_distance": ("scenario", "real", lambda v: v > 0, "must be positive"),
    "users": ("scenario", "int", lambda v: v >= 1, "must be >= 1"),
    "paths": ("channel", "int", lambda v: v >= 1, "must be >= 1"),
    "path_loss_exponent": ("channel", "real", lambda v: v >= 0, "must be non-negative"),
    "reference_distance": ("channel", "real", lambda v: v > 0, "must be positive"),
    "sinr_target_db": ("operating_point", "real", None, ""),
    "morphing_range": ("operating_point", "real", lambda v: v >= 0,
                       "must be non-negative (wavelengths)"),
    "axis": ("sweep", "str", lambda v: v in AXES, f"must be one of {list(AXES)}"),
    "values": ("sweep", "list", None, ""),
    "schemes": ("run", "list", None, ""),
    "trials": ("run", "int", lambda v: v >= 1, "must be >= 1"),
    "seed": ("run", "int", lambda v: v >= 0, "must be non-negative"),
    "max_outer_iters": ("optimizer", "int", lambda v: v >= 1, "must be >= 1"),
    "convergence_db": ("optimizer", "real", None, ""),
    "surface_update": ("optimizer", "str", lambda v: v in (POWER, MARGIN),
                       f"must be {POWER!r} or {MARGIN!r}"),
    "weighting": ("optimizer", "str", lambda v: v in (UNIFORM, DUAL),
                  f"must be {UNIFORM!r} or {DUAL!r}"),
    "feasibility": ("optimizer", "str", lambda v: v in (STRICT, RELAXED),
                    f"must be {STRICT!r} or {RELAXED!r}"),
    "initial_step": ("optimizer", "real", lambda v: v > 0, "must be positive"),
    "step_growth": ("optimizer", "real", lambda v: v >= 1, "must be >= 1"),
    "backtrack_factor": ("optimizer", "real", lambda v: 0 < v < 1, "must be in (0, 1)"),
    "armijo_constant": ("optimizer", "real", lambda v: 0 < v < 1, "must be in (0, 1)"),
    "max_backtracks": ("optimizer", "int", lambda v: v >= 0, "must be non-negative"),
    "max_ascent_iters": ("optimizer", "int", lambda v: v >= 0, "must be non-negative"),
    "guard_backtracks": ("optimizer", "int", lambda v: v >= 0, "must be non-negative"),
    "fp_tol": ("optimizer", "real", lambda v: v > 0, "must be positive"),
    "fp_max_iter": ("optimizer", "int", lambda v: v >= 1, "must be >= 1"),
}
SECTIONS = tuple(dict.fromkeys(sec for sec, *_ in _FIELDS.values()))


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment parameters.

    Defaults are the reference simulation setup; spacings and the morphing
    range are in wavelengths, distances in meters.  ``sinr_target_db``,
    ``paths`` and ``morphing_range`` are the operating point used when that
    quantity is not the sweep axis.
    """

    carrier_hz: float = 28e9
    bandwidth_hz: float = 100e6
    noise_density_dbm_hz: float = -174.0
    n_x: int = 2
    n_z: int = 2
    spacing_x: float = 0.5
    spacing_z: float = 0.5
    bs_height: float = 5.0
    user_radius: float = 10.0
    center_distance: float = 20.0
    users: int = 4
    paths: int = 8
    path_loss_exponent: float = 2.2
    reference_distance: float = 1.0
    sinr_target_db: float = 5.0
    morphing_range: float = 1.0
    axis: str = SINR_AXIS
    values: tuple = tuple(float(g) for g in range(16))
    schemes: tuple = tuple(SCHEMES)
    trials: int = 100
    seed: int = 0
    max_outer_iters: int = 100
    convergence_db: float = -30.0
    surface_update: str = POWER
    weighting: str = DUAL
    feasibility: str = STRICT
    initial_step: float = 0.1
    step_growth: float = 2.0
    backtrack_factor: float = 0.5
    armijo_constant: float = 1e-4
    max_backtracks: int = 30
    max_ascent_iters: int = 50
    guard_backtracks: int = 10
    fp_tol: float = 1e-10
    fp_max_iter: int = 500

    def __post_init__(self):
        for f in dataclasses.fields(self):
            section, kind, check, need = _FIELDS[f.name]
            path = f"{section}.{f.name}"
            v = getattr(self, f.name)
            if kind == "int" and not _int(v):
                raise ConfigError(path, f"expected an integer, got {v!r}")
            if kind == "real" and not _real(v):
                raise ConfigError(path, f"expected a finite number, got {v!r}")
            if kind == "str" and not isinstance(v, str):
                raise ConfigError(path, f"expected a string, got {v!r}")
            if kind == "list":
                if isinstance(v, (str, bytes)) or not hasattr(v, "__iter__"):
                    raise ConfigError(path, f"expected a list, got {v!r}")
                object.__setattr__(self, f.name, tuple(v))
            elif kind == "int":
                object.__setattr__(self, f.name, int(v))
            elif kind == "real":
                object.__setattr__(self, f.name, float(v))
            if check is not None and not check(getattr(self, f.name)):
                raise ConfigError(path, f"{need}, got {v!r}")
        self._check_sweep()
        self._check_schemes()
        if self.reference_distance > self.bs_height:
            raise ConfigError("channel.reference_distance",
                              "must not exceed the BS height (users would sit inside it)")

    def _check_sweep(self):
        values = self.values
        if self.axis == NO_SWEEP:
            if values:
                raise ConfigError("sweep.values", "must be empty when sweep.axis is 'none'")
            if len(self.schemes) != 1:
                raise ConfigError("run.schemes", "convergence runs take exactly one scheme")
            return
        if not values:
            raise ConfigError("sweep.values", f"need at least one value for axis {self.axis!r}")
        if self.axis == PATH_AXIS:
            if not all(_int(v) and v >= 1 for v in values):
                raise ConfigError("sweep.values", f"path counts must be integers >= 1, got {list(values)}")
            values = tuple(int(v) for v in values)
        else:
            if not all(_real(v) for v in values):
                raise ConfigError("sweep.values", f"expected finite numbers, got {list(values)}")
            values = tuple(float(v) for v in values)
            if self.axis == RANGE_AXIS and min(values) < 0:
                raise ConfigError("sweep.values", "morphing ranges must be non-negative")
        if len(set(values)) != len(values):
            raise ConfigError("sweep.values", f"duplicate sweep values in {list(values)}")
        object.__setattr__(self, "values", values)

    def _check_schemes(self):
        if not self.schemes:
            raise ConfigError("run.schemes", "need at least one scheme")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError("run.schemes", f"unknown scheme {s!r}; choose from {list(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("run.schemes", "schemes must be distinct")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def n(self) -> int:
        return self.n_x * self.n_z

    @property
    def convergence_mode(self) -> bool:
        return self.axis == NO_SWEEP

    def geometry(self) -> FimGeometry:
        lam = self.wavelength
        return FimGeometry(self.n_x, self.n_z, self.spacing_x * lam, self.spacing_z * lam, lam)

    def scenario(self) -> ScenarioGeometry:
        return ScenarioGeometry(self.bs_height, self.user_radius, self.center_distance, self.users)

    def ao_config(self, kind: str, morph: bool, morphing_range: float) -> AoConfig:
        mc = MorphConfig(initial_step=self.initial_step, backtrack_factor=self.backtrack_factor,
                         armijo_constant=self.armijo_constant, max_backtracks=self.max_backtracks,
                         max_ascent_iters=self.max_ascent_iters, feasibility=self.feasibility,
                         weighting=self.weighting)
        return AoConfig(max_outer_iters=self.max_outer_iters, convergence_db=self.convergence_db,
                        beamformer_kind=kind, morph=mc, morph_enabled=morph,
                        y_max=morphing_range * self.wavelength, surface_update=self.surface_update,
                        fp_tol=self.fp_tol, fp_max_iter=self.fp_max_iter,
                        guard_backtracks=self.guard_backtracks, step_growth=self.step_growth)

    def points(self) -> list:
        """``(sweep_value, sinr_target_db, paths, morphing_range)`` per sweep point."""
        base = {SINR_AXIS: self.sinr_target_db, PATH_AXIS: self.paths,
                RANGE_AXIS: self.morphing_range}
        if self.convergence_mode:
            return [(None, base[SINR_AXIS], base[PATH_AXIS], base[RANGE_AXIS])]
        out = []
        for v in self.values:
            p = dict(base, **{self.axis: v})
            out.append((v, p[SINR_AXIS], p[PATH_AXIS], p[RANGE_AXIS]))
        return out

    def to_dict(self) -> dict:
        """Nested mapping that :meth:`from_dict` turns back into an equal config."""
        out = {sec: {} for sec in SECTIONS}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[_FIELDS[f.name][0]][f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: Optional["ExperimentConfig"] = None
                  ) -> "ExperimentConfig":
        """Overlay a nested mapping on ``base`` (the defaults if omitted)."""
        if not isinstance(data, Mapping):
            raise ConfigError("<root>", "expected a table of sections")
        kw = dataclasses.asdict(base) if base is not None else {}
        for section, body in data.items():
            if section not in SECTIONS:
                raise ConfigError(section, f"unknown section; expected one of {list(SECTIONS)}")
            if not isinstance(body, Mapping):
                raise ConfigError(section, "expected a table")
            for name, value in body.items():
                if name not in _FIELDS or _FIELDS[name][0] != section:
                    raise ConfigError(f"{section}.{name}", "unknown field")
                kw[name] = value
        sweep = data.get("sweep", {})
        if sweep.get("axis") == NO_SWEEP and "values" not in sweep:
            kw["values"] = ()
        return cls(**kw)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read a TOML config, or a JSON result sidecar (its ``config`` entry)."""
    path = os.fspath(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, Mapping) and "config" in data:
            data = data["config"]
    else:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError("<file>", f"cannot parse {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data, base)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    sweep_value: Any
    scheme: str
    power_w: Optional[float]
    iterations: int = 0
    converged: bool = False
    error: Optional[str] = None
    powers_w: Optional[tuple] = field(default=None, repr=False)
    shapes: Optional[tuple] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_json(self) -> dict:
        d = {"trial": self.trial, "seed": self.seed, "sweep_value": self.sweep_value,
             "scheme": self.scheme, "ok": self.ok, "power_w": self.power_w,
             "iterations": self.iterations, "converged": self.converged, "error": self.error}
        if self.powers_w is not None:
            d["powers_w"] = list(self.powers_w)
        return d


@dataclass(frozen=True)
class PointSummary:
    sweep_value: Any
    scheme: str
    mean_power_dbm: float
    std_power_dbm: float
    trials_ok: int
    trials_failed: int


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    summaries: list
    records: list = field(repr=False)

    def summary(self, sweep_value, scheme) -> PointSummary:
        for s in self.summaries:
            if s.sweep_value == sweep_value and s.scheme == scheme:
                return s
        raise KeyError((sweep_value, scheme))

    def powers_w(self, sweep_value, scheme) -> np.ndarray:
        """Per-trial power in watts, NaN for failed trials, in trial order."""
        return np.array([r.power_w if r.ok else np.nan for r in self.records
                         if r.sweep_value == sweep_value and r.scheme == scheme])


def sample_realization(cfg: ExperimentConfig, seed: int, n_paths: int):
    """User link budget and channel realization drawn from ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    distances = sample_user_positions(rng, cfg.scenario())
    link = make_link_budget(distances, cfg.reference_distance, cfg.path_loss_exponent,
                            cfg.wavelength, noise_power(cfg.noise_density_dbm_hz, cfg.bandwidth_hz))
    env = sample_environment(rng, cfg.scenario(), n_paths, link)
    return link, env


def run_trial(cfg: ExperimentConfig, trial: int) -> list:
    """Every (sweep point, scheme) record of one trial.

    The realization depends only on the seed and the path count, so all
    points of a target or range sweep share one channel draw.
    """
    seed = cfg.seed + trial
    geom = cfg.geometry()
    keep_trace = cfg.convergence_mode
    cache = {}
    out = []
    for value, gamma_db, n_paths, zeta in cfg.points():
        if n_paths not in cache:
            cache[n_paths] = sample_realization(cfg, seed, n_paths)
        link, env = cache[n_paths]
        targets = np.full(cfg.users, 10 ** (gamma_db / 10))
        for scheme in cfg.schemes:
            kind, morph = SCHEMES[scheme]
            try:
                trace = optimize(env, geom, link, targets, cfg.ao_config(kind, morph, zeta))
            except InfeasibleError as exc:
                out.append(TrialRecord(trial, seed, value, scheme, None, error=str(exc)))
                continue
            rec = TrialRecord(trial, seed, value, scheme, trace.final_power, trace.iterations,
                              trace.converged)
            if keep_trace:
                rec = dataclasses.replace(
                    rec, powers_w=tuple(float(p) for p in trace.powers),
                    shapes=tuple(tuple(r.shape / cfg.wavelength) for r in trace.records))
            out.append(rec)
    return out


def _summarize(value, scheme, records) -> PointSummary:
    ok = [transmit_power_dbm(r.power_w) for r in records if r.ok]
    failed = len(records) - len(ok)
    mean = float(np.mean(ok)) if ok else math.nan
    std = float(np.std(ok, ddof=1)) if len(ok) > 1 else math.nan
    return PointSummary(value, scheme, mean, std, len(ok), failed)


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Run all trials, on ``workers`` processes when more than one."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if workers == 1 or cfg.trials == 1:
        per_trial = [run_trial(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.trials)) as pool:
            per_trial = list(pool.map(_run_trial_star, jobs))
    records = [r for trial in per_trial for r in trial]
    summaries = []
    for value, *_ in cfg.points():
        for scheme in cfg.schemes:
            group = [r for r in records if r.sweep_value == value and r.scheme == scheme]
            summaries.append(_summarize(value, scheme, group))
    return SweepResult(cfg, summaries, records)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None


def emit_results(result: SweepResult, out_dir) -> list:
    """Write result files into ``out_dir`` and return their paths.

    Sweep runs produce ``results.csv`` and the ``results.json`` sidecar
    (resolved config, summaries, per-trial records in watts).  Convergence
    runs produce only ``convergence.csv`` with one row per trial and
    iteration; shapes are in wavelengths.
    """
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    if cfg.convergence_mode:
        path = os.path.join(out_dir, CONVERGENCE_CSV)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "iteration", "power_dbm"] + [f"y_{i + 1}" for i in range(cfg.n)])
            for r in result.records:
                if not r.ok:
                    continue
                for it, (p, y) in enumerate(zip(r.powers_w, r.shapes)):
                    w.writerow([r.trial, it, _fmt(transmit_power_dbm(p))] + [_fmt(v) for v in y])
        return [path]

    csv_path = os.path.join(out_dir, RESULTS_CSV)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in result.summaries:
            w.writerow([_fmt(s.sweep_value), s.scheme, _fmt(s.mean_power_dbm),
                        _fmt(s.std_power_dbm), s.trials_ok, s.trials_failed])
    json_path = os.path.join(out_dir, SIDECAR_JSON)
    doc = {
        "config": cfg.to_dict(),
        "summaries": [{**dataclasses.asdict(s),
                       "mean_power_dbm": _finite_or_none(s.mean_power_dbm),
                       "std_power_dbm": _finite_or_none(s.std_power_dbm)}
                      for s in result.summaries],
        "trials": [r.to_json() for r in result.records],
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")
    return [csv_path, json_path]
