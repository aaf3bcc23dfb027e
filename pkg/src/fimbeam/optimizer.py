"""Alternating optimization of beamformers and surface shape.

Each outer iteration solves the beamformers for the current shape, then
moves the shape at fixed beamformers.  Two surface updates are available:

``"power"`` (default)
    One projected step along the margin gradient, weighted by the
    beamformer's power sensitivities.  The step length is found by
    backtracking on the re-solved transmit power and carried over to the
    next outer iteration.
``"margin"``
    Run :func:`~fimbeam.morphing.morph_ascent` to near-stationarity of the
    margin sum at fixed beamformers, then re-solve.  A guard bisects the move
    back towards the previous shape if the re-solved power would rise.

Either way the recorded power sequence never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .beamforming import MMSE, ZF, BeamformingSolution, InfeasibleError, solve
from .channel import LinkBudget, ScatteringEnvironment, channel_matrix
from .geometry import FimGeometry, SurfaceShape, project
from .morphing import DUAL, MarginProblem, MarginReport, MorphConfig, morph_ascent

POWER = "power"
MARGIN = "margin"


@dataclass(frozen=True)
class AoConfig:
    max_outer_iters: int = 100
    convergence_db: float = -30.0
    beamformer_kind: str = MMSE
    morph: MorphConfig = field(default_factory=lambda: MorphConfig(weighting=DUAL))
    morph_enabled: bool = True
    y_max: float = 0.0
    surface_update: str = POWER
    fp_tol: float = 1e-10
    fp_max_iter: int = 500
    guard_backtracks: int = 10
    step_growth: float = 2.0

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.beamformer_kind not in (MMSE, ZF):
            raise ValueError(f"beamformer_kind must be {MMSE!r} or {ZF!r}")
        if self.y_max < 0:
            raise ValueError("y_max must be non-negative")
        if self.surface_update not in (POWER, MARGIN):
            raise ValueError(f"surface_update must be {POWER!r} or {MARGIN!r}")
        if self.step_growth < 1:
            raise ValueError("step_growth must be >= 1")
        if self.guard_backtracks < 0:
            raise ValueError("guard_backtracks must be non-negative")

    @property
    def convergence_ratio(self) -> float:
        return 10 ** (self.convergence_db / 10)


@dataclass(frozen=True)
class IterationRecord:
    power: float
    shape: np.ndarray = field(repr=False)
    margins: Optional[MarginReport] = field(repr=False)
    fp_iterations: int
    morph_steps: int
    backtracks: int = 0


@dataclass(frozen=True)
class OptimizationTrace:
    records: list = field(repr=False)
    solution: BeamformingSolution = field(repr=False)
    shape: SurfaceShape
    converged: bool

    @property
    def iterations(self) -> int:
        """Outer iterations after the initial flat-surface solve."""
        return len(self.records) - 1

    @property
    def powers(self) -> np.ndarray:
        return np.array([r.power for r in self.records])

    @property
    def final_power(self) -> float:
        return self.solution.total_power


def transmit_power_dbm(power) -> float:
    """Total transmit power in dBm; zero power maps to ``-inf``."""
    watts = power.total_power if isinstance(power, BeamformingSolution) else float(power)
    if watts < 0:
        raise ValueError("transmit power must be non-negative")
    if watts == 0:
        return -math.inf
    return 10 * math.log10(watts) + 30


class _Solver:
    def __init__(self, env, geom, noise, targets, cfg):
        self.env, self.geom, self.noise, self.targets, self.cfg = env, geom, noise, targets, cfg

    def __call__(self, y, iteration):
        H = channel_matrix(self.env, self.geom, SurfaceShape(y, self.cfg.y_max))
        cfg = self.cfg
        try:
            if cfg.beamformer_kind == MMSE:
                return solve(MMSE, H, self.noise, self.targets,
                             fp_tol=cfg.fp_tol, fp_max_iter=cfg.fp_max_iter)
            return solve(ZF, H, self.noise, self.targets)
        except InfeasibleError as exc:
            raise InfeasibleError(f"{exc} (outer iteration {iteration})", iteration=iteration,
                                  **exc.diagnostics) from exc

    def probe(self, y, iteration):
        # candidate shapes that break the solve are simply rejected
        try:
            return self(y, iteration)
        except InfeasibleError:
            return None


def _power_step(solver, problem, y, sol, step, cfg, it):
    morph = cfg.morph
    _, grads = problem.margins_and_gradients(y)
    sensitivity = grads @ sol.margin_weights
    direction = sensitivity if morph.weighting == DUAL else grads.sum(axis=1)
    scale = np.abs(direction).max()
    if scale == 0:
        return None
    lam = solver.geom.wavelength
    for b in range(morph.max_backtracks + 1):
        cand = project(y + step * lam / scale * direction, cfg.y_max)
        moved = cand - y
        if np.any(moved != 0):
            new = solver.probe(cand, it)
            if new is not None:
                required = morph.armijo_constant * max(float(sensitivity @ moved), 0.0)
                if new.total_power < sol.total_power - required:
                    return cand, new, step, b
        step *= morph.backtrack_factor
    return None


def _margin_step(solver, env, geom, y, sol, cfg, it):
    weights = sol.margin_weights if cfg.morph.weighting == DUAL else None
    res = morph_ascent(env, geom, SurfaceShape(y, cfg.y_max), sol.W, solver.noise,
                       solver.targets, cfg.morph, weights)
    if not res.trace:
        return None
    cand = res.shape.y
    for b in range(cfg.guard_backtracks + 1):
        new = solver.probe(cand, it)
        if new is not None and new.total_power <= sol.total_power:
            return cand, new, len(res.trace), b
        cand = project((y + cand) / 2, cfg.y_max)
    return None


def optimize(env: ScatteringEnvironment, geom: FimGeometry, link: LinkBudget, targets,
             cfg: Optional[AoConfig] = None) -> OptimizationTrace:
    """Alternate beamformer solves and surface updates starting from a flat surface."""
    cfg = cfg or AoConfig()
    noise = link.noise_powers
    targets = np.broadcast_to(np.asarray(targets, dtype=float), (env.user_count,)).copy()
    solver = _Solver(env, geom, noise, targets, cfg)

    y = np.zeros(geom.n)
    sol = solver(y, 0)
    records = [IterationRecord(sol.total_power, y.copy(), None, sol.iterations, 0)]
    if not cfg.morph_enabled or cfg.y_max == 0:
        return OptimizationTrace(records, sol, SurfaceShape(y, cfg.y_max), True)

    converged = False
    step = cfg.morph.initial_step
    for it in range(1, cfg.max_outer_iters + 1):
        problem = MarginProblem(env, geom, sol.W, noise, targets)
        if cfg.surface_update == POWER:
            out = _power_step(solver, problem, y, sol, step, cfg, it)
        else:
            out = _margin_step(solver, env, geom, y, sol, cfg, it)
        if out is None:
            converged = True
            break
        if cfg.surface_update == POWER:
            y_new, new, step, backtracks = out
            steps = 1
            if backtracks == 0:
                step *= cfg.step_growth
        else:
            y_new, new, steps, backtracks = out
        margins = MarginReport(problem.margins(y_new))
        decrease = (sol.total_power - new.total_power) / sol.total_power
        y, sol = y_new, new
        records.append(IterationRecord(sol.total_power, y.copy(), margins, sol.iterations,
                                       steps, backtracks))
        if decrease < cfg.convergence_ratio:
            converged = True
            break
    return OptimizationTrace(records, sol, SurfaceShape(y, cfg.y_max), converged)
