"""Surface-shape updates at fixed beamformers.

The surface shape is moved along the gradient of the (weighted) sum of
per-user SINR margins, with backtracking and projection onto the morphing
box ``[0, y_max]^N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .channel import ScatteringEnvironment
from .geometry import FimGeometry, SurfaceShape, direction_cosines, project

STRICT = "strict"
RELAXED = "relaxed"
UNIFORM = "uniform"
DUAL = "dual"


@dataclass(frozen=True)
class MorphConfig:
    """Line-search settings for the surface ascent.

    ``initial_step`` is the largest per-element move of the first trial step,
    in wavelengths; the actual step is ``initial_step * wavelength / max|grad|``.

    ``feasibility``: ``"strict"`` accepts a step only if no user's margin drops
    below ``min(0, starting margin)``, so the incoming beamformers stay
    feasible; ``"relaxed"`` only asks the weighted margin sum to rise.
    ``weighting``: ``"uniform"`` ascends the plain margin sum, ``"dual"``
    weights user ``k``'s margin by the beamformer's power sensitivity.
    """

    initial_step: float = 0.1
    backtrack_factor: float = 0.5
    armijo_constant: float = 1e-4
    max_backtracks: int = 30
    max_ascent_iters: int = 50
    grad_tol: float = 1e-8
    feasibility: str = STRICT
    weighting: str = UNIFORM

    def __post_init__(self):
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if not 0 < self.armijo_constant < 1:
            raise ValueError("armijo_constant must be in (0, 1)")
        if self.max_backtracks < 0 or self.max_ascent_iters < 0:
            raise ValueError("iteration budgets must be non-negative")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be non-negative")
        if self.feasibility not in (STRICT, RELAXED):
            raise ValueError(f"feasibility must be {STRICT!r} or {RELAXED!r}")
        if self.weighting not in (UNIFORM, DUAL):
            raise ValueError(f"weighting must be {UNIFORM!r} or {DUAL!r}")


@dataclass(frozen=True)
class MarginReport:
    margins: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.margins))

    @property
    def feasible(self) -> bool:
        return bool(np.min(self.margins) >= 0)


@dataclass(frozen=True)
class AscentStep:
    y: np.ndarray = field(repr=False)
    objective: float
    min_margin: float
    step: float
    backtracks: int
    direction: str


class MorphResult(NamedTuple):
    shape: SurfaceShape
    margins: MarginReport
    trace: list


class MarginProblem:
    """Margins and their gradients for one channel realization and fixed ``W``.

    Everything that does not depend on the surface shape is computed once.
    """

    def __init__(self, env: ScatteringEnvironment, geom: FimGeometry, W, noise, targets):
        W = np.ascontiguousarray(W, dtype=complex)
        k = env.user_count
        if W.shape != (geom.n, k):
            raise ValueError(f"beamformers must be {(geom.n, k)}, got {W.shape}")
        noise = np.broadcast_to(np.asarray(noise, dtype=float), (k,))
        targets = np.broadcast_to(np.asarray(targets, dtype=float), (k,))
        ux, uy, uz = direction_cosines(env.azimuth, env.elevation)
        self.kappa = geom.wavenumber
        self.phase0 = np.ascontiguousarray(self.kappa * (np.outer(geom.x, ux) + np.outer(geom.z, uz)))
        self.uy = np.ascontiguousarray(uy)
        self.alpha = np.ascontiguousarray(env.gains)
        self.W = W
        self.inv_gs = np.ascontiguousarray(1.0 / (targets * noise))
        self.inv_s = np.ascontiguousarray(1.0 / noise)
        self.n = geom.n

    def margins(self, y) -> np.ndarray:
        y = np.ascontiguousarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError(f"shape has {y.size} elements, geometry has {self.n}")
        return kernels.evaluate(self.phase0, self.uy, self.kappa, y, self.alpha, self.W,
                                self.inv_gs, self.inv_s, False)[0]

    def margins_and_gradients(self, y):
        """Per-user margins ``(K,)`` and per-user gradients ``(N, K)``."""
        y = np.ascontiguousarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError(f"shape has {y.size} elements, geometry has {self.n}")
        return kernels.evaluate(self.phase0, self.uy, self.kappa, y, self.alpha, self.W,
                                self.inv_gs, self.inv_s, True)


def sinr_margins(H, W, noise, targets) -> MarginReport:
    H = np.asarray(H, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if H.shape != W.shape:
        raise ValueError(f"channel {H.shape} and beamformer {W.shape} shapes differ")
    k = H.shape[1]
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (k,))
    targets = np.broadcast_to(np.asarray(targets, dtype=float), (k,))
    P = np.abs(H.conj().T @ W) ** 2
    sig = np.diag(P)
    eps = sig / (targets * noise) - (P.sum(axis=1) - sig) / noise - 1.0
    return MarginReport(eps)


def margin_gradient(env, geom, shape: SurfaceShape, W, noise, targets, weights=None) -> np.ndarray:
    """Gradient of ``sum_k weights[k] * margin_k`` with respect to the shape."""
    _, grads = MarginProblem(env, geom, W, noise, targets).margins_and_gradients(shape.y)
    if weights is None:
        return grads.sum(axis=1)
    return grads @ np.asarray(weights, dtype=float)


def _tangent_bounds(y, y_max, tol):
    lo = np.where(y <= tol, 0.0, -1.0)
    hi = np.where(y >= y_max - tol, 0.0, 1.0)
    return lo, hi


def common_ascent_direction(grads, objective_grad, y, y_max, margins, active_tol=1e-6):
    """Direction raising the objective and every near-active margin to first order.

    Solves ``max t`` subject to ``g . d >= t`` for the objective gradient and
    each active user's margin gradient, with ``|d| <= 1`` and ``d`` pointing
    into the box at bound coordinates.  Returns ``None`` when no such
    direction exists.
    """
    n = y.size
    lo, hi = _tangent_bounds(y, y_max, 1e-15 * max(y_max, 1.0))
    active = margins <= active_tol
    rows = np.column_stack([objective_grad, grads[:, active]]).T
    scale = np.abs(rows).max()
    if scale == 0 or np.all(lo == hi):
        return None
    rows = rows / scale
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.column_stack([-rows, np.ones(rows.shape[0])]),
                  b_ub=np.zeros(rows.shape[0]),
                  bounds=list(zip(lo, hi)) + [(None, None)], method="highs")
    if res.status != 0 or -res.fun <= 1e-9:
        return None
    return res.x[:n]


def _projected_grad_norm(g, y, y_max):
    pg = g.copy()
    pg[(y <= 0) & (g < 0)] = 0.0
    pg[(y >= y_max) & (g > 0)] = 0.0
    return np.abs(pg).max() if pg.size else 0.0


def morph_ascent(env: ScatteringEnvironment, geom: FimGeometry, shape0: SurfaceShape, W, noise,
                 targets, cfg: Optional[MorphConfig] = None, weights=None) -> MorphResult:
    """Projected gradient ascent on the weighted margin sum at fixed ``W``.

    Each iteration tries ``clamp(y + mu * grad)`` with ``mu`` shrinking
    geometrically until the projected Armijo test passes (and, in strict
    mode, every margin stays above ``min(0, min margin at shape0)``).  In
    strict mode a rejected gradient step falls back to a common ascent
    direction of all tight users.  Returns ``shape0`` itself when no step
    is accepted.
    """
    cfg = cfg or MorphConfig()
    problem = MarginProblem(env, geom, W, noise, targets)
    wts = np.ones(env.user_count) if weights is None else np.asarray(weights, dtype=float)
    if wts.shape != (env.user_count,) or np.any(wts < 0):
        raise ValueError("weights must be K non-negative values")
    wts = wts / wts.mean() if wts.sum() > 0 else np.ones(env.user_count)
    y_max = shape0.y_max
    strict = cfg.feasibility == STRICT

    y = shape0.y.copy()
    eps, grads = problem.margins_and_gradients(y)
    floor = min(0.0, float(eps.min()))
    trace = []
    if y_max == 0:
        return MorphResult(shape0, MarginReport(eps), trace)

    for _ in range(cfg.max_ascent_iters):
        g = grads @ wts
        if _projected_grad_norm(g, y, y_max) < cfg.grad_tol:
            break
        obj = float(eps @ wts)
        accepted = None
        for label in ("gradient", "common") if strict else ("gradient",):
            if label == "gradient":
                d = g
            else:
                d = common_ascent_direction(grads, g, y, y_max, eps)
                if d is None:
                    break
            mu = cfg.initial_step * geom.wavelength / np.abs(d).max()
            for b in range(cfg.max_backtracks + 1):
                cand = project(y + mu * d, y_max)
                moved = cand - y
                if np.any(moved != 0):
                    cand_eps = problem.margins(cand)
                    gain = float(cand_eps @ wts) - obj
                    ok = gain > 0 and gain >= cfg.armijo_constant * float(g @ moved)
                    if ok and strict:
                        ok = cand_eps.min() >= floor
                    if ok:
                        accepted = (cand, mu, b, label)
                        break
                mu *= cfg.backtrack_factor
            if accepted is not None:
                break
        if accepted is None:
            break
        y, mu, b, label = accepted
        eps, grads = problem.margins_and_gradients(y)
        trace.append(AscentStep(y.copy(), float(eps @ wts), float(eps.min()), mu, b, label))

    if not trace:
        return MorphResult(shape0, MarginReport(eps), trace)
    return MorphResult(SurfaceShape(y, y_max), MarginReport(eps), trace)
