"""Downlink beamformers for SINR-constrained transmit power minimization.

``mmse_beamformer`` returns the optimal solution through uplink-downlink
duality; ``zf_beamformer`` is the zero-forcing baseline that nulls all
inter-user interference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels

MMSE = "mmse"
ZF = "zf"

MULTIPLIER_LIMIT = 1e12
NEGATIVE_POWER_TOL = 1e-12
ZF_CONDITION_LIMIT = 1e12


class InfeasibleError(RuntimeError):
    """The SINR targets cannot be met (or the solve is numerically unusable).

    ``diagnostics`` carries the fixed-point iteration count and the
    condition number of the power-allocation matrix when available.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SinrReport:
    sinr: np.ndarray
    signal: np.ndarray
    interference: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True)
class BeamformingSolution:
    W: np.ndarray = field(repr=False)
    powers: np.ndarray
    directions: np.ndarray = field(repr=False)
    multipliers: Optional[np.ndarray]
    method: str
    iterations: int = 0

    @property
    def total_power(self) -> float:
        return float(np.sum(self.powers))

    @property
    def margin_weights(self) -> np.ndarray:
        """First-order sensitivity of total power to each user's SINR margin.

        Raising user ``k``'s margin by ``d_k`` at fixed beamformers lowers the
        re-optimized power by about ``sum(weights * d)``.  For MMSE these are
        the (noise-normalized) duality multipliers, for ZF the per-user powers.
        """
        if self.multipliers is not None:
            return self.multipliers
        return self.powers


def _as_inputs(H, noise, targets):
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = H[:, None]
    k = H.shape[1]
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (k,)).copy()
    targets = np.broadcast_to(np.asarray(targets, dtype=float), (k,)).copy()
    return H, noise, targets


def sinr_report(H, W, noise) -> SinrReport:
    H = np.asarray(H, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if H.ndim == 1:
        H, W = H[:, None], W.reshape(-1, 1)
    if H.shape != W.shape:
        raise ValueError(f"channel {H.shape} and beamformer {W.shape} shapes differ")
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (H.shape[1],)).copy()
    gains = np.abs(H.conj().T @ W) ** 2
    signal = np.diag(gains).copy()
    interference = gains.sum(axis=1) - signal
    return SinrReport(signal / (interference + noise), signal, interference, noise)


def _fix_phase(D, H):
    # rotate each column so that h_k^H d_k is real and non-negative
    inner = np.einsum("nk,nk->k", H.conj(), D)
    mag = np.abs(inner)
    rot = np.where(mag > 0, mag / np.where(mag > 0, inner, 1.0), 1.0)
    return D * rot


def mmse_beamformer(H, noise, targets, fp_tol: float = 1e-10,
                    fp_max_iter: int = 500) -> BeamformingSolution:
    H, noise, targets = _as_inputs(H, noise, targets)
    if np.any(targets <= 0):
        raise ValueError("SINR targets must be positive")
    Ht = H / np.sqrt(noise)
    lam, iters, converged = kernels.duality_multipliers(Ht, targets, fp_tol, fp_max_iter,
                                                       MULTIPLIER_LIMIT)
    if not converged:
        if not np.all(lam <= MULTIPLIER_LIMIT):
            raise InfeasibleError(f"multiplier exceeded {MULTIPLIER_LIMIT:g}", iterations=iters)
        raise InfeasibleError(
            f"duality fixed point did not converge in {fp_max_iter} iterations",
            iterations=iters)

    n = H.shape[0]
    cov = np.eye(n, dtype=complex) + (Ht * lam) @ Ht.conj().T
    D = scipy.linalg.cho_solve(scipy.linalg.cho_factor(cov, lower=True), Ht)
    D = _fix_phase(D / np.linalg.norm(D, axis=0), H)

    G = np.abs(H.conj().T @ D) ** 2
    M = -G
    M[np.diag_indices_from(M)] = np.diag(G) / targets
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1 / np.finfo(float).eps:
        raise InfeasibleError("power allocation matrix is singular",
                              iterations=iters, condition=cond)
    p = np.linalg.solve(M, noise)
    if np.any(p < -NEGATIVE_POWER_TOL):
        raise InfeasibleError("negative power in allocation",
                              iterations=iters, condition=cond)
    p = np.maximum(p, 0.0)
    return BeamformingSolution(D * np.sqrt(p), p, D, lam, MMSE, iters)


def zf_beamformer(H, noise, targets) -> BeamformingSolution:
    H, noise, targets = _as_inputs(H, noise, targets)
    n, k = H.shape
    if k > n:
        raise InfeasibleError(f"zero-forcing needs K <= N, got K={k}, N={n}")
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > ZF_CONDITION_LIMIT:
        raise InfeasibleError(f"channel matrix is rank deficient (condition number {cond:.3g})",
                              condition=cond)
    # H (H^H H)^{-1} == pinv(H)^H for full column rank, without forming H^H H
    V = np.linalg.pinv(H).conj().T
    W = V * np.sqrt(targets * noise)
    p = np.sum(np.abs(W) ** 2, axis=0)
    D = W / np.sqrt(p)
    return BeamformingSolution(W, p, D, None, ZF)


def solve(kind: str, H, noise, targets, **kw) -> BeamformingSolution:
    if kind == MMSE:
        return mmse_beamformer(H, noise, targets, **kw)
    if kind == ZF:
        return zf_beamformer(H, noise, targets)
    raise ValueError(f"unknown beamformer kind {kind!r}")
