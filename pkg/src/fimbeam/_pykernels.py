"""Pure numpy versions of the hot kernels.

Same signatures as the compiled ``_ckernels`` module; used when the
extension is not built or ``FIMBEAM_PURE_PYTHON`` is set.
"""

import numpy as np
import scipy.linalg


def duality_multipliers(Ht, gamma, tol, max_iter, limit):
    """Uplink power fixed point of the duality-based MMSE beamformer.

    ``Ht`` holds noise-normalized channels as columns and
    ``S(lam) = I + sum_k lam_k h_k h_k^H``.  At the solution
    ``lam_k h_k^H S(lam)^{-1} h_k = gamma_k / (1 + gamma_k)``.  Iterates
    ``lam_k <- gamma_k / (h_k^H S_{-k}^{-1} h_k)`` from ``lam = 0``, where
    ``S_{-k}`` leaves user ``k`` out; with ``q_k = h_k^H S^{-1} h_k`` that is
    ``gamma_k (1 - lam_k q_k) / q_k``.  Returns ``(lam, iterations, converged)``;
    gives up as soon as a multiplier exceeds ``limit`` (or is not finite),
    which is how infeasible targets show up.
    """
    n, k = Ht.shape
    lam = np.zeros(k)
    eye = np.eye(n, dtype=complex)
    for it in range(1, max_iter + 1):
        cov = eye + (Ht * lam) @ Ht.conj().T
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            # only happens once the multipliers have run off to ~1e16
            return lam, it, False
        v = scipy.linalg.solve_triangular(chol, Ht, lower=True)
        q = np.sum(v.real**2 + v.imag**2, axis=0)
        new = gamma * (1.0 - lam * q) / q
        if not np.all(new <= limit):
            return new, it, False
        done = np.max(np.abs(new - lam) / new) < tol
        lam = new
        if done:
            return lam, it, True
    return lam, max_iter, False


def evaluate(phase0, uy, kappa, y, alpha, W, inv_gs, inv_s, want_grad):
    """SINR margins of every user and, optionally, their gradients in ``y``.

    ``phase0`` is the ``(N, L)`` y-independent steering phase, ``uy`` the
    per-path y direction cosine.  Margin of user ``k``:
    ``inv_gs[k] |h_k^H w_k|^2 - inv_s[k] sum_{j != k} |h_k^H w_j|^2 - 1``.
    The gradient is returned per user as an ``(N, K)`` array.
    """
    A = np.exp(1j * (phase0 + kappa * np.outer(y, uy)))
    H = A @ alpha.T
    S = H.conj().T @ W
    P = S.real**2 + S.imag**2
    sig = np.diag(P)
    eps = inv_gs * sig - inv_s * (P.sum(axis=1) - sig) - 1.0
    if not want_grad:
        return eps, None
    Hs = (A * uy) @ alpha.T
    C = -inv_s[:, None] * S
    C[np.diag_indices_from(C)] = inv_gs * np.diag(S)
    grad = -2.0 * kappa * np.imag(Hs * (W.conj() @ C.T))
    return eps, grad
