"""Balanced truncation of stable state-space models.

Controllability and observability Gramians come from the continuous-time
Lyapunov equations; balancing uses the square-root method (symmetric
factors of both Gramians, one SVD).  The similarity transform is always
completed to full size, so ``balance`` preserves the state count and the
eigenvalue multiset: states outside the minimal subspace carry zero Hankel
singular values and are removed by ``truncate``, never silently inside
``balance``.  For a minimal system the balanced Gramians are both equal to
diag(hsv); a state that is reachable but unobservable (or the converse)
balances only in the leading minimal block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IllConditionedError, UnstableSystemError
from .realization import StateSpaceModel, eval_tf

# Relative floor below which a Hankel singular value counts as zero.
HSV_RANK_TOL = 1e-12

# Default retention threshold on hsv[i] / hsv[0].
DEFAULT_SIGMA_TOL = 5e-4


@dataclass(frozen=True)
class BalancedModel:
    """A balanced realization plus its Hankel structure.

    ``ss`` has the same state count and eigenvalues as the input system;
    ``hsv`` is the full-length, non-increasing Hankel singular value
    vector (zeros flag non-minimal states); ``transform`` maps balanced
    coordinates to original ones (x_orig = T @ x_bal) with
    ``inverse_transform`` its inverse; ``minimal_order`` counts the
    numerically nonzero Hankel singular values.
    """

    ss: StateSpaceModel
    hsv: np.ndarray
    transform: np.ndarray
    inverse_transform: np.ndarray
    minimal_order: int


def _hurwitz_check(ss: StateSpaceModel) -> np.ndarray:
    eig = ss.eigenvalues()
    bad = eig[eig.real >= 0.0]
    if len(bad):
        raise UnstableSystemError(
            f"Gramians need a strictly Hurwitz A; offending eigenvalues: "
            f"{', '.join(str(b) for b in bad)}"
        )
    return eig


def _lyap_residual_check(
    a: np.ndarray, w: np.ndarray, q: np.ndarray, eig: np.ndarray, which: str
) -> None:
    resid = np.linalg.norm(a @ w + w @ a.T + q)
    bound = 1e-8 * (np.linalg.norm(a) * np.linalg.norm(w) + np.linalg.norm(q))
    if resid > max(bound, 1e-300):
        sums = eig[:, None] + np.conj(eig)[None, :]
        sep = np.abs(sums).min()
        raise IllConditionedError(
            f"{which} Lyapunov solve residual {resid:.3g} exceeds {bound:.3g}; "
            f"the operator is near singular (min |lambda_i + conj(lambda_j)| "
            f"= {sep:.3g})"
        )


def gramians(ss: StateSpaceModel) -> tuple[np.ndarray, np.ndarray]:
    """Controllability and observability Gramians of a stable system.

    Solves A Wc + Wc A^T = -B B^T and A^T Wo + Wo A = -C^T C, symmetrizes
    the results, and verifies the solve residuals; an unstable A raises
    UnstableSystemError, a near-singular Lyapunov operator raises
    IllConditionedError with the eigenvalue-separation note.
    """
    eig = _hurwitz_check(ss)
    a = ss.a
    qc = ss.b @ ss.b.T
    qo = ss.c.T @ ss.c
    wc = scipy.linalg.solve_continuous_lyapunov(a, -qc)
    wo = scipy.linalg.solve_continuous_lyapunov(a.T, -qo)
    wc = 0.5 * (wc + wc.T)
    wo = 0.5 * (wo + wo.T)
    _lyap_residual_check(a, wc, qc, eig, "controllability")
    _lyap_residual_check(a.T, wo, qo, eig, "observability")
    return wc, wo


def _psd_factor(w: np.ndarray) -> np.ndarray:
    """Symmetric factor L with W = L L^T; tolerates singular W by clipping
    the (tiny negative) trailing eigenvalues a Cholesky would reject."""
    vals, vecs = scipy.linalg.eigh(w)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)[np.newaxis, :]


def balance(ss: StateSpaceModel) -> BalancedModel:
    """Square-root balancing with a completed similarity transform.

    The leading ``minimal_order`` balanced states carry the nonzero Hankel
    singular values in decreasing order; remaining directions are filled
    with an orthonormal basis of the observability factor's null space, so
    the transform is always invertible and eigenvalues are preserved.
    """
    _hurwitz_check(ss)
    n = ss.n_states
    wc, wo = gramians(ss)
    lc = _psd_factor(wc)
    lo = _psd_factor(wo)
    u, sv, vt = np.linalg.svd(lo.T @ lc)
    rank = int(np.sum(sv > HSV_RANK_TOL * sv[0])) if sv.size and sv[0] > 0.0 else 0
    if rank:
        scale = 1.0 / np.sqrt(sv[:rank])
        t1 = lc @ vt[:rank].T * scale[np.newaxis, :]
        s1 = (u[:, :rank] * scale[np.newaxis, :]).T @ lo.T
    else:
        t1 = np.zeros((n, 0))
        s1 = np.zeros((0, n))
    if rank < n:
        # Complete with an orthonormal basis of null(s1); s1 @ t2 = 0 keeps
        # the inverse block-triangular, so s1 stays the top of inv(t).
        if rank:
            _, _, vt_s = np.linalg.svd(s1)
            t2 = vt_s[rank:].T
        else:
            t2 = np.eye(n)
        t = np.hstack([t1, t2])
    else:
        t = t1
    try:
        t_inv = np.linalg.inv(t)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            f"balancing transform is singular (cond ~ {np.linalg.cond(t):.3g})"
        ) from exc
    balanced = StateSpaceModel(
        t_inv @ ss.a @ t,
        t_inv @ ss.b,
        ss.c @ t,
        ss.d,
        tuple(f"z{i}" for i in range(n)),
        dict(ss.meta),
    )
    hsv = sv.copy()
    hsv.setflags(write=False)
    return BalancedModel(balanced, hsv, t, t_inv, rank)


def truncate(bal: BalancedModel, sigma_tol: float = DEFAULT_SIGMA_TOL) -> StateSpaceModel:
    """Drop balanced states whose Hankel singular value falls below
    ``sigma_tol`` relative to the largest (and any numerically zero ones).

    The reduced model's frequency response deviates from the balanced one
    by at most twice the discarded Hankel sum; the bound value, the
    discarded count, and the threshold are recorded in the result's meta.
    When every state falls below the threshold the result has zero states
    (pure feedthrough) and is flagged ``all_truncated``.
    """
    if not 0.0 < sigma_tol < 1.0:
        raise ValueError(f"sigma_tol must be in (0, 1), got {sigma_tol}")
    hsv = bal.hsv
    n = len(hsv)
    if n == 0 or hsv[0] <= 0.0:
        keep = 0
    else:
        keep = int(np.sum(hsv / hsv[0] >= sigma_tol))
        keep = min(keep, bal.minimal_order)
    ss = bal.ss
    meta = {
        **ss.meta,
        "sigma_tol": sigma_tol,
        "discarded_states": int(n - keep),
        "deviation_bound": float(2.0 * hsv[keep:].sum()),
    }
    if keep == 0:
        meta["all_truncated"] = True
    return StateSpaceModel(
        ss.a[:keep, :keep],
        ss.b[:keep, :],
        ss.c[:, :keep],
        ss.d,
        ss.state_labels[:keep],
        meta,
    )


def probe_frequencies(base: np.ndarray) -> np.ndarray:
    """Evaluation grid for reduction checks: the base angular grid plus
    three log-spaced decades on each side, twenty points per decade."""
    base = np.asarray(base, dtype=np.float64)
    if base.ndim != 1 or len(base) == 0 or base[0] <= 0.0:
        raise ValueError("base grid must be a non-empty positive 1-d array")
    lo, hi = base[0], base[-1]
    below = lo * np.logspace(-3.0, 0.0, 61)[:-1]
    above = hi * np.logspace(0.0, 3.0, 61)[1:]
    return np.unique(np.concatenate([below, base, above]))


def response_deviation(
    ss_a: StateSpaceModel, ss_b: StateSpaceModel, omega: np.ndarray
) -> float:
    """Largest spectral-norm gap between two transfer matrices over a grid."""
    worst = 0.0
    for w in np.asarray(omega, dtype=np.float64):
        diff = eval_tf(ss_a, 1j * w) - eval_tf(ss_b, 1j * w)
        worst = max(worst, float(np.linalg.norm(diff, 2)))
    return worst


def hsv_csv(hsv: np.ndarray, path: str) -> None:
    """Write Hankel singular values as ``index,hsv,cumulative_ratio``;
    the ratio is the running share of the total Hankel mass."""
    hsv = np.asarray(hsv, dtype=np.float64)
    total = hsv.sum()
    running = np.cumsum(hsv)
    lines = ["index,hsv,cumulative_ratio"]
    for i, v in enumerate(hsv):
        ratio = running[i] / total if total > 0.0 else 0.0
        lines.append(f"{i},{float(v)!r},{float(ratio)!r}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
