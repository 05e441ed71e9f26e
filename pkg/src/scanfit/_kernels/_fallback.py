"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or explicitly disabled via
the SCANFIT_PURE_PYTHON environment variable).  Semantics must match
``scanfit._kernels._core`` bit-for-bit at the contract level; the parity
test suite holds both to the same results within floating tolerance.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# Basis column kinds.  A conjugate pair occupies two adjacent columns.
KIND_REAL = 0
KIND_PAIR_FIRST = 1
KIND_PAIR_SECOND = 2


def rational_eval(
    s: np.ndarray, poles: np.ndarray, residues: np.ndarray, d_term: float
) -> np.ndarray:
    """Evaluate sum(residues[n] / (s - poles[n])) + d_term elementwise."""
    s = np.asarray(s, dtype=np.complex128)
    if len(poles) == 0:
        return np.full(s.shape, complex(d_term), dtype=np.complex128)
    terms = residues[np.newaxis, :] / (s[:, np.newaxis] - poles[np.newaxis, :])
    return terms.sum(axis=1) + d_term


def partial_fraction_basis(
    s: np.ndarray, poles: np.ndarray, kinds: np.ndarray
) -> np.ndarray:
    """Real-block partial-fraction basis matrix, shape (len(s), len(poles)).

    Column n is 1/(s - p_n) for a real pole; a conjugate pair contributes
    the columns 1/(s-p) + 1/(s-p̄) and j/(s-p) - j/(s-p̄) so that a real
    coefficient vector represents a conjugate-symmetric residue set.
    """
    s = np.asarray(s, dtype=np.complex128)
    inv = 1.0 / (s[:, np.newaxis] - poles[np.newaxis, :])
    out = np.empty((len(s), len(poles)), dtype=np.complex128)
    for n, kind in enumerate(kinds):
        if kind == KIND_REAL:
            out[:, n] = inv[:, n]
        elif kind == KIND_PAIR_FIRST:
            out[:, n] = inv[:, n] + inv[:, n + 1]
        else:
            out[:, n] = 1j * (inv[:, n - 1] - inv[:, n])
    return out


def affine_propagate(
    step_matrix: np.ndarray,
    step_offset: np.ndarray,
    x0: np.ndarray,
    stride: int,
    n_records: int,
) -> np.ndarray:
    """Iterate x <- M x + v, recording the state every ``stride`` steps.

    Record 0 is x0 itself; record k is the state after k*stride steps.
    Returns an (n_records, len(x0)) array.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    out = np.empty((n_records, len(x0)), dtype=np.float64)
    for rec in range(n_records):
        out[rec] = x
        if rec == n_records - 1:
            break
        for _ in range(stride):
            x = step_matrix @ x + step_offset
    return out
