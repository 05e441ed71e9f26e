"""Eigenvalue analysis: participation factors, state classification, and
modal decomposition of composed systems.

The eigendecomposition A = R diag(lambda) R^{-1} stores left eigenvectors
as the rows of R^{-1}, so L R = I holds structurally and participation
columns sum to one by construction rather than by normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .realization import StateSpaceModel

TWO_PI = 2.0 * math.pi

# Eigenvector condition number beyond which results are low confidence.
DEFECTIVE_COND = 1e10

# Participation-mass ratio separating white-box from black-box modes.
DEFAULT_DOMINANCE_RATIO = 4.0

# Participation magnitudes below this default are dropped from reports.
DEFAULT_PF_THRESHOLD = 0.005

# Oscillatory bands (label, low Hz, high Hz), in report order.  A mode
# matching several bands reports all of them joined with '/'.
OSCILLATORY_BANDS = (
    ("x_cc", 100.0, 2000.0),
    ("x_vc", 1.0, 100.0),
    ("x_pll", 5.0, 20.0),
    ("x_dp", 0.1, 5.0),
    ("x_vi", 0.1, 5.0),
    ("x_sys", 40.0, 80.0),
)

# Fallback for oscillatory modes outside every band above.
OSCILLATORY_FALLBACK = "x_other"

# Non-oscillatory bands as (upper real-part bound, label); checked in
# order, the last band is open ended.
NON_OSCILLATORY_BANDS = (
    (-500.0, "x_n,il"),
    (-20.0, "x_n,vc"),
    (-2.0, "x_n,syn"),
    (-1.0, "x_n,pc"),
)
NON_OSCILLATORY_FALLBACK = "x_n,oc"


@dataclass(frozen=True)
class Eigendecomposition:
    """Right/left eigenvector pair with conjugate modes adjacent.

    ``left`` is exactly inv(right) (or a pseudo-inverse for a defective
    matrix, in which case ``low_confidence`` is set and participation
    columns are no longer guaranteed to sum to one).
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float
    low_confidence: bool

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)


def eigendecompose(a: np.ndarray) -> Eigendecomposition:
    """Diagonalize a real state matrix with a deterministic mode order.

    Modes sort by ascending real part, then ascending |imag|, with the
    positive-imaginary member of each conjugate pair first.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"state matrix must be square, got {a.shape}")
    if a.shape[0] == 0:
        raise ValueError("state matrix is empty")
    lam, right = np.linalg.eig(a)
    order = np.lexsort((-np.sign(lam.imag), np.abs(lam.imag), lam.real))
    lam = lam[order]
    right = right[:, order]
    low_confidence = False
    condition = float(np.linalg.cond(right))
    try:
        left = np.linalg.solve(right, np.eye(len(lam), dtype=right.dtype))
    except np.linalg.LinAlgError:
        left = np.linalg.pinv(right)
        low_confidence = True
    if not np.isfinite(condition) or condition > DEFECTIVE_COND:
        low_confidence = True
    return Eigendecomposition(lam, right, left, condition, low_confidence)


@dataclass(frozen=True)
class ParticipationMatrix:
    """Complex participation factors, states along rows, modes along
    columns: p[k, j] = left[j, k] * right[k, j]."""

    values: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def column_sums(self) -> np.ndarray:
        return self.values.sum(axis=0)


def participation_matrix(right: np.ndarray, left: np.ndarray) -> ParticipationMatrix:
    """Elementwise product pairing each state's right-eigenvector entry
    with the matching left-eigenvector entry.  Columns sum to the
    diagonal of L R, which is exactly one when L = inv(R)."""
    right = np.asarray(right)
    left = np.asarray(left)
    if right.shape != left.shape or right.ndim != 2:
        raise ValueError(
            f"right {right.shape} and left {left.shape} must be equal square shapes"
        )
    return ParticipationMatrix(left.T * right)


def dominance(
    pf: ParticipationMatrix,
    wb_states: Sequence[int],
    bb_states: Sequence[int],
    ratio: float = DEFAULT_DOMINANCE_RATIO,
) -> tuple[str, ...]:
    """Label each mode wb / bb / hybrid by participation mass.

    A mode is ``bb`` when its black-box participation mass exceeds
    ``ratio`` times the white-box mass, ``wb`` in the transposed case,
    ``hybrid`` otherwise.  An empty group has zero mass, so a system with
    only white-box states labels every mode wb.
    """
    if not ratio > 0.0:
        raise ValueError(f"dominance ratio must be positive, got {ratio}")
    wb = np.asarray(wb_states, dtype=np.intp)
    bb = np.asarray(bb_states, dtype=np.intp)
    if np.intersect1d(wb, bb).size:
        raise ValueError("white-box and black-box state sets overlap")
    mags = pf.magnitudes
    wb_mass = mags[wb].sum(axis=0) if wb.size else np.zeros(mags.shape[1])
    bb_mass = mags[bb].sum(axis=0) if bb.size else np.zeros(mags.shape[1])
    labels = []
    for j in range(mags.shape[1]):
        if bb_mass[j] > ratio * wb_mass[j]:
            labels.append("bb")
        elif wb_mass[j] > ratio * bb_mass[j]:
            labels.append("wb")
        else:
            labels.append("hybrid")
    return tuple(labels)


def classify_state(eigenvalue: complex) -> str:
    """Band label for one mode.

    Oscillatory modes (nonzero imaginary part) classify by frequency
    |Im| / 2pi in Hz against the converter band table; all matching bands
    are reported joined with '/', and a frequency outside every band
    reports the fallback label.  Non-oscillatory modes classify by real
    part alone.
    """
    lam = complex(eigenvalue)
    if lam.imag != 0.0:
        freq = abs(lam.imag) / TWO_PI
        hits = [name for name, lo, hi in OSCILLATORY_BANDS if lo <= freq <= hi]
        return "/".join(hits) if hits else OSCILLATORY_FALLBACK
    for bound, label in NON_OSCILLATORY_BANDS:
        if lam.real < bound:
            return label
    return NON_OSCILLATORY_FALLBACK


@dataclass(frozen=True)
class ModeRecord:
    """Reporting row for one mode."""

    mode_id: int
    eigenvalue: complex
    zeta: float
    freq_hz: float
    dominance: str
    label: str


def mode_records(
    decomp: Eigendecomposition,
    wb_states: Sequence[int] = (),
    bb_states: Sequence[int] | None = None,
    ratio: float = DEFAULT_DOMINANCE_RATIO,
) -> list[ModeRecord]:
    """Build the report rows: damping, frequency, dominance, band label.

    Without an explicit partition every state counts as black box.  The
    damping ratio of a zero eigenvalue is reported as zero.
    """
    n = decomp.n_modes
    if bb_states is None:
        wb = np.asarray(wb_states, dtype=np.intp)
        bb_states = np.setdiff1d(np.arange(n), wb)
    pf = participation_matrix(decomp.right, decomp.left)
    dom = dominance(pf, wb_states, bb_states, ratio)
    records = []
    for j, lam in enumerate(decomp.eigenvalues):
        mag = abs(lam)
        zeta = -lam.real / mag if mag > 0.0 else 0.0
        records.append(
            ModeRecord(
                j,
                complex(lam),
                float(zeta),
                float(abs(lam.imag) / TWO_PI),
                dom[j],
                classify_state(lam),
            )
        )
    return records


# ---------------------------------------------------------------------------
# Modal decomposition


def modal_transform(
    ss: StateSpaceModel, decomp: Eigendecomposition
) -> tuple[np.ndarray, np.ndarray]:
    """Input and output matrices in modal coordinates: (R^{-1} B, C R)."""
    if decomp.right.shape[0] != ss.n_states:
        raise ValueError(
            f"decomposition has {decomp.right.shape[0]} states, model has "
            f"{ss.n_states}"
        )
    return decomp.left @ ss.b, ss.c @ decomp.right


def modal_residue(
    b_modal: np.ndarray,
    c_modal: np.ndarray,
    mode: int,
    in_idx: int,
    out_idx: int,
) -> complex:
    """Coupling residue of one mode in one input/output channel."""
    return complex(c_modal[out_idx, mode] * b_modal[mode, in_idx])


def modal_step_response(
    ss: StateSpaceModel,
    modes: Sequence[int],
    in_idx: int,
    out_idx: int,
    t: np.ndarray,
    include_feedthrough: bool | None = None,
) -> np.ndarray:
    """Unit-step output contribution of a subset of modes.

    Each mode contributes Re[(r_i / lambda_i) (exp(lambda_i t) - 1)]; a
    zero eigenvalue contributes the ramp limit Re[r_i] * t.  The D term is
    added when ``include_feedthrough`` is true, defaulting to true exactly
    when every mode is included (so the full sum reproduces the system
    step response).
    """
    t = np.asarray(t, dtype=np.float64)
    if not 0 <= in_idx < ss.n_inputs:
        raise IndexError(f"input index {in_idx} out of range")
    if not 0 <= out_idx < ss.n_outputs:
        raise IndexError(f"output index {out_idx} out of range")
    decomp = eigendecompose(ss.a)
    b_modal, c_modal = modal_transform(ss, decomp)
    modes = list(modes)
    if include_feedthrough is None:
        include_feedthrough = sorted(modes) == list(range(decomp.n_modes))
    y = np.zeros(len(t))
    for i in modes:
        lam = decomp.eigenvalues[i]
        res = modal_residue(b_modal, c_modal, i, in_idx, out_idx)
        if lam == 0.0:
            y = y + np.real(res) * t
        else:
            y = y + np.real((res / lam) * (np.exp(lam * t) - 1.0))
    if include_feedthrough:
        y = y + ss.d[out_idx, in_idx]
    return y


# ---------------------------------------------------------------------------
# Report files


def modes_csv(records: Sequence[ModeRecord], path: str) -> None:
    lines = ["mode_id,re,im,zeta,f_hz,dominance,label"]
    for rec in records:
        lines.append(
            f"{rec.mode_id},{rec.eigenvalue.real!r},{rec.eigenvalue.imag!r},"
            f"{rec.zeta!r},{rec.freq_hz!r},{rec.dominance},{rec.label}"
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def participation_csv(
    pf: ParticipationMatrix,
    state_labels: Sequence[str],
    path: str,
    threshold: float = DEFAULT_PF_THRESHOLD,
) -> None:
    """Write participation magnitudes above ``threshold``, state-major."""
    mags = pf.magnitudes
    if len(state_labels) != mags.shape[0]:
        raise ValueError(
            f"{len(state_labels)} labels for {mags.shape[0]} states"
        )
    lines = ["state_label,mode_id,pf_magnitude"]
    for k, label in enumerate(state_labels):
        for j in range(mags.shape[1]):
            if mags[k, j] > threshold:
                lines.append(f"{label},{j},{float(mags[k, j])!r}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
