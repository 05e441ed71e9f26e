"""State-space realization of fitted rational models.

Each real pole p with residue c becomes a scalar block (A=[p], B=[1],
C=[c]); each conjugate pair p = alpha +/- j*beta with residue c becomes the
real two-state block

    A = [[alpha, beta], [-beta, alpha]],  B = [2, 0]^T,  C = [Re c, Im c],

whose transfer function equals c/(s-p) + conj(c)/(s-conj(p)).  Blocks are
stacked diagonally in pole-list order, so realized matrices are always
real and the realization is deterministic.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ModelFormatError, SingularFrequencyError
from .vfit import RationalModel
from . import _kernels

# Basis kinds reused from the fitting layer.
_REAL = _kernels.KIND_REAL
_FIRST = _kernels.KIND_PAIR_FIRST


def _positional_labels(n: int, prefix: str = "x") -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


@dataclass(frozen=True)
class StateSpaceModel:
    """Real LTI system (A, B, C, D) with named states.

    Arrays are validated for shape and finiteness and stored read-only.
    ``state_labels`` defaults to positional names x0..x{n-1}.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    state_labels: tuple[str, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(self.b, dtype=np.float64))
        c = np.atleast_2d(np.asarray(self.c, dtype=np.float64))
        d = np.atleast_2d(np.asarray(self.d, dtype=np.float64))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"A must be square, got {a.shape}")
        if b.shape[0] != n:
            raise ValueError(f"B has {b.shape[0]} rows for {n} states")
        if c.shape[1] != n:
            raise ValueError(f"C has {c.shape[1]} columns for {n} states")
        if d.shape != (c.shape[0], b.shape[1]):
            raise ValueError(
                f"D must be {(c.shape[0], b.shape[1])}, got {d.shape}"
            )
        for name, arr in (("A", a), ("B", b), ("C", c), ("D", d)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        labels = self.state_labels
        if labels is None:
            labels = _positional_labels(n)
        else:
            labels = tuple(str(s) for s in labels)
            if len(labels) != n:
                raise ValueError(f"{len(labels)} state labels for {n} states")
        for arr in (a, b, c, d):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "state_labels", labels)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.a)

    def with_meta(self, **extra) -> "StateSpaceModel":
        """Copy of the model with extra metadata merged in."""
        return StateSpaceModel(
            self.a, self.b, self.c, self.d, self.state_labels,
            {**self.meta, **extra},
        )


def realize_real_pole(pole: float, residue: float) -> StateSpaceModel:
    """One-state SISO block for a real pole and real residue."""
    p = complex(pole)
    r = complex(residue)
    if p.imag != 0.0:
        raise ValueError(f"pole {pole} is not real")
    if r.imag != 0.0:
        raise ValueError(f"residue {residue} of a real pole must be real")
    return StateSpaceModel([[p.real]], [[1.0]], [[r.real]], [[0.0]])


def realize_complex_pair(alpha: float, beta: float, residue: complex) -> StateSpaceModel:
    """Two-state SISO block for the conjugate pair alpha +/- j*beta.

    ``residue`` is the residue of the positive-imaginary member; the block
    transfer function is c/(s-p) + conj(c)/(s-conj(p)).
    """
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    r = complex(residue)
    a = [[alpha, beta], [-beta, alpha]]
    b = [[2.0], [0.0]]
    c = [[r.real, r.imag]]
    return StateSpaceModel(a, b, c, [[0.0]])


def realize_siso(model: RationalModel) -> StateSpaceModel:
    """Block-diagonal realization of a rational model; D is the asymptote.

    The A eigenvalues reproduce the model poles exactly (each block carries
    them structurally), and the transfer function matches the
    partial-fraction sum at every frequency.
    """
    blocks: list[StateSpaceModel] = []
    kinds = model.poles.kinds()
    for n, kind in enumerate(kinds):
        p = model.poles.values[n]
        if kind == _REAL:
            blocks.append(realize_real_pole(p.real, model.residues[n].real))
        elif kind == _FIRST:
            blocks.append(realize_complex_pair(p.real, p.imag, model.residues[n]))
    n_states = sum(blk.n_states for blk in blocks)
    a = np.zeros((n_states, n_states))
    b = np.zeros((n_states, 1))
    c = np.zeros((1, n_states))
    at = 0
    for blk in blocks:
        k = blk.n_states
        a[at : at + k, at : at + k] = blk.a
        b[at : at + k, 0] = blk.b[:, 0]
        c[0, at : at + k] = blk.c[0]
        at += k
    return StateSpaceModel(a, b, c, [[model.d_term]])


def assemble_mimo(grid: Sequence[Sequence[StateSpaceModel]]) -> StateSpaceModel:
    """Stack per-entry SISO models into one MIMO system.

    ``grid[o][i]`` is the model fitted for output o, input i.  States are
    concatenated in row-major entry order; each entry's B column lands in
    input i, its C row in output o, and D collects the asymptotes.
    """
    n_out = len(grid)
    if n_out == 0:
        raise ValueError("empty model grid")
    n_in = len(grid[0])
    if any(len(row) != n_in for row in grid) or n_in == 0:
        raise ValueError("model grid must be rectangular and non-empty")
    for o, row in enumerate(grid):
        for i, entry in enumerate(row):
            if entry.n_inputs != 1 or entry.n_outputs != 1:
                raise ValueError(
                    f"grid entry ({o},{i}) must be SISO, got "
                    f"{entry.n_outputs}x{entry.n_inputs}"
                )
    n_states = sum(e.n_states for row in grid for e in row)
    a = np.zeros((n_states, n_states))
    b = np.zeros((n_states, n_in))
    c = np.zeros((n_out, n_states))
    d = np.zeros((n_out, n_in))
    at = 0
    for o, row in enumerate(grid):
        for i, entry in enumerate(row):
            k = entry.n_states
            a[at : at + k, at : at + k] = entry.a
            b[at : at + k, i] = entry.b[:, 0]
            c[o, at : at + k] = entry.c[0]
            d[o, i] = entry.d[0, 0]
            at += k
    return StateSpaceModel(a, b, c, d)


def eval_tf(ss: StateSpaceModel, s: complex) -> np.ndarray:
    """Transfer matrix C (sI - A)^{-1} B + D via a linear solve.

    Evaluation at (or numerically near) an eigenvalue of A raises
    SingularFrequencyError naming the closest eigenvalue, instead of
    silently returning garbage from an ill-conditioned solve.
    """
    n = ss.n_states
    if n == 0:
        return ss.d.copy()
    m = s * np.eye(n) - ss.a
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            x = scipy.linalg.solve(m, ss.b.astype(np.complex128))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        eig = ss.eigenvalues()
        nearest = eig[np.argmin(np.abs(eig - s))]
        raise SingularFrequencyError(
            f"evaluation point s={s} is singular or nearly singular; the "
            f"closest system eigenvalue is {nearest} ({exc})"
        ) from exc
    return ss.c @ x + ss.d


def frequency_response(ss: StateSpaceModel, s_values: np.ndarray) -> np.ndarray:
    """Stacked eval_tf over an array of complex frequencies.

    Returns an array of shape (len(s_values), n_outputs, n_inputs).
    """
    s_arr = np.atleast_1d(np.asarray(s_values, dtype=np.complex128))
    out = np.empty((len(s_arr), ss.n_outputs, ss.n_inputs), dtype=np.complex128)
    for k, s in enumerate(s_arr):
        out[k] = eval_tf(ss, s)
    return out


# ---------------------------------------------------------------------------
# Model files


def save_model(ss: StateSpaceModel, path: str) -> None:
    """Write a model as JSON with row-major A, B, C, D plus labels/meta."""
    doc = {
        "A": [[float(v) for v in row] for row in ss.a],
        "B": [[float(v) for v in row] for row in ss.b],
        "C": [[float(v) for v in row] for row in ss.c],
        "D": [[float(v) for v in row] for row in ss.d],
        "state_labels": list(ss.state_labels),
        "meta": ss.meta,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path: str) -> StateSpaceModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    mats = {}
    for key in ("A", "B", "C", "D"):
        if key not in doc:
            raise ModelFormatError(f"{path}: missing matrix '{key}'")
        try:
            arr = np.asarray(doc[key], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"{path}: matrix '{key}': {exc}") from exc
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ModelFormatError(
                f"{path}: matrix '{key}' must be 2-d, got shape {arr.shape}"
            )
        mats[key] = arr
    # Empty B/C rows collapse badly in JSON for 0-state models; rebuild shapes.
    n = mats["A"].shape[0]
    p, m = mats["D"].shape if mats["D"].size else (mats["C"].shape[0], mats["B"].shape[1])
    if mats["B"].size == 0:
        mats["B"] = mats["B"].reshape(n, m if m else 0)
    if mats["C"].size == 0:
        mats["C"] = mats["C"].reshape(p if p else 0, n)
    labels = doc.get("state_labels")
    meta = doc.get("meta") or {}
    if not isinstance(meta, dict):
        raise ModelFormatError(f"{path}: 'meta' must be an object")
    try:
        return StateSpaceModel(
            mats["A"], mats["B"], mats["C"], mats["D"],
            tuple(labels) if labels is not None else None, meta,
        )
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
