"""Rational fitting of sampled frequency responses.

Implements the classical vector-fitting step for a proper rational model

    T(s) = sum_n c_n / (s - p_n) + d

with a constant asymptote fixed at one in the pole-relocating scaling
function.  All least-squares systems are assembled in a real-valued block
basis: a real pole contributes the column 1/(s - p), a conjugate pair the
columns 1/(s-p) + 1/(s-p̄) and j/(s-p) - j/(s-p̄), and sample rows are
stacked as (real, imaginary) parts.  Coefficients therefore stay real, the
asymptote stays real, and conjugate symmetry of the fitted model is
structural rather than numerical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import VectorFitError
from .scans import SisoResponse

# Relative tolerance used when snapping nearly conjugate values into exact
# conjugate pairs at construction time.
CONJUGATE_SNAP_TOL = 1e-12

# A pole landing exactly at the origin is nudged this far into the left
# half-plane; the imaginary-part rule below yields zero there.
ORIGIN_SHIFT = 1e-6


def _canonical_poles(values: np.ndarray) -> np.ndarray:
    """Order poles canonically: conjugate pairs adjacent, positive
    imaginary part first, real poles kept in encounter order.

    Raises ValueError when a complex pole lacks a conjugate partner
    (within CONJUGATE_SNAP_TOL relative) or when any pole repeats exactly.
    """
    vals = np.asarray(values, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(vals)):
        raise ValueError("poles must be finite")
    used = np.zeros(len(vals), dtype=bool)
    out: list[complex] = []
    for idx in range(len(vals)):
        if used[idx]:
            continue
        used[idx] = True
        p = vals[idx]
        if p.imag == 0.0:
            out.append(p)
            continue
        target = np.conj(p)
        dist = np.abs(vals - target)
        dist[used] = np.inf
        j = int(np.argmin(dist))
        if not dist[j] <= CONJUGATE_SNAP_TOL * abs(p):
            raise ValueError(
                f"pole {p} has no conjugate partner; complex poles must come "
                "in conjugate pairs"
            )
        used[j] = True
        first = p if p.imag > 0.0 else vals[j]
        if first.imag <= 0.0:
            raise ValueError(f"poles {p} and {vals[j]} do not form a conjugate pair")
        out.append(first)
        out.append(np.conj(first))
    arr = np.asarray(out, dtype=np.complex128)
    if len(arr) != len(set(arr.tolist())):
        raise ValueError("pole set contains an exact duplicate")
    return arr


@dataclass(frozen=True)
class PoleSet:
    """An ordered set of system poles, closed under conjugation.

    Construction canonicalizes the order (pairs adjacent, positive
    imaginary member first) and rejects unpaired complex poles and exact
    duplicates.  The stored array is read-only.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _canonical_poles(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def order(self) -> int:
        return len(self.values)

    @property
    def is_stable(self) -> bool:
        return bool(np.all(self.values.real < 0.0))

    def kinds(self) -> np.ndarray:
        """Column kinds for the real-block basis (real / pair halves)."""
        kinds = np.empty(len(self.values), dtype=np.int8)
        n = 0
        while n < len(self.values):
            if self.values[n].imag == 0.0:
                kinds[n] = _kernels.KIND_REAL
                n += 1
            else:
                kinds[n] = _kernels.KIND_PAIR_FIRST
                kinds[n + 1] = _kernels.KIND_PAIR_SECOND
                n += 2
        return kinds

    def __len__(self) -> int:
        return len(self.values)


def _conjugate_residues(poles: PoleSet, residues: np.ndarray) -> np.ndarray:
    """Validate residues against the pole layout and snap pair residues to
    exact conjugates."""
    res = np.asarray(residues, dtype=np.complex128).ravel().copy()
    if res.shape != poles.values.shape:
        raise ValueError(
            f"{len(res)} residues for {poles.order} poles"
        )
    if not np.all(np.isfinite(res)):
        raise ValueError("residues must be finite")
    kinds = poles.kinds()
    for n, kind in enumerate(kinds):
        if kind == _kernels.KIND_REAL:
            if abs(res[n].imag) > CONJUGATE_SNAP_TOL * max(1.0, abs(res[n])):
                raise ValueError(
                    f"residue {res[n]} of real pole {poles.values[n]} must be real"
                )
            res[n] = complex(res[n].real, 0.0)
        elif kind == _kernels.KIND_PAIR_FIRST:
            mismatch = abs(res[n + 1] - np.conj(res[n]))
            if mismatch > CONJUGATE_SNAP_TOL * max(1.0, abs(res[n])):
                raise ValueError(
                    f"residues {res[n]} and {res[n + 1]} of a conjugate pole "
                    "pair must be conjugate"
                )
            res[n + 1] = np.conj(res[n])
    return res


@dataclass(frozen=True)
class RationalModel:
    """Proper rational transfer function in pole-residue form.

    The asymptote is the constant ``d_term``; there is no linear-in-s term
    (``e_term`` exists only so that the restriction is explicit, and must
    be zero).
    """

    poles: PoleSet
    residues: np.ndarray
    d_term: float
    e_term: float = 0.0

    def __post_init__(self) -> None:
        res = _conjugate_residues(self.poles, self.residues)
        res.setflags(write=False)
        object.__setattr__(self, "residues", res)
        d = float(self.d_term)
        if not math.isfinite(d):
            raise ValueError(f"d_term must be finite, got {d}")
        object.__setattr__(self, "d_term", d)
        if self.e_term != 0.0:
            raise ValueError("models are proper: e_term must be 0")

    @property
    def order(self) -> int:
        return self.poles.order

    def evaluate(self, s) -> np.ndarray:
        """Evaluate the model at complex frequencies ``s``."""
        s_arr = np.ascontiguousarray(np.atleast_1d(s), dtype=np.complex128)
        out = _kernels.rational_eval(
            s_arr, self.poles.values, self.residues, self.d_term
        )
        return np.asarray(out)

    def __call__(self, s) -> np.ndarray:
        return self.evaluate(s)


def initial_poles(n: int, omega_min: float, omega_max: float) -> PoleSet:
    """Starting poles: lightly damped pairs spread linearly over the band.

    For even ``n``, n/2 pairs -1e-2*beta_k +/- j*beta_k with beta_k linearly
    spaced from omega_min to omega_max (a single pair sits at omega_min).
    Odd ``n`` adds one real pole at minus the band midpoint.
    """
    if n < 1:
        raise ValueError(f"pole count must be >= 1, got {n}")
    if not (0.0 < omega_min < omega_max):
        raise ValueError(
            f"need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )
    vals: list[complex] = []
    n_pairs = n // 2
    if n_pairs:
        step = (omega_max - omega_min) / max(1, n_pairs - 1)
        for k in range(n_pairs):
            beta = omega_min + k * step
            vals.append(complex(-1e-2 * beta, beta))
            vals.append(complex(-1e-2 * beta, -beta))
    if n % 2:
        vals.append(complex(-(omega_min + omega_max) / 2.0, 0.0))
    return PoleSet(np.asarray(vals))


def enforce_stability(poles: PoleSet) -> PoleSet:
    """Reflect right-half-plane poles and nudge imaginary-axis poles left.

    Positive real parts are negated; a pole with exactly zero real part
    moves to -|1e-6 * imag| (or -1e-6 for a pole at the origin, where that
    rule would leave it in place).  Stable poles pass through unchanged;
    the operation is idempotent.
    """
    re = poles.values.real.copy()
    im = poles.values.imag
    flip = re > 0.0
    re[flip] = -re[flip]
    on_axis = re == 0.0
    re[on_axis] = -np.abs(ORIGIN_SHIFT * im[on_axis])
    re[on_axis & (im == 0.0)] = -ORIGIN_SHIFT
    return PoleSet(re + 1j * im)


def rms_error(response: SisoResponse, model: RationalModel) -> float:
    """Root-mean-square mismatch between response samples and the model."""
    if len(response) == 0:
        raise ValueError("response is empty")
    err = response.values - model.evaluate(1j * response.frequencies)
    return float(np.sqrt(np.mean(np.abs(err) ** 2)))


def relative_weights(response: SisoResponse) -> np.ndarray:
    """Inverse-magnitude weights, floored at 1e-8 of the largest sample."""
    mag = np.abs(response.values)
    mx = mag.max(initial=0.0)
    if mx == 0.0:
        return np.ones(len(response))
    return 1.0 / np.maximum(mag, 1e-8 * mx)


def _check_weights(weights, n_samples: int) -> np.ndarray:
    if weights is None:
        return np.ones(n_samples)
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.shape != (n_samples,):
        raise ValueError(f"{len(w)} weights for {n_samples} samples")
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise ValueError("weights must be finite and positive")
    return w


def _sigma_realization(poles: PoleSet) -> tuple[np.ndarray, np.ndarray]:
    """Real block state matrix and input vector whose transfer function is
    the partial-fraction basis; used to extract scaling-function zeros."""
    n = poles.order
    a = np.zeros((n, n))
    b = np.zeros(n)
    kinds = poles.kinds()
    for i, kind in enumerate(kinds):
        p = poles.values[i]
        if kind == _kernels.KIND_REAL:
            a[i, i] = p.real
            b[i] = 1.0
        elif kind == _kernels.KIND_PAIR_FIRST:
            a[i, i] = p.real
            a[i, i + 1] = p.imag
            a[i + 1, i] = -p.imag
            a[i + 1, i + 1] = p.real
            b[i] = 2.0
    return a, b


def _stacked_lstsq(
    columns: np.ndarray, rhs: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, int, np.ndarray]:
    """Solve the real-stacked, row-weighted, column-scaled least squares
    problem; returns (solution, rank, singular values)."""
    wc = weights[:, np.newaxis] * columns
    a = np.vstack([wc.real, wc.imag])
    b = np.concatenate([(weights * rhs).real, (weights * rhs).imag])
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0.0] = 1.0
    x, _, rank, sv = np.linalg.lstsq(a / scale, b, rcond=None)
    return x / scale, rank, sv


def _block_to_residues(x: np.ndarray, poles: PoleSet) -> np.ndarray:
    """Map real-block coefficients back to complex residues."""
    res = np.empty(poles.order, dtype=np.complex128)
    kinds = poles.kinds()
    for n, kind in enumerate(kinds):
        if kind == _kernels.KIND_REAL:
            res[n] = x[n]
        elif kind == _kernels.KIND_PAIR_FIRST:
            res[n] = complex(x[n], x[n + 1])
            res[n + 1] = np.conj(res[n])
    return res


def vf_iteration(
    response: SisoResponse,
    poles: PoleSet,
    weights: np.ndarray | None = None,
) -> tuple[PoleSet, RationalModel]:
    """One vector-fitting round: relocate poles, then refit residues.

    The scaling-function system solves for residues, asymptote, and
    scaling coefficients jointly; relocated poles are the eigenvalues of
    the scaling function's zero matrix, reflected into the left half-plane
    where needed.  Residues and asymptote are then re-identified against
    the relocated poles.

    Needs at least 2*order + 1 samples.  A rank-deficient
    residue-identification system (duplicate or near-duplicate basis
    columns) raises VectorFitError with a conditioning estimate; the
    pole-identification stage tolerates rank loss, which arises naturally
    for responses that are identically zero.
    """
    n = poles.order
    n_samples = len(response)
    if n < 1:
        raise ValueError("need at least one pole")
    if n_samples < 2 * n + 1:
        raise ValueError(
            f"{n_samples} samples cannot determine {2 * n + 1} unknowns "
            f"(order {n}); provide more frequencies or a lower order"
        )
    w = _check_weights(weights, n_samples)
    start = enforce_stability(poles)
    s = 1j * response.frequencies
    values = response.values

    phi = np.asarray(
        _kernels.partial_fraction_basis(s, start.values, start.kinds())
    )
    cols = np.empty((n_samples, 2 * n + 1), dtype=np.complex128)
    cols[:, :n] = phi
    cols[:, n] = 1.0
    cols[:, n + 1 :] = -values[:, np.newaxis] * phi
    x, _, _ = _stacked_lstsq(cols, values, w)
    sigma_coeffs = x[n + 1 :]

    a_sig, b_sig = _sigma_realization(start)
    zeros = np.linalg.eigvals(a_sig - np.outer(b_sig, sigma_coeffs))
    relocated = enforce_stability(PoleSet(zeros))

    phi2 = np.asarray(
        _kernels.partial_fraction_basis(s, relocated.values, relocated.kinds())
    )
    cols2 = np.empty((n_samples, n + 1), dtype=np.complex128)
    cols2[:, :n] = phi2
    cols2[:, n] = 1.0
    x2, rank2, sv2 = _stacked_lstsq(cols2, values, w)
    if rank2 < n + 1:
        cond = sv2[0] / sv2[-1] if sv2[-1] > 0.0 else np.inf
        raise VectorFitError(
            f"residue identification is rank deficient (rank {rank2} of "
            f"{n + 1}, condition estimate {cond:.3g}); the pole set likely "
            "contains near-duplicates"
        )
    residues = _block_to_residues(x2, relocated)
    model = RationalModel(relocated, residues, float(x2[n]))
    return relocated, model
