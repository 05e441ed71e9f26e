"""Adaptive-order fitting: vector-fitting rounds with pole expansion.

Each round iterates the vector-fitting step to a fixed point (bounded by
``inner_iters``), evaluates the RMS mismatch, and either stops or inserts
one pole (a real pole near DC, otherwise a conjugate pair) at the midpoint
of the frequency gap around the worst-fit sample, then restarts from the
expanded set.  Orders therefore grow by one or two per round until the
tolerance, the order cap, or the sample budget is hit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .scans import SisoResponse
from .vfit import (
    PoleSet,
    RationalModel,
    relative_weights,
    rms_error,
    vf_iteration,
)

# Relative pole movement below which the inner fixed point is converged.
FIXED_POINT_TOL = 1e-10

# Relative closeness at which an inserted pole counts as a duplicate.
DUPLICATE_TOL = 1e-9


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the adaptive fit.

    ``tol`` is the RMS convergence target; ``inner_iters`` bounds the
    vector-fitting rounds between expansions; ``max_order`` caps the pole
    count; ``dc_threshold`` separates the real-pole insertion regime from
    conjugate pairs.  ``weights`` (per-sample, positive) or
    ``relative_weighting`` (inverse magnitude) bias the least squares.
    """

    tol: float = 1e-6
    inner_iters: int = 3
    max_order: int = 60
    dc_threshold: float = 1e-3
    weights: np.ndarray | None = None
    relative_weighting: bool = False

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.inner_iters < 1:
            raise ValueError(f"inner_iters must be >= 1, got {self.inner_iters}")
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if not self.dc_threshold > 0.0:
            raise ValueError(
                f"dc_threshold must be positive, got {self.dc_threshold}"
            )


@dataclass(frozen=True)
class RoundRecord:
    """One adaptive round: the order fitted, the RMS reached, the pole
    inserted afterwards (None on the final round), and wall time."""

    round: int
    order: int
    rms: float
    inserted: complex | None
    ms: float


@dataclass(frozen=True)
class FitTrace:
    """Per-round history of an adaptive fit."""

    records: tuple[RoundRecord, ...]
    converged: bool
    stop_reason: str = field(default="converged")

    @property
    def final_rms(self) -> float:
        return self.records[-1].rms

    @property
    def final_order(self) -> int:
        return self.records[-1].order

    @property
    def n_rounds(self) -> int:
        return len(self.records)

    def to_jsonl(self, include_timing: bool = True) -> str:
        """Serialize as JSON lines.  Timing is wall-clock and varies run to
        run; pass include_timing=False for byte-reproducible output."""
        lines = []
        for rec in self.records:
            doc = {
                "round": rec.round,
                "order": rec.order,
                "rms": rec.rms,
                "inserted": None
                if rec.inserted is None
                else [rec.inserted.real, rec.inserted.imag],
            }
            if include_timing:
                doc["ms"] = rec.ms
            lines.append(json.dumps(doc))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path: str, include_timing: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_jsonl(include_timing))


def locate_max_error(response: SisoResponse, model: RationalModel) -> int:
    """Index of the sample with the largest absolute error (ties resolve
    to the lowest index, so an exact fit reports index 0)."""
    if len(response) == 0:
        raise ValueError("response is empty")
    err = np.abs(response.values - model.evaluate(1j * response.frequencies))
    return int(np.argmax(err))


def midpoint_frequency(response: SisoResponse, k_star: int) -> complex:
    """Midpoint of the complex frequencies flanking sample ``k_star``.

    Boundary samples use the midpoint toward their single neighbor; a
    single-sample response returns its own frequency.
    """
    n = len(response)
    if not 0 <= k_star < n:
        raise IndexError(f"sample index {k_star} out of range for {n} samples")
    s = 1j * response.frequencies
    if n == 1:
        return complex(s[0])
    lo = max(k_star - 1, 0)
    hi = min(k_star + 1, n - 1)
    return complex((s[lo] + s[hi]) / 2.0)


def _collides(candidate: complex, existing: np.ndarray) -> bool:
    if len(existing) == 0:
        return False
    ref = np.maximum(np.abs(existing), abs(candidate))
    return bool(np.any(np.abs(existing - candidate) <= DUPLICATE_TOL * ref))


def expand_poles(poles: PoleSet, s_mid: complex, dc_threshold: float) -> PoleSet:
    """Insert one pole (or conjugate pair) derived from a midpoint frequency.

    Below ``dc_threshold`` in magnitude the insertion is a real pole at
    Re(s_mid), falling back to -dc_threshold when that is zero (midpoints
    of purely imaginary grids have no real part).  Otherwise a lightly
    damped pair -1e-4*|s_mid| +/- j*Im(s_mid) is appended; a real-valued
    midpoint beyond the threshold degenerates to the single real pole
    -|s_mid|.  Candidates landing within 1e-9 (relative) of an existing
    pole are nudged: imaginary part times 1.001 for pairs, real part times
    1.001 for real poles (the real-axis analogue).
    """
    if not dc_threshold > 0.0:
        raise ValueError(f"dc_threshold must be positive, got {dc_threshold}")
    s_mid = complex(s_mid)
    existing = poles.values

    if abs(s_mid) < dc_threshold or s_mid.imag == 0.0:
        value = s_mid.real if abs(s_mid) < dc_threshold else -abs(s_mid)
        if value == 0.0:
            value = -dc_threshold
        for _ in range(100):
            if not _collides(complex(value), existing):
                break
            value *= 1.001
        else:
            raise ValueError(f"could not place a real pole near {s_mid}")
        new = [complex(value, 0.0)]
    else:
        re = -1e-4 * abs(s_mid)
        im = abs(s_mid.imag)
        for _ in range(100):
            if not _collides(complex(re, im), existing) and not _collides(
                complex(re, -im), existing
            ):
                break
            im *= 1.001
        else:
            raise ValueError(f"could not place a pole pair near {s_mid}")
        new = [complex(re, im), complex(re, -im)]
    return PoleSet(np.concatenate([existing, np.asarray(new, dtype=np.complex128)]))


def _pole_movement(old: PoleSet, new: PoleSet) -> float:
    """Largest relative nearest-neighbor displacement between two sets."""
    if old.order != new.order:
        return np.inf
    worst = 0.0
    for p in new.values:
        d = np.min(np.abs(old.values - p)) / max(abs(p), 1e-300)
        worst = max(worst, float(d))
    return worst


def fit_adaptive(
    response: SisoResponse, initial: PoleSet, cfg: FitConfig | None = None
) -> tuple[RationalModel, FitTrace]:
    """Fit a rational model, growing the order until the RMS target holds.

    Returns the converged model, or the best model seen when the order cap
    or the sample budget stops expansion first (trace.converged False,
    stop_reason "max_order" or "sample_limit").  Identical inputs produce
    identical models and traces apart from the wall-time fields.
    """
    cfg = cfg or FitConfig()
    if len(response) == 0:
        raise ValueError("response is empty")
    if initial.order < 1:
        raise ValueError("initial pole set is empty")
    if not initial.is_stable:
        raise ValueError("initial poles must be strictly stable")
    if cfg.max_order < initial.order:
        raise ValueError(
            f"max_order {cfg.max_order} is below the initial order {initial.order}"
        )
    if cfg.weights is not None:
        weights = np.asarray(cfg.weights, dtype=np.float64)
    elif cfg.relative_weighting:
        weights = relative_weights(response)
    else:
        weights = None

    poles = initial
    best_model: RationalModel | None = None
    best_rms = np.inf
    records: list[RoundRecord] = []
    round_no = 0
    while True:
        round_no += 1
        t0 = time.perf_counter()
        model = None
        for _ in range(cfg.inner_iters):
            new_poles, model = vf_iteration(response, poles, weights)
            moved = _pole_movement(poles, new_poles)
            poles = new_poles
            if moved < FIXED_POINT_TOL:
                break
        assert model is not None
        rms = rms_error(response, model)
        ms = (time.perf_counter() - t0) * 1e3
        if rms < best_rms:
            best_rms = rms
            best_model = model
        if rms < cfg.tol:
            records.append(RoundRecord(round_no, poles.order, rms, None, ms))
            return model, FitTrace(tuple(records), True, "converged")
        k_star = locate_max_error(response, model)
        s_mid = midpoint_frequency(response, k_star)
        candidate = expand_poles(poles, s_mid, cfg.dc_threshold)
        if candidate.order > cfg.max_order:
            records.append(RoundRecord(round_no, poles.order, rms, None, ms))
            return best_model, FitTrace(tuple(records), False, "max_order")
        if len(response) < 2 * candidate.order + 1:
            records.append(RoundRecord(round_no, poles.order, rms, None, ms))
            return best_model, FitTrace(tuple(records), False, "sample_limit")
        inserted = candidate.values[-2] if candidate.order - poles.order == 2 else candidate.values[-1]
        records.append(RoundRecord(round_no, poles.order, rms, complex(inserted), ms))
        poles = candidate
