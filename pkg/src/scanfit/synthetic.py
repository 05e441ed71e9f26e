"""Synthetic ground-truth systems for validating the pipeline.

Every stage of identification and analysis can be checked against plants
built here: the true poles are known exactly (the state matrix is block
diagonal, one block per real pole or conjugate pair), responses are
evaluated through the state-space route, and an independent fourth-order
integrator provides time-domain truth for modal-decomposition checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .realization import StateSpaceModel, frequency_response
from .scans import FrequencyScan
from .vfit import PoleSet, RationalModel

DEFAULT_FREQ_RANGE = (2.0 * math.pi * 0.1, 2.0 * math.pi * 1000.0)

# Stream constant mixed into a plant seed for measurement-noise draws, so
# noise never correlates with the structural draws.
_NOISE_STREAM = 422107

# Fixed couplings seed for the reference benchmark plant.
_REFERENCE_SEED = 20260822

# Minimum ratio between same-kind pole magnitudes in random plants.
# Distinct poles closer than this are practically indistinguishable from
# a merged pole at finite fitting tolerance, which would make exact
# recovery impossible by construction rather than by algorithm quality.
_SEPARATION_RATIO = 1.25


def _separated_draw(
    rng: np.random.Generator, lo: float, hi: float, used: list[float]
) -> float:
    """Log-uniform draw in [lo, hi] kept a fixed ratio away from ``used``."""
    for _ in range(200):
        value = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        if all(
            max(value, u) / min(value, u) >= _SEPARATION_RATIO for u in used
        ):
            used.append(value)
            return value
    raise ValueError(
        f"cannot place {len(used) + 1} separated poles in [{lo}, {hi}]"
    )


@dataclass(frozen=True)
class SyntheticPlant:
    """A truth system with its exact pole multiset and generation seed."""

    truth: StateSpaceModel
    truth_poles: np.ndarray
    seed: int

    @property
    def order(self) -> int:
        return self.truth.n_states


def _coupling_rows(
    rng: np.random.Generator, n_out: int, n_in: int, amplitude: float
) -> tuple[np.ndarray, np.ndarray]:
    """Input signs and output weights for one mode block.

    Output weights keep a floor away from zero so every mode stays visible
    in every channel of the response; a mode that a channel cannot see is
    unidentifiable from that channel no matter how exact the data.
    """
    b_row = rng.choice([-1.0, 1.0], size=n_in)
    c_col = (
        rng.choice([-1.0, 1.0], size=n_out)
        * (0.3 + np.abs(rng.standard_normal(n_out)))
        * amplitude
    )
    return b_row, c_col


def _assemble_blocks(
    blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    n_out: int,
    n_in: int,
    scale: float,
) -> StateSpaceModel:
    n = sum(blk[0].shape[0] for blk in blocks)
    a = np.zeros((n, n))
    b = np.zeros((n, n_in))
    c = np.zeros((n_out, n))
    at = 0
    for blk_a, blk_b, blk_c in blocks:
        k = blk_a.shape[0]
        a[at : at + k, at : at + k] = blk_a
        b[at : at + k, :] = blk_b
        c[:, at : at + k] = blk_c
        at += k
    return StateSpaceModel(a, b, c * scale, np.zeros((n_out, n_in)))


def _pair_block(
    alpha: float, beta: float, b_row: np.ndarray, c_col: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = np.array([[alpha, beta], [-beta, alpha]])
    b = np.vstack([b_row, np.zeros_like(b_row)])
    c = np.vstack([c_col, np.zeros_like(c_col)]).T
    return a, b, c


def _real_block(
    pole: float, b_row: np.ndarray, c_col: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return np.array([[pole]]), b_row[np.newaxis, :], c_col[:, np.newaxis]


def random_stable_system(
    order: int,
    n_inputs: int = 1,
    n_outputs: int = 1,
    seed: int = 0,
    freq_range: tuple[float, float] = DEFAULT_FREQ_RANGE,
) -> SyntheticPlant:
    """Draw a strictly stable plant with known poles.

    Real parts land in [-1e4, -0.1]; pair frequencies are log-uniform over
    ``freq_range`` (rad/s) with damping ratios log-uniform in
    [5e-3, 0.5], and any order of at least two gets at least one
    conjugate pair.  Same-kind pole magnitudes (real magnitudes, pair
    frequencies) are kept a minimum ratio apart so every drawn pole is
    resolvable from finite data.  Couplings are sign-random with a
    magnitude floor and per-mode amplitude matched to the pole scale,
    then divided by the order, so responses stay O(1) and every mode is
    identifiable.  D is zero.  Identical seeds reproduce the plant
    exactly.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if n_inputs < 1 or n_outputs < 1:
        raise ValueError("need at least one input and one output")
    lo, hi = freq_range
    if not (0.0 < lo < hi):
        raise ValueError(f"bad frequency range {freq_range}")
    rng = np.random.default_rng(seed)
    n_pairs = int(rng.integers(1, order // 2 + 1)) if order >= 2 else 0
    n_real = order - 2 * n_pairs

    blocks = []
    poles: list[complex] = []
    used_betas: list[float] = []
    used_mags: list[float] = []
    for _ in range(n_pairs):
        beta = _separated_draw(rng, lo, hi, used_betas)
        zeta = math.exp(rng.uniform(math.log(5e-3), math.log(0.5)))
        alpha = -min(max(zeta * beta, 0.1), 1e4)
        b_row, c_col = _coupling_rows(rng, n_outputs, n_inputs, abs(alpha))
        blocks.append(_pair_block(alpha, beta, b_row, c_col))
        poles.append(complex(alpha, beta))
        poles.append(complex(alpha, -beta))
    for _ in range(n_real):
        mag = _separated_draw(rng, 0.1, 1e4, used_mags)
        b_row, c_col = _coupling_rows(rng, n_outputs, n_inputs, mag)
        blocks.append(_real_block(-mag, b_row, c_col))
        poles.append(complex(-mag, 0.0))
    truth = _assemble_blocks(blocks, n_outputs, n_inputs, 1.0 / order)
    return SyntheticPlant(truth, np.asarray(poles, dtype=np.complex128), int(seed))


def sample_response(
    plant: SyntheticPlant,
    frequencies_hz: np.ndarray,
    noise_rel: float = 0.0,
    sample_rate: float | None = None,
) -> FrequencyScan:
    """Scan the plant's exact frequency response, optionally perturbed.

    Noise multiplies each sample by (1 + eps) with eps complex Gaussian of
    RMS magnitude ``noise_rel``, drawn from a stream derived from the
    plant seed so repeated calls reproduce the same scan.
    """
    if noise_rel < 0.0:
        raise ValueError(f"noise_rel must be >= 0, got {noise_rel}")
    f_hz = np.asarray(frequencies_hz, dtype=np.float64)
    omega = 2.0 * math.pi * f_hz
    resp = frequency_response(plant.truth, 1j * omega)
    entries = np.transpose(resp, (1, 2, 0))
    if noise_rel > 0.0:
        rng = np.random.default_rng([plant.seed, _NOISE_STREAM])
        eps = noise_rel * (
            rng.standard_normal(entries.shape)
            + 1j * rng.standard_normal(entries.shape)
        ) / math.sqrt(2.0)
        entries = entries * (1.0 + eps)
    return FrequencyScan(f_hz, entries, sample_rate)


def reference_converter_plant() -> SyntheticPlant:
    """Ten-state SISO benchmark plant with a published-style pole layout.

    The pole set mixes slow control poles, a mid-band cluster that
    includes an exactly duplicated real pole, one lightly damped pair near
    65 Hz, and two fast near-duplicate real poles, which together exercise
    clustered-pole behavior in the adaptive fit.  Couplings come from a
    fixed seed so the plant is a reproducible constant.
    """
    reals = [-8.555, -8.655, -199.9, -200.0, -251.3, -251.3, -9774.0, -10000.0]
    pair = complex(-406.5, 407.1)
    rng = np.random.default_rng(_REFERENCE_SEED)
    blocks = []
    poles: list[complex] = []
    b_row, c_col = _coupling_rows(rng, 1, 1, abs(pair.real))
    blocks.append(_pair_block(pair.real, pair.imag, b_row, c_col))
    poles.extend([pair, pair.conjugate()])
    for p in reals:
        b_row, c_col = _coupling_rows(rng, 1, 1, abs(p))
        blocks.append(_real_block(p, b_row, c_col))
        poles.append(complex(p, 0.0))
    truth = _assemble_blocks(blocks, 1, 1, 1.0 / 10.0)
    return SyntheticPlant(truth, np.asarray(poles, dtype=np.complex128), _REFERENCE_SEED)


def random_rational_model(
    order: int,
    seed: int = 0,
    freq_range: tuple[float, float] = DEFAULT_FREQ_RANGE,
) -> RationalModel:
    """Random stable pole-residue model, for realization and kernel checks.

    Pole distribution matches random_stable_system; residues carry the
    same per-mode amplitude scaling (real residues for real poles), and
    the asymptote is a small real constant.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    lo, hi = freq_range
    rng = np.random.default_rng(seed)
    n_pairs = int(rng.integers(0, order // 2 + 1))
    n_real = order - 2 * n_pairs
    poles: list[complex] = []
    residues: list[complex] = []
    for _ in range(n_pairs):
        beta = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        zeta = math.exp(rng.uniform(math.log(5e-3), math.log(0.5)))
        alpha = -min(max(zeta * beta, 0.1), 1e4)
        amp = abs(alpha) * (0.3 + abs(rng.standard_normal())) / order
        angle = rng.uniform(0.0, 2.0 * math.pi)
        res = amp * complex(math.cos(angle), math.sin(angle))
        poles.extend([complex(alpha, beta), complex(alpha, -beta)])
        residues.extend([res, res.conjugate()])
    for _ in range(n_real):
        mag = math.exp(rng.uniform(math.log(0.1), math.log(1e4)))
        amp = mag * (0.3 + abs(rng.standard_normal())) / order
        poles.append(complex(-mag, 0.0))
        residues.append(complex(math.copysign(amp, rng.standard_normal()), 0.0))
    d_term = float(rng.standard_normal() * 0.1)
    return RationalModel(PoleSet(np.asarray(poles)), np.asarray(residues), d_term)


def step_response_rk4(
    ss: StateSpaceModel,
    in_idx: int,
    out_idx: int,
    t_end: float,
    n_points: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Unit-step response by classical fourth-order integration.

    The step size targets 1e-3 of the fastest system time scale
    (1 / max |eigenvalue|) and divides the output grid exactly.  The
    per-step update is the exact affine map of the RK4 scheme applied to
    a constant input, so the whole run is two matrices iterated by the
    propagation kernel.
    """
    if not t_end > 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if n_points < 2:
        raise ValueError(f"need at least 2 output points, got {n_points}")
    if not 0 <= in_idx < ss.n_inputs:
        raise IndexError(f"input index {in_idx} out of range")
    if not 0 <= out_idx < ss.n_outputs:
        raise IndexError(f"output index {out_idx} out of range")
    t = np.linspace(0.0, t_end, n_points)
    delta = t[1] - t[0]
    lam_max = float(np.abs(np.linalg.eigvals(ss.a)).max(initial=0.0))
    target = 1e-3 / lam_max if lam_max > 0.0 else delta
    stride = max(1, int(math.ceil(delta / target)))
    h = delta / stride
    ha = h * ss.a
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    ha4 = ha3 @ ha
    eye = np.eye(ss.n_states)
    phi = eye + ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0
    psi = (h * (eye + ha / 2.0 + ha2 / 6.0 + ha3 / 24.0)) @ ss.b[:, in_idx]
    states = np.asarray(
        _kernels.affine_propagate(
            np.ascontiguousarray(phi),
            np.ascontiguousarray(psi),
            np.zeros(ss.n_states),
            stride,
            n_points,
        )
    )
    y = states @ ss.c[out_idx] + ss.d[out_idx, in_idx]
    return t, y
