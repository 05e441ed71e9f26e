"""Frequency-scan data model and file formats.

A scan holds the sampled frequency response of a multi-input multi-output
subsystem on a shared frequency grid.  On disk frequencies are plain Hz;
in memory the angular grid (rad/s) is what the fitting stages consume, so
both views are kept: ``frequencies_hz`` is the authoritative stored array
(written back bit-for-bit) and ``frequencies`` is derived from it once at
construction.

Two formats are supported:

* CSV: header ``freq_hz,re_0_0,im_0_0,re_0_1,...`` with one (output, input)
  pair of columns per entry, outputs varying slowest, and one row per
  frequency.  CSV cannot carry sample rate, labels, or metadata.
* JSON: an object with ``n_outputs``, ``n_inputs``, ``sample_rate_hz``
  (nullable), ``labels`` (nullable), ``freq_hz``, and ``entries`` indexed
  ``[output][input]`` as ``[re, im]`` pairs per frequency.  An optional
  ``meta`` object (for example the perturbation magnitude used during the
  scan) is passed through untouched.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ScanFormatError

logger = logging.getLogger(__name__)

# Maximum fitted frequency allowed relative to the scan sample rate.
NYQUIST_MARGIN = 0.1

_CSV_COL_RE = re.compile(r"^(re|im)_(\d+)_(\d+)$")


class FrequencySample(NamedTuple):
    """One complex response sample at an angular frequency (rad/s)."""

    omega: float
    value: complex


@dataclass(frozen=True)
class ChannelLabels:
    """Optional names for the input and output channels of a scan."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]


@dataclass(frozen=True)
class NyquistReport:
    """Outcome of the sample-rate validity check."""

    passed: bool
    ratio: float | None
    note: str


@dataclass(frozen=True)
class SisoResponse:
    """A single scan entry: shared angular frequencies plus complex values."""

    frequencies: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        freqs = np.ascontiguousarray(self.frequencies, dtype=np.float64)
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if freqs.ndim != 1 or vals.shape != freqs.shape:
            raise ValueError(
                f"frequencies {freqs.shape} and values {vals.shape} must be "
                "1-d arrays of equal length"
            )
        freqs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.frequencies)

    def samples(self) -> Iterator[FrequencySample]:
        for omega, value in zip(self.frequencies, self.values):
            yield FrequencySample(float(omega), complex(value))


@dataclass(frozen=True)
class FrequencyScan:
    """Sampled MIMO frequency response on a shared grid.

    Parameters
    ----------
    frequencies_hz : ndarray
        Strictly increasing positive frequencies in Hz.
    entries : ndarray
        Complex responses, shape (n_outputs, n_inputs, n_frequencies).
    sample_rate : float or None
        Sampling rate of the underlying time-domain scan in Hz, when known.
    labels : ChannelLabels or None
        Channel names; lengths must match the entry grid when present.
    meta : dict
        Free-form metadata carried by the JSON format only.
    """

    frequencies_hz: np.ndarray
    entries: np.ndarray
    sample_rate: float | None = None
    labels: ChannelLabels | None = None
    meta: dict = field(default_factory=dict)
    # Derived angular grid (rad/s); filled in __post_init__.
    frequencies: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        hz = np.ascontiguousarray(self.frequencies_hz, dtype=np.float64)
        ent = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if hz.ndim != 1 or len(hz) == 0:
            raise ValueError("frequencies_hz must be a non-empty 1-d array")
        if not np.all(np.isfinite(hz)):
            raise ValueError("frequencies_hz must be finite")
        if hz[0] <= 0.0 or np.any(np.diff(hz) <= 0.0):
            raise ValueError("frequencies_hz must be positive and strictly increasing")
        if ent.ndim != 3 or ent.shape[2] != len(hz):
            raise ValueError(
                f"entries must have shape (n_outputs, n_inputs, {len(hz)}), "
                f"got {ent.shape}"
            )
        if not np.all(np.isfinite(ent)):
            raise ValueError("entries must be finite")
        if self.sample_rate is not None and not self.sample_rate > 0.0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.labels is not None:
            if len(self.labels.outputs) != ent.shape[0]:
                raise ValueError(
                    f"{len(self.labels.outputs)} output labels for "
                    f"{ent.shape[0]} outputs"
                )
            if len(self.labels.inputs) != ent.shape[1]:
                raise ValueError(
                    f"{len(self.labels.inputs)} input labels for "
                    f"{ent.shape[1]} inputs"
                )
        omega = 2.0 * math.pi * hz
        hz.setflags(write=False)
        ent.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "frequencies_hz", hz)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "frequencies", omega)

    @classmethod
    def from_omega(
        cls,
        omega: np.ndarray,
        entries: np.ndarray,
        sample_rate: float | None = None,
        labels: ChannelLabels | None = None,
        meta: dict | None = None,
    ) -> "FrequencyScan":
        """Build a scan from an angular (rad/s) grid.

        The stored Hz grid is omega / 2pi; converting back to rad/s can
        differ from the input by one rounding step.
        """
        hz = np.asarray(omega, dtype=np.float64) / (2.0 * math.pi)
        return cls(hz, entries, sample_rate, labels, dict(meta or {}))

    @property
    def n_outputs(self) -> int:
        return self.entries.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.entries.shape[1]

    @property
    def n_frequencies(self) -> int:
        return self.entries.shape[2]


def extract_siso(scan: FrequencyScan, out_idx: int, in_idx: int) -> SisoResponse:
    """Return one (output, input) entry as a standalone SISO response."""
    if not 0 <= out_idx < scan.n_outputs:
        raise IndexError(
            f"output index {out_idx} out of range for {scan.n_outputs} outputs"
        )
    if not 0 <= in_idx < scan.n_inputs:
        raise IndexError(
            f"input index {in_idx} out of range for {scan.n_inputs} inputs"
        )
    return SisoResponse(
        scan.frequencies.copy(), scan.entries[out_idx, in_idx].copy()
    )


def validate_nyquist(scan: FrequencyScan) -> NyquistReport:
    """Check that the scan respects the sampling-rate margin.

    The highest fitted frequency must stay at or below one tenth of the
    sample rate.  A scan without a recorded sample rate passes with a note;
    the rule cannot be checked.
    """
    if scan.sample_rate is None:
        return NyquistReport(True, None, "sample rate absent; rule unchecked")
    ratio = float(scan.frequencies_hz[-1] / scan.sample_rate)
    if ratio <= NYQUIST_MARGIN:
        note = f"max frequency is {ratio:.4g} of the sample rate (limit {NYQUIST_MARGIN})"
        return NyquistReport(True, ratio, note)
    note = (
        f"max frequency is {ratio:.4g} of the sample rate, above the "
        f"{NYQUIST_MARGIN} limit; responses near the top of the scan are unreliable"
    )
    return NyquistReport(False, ratio, note)


# ---------------------------------------------------------------------------
# CSV format


def _write_scan_csv(scan: FrequencyScan, path: str) -> None:
    cols = ["freq_hz"]
    for o in range(scan.n_outputs):
        for i in range(scan.n_inputs):
            cols.append(f"re_{o}_{i}")
            cols.append(f"im_{o}_{i}")
    lines = [",".join(cols)]
    for k in range(scan.n_frequencies):
        row = [repr(float(scan.frequencies_hz[k]))]
        for o in range(scan.n_outputs):
            for i in range(scan.n_inputs):
                v = scan.entries[o, i, k]
                row.append(repr(float(v.real)))
                row.append(repr(float(v.imag)))
        lines.append(",".join(row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_scan_csv(path: str) -> FrequencyScan:
    with open(path, newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ScanFormatError(f"{path}: empty scan file")
    header = [c.strip() for c in lines[0].split(",")]
    if not header or header[0] != "freq_hz":
        raise ScanFormatError(f"{path}: first column must be 'freq_hz', got {header[:1]}")
    pairs: dict[tuple[int, int], tuple[int, int]] = {}
    pending: dict[tuple[int, int], int] = {}
    for idx, name in enumerate(header[1:], start=1):
        m = _CSV_COL_RE.match(name)
        if m is None:
            raise ScanFormatError(f"{path}: unrecognized column '{name}'")
        part, o, i = m.group(1), int(m.group(2)), int(m.group(3))
        key = (o, i)
        if part == "re":
            if key in pairs or key in pending:
                raise ScanFormatError(f"{path}: duplicate column '{name}'")
            pending[key] = idx
        else:
            if key not in pending:
                raise ScanFormatError(
                    f"{path}: column '{name}' lacks a preceding re_{o}_{i}"
                )
            pairs[key] = (pending.pop(key), idx)
    if pending:
        o, i = next(iter(pending))
        raise ScanFormatError(f"{path}: column re_{o}_{i} lacks a matching im_{o}_{i}")
    if not pairs:
        raise ScanFormatError(f"{path}: no response columns found")
    n_out = max(o for o, _ in pairs) + 1
    n_in = max(i for _, i in pairs) + 1
    for o in range(n_out):
        for i in range(n_in):
            if (o, i) not in pairs:
                raise ScanFormatError(f"{path}: missing columns for entry ({o},{i})")

    n_rows = len(lines) - 1
    freqs = np.empty(n_rows)
    entries = np.empty((n_out, n_in, n_rows), dtype=np.complex128)
    for r, line in enumerate(lines[1:]):
        rownum = r + 2  # 1-based, counting the header line
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ScanFormatError(
                f"{path}: row {rownum} has {len(cells)} cells, expected {len(header)}"
            )
        try:
            freqs[r] = float(cells[0])
        except ValueError as exc:
            raise ScanFormatError(f"{path}: row {rownum}, freq_hz: {exc}") from exc
        for (o, i), (re_idx, im_idx) in pairs.items():
            try:
                entries[o, i, r] = complex(float(cells[re_idx]), float(cells[im_idx]))
            except ValueError as exc:
                raise ScanFormatError(
                    f"{path}: row {rownum}, entry ({o},{i}): {exc}"
                ) from exc
    try:
        return FrequencyScan(freqs, entries)
    except ValueError as exc:
        raise ScanFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# JSON format


def _write_scan_json(scan: FrequencyScan, path: str) -> None:
    labels = None
    if scan.labels is not None:
        labels = {
            "inputs": list(scan.labels.inputs),
            "outputs": list(scan.labels.outputs),
        }
    doc: dict = {
        "n_outputs": scan.n_outputs,
        "n_inputs": scan.n_inputs,
        "sample_rate_hz": scan.sample_rate,
        "labels": labels,
        "freq_hz": [float(f) for f in scan.frequencies_hz],
        "entries": [
            [
                [[float(v.real), float(v.imag)] for v in scan.entries[o, i]]
                for i in range(scan.n_inputs)
            ]
            for o in range(scan.n_outputs)
        ],
    }
    if scan.meta:
        doc["meta"] = scan.meta
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _load_scan_json(path: str) -> FrequencyScan:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScanFormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScanFormatError(f"{path}: top level must be an object")
    for key in ("n_outputs", "n_inputs", "freq_hz", "entries"):
        if key not in doc:
            raise ScanFormatError(f"{path}: missing field '{key}'")
    n_out, n_in = doc["n_outputs"], doc["n_inputs"]
    if not (isinstance(n_out, int) and isinstance(n_in, int) and n_out > 0 and n_in > 0):
        raise ScanFormatError(f"{path}: n_outputs/n_inputs must be positive integers")
    try:
        freqs = np.asarray(doc["freq_hz"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ScanFormatError(f"{path}: field 'freq_hz': {exc}") from exc
    raw = doc["entries"]
    if not isinstance(raw, list) or len(raw) != n_out:
        raise ScanFormatError(f"{path}: 'entries' must be a list of {n_out} outputs")
    entries = np.empty((n_out, n_in, len(freqs)), dtype=np.complex128)
    for o, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n_in:
            raise ScanFormatError(
                f"{path}: entries[{o}] must be a list of {n_in} inputs"
            )
        for i, samples in enumerate(row):
            try:
                arr = np.asarray(samples, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise ScanFormatError(
                    f"{path}: entries[{o}][{i}]: {exc}"
                ) from exc
            if arr.shape != (len(freqs), 2):
                raise ScanFormatError(
                    f"{path}: entries[{o}][{i}] must be {len(freqs)} [re, im] "
                    f"pairs, got shape {arr.shape}"
                )
            entries[o, i] = arr[:, 0] + 1j * arr[:, 1]
    labels = None
    if doc.get("labels") is not None:
        raw_labels = doc["labels"]
        if (
            not isinstance(raw_labels, dict)
            or "inputs" not in raw_labels
            or "outputs" not in raw_labels
        ):
            raise ScanFormatError(
                f"{path}: 'labels' must hold 'inputs' and 'outputs' lists"
            )
        labels = ChannelLabels(
            tuple(str(s) for s in raw_labels["inputs"]),
            tuple(str(s) for s in raw_labels["outputs"]),
        )
    meta = doc.get("meta") or {}
    if not isinstance(meta, dict):
        raise ScanFormatError(f"{path}: 'meta' must be an object")
    try:
        return FrequencyScan(freqs, entries, doc.get("sample_rate_hz"), labels, meta)
    except ValueError as exc:
        raise ScanFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Front door


def _resolve_format(path: str, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
        return fmt
    if path.endswith(".csv"):
        return "csv"
    if path.endswith(".json"):
        return "json"
    raise ValueError(
        f"cannot infer scan format from '{path}'; pass format='csv' or 'json'"
    )


def load_scan(path: str, fmt: str | None = None) -> FrequencyScan:
    """Load a scan file, validating structure and numeric content.

    Malformed files raise ScanFormatError naming the offending row or
    field.  A sample-rate violation is logged as a warning but does not
    reject the scan; callers decide via validate_nyquist.
    """
    if _resolve_format(path, fmt) == "csv":
        scan = _load_scan_csv(path)
    else:
        scan = _load_scan_json(path)
    report = validate_nyquist(scan)
    if not report.passed:
        logger.warning("%s: %s", path, report.note)
    return scan


def write_scan(scan: FrequencyScan, path: str, fmt: str | None = None) -> None:
    """Write a scan to disk; the Hz grid is stored bit-for-bit."""
    if _resolve_format(path, fmt) == "csv":
        _write_scan_csv(scan, path)
    else:
        _write_scan_json(scan, path)
