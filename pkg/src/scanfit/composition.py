"""Interconnection of white-box and black-box subsystem models.

A composition plan lists subsystems (each a state-space model with named
ports), gain connections between output and input ports, and the ports
kept external.  Composition eliminates the internal signals by closing the
feedthrough loop, producing one state-space model whose states are the
subsystem states, white-box subsystems first.  The returned index sets
identify white-box and black-box states for participation analysis.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import AlgebraicLoopError, PlanError
from .realization import StateSpaceModel, load_model, save_model

KINDS = ("white_box", "black_box")

# Condition-number ceiling on the feedthrough closure (I - D K).
LOOP_COND_LIMIT = 1e12


@dataclass(frozen=True)
class PortRef:
    """Reference to one named port, written ``subsystem.port`` in files."""

    subsystem: str
    port: str

    @classmethod
    def parse(cls, text: str) -> "PortRef":
        if text.count(".") != 1:
            raise PlanError(
                f"port reference '{text}' must have the form 'subsystem.port'"
            )
        sub, port = text.split(".")
        if not sub or not port:
            raise PlanError(f"port reference '{text}' has an empty component")
        return cls(sub, port)

    def __str__(self) -> str:
        return f"{self.subsystem}.{self.port}"


@dataclass(frozen=True)
class Connection:
    """Directed gain from a source output port to a target input port."""

    source: PortRef
    target: PortRef
    gain: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.gain):
            raise PlanError(f"connection {self.source}->{self.target} gain must be finite")


@dataclass(frozen=True)
class Subsystem:
    """One plan entry: a model, its role, and its port names."""

    id: str
    kind: str
    model: StateSpaceModel
    input_ports: tuple[str, ...] = ()
    output_ports: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise PlanError("subsystem id must be non-empty")
        if self.kind not in KINDS:
            raise PlanError(
                f"subsystem '{self.id}': kind must be one of {KINDS}, got "
                f"'{self.kind}'"
            )
        inputs = self.input_ports or tuple(
            f"u{i}" for i in range(self.model.n_inputs)
        )
        outputs = self.output_ports or tuple(
            f"y{i}" for i in range(self.model.n_outputs)
        )
        inputs = tuple(str(s) for s in inputs)
        outputs = tuple(str(s) for s in outputs)
        if len(inputs) != self.model.n_inputs:
            raise PlanError(
                f"subsystem '{self.id}': {len(inputs)} input ports for "
                f"{self.model.n_inputs} model inputs"
            )
        if len(outputs) != self.model.n_outputs:
            raise PlanError(
                f"subsystem '{self.id}': {len(outputs)} output ports for "
                f"{self.model.n_outputs} model outputs"
            )
        if len(set(inputs)) != len(inputs) or len(set(outputs)) != len(outputs):
            raise PlanError(f"subsystem '{self.id}': duplicate port names")
        object.__setattr__(self, "input_ports", inputs)
        object.__setattr__(self, "output_ports", outputs)


@dataclass(frozen=True)
class CompositionPlan:
    """Subsystems plus connections plus the externally visible ports."""

    subsystems: tuple[Subsystem, ...]
    connections: tuple[Connection, ...] = ()
    external_inputs: tuple[PortRef, ...] = ()
    external_outputs: tuple[PortRef, ...] = ()

    def __post_init__(self) -> None:
        subs = tuple(self.subsystems)
        if not subs:
            raise PlanError("plan has no subsystems")
        ids = [s.id for s in subs]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise PlanError(f"duplicate subsystem id '{dup}'")
        by_id = {s.id: s for s in subs}

        def check(ref: PortRef, direction: str) -> None:
            sub = by_id.get(ref.subsystem)
            if sub is None:
                raise PlanError(f"reference '{ref}' names an unknown subsystem")
            ports = sub.input_ports if direction == "input" else sub.output_ports
            if ref.port not in ports:
                raise PlanError(
                    f"'{ref}' is not an {direction} port of subsystem "
                    f"'{ref.subsystem}' (has {list(ports)})"
                )

        for conn in self.connections:
            check(conn.source, "output")
            check(conn.target, "input")
        for ref in self.external_inputs:
            check(ref, "input")
        for ref in self.external_outputs:
            check(ref, "output")
        if len(set(self.external_inputs)) != len(self.external_inputs):
            raise PlanError("duplicate external input port")
        if len(set(self.external_outputs)) != len(self.external_outputs):
            raise PlanError("duplicate external output port")
        object.__setattr__(self, "subsystems", subs)
        object.__setattr__(self, "connections", tuple(self.connections))
        object.__setattr__(self, "external_inputs", tuple(self.external_inputs))
        object.__setattr__(self, "external_outputs", tuple(self.external_outputs))

    def subsystem(self, sub_id: str) -> Subsystem:
        for sub in self.subsystems:
            if sub.id == sub_id:
                return sub
        raise PlanError(f"no subsystem '{sub_id}' in plan")


class ComposeResult(NamedTuple):
    """Composed model plus the white-box / black-box state index sets."""

    model: StateSpaceModel
    wb_states: np.ndarray
    bb_states: np.ndarray


def compose(plan: CompositionPlan) -> ComposeResult:
    """Close all plan connections into a single state-space model.

    States are ordered white-box subsystems first (plan order within each
    group), labels prefixed ``id.label``.  External inputs and outputs
    appear in their listed order.  A singular feedthrough closure raises
    AlgebraicLoopError naming the subsystems in the loop.
    """
    ordered = [s for s in plan.subsystems if s.kind == "white_box"] + [
        s for s in plan.subsystems if s.kind == "black_box"
    ]
    state_at: dict[str, int] = {}
    in_at: dict[str, int] = {}
    out_at: dict[str, int] = {}
    n = n_u = n_y = 0
    for sub in ordered:
        state_at[sub.id] = n
        in_at[sub.id] = n_u
        out_at[sub.id] = n_y
        n += sub.model.n_states
        n_u += sub.model.n_inputs
        n_y += sub.model.n_outputs

    a = np.zeros((n, n))
    b = np.zeros((n, n_u))
    c = np.zeros((n_y, n))
    d = np.zeros((n_y, n_u))
    labels: list[str] = []
    for sub in ordered:
        i, j, k = state_at[sub.id], in_at[sub.id], out_at[sub.id]
        ns, ni, no = sub.model.n_states, sub.model.n_inputs, sub.model.n_outputs
        a[i : i + ns, i : i + ns] = sub.model.a
        b[i : i + ns, j : j + ni] = sub.model.b
        c[k : k + no, i : i + ns] = sub.model.c
        d[k : k + no, j : j + ni] = sub.model.d
        labels.extend(f"{sub.id}.{lbl}" for lbl in sub.model.state_labels)

    def u_index(ref: PortRef) -> int:
        sub = plan.subsystem(ref.subsystem)
        return in_at[sub.id] + sub.input_ports.index(ref.port)

    def y_index(ref: PortRef) -> int:
        sub = plan.subsystem(ref.subsystem)
        return out_at[sub.id] + sub.output_ports.index(ref.port)

    gain = np.zeros((n_u, n_y))
    for conn in plan.connections:
        gain[u_index(conn.target), y_index(conn.source)] += conn.gain
    select_in = np.zeros((n_u, len(plan.external_inputs)))
    for col, ref in enumerate(plan.external_inputs):
        select_in[u_index(ref), col] = 1.0
    select_out = np.zeros((len(plan.external_outputs), n_y))
    for row, ref in enumerate(plan.external_outputs):
        select_out[row, y_index(ref)] = 1.0

    closure = np.eye(n_y) - d @ gain
    cond = np.linalg.cond(closure)
    if not np.isfinite(cond) or cond > LOOP_COND_LIMIT:
        members = sorted(
            {
                conn.source.subsystem
                for conn in plan.connections
                if np.any(plan.subsystem(conn.source.subsystem).model.d != 0.0)
            }
            | {
                conn.target.subsystem
                for conn in plan.connections
                if np.any(plan.subsystem(conn.target.subsystem).model.d != 0.0)
            }
        ) or sorted(
            {conn.source.subsystem for conn in plan.connections}
            | {conn.target.subsystem for conn in plan.connections}
        )
        raise AlgebraicLoopError(
            f"feedthrough closure is singular (cond {cond:.3g} > "
            f"{LOOP_COND_LIMIT:.0g}); subsystems in the loop: "
            f"{', '.join(members)}"
        )

    # u = gain*y + select_in*u_ext with y = C x + D u; eliminate u.
    m = np.eye(n_u) - gain @ d
    g = np.linalg.solve(m, gain @ c)
    h = np.linalg.solve(m, select_in)
    a_cl = a + b @ g
    b_cl = b @ h
    c_cl = select_out @ (c + d @ g)
    d_cl = select_out @ d @ h

    n_wb = sum(s.model.n_states for s in ordered if s.kind == "white_box")
    model = StateSpaceModel(
        a_cl, b_cl, c_cl, d_cl, tuple(labels),
        {
            "external_inputs": [str(r) for r in plan.external_inputs],
            "external_outputs": [str(r) for r in plan.external_outputs],
        },
    )
    return ComposeResult(model, np.arange(n_wb), np.arange(n_wb, n))


def scale_subsystem(
    plan: CompositionPlan, sub_id: str, factor: float
) -> CompositionPlan:
    """Scale one subsystem's coupling strength by ``factor``.

    B and C are both multiplied by sqrt(factor), so every closed-loop gain
    path through the subsystem scales linearly while its internal dynamics
    (A, and the feedthrough D) stay put.  A factor of one returns the plan
    unchanged.
    """
    if not (math.isfinite(factor) and factor > 0.0):
        raise ValueError(f"scale factor must be positive and finite, got {factor}")
    target = plan.subsystem(sub_id)
    if factor == 1.0:
        return plan
    root = math.sqrt(factor)
    scaled_model = StateSpaceModel(
        target.model.a,
        root * target.model.b,
        root * target.model.c,
        target.model.d,
        target.model.state_labels,
        dict(target.model.meta),
    )
    new_subs = tuple(
        replace(s, model=scaled_model) if s.id == sub_id else s
        for s in plan.subsystems
    )
    return replace(plan, subsystems=new_subs)


@dataclass(frozen=True)
class SweepPoint:
    """Result at one sweep factor; ``eigenvalues`` are ordered by mode id."""

    factor: float
    model: StateSpaceModel | None
    eigenvalues: np.ndarray | None
    failed: bool
    note: str


@dataclass(frozen=True)
class SweepResult:
    """Mode trajectories over a scaling sweep."""

    subsystem_id: str
    points: tuple[SweepPoint, ...]
    crossing_factor: float | None
    crossing_mode: int | None
    wb_states: np.ndarray
    bb_states: np.ndarray

    def crossing_bracket(self) -> tuple[float | None, float] | None:
        """(last factor seen stable, first unstable factor), or None when
        the sweep stays stable throughout."""
        if self.crossing_factor is None:
            return None
        last_stable = None
        for pt in self.points:
            if pt.factor == self.crossing_factor:
                break
            if not pt.failed and pt.eigenvalues is not None and np.all(
                pt.eigenvalues.real < 0.0
            ):
                last_stable = pt.factor
        return (last_stable, self.crossing_factor)


def _damping(lam: np.ndarray) -> np.ndarray:
    mag = np.abs(lam)
    out = np.zeros(len(lam))
    nz = mag > 0.0
    out[nz] = -lam[nz].real / mag[nz]
    return out


def _match_modes(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Greedy nearest-neighbor assignment of ``new`` onto ``prev`` order.

    Distance is |a-b| / (|b|+1); ties break on damping-ratio similarity,
    then on index order, keeping the matching deterministic.
    """
    n = len(prev)
    prev_z = _damping(prev)
    new_z = _damping(new)
    pairs = []
    for i, p in enumerate(prev):
        for j, q in enumerate(new):
            dist = abs(q - p) / (abs(p) + 1.0)
            pairs.append((dist, abs(new_z[j] - prev_z[i]), i, j, q))
    pairs.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    out = np.empty(n, dtype=np.complex128)
    used_i: set[int] = set()
    used_j: set[int] = set()
    for _, _, i, j, q in pairs:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        out[i] = q
        if len(used_i) == n:
            break
    return out


def sensitivity_sweep(
    plan: CompositionPlan,
    sub_id: str,
    factors: Sequence[float],
    plan_for_factor: Callable[[float], CompositionPlan] | None = None,
    on_factor: Callable[[float, ComposeResult], None] | None = None,
) -> SweepResult:
    """Compose the plan across scaling factors and track modes.

    Mode ids are assigned at the first successful factor (most critical
    eigenvalue first) and tracked by nearest-neighbor matching; the first
    factor with any eigenvalue real part >= 0 is reported as the crossing.
    A failure at one factor is recorded and skipped, not fatal.
    ``plan_for_factor`` substitutes externally supplied per-factor plans
    for the default B/C scaling; ``on_factor`` observes each composition.
    """
    factors = [float(f) for f in factors]
    if not factors:
        raise ValueError("no sweep factors given")
    plan.subsystem(sub_id)  # validate early
    points: list[SweepPoint] = []
    reference: np.ndarray | None = None
    wb = bb = np.arange(0)
    crossing_factor = None
    crossing_mode = None
    for factor in factors:
        try:
            scaled = (
                plan_for_factor(factor)
                if plan_for_factor is not None
                else scale_subsystem(plan, sub_id, factor)
            )
            result = compose(scaled)
            if on_factor is not None:
                on_factor(factor, result)
            lam = np.linalg.eigvals(result.model.a)
        except Exception as exc:  # noqa: BLE001 - recorded per point
            points.append(SweepPoint(factor, None, None, True, str(exc)))
            continue
        if reference is None:
            # Most critical first: descending real part, then frequency.
            order = np.lexsort((np.abs(lam.imag), -lam.real))
            matched = lam[order]
            wb, bb = result.wb_states, result.bb_states
        else:
            matched = _match_modes(reference, lam)
        reference = matched
        points.append(SweepPoint(factor, result.model, matched, False, ""))
        if crossing_factor is None and np.any(matched.real >= 0.0):
            crossing_factor = factor
            crossing_mode = int(np.argmax(matched.real))
    return SweepResult(
        sub_id, tuple(points), crossing_factor, crossing_mode, wb, bb
    )


# ---------------------------------------------------------------------------
# Plan files


def load_plan(path: str) -> CompositionPlan:
    """Read a plan file; model references resolve relative to the plan."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlanError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "subsystems" not in doc:
        raise PlanError(f"{path}: plan must be an object with 'subsystems'")
    base = os.path.dirname(os.path.abspath(path))
    subs = []
    for idx, raw in enumerate(doc["subsystems"]):
        if not isinstance(raw, dict):
            raise PlanError(f"{path}: subsystems[{idx}] must be an object")
        for key in ("id", "kind", "model"):
            if key not in raw:
                raise PlanError(f"{path}: subsystems[{idx}] missing '{key}'")
        model_path = raw["model"]
        if not os.path.isabs(model_path):
            model_path = os.path.join(base, model_path)
        if not os.path.exists(model_path):
            raise PlanError(
                f"{path}: subsystems[{idx}] model file not found: {model_path}"
            )
        subs.append(
            Subsystem(
                str(raw["id"]),
                str(raw["kind"]),
                load_model(model_path),
                tuple(raw.get("inputs", ())),
                tuple(raw.get("outputs", ())),
            )
        )
    conns = []
    for idx, raw in enumerate(doc.get("connections", [])):
        if not (isinstance(raw, list) and len(raw) == 3):
            raise PlanError(
                f"{path}: connections[{idx}] must be [source, target, gain]"
            )
        try:
            gain = float(raw[2])
        except (TypeError, ValueError) as exc:
            raise PlanError(f"{path}: connections[{idx}] gain: {exc}") from exc
        conns.append(
            Connection(PortRef.parse(str(raw[0])), PortRef.parse(str(raw[1])), gain)
        )
    ext = doc.get("externals", {}) or {}
    if not isinstance(ext, dict):
        raise PlanError(f"{path}: 'externals' must be an object")
    ext_in = tuple(PortRef.parse(str(t)) for t in ext.get("inputs", ()))
    ext_out = tuple(PortRef.parse(str(t)) for t in ext.get("outputs", ()))
    try:
        return CompositionPlan(tuple(subs), tuple(conns), ext_in, ext_out)
    except PlanError as exc:
        raise PlanError(f"{path}: {exc}") from exc


def save_plan(plan: CompositionPlan, path: str) -> None:
    """Write a plan and its subsystem models next to it.

    Each model lands in ``<id>.model.json`` beside the plan file, which
    references them by that relative name.
    """
    base = os.path.dirname(os.path.abspath(path))
    doc = {
        "subsystems": [
            {
                "id": sub.id,
                "kind": sub.kind,
                "model": f"{sub.id}.model.json",
                "inputs": list(sub.input_ports),
                "outputs": list(sub.output_ports),
            }
            for sub in plan.subsystems
        ],
        "connections": [
            [str(c.source), str(c.target), c.gain] for c in plan.connections
        ],
        "externals": {
            "inputs": [str(r) for r in plan.external_inputs],
            "outputs": [str(r) for r in plan.external_outputs],
        },
    }
    for sub in plan.subsystems:
        save_model(sub.model, os.path.join(base, f"{sub.id}.model.json"))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
