import json

import numpy as np
import pytest

from scanfit import (
    FitConfig,
    FitTrace,
    PoleSet,
    RationalModel,
    RoundRecord,
    SisoResponse,
    fit_adaptive,
    initial_poles,
)
from scanfit.adaptive import expand_poles, locate_max_error, midpoint_frequency
from scanfit.synthetic import random_rational_model


def _sample(model, omega):
    return SisoResponse(omega, model(1j * omega))


def test_locate_max_error_picks_lowest_on_tie():
    omega = np.array([1.0, 2.0, 3.0, 4.0])
    values = np.array([1.0, 2.0, 2.0, 0.5], dtype=complex)
    resp = SisoResponse(omega, values)
    zero = RationalModel(PoleSet(np.array([-1.0])), np.array([0.0 + 0.0j]), 0.0)
    assert locate_max_error(resp, zero) == 1


def test_midpoint_frequency_interior_and_edges():
    omega = np.array([1.0, 4.0, 9.0, 20.0])
    resp = SisoResponse(omega, np.zeros(4, dtype=complex))
    assert midpoint_frequency(resp, 1) == 1j * (1.0 + 9.0) / 2.0
    assert midpoint_frequency(resp, 0) == 1j * (1.0 + 4.0) / 2.0
    assert midpoint_frequency(resp, 3) == 1j * (9.0 + 20.0) / 2.0
    single = SisoResponse(np.array([5.0]), np.zeros(1, dtype=complex))
    assert midpoint_frequency(single, 0) == 5.0j


def test_expand_poles_adds_conjugate_pair():
    base = PoleSet(np.array([-1.0]))
    grown = expand_poles(base, 50.0j, 1e-3)
    assert grown.order == 3
    vals = grown.values
    assert vals[1] == pytest.approx(-1e-4 * 50.0 + 50.0j)
    assert vals[2] == vals[1].conjugate()


def test_expand_poles_low_frequency_becomes_real():
    base = PoleSet(np.array([-10.0]))
    grown = expand_poles(base, complex(-5e-4, 0.0), 1e-3)
    assert grown.order == 2
    assert grown.values[1] == pytest.approx(-5e-4)

    at_zero = expand_poles(base, 0.0 + 0.0j, 1e-3)
    assert at_zero.values[1] == pytest.approx(-1e-3)


def test_expand_poles_perturbs_duplicates():
    base = PoleSet(np.array([-5e-3 + 50.0j, -5e-3 - 50.0j]))
    grown = expand_poles(base, 50.0j, 1e-3)
    assert grown.order == 4
    fresh = grown.values[2]
    assert fresh != base.values[0]
    assert abs(fresh.imag - 50.0 * 1.001) < 1e-9

    reals = PoleSet(np.array([-2e-4]))
    grown = expand_poles(reals, complex(-2e-4, 0.0), 1e-3)
    assert grown.values[1] != -2e-4
    assert grown.values[1] == pytest.approx(-2e-4 * 1.001)


def test_fit_config_validation():
    with pytest.raises(ValueError):
        FitConfig(tol=0.0)
    with pytest.raises(ValueError):
        FitConfig(inner_iters=0)
    with pytest.raises(ValueError):
        FitConfig(max_order=0)
    with pytest.raises(ValueError):
        FitConfig(dc_threshold=-1.0)


def test_fit_adaptive_converges_and_traces():
    truth = random_rational_model(6, seed=42)
    omega = np.geomspace(0.1, 2e4, 200)
    resp = _sample(truth, omega)
    init = initial_poles(2, omega[0], omega[-1])
    model, trace = fit_adaptive(resp, init, FitConfig(tol=1e-9, max_order=30))
    assert trace.converged
    assert trace.stop_reason == "converged"
    assert trace.final_rms < 1e-9
    orders = [rec.order for rec in trace.records]
    assert orders == sorted(orders)
    assert trace.final_order == model.poles.order
    # Every truth pole is recovered by the expanded fit.
    for p in truth.poles.values:
        assert np.min(np.abs(model.poles.values - p)) / abs(p) < 1e-6


def test_fit_adaptive_records_insertions():
    truth = random_rational_model(5, seed=8)
    omega = np.geomspace(0.1, 2e4, 150)
    resp = _sample(truth, omega)
    init = initial_poles(2, omega[0], omega[-1])
    _, trace = fit_adaptive(resp, init, FitConfig(tol=1e-9, max_order=20))
    grew = [rec for rec in trace.records if rec.inserted is not None]
    assert grew, "expected at least one expansion round"
    # A recorded insertion is exactly what separates one order from the next.
    for prev, rec in zip(trace.records, trace.records[1:]):
        if rec.order > prev.order:
            assert prev.inserted is not None


def test_fit_adaptive_max_order_stop():
    truth = random_rational_model(8, seed=13)
    omega = np.geomspace(0.1, 2e4, 200)
    resp = _sample(truth, omega)
    init = initial_poles(2, omega[0], omega[-1])
    model, trace = fit_adaptive(resp, init, FitConfig(tol=1e-14, max_order=3))
    assert not trace.converged
    assert trace.stop_reason == "max_order"
    assert model.poles.order <= 3


def test_fit_adaptive_sample_limit_stop():
    truth = random_rational_model(6, seed=21)
    omega = np.geomspace(1.0, 1e4, 10)
    resp = _sample(truth, omega)
    init = initial_poles(4, omega[0], omega[-1])
    _, trace = fit_adaptive(resp, init, FitConfig(tol=1e-14, max_order=40))
    assert not trace.converged
    assert trace.stop_reason == "sample_limit"


def test_fit_adaptive_validates_inputs():
    omega = np.linspace(1.0, 10.0, 30)
    resp = SisoResponse(omega, np.ones(30, dtype=complex))
    with pytest.raises(ValueError):
        fit_adaptive(resp, PoleSet(np.array([2.0])), FitConfig())
    with pytest.raises(ValueError):
        fit_adaptive(resp, initial_poles(4, 1.0, 10.0), FitConfig(max_order=2))


def test_trace_jsonl_round_trip():
    trace = FitTrace(
        (
            RoundRecord(1, 2, 0.25, None, 1.5),
            RoundRecord(2, 4, 1e-7, complex(-0.1, 30.0), 2.0),
        ),
        converged=True,
    )
    text = trace.to_jsonl(include_timing=False)
    docs = [json.loads(line) for line in text.strip().split("\n")]
    assert docs[0] == {"round": 1, "order": 2, "rms": 0.25, "inserted": None}
    assert docs[1]["inserted"] == [-0.1, 30.0]
    assert "ms" not in docs[1]
    timed = [json.loads(line) for line in trace.to_jsonl().strip().split("\n")]
    assert timed[0]["ms"] == 1.5


def test_trace_write_jsonl(tmp_path):
    trace = FitTrace((RoundRecord(1, 2, 0.5, None, 0.0),), converged=False,
                     stop_reason="max_order")
    path = tmp_path / "trace.jsonl"
    trace.write_jsonl(str(path), include_timing=False)
    assert path.read_text() == '{"round": 1, "order": 2, "rms": 0.5, "inserted": null}\n'
