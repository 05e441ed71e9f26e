import numpy as np
import pytest

from scanfit import (
    PoleSet,
    RationalModel,
    SisoResponse,
    enforce_stability,
    initial_poles,
    relative_weights,
    rms_error,
    vf_iteration,
)
from scanfit.synthetic import random_rational_model


def test_initial_poles_frozen_even():
    poles = initial_poles(4, 10.0, 1000.0)
    expected = np.array(
        [-0.1 + 10.0j, -0.1 - 10.0j, -10.0 + 1000.0j, -10.0 - 1000.0j]
    )
    np.testing.assert_allclose(poles.values, expected, rtol=0, atol=0)


def test_initial_poles_frozen_single_pair():
    poles = initial_poles(2, 50.0, 100.0)
    np.testing.assert_allclose(poles.values, [-0.5 + 50.0j, -0.5 - 50.0j])


def test_initial_poles_odd_appends_real():
    poles = initial_poles(3, 10.0, 1000.0)
    np.testing.assert_allclose(
        poles.values, [-0.1 + 10.0j, -0.1 - 10.0j, -505.0]
    )
    assert initial_poles(1, 10.0, 1000.0).values[0] == -505.0


def test_initial_poles_validates():
    with pytest.raises(ValueError):
        initial_poles(0, 1.0, 10.0)
    with pytest.raises(ValueError):
        initial_poles(2, 10.0, 10.0)
    with pytest.raises(ValueError):
        initial_poles(2, -1.0, 10.0)


def test_pole_set_canonical_pairing():
    # Conjugates may arrive in any order and slightly off; the set snaps
    # them into adjacent (+Im, -Im) pairs, keeping encounter order.
    p = -3.0 + 40.0j
    ps = PoleSet(np.array([-1.0, p.conjugate() + 1e-14j, p]))
    assert ps.order == 3
    vals = ps.values
    assert vals[0] == -1.0
    assert vals[1].imag > 0
    assert vals[2] == vals[1].conjugate()


def test_pole_set_rejects_unpaired_and_duplicate():
    with pytest.raises(ValueError):
        PoleSet(np.array([-1.0 + 5.0j]))
    with pytest.raises(ValueError):
        PoleSet(np.array([-1.0, -1.0]))


def test_pole_set_kinds_and_stability():
    ps = PoleSet(np.array([-2.0 + 9.0j, -2.0 - 9.0j, -7.0]))
    assert list(ps.kinds()) == [1, 2, 0]
    assert ps.is_stable
    assert not PoleSet(np.array([3.0])).is_stable


def test_enforce_stability_cases():
    flipped = enforce_stability(PoleSet(np.array([2.0 + 30.0j, 2.0 - 30.0j])))
    np.testing.assert_allclose(flipped.values, [-2.0 + 30.0j, -2.0 - 30.0j])

    axis = enforce_stability(PoleSet(np.array([7.0j, -7.0j])))
    np.testing.assert_allclose(axis.values, [-7e-6 + 7.0j, -7e-6 - 7.0j])

    origin = enforce_stability(PoleSet(np.array([0.0])))
    assert origin.values[0] == -1e-6

    stable = PoleSet(np.array([-4.0]))
    again = enforce_stability(stable)
    np.testing.assert_array_equal(again.values, stable.values)
    np.testing.assert_array_equal(
        enforce_stability(again).values, again.values
    )


def test_rational_model_frozen_value():
    model = RationalModel(PoleSet(np.array([-2.0])), np.array([3.0 + 0.0j]), 0.5)
    s = 1.0j
    expected = 0.5 + 3.0 / (s + 2.0)
    assert model(np.array([s]))[0] == pytest.approx(expected, rel=1e-15)


def test_rational_model_conjugate_symmetry():
    model = random_rational_model(6, seed=9)
    s = np.array([0.3 + 2.0j, -1.0 + 5.0j])
    upper = model(s)
    lower = model(s.conjugate())
    np.testing.assert_allclose(lower, upper.conjugate(), rtol=1e-13)


def test_rational_model_validates():
    with pytest.raises(ValueError):
        RationalModel(PoleSet(np.array([-1.0])), np.array([1.0, 2.0]), 0.0)
    with pytest.raises(ValueError):
        RationalModel(PoleSet(np.array([-1.0])), np.array([1.0]), np.nan)
    with pytest.raises(ValueError):
        RationalModel(PoleSet(np.array([-1.0])), np.array([1.0]), 0.0, e_term=1.0)
    # A complex pair needs conjugate residues.
    with pytest.raises(ValueError):
        RationalModel(
            PoleSet(np.array([-1.0 + 5.0j, -1.0 - 5.0j])),
            np.array([1.0 + 2.0j, 1.0 + 2.0j]),
            0.0,
        )


def test_rms_error_frozen():
    resp = SisoResponse(np.array([1.0, 2.0]), np.array([3.0 + 0.0j, 0.0 + 4.0j]))
    model = RationalModel(PoleSet(np.array([-1.0])), np.array([0.0 + 0.0j]), 0.0)
    assert rms_error(resp, model) == pytest.approx(3.5355339059327378, rel=0, abs=0)


def test_relative_weights():
    freqs = np.array([1.0, 2.0, 3.0])
    resp = SisoResponse(freqs, np.array([1.0, 10.0, 0.0], dtype=complex))
    w = relative_weights(resp)
    assert w[0] == pytest.approx(1.0)
    assert w[1] == pytest.approx(0.1)
    assert w[2] == pytest.approx(1.0 / (1e-8 * 10.0))
    silent = SisoResponse(freqs, np.zeros(3, dtype=complex))
    np.testing.assert_array_equal(relative_weights(silent), np.ones(3))


def _sample(model, omega):
    return SisoResponse(omega, model(1j * omega))


def test_vf_iteration_fixed_point_at_truth():
    # Starting from the exact poles, the scaling function is identity and
    # relocation returns the same poles with the true residues.
    truth = random_rational_model(5, seed=2)
    omega = np.linspace(0.5, 8000.0, 160)
    resp = _sample(truth, omega)
    poles, fit = vf_iteration(resp, truth.poles)
    np.testing.assert_allclose(poles.values, truth.poles.values, rtol=1e-7)
    np.testing.assert_allclose(fit.residues, truth.residues, rtol=1e-6, atol=1e-9)
    assert fit.d_term == pytest.approx(truth.d_term, rel=1e-6, abs=1e-9)


def test_vf_iteration_converges_from_perturbed_start():
    rng = np.random.default_rng(7)
    for trial in range(8):
        order = int(rng.integers(2, 7))
        truth = random_rational_model(order, seed=100 + trial)
        omega = np.geomspace(0.05, 5e4, 240)
        resp = _sample(truth, omega)
        poles = initial_poles(order, omega[0], omega[-1])
        fit = None
        for _ in range(12):
            poles, fit = vf_iteration(resp, poles)
        err = rms_error(resp, fit)
        scale = float(np.abs(resp.values).max())
        assert err < 1e-8 * scale, f"trial {trial}: rms {err}"
        for p in truth.poles.values:
            rel = np.min(np.abs(poles.values - p)) / abs(p)
            assert rel < 1e-6, f"trial {trial}: pole {p} off by {rel}"


def test_vf_iteration_output_always_stable():
    rng = np.random.default_rng(3)
    omega = np.linspace(1.0, 100.0, 40)
    values = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    resp = SisoResponse(omega, values)
    poles = initial_poles(4, 1.0, 100.0)
    for _ in range(5):
        poles, fit = vf_iteration(resp, poles)
        assert poles.is_stable
        assert fit.poles.is_stable


def test_vf_iteration_needs_enough_samples():
    omega = np.linspace(1.0, 10.0, 8)
    resp = SisoResponse(omega, np.ones(8, dtype=complex))
    with pytest.raises(ValueError, match="samples"):
        vf_iteration(resp, initial_poles(4, 1.0, 10.0))


def test_vf_iteration_zero_response():
    omega = np.linspace(1.0, 100.0, 30)
    resp = SisoResponse(omega, np.zeros(30, dtype=complex))
    poles, fit = vf_iteration(resp, initial_poles(2, 1.0, 100.0))
    np.testing.assert_allclose(fit(1j * omega), 0.0, atol=1e-12)


def test_vf_iteration_with_weights():
    truth = random_rational_model(4, seed=5)
    omega = np.geomspace(0.1, 1e4, 150)
    resp = _sample(truth, omega)
    weights = relative_weights(resp)
    poles = initial_poles(4, omega[0], omega[-1])
    for _ in range(10):
        poles, fit = vf_iteration(resp, poles, weights=weights)
    assert rms_error(resp, fit) < 1e-8 * float(np.abs(resp.values).max())
