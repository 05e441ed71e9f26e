import numpy as np
import pytest
import scipy.linalg

from scanfit import (
    frequency_response,
    random_rational_model,
    random_stable_system,
    reference_converter_plant,
    sample_response,
    step_response_rk4,
)


def test_random_stable_system_deterministic():
    a = random_stable_system(6, 2, 2, seed=5)
    b = random_stable_system(6, 2, 2, seed=5)
    np.testing.assert_array_equal(a.truth.a, b.truth.a)
    np.testing.assert_array_equal(a.truth.b, b.truth.b)
    np.testing.assert_array_equal(a.truth_poles, b.truth_poles)
    c = random_stable_system(6, 2, 2, seed=6)
    assert not np.array_equal(a.truth.a, c.truth.a)


def test_random_stable_system_properties():
    rng = np.random.default_rng(1)
    for trial in range(30):
        order = int(rng.integers(1, 13))
        n_in = int(rng.integers(1, 4))
        n_out = int(rng.integers(1, 4))
        plant = random_stable_system(order, n_in, n_out, seed=3000 + trial)
        ss = plant.truth
        assert ss.n_states == order
        assert (ss.n_inputs, ss.n_outputs) == (n_in, n_out)
        assert plant.order == order
        eig = ss.eigenvalues()
        assert np.all(eig.real < 0.0)
        # Spectrum is closed under conjugation.
        np.testing.assert_allclose(
            np.sort_complex(eig), np.sort_complex(eig.conjugate()), rtol=1e-12
        )
        # Declared poles match the realized spectrum.
        for p in plant.truth_poles:
            assert np.min(np.abs(eig - p)) < 1e-9 * max(abs(p), 1.0)
        np.testing.assert_array_equal(ss.d, np.zeros((n_out, n_in)))


def test_random_stable_system_validates():
    with pytest.raises(ValueError):
        random_stable_system(0)
    with pytest.raises(ValueError):
        random_stable_system(2, 0, 1)
    with pytest.raises(ValueError):
        random_stable_system(2, freq_range=(10.0, 1.0))


def test_sample_response_noise_free_is_exact():
    plant = random_stable_system(4, 2, 1, seed=9)
    freqs = np.linspace(0.5, 500.0, 40)
    scan = sample_response(plant, freqs)
    direct = frequency_response(plant.truth, 2j * np.pi * freqs)
    np.testing.assert_array_equal(
        scan.entries, np.transpose(direct, (1, 2, 0))
    )
    assert scan.sample_rate is None
    rated = sample_response(plant, freqs, sample_rate=1e5)
    assert rated.sample_rate == 1e5


def test_sample_response_noise_deterministic_and_scaled():
    plant = random_stable_system(4, seed=12)
    freqs = np.linspace(0.5, 500.0, 400)
    a = sample_response(plant, freqs, noise_rel=1e-3)
    b = sample_response(plant, freqs, noise_rel=1e-3)
    np.testing.assert_array_equal(a.entries, b.entries)
    clean = sample_response(plant, freqs)
    rel = np.abs(a.entries / clean.entries - 1.0)
    assert 2e-4 < rel.mean() < 5e-3
    with pytest.raises(ValueError):
        sample_response(plant, freqs, noise_rel=-0.1)


def test_reference_plant_is_frozen():
    plant = reference_converter_plant()
    assert plant.order == 10
    assert (plant.truth.n_inputs, plant.truth.n_outputs) == (1, 1)
    expected = np.sort_complex(np.array([
        -406.5 + 407.1j, -406.5 - 407.1j,
        -8.555, -8.655, -199.9, -200.0, -251.3, -251.3, -9774.0, -10000.0,
    ], dtype=complex))
    np.testing.assert_allclose(
        np.sort_complex(plant.truth_poles), expected, rtol=0, atol=0
    )
    again = reference_converter_plant()
    np.testing.assert_array_equal(plant.truth.b, again.truth.b)


def test_random_rational_model_structure():
    rng = np.random.default_rng(3)
    for trial in range(20):
        order = int(rng.integers(1, 11))
        model = random_rational_model(order, seed=4000 + trial)
        assert model.poles.order == order
        assert model.poles.is_stable
        vals = model.poles.values
        res = model.residues
        kinds = model.poles.kinds()
        for k, kind in enumerate(kinds):
            if kind == 1:
                assert vals[k + 1] == vals[k].conjugate()
                assert res[k + 1] == res[k].conjugate()
            elif kind == 0:
                assert vals[k].imag == 0.0
                assert res[k].imag == 0.0


def test_step_response_rk4_first_order_frozen():
    from conftest import first_order_lag

    t, y = step_response_rk4(first_order_lag(), 0, 0, 5.0, 60)
    np.testing.assert_allclose(y, 1.0 - np.exp(-t), atol=1e-10)


def test_step_response_rk4_oscillator_frozen():
    from scanfit import StateSpaceModel

    # x'' = -x + u from rest: y = 1 - cos(t).
    ss = StateSpaceModel(
        np.array([[0.0, 1.0], [-1.0, 0.0]]),
        np.array([[0.0], [1.0]]),
        np.array([[1.0, 0.0]]),
        np.array([[0.0]]),
    )
    t, y = step_response_rk4(ss, 0, 0, 6.0, 80)
    np.testing.assert_allclose(y, 1.0 - np.cos(t), atol=1e-8)


def test_step_response_rk4_matches_matrix_exponential():
    rng = np.random.default_rng(8)
    for trial in range(6):
        order = int(rng.integers(2, 7))
        ss = random_stable_system(
            order, 2, 2, seed=5000 + trial, freq_range=(1.0, 100.0)
        ).truth
        t_end = 2.0 / np.abs(ss.eigenvalues().real).min()
        t, y = step_response_rk4(ss, 1, 0, t_end, 40)
        ainv_b = np.linalg.solve(ss.a, ss.b[:, 1])
        exact = np.array([
            ss.c[0] @ ((scipy.linalg.expm(ss.a * tk) - np.eye(order)) @ ainv_b)
            for tk in t
        ]) + ss.d[0, 1]
        scale = max(np.abs(exact).max(), 1e-12)
        np.testing.assert_allclose(y, exact, atol=1e-9 * scale)


def test_step_response_rk4_validates():
    from conftest import first_order_lag

    lag = first_order_lag()
    with pytest.raises(ValueError):
        step_response_rk4(lag, 0, 0, 0.0, 10)
    with pytest.raises(ValueError):
        step_response_rk4(lag, 0, 0, 1.0, 1)
    with pytest.raises(IndexError):
        step_response_rk4(lag, 1, 0, 1.0, 10)
    with pytest.raises(IndexError):
        step_response_rk4(lag, 0, 1, 1.0, 10)
