import numpy as np
import pytest

from scanfit import (
    ModelFormatError,
    SingularFrequencyError,
    StateSpaceModel,
    assemble_mimo,
    eval_tf,
    frequency_response,
    load_model,
    realize_complex_pair,
    realize_real_pole,
    realize_siso,
    save_model,
)
from scanfit.synthetic import random_rational_model, random_stable_system


def test_state_space_model_validation():
    a = np.zeros((2, 2))
    b = np.zeros((2, 1))
    c = np.zeros((1, 2))
    d = np.zeros((1, 1))
    ss = StateSpaceModel(a, b, c, d)
    assert (ss.n_states, ss.n_inputs, ss.n_outputs) == (2, 1, 1)
    assert ss.state_labels == ("x0", "x1")

    with pytest.raises(ValueError):
        StateSpaceModel(np.zeros((2, 3)), b, c, d)
    with pytest.raises(ValueError):
        StateSpaceModel(a, np.zeros((3, 1)), c, d)
    with pytest.raises(ValueError):
        StateSpaceModel(a, b, np.zeros((1, 3)), d)
    with pytest.raises(ValueError):
        StateSpaceModel(a, b, c, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        StateSpaceModel(a * np.nan, b, c, d)
    with pytest.raises(ValueError):
        StateSpaceModel(a, b, c, d, state_labels=("x0",))


def test_state_space_model_immutable():
    ss = StateSpaceModel(
        np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[0.0]])
    )
    with pytest.raises(ValueError):
        ss.a[0, 0] = 5.0


def test_eigenvalues_of_known_matrix():
    ss = StateSpaceModel(
        np.array([[-1.0, 10.0], [-10.0, -1.0]]),
        np.zeros((2, 1)),
        np.zeros((1, 2)),
        np.zeros((1, 1)),
    )
    eig = np.sort_complex(ss.eigenvalues())
    np.testing.assert_allclose(eig, [-1.0 - 10.0j, -1.0 + 10.0j], rtol=1e-14)


def test_realize_real_pole_frozen():
    ss = realize_real_pole(-5.0, 2.0)
    # 2/(s+5) at s=0 is 0.4.
    assert eval_tf(ss, 0.0)[0, 0] == pytest.approx(0.4, rel=1e-15)
    with pytest.raises(ValueError):
        realize_real_pole(-5.0 + 1.0j, 2.0)


def test_realize_complex_pair_frozen():
    ss = realize_complex_pair(-1.0, 10.0, 3.0 + 4.0j)
    np.testing.assert_array_equal(
        ss.a, np.array([[-1.0, 10.0], [-10.0, -1.0]])
    )
    np.testing.assert_array_equal(ss.b, np.array([[2.0], [0.0]]))
    np.testing.assert_array_equal(ss.c, np.array([[3.0, 4.0]]))
    # r/(s-p) + conj(r)/(s-conj(p)) with p = -1+10j, r = 3+4j at s = 10j.
    p, r = -1.0 + 10.0j, 3.0 + 4.0j
    s = 10.0j
    expected = r / (s - p) + r.conjugate() / (s - p.conjugate())
    got = eval_tf(ss, s)[0, 0]
    assert got == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        realize_complex_pair(-1.0, -10.0, 1.0 + 0.0j)


def test_realize_siso_matches_rational_model():
    rng = np.random.default_rng(17)
    for trial in range(25):
        order = int(rng.integers(1, 11))
        model = random_rational_model(order, seed=300 + trial)
        ss = realize_siso(model)
        assert ss.n_states == order
        omega = np.geomspace(0.05, 5e4, 25)
        direct = model(1j * omega)
        realized = frequency_response(ss, 1j * omega)[:, 0, 0]
        scale = np.abs(direct).max()
        np.testing.assert_allclose(realized, direct, atol=1e-12 * scale, rtol=1e-10)


def test_assemble_mimo_block_structure():
    models = [[random_rational_model(3, seed=i * 10 + j) for j in range(2)]
              for i in range(2)]
    grid = [[realize_siso(m) for m in row] for row in models]
    mimo = assemble_mimo(grid)
    assert mimo.n_states == sum(g.n_states for row in grid for g in row)
    assert (mimo.n_outputs, mimo.n_inputs) == (2, 2)
    omega = np.geomspace(0.1, 1e4, 15)
    resp = frequency_response(mimo, 1j * omega)
    for o in range(2):
        for i in range(2):
            direct = models[o][i](1j * omega)
            scale = np.abs(direct).max()
            np.testing.assert_allclose(
                resp[:, o, i], direct, atol=1e-11 * scale, rtol=1e-9
            )


def test_assemble_mimo_validates_grid():
    m = realize_siso(random_rational_model(2, seed=1))
    with pytest.raises(ValueError):
        assemble_mimo([[m], [m, m]])
    with pytest.raises(ValueError):
        assemble_mimo([])


def test_eval_tf_singular_frequency():
    ss = StateSpaceModel(
        np.array([[0.0, 1.0], [-1.0, 0.0]]),
        np.array([[0.0], [1.0]]),
        np.array([[1.0, 0.0]]),
        np.array([[0.0]]),
    )
    with pytest.raises(SingularFrequencyError):
        eval_tf(ss, 1.0j)
    # Away from the eigenvalue the evaluation is fine: 1/(s^2+1) at s=2j.
    assert eval_tf(ss, 2.0j)[0, 0] == pytest.approx(-1.0 / 3.0, rel=1e-12)


def test_model_json_round_trip(tmp_path):
    plant = random_stable_system(5, 2, 2, seed=6)
    ss = plant.truth.with_meta(origin="test", final_rms=1.25e-9)
    path = tmp_path / "model.json"
    save_model(ss, str(path))
    loaded = load_model(str(path))
    np.testing.assert_array_equal(loaded.a, ss.a)
    np.testing.assert_array_equal(loaded.b, ss.b)
    np.testing.assert_array_equal(loaded.c, ss.c)
    np.testing.assert_array_equal(loaded.d, ss.d)
    assert loaded.state_labels == ss.state_labels
    assert loaded.meta == ss.meta


def test_model_json_round_trip_stateless(tmp_path):
    ss = StateSpaceModel(
        np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((1, 0)), np.ones((1, 2))
    )
    path = tmp_path / "gain.json"
    save_model(ss, str(path))
    loaded = load_model(str(path))
    assert loaded.n_states == 0
    assert (loaded.n_outputs, loaded.n_inputs) == (1, 2)
    np.testing.assert_array_equal(loaded.d, ss.d)


def test_load_model_rejects_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"A": [[0.0]], "B": [[1.0]], "C": [[1.0]]}')
    with pytest.raises(ModelFormatError, match="D"):
        load_model(str(path))
    path.write_text('{"A": [[0.0, 1.0]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}')
    with pytest.raises(ModelFormatError):
        load_model(str(path))
    path.write_text("[]")
    with pytest.raises(ModelFormatError):
        load_model(str(path))
