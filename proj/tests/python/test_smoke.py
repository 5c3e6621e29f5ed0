import math

import numpy as np
import pytest

import qfecnn as q


def test_zero_state_and_gates():
    psi = q.zero_state(2)
    assert psi.shape == (4,)
    assert psi[0] == 1.0 + 0.0j

    flipped = q.apply_gate(q.zero_state(1), q.Gate.ry(0, math.pi))
    assert abs(flipped[1] - 1.0) < 1e-12

    bell = q.run_circuit(2, [q.Gate.h(0), q.Gate.cnot(0, 1)])
    assert abs(abs(bell[0]) ** 2 - 0.5) < 1e-12
    assert abs(abs(bell[3]) ** 2 - 0.5) < 1e-12


def test_expectation_matches_closed_form():
    theta = 0.83
    psi = q.apply_gate(q.zero_state(1), q.Gate.ry(0, theta))
    assert q.expectation(psi, q.Observable.z(0)) == pytest.approx(math.cos(theta), abs=1e-12)


def test_templates_and_counts():
    enc = q.build_encoder(9)
    assert enc.n_input_slots == 9
    ans = q.build_ansatz("sim15", 2, 4)
    assert ans.n_weight_slots == 16
    assert q.weight_count("sim1", 1, 9) == 18
    gates = q.compose(q.build_encoder(4), ans).bind([0.1] * 4, [0.2] * 16)
    assert len(gates) > 4


def test_patch_gradient_matches_numpy_finite_difference():
    rng = np.random.default_rng(3)
    enc = q.build_encoder(4)
    ans = q.build_ansatz("sim15", 1, 4)
    x = rng.uniform(0.0, math.pi, 4)
    w = rng.uniform(-math.pi, math.pi, 8)
    obs = q.Observable.z(0)

    pg = q.patch_gradient(enc, ans, x, w, obs)

    def value(xv, wv):
        gates = q.compose(enc, ans).bind(list(xv), list(wv))
        state = q.zero_state(4)
        for g in gates:
            state = q.apply_gate(state, g)
        return q.expectation(state, obs)

    assert pg.value == pytest.approx(value(x, w), abs=1e-12)
    h = 1e-5
    for i in range(4):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd = (value(xp, w) - value(xm, w)) / (2 * h)
        assert pg.d_inputs[i] == pytest.approx(fd, abs=1e-6)
    for k in range(8):
        wp, wm = w.copy(), w.copy()
        wp[k] += h
        wm[k] -= h
        fd = (value(x, wp) - value(x, wm)) / (2 * h)
        assert pg.d_weights[k] == pytest.approx(fd, abs=1e-6)


def test_qfe_layer_forward_backward_shapes():
    layer = q.QfeLayer(in_channels=1, filters=2, kernel=2, ansatz="sim15", layers=1, seed=5)
    image = np.random.default_rng(0).uniform(0.0, math.pi, (4, 4))
    out = layer.forward(image, want_grads=True)
    assert out.shape == (2, 3, 3)
    d_input, d_weights, d_bias = layer.backward(np.ones_like(out))
    assert d_input.shape == (1, 4, 4)
    assert d_weights.shape == layer.weights.shape
    assert d_bias.shape == (2,)
    assert np.isfinite(d_input).all()


def test_training_run_from_python(tmp_path):
    data = tmp_path / "data"
    q.synth_dataset(str(data), train_count=32, test_count=16, side=8, seed=1)
    config = tmp_path / "run.cfg"
    config.write_text(
        "\n".join(
            [
                "model.preset = qfegap",
                "qfe.kernel = 2",
                "ansatz.name = sim15",
                "ansatz.layers = 1",
                "train.schedule = constant",
                "train.lr = 0.05",
                "train.batch = 8",
                "train.epochs = 1",
                "train.seed = 9",
                "data.classes = 0,1",
                "data.train_count = 16",
                "data.test_count = 8",
                "data.downsample = 2",
                f"data.dir = {data}",
                f"out.dir = {tmp_path / 'out'}",
            ]
        )
    )
    result = q.train_run(str(config))
    assert len(result["records"]) == 2
    assert (tmp_path / "out" / "metrics.csv").exists()
    assert (tmp_path / "out" / "checkpoint.qfec").exists()
    splits = {r["split"] for r in result["records"]}
    assert splits == {"train", "test"}
