import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATASET, GOLDEN
from neuromem import blocks, network
from neuromem.errors import ConvergenceError, FormatError, RangeError
from neuromem.network import NetworkSpec, forward, softmax

GATES = ("AND", "OR", "NAND", "NOR")


# -- softmax and forward --------------------------------------------------------


def test_softmax_examples():
    assert softmax([0.0, 0.0]).tolist() == [0.5, 0.5]
    assert softmax([123.4, 123.4]).tolist() == [0.5, 0.5]
    assert softmax([math.log(3), 0.0]) == pytest.approx([0.75, 0.25], abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=6), st.floats(-100, 100))
def test_softmax_properties(z, shift):
    p = softmax(z)
    assert np.all(p > 0)
    assert abs(p.sum() - 1) <= 1e-12
    assert softmax(np.array(z) + shift) == pytest.approx(p, abs=1e-12)


def zero_net(mode="float"):
    return NetworkSpec((9, 2, 2), "relu", [np.zeros((2, 9)), np.zeros((2, 2))], [np.zeros(2), np.zeros(2)], mode)


def test_zero_network_gives_even_odds():
    for mode in ("float", "bridge"):
        probs, pred = forward(zero_net(mode), np.ones(9))
        assert probs.tolist() == [0.5, 0.5]


def test_single_path_closed_form():
    # hidden node 0 copies feature 0; output 0 reads hidden node 0
    w1 = np.zeros((2, 9))
    w1[0, 0] = 1.0
    w2 = np.array([[1.0, 0.0], [0.0, 0.0]])
    net = NetworkSpec((9, 2, 2), "relu", [w1, w2], [np.zeros(2), np.zeros(2)])
    x = np.zeros(9)
    x[0] = 1.0
    probs, pred = forward(net, x)
    e = math.e
    assert probs == pytest.approx([e / (e + 1), 1 / (e + 1)], abs=1e-15)
    assert pred == 0


def test_forward_batch_and_determinism():
    net = network.init_network(seed=3)
    x = np.random.default_rng(0).uniform(-1, 1, (5, 9))
    p1, y1 = forward(net, x)
    p2, y2 = forward(net, x)
    assert np.array_equal(p1, p2) and np.array_equal(y1, y2)
    for k in range(5):
        assert forward(net, x[k])[0] == pytest.approx(p1[k], abs=1e-15)


def test_forward_shape_errors():
    with pytest.raises(ValueError):
        forward(network.init_network(), np.ones(8))
    with pytest.raises(ValueError):
        NetworkSpec((9, 2, 2), "relu", [np.zeros((2, 8)), np.zeros((2, 2))], [np.zeros(2), np.zeros(2)])
    with pytest.raises(ValueError):
        NetworkSpec((9, 2, 2), "sigmoid")


def test_bridge_mode_rejects_unrealizable_weights():
    w = [np.full((2, 9), 0.99), np.zeros((2, 2))]
    with pytest.raises(RangeError):
        NetworkSpec((9, 2, 2), "relu", w, [np.zeros(2), np.zeros(2)], "bridge")


def test_bridge_forward_matches_float_for_same_weights():
    net = network.init_network(seed=1)
    scale = 0.9 / max(np.abs(w).max() for w in net.weights + net.biases)
    w = [scale * a for a in net.weights]
    b = [scale * a for a in net.biases]
    f = NetworkSpec(net.layer_sizes, "tanh", w, b, "float")
    q = NetworkSpec(net.layer_sizes, "tanh", w, b, "bridge")
    x = np.random.default_rng(2).uniform(-1, 1, (20, 9))
    assert forward(q, x)[0] == pytest.approx(forward(f, x)[0], abs=1e-12)


# -- dataset and training --------------------------------------------------------


def test_dataset_ingestion(dataset):
    assert len(dataset.labels) == 683
    assert dataset.dropped == 16
    assert dataset.features.shape == (683, 9)
    assert np.all(np.abs(dataset.features) <= 1.0)
    sizes = [len(dataset.train), len(dataset.validation), len(dataset.test)]
    assert sizes == [478, 102, 103]
    everything = np.concatenate([dataset.train, dataset.validation, dataset.test])
    assert sorted(everything.tolist()) == list(range(683))


def test_dataset_split_is_seeded():
    a = network.load_dataset(DATASET, seed=5)
    b = network.load_dataset(DATASET, seed=5)
    c = network.load_dataset(DATASET, seed=6)
    assert np.array_equal(a.test, b.test)
    assert not np.array_equal(a.test, c.test)


@pytest.mark.parametrize(
    "text, msg",
    [("1,2,3\n", "line 1"), ("1,1,1,1,1,1,1,1,1,1,3\n", "class"), ("1,a,1,1,1,1,1,1,1,1,2\n", "line 1"), ("", "no complete")],
)
def test_dataset_format_errors(text, msg):
    with pytest.raises(FormatError, match=msg):
        network.parse_dataset(text)


def test_zero_epochs_returns_unchanged(dataset):
    net = network.init_network(seed=0)
    out = network.train(net, dataset, epochs=0)
    for a, b in zip(out.weights + out.biases, net.weights + net.biases):
        assert np.array_equal(a, b)


def test_small_lr_loss_is_non_increasing(dataset):
    _, history = network.fit(network.init_network(seed=4), dataset, epochs=200, lr=1e-3, seed=4)
    assert np.all(np.diff(history) <= 1e-12)
    assert history[-1] < history[0]


def test_training_is_deterministic(dataset):
    a = network.train(None, dataset, epochs=50, seed=9)
    b = network.train(None, dataset, epochs=50, seed=9)
    assert network.dump_model(a) == network.dump_model(b)


def test_gradient_matches_finite_differences(dataset):
    net = network.init_network(hidden_activation="tanh", seed=2)
    x, y = dataset.subset("train")
    _, gw, _ = network._loss_and_grads(net, x, y)
    h = 1e-6
    for (r, c) in [(0, 0), (1, 5)]:
        plus, minus = net.copy(), net.copy()
        plus.weights[0][r, c] += h
        minus.weights[0][r, c] -= h
        num = (network._loss_and_grads(plus, x, y)[0] - network._loss_and_grads(minus, x, y)[0]) / (2 * h)
        assert gw[0][r, c] == pytest.approx(num, rel=1e-5, abs=1e-9)


def test_trained_accuracy_and_agreement(trained, dataset):
    net, q, _ = trained
    x, y = dataset.subset("test")
    assert network.accuracy(net, x, y) >= 0.90
    agree = np.mean(forward(net, x)[1] == forward(q, x)[1])
    assert agree >= 0.97


def test_quantized_weights_are_bridge_realizable(trained):
    _, q, _ = trained
    wmax = blocks.max_weight()
    syn = blocks.BridgeSynapse.balanced()
    for w, b in zip(q.weights, q.biases):
        vals = np.concatenate([w.ravel(), b])
        assert np.all(np.abs(vals) <= wmax)
        for v in vals[:3]:
            width = blocks.program_to_weight(syn, v)
            got = blocks.bridge_weight(blocks.program_bridge(syn, abs(width), math.copysign(1.0, width)))
            assert abs(got - v) <= 0.01


# -- model files ----------------------------------------------------------------


def test_golden_model_file():
    net = network.load_model(GOLDEN / "model.txt")
    assert net.layer_sizes == (2, 2, 2)
    assert network.dump_model(net) == (GOLDEN / "model.txt").read_text()


def test_model_round_trip(trained, tmp_path):
    for net in trained[:2]:
        path = tmp_path / "m.txt"
        network.save_model(net, path)
        back = network.load_model(path)
        assert network.dump_model(back) == network.dump_model(net)
        assert back.mode == net.mode and back.gains == net.gains


@pytest.mark.parametrize(
    "text",
    ["", "2 2 relu float\n", "2 2 relu float gains 1.0\n1 2\n", "2 2 relu float gains 1.0\n1 2\n3 4\n5 6\n7\n"],
)
def test_model_format_errors(text):
    with pytest.raises(FormatError):
        network.parse_model(text)


# -- Adaline ---------------------------------------------------------------------


@pytest.mark.parametrize("gate", GATES)
def test_gate_resistances_truth_tables(gate):
    spec = network.AdalineSpec.gate(gate)
    for (x1, x2), y in network.TRUTH_TABLES[gate]:
        assert network.adaline_eval(spec, x1, x2) == y


def test_nand_config_complements_and_config():
    nand, and_ = network.AdalineSpec.gate("NAND"), network.AdalineSpec.gate("AND")
    for x1 in (0, 1):
        for x2 in (0, 1):
            assert network.adaline_eval(nand, x1, x2) == 1 - network.adaline_eval(and_, x1, x2)


def test_nand_with_inverted_inputs_is_or():
    nand, or_ = network.AdalineSpec.gate("NAND"), network.AdalineSpec.gate("OR")
    for x1 in (0, 1):
        for x2 in (0, 1):
            assert network.adaline_eval(nand, 1 - x1, 1 - x2) == network.adaline_eval(or_, x1, x2)


def test_adaline_rejects_nonpositive_resistance():
    with pytest.raises(ValueError):
        network.AdalineSpec(0.0, 1e3, 1e3)


def test_weights_to_resistances_degenerate():
    with pytest.raises(ValueError):
        network.weights_to_resistances(1.0, 1.0, 5e3, 1e3)
    with pytest.raises(ValueError):
        network.weights_to_resistances(2.0, 1.0, 1e3, 5e3)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-5.0, -0.1), st.floats(2e3, 80e3), st.floats(0.1, 0.9))
def test_weights_to_resistances_inverts(g_high, g_low, r_high, frac):
    r_low = frac * r_high
    r_n, r_f = network.weights_to_resistances(g_high, g_low, r_high, r_low)
    assert network.weight_for_memristance(r_high, r_n, r_f) == pytest.approx(g_high, rel=1e-9)
    assert network.weight_for_memristance(r_low, r_n, r_f) == pytest.approx(g_low, rel=1e-9)
    ratio = network.weight_for_memristance(r_high, r_n, r_f) / network.weight_for_memristance(r_low, r_n, r_f)
    assert ratio == pytest.approx(g_high / g_low, rel=1e-9)


def test_weights_to_resistances_unrealizable():
    # negative weights with R_H * G_H < R_L * G_L give a negative r_n
    with pytest.raises(RangeError):
        network.weights_to_resistances(-1.0, -1.5, 2e3, 1e3)


def test_fit_reproduces_gate_resistances():
    # search the weight range over the memristance window spanned by the gate table for
    # a mapping that realizes all four gates and gives the shared bias devices
    # (1.33k, 3.88k) equal and opposite weights within 1%
    r_high, r_low = 4.81e3, 1.17e3
    found = []
    for g_high in np.arange(2.5, 3.5, 0.01):
        for g_low in np.arange(-4.0, -3.0, 0.01):
            r_n, r_f = network.weights_to_resistances(g_high, g_low, r_high, r_low)
            wa = network.weight_for_memristance(1.33e3, r_n, r_f)
            wb = network.weight_for_memristance(3.88e3, r_n, r_f)
            if abs(wa + wb) > 0.01 * abs(wa):
                continue
            ok = all(
                network.adaline_eval(network.AdalineSpec(*network.GATE_RESISTANCES[g], r_n=r_n, r_f=r_f), a, b) == y
                for g in GATES
                for (a, b), y in network.TRUTH_TABLES[g]
            )
            if ok:
                found.append(r_n)
    assert found
    assert np.all(np.abs(np.array(found) / network.DEFAULT_R_N - 1) <= 0.01)


def test_memristance_weight_maps_are_inverse():
    for w in (-2.0, 0.0, 1.5):
        m = network.memristance_for_weight(w, 2e3, 10e3)
        assert network.weight_for_memristance(m, 2e3, 10e3) == pytest.approx(w, abs=1e-12)
    with pytest.raises(RangeError):
        network.memristance_for_weight(5.0, 2e3, 10e3)


# -- MR-II --------------------------------------------------------------------------


def test_mr2_keeps_correct_weights():
    w0 = np.array([1.0, 1.0, -1.5])
    out = network.mr2_train(w0, network.TRUTH_TABLES["AND"])
    assert np.array_equal(out, w0)


@pytest.mark.parametrize("gate", GATES)
def test_mr2_learns_separable_gates(gate):
    for seed in range(3):
        w0 = np.random.default_rng(100 + seed).normal(0, 1, 3)
        history = []
        w = network.mr2_train(w0, network.TRUTH_TABLES[gate], seed=seed, history=history)
        assert network.pattern_errors(w, network.TRUTH_TABLES[gate]) == 0
        assert len(history) <= 1000
        # accepted changes never raise the error count
        assert all(b <= a for a, b in zip(history, history[1:]))


def test_mr2_xor_fails_to_converge():
    with pytest.raises(ConvergenceError):
        network.mr2_train([0.1, -0.2, 0.3], network.TRUTH_TABLES["XOR"], seed=0)


def test_mr2_argument_check():
    with pytest.raises(ValueError):
        network.mr2_train([1.0, 2.0], network.TRUTH_TABLES["AND"])
