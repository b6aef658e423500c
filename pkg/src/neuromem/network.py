"""Small neural networks on bridge synapses.

* A fully connected classifier (default 9-2-2, ReLU hidden layer, softmax
  output) trained in floating point and then mapped onto bridge-realizable
  weights.
* A single Adaline node whose weights are memristances in an inverting
  summer with a fixed resistor path, plus Madaline Rule II training.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import blocks
from .device import DeviceParams
from .errors import ConvergenceError, FormatError, RangeError
from .formats import fmt_float

ACTIVATIONS = ("relu", "tanh")
MODES = ("float", "bridge")
LABELS = ("benign", "malignant")


# --------------------------------------------------------------------------
# Feed-forward classifier
# --------------------------------------------------------------------------


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass(eq=False)
class NetworkSpec:
    """Layer sizes, per-layer weights (rows = destination nodes) and biases.

    In ``bridge`` mode each layer's weights and bias are bridge weights and
    ``gains`` holds the summing-stage gain that restores the trained scale.
    """

    layer_sizes: tuple = (9, 2, 2)
    hidden_activation: str = "relu"
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    mode: str = "float"
    gains: tuple = ()

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError("need at least two positive layer sizes")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.weights = [np.array(w, dtype=float) for w in self.weights]
        self.biases = [np.array(b, dtype=float).reshape(-1) for b in self.biases]
        if not self.gains:
            self.gains = tuple(1.0 for _ in range(len(self.layer_sizes) - 1))
        self.gains = tuple(float(g) for g in self.gains)
        if self.weights:
            self._check_shapes()

    def _check_shapes(self):
        n = len(self.layer_sizes) - 1
        if len(self.weights) != n or len(self.biases) != n or len(self.gains) != n:
            raise ValueError(f"expected {n} weight matrices, bias vectors and gains")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[k + 1], self.layer_sizes[k])
            if w.shape != shape:
                raise ValueError(f"layer {k} weights have shape {w.shape}, expected {shape}")
            if b.shape != (shape[0],):
                raise ValueError(f"layer {k} bias has shape {b.shape}, expected {(shape[0],)}")
        if self.mode == "bridge":
            wmax = blocks.max_weight()
            for w, b in zip(self.weights, self.biases):
                if max(np.max(np.abs(w)), np.max(np.abs(b))) > wmax + 1e-12:
                    raise RangeError("bridge-mode weight beyond realizable range")

    def copy(self) -> "NetworkSpec":
        return replace(self, weights=[w.copy() for w in self.weights], biases=[b.copy() for b in self.biases])


def init_network(layer_sizes=(9, 2, 2), hidden_activation="relu", seed=0) -> NetworkSpec:
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.full(fan_out, 0.1))
    return NetworkSpec(tuple(layer_sizes), hidden_activation, weights, biases)


def _act(z, kind):
    if kind == "relu":
        return blocks.relu(z)
    return blocks.pade_tanh(z)


def _act_grad(z, kind):
    if kind == "relu":
        return (z > 0).astype(float)
    return 3.0 * (3.0 - z * z) / (z * z + 3.0) ** 2


def _logits(net: NetworkSpec, x: np.ndarray) -> np.ndarray:
    a = x
    last = len(net.weights) - 1
    for k, (w, b, g) in enumerate(zip(net.weights, net.biases, net.gains)):
        if net.mode == "bridge":
            # every product is one bridge read, the bias rides on a constant 1.0 input
            ones = np.ones(a.shape[:-1] + (1,))
            v_in = np.concatenate([a, ones], axis=-1)
            w_full = np.concatenate([w, b[:, None]], axis=1)
            prod = w_full * v_in[..., None, :]
            z = g * blocks.summing(np.where(prod > 0, prod, 0.0), np.where(prod < 0, -prod, 0.0))
        else:
            z = g * (a @ w.T + b)
        a = z if k == last else _act(z, net.hidden_activation)
    return a


def forward(net: NetworkSpec, features):
    """Class probabilities and predicted label indices for one or many samples."""
    x = np.asarray(features, dtype=float)
    if not net.weights:
        raise ValueError("network has no weights")
    if x.shape[-1] != net.layer_sizes[0]:
        raise ValueError(f"expected {net.layer_sizes[0]} features, got {x.shape[-1]}")
    probs = softmax(_logits(net, x))
    return probs, np.argmax(probs, axis=-1)


def quantize_network(net: NetworkSpec, params: DeviceParams | None = None, resolution: float = blocks.PROGRAM_DT) -> NetworkSpec:
    """Map every weight and bias onto a pulse-programmed bridge weight.

    Layers whose largest weight exceeds the bridge range are divided by a
    common factor that moves into the layer gain.
    """
    params = params or DeviceParams()
    wmax = blocks.max_weight(params)
    weights, biases, gains = [], [], []
    for w, b, g in zip(net.weights, net.biases, net.gains):
        peak = max(np.max(np.abs(w)), np.max(np.abs(b)))
        scale = peak / wmax if peak > wmax else 1.0
        q = np.vectorize(lambda v: blocks.quantize_weight(v / scale, params, resolution=resolution))
        weights.append(q(w))
        biases.append(q(b))
        gains.append(g * scale)
    return NetworkSpec(net.layer_sizes, net.hidden_activation, weights, biases, "bridge", tuple(gains))


# --------------------------------------------------------------------------
# Dataset
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """Normalized features, 0/1 labels (benign/malignant) and a 70/15/15 split."""

    features: np.ndarray
    labels: np.ndarray
    ids: np.ndarray
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int = 0
    dropped: int = 0

    def subset(self, name: str):
        idx = getattr(self, name)
        return self.features[idx], self.labels[idx]


def split_indices(n: int, seed: int, fractions=(0.70, 0.15, 0.15)):
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    return order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]


def parse_dataset(text: str, seed: int = 0) -> Dataset:
    """Parse the UCI breast-cancer-wisconsin file (id, 9 attributes, class 2/4).

    Rows with a missing attribute (``?``) are dropped; attributes on 1..10
    are mapped to about [-1, 1] by ``(v - 5.5) / 4.5``.
    """
    ids, feats, labels, dropped = [], [], [], 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 11:
            raise FormatError(f"line {lineno}: expected 11 columns, got {len(parts)}")
        if "?" in parts:
            dropped += 1
            continue
        try:
            row = [float(p) for p in parts[1:10]]
            cls = int(parts[10])
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric field") from None
        if cls not in (2, 4):
            raise FormatError(f"line {lineno}: class must be 2 or 4, got {cls}")
        ids.append(parts[0])
        feats.append(row)
        labels.append(0 if cls == 2 else 1)
    if not feats:
        raise FormatError("dataset contains no complete rows")
    x = (np.array(feats) - 5.5) / 4.5
    y = np.array(labels)
    tr, va, te = split_indices(len(y), seed)
    return Dataset(x, y, np.array(ids), tr, va, te, seed, dropped)


def load_dataset(path, seed: int = 0) -> Dataset:
    return parse_dataset(Path(path).read_text(), seed)


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


def _loss_and_grads(net: NetworkSpec, x, y):
    acts, zs = [x], []
    a = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        zs.append(z)
        a = z if k == last else _act(z, net.hidden_activation)
        acts.append(a)
    p = softmax(zs[-1])
    n = len(y)
    loss = -np.mean(np.log(p[np.arange(n), y] + 1e-300))
    delta = p.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    gw, gb = [None] * len(net.weights), [None] * len(net.weights)
    for k in range(last, -1, -1):
        gw[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ net.weights[k]) * _act_grad(zs[k - 1], net.hidden_activation)
    return loss, gw, gb


def accuracy(net: NetworkSpec, x, y) -> float:
    return float(np.mean(forward(net, x)[1] == y))


def fit(net: NetworkSpec | None, data: Dataset, epochs: int = 2000, lr: float = 0.1, seed: int = 0,
        batch_size: int | None = None):
    """Gradient descent on cross-entropy; returns ``(best_net, loss_history)``.

    ``best_net`` has the highest validation accuracy seen (ties broken by
    validation loss). Full-batch by default; with ``batch_size`` the
    training set is reshuffled each epoch from ``seed``.
    """
    if net is None:
        net = init_network(seed=seed)
    if net.mode != "float":
        raise ValueError("training needs a float-mode network")
    if any(g != 1.0 for g in net.gains):
        raise ValueError("training expects unit layer gains")
    rng = np.random.default_rng(seed)
    xt, yt = data.subset("train")
    xv, yv = data.subset("validation")
    work = net.copy()
    best, best_key = net.copy(), None
    history = []
    for _ in range(epochs):
        if batch_size:
            order = rng.permutation(len(yt))
            batches = [order[s:s + batch_size] for s in range(0, len(order), batch_size)]
        else:
            batches = [slice(None)]
        for bidx in batches:
            _, gw, gb = _loss_and_grads(work, xt[bidx], yt[bidx])
            for k in range(len(work.weights)):
                work.weights[k] -= lr * gw[k]
                work.biases[k] -= lr * gb[k]
        loss = _loss_and_grads(work, xt, yt)[0]
        history.append(float(loss))
        vloss = _loss_and_grads(work, xv, yv)[0]
        key = (accuracy(work, xv, yv), -vloss)
        if best_key is None or key > best_key:
            best, best_key = work.copy(), key
    return best, history


def train(net: NetworkSpec | None, data: Dataset, epochs: int = 2000, lr: float = 0.1, seed: int = 0) -> NetworkSpec:
    return fit(net, data, epochs, lr, seed)[0]


# --------------------------------------------------------------------------
# Model files
# --------------------------------------------------------------------------


def dump_model(net: NetworkSpec) -> str:
    """Header ``sizes... activation mode gains g...`` then, per layer, the
    weight rows followed by the bias row."""
    head = " ".join(str(s) for s in net.layer_sizes)
    head += f" {net.hidden_activation} {net.mode} gains " + " ".join(fmt_float(g) for g in net.gains)
    lines = [head]
    for w, b in zip(net.weights, net.biases):
        lines += [" ".join(fmt_float(v) for v in row) for row in w]
        lines.append(" ".join(fmt_float(v) for v in b))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> NetworkSpec:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty model file")
    head = lines[0].split()
    try:
        g = head.index("gains")
        sizes = [int(t) for t in head[:g - 2]]
        activation, mode = head[g - 2], head[g - 1]
        gains = [float(t) for t in head[g + 1:]]
    except (ValueError, IndexError):
        raise FormatError("line 1: bad model header") from None
    weights, biases = [], []
    pos = 1
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        rows = []
        for _ in range(fan_out + 1):
            if pos >= len(lines):
                raise FormatError("model file truncated")
            parts = lines[pos].split()
            width = fan_in if len(rows) < fan_out else fan_out
            if len(parts) != width:
                raise FormatError(f"model row {pos + 1}: expected {width} values, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise FormatError(f"model row {pos + 1}: non-numeric value") from None
            pos += 1
        weights.append(np.array(rows[:-1]))
        biases.append(np.array(rows[-1]))
    if pos != len(lines):
        raise FormatError(f"model row {pos + 1}: unexpected trailing data")
    return NetworkSpec(tuple(sizes), activation, weights, biases, mode, tuple(gains))


def save_model(net: NetworkSpec, path) -> None:
    Path(path).write_text(dump_model(net))


def load_model(path) -> NetworkSpec:
    return parse_model(Path(path).read_text())


# --------------------------------------------------------------------------
# Adaline threshold logic unit
# --------------------------------------------------------------------------

# Memristances (R1, R2, R0) for each gate
GATE_RESISTANCES = {
    "NAND": (1.33e3, 1.17e3, 3.88e3),
    "NOR": (1.33e3, 1.17e3, 1.33e3),
    "AND": (2.81e3, 4.81e3, 1.33e3),
    "OR": (2.81e3, 4.81e3, 3.88e3),
}

# The fixed path resistor that gives the two bias memristances in GATE_RESISTANCES
# weights of equal magnitude and opposite sign.
DEFAULT_R_N = 2.0 / (1.0 / 1.33e3 + 1.0 / 3.88e3)

TRUTH_TABLES = {
    "AND": (((0, 0), 0), ((0, 1), 0), ((1, 0), 0), ((1, 1), 1)),
    "OR": (((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)),
    "NAND": (((0, 0), 1), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)),
    "NOR": (((0, 0), 1), ((0, 1), 0), ((1, 0), 0), ((1, 1), 0)),
    "XOR": (((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)),
}


@dataclass(frozen=True)
class AdalineSpec:
    """Single node: memristors r1, r2 on the inputs and r0 on the bias.

    Each memristor M sits in an inverting summer with feedback ``r_f`` next
    to a fixed non-inverted path ``r_n``, giving the weight
    ``r_f * (1/r_n - 1/M)``. Logic levels are ``virtual_ground +/- logic_swing``.
    """

    r1: float
    r2: float
    r0: float
    r_n: float = DEFAULT_R_N
    r_f: float = 10e3
    virtual_ground: float = 2.5
    logic_swing: float = 0.1

    def __post_init__(self):
        if min(self.r1, self.r2, self.r0, self.r_n, self.r_f) <= 0:
            raise ValueError("resistances must be positive")

    @classmethod
    def gate(cls, name: str, **kw) -> "AdalineSpec":
        return cls(*GATE_RESISTANCES[name.upper()], **kw)

    def weights(self) -> np.ndarray:
        return np.array([weight_for_memristance(r, self.r_n, self.r_f) for r in (self.r1, self.r2, self.r0)])


def adaline_eval(spec: AdalineSpec, x1: int, x2: int) -> int:
    """Output bit of the node for input bits ``x1``, ``x2``."""
    vg, dv = spec.virtual_ground, spec.logic_swing
    v_in = np.array([vg + dv if x1 else vg - dv, vg + dv if x2 else vg - dv, vg + dv])
    v_out = vg + float(spec.weights() @ (v_in - vg))
    return int(v_out > vg)


def weight_for_memristance(r_m: float, r_n: float, r_f: float) -> float:
    return r_f * (1.0 / r_n - 1.0 / r_m)


def memristance_for_weight(w: float, r_n: float, r_f: float) -> float:
    g = 1.0 / r_n - w / r_f
    if g <= 0:
        raise RangeError(f"weight {w} not realizable with r_n={r_n}, r_f={r_f}")
    return 1.0 / g


def weights_to_resistances(g_high: float, g_low: float, r_m_high: float, r_m_low: float) -> tuple[float, float]:
    """Fixed resistor ``r_n`` and feedback ``r_f`` mapping the weight range
    ``[g_low, g_high]`` onto the memristance range ``[r_m_low, r_m_high]``.

    ``r_n = R_H - R_H G_H (R_H - R_L) / (R_H G_H - R_L G_L)`` and
    ``r_f = r_n (R_H G_H - R_L G_L) / (R_H - R_L)``, so that
    ``r_f (1/r_n - 1/M)`` equals ``G_H`` at ``M = R_H`` and ``G_L`` at ``R_L``.
    """
    if not r_m_high > r_m_low > 0:
        raise ValueError("need r_m_high > r_m_low > 0")
    if not g_high > g_low:
        raise ValueError("need g_high > g_low")
    rh, rl = r_m_high, r_m_low
    den = rh * g_high - rl * g_low
    if den == 0:
        raise RangeError("weight range collapses the mapping")
    r_n = rh - rh * g_high * (rh - rl) / den
    r_f = r_n * den / (rh - rl)
    if r_n <= 0 or r_f <= 0:
        raise RangeError(f"weights unrealizable in this memristance window (r_n={r_n:.4g}, r_f={r_f:.4g})")
    return r_n, r_f


# --------------------------------------------------------------------------
# Madaline Rule II on a single hard-limited node
# --------------------------------------------------------------------------


def _bipolar(bits):
    return np.array([1.0 if b else -1.0 for b in bits] + [1.0])


def pattern_errors(weights, truth_table) -> int:
    w = np.asarray(weights, dtype=float)
    return sum(int((_bipolar(x) @ w > 0) != bool(y)) for x, y in truth_table)


def mr2_train(
    initial_weights,
    truth_table,
    seed: int = 0,
    max_iters: int = 1000,
    step: float = 0.1,
    growth: float = 1.5,
    stall: int = 50,
    history: list | None = None,
) -> np.ndarray:
    """Trial-and-keep training of ``(w1, w2, bias)`` on bipolar inputs.

    Each iteration perturbs the weights of the least confident node (a lone
    node here) with Gaussian noise of scale ``step``. The change is kept only
    when it lowers the number of misclassified patterns; otherwise the
    weights are restored. After ``stall`` fruitless trials the scale is
    multiplied by ``growth``. When ``history`` is a list the error count after
    every iteration is appended to it.
    """
    rng = np.random.default_rng(seed)
    w = np.array(initial_weights, dtype=float)
    if w.shape != (3,):
        raise ValueError("expected three weights (w1, w2, bias)")
    err = pattern_errors(w, truth_table)
    sigma, idle = step, 0
    for _ in range(max_iters):
        if err == 0:
            return w
        trial = w + rng.normal(0.0, sigma, size=3)
        trial_err = pattern_errors(trial, truth_table)
        if trial_err < err:
            w, err, idle = trial, trial_err, 0
        else:
            idle += 1
            if idle >= stall:
                sigma *= growth
                idle = 0
        if history is not None:
            history.append(err)
    if err == 0:
        return w
    raise ConvergenceError(f"MR-II left {err} pattern(s) wrong after {max_iters} iterations")
