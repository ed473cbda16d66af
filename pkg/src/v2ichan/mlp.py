"""
Two-layer perceptron trained by per-sample backpropagation.

Network layout: ``n_in`` inputs, ``n_h`` sigmoid hidden units, ``n_o``
linear outputs, and no bias terms anywhere. ``W1[i, j]`` connects input
``i`` to hidden unit ``j``; ``W2[j, k]`` connects hidden unit ``j`` to
output ``k``. The cost of one sample is ``0.5 * sum((t - o)**2)``.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .errors import DivergenceError, InputShapeError, InvalidDimensionError

log = logging.getLogger(__name__)

FORMAT_TAG = "mlpv1"
SCALER_TAG = "scalerv1"


def sigmoid(z):
    """Logistic function, evaluated in whichever form cannot overflow."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (ez + 1.0)
    return out


@dataclass
class MlpNetwork:
    W1: np.ndarray
    W2: np.ndarray

    def __post_init__(self):
        self.W1 = np.array(self.W1, dtype=float)
        self.W2 = np.array(self.W2, dtype=float)
        if self.W1.ndim != 2 or self.W2.ndim != 2 or self.W1.shape[1] != self.W2.shape[0]:
            raise InvalidDimensionError(f"incompatible weight shapes {self.W1.shape} and {self.W2.shape}")

    @property
    def n_in(self) -> int:
        return self.W1.shape[0]

    @property
    def n_h(self) -> int:
        return self.W1.shape[1]

    @property
    def n_o(self) -> int:
        return self.W2.shape[1]

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(self.W1.copy(), self.W2.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.W1)) and np.all(np.isfinite(self.W2)))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 20
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if not 0 < self.learning_rate < 1:
            raise ValueError(f"learning rate must lie in (0, 1), got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not self.init_scale >= 0:
            raise ValueError("init_scale must be non-negative")


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    validation_mse: float = float("nan")
    extra: dict = field(default_factory=dict)


@dataclass
class TrainResult:
    network: MlpNetwork
    history: list
    best_epoch: int = 0


def init_network(n_h: int = 10, seed=None, init_scale: float = 0.5, n_in: int = 2,
                 n_o: int = 2) -> MlpNetwork:
    """Weights drawn i.i.d. uniform on ``[-init_scale, init_scale]``."""
    if n_h < 1 or n_in < 1 or n_o < 1:
        raise InvalidDimensionError("layer sizes must be >= 1")
    rng = np.random.default_rng(seed)
    W1 = rng.uniform(-init_scale, init_scale, (n_in, n_h))
    W2 = rng.uniform(-init_scale, init_scale, (n_h, n_o))
    return MlpNetwork(W1, W2)


def forward(net: MlpNetwork, inputs):
    """Network outputs and hidden activations.

    ``inputs`` may be one sample of shape ``(n_in,)`` or a batch
    ``(m, n_in)``; outputs follow the same leading shape.
    """
    x = np.asarray(inputs, dtype=float)
    if x.shape[-1] != net.n_in:
        raise InputShapeError(f"expected {net.n_in} input features, got {x.shape[-1]}")
    hidden = sigmoid(x @ net.W1)
    return hidden @ net.W2, hidden


def mse_cost(output, target):
    o = np.asarray(output, dtype=float)
    t = np.asarray(target, dtype=float)
    if o.shape != t.shape:
        raise InputShapeError(f"output {o.shape} and target {t.shape} differ")
    return 0.5 * np.sum((t - o) ** 2, axis=-1)


def gradients(net: MlpNetwork, x, t):
    """Analytic gradient of the single-sample cost w.r.t. ``W1`` and ``W2``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    o, h = forward(net, x)
    err = t - o
    # output activation is linear, so its derivative is 1
    dW2 = -np.outer(h, err)
    delta_h = (net.W2 @ err) * h * (1.0 - h)
    dW1 = -np.outer(x, delta_h)
    return dW1, dW2


def backward(net: MlpNetwork, x, t, learning_rate: float) -> MlpNetwork:
    """One gradient-descent step on a single sample; returns a new network."""
    if not 0 < learning_rate < 1:
        raise ValueError("learning rate must lie in (0, 1)")
    dW1, dW2 = gradients(net, x, t)
    if not (np.all(np.isfinite(dW1)) and np.all(np.isfinite(dW2))):
        raise DivergenceError("non-finite gradient", network=net.copy())
    return MlpNetwork(net.W1 - learning_rate * dW1, net.W2 - learning_rate * dW2)


def numerical_gradient(net: MlpNetwork, x, t, h: float = 1e-6):
    """Central finite-difference gradient of the single-sample cost.

    Forward passes run in ``np.longdouble`` so that rounding in the cost
    difference stays well below the truncation error of the stencil.
    """
    if not h > 0:
        raise ValueError("perturbation must be positive")
    ld = np.longdouble
    x = np.asarray(x, dtype=ld)
    t = np.asarray(t, dtype=ld)
    W1 = np.asarray(net.W1, dtype=ld).copy()
    W2 = np.asarray(net.W2, dtype=ld).copy()
    step = ld(h)

    def cost():
        hidden = 1 / (1 + np.exp(-(x @ W1)))
        return 0.5 * np.sum((t - hidden @ W2) ** 2)

    grads = []
    for W in (W1, W2):
        g = np.zeros(W.shape)
        for idx in np.ndindex(W.shape):
            orig = W[idx]
            W[idx] = orig + step
            up = cost()
            W[idx] = orig - step
            down = cost()
            W[idx] = orig
            g[idx] = float((up - down) / (2 * step))
        grads.append(g)
    return tuple(grads)


def relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Largest element-wise ``|a - n| / max(|a|, |n|, floor)``."""
    a = np.concatenate([np.ravel(g) for g in analytic])
    n = np.concatenate([np.ravel(g) for g in numeric])
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def gradient_check(cases: int = 100, seed=0, n_h: int = 10, h: float = 1e-6, grad_fn=gradients) -> float:
    """Max relative error between ``grad_fn`` and finite differences.

    Each case draws a fresh network (weights uniform on [-1, 1]) and a
    Gaussian input/target pair.
    """
    if cases < 1:
        raise ValueError("cases must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        net = init_network(n_h, rng, init_scale=1.0)
        x = rng.standard_normal(net.n_in)
        t = rng.standard_normal(net.n_o)
        worst = max(worst, relative_error(grad_fn(net, x, t), numerical_gradient(net, x, t, h)))
    return worst


@njit(cache=True)
def _sgd_epoch(W1, W2, X, T, order, lr):
    """In-place per-sample updates over ``order``; same arithmetic as :func:`backward`."""
    n_in, n_h = W1.shape
    n_o = W2.shape[1]
    h = np.empty(n_h)
    err = np.empty(n_o)
    for i in order:
        for j in range(n_h):
            z = 0.0
            for a in range(n_in):
                z += X[i, a] * W1[a, j]
            h[j] = 1.0 / (1.0 + np.exp(-z))
        for k in range(n_o):
            o = 0.0
            for j in range(n_h):
                o += h[j] * W2[j, k]
            err[k] = T[i, k] - o
        for j in range(n_h):
            back = 0.0
            for k in range(n_o):
                back += W2[j, k] * err[k]
            delta = back * h[j] * (1.0 - h[j])
            for k in range(n_o):
                W2[j, k] += lr * h[j] * err[k]
            for a in range(n_in):
                W1[a, j] += lr * X[i, a] * delta


def evaluate(net: MlpNetwork, inputs, targets) -> float:
    """Mean per-sample cost over a batch."""
    if len(inputs) == 0:
        return float("nan")
    return float(np.mean(mse_cost(forward(net, inputs)[0], targets)))


def train(net: MlpNetwork, inputs, targets, cfg: TrainConfig, validation=None, callback=None) -> TrainResult:
    """Stochastic gradient descent, one update per sample.

    Each epoch visits the samples in an order shuffled by ``cfg.seed``.
    After every epoch the mean cost on the training data (and on
    ``validation = (inputs, targets)`` when given) is recorded, along with
    whatever dict ``callback(epoch, network)`` returns. The returned network
    is the snapshot with the lowest validation cost, or the lowest training
    cost without validation data.

    Raises
    ------
    DivergenceError
        If the cost becomes non-finite. The exception carries the last
        finite network.
    """
    X = np.ascontiguousarray(inputs, dtype=float)
    T = np.ascontiguousarray(targets, dtype=float)
    if X.ndim != 2 or X.shape != T.shape[:1] + (net.n_in,) or T.shape[1] != net.n_o:
        raise InputShapeError(f"inputs {X.shape} / targets {T.shape} do not fit the network")
    if len(X) == 0:
        raise InputShapeError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    lr = cfg.learning_rate
    current = net.copy()
    W1, W2 = current.W1, current.W2  # updated in place
    best = current.copy()
    best_score = np.inf
    best_epoch = 0
    last_finite = current.copy()
    history = []

    for epoch in range(1, cfg.epochs + 1):
        _sgd_epoch(W1, W2, X, T, rng.permutation(len(X)), lr)
        train_mse = evaluate(current, X, T)
        val_mse = evaluate(current, *validation) if validation is not None else float("nan")
        if not np.isfinite(train_mse) or not current.is_finite():
            raise DivergenceError(f"training diverged at epoch {epoch}", network=last_finite, epoch=epoch)
        last_finite = current.copy()
        extra = callback(epoch, current) if callback is not None else {}
        history.append(EpochRecord(epoch, train_mse, val_mse, extra or {}))
        score = val_mse if validation is not None else train_mse
        if score < best_score:
            best, best_score, best_epoch = current.copy(), score, epoch
        log.debug("epoch %d train %.6g validation %.6g", epoch, train_mse, val_mse)

    if not history:
        return TrainResult(net.copy(), [], 0)
    return TrainResult(best, history, best_epoch)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map ``(x - mean) / scale``."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data, center: bool = True) -> "Standardizer":
        """Fit per-feature statistics.

        With ``center=False`` the mean is fixed at zero and the scale is
        the root mean square, for data known to be zero-mean.
        """
        d = np.asarray(data, dtype=float)
        if center:
            mean = d.mean(axis=0)
            scale = d.std(axis=0)
        else:
            mean = np.zeros(d.shape[1])
            scale = np.sqrt(np.mean(d ** 2, axis=0))
        return cls(mean, np.where(scale > 0, scale, 1.0))

    @classmethod
    def identity(cls, n: int = 2) -> "Standardizer":
        return cls(np.zeros(n), np.ones(n))

    def transform(self, data):
        return (np.asarray(data, dtype=float) - self.mean) / self.scale

    def inverse(self, data):
        return np.asarray(data, dtype=float) * self.scale + self.mean


@dataclass
class ChannelPredictor:
    """Trained network plus the standardization applied around it.

    Inputs and targets share one standardizer since both are channel
    coefficients split into (real, imag).
    """

    network: MlpNetwork
    scaler: Standardizer

    def predict(self, features):
        return self.scaler.inverse(forward(self.network, self.scaler.transform(features))[0])

    def predict_complex(self, h):
        h = np.asarray(h, dtype=complex)
        out = self.predict(np.stack([h.real.ravel(), h.imag.ravel()], axis=1))
        return (out[:, 0] + 1j * out[:, 1]).reshape(h.shape)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_network(net: MlpNetwork) -> str:
    lines = [f"{FORMAT_TAG} {net.n_in} {net.n_h} {net.n_o}"]
    lines += [" ".join(_fmt(v) for v in row) for row in net.W1]
    lines += [" ".join(_fmt(v) for v in row) for row in net.W2]
    return "\n".join(lines) + "\n"


def parse_network(text: str) -> MlpNetwork:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty model file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != FORMAT_TAG:
        raise ValueError(f"not an {FORMAT_TAG} model header: {lines[0]!r}")
    n_in, n_h, n_o = (int(v) for v in head[1:])
    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    if len(rows) != n_in + n_h:
        raise ValueError(f"expected {n_in + n_h} weight rows, found {len(rows)}")
    W1 = np.array(rows[:n_in])
    W2 = np.array(rows[n_in:])
    if W1.shape != (n_in, n_h) or W2.shape != (n_h, n_o):
        raise ValueError("weight rows do not match the header dimensions")
    return MlpNetwork(W1, W2)


def save_network(net: MlpNetwork, path):
    Path(path).write_text(format_network(net))


def load_network(path) -> MlpNetwork:
    return parse_network(Path(path).read_text())


def format_scaler(s: Standardizer) -> str:
    return "\n".join([SCALER_TAG, " ".join(map(_fmt, s.mean)), " ".join(map(_fmt, s.scale))]) + "\n"


def parse_scaler(text: str) -> Standardizer:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 3 or lines[0].strip() != SCALER_TAG:
        raise ValueError("malformed scaler file")
    mean, scale = (np.array([float(v) for v in ln.split()]) for ln in lines[1:])
    return Standardizer(mean, scale)


def scaler_path(model_path) -> Path:
    p = Path(model_path)
    return p.with_name(p.name + ".scaler")


def save_predictor(pred: ChannelPredictor, path):
    """Write the network in the ``mlpv1`` format and the scaler alongside it."""
    save_network(pred.network, path)
    scaler_path(path).write_text(format_scaler(pred.scaler))


def load_predictor(path) -> ChannelPredictor:
    net = load_network(path)
    sp = scaler_path(path)
    scaler = parse_scaler(sp.read_text()) if sp.exists() else Standardizer.identity(net.n_in)
    return ChannelPredictor(net, scaler)
