"""Two-layer graph convolutional network: graph convolution, bias,
(leaky) ReLU, optional coarsening max-pool, flattening, a bias-free fully
connected layer and either a linear MSE or a softmax cross-entropy output.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np

from .coarsening import max_pool_coarsen, pool_indicator
from .errors import ShapeMismatch, TraceMismatch, ZeroProbabilityWarning
from .graph_core import ShiftOperator, shifted_signals
from .rng import Xoshiro256

LOSSES = ("softmax-ce", "mse")
ACTIVATIONS = ("relu", "leaky-relu")
POOLINGS = ("none", "coarsen-max")
UPDATE_ORDERS = ("simultaneous", "fc-first")
PROB_FLOOR = 1e-300

# Hook for a nonlinearity on z under the MSE loss: name -> (f, f').
OUTPUT_ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "linear": (lambda z: z, lambda z: np.ones_like(z)),
}


@dataclass(frozen=True)
class GCNNConfig:
    """Architecture and step sizes.

    ``update_order="fc-first"`` updates the FC weights before back-propagating
    the delta error through them (the ordering behind the worked reference
    trace); ``"simultaneous"`` is plain gradient descent on the loss.
    ``tied_weights`` forces ``w_k(0) = ... = w_k(M-1)`` (one parameter per
    channel).
    """

    n: int
    k_channels: int = 2
    filter_order: int = 2
    s_outputs: int = 2
    loss: str = "softmax-ce"
    activation: str = "relu"
    leaky_slope: float = 0.01
    pooling: str = "none"
    step_w: float = 0.1
    step_b: float = 0.05
    step_v: float = 0.1
    update_order: str = "simultaneous"
    tied_weights: bool = False
    output_activation: str = "linear"

    def __post_init__(self):
        for name in ("n", "k_channels", "filter_order", "s_outputs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("step_w", "step_b", "step_v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if not 0 < self.leaky_slope < 1:
            raise ValueError("leaky slope must lie in (0, 1)")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")
        if self.update_order not in UPDATE_ORDERS:
            raise ValueError(f"update_order must be one of {UPDATE_ORDERS}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if self.loss == "softmax-ce" and self.output_activation != "linear":
            raise ValueError("softmax output takes raw logits; output_activation must be linear")

    @property
    def n_features(self) -> int:
        # Pooling zeroes non-surviving positions instead of compacting them.
        return self.n

    @property
    def fc_inputs(self) -> int:
        return self.k_channels * self.n_features

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parameter_count(config: GCNNConfig) -> dict:
    return {
        "conv_weights": config.filter_order * config.k_channels,
        "biases": config.k_channels,
        "fc_weights": config.s_outputs * config.fc_inputs,
    }


@dataclass
class GCNNParams:
    conv_weights: np.ndarray  # K x M, entry w_k(nu)
    biases: np.ndarray  # K
    fc_weights: np.ndarray  # S x K*N_f, entry v_p(m)

    def __post_init__(self):
        self.conv_weights = np.array(self.conv_weights, dtype=np.float64, ndmin=2)
        self.biases = np.array(self.biases, dtype=np.float64).ravel()
        self.fc_weights = np.array(self.fc_weights, dtype=np.float64, ndmin=2)

    def copy(self) -> "GCNNParams":
        return GCNNParams(self.conv_weights.copy(), self.biases.copy(), self.fc_weights.copy())

    def check(self, config: GCNNConfig):
        want = {
            "conv_weights": (config.k_channels, config.filter_order),
            "biases": (config.k_channels,),
            "fc_weights": (config.s_outputs, config.fc_inputs),
        }
        for name, shape in want.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ShapeMismatch(f"{name} has shape {got}, config needs {shape}")
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.conv_weights.ravel(), self.biases, self.fc_weights.ravel()])

    @classmethod
    def from_vector(cls, vec, config: GCNNConfig) -> "GCNNParams":
        k, m, s = config.k_channels, config.filter_order, config.s_outputs
        a, b = k * m, k * m + k
        return cls(vec[:a].reshape(k, m), vec[a:b], vec[b:].reshape(s, config.fc_inputs))

    def equals(self, other: "GCNNParams") -> bool:
        return (
            np.array_equal(self.conv_weights, other.conv_weights)
            and np.array_equal(self.biases, other.biases)
            and np.array_equal(self.fc_weights, other.fc_weights)
        )


@dataclass
class ForwardTrace:
    x: np.ndarray
    shifted: np.ndarray  # M x N: x, Sx, S^2 x, ...
    pre_activation: np.ndarray  # K x N: y_k(n), bias not included
    relu_mask: np.ndarray  # K x N bool: y_k(n) + b_k > 0
    post_activation: np.ndarray  # K x N: o_k(n) before pooling
    pool_mask: np.ndarray | None
    coarsening: list | None
    flattened: np.ndarray
    logits: np.ndarray
    outputs: np.ndarray  # f(z) under MSE, z under softmax
    probabilities: np.ndarray | None
    loss_value: float | None
    params: GCNNParams = field(repr=False)


@dataclass
class Gradients:
    delta_out: np.ndarray  # S
    delta_conv: np.ndarray  # K x N
    grad_conv: np.ndarray  # K x M
    grad_bias: np.ndarray  # K
    grad_fc: np.ndarray  # S x K*N_f


@dataclass
class TrainingSample:
    input: np.ndarray
    target: np.ndarray
    kind: str | None = None
    origin: int | None = None


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def _as_rng(seed) -> Xoshiro256:
    return seed if isinstance(seed, Xoshiro256) else Xoshiro256(int(seed))


def _tie(conv: np.ndarray, config: GCNNConfig) -> np.ndarray:
    if config.tied_weights:
        conv = np.repeat(conv[:, :1], conv.shape[1], axis=1)
    return conv


def init_gaussian(config: GCNNConfig, seed=0) -> GCNNParams:
    """Conv ``sqrt(2/M) N(0,1)``, FC ``sqrt(2/(K N_f)) N(0,1)``, zero biases.

    Draw order: conv weights row-major, then FC weights row-major.
    """
    rng = _as_rng(seed)
    k, m, s, f = config.k_channels, config.filter_order, config.s_outputs, config.fc_inputs
    conv = np.sqrt(2.0 / m) * rng.normals((k, m))
    fc = np.sqrt(2.0 / f) * rng.normals((s, f))
    return GCNNParams(_tie(conv, config), np.zeros(k), fc)


def init_he_uniform(config: GCNNConfig, seed=0) -> GCNNParams:
    """Uniform on ``+-sqrt(6/M)`` (conv) and ``+-sqrt(6/(K N_f))`` (FC)."""
    rng = _as_rng(seed)
    k, m, s, f = config.k_channels, config.filter_order, config.s_outputs, config.fc_inputs
    bc, bf = np.sqrt(6.0 / m), np.sqrt(6.0 / f)
    conv = rng.uniforms(-bc, bc, (k, m))
    fc = rng.uniforms(-bf, bf, (s, f))
    return GCNNParams(_tie(conv, config), np.zeros(k), fc)


def init_xavier_fc(config: GCNNConfig, seed=0, params: GCNNParams | None = None) -> GCNNParams:
    """Replace the FC block with ``sqrt(2/(K N_f + S)) N(0,1)`` draws."""
    rng = _as_rng(seed)
    s, f = config.s_outputs, config.fc_inputs
    fc = np.sqrt(2.0 / (f + s)) * rng.normals((s, f))
    if params is None:
        params = GCNNParams(np.zeros((config.k_channels, config.filter_order)), np.zeros(config.k_channels), fc)
        return params
    out = params.copy()
    out.fc_weights = fc
    return out


def _check_target(target, config: GCNNConfig) -> np.ndarray:
    t = np.asarray(target, dtype=np.float64).ravel()
    if t.shape != (config.s_outputs,):
        raise ShapeMismatch(f"target has {t.size} entries, network has {config.s_outputs} outputs")
    if config.loss == "softmax-ce" and not (np.all((t == 0) | (t == 1)) and t.sum() == 1):
        raise ValueError("softmax cross-entropy needs a one-hot target")
    return t


def forward(x, params: GCNNParams, config: GCNNConfig, op: ShiftOperator, target=None) -> ForwardTrace:
    x = np.asarray(x, dtype=np.float64)
    if op.n_vertices != config.n:
        raise ShapeMismatch(f"operator has {op.n_vertices} vertices, config expects {config.n}")
    if x.shape != (config.n,):
        raise ShapeMismatch(f"input has shape {x.shape}, config expects ({config.n},)")
    params.check(config)

    shifted = shifted_signals(op, x, config.filter_order)
    y = params.conv_weights @ shifted
    a = y + params.biases[:, None]
    mask = a > 0
    if config.activation == "relu":
        o = np.where(mask, a, 0.0)
    else:
        o = np.where(mask, a, config.leaky_slope * a)

    pool_mask = coarsening = None
    pooled = o
    if config.pooling == "coarsen-max":
        if op.graph is None or not hasattr(op.graph, "weights"):
            raise ValueError("coarsen-max pooling needs an operator built from an undirected graph")
        coarsening = [max_pool_coarsen(op.graph, np.maximum(o[k], 0.0)) for k in range(config.k_channels)]
        pool_mask = pool_indicator(mask, coarsening).matrix
        pooled = o * pool_mask

    flat = pooled.ravel()
    z = params.fc_weights @ flat
    probs = None
    if config.loss == "softmax-ce":
        probs = softmax(z)
        outputs = z
    else:
        outputs = OUTPUT_ACTIVATIONS[config.output_activation][0](z)

    trace = ForwardTrace(x.copy(), shifted, y, mask, o, pool_mask, coarsening, flat, z, outputs, probs, None, params.copy())
    if target is not None:
        trace.loss_value = loss(trace, target, config)
    return trace


def loss(trace: ForwardTrace, target, config: GCNNConfig) -> float:
    t = _check_target(target, config)
    if config.loss == "mse":
        return float(0.5 * np.sum((trace.outputs - t) ** 2))
    p = trace.probabilities
    if np.any(p[t > 0] < PROB_FLOOR):
        warnings.warn("target probability underflowed; clamped before log", ZeroProbabilityWarning, stacklevel=2)
    return float(-np.sum(t * np.log(np.maximum(p, PROB_FLOOR))))


def backward(
    trace: ForwardTrace,
    target,
    params: GCNNParams,
    config: GCNNConfig,
    op: ShiftOperator | None = None,
    x=None,
    fc_weights=None,
) -> Gradients:
    """Analytic gradients of the loss at the point recorded in ``trace``.

    ``fc_weights`` overrides the FC matrix used to back-propagate the delta
    error into the convolutional layer (used by the ``fc-first`` schedule).
    """
    if x is not None and not np.array_equal(np.asarray(x, dtype=np.float64), trace.x):
        raise TraceMismatch("trace was produced for a different input")
    if not params.equals(trace.params):
        raise TraceMismatch("trace was produced with different parameters")
    if op is not None and op.n_vertices != trace.x.size:
        raise TraceMismatch("operator size does not match the trace")
    t = _check_target(target, config)

    if config.loss == "mse":
        fprime = OUTPUT_ACTIVATIONS[config.output_activation][1]
        delta_out = (trace.outputs - t) * fprime(trace.logits)
    else:
        delta_out = trace.probabilities - t
    grad_fc = np.outer(delta_out, trace.flattened)

    v = params.fc_weights if fc_weights is None else np.asarray(fc_weights, dtype=np.float64)
    d_o = (v.T @ delta_out).reshape(config.k_channels, config.n_features)
    if trace.pool_mask is not None:
        d_o = d_o * trace.pool_mask
    slope = 0.0 if config.activation == "relu" else config.leaky_slope
    delta_conv = d_o * np.where(trace.relu_mask, 1.0, slope)

    grad_conv = delta_conv @ trace.shifted.T
    if config.tied_weights:
        grad_conv = np.repeat(grad_conv.sum(axis=1, keepdims=True), grad_conv.shape[1], axis=1)
    grad_bias = delta_conv.sum(axis=1)
    return Gradients(delta_out, delta_conv, grad_conv, grad_bias, grad_fc)


def sgd_step(params: GCNNParams, grads: Gradients, config: GCNNConfig) -> GCNNParams:
    return GCNNParams(
        params.conv_weights - config.step_w * grads.grad_conv,
        params.biases - config.step_b * grads.grad_bias,
        params.fc_weights - config.step_v * grads.grad_fc,
    )


def train_step(x, target, params: GCNNParams, config: GCNNConfig, op: ShiftOperator):
    """One forward/backward/update cycle; returns ``(new_params, trace, grads)``."""
    trace = forward(x, params, config, op, target)
    if config.update_order == "fc-first":
        grad_fc = np.outer(_delta_out(trace, target, config), trace.flattened)
        v_new = params.fc_weights - config.step_v * grad_fc
        grads = backward(trace, target, params, config, op, fc_weights=v_new)
        new = GCNNParams(
            params.conv_weights - config.step_w * grads.grad_conv,
            params.biases - config.step_b * grads.grad_bias,
            v_new,
        )
        return new, trace, grads
    grads = backward(trace, target, params, config, op)
    return sgd_step(params, grads, config), trace, grads


def _delta_out(trace: ForwardTrace, target, config: GCNNConfig) -> np.ndarray:
    t = _check_target(target, config)
    if config.loss == "mse":
        return (trace.outputs - t) * OUTPUT_ACTIVATIONS[config.output_activation][1](trace.logits)
    return trace.probabilities - t


@dataclass
class TrainLog:
    s_outputs: int
    fc_inputs: int
    rows: list = field(default_factory=list)

    @property
    def columns(self) -> list:
        cols = ["iteration", "epoch", "sample_kind", "loss", "P1"]
        cols += [f"v_{p + 1}_{m + 1}" for p in range(self.s_outputs) for m in range(self.fc_inputs)]
        return cols

    def append(self, iteration: int, epoch: int, kind, loss_value: float, p1: float, fc: np.ndarray):
        self.rows.append([iteration, epoch, kind if kind is not None else "", loss_value, p1, *fc.ravel().tolist()])

    def __len__(self):
        return len(self.rows)

    def p1(self) -> np.ndarray:
        return np.array([r[4] for r in self.rows])

    def losses(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])


@dataclass
class TrainResult:
    params: GCNNParams
    log: TrainLog


def first_output(trace: ForwardTrace) -> float:
    return float(trace.probabilities[0] if trace.probabilities is not None else trace.outputs[0])


def train(
    dataset: Sequence[TrainingSample],
    config: GCNNConfig,
    params: GCNNParams,
    epochs: int,
    op: ShiftOperator,
) -> TrainResult:
    """Per-sample gradient descent over ``dataset`` repeated ``epochs`` times,
    in dataset order. The log records the loss and first output seen by each
    sample before its update, and the FC weights after it."""
    params = params.copy()
    log = TrainLog(config.s_outputs, config.fc_inputs)
    if epochs <= 0:
        return TrainResult(params, log)
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    it = 0
    for epoch in range(1, epochs + 1):
        for sample in dataset:
            it += 1
            params, trace, _ = train_step(sample.input, sample.target, params, config, op)
            log.append(it, epoch, sample.kind, trace.loss_value, first_output(trace), params.fc_weights)
    return TrainResult(params, log)


@dataclass
class Prediction:
    winner: int  # 1-based
    probabilities: np.ndarray


def predict(x, params: GCNNParams, config: GCNNConfig, op: ShiftOperator) -> Prediction:
    """Arg-max class (1-based, lowest index on ties) and softmax outputs."""
    trace = forward(x, params, config, op)
    probs = trace.probabilities if trace.probabilities is not None else softmax(trace.outputs)
    return Prediction(int(np.argmax(probs)) + 1, probs)


def with_steps(config: GCNNConfig, **kw) -> GCNNConfig:
    return replace(config, **kw)
