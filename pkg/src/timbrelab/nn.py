"""Minimal dense-network kernel: layers, activations, backprop, Adam.

Parameters default to float32 with float64 loss accumulation; every
function also works on float64 layers, which the gradient-check tests
rely on.  No autodiff: gradients are the hand-derived backprop of
mean-squared error plus an L2 weight penalty through this fixed layer
algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("sigmoid", "relu", "lrelu", "linear")
LRELU_SLOPE = 0.1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def activate(kind: str, z) -> np.ndarray:
    """Apply an activation elementwise (scalars are promoted to arrays)."""
    z = np.asarray(z)
    if z.dtype.kind != "f":
        z = z.astype(np.float64)
    if kind == "sigmoid":
        return _sigmoid(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "lrelu":
        return np.where(z >= 0, z, np.asarray(LRELU_SLOPE, dtype=z.dtype) * z)
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def activate_grad(kind: str, z) -> np.ndarray:
    """Derivative of the activation w.r.t. its pre-activation.

    The leaky ReLU's subgradient at exactly 0 is taken as 1.
    """
    z = np.asarray(z)
    if z.dtype.kind != "f":
        z = z.astype(np.float64)
    one = np.asarray(1.0, dtype=z.dtype)
    if kind == "sigmoid":
        s = _sigmoid(z)
        return s * (one - s)
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "lrelu":
        return np.where(z >= 0, one, np.asarray(LRELU_SLOPE, dtype=z.dtype))
    if kind == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # branch on sign so exp never overflows
    flat = np.atleast_1d(z)
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ez = np.exp(flat[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out.reshape(np.shape(z))


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


@dataclass
class DenseLayer:
    """Fully connected layer y = f(W x + b) with W of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights)
        self.bias = np.asarray(self.bias)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} != output width {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def glorot_layer(out_dim: int, in_dim: int, activation: str,
                 rng: np.random.Generator, dtype=np.float32) -> DenseLayer:
    """Layer with uniform Glorot weights (+-sqrt(6/(in+out))) and zero bias."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(out_dim, in_dim)).astype(dtype)
    return DenseLayer(weights, np.zeros(out_dim, dtype=dtype), activation)


# ---------------------------------------------------------------------------
# Forward / backward over a layer stack
# ---------------------------------------------------------------------------


def forward_stack(layers, x: np.ndarray):
    """Run a batch through a layer stack.

    ``x`` is (batch, in_dim).  Returns ``(output, cache)`` where the
    cache holds each layer's input and pre-activation, enough for
    :func:`backward_stack`.
    """
    a = np.asarray(x)
    if a.ndim != 2:
        raise ValueError(f"input must be (batch, dim), got shape {a.shape}")
    if layers and a.shape[1] != layers[0].in_dim:
        raise ValueError(
            f"input dim {a.shape[1]} does not match first layer ({layers[0].in_dim})"
        )
    cache = []
    for layer in layers:
        z = a @ layer.weights.T + layer.bias
        cache.append((a, z))
        a = activate(layer.activation, z)
    return a, cache


def backward_stack(layers, cache, out_grad: np.ndarray, l2_lambda: float = 0.0):
    """Backpropagate a loss gradient through a layer stack.

    ``out_grad`` is dL/d(output), already carrying any batch-mean
    factor.  Returns ``(grads, input_grad)`` where grads[i] is
    ``(dW, db)`` for layer i; the L2 penalty ``l2_lambda * sum ||W||^2``
    contributes ``2 * l2_lambda * W`` to each weight gradient (biases
    are not penalized).
    """
    grads = [None] * len(layers)
    delta = out_grad
    for i in reversed(range(len(layers))):
        a_in, z = cache[i]
        delta = delta * activate_grad(layers[i].activation, z)
        dw = delta.T @ a_in
        if l2_lambda:
            dw = dw + (2.0 * l2_lambda) * layers[i].weights
        db = delta.sum(axis=0)
        grads[i] = (dw, db)
        delta = delta @ layers[i].weights
    return grads, delta


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def mse_and_grad(output: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements and its gradient w.r.t. output."""
    diff = output - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = diff * np.asarray(2.0 / diff.size, dtype=diff.dtype)
    return loss, grad


def l2_penalty(layers, l2_lambda: float) -> float:
    """l2_lambda * sum of squared weights (biases excluded)."""
    if not l2_lambda:
        return 0.0
    total = sum(float(np.sum(layer.weights.astype(np.float64) ** 2)) for layer in layers)
    return l2_lambda * total


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moment buffers for one parameter list."""

    m: list = field(repr=False)
    v: list = field(repr=False)
    t: int
    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def init(cls, params, lr: float) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            t=0,
            lr=lr,
        )

    def copy(self) -> "AdamState":
        return AdamState(
            m=[x.copy() for x in self.m],
            v=[x.copy() for x in self.v],
            t=self.t,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update, applied to ``params`` in place.

    Step count advances exactly once per call, so an interrupted and
    resumed run (via :meth:`AdamState.copy`) is bit-identical to an
    uninterrupted one.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads, and state must have matching lengths")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / np.asarray(bias1, dtype=p.dtype)
        v_hat = v / np.asarray(bias2, dtype=p.dtype)
        p -= (np.asarray(state.lr, dtype=p.dtype) * m_hat
              / (np.sqrt(v_hat) + np.asarray(state.eps, dtype=p.dtype)))
    return params, state
