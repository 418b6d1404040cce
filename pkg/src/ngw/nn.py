"""Multilayer perceptrons and the Adam optimizer used for training.

Everything is float64: the Gaussian benchmark compares against closed forms
and float32 noise would eat the tolerances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor, finite_difference_max_error
from .errors import ContractViolation, TrainingDivergence
from .validation import as_matrix, check_positive

CHECKPOINT_VERSION = "ngw-ckpt-1"

_ACTIVATIONS = ("relu", "leaky_relu", "tanh", "identity")


def _apply_activation(t: Tensor, name: str) -> Tensor:
    if name == "relu":
        return t.relu()
    if name == "leaky_relu":
        return t.leaky_relu(0.2)
    if name == "tanh":
        return t.tanh()
    if name == "identity":
        return t
    raise ContractViolation(f"unknown activation {name!r}")


def _apply_activation_np(x: np.ndarray, name: str) -> np.ndarray:
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "leaky_relu":
        return np.where(x > 0.0, x, 0.2 * x)
    if name == "tanh":
        return np.tanh(x)
    if name == "identity":
        return x
    raise ContractViolation(f"unknown activation {name!r}")


class MLP:
    """Fully connected net: affine layers with one hidden nonlinearity.

    Weights are initialized uniform in +-sqrt(1/fan_in) and biases at zero,
    so construction is deterministic given the seed. The output layer is
    always linear.
    """

    def __init__(self, layer_dims, activation: str = "relu", seed: int = 0):
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ContractViolation(f"invalid layer dims {layer_dims!r}")
        if activation not in _ACTIVATIONS:
            raise ContractViolation(f"unknown activation {activation!r}")
        self.layer_dims = dims
        self.activation = activation
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = np.sqrt(1.0 / fan_in)
            W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            self.weights.append(Tensor(W, requires_grad=True))
            self.biases.append(Tensor(np.zeros(fan_out), requires_grad=True))

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def params(self) -> list[Tensor]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out.append(W)
            out.append(b)
        return out

    def n_params(self) -> int:
        return sum(p.data.size for p in self.params)

    def _check_input(self, X) -> np.ndarray:
        A = as_matrix(X, name="X")
        if A.shape[0] < 1:
            raise ContractViolation("batch must have at least one row")
        if A.shape[1] != self.in_dim:
            raise ContractViolation(
                f"input has {A.shape[1]} columns, network expects {self.in_dim}"
            )
        return A

    def forward_tensor(self, X: Tensor) -> Tensor:
        """Graph-building forward pass on an existing Tensor."""
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h.matmul(W) + b
            if i < last:
                h = _apply_activation(h, self.activation)
        return h

    def forward(self, X) -> tuple[np.ndarray, Tape]:
        """Forward pass that records a tape for a later backward."""
        A = self._check_input(X)
        out = self.forward_tensor(Tensor(A))
        return out.data, Tape(out, tuple(self.params))

    def predict(self, X) -> np.ndarray:
        """Plain forward pass, no recording."""
        h = self._check_input(X)
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W.data + b.data
            if i < last:
                h = _apply_activation_np(h, self.activation)
        return h

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)

    # ---- serialization -------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "layer_dims": list(self.layer_dims),
            "activation": self.activation,
            "seed": self.seed,
            "weights": [W.data.reshape(-1).tolist() for W in self.weights],
            "biases": [b.data.tolist() for b in self.biases],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "MLP":
        net = cls(doc["layer_dims"], activation=doc["activation"],
                  seed=doc.get("seed", 0))
        for W, flat in zip(net.weights, doc["weights"]):
            W.data = np.asarray(flat, dtype=np.float64).reshape(W.data.shape)
        for b, vals in zip(net.biases, doc["biases"]):
            b.data = np.asarray(vals, dtype=np.float64)
        return net


@dataclass
class AdamState:
    """Per-parameter-list moment accumulators plus the shared step counter."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
            "eps": self.eps, "t": self.t,
            "m": [a.reshape(-1).tolist() for a in self.m],
            "v": [a.reshape(-1).tolist() for a in self.v],
        }

    @classmethod
    def from_doc(cls, doc: dict, shapes) -> "AdamState":
        state = cls(lr=doc["lr"], beta1=doc["beta1"], beta2=doc["beta2"],
                    eps=doc["eps"], t=doc["t"])
        state.m = [np.asarray(a, dtype=np.float64).reshape(s)
                   for a, s in zip(doc["m"], shapes)]
        state.v = [np.asarray(a, dtype=np.float64).reshape(s)
                   for a, s in zip(doc["v"], shapes)]
        return state


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState) -> AdamState:
    """One bias-corrected Adam update, applied to the parameters in place.

    Raises TrainingDivergence on any non-finite gradient, reporting the step
    index and the offending gradient magnitude.
    """
    check_positive(state.lr, "learning rate")
    if len(params) != len(grads):
        raise ContractViolation("params and grads must align")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    for p, g, m in zip(params, grads, state.m):
        if g.shape != p.data.shape or m.shape != p.data.shape:
            raise ContractViolation("gradient/moment shapes must match parameters")
        if not np.all(np.isfinite(g)):
            raise TrainingDivergence(
                "non-finite gradient encountered",
                step=state.t,
                last_losses=None,
            )
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data = p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.bump_version()
    return state


def grad_check(net: MLP, X, step: float = 1e-4) -> float:
    """Max relative disagreement between autodiff and central differences.

    Uses the sum of all network outputs as the probe scalar. Feasible only
    for small parameter counts; refuses above 10^4.
    """
    if net.n_params() > 10_000:
        raise ContractViolation("grad_check limited to networks with <= 1e4 parameters")
    A = net._check_input(X)

    def loss():
        return net.forward_tensor(Tensor(A)).sum()

    return finite_difference_max_error(loss, net.params, step=step)


def save_json(path, doc: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
