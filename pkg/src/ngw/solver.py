"""Alternating stochastic training of the transport net, potential, and cost matrix.

Each outer iteration performs k_P descent steps on the cost matrix (with a
re-projection onto its Frobenius sphere after every update), then k_f blocks
of k_T transport-net steps followed by one potential step. All three losses
are plain descent targets; their signs already encode who minimizes and who
maximizes the saddle objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .errors import ContractViolation, TrainingDivergence
from .gaussian import GaussianSpec
from .linalg import frobenius_radius, project_frobenius
from .nn import (
    CHECKPOINT_VERSION,
    MLP,
    AdamState,
    adam_step,
    load_json,
    save_json,
)
from .seeding import derive_seed
from .validation import as_matrix, check_batch_pair, check_count, check_positive

DIVERGENCE_LIMIT = 1e8


@dataclass
class TrainConfig:
    """Knobs of the alternating optimization; defaults suit dims <= 64."""

    outer_iters: int = 20000
    k_P: int = 1
    k_f: int = 1
    k_T: int = 10
    batch_size: int = 256
    lr_P: float = 1e-3
    lr_f: float = 1e-4
    lr_T: float = 1e-4
    hidden_width: int | None = None  # None: max(128, 2 * max(m, n))
    hidden_layers: int = 2
    p_init: str = "identity"  # or "random"
    seed: int = 0

    def validate(self) -> "TrainConfig":
        check_count(self.outer_iters, "outer_iters")
        check_count(self.k_P, "k_P")
        check_count(self.k_f, "k_f")
        check_count(self.k_T, "k_T")
        check_count(self.batch_size, "batch_size", minimum=2)
        check_positive(self.lr_P, "lr_P")
        check_positive(self.lr_f, "lr_f")
        check_positive(self.lr_T, "lr_T")
        if self.hidden_width is not None:
            check_count(self.hidden_width, "hidden_width")
        check_count(self.hidden_layers, "hidden_layers")
        if self.p_init not in ("identity", "random"):
            raise ContractViolation(f"unknown p_init {self.p_init!r}")
        return self

    def width_for(self, m: int, n: int) -> int:
        if self.hidden_width is not None:
            return self.hidden_width
        return max(128, 2 * max(m, n))


class Sampler:
    """Deterministic-under-seed source of i.i.d. batches from one distribution."""

    dim: int

    def sample(self, size: int) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


class GaussianSampler(Sampler):
    def __init__(self, spec: GaussianSpec, seed: int):
        self.spec = spec
        self.dim = spec.dim
        self._rng = np.random.default_rng(seed)
        self._factor = np.sqrt(spec.eigenvalues)

    def sample(self, size: int) -> np.ndarray:
        Z = self._rng.standard_normal((check_count(size, "size"), self.dim))
        return (Z * self._factor) @ self.spec.rotation


class ArraySampler(Sampler):
    """Resamples rows of a fixed point cloud with replacement."""

    def __init__(self, points, seed: int):
        self.points = as_matrix(points, name="points")
        if self.points.shape[0] < 1:
            raise ContractViolation("point cloud must be non-empty")
        self.dim = self.points.shape[1]
        self._rng = np.random.default_rng(seed)

    def sample(self, size: int) -> np.ndarray:
        idx = self._rng.integers(0, self.points.shape[0], size=check_count(size, "size"))
        return self.points[idx]


class FunctionSampler(Sampler):
    """Adapts a draw(rng, size) callable to the sampler interface."""

    def __init__(self, draw, dim: int, seed: int):
        self._draw = draw
        self.dim = int(dim)
        self._rng = np.random.default_rng(seed)

    def sample(self, size: int) -> np.ndarray:
        X = self._draw(self._rng, check_count(size, "size"))
        return as_matrix(X, name="sampled batch")


# ---- losses ------------------------------------------------------------------


def _check_cost_shapes(P, X, Z):
    P = as_matrix(P, name="P")
    X, Z = check_batch_pair(X, Z, names=("X", "Z"))
    n, m = P.shape
    if X.shape[1] != m:
        raise ContractViolation(f"X has {X.shape[1]} columns, P expects {m}")
    if Z.shape[1] != n:
        raise ContractViolation(f"Z has {Z.shape[1]} columns, P expects {n}")
    return P, X, Z


def loss_P(P, X, Z) -> float:
    """Cost loss: minus the mean inner product between P x_j and z_j."""
    P, X, Z = _check_cost_shapes(P, X, Z)
    return float(-np.mean(np.sum((X @ P.T) * Z, axis=1)))


def loss_T(P, f: MLP, X, Z) -> float:
    """Transport loss: cost part minus the mean potential at the mapped points."""
    P, X, Z = _check_cost_shapes(P, X, Z)
    return loss_P(P, X, Z) - float(np.mean(f.predict(Z)))


def loss_f(f: MLP, Z, Y) -> float:
    """Potential loss: mean over mapped points minus mean over target points."""
    Z = as_matrix(Z, name="Z")
    Y = as_matrix(Y, name="Y")
    if Z.shape[1] != Y.shape[1]:
        raise ContractViolation("Z and Y must live in the same space")
    return float(np.mean(f.predict(Z)) - np.mean(f.predict(Y)))


def init_P(m: int, n: int, seed: int = 0, kind: str = "identity") -> np.ndarray:
    """Initial n-by-m cost matrix on the Frobenius sphere.

    "identity" places ones on the main diagonal of the truncated identity
    block (already on the sphere); "random" projects Gaussian entries.
    """
    m = check_count(m, "m")
    n = check_count(n, "n")
    if kind == "identity":
        return project_frobenius(np.eye(n, m), m=m, n=n)
    if kind == "random":
        rng = np.random.default_rng(seed)
        return project_frobenius(rng.standard_normal((n, m)), m=m, n=n)
    raise ContractViolation(f"unknown init kind {kind!r}")


def transport(net: MLP, X) -> np.ndarray:
    """Apply a trained transport network row-wise."""
    return net.predict(X)


# ---- training ----------------------------------------------------------------


@dataclass
class TrainHistory:
    steps: list[int] = field(default_factory=list)
    loss_P: list[float] = field(default_factory=list)
    loss_T: list[float] = field(default_factory=list)
    loss_f: list[float] = field(default_factory=list)
    p_norm: list[float] = field(default_factory=list)

    def append(self, step, lp, lt, lf, p_norm):
        self.steps.append(step)
        self.loss_P.append(lp)
        self.loss_T.append(lt)
        self.loss_f.append(lf)
        self.p_norm.append(p_norm)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("step,loss_P,loss_T,loss_f\n")
            for s, lp, lt, lf in zip(self.steps, self.loss_P, self.loss_T, self.loss_f):
                fh.write(f"{s},{lp!r},{lt!r},{lf!r}\n")


@dataclass
class TrainResult:
    transport_net: MLP
    potential_net: MLP
    cost_matrix: np.ndarray
    history: TrainHistory
    config: TrainConfig
    optimizer_states: dict

    def transport(self, X) -> np.ndarray:
        return transport(self.transport_net, X)


def _guard(value: float, name: str, step: int, last: dict) -> float:
    if not np.isfinite(value) or abs(value) > DIVERGENCE_LIMIT:
        raise TrainingDivergence(
            f"{name} diverged at outer step {step}: {value!r}",
            step=step,
            last_losses=dict(last),
        )
    return value


def train(cfg: TrainConfig, mu: Sampler, nu: Sampler,
          warm_start: TrainResult | None = None) -> TrainResult:
    """Run the full alternating optimization and return the trained triple.

    Deterministic given cfg.seed and freshly seeded samplers: network
    initialization, every gradient step, and the recorded history repeat
    bit-for-bit across runs. Passing a previous result as warm_start
    continues from its networks, cost matrix, and optimizer moments (with
    this config's learning rates), enabling staged schedules.
    """
    cfg.validate()
    m, n = mu.dim, nu.dim
    if warm_start is not None:
        T = MLP.from_doc(warm_start.transport_net.to_doc())
        f = MLP.from_doc(warm_start.potential_net.to_doc())
        P = Tensor(warm_start.cost_matrix.copy(), requires_grad=True)
        states = warm_start.optimizer_states
        opt_P = AdamState.from_doc(states["P"].to_doc(), [P.data.shape])
        opt_T = AdamState.from_doc(states["T"].to_doc(),
                                   [p.data.shape for p in T.params])
        opt_f = AdamState.from_doc(states["f"].to_doc(),
                                   [p.data.shape for p in f.params])
        opt_P.lr, opt_T.lr, opt_f.lr = cfg.lr_P, cfg.lr_T, cfg.lr_f
        if T.in_dim != m or f.in_dim != n:
            raise ContractViolation("warm_start dimensions do not match samplers")
    else:
        width = cfg.width_for(m, n)
        hidden = [width] * cfg.hidden_layers
        T = MLP([m] + hidden + [n], activation="relu",
                seed=derive_seed(cfg.seed, "transport"))
        f = MLP([n] + hidden + [1], activation="leaky_relu",
                seed=derive_seed(cfg.seed, "potential"))
        P = Tensor(init_P(m, n, seed=derive_seed(cfg.seed, "cost"), kind=cfg.p_init),
                   requires_grad=True)
        opt_P = AdamState(lr=cfg.lr_P)
        opt_T = AdamState(lr=cfg.lr_T)
        opt_f = AdamState(lr=cfg.lr_f)

    B = cfg.batch_size
    radius = frobenius_radius(m, n)
    history = TrainHistory()
    last: dict[str, float] = {}

    for step in range(cfg.outer_iters):
        try:
            for _ in range(cfg.k_P):
                X = mu.sample(B)
                Z = T.predict(X)
                cross = Tensor(Z.T @ X * (1.0 / B))  # <P, Z^T X>/B == mean <P x, z>
                lp = -(P * cross).sum()
                last["loss_P"] = _guard(float(lp.data), "loss_P", step, last)
                P.zero_grad()
                lp.backward()
                adam_step([P], [P.grad], opt_P)
                P.data = project_frobenius(P.data, m=m, n=n)
                if abs(float(np.linalg.norm(P.data)) - radius) > 1e-8 * radius:
                    raise TrainingDivergence(
                        "cost matrix left its Frobenius sphere", step=step,
                        last_losses=dict(last),
                    )

            for _ in range(cfg.k_f):
                for _ in range(cfg.k_T):
                    X = mu.sample(B)
                    XP = X @ P.data.T  # constant during the T step
                    Zt = T.forward_tensor(Tensor(X))
                    cost_part = (Tensor(XP) * Zt).sum() * (-1.0 / B)
                    lt = cost_part + f.forward_tensor(Zt).sum() * (-1.0 / B)
                    last["loss_T"] = _guard(float(lt.data), "loss_T", step, last)
                    for p in T.params:
                        p.zero_grad()
                    for p in f.params:
                        p.zero_grad()
                    lt.backward()
                    adam_step(
                        T.params,
                        [p.grad if p.grad is not None else np.zeros_like(p.data)
                         for p in T.params],
                        opt_T,
                    )

                X = mu.sample(B)
                Y = nu.sample(B)
                Z = T.predict(X)
                stacked = np.vstack([Z, Y])
                sign = np.concatenate([
                    np.full(Z.shape[0], 1.0 / Z.shape[0]),
                    np.full(Y.shape[0], -1.0 / Y.shape[0]),
                ])[:, None]
                out = f.forward_tensor(Tensor(stacked))
                lf = (out * Tensor(sign)).sum()
                last["loss_f"] = _guard(float(lf.data), "loss_f", step, last)
                for p in f.params:
                    p.zero_grad()
                lf.backward()
                adam_step(
                    f.params,
                    [p.grad if p.grad is not None else np.zeros_like(p.data)
                     for p in f.params],
                    opt_f,
                )
        except TrainingDivergence as exc:
            if exc.step is None:
                exc.step = step
            if exc.last_losses is None:
                exc.last_losses = dict(last)
            raise

        history.append(step, last["loss_P"], last["loss_T"], last["loss_f"],
                       float(np.linalg.norm(P.data)))

    return TrainResult(
        transport_net=T,
        potential_net=f,
        cost_matrix=P.data.copy(),
        history=history,
        config=cfg,
        optimizer_states={"P": opt_P, "T": opt_T, "f": opt_f},
    )


# ---- checkpoints ---------------------------------------------------------------


def save_checkpoint(path, result: TrainResult) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "seed": result.config.seed,
        "step": len(result.history.steps),
        "transport": result.transport_net.to_doc(),
        "potential": result.potential_net.to_doc(),
        "cost_matrix": {
            "rows": int(result.cost_matrix.shape[0]),
            "cols": int(result.cost_matrix.shape[1]),
            "data": result.cost_matrix.reshape(-1).tolist(),
        },
        "optimizers": {k: v.to_doc() for k, v in result.optimizer_states.items()},
    }
    save_json(path, doc)


def load_checkpoint(path) -> TrainResult:
    doc = load_json(path)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ContractViolation(
            f"unsupported checkpoint version {doc.get('version')!r}"
        )
    T = MLP.from_doc(doc["transport"])
    f = MLP.from_doc(doc["potential"])
    cm = doc["cost_matrix"]
    P = np.asarray(cm["data"], dtype=np.float64).reshape(cm["rows"], cm["cols"])
    opts = {
        "P": AdamState.from_doc(doc["optimizers"]["P"], [P.shape]),
        "T": AdamState.from_doc(doc["optimizers"]["T"],
                                [p.data.shape for p in T.params]),
        "f": AdamState.from_doc(doc["optimizers"]["f"],
                                [p.data.shape for p in f.params]),
    }
    cfg = TrainConfig(seed=doc.get("seed", 0))
    history = TrainHistory()
    return TrainResult(T, f, P, history, cfg, opts)
