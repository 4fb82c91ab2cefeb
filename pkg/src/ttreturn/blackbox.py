"""Small tanh MLP surrogate of the landing-point map, trained with Adam.

Fixed architecture 2 -> 4 -> 4 -> 4 -> 4 -> 2, hyperbolic tangent on the
hidden layers, identity output. Inputs are normalized onto the feasible
policy box, outputs onto the dataset mean and spread. Gradients of the
output w.r.t. the policy come from the exact layer-by-layer chain rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .arm import InterceptionPolicy
from .errors import DegenerateDataset
from .optimizer import FeasibleSet

HIDDEN_LAYERS = (4, 4, 4, 4)
OUTPUT_STD_FLOOR = 1e-6  # avoids a degenerate output scale on tiny datasets


@dataclass
class MlpModel:
    layers: list[tuple[np.ndarray, np.ndarray]]  # [(weight (out, in), bias (out,)), ...]
    input_center: np.ndarray
    input_half: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray

    def save(self, path, meta: dict | None = None) -> None:
        doc = {
            "meta": meta or {},
            "architecture": [2, *HIDDEN_LAYERS, 2],
            "activation": "tanh",
            "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in self.layers],
            "input_center": self.input_center.tolist(),
            "input_half": self.input_half.tolist(),
            "output_mean": self.output_mean.tolist(),
            "output_std": self.output_std.tolist(),
        }
        with open(path, "w", newline="\n") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "MlpModel":
        with open(path) as f:
            doc = json.load(f)
        return cls(
            layers=[(np.array(l["weight"]), np.array(l["bias"])) for l in doc["layers"]],
            input_center=np.array(doc["input_center"]),
            input_half=np.array(doc["input_half"]),
            output_mean=np.array(doc["output_mean"]),
            output_std=np.array(doc["output_std"]),
        )


@dataclass
class Dataset:
    """Pairs of policy and observed landing point."""

    records: list[tuple[InterceptionPolicy, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([[phi.theta1, phi.theta4] for phi, _ in self.records])
        y = np.array([landing for _, landing in self.records], dtype=float)
        return x, y

    def save_csv(self, path, comments: tuple[str, ...] = ()) -> None:
        with open(path, "w", newline="\n") as f:
            for line in comments:
                f.write(f"# {line}\n")
            f.write("theta1,theta4,land_x,land_y\n")
            for phi, landing in self.records:
                f.write(
                    f"{phi.theta1:.9g},{phi.theta4:.9g},{landing[0]:.9g},{landing[1]:.9g}\n"
                )

    @classmethod
    def load_csv(cls, path) -> "Dataset":
        ds = cls()
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("theta1") or line.startswith("#"):
                    continue
                t1, t4, lx, ly = (float(v) for v in line.split(","))
                ds.records.append((InterceptionPolicy(t1, t4), np.array([lx, ly])))
        return ds


@dataclass
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    batch_size: int = 64
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


def _forward_batch(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Normalized forward pass; returns output and hidden activations."""
    a = (x - model.input_center) / model.input_half
    activations = []
    for w, b in model.layers[:-1]:
        a = np.tanh(a @ w.T + b)
        activations.append(a)
    w, b = model.layers[-1]
    return a @ w.T + b, activations


def mlp_forward(model: MlpModel, phi: InterceptionPolicy) -> np.ndarray:
    """Predicted landing point for one policy."""
    out, _ = _forward_batch(model, phi.as_array()[None, :])
    return out[0] * model.output_std + model.output_mean


def mlp_jacobian(model: MlpModel, phi: InterceptionPolicy) -> np.ndarray:
    """Exact 2x2 derivative of the prediction w.r.t. the policy."""
    _, activations = _forward_batch(model, phi.as_array()[None, :])
    jac = np.diag(1.0 / model.input_half)
    for (w, _), a in zip(model.layers[:-1], activations):
        jac = (1.0 - a[0] ** 2)[:, None] * (w @ jac)
    w_out, _ = model.layers[-1]
    jac = w_out @ jac
    return model.output_std[:, None] * jac


def _init_model(x: np.ndarray, y: np.ndarray, rng: np.random.Generator, k: FeasibleSet) -> MlpModel:
    sizes = [2, *HIDDEN_LAYERS, 2]
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append((w, b))
    lo = np.array([k.theta1_bounds[0], k.theta4_bounds[0]])
    hi = np.array([k.theta1_bounds[1], k.theta4_bounds[1]])
    return MlpModel(
        layers=layers,
        input_center=(lo + hi) / 2.0,
        input_half=(hi - lo) / 2.0,
        output_mean=y.mean(axis=0),
        output_std=np.maximum(y.std(axis=0), OUTPUT_STD_FLOOR),
    )


def train(
    dataset: Dataset, cfg: TrainConfig, k: FeasibleSet | None = None
) -> tuple[MlpModel, dict]:
    """Train the surrogate on landing-point data with Adam.

    Deterministic given cfg.seed (init, split and shuffle order all derive
    from it). Returns the model and per-epoch train/validation MSE [m^2].
    """
    if len(dataset) < 1:
        raise ValueError("dataset is empty")
    x, y = dataset.arrays()
    if len(dataset) >= 2 and np.allclose(x, x[0]):
        raise DegenerateDataset("all policies in the dataset are identical")
    if k is None:
        k = FeasibleSet()

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    model = _init_model(x, y, rng, k)

    n = len(dataset)
    n_val = int(round(cfg.validation_fraction * n)) if n >= 10 else 0
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    x_tr, y_tr = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]
    y_tr_n = (y_tr - model.output_mean) / model.output_std

    params = [p for pair in model.layers for p in pair]
    m_adam = [np.zeros_like(p) for p in params]
    v_adam = [np.zeros_like(p) for p in params]
    t_step = 0

    def real_mse(xs: np.ndarray, ys: np.ndarray) -> float:
        out, _ = _forward_batch(model, xs)
        pred = out * model.output_std + model.output_mean
        return float(np.mean(np.sum((pred - ys) ** 2, axis=1)))

    history: dict = {"train_mse": [], "val_mse": []}
    n_tr = len(x_tr)
    for _ in range(cfg.epochs):
        order = rng.permutation(n_tr)
        for start in range(0, n_tr, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb, yb = x_tr[batch], y_tr_n[batch]

            # forward with caches
            a = (xb - model.input_center) / model.input_half
            acts = [a]
            for w, b in model.layers[:-1]:
                a = np.tanh(a @ w.T + b)
                acts.append(a)
            w, b = model.layers[-1]
            out = a @ w.T + b

            # backward: mean over the batch of the squared error sum
            delta = 2.0 * (out - yb) / len(batch)
            grads = []
            for li in range(len(model.layers) - 1, -1, -1):
                w, _ = model.layers[li]
                grads.append((delta.T @ acts[li], delta.sum(axis=0)))
                if li > 0:
                    delta = (delta @ w) * (1.0 - acts[li] ** 2)
            grad_flat = [g for pair in reversed(grads) for g in pair]

            t_step += 1
            corr1 = 1.0 - cfg.beta1**t_step
            corr2 = 1.0 - cfg.beta2**t_step
            for pi, (p, g) in enumerate(zip(params, grad_flat)):
                m_adam[pi] = cfg.beta1 * m_adam[pi] + (1.0 - cfg.beta1) * g
                v_adam[pi] = cfg.beta2 * v_adam[pi] + (1.0 - cfg.beta2) * g**2
                p -= cfg.learning_rate * (m_adam[pi] / corr1) / (
                    np.sqrt(v_adam[pi] / corr2) + cfg.eps_adam
                )

        history["train_mse"].append(real_mse(x_tr, y_tr))
        history["val_mse"].append(real_mse(x_val, y_val) if n_val > 0 else float("nan"))

    return model, history


class BlackboxPredictor:
    """Predictor handle for the online optimizer (ignores the incoming ball)."""

    def __init__(self, model: MlpModel):
        self.model = model

    def predict(self, phi: InterceptionPolicy, incoming=None) -> np.ndarray:
        return mlp_forward(self.model, phi)

    def gradient(self, phi: InterceptionPolicy, incoming=None) -> np.ndarray:
        return mlp_jacobian(self.model, phi)
