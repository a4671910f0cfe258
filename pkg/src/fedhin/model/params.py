"""Model parameters, sparse gradients, and checkpoint I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ModelParams:
    """Embedding tables plus attention parameters.

    ``path_W`` / ``path_a`` are keyed by meta-path name; the semantic-level
    transform is shared across all meta-paths of both sides.
    """

    user_emb: np.ndarray
    item_emb: np.ndarray
    path_W: dict[str, np.ndarray]
    path_a: dict[str, np.ndarray]
    sem_W: np.ndarray
    sem_b: np.ndarray
    sem_q: np.ndarray

    @property
    def dim(self) -> int:
        return self.user_emb.shape[1]

    @classmethod
    def init(cls, num_users: int, num_items: int, dim: int, path_names: list[str],
             seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(dim)

        def u(*shape):
            return rng.uniform(-scale, scale, size=shape)

        return cls(
            user_emb=u(num_users, dim),
            item_emb=u(num_items, dim),
            path_W={p: u(dim, dim) for p in path_names},
            path_a={p: u(2 * dim) for p in path_names},
            sem_W=u(dim, dim),
            sem_b=u(dim),
            sem_q=u(dim),
        )

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.user_emb.copy(), self.item_emb.copy(),
            {k: v.copy() for k, v in self.path_W.items()},
            {k: v.copy() for k, v in self.path_a.items()},
            self.sem_W.copy(), self.sem_b.copy(), self.sem_q.copy(),
        )

    def save(self, path) -> None:
        arrays = {"user_emb": self.user_emb, "item_emb": self.item_emb,
                  "sem_W": self.sem_W, "sem_b": self.sem_b, "sem_q": self.sem_q,
                  "path_names": np.array(sorted(self.path_W), dtype=object)}
        for name in self.path_W:
            arrays[f"W::{name}"] = self.path_W[name]
            arrays[f"a::{name}"] = self.path_a[name]
        np.savez(path, **{k: v for k, v in arrays.items()})

    @classmethod
    def load(cls, path) -> "ModelParams":
        with np.load(path, allow_pickle=True) as data:
            names = [str(n) for n in data["path_names"]]
            return cls(
                user_emb=data["user_emb"], item_emb=data["item_emb"],
                path_W={n: data[f"W::{n}"] for n in names},
                path_a={n: data[f"a::{n}"] for n in names},
                sem_W=data["sem_W"], sem_b=data["sem_b"], sem_q=data["sem_q"],
            )


@dataclass
class Gradients:
    """Same shapes as ModelParams; embedding rows stored sparsely."""

    user_rows: dict[int, np.ndarray] = field(default_factory=dict)
    item_rows: dict[int, np.ndarray] = field(default_factory=dict)
    path_W: dict[str, np.ndarray] = field(default_factory=dict)
    path_a: dict[str, np.ndarray] = field(default_factory=dict)
    sem_W: np.ndarray | None = None
    sem_b: np.ndarray | None = None
    sem_q: np.ndarray | None = None

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Gradients":
        return cls(
            path_W={k: np.zeros_like(v) for k, v in params.path_W.items()},
            path_a={k: np.zeros_like(v) for k, v in params.path_a.items()},
            sem_W=np.zeros_like(params.sem_W),
            sem_b=np.zeros_like(params.sem_b),
            sem_q=np.zeros_like(params.sem_q),
        )

    def add_user_row(self, row: int, grad: np.ndarray) -> None:
        if row in self.user_rows:
            self.user_rows[row] = self.user_rows[row] + grad
        else:
            self.user_rows[row] = grad.copy()

    def add_item_row(self, row: int, grad: np.ndarray) -> None:
        if row in self.item_rows:
            self.item_rows[row] = self.item_rows[row] + grad
        else:
            self.item_rows[row] = grad.copy()


def apply_sgd(params: ModelParams, grads: Gradients, lr: float) -> None:
    """In-place step params <- params - lr * grads."""
    for row, g in grads.user_rows.items():
        params.user_emb[row] -= lr * g
    for row, g in grads.item_rows.items():
        params.item_emb[row] -= lr * g
    for name, g in grads.path_W.items():
        params.path_W[name] -= lr * g
    for name, g in grads.path_a.items():
        params.path_a[name] -= lr * g
    params.sem_W -= lr * grads.sem_W
    params.sem_b -= lr * grads.sem_b
    params.sem_q -= lr * grads.sem_q
