"""Recommendation model: node-level and semantic-level attention with
inner-product scoring, pairwise ranking loss, and analytic gradients.

Users and items are referenced by embedding-table row index. A batch
carries precomputed neighbor rows per meta-path; neighbors of a
user-side path are users and of an item-side path are items.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .params import Gradients, ModelParams

LEAKY_SLOPE = 0.2

NeighborMap = dict[str, dict[int, np.ndarray]]


@dataclass
class Batch:
    user_paths: NeighborMap  # path name -> anchor user row -> neighbor user rows
    item_paths: NeighborMap
    pairs: list[tuple[int, int, int]]  # (user, positive item, negative item)


@dataclass
class _SideCache:
    anchors: list[int]
    path_names: list[str]
    neighbor_rows: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    node: dict[tuple[str, int], tuple] = field(default_factory=dict)  # alpha, e, m, z_rho
    tanh: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    beta: np.ndarray | None = None
    z: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class ForwardCache:
    batch: Batch
    user_side: _SideCache
    item_side: _SideCache
    y_pos: np.ndarray
    y_neg: np.ndarray
    loss: float


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def score(z_u: np.ndarray, z_v: np.ndarray) -> float:
    return float(z_u @ z_v)


def bpr_loss(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Sum of -ln sigmoid(pos - neg), evaluated as ln(1 + e^-x)."""
    return float(np.logaddexp(0.0, -(np.asarray(pos_scores) - np.asarray(neg_scores))).sum())


def _check_rows(table: np.ndarray, rows: np.ndarray, kind: str) -> None:
    rows = np.asarray(rows)
    if rows.size and (rows.min() < 0 or rows.max() >= table.shape[0]):
        raise ValueError(f"unknown {kind} row in batch")


def _side_forward(table: np.ndarray, paths: NeighborMap, params: ModelParams,
                  kind: str) -> _SideCache:
    if not paths:
        raise ValueError("meta-path list must be non-empty")
    path_names = list(paths)
    anchors = list(paths[path_names[0]])
    if not anchors:
        raise ValueError("anchor set must be non-empty")
    cache = _SideCache(anchors=anchors, path_names=path_names)

    w = np.zeros(len(path_names))
    for k, p in enumerate(path_names):
        W_p, a_p = params.path_W[p], params.path_a[p]
        acc = 0.0
        for anchor in anchors:
            nbrs = np.asarray(paths[p][anchor], dtype=np.int64)
            _check_rows(table, nbrs, kind)
            _check_rows(table, np.array([anchor]), kind)
            H = table[nbrs]
            alpha, e, m, z_rho = kernels.node_forward(table[anchor], H, W_p, a_p, LEAKY_SLOPE)
            t = np.tanh(params.sem_W @ z_rho + params.sem_b)
            cache.neighbor_rows[(p, anchor)] = nbrs
            cache.node[(p, anchor)] = (alpha, e, m, z_rho)
            cache.tanh[(p, anchor)] = t
            acc += params.sem_q @ t
        w[k] = acc / len(anchors)

    cache.beta = _softmax(w)
    for anchor in anchors:
        z = np.zeros(params.dim)
        for k, p in enumerate(path_names):
            z += cache.beta[k] * cache.node[(p, anchor)][3]
        cache.z[anchor] = z
    return cache


def forward(params: ModelParams, batch: Batch) -> ForwardCache:
    """Run both sides and score every (user, positive, negative) pair."""
    user_side = _side_forward(params.user_emb, batch.user_paths, params, "user")
    item_side = _side_forward(params.item_emb, batch.item_paths, params, "item")
    y_pos = np.array([score(user_side.z[u], item_side.z[v]) for u, v, _ in batch.pairs])
    y_neg = np.array([score(user_side.z[u], item_side.z[v]) for u, _, v in batch.pairs])
    return ForwardCache(batch, user_side, item_side, y_pos, y_neg,
                        bpr_loss(y_pos, y_neg))


def _side_backward(table: np.ndarray, cache: _SideCache, params: ModelParams,
                   g_final: dict[int, np.ndarray], grads: Gradients,
                   add_row) -> None:
    anchors, path_names, beta = cache.anchors, cache.path_names, cache.beta
    n_anchor = len(anchors)

    dbeta = np.zeros(len(path_names))
    for k, p in enumerate(path_names):
        dbeta[k] = sum(g_final[a] @ cache.node[(p, a)][3] for a in anchors)
    dw = beta * (dbeta - beta @ dbeta)

    for k, p in enumerate(path_names):
        W_p, a_p = params.path_W[p], params.path_a[p]
        for anchor in anchors:
            alpha, e, m, z_rho = cache.node[(p, anchor)]
            t = cache.tanh[(p, anchor)]
            dt = (dw[k] / n_anchor) * params.sem_q
            dc = dt * (1.0 - t * t)
            grads.sem_W += np.outer(dc, z_rho)
            grads.sem_b += dc
            grads.sem_q += (dw[k] / n_anchor) * t

            dz = beta[k] * g_final[anchor] + params.sem_W.T @ dc
            nbrs = cache.neighbor_rows[(p, anchor)]
            dW, da, dh_i, dH = kernels.node_backward(
                table[anchor], table[nbrs], W_p, a_p, alpha, e, m, dz, LEAKY_SLOPE)
            grads.path_W[p] += dW
            grads.path_a[p] += da
            add_row(anchor, dh_i)
            for j, row in enumerate(nbrs):
                add_row(int(row), dH[j])


def backward(params: ModelParams, cache: ForwardCache) -> Gradients:
    """Exact gradients of the ranking loss for the cached batch."""
    x = cache.y_pos - cache.y_neg
    dx = -np.exp(-np.logaddexp(0.0, x))  # -sigmoid(-x)

    gu: dict[int, np.ndarray] = {a: np.zeros(params.dim) for a in cache.user_side.anchors}
    gv: dict[int, np.ndarray] = {a: np.zeros(params.dim) for a in cache.item_side.anchors}
    for i, (u, pos, neg) in enumerate(cache.batch.pairs):
        gu[u] += dx[i] * (cache.item_side.z[pos] - cache.item_side.z[neg])
        gv[pos] += dx[i] * cache.user_side.z[u]
        gv[neg] -= dx[i] * cache.user_side.z[u]

    grads = Gradients.zeros_like(params)
    _side_backward(params.user_emb, cache.user_side, params, gu, grads, grads.add_user_row)
    _side_backward(params.item_emb, cache.item_side, params, gv, grads, grads.add_item_row)
    return grads
