"""Federated orchestration: one-shot publishing, server-side neighbor
recovery on the perturbed graph, and round-based training with LDP
gradient uploads.

The server never holds a :class:`~fedhin.graph.PrivateView`; raw views
live only in client state and are read exclusively during bootstrap
(publishing) and split construction. ``PrivateView.read_count`` lets
tests assert this.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import perturb
from .config import RunConfig
from .evaluation import EvalSplit, Metrics, leave_one_out_split, rank_target, summarize_ranks
from .graph import (Hin, MetaPath, PrivateView, SharedKnowledge, cluster_items,
                    meta_path_neighbors, partition, resolve_meta_path)
from .model import Batch, Gradients, ModelParams, apply_sgd, backward, forward
from .model.hgnn import _side_forward

NeighborMap = dict[str, dict[int, np.ndarray]]


@dataclass(frozen=True)
class LdpConfig:
    clip: float  # per-entry magnitude bound
    noise: float  # Laplace scale
    pseudo_items: int

    def __post_init__(self):
        if self.clip <= 0 or self.noise < 0 or self.pseudo_items < 0:
            raise ValueError("invalid LDP configuration")


@dataclass
class ClientState:
    user_row: int
    view: PrivateView  # never leaves the client
    published: perturb.PerturbedAdjacency
    positives: np.ndarray = field(init=False)  # published item rows

    def __post_init__(self):
        self.positives = self.published.positives()


@dataclass
class ServerState:
    params: ModelParams
    perturbed_hin: Hin
    user_neighbors: NeighborMap  # path -> user row -> neighbor user rows
    item_neighbors: NeighborMap
    num_users: int
    num_items: int
    config: RunConfig
    round: int = 0


@dataclass
class RoundReport:
    round: int
    loss: float
    metrics: Metrics
    seconds: float


def _publish_rng(seed: int, user_row: int) -> np.random.Generator:
    return np.random.default_rng([seed, 1, user_row])


def bootstrap(hin: Hin, config: RunConfig, seed: int,
              holdout: dict[int, int] | None = None,
              ) -> tuple[ServerState, list[ClientState]]:
    """Publish every client once and recover meta-path neighbors.

    ``holdout`` maps user row to an item row excluded from the published
    view (leave-one-out evaluation); users ending up with zero degree or
    zero published positives are left off the training roster.
    """
    views, shared = partition(hin)
    part = cluster_items(shared, config.n_shared, seed)
    embeddings = perturb.shared_hin_embeddings(part, shared.features)
    pconfig = perturb.PerturbConfig(config.eps1, config.eps2, config.mode)

    user_t, item_t = hin.user_item_types()
    user_nodes = [i for i in range(hin.num_nodes) if hin.node_type[i] == user_t]
    item_nodes = shared.item_nodes
    user_row_of = {node: r for r, node in enumerate(user_nodes)}
    item_row_of = {node: r for r, node in enumerate(item_nodes)}

    clients: list[ClientState] = []
    published_edges: list[tuple[int, int, int]] = []
    private_et = next(iter(hin.private_edge_types))
    for row, view in enumerate(views):
        train_view = view
        if holdout and row in holdout:
            train_view = view.without_item(holdout[row])
        if train_view.degree < 1:
            continue
        pub = perturb.publish(train_view, part, embeddings, pconfig,
                              _publish_rng(seed, row))
        if pub.degree < 1:
            continue
        clients.append(ClientState(row, view, pub))
        for item_pos in pub.positives():
            published_edges.append((view.user, item_nodes[item_pos], private_et))

    perturbed = Hin(
        list(zip(hin.node_ids, (int(t) for t in hin.node_type))),
        shared.shared_edges + published_edges,
        hin.node_type_names, hin.edge_type_names, hin.private_edge_types,
    )

    user_type_name = hin.node_type_names[user_t]
    item_type_name = hin.node_type_names[item_t]

    def recover(path_specs: list[str], nodes: list[int], row_of: dict[int, int],
                anchor_type: str) -> NeighborMap:
        out: NeighborMap = {}
        for spec in path_specs:
            path = resolve_meta_path(perturbed, spec)
            if path.node_types[0] != anchor_type or path.node_types[-1] != anchor_type:
                raise ValueError(f"meta-path {spec!r} must start and end at {anchor_type}")
            per_anchor = {}
            for node in nodes:
                nbrs = meta_path_neighbors(perturbed, node, path,
                                           config.max_neighbors, seed)
                per_anchor[row_of[node]] = np.array(sorted(row_of[v] for v in nbrs),
                                                    dtype=np.int64)
            out[spec] = per_anchor
        return out

    user_neighbors = recover(config.user_paths, user_nodes, user_row_of, user_type_name)
    item_neighbors = recover(config.item_paths, item_nodes, item_row_of, item_type_name)

    params = ModelParams.init(len(user_nodes), len(item_nodes), config.dim,
                              config.user_paths + config.item_paths, seed)
    server = ServerState(params, perturbed, user_neighbors, item_neighbors,
                         len(user_nodes), len(item_nodes), config)
    return server, clients


def sample_clients(roster: list[ClientState], batch_size: int,
                   rng: np.random.Generator) -> list[ClientState]:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if batch_size >= len(roster):
        return list(roster)
    picked = rng.choice(len(roster), size=batch_size, replace=False)
    return [roster[int(i)] for i in sorted(picked)]


def ldp_clip_noise(grads: Gradients, clip: float, noise: float,
                   rng: np.random.Generator) -> Gradients:
    """Per-entry clip to [-clip, clip], then zero-mean Laplace noise."""
    def tx(arr):
        out = np.clip(arr, -clip, clip)
        if noise > 0:
            out = out + rng.laplace(0.0, noise, size=out.shape)
        return out

    return Gradients(
        user_rows={k: tx(v) for k, v in grads.user_rows.items()},
        item_rows={k: tx(v) for k, v in grads.item_rows.items()},
        path_W={k: tx(v) for k, v in grads.path_W.items()},
        path_a={k: tx(v) for k, v in grads.path_a.items()},
        sem_W=tx(grads.sem_W), sem_b=tx(grads.sem_b), sem_q=tx(grads.sem_q),
    )


def local_train(client: ClientState, params: ModelParams, server: ServerState,
                ldp: LdpConfig, rng: np.random.Generator,
                neg_per_pos: int = 1) -> tuple[Gradients, float] | None:
    """One client step: BPR on published positives, pseudo rows, LDP upload.

    Returns None for clients with no published positives.
    """
    pos = client.positives
    if len(pos) == 0:
        return None
    pos_set = set(int(i) for i in pos)
    non_pos = np.array([i for i in range(server.num_items) if i not in pos_set],
                       dtype=np.int64)
    pairs = []
    for p in pos:
        for _ in range(neg_per_pos):
            pairs.append((client.user_row, int(p), int(rng.choice(non_pos))))

    item_anchors = sorted({v for _, p, n in pairs for v in (p, n)})
    batch = Batch(
        user_paths={path: {client.user_row: server.user_neighbors[path][client.user_row]}
                    for path in server.user_neighbors},
        item_paths={path: {v: server.item_neighbors[path][v] for v in item_anchors}
                    for path in server.item_neighbors},
        pairs=pairs,
    )
    cache = forward(params, batch)
    grads = backward(params, cache)

    if ldp.pseudo_items > 0 and len(non_pos):
        # zero-valued rows of the right shape, so uploaded row ids do not
        # single out true interactions
        pseudo = rng.choice(non_pos, size=min(ldp.pseudo_items, len(non_pos)),
                            replace=False)
        for row in pseudo:
            if int(row) not in grads.item_rows:
                grads.item_rows[int(row)] = np.zeros(params.dim)

    return ldp_clip_noise(grads, ldp.clip, ldp.noise, rng), cache.loss / len(pairs)


def aggregate(grad_list: list[Gradients]) -> Gradients:
    """Arithmetic mean; embedding rows average over contributing clients only."""
    if not grad_list:
        raise ValueError("nothing to aggregate")
    k = len(grad_list)
    out = Gradients(
        path_W={n: sum(g.path_W[n] for g in grad_list) / k for n in grad_list[0].path_W},
        path_a={n: sum(g.path_a[n] for g in grad_list) / k for n in grad_list[0].path_a},
        sem_W=sum(g.sem_W for g in grad_list) / k,
        sem_b=sum(g.sem_b for g in grad_list) / k,
        sem_q=sum(g.sem_q for g in grad_list) / k,
    )
    for attr in ("user_rows", "item_rows"):
        merged: dict[int, list[np.ndarray]] = {}
        for g in grad_list:
            for row, v in getattr(g, attr).items():
                merged.setdefault(row, []).append(v)
        setattr(out, attr, {row: sum(vs) / len(vs) for row, vs in merged.items()})
    return out


def sgd_update(params: ModelParams, mean_grads: Gradients, lr: float) -> None:
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    apply_sgd(params, mean_grads, lr)


def compute_final_embeddings(server: ServerState, user_rows: list[int],
                             item_rows: list[int]
                             ) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
    """Fused embeddings for a set of anchors, semantic weights per batch."""
    params = server.params
    user_paths = {p: {u: server.user_neighbors[p][u] for u in user_rows}
                  for p in server.user_neighbors}
    item_paths = {p: {v: server.item_neighbors[p][v] for v in item_rows}
                  for p in server.item_neighbors}
    uc = _side_forward(params.user_emb, user_paths, params, "user")
    ic = _side_forward(params.item_emb, item_paths, params, "item")
    return uc.z, ic.z


def evaluate_split(server: ServerState, split: EvalSplit) -> Metrics:
    item_rows = sorted({int(i) for u in split.users for i in split.candidates[u]})
    z_user, z_item = compute_final_embeddings(server, split.users, item_rows)
    ranks = []
    for u in split.users:
        cands = split.candidates[u]
        scores = np.array([z_user[u] @ z_item[int(v)] for v in cands])
        ranks.append(rank_target(scores))
    return summarize_ranks(ranks)


def run(hin: Hin, config: RunConfig, seed: int, out_dir: str | None = None,
        eval_negatives: int = 99) -> list[RoundReport]:
    """Bootstrap once, then sampled-client rounds with periodic evaluation.

    Stops at ``config.rounds`` or when HR@10 has not improved for
    ``config.patience`` rounds. Writes metrics.csv incrementally,
    checkpoints, and summary.json when ``out_dir`` is given.
    """
    import json
    import os

    views, _ = partition(hin)
    split = leave_one_out_split(views, eval_negatives, np.random.default_rng([seed, 2]))
    server, clients = bootstrap(hin, config, seed, holdout=split.test_item)
    ldp = LdpConfig(config.ldp_clip, config.ldp_noise, config.pseudo_items)

    # tripwire: no raw-view reads past this point
    raw_reads_baseline = sum(v.read_count for v in views)

    csv_fh = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        csv_fh = open(os.path.join(out_dir, "metrics.csv"), "w",
                      encoding="utf-8", newline="\n")
        csv_fh.write("round,loss,hr5,hr10,ndcg5,ndcg10\n")
        csv_fh.flush()

    reports: list[RoundReport] = []
    sample_rng = np.random.default_rng([seed, 3])
    best_hr10, best_round = -1.0, 0
    try:
        for rnd in range(1, config.rounds + 1):
            t0 = time.perf_counter()
            picked = sample_clients(clients, config.batch, sample_rng)
            grads, losses = [], []
            for client in picked:
                rng = np.random.default_rng([seed, 4, client.user_row, rnd])
                result = local_train(client, server.params, server, ldp, rng,
                                     config.neg_per_pos)
                if result is None:
                    continue
                g, loss = result
                grads.append(g)
                losses.append(loss)
            if grads:
                sgd_update(server.params, aggregate(grads), config.lr)
            server.round = rnd
            mean_loss = float(np.mean(losses)) if losses else 0.0

            if rnd % config.eval_every == 0 or rnd == config.rounds:
                metrics = evaluate_split(server, split)
                seconds = time.perf_counter() - t0
                reports.append(RoundReport(rnd, mean_loss, metrics, seconds))
                if csv_fh is not None:
                    csv_fh.write(f"{rnd},{mean_loss:.6f},{metrics.hr5:.6f},"
                                 f"{metrics.hr10:.6f},{metrics.ndcg5:.6f},"
                                 f"{metrics.ndcg10:.6f}\n")
                    csv_fh.flush()
                    server.params.save(os.path.join(out_dir, "checkpoint.npz"))
                if metrics.hr10 > best_hr10:
                    best_hr10, best_round = metrics.hr10, rnd
                elif rnd - best_round >= config.patience:
                    break
    finally:
        if csv_fh is not None:
            csv_fh.close()

    raw_reads_after = sum(v.read_count for v in views)
    if out_dir is not None:
        summary = {
            "rounds_run": server.round,
            "best_hr10": best_hr10,
            "final": reports[-1].metrics.as_dict() if reports else None,
            "evaluated_users": len(split.users),
            "skipped_users": split.skipped,
            "raw_view_reads_after_bootstrap": raw_reads_after - raw_reads_baseline,
        }
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if raw_reads_after != raw_reads_baseline:
        raise RuntimeError("privacy tripwire: raw private views were read during training")
    return reports
