"""Command-line entry point.

Subcommands: synth, perturb, train, evaluate, verify-privacy, stats.
Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import federated, perturb, synth
from .config import ConfigError, RunConfig, parse_config
from .evaluation import leave_one_out_split, perturbation_stats
from .graph import GraphError, Hin, partition, cluster_items

PRIVATE_EDGE_TYPES = synth.PRIVATE_EDGE_TYPES


def _load_dataset(data_dir: str) -> Hin:
    nodes = os.path.join(data_dir, "nodes.tsv")
    edges = os.path.join(data_dir, "edges.tsv")
    for path in (nodes, edges):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing dataset file {path}")
    return Hin.load(nodes, edges, PRIVATE_EDGE_TYPES)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _publish_all(hin: Hin, config: RunConfig):
    views, shared = partition(hin)
    part = cluster_items(shared, config.n_shared, config.seed)
    embeddings = perturb.shared_hin_embeddings(part, shared.features)
    pconfig = perturb.PerturbConfig(config.eps1, config.eps2, config.mode)
    published = []
    for row, view in enumerate(views):
        if view.degree < 1:
            continue
        pub = perturb.publish(view, part, embeddings, pconfig,
                              np.random.default_rng([config.seed, 1, row]))
        published.append(pub)
    return views, part, published


def cmd_synth(args) -> int:
    spec = synth.parse_spec(args.spec) if args.spec else synth.SynthSpec()
    nodes_path, edges_path = synth.gen_synth(spec, args.out)
    print(f"wrote {nodes_path} and {edges_path}")
    return 0


def cmd_perturb(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    hin = _load_dataset(args.data)
    views, part, published = _publish_all(hin, config)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "published.tsv")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for pub in published:
            item_ids = ",".join(hin.node_ids[part.item_nodes[i]] for i in pub.positives())
            fh.write(f"{hin.node_ids[pub.user]}\t{item_ids}\n")
    stats = perturbation_stats(views, published)
    _write_json(os.path.join(args.out, "stats.json"), stats)
    print(f"wrote {out_path}; unchanged proportion {stats['proportion']:.4f}")
    return 0


def cmd_train(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    hin = _load_dataset(args.data)
    reports = federated.run(hin, config, config.seed, out_dir=args.out)
    if reports:
        last = reports[-1]
        print(f"round {last.round}: loss={last.loss:.4f} hr10={last.metrics.hr10:.4f} "
              f"ndcg10={last.metrics.ndcg10:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    from .model import ModelParams

    config = parse_config(args.config) if args.config else RunConfig()
    hin = _load_dataset(args.data)
    views, _ = partition(hin)
    split = leave_one_out_split(views, args.negatives,
                               np.random.default_rng([args.seed, 2]))
    server, _clients = federated.bootstrap(hin, config, args.seed,
                                           holdout=split.test_item)
    server.params = ModelParams.load(args.checkpoint)
    metrics = federated.evaluate_split(server, split)
    payload = metrics.as_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, payload)
    return 0


def cmd_verify_privacy(args) -> int:
    from . import privacy_audit

    ok = privacy_audit.run_suite(verbose=True)
    print("all checks passed" if ok else "PRIVACY CHECKS FAILED")
    return 0 if ok else 1


def cmd_stats(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    hin = _load_dataset(args.data)
    if args.published:
        views, shared = partition(hin)
        item_pos = {node: k for k, node in enumerate(shared.item_nodes)}
        by_user: dict[int, np.ndarray] = {}
        with open(args.published, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                uid, _, items = line.partition("\t")
                bits = np.zeros(len(shared.item_nodes), dtype=np.uint8)
                for iid in filter(None, items.split(",")):
                    bits[item_pos[hin.node_index(iid)]] = 1
                by_user[hin.node_index(uid)] = bits
        published = [perturb.PerturbedAdjacency(u, np.array([]), bits, int(bits.sum()))
                     for u, bits in by_user.items()]
    else:
        views, _, published = _publish_all(hin, config)
    stats = perturbation_stats(views, published)
    print(json.dumps(stats, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, stats)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedhin",
                                     description="Privacy-preserving federated "
                                                 "recommendation over typed graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted synthetic dataset")
    p.add_argument("--spec", help="key=value spec file (defaults used if omitted)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("perturb", help="publish perturbed interactions")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("train", help="run federated training")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negatives", type=int, default=99,
                   help="sampled negatives per user; 0 ranks the full item set")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify-privacy", help="run the privacy bound fixture suite")
    p.add_argument("--fixtures", help="unused placeholder for custom fixture dirs")
    p.set_defaults(func=cmd_verify_privacy)

    p = sub.add_parser("stats", help="perturbation statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--published", help="published.tsv from the perturb subcommand")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except (ConfigError, GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
