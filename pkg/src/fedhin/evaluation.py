"""Leave-one-out splits, ranking metrics, and perturbation statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import PrivateView
from .perturb import PerturbedAdjacency


@dataclass
class EvalSplit:
    """Per evaluated user: held-out item, remaining positives, candidates.

    The candidate list puts the held-out target first, followed by the
    sampled negatives. Users with fewer than two interactions are skipped
    and counted.
    """

    users: list[int]  # user universe positions (view indices)
    test_item: dict[int, int]  # user -> held-out item universe position
    train_positives: dict[int, np.ndarray]
    candidates: dict[int, np.ndarray]  # target first
    skipped: int


@dataclass
class Metrics:
    hr5: float
    hr10: float
    ndcg5: float
    ndcg10: float

    def as_dict(self) -> dict[str, float]:
        return {"hr5": self.hr5, "hr10": self.hr10, "ndcg5": self.ndcg5, "ndcg10": self.ndcg10}


def leave_one_out_split(views: list[PrivateView], num_negatives: int,
                        rng: np.random.Generator) -> EvalSplit:
    """Hold one seeded-uniform positive out per user with degree >= 2.

    ``num_negatives == 0`` means full ranking: every non-interacted item
    becomes a candidate.
    """
    users, test_item, train_pos, candidates = [], {}, {}, {}
    skipped = 0
    for idx, view in enumerate(views):
        bits = view.bits
        pos = np.flatnonzero(bits)
        if len(pos) < 2:
            skipped += 1
            continue
        held = int(rng.choice(pos))
        non_pos = np.flatnonzero(bits == 0)
        if num_negatives > 0:
            negs = rng.choice(non_pos, size=min(num_negatives, len(non_pos)), replace=False)
        else:
            negs = non_pos
        users.append(idx)
        test_item[idx] = held
        train_pos[idx] = pos[pos != held]
        candidates[idx] = np.concatenate([[held], negs]).astype(np.int64)
    return EvalSplit(users, test_item, train_pos, candidates, skipped)


def rank_target(scores: np.ndarray) -> int:
    """1-based rank of the first candidate, ties resolved pessimistically."""
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("candidate scores must be finite")
    target = scores[0]
    return 1 + int(np.sum(scores[1:] >= target))


def hr_at_k(rank: int, k: int) -> float:
    return 1.0 if rank <= k else 0.0


def ndcg_at_k(rank: int, k: int) -> float:
    return 1.0 / np.log2(rank + 1) if rank <= k else 0.0


def summarize_ranks(ranks: list[int]) -> Metrics:
    ranks_arr = np.asarray(ranks)
    return Metrics(
        hr5=float(np.mean([hr_at_k(r, 5) for r in ranks_arr])),
        hr10=float(np.mean([hr_at_k(r, 10) for r in ranks_arr])),
        ndcg5=float(np.mean([ndcg_at_k(r, 5) for r in ranks_arr])),
        ndcg10=float(np.mean([ndcg_at_k(r, 10) for r in ranks_arr])),
    )


def perturbation_stats(views: list[PrivateView],
                       published: list[PerturbedAdjacency]) -> dict[str, float]:
    """Count interactions surviving perturbation (published AND original)."""
    by_user = {pub.user: pub for pub in published}
    original = 0
    unchanged = 0
    for view in views:
        bits = view.bits
        original += int(bits.sum())
        pub = by_user.get(view.user)
        if pub is not None:
            unchanged += int(np.sum((bits == 1) & (pub.bits == 1)))
    proportion = unchanged / original if original else 0.0
    return {"edges_original": original, "edges_unchanged": unchanged,
            "proportion": proportion}
