"""Two-stage private publishing of user-item interactions.

Stage one selects shared HINs with the exponential mechanism; stage two
runs degree-preserving randomized response inside each selected shared
HIN, followed by a degree repair step. A plain randomized-response mode
is kept as a baseline.

The probability helpers (:func:`em_round_probs`, :func:`dprr_probs`) are
the single source of truth: both the samplers here and the analytic
enumerators in :mod:`fedhin.privacy_audit` go through them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import PrivateView, SharedHinPartition, semantic_guided_item_set, user_shared_hin_list

QUALITY_SENSITIVITY = 1.0  # max one-bit change of the max-cosine quality


@dataclass(frozen=True)
class PerturbConfig:
    eps1: float  # semantic-privacy budget (shared HIN selection)
    eps2: float  # interaction-privacy budget (bit perturbation)
    mode: str = "two-stage"  # "two-stage" | "plain-rr"

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("privacy budgets must be positive")
        if self.mode not in ("two-stage", "plain-rr"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class PerturbedAdjacency:
    """A user's published interactions: selected shared HINs plus bits."""

    user: int
    selected: np.ndarray  # bit list over the m shared HINs
    bits: np.ndarray  # published bits over the item universe (zero outside selected)
    degree: int

    def positives(self) -> np.ndarray:
        return np.flatnonzero(self.bits)


def shared_hin_embeddings(part: SharedHinPartition, item_features: np.ndarray) -> np.ndarray:
    """Mean member-item feature vector per shared HIN; empty ones get zeros."""
    if item_features.shape[0] != len(part.item_nodes):
        raise ValueError("item feature rows must match the item universe")
    dim = item_features.shape[1]
    out = np.zeros((part.m, dim))
    for c, members in enumerate(part.members):
        if len(members):
            out[c] = item_features[members].mean(axis=0)
    return out


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def quality(g: np.ndarray, candidate: int, embeddings: np.ndarray) -> float:
    """Selection utility of one shared HIN: best shifted cosine to the user's set."""
    related = np.flatnonzero(g)
    if len(related) == 0:
        raise ValueError("user with no related shared HINs does not publish")
    return max(0.5 * (_cosine(embeddings[candidate], embeddings[r]) + 1.0) for r in related)


def all_qualities(g: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    return np.array([quality(g, c, embeddings) for c in range(embeddings.shape[0])])


def em_round_probs(qualities: np.ndarray, eps_round: float,
                   available: np.ndarray | None = None) -> np.ndarray:
    """One exponential-mechanism round: prob of each still-available candidate.

    Weights are exp(eps_round * q / (2 * sensitivity)), renormalized over
    the available candidates; unavailable entries get probability zero.
    """
    w = np.exp(eps_round * np.asarray(qualities, dtype=float) / (2.0 * QUALITY_SENSITIVITY))
    if available is not None:
        w = np.where(available, w, 0.0)
    total = w.sum()
    if total <= 0:
        raise ValueError("no available candidates")
    return w / total


def em_select(g: np.ndarray, qualities: np.ndarray, eps1: float, n: int,
              rng: np.random.Generator) -> np.ndarray:
    """Select n distinct shared HINs, each round spending eps1 / n."""
    m = len(qualities)
    if n > m:
        raise ValueError(f"cannot select {n} of {m} shared HINs")
    eps_round = eps1 / n
    available = np.ones(m, dtype=bool)
    out = np.zeros(m, dtype=np.uint8)
    for _ in range(n):
        probs = em_round_probs(qualities, eps_round, available)
        pick = int(rng.choice(m, p=probs))
        out[pick] = 1
        available[pick] = False
    return out


def rr_flip_prob(eps2: float) -> float:
    """Randomized-response flip probability p = 1 / (1 + e^eps2)."""
    if eps2 <= 0:
        raise ValueError("eps2 must be positive")
    return 1.0 / (1.0 + np.exp(eps2))


def preserve_prob_raw(d: int, group_size: int, p: float) -> float:
    """Unclipped keep-probability; makes the expected published degree exactly d."""
    if d == 0 or group_size == 0:
        return 0.0
    return d / (d * (1.0 - 2.0 * p) + group_size * p)


def preserve_prob(d: int, group_size: int, p: float) -> float:
    """Keep-probability making the expected published degree equal d, clipped to [0,1]."""
    return float(min(max(preserve_prob_raw(d, group_size, p), 0.0), 1.0))


def dprr_probs(p: float, q: float) -> tuple[float, float]:
    """Per-bit publish-one probabilities (given true 1, given true 0)."""
    return (1.0 - p) * q, p * q


def dprr_perturb(bits: np.ndarray, p: float, q: float, rng: np.random.Generator) -> np.ndarray:
    p_one, p_zero = dprr_probs(p, q)
    prob = np.where(np.asarray(bits) == 1, p_one, p_zero)
    return (rng.random(len(bits)) < prob).astype(np.uint8)


def degree_repair(groups: list[np.ndarray], true_bits: list[np.ndarray],
                  pert_bits: list[np.ndarray], degree: int,
                  rng: np.random.Generator) -> list[np.ndarray]:
    """Top the published bits up to the true degree.

    Deficit positions are drawn uniformly without replacement, first from
    groups whose true intersection was empty (the zeroed-out ones), then
    from any remaining zero positions. Excess bits are never removed.
    """
    out = [b.copy() for b in pert_bits]
    total = int(sum(int(b.sum()) for b in out))
    deficit = degree - total
    if deficit <= 0:
        return out
    empty_first: list[tuple[int, int]] = []
    rest: list[tuple[int, int]] = []
    for gi, (tb, pb) in enumerate(zip(true_bits, out)):
        pool = empty_first if int(tb.sum()) == 0 else rest
        pool.extend((gi, int(j)) for j in np.flatnonzero(pb == 0))
    for pool in (empty_first, rest):
        if deficit <= 0:
            break
        take = min(deficit, len(pool))
        if take:
            picked = rng.choice(len(pool), size=take, replace=False)
            for k in picked:
                gi, j = pool[int(k)]
                out[gi][j] = 1
            deficit -= take
    return out


def publish(view: PrivateView, part: SharedHinPartition, embeddings: np.ndarray,
            config: PerturbConfig, rng: np.random.Generator) -> PerturbedAdjacency:
    """Run the full client-side publishing pipeline for one user."""
    if view.degree < 1:
        raise ValueError("zero-degree users skip publishing")
    a_u = view.bits
    p = rr_flip_prob(config.eps2)

    if config.mode == "plain-rr":
        flips = rng.random(len(a_u)) < p
        bits = np.where(flips, 1 - a_u, a_u).astype(np.uint8)
        return PerturbedAdjacency(view.user, np.ones(part.m, dtype=np.uint8), bits,
                                  int(bits.sum()))

    g = user_shared_hin_list(view, part)
    n = int(g.sum())
    qualities = all_qualities(g, embeddings)
    g_tilde = em_select(g, qualities, config.eps1, n, rng)

    groups = semantic_guided_item_set(g_tilde, part)
    true_bits = [a_u[idx] for idx in groups]
    pert_bits = []
    for tb, idx in zip(true_bits, groups):
        q = preserve_prob(int(tb.sum()), len(idx), p)
        pert_bits.append(dprr_perturb(tb, p, q, rng))
    pert_bits = degree_repair(groups, true_bits, pert_bits, view.degree, rng)

    bits = np.zeros(len(part.item_nodes), dtype=np.uint8)
    for idx, pb in zip(groups, pert_bits):
        bits[idx] = pb
    return PerturbedAdjacency(view.user, g_tilde, bits, int(bits.sum()))
