"""Empirical verification of the mechanism's privacy bounds.

The enumerators never sample: they recompute output distributions
analytically from the same probability helpers the samplers use
(:func:`fedhin.perturb.em_round_probs`, :func:`fedhin.perturb.dprr_probs`),
then take the worst probability ratio over all one-bit-neighboring
inputs. Monte Carlo audits cover the degree-preservation identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import perturb

RATIO_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class EnumInstance:
    """A mechanism instance small enough for exhaustive enumeration."""

    embeddings: np.ndarray  # m x D shared-HIN embeddings
    eps1: float
    eps2: float
    n_select: int
    adjacency_len: int = 4

    @property
    def m(self) -> int:
        return int(self.embeddings.shape[0])

    def validate(self) -> None:
        if self.m > 5:
            raise ValueError("instance too large: m must be <= 5")
        if self.adjacency_len > 6:
            raise ValueError("instance too large: adjacency length must be <= 6")
        if not (1 <= self.n_select <= self.m):
            raise ValueError("selection count out of range")


@dataclass
class RatioReport:
    max_ratio: float
    bound: float
    witness: tuple  # (input, neighbor, output) attaining the max
    passed: bool


def _em_output_dist(g: np.ndarray, inst: EnumInstance) -> dict[frozenset[int], float]:
    """Exact distribution of the n-round without-replacement selection."""
    qualities = perturb.all_qualities(g, inst.embeddings)
    eps_round = inst.eps1 / inst.n_select
    dist: dict[frozenset[int], float] = {}
    for perm in itertools.permutations(range(inst.m), inst.n_select):
        available = np.ones(inst.m, dtype=bool)
        prob = 1.0
        for pick in perm:
            probs = perturb.em_round_probs(qualities, eps_round, available)
            prob *= probs[pick]
            available[pick] = False
        key = frozenset(perm)
        dist[key] = dist.get(key, 0.0) + prob
    return dist


def enumerate_em_ratio(inst: EnumInstance) -> RatioReport:
    """Worst-case probability ratio of the selection stage over all
    one-bit-neighboring shared-HIN lists, against the e^eps1 bound.

    Both inputs run with the instance's fixed selection count; qualities
    are recomputed under each input since the utility depends on the
    user's related set. All-zero lists have no defined qualities and are
    skipped as inputs.
    """
    inst.validate()
    bound = float(np.exp(inst.eps1))
    max_ratio, witness = 0.0, ()
    dists: dict[tuple[int, ...], dict[frozenset[int], float]] = {}
    for bits in itertools.product((0, 1), repeat=inst.m):
        if sum(bits) == 0:
            continue
        dists[bits] = _em_output_dist(np.array(bits, dtype=np.uint8), inst)
    for g, dist_g in dists.items():
        for flip in range(inst.m):
            g_hat = tuple(b ^ (1 if i == flip else 0) for i, b in enumerate(g))
            if g_hat not in dists:
                continue
            dist_h = dists[g_hat]
            for out, p in dist_g.items():
                ratio = p / dist_h[out]
                if ratio > max_ratio:
                    max_ratio, witness = ratio, (g, g_hat, tuple(sorted(out)))
    return RatioReport(max_ratio, bound, witness, max_ratio <= bound * RATIO_SLACK)


def _rr_output_dist(bits: tuple[int, ...], p: float) -> np.ndarray:
    """Probability of every output bit pattern under plain RR."""
    length = len(bits)
    out = np.empty(2 ** length)
    for idx in range(2 ** length):
        prob = 1.0
        for j in range(length):
            o = (idx >> j) & 1
            prob *= (1.0 - p) if o == bits[j] else p
        out[idx] = prob
    return out


def enumerate_rr_ratio(inst: EnumInstance) -> RatioReport:
    """Exact worst ratio of the RR stage; also checks the keep-flip
    post-processing never exceeds it per coordinate."""
    inst.validate()
    p = perturb.rr_flip_prob(inst.eps2)
    bound = (1.0 - p) / p  # equals e^eps2 exactly
    length = inst.adjacency_len
    max_ratio, witness = 0.0, ()
    dists = {bits: _rr_output_dist(bits, p)
             for bits in itertools.product((0, 1), repeat=length)}
    for bits, dist in dists.items():
        if abs(dist.sum() - 1.0) > 1e-9:
            raise AssertionError("enumerated distribution does not sum to 1")
        for flip in range(length):
            neighbor = tuple(b ^ (1 if j == flip else 0) for j, b in enumerate(bits))
            ratios = dist / dists[neighbor]
            idx = int(np.argmax(ratios))
            if ratios[idx] > max_ratio:
                max_ratio, witness = float(ratios[idx]), (bits, neighbor, idx)

    # degree-keep flip composed with RR, at fixed keep probability q:
    # per-coordinate ratios must stay within the RR bound
    for q in np.linspace(0.0, 1.0, 11):
        p_one, p_zero = perturb.dprr_probs(p, q)
        for a, b in ((p_one, p_zero), (1.0 - p_one, 1.0 - p_zero)):
            for num, den in ((a, b), (b, a)):
                if den > 0 and num / den > bound * RATIO_SLACK:
                    return RatioReport(num / den, bound, ("post-processing", q), False)

    return RatioReport(max_ratio, bound, witness, max_ratio <= bound * RATIO_SLACK)


def monte_carlo_degree_audit(group_size: int, degree: int, eps2: float, trials: int,
                             rng: np.random.Generator) -> tuple[float, float, bool]:
    """Empirical mean published degree vs the true degree, 3-sigma gate.

    Only valid where the keep probability is unclipped, which is exactly
    when the expectation identity holds.
    """
    p = perturb.rr_flip_prob(eps2)
    q = perturb.preserve_prob_raw(degree, group_size, p)
    bits = np.zeros(group_size, dtype=np.uint8)
    bits[:degree] = 1
    p_one, p_zero = perturb.dprr_probs(p, q)
    if not (0.0 <= p_zero <= 1.0 and 0.0 <= p_one <= 1.0):
        raise ValueError("keep probability leaves the valid per-bit range")
    prob = np.where(bits == 1, p_one, p_zero)
    draws = rng.random((trials, group_size)) < prob
    degrees = draws.sum(axis=1)
    mean = float(degrees.mean())
    stderr = float(degrees.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    passed = abs(mean - degree) <= 3.0 * stderr if degree > 0 else mean == 0.0
    return mean, stderr, passed


def default_em_suite() -> list[EnumInstance]:
    """Fixture instances spanning m in {2,3,4}, n in {1,2}, eps1 in {0.5,1,2,4}."""
    rng = np.random.default_rng(7)
    suite = []
    for m in (2, 3, 4):
        emb = rng.normal(size=(m, 3))
        for n in (1, 2):
            if n > m:
                continue
            for eps1 in (0.5, 1.0, 2.0, 4.0):
                suite.append(EnumInstance(emb, eps1, 1.0, n))
    return suite


def default_rr_suite() -> list[EnumInstance]:
    emb = np.eye(2)
    return [EnumInstance(emb, 1.0, eps2, 1, adjacency_len=length)
            for eps2 in (0.5, 1.0, 2.0, 6.0) for length in (2, 3, 4, 5, 6)]


def run_suite(verbose: bool = True) -> bool:
    """Run the full fixture suite; print one line per check; True iff all pass."""
    ok = True

    def emit(line: str) -> None:
        if verbose:
            print(line)

    for inst in default_em_suite():
        rep = enumerate_em_ratio(inst)
        ok &= rep.passed
        emit(f"em  m={inst.m} n={inst.n_select} eps1={inst.eps1:<4} "
             f"ratio={rep.max_ratio:.6f} bound={rep.bound:.6f} "
             f"{'pass' if rep.passed else 'FAIL'}")
    for inst in default_rr_suite():
        rep = enumerate_rr_ratio(inst)
        tight = abs(rep.max_ratio - rep.bound) <= 1e-9 * rep.bound
        ok &= rep.passed and tight
        emit(f"rr  len={inst.adjacency_len} eps2={inst.eps2:<4} "
             f"ratio={rep.max_ratio:.6f} bound={rep.bound:.6f} "
             f"{'pass' if rep.passed and tight else 'FAIL'}")
    for degree, size in ((0, 20), (5, 50), (10, 10)):
        mean, stderr, passed = monte_carlo_degree_audit(
            size, degree, 1.0, 100_000, np.random.default_rng(11))
        ok &= passed
        emit(f"deg d={degree} size={size} mean={mean:.4f} stderr={stderr:.4f} "
             f"{'pass' if passed else 'FAIL'}")
    return ok
