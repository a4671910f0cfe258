"""Typed heterogeneous graph storage, private/shared partitioning and meta-path queries.

Node and edge files are TSV: ``node_id<TAB>node_type`` and
``src_id<TAB>dst_id<TAB>edge_type``. Type ids are assigned by first
appearance so ingestion is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(Exception):
    pass


class ParseError(GraphError):
    pass


class IntegrityError(GraphError):
    pass


@dataclass(frozen=True)
class MetaPath:
    """An alternating node-type / edge-type sequence, e.g. U-B-U."""

    node_types: tuple[str, ...]
    edge_types: tuple[str, ...]

    def __post_init__(self):
        if len(self.node_types) != len(self.edge_types) + 1:
            raise ValueError("node type sequence must be one longer than edge type sequence")

    @property
    def symmetric(self) -> bool:
        return self.node_types == self.node_types[::-1] and self.edge_types == self.edge_types[::-1]

    def __str__(self) -> str:
        return "-".join(self.node_types)


class Hin:
    """Immutable typed multigraph with a private/shared edge-type split.

    Nodes are referenced externally by string id and internally by dense
    index. Private edges are user-item interactions: their source type is
    the user type and destination type the item type.
    """

    def __init__(self, nodes, edges, node_type_names, edge_type_names, private_edge_types):
        self.node_ids: list[str] = [n[0] for n in nodes]
        self.node_type: np.ndarray = np.asarray([n[1] for n in nodes], dtype=np.int64)
        self.node_type_names: list[str] = list(node_type_names)
        self.edge_type_names: list[str] = list(edge_type_names)
        self.private_edge_types: frozenset[int] = frozenset(private_edge_types)
        self.edges: list[tuple[int, int, int]] = sorted(set(edges))
        self._index = {nid: i for i, nid in enumerate(self.node_ids)}
        self._validate()
        self._adj = self._build_adjacency()

    def _validate(self):
        n = len(self.node_ids)
        if len(self._index) != n:
            raise IntegrityError("duplicate node id")
        for src, dst, et in self.edges:
            if not (0 <= src < n and 0 <= dst < n):
                raise IntegrityError(f"edge ({src},{dst}) references unknown node")
            if not (0 <= et < len(self.edge_type_names)):
                raise IntegrityError(f"unknown edge type id {et}")
        if len(self.node_type_names) + len(self.edge_type_names) <= 2:
            raise IntegrityError("graph is homogeneous: need |node types| + |edge types| > 2")
        shared = self.shared_edge_types
        if self.private_edge_types & shared:
            raise IntegrityError("private and shared edge type sets overlap")

    def _build_adjacency(self):
        adj: dict[int, dict[int, set[int]]] = {et: {} for et in range(len(self.edge_type_names))}
        for src, dst, et in self.edges:
            adj[et].setdefault(src, set()).add(dst)
            adj[et].setdefault(dst, set()).add(src)
        return adj

    @property
    def shared_edge_types(self) -> frozenset[int]:
        return frozenset(range(len(self.edge_type_names))) - self.private_edge_types

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    def node_index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise IntegrityError(f"unknown node id {node_id!r}") from None

    def node_type_id(self, name: str) -> int:
        try:
            return self.node_type_names.index(name)
        except ValueError:
            raise GraphError(f"unknown node type {name!r}") from None

    def edge_type_id(self, name: str) -> int:
        try:
            return self.edge_type_names.index(name)
        except ValueError:
            raise GraphError(f"unknown edge type {name!r}") from None

    def nodes_of_type(self, type_name: str) -> list[int]:
        tid = self.node_type_id(type_name)
        return [i for i in range(self.num_nodes) if self.node_type[i] == tid]

    def neighbors(self, node: int, edge_type: int) -> set[int]:
        return self._adj[edge_type].get(node, set())

    # Private edges define the user/item roles.
    def user_item_types(self) -> tuple[int, int]:
        src_types, dst_types = set(), set()
        for src, dst, et in self.edges:
            if et in self.private_edge_types:
                src_types.add(int(self.node_type[src]))
                dst_types.add(int(self.node_type[dst]))
        if len(src_types) != 1 or len(dst_types) != 1:
            raise IntegrityError("private edges must connect exactly one user type to one item type")
        return src_types.pop(), dst_types.pop()

    @classmethod
    def load(cls, nodes_path, edges_path, private_edge_types) -> "Hin":
        """Parse the TSV pair into a validated graph."""
        nodes = []
        type_names: list[str] = []
        type_of: dict[str, int] = {}
        seen: dict[str, int] = {}
        with open(nodes_path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise ParseError(f"{nodes_path}:{ln}: expected 'node_id<TAB>node_type'")
                nid, tname = parts
                if nid in seen:
                    raise ParseError(f"{nodes_path}:{ln}: duplicate node id {nid!r}")
                if tname not in type_of:
                    type_of[tname] = len(type_names)
                    type_names.append(tname)
                seen[nid] = len(nodes)
                nodes.append((nid, type_of[tname]))

        edges = []
        etype_names: list[str] = []
        etype_of: dict[str, int] = {}
        with open(edges_path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or not all(parts):
                    raise ParseError(f"{edges_path}:{ln}: expected 'src_id<TAB>dst_id<TAB>edge_type'")
                src, dst, ename = parts
                if src not in seen or dst not in seen:
                    missing = src if src not in seen else dst
                    raise IntegrityError(f"{edges_path}:{ln}: edge references unknown node {missing!r}")
                if ename not in etype_of:
                    etype_of[ename] = len(etype_names)
                    etype_names.append(ename)
                edges.append((seen[src], seen[dst], etype_of[ename]))

        unknown = set(private_edge_types) - set(etype_names)
        if unknown:
            raise GraphError(f"private edge types not present in data: {sorted(unknown)}")
        private_ids = {etype_of[name] for name in private_edge_types}
        return cls(nodes, edges, type_names, etype_names, private_ids)


def resolve_meta_path(hin: Hin, spec: str) -> MetaPath:
    """Resolve a hyphen-joined node-type string (e.g. ``U-B-U``) against a graph.

    The edge type of each step must be unique for the node-type pair,
    judged from the edge endpoints observed in the data.
    """
    names = spec.split("-")
    if len(names) < 2:
        raise GraphError(f"meta-path {spec!r} needs at least two node types")
    type_ids = [hin.node_type_id(n) for n in names]

    pair_types: dict[frozenset[int], set[int]] = {}
    for src, dst, et in hin.edges:
        key = frozenset((int(hin.node_type[src]), int(hin.node_type[dst])))
        pair_types.setdefault(key, set()).add(et)

    edge_names = []
    for a, b in zip(type_ids, type_ids[1:]):
        cands = pair_types.get(frozenset((a, b)), set())
        if len(cands) != 1:
            raise GraphError(
                f"meta-path {spec!r}: {'no' if not cands else 'ambiguous'} edge type "
                f"between {hin.node_type_names[a]} and {hin.node_type_names[b]}"
            )
        edge_names.append(hin.edge_type_names[next(iter(cands))])
    return MetaPath(tuple(names), tuple(edge_names))


class PrivateView:
    """A user's interaction bits over the global item universe.

    Reads of the raw bits are counted so tests can assert that no
    server-side code touches them after publishing.
    """

    def __init__(self, user: int, bits: np.ndarray):
        self.user = user
        self._bits = np.asarray(bits, dtype=np.uint8)
        self._bits.flags.writeable = False
        self.degree = int(self._bits.sum())
        self.read_count = 0

    @property
    def bits(self) -> np.ndarray:
        self.read_count += 1
        return self._bits

    def without_item(self, position: int) -> "PrivateView":
        """Copy with one interaction bit cleared (leave-one-out holdout)."""
        bits = self._bits.copy()
        if not bits[position]:
            raise ValueError(f"position {position} is not an interaction of user {self.user}")
        bits[position] = 0
        return PrivateView(self.user, bits)


@dataclass
class SharedKnowledge:
    """Shared (non-private) edges plus the item universe and its features.

    ``features`` holds one row per item: the L2-normalized incidence
    vector over shared-attribute nodes reachable by a shared edge.
    """

    item_nodes: list[int]
    attr_nodes: list[int]
    features: np.ndarray
    shared_edges: list[tuple[int, int, int]]


def partition(hin: Hin) -> tuple[list[PrivateView], SharedKnowledge]:
    """Split a graph into per-user private views and the shared remainder."""
    user_t, item_t = hin.user_item_types()
    users = [i for i in range(hin.num_nodes) if hin.node_type[i] == user_t]
    items = [i for i in range(hin.num_nodes) if hin.node_type[i] == item_t]
    item_pos = {node: k for k, node in enumerate(items)}
    user_pos = {node: k for k, node in enumerate(users)}

    bits = np.zeros((len(users), len(items)), dtype=np.uint8)
    shared_edges = []
    for src, dst, et in hin.edges:
        if et in hin.private_edge_types:
            if int(hin.node_type[src]) != user_t:
                raise IntegrityError(f"private edge source {hin.node_ids[src]!r} is not user-typed")
            bits[user_pos[src], item_pos[dst]] = 1
        else:
            shared_edges.append((src, dst, et))

    attr_nodes = sorted(
        {n for s, d, _ in shared_edges for n in (s, d)}
        - set(items) - set(users)
    )
    attr_pos = {node: k for k, node in enumerate(attr_nodes)}
    feats = np.zeros((len(items), max(len(attr_nodes), 1)))
    for src, dst, _ in shared_edges:
        for a, b in ((src, dst), (dst, src)):
            if a in item_pos and b in attr_pos:
                feats[item_pos[a], attr_pos[b]] = 1.0
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    feats = np.divide(feats, norms, out=np.zeros_like(feats), where=norms > 0)

    views = [PrivateView(u, bits[k]) for k, u in enumerate(users)]
    return views, SharedKnowledge(items, attr_nodes, feats, shared_edges)


@dataclass
class SharedHinPartition:
    """Total assignment of the item universe to m disjoint shared HINs."""

    m: int
    item_nodes: list[int]
    assignment: np.ndarray  # cluster index per item universe position

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.shape != (len(self.item_nodes),):
            raise ValueError("assignment must cover the item universe")
        if len(self.item_nodes) and not (0 <= self.assignment.min() and self.assignment.max() < self.m):
            raise ValueError("cluster index out of range")
        self.members: list[np.ndarray] = [
            np.flatnonzero(self.assignment == c) for c in range(self.m)
        ]


def cluster_items(shared: SharedKnowledge, m: int, seed: int) -> SharedHinPartition:
    """k-means over item shared-feature vectors (k = m, deterministic).

    Ties go to the lowest cluster index; empty clusters are refilled with
    the point farthest from its center while enough items exist.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = len(shared.item_nodes)
    feats = shared.features
    if m >= n:
        assignment = np.arange(n) if m > n else np.arange(n)
        return SharedHinPartition(m, shared.item_nodes, assignment)

    rng = np.random.default_rng(seed)
    centers = feats[rng.choice(n, size=m, replace=False)].copy()
    assignment = np.zeros(n, dtype=np.int64)
    for _ in range(100):
        d2 = ((feats[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignment = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties
        for c in range(m):
            if not np.any(new_assignment == c):
                # steal the point farthest from its current center
                donor_d = d2[np.arange(n), new_assignment]
                counts = np.bincount(new_assignment, minlength=m)
                donor_d = np.where(counts[new_assignment] > 1, donor_d, -np.inf)
                new_assignment[int(np.argmax(donor_d))] = c
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(m):
            mask = assignment == c
            if mask.any():
                centers[c] = feats[mask].mean(axis=0)
    return SharedHinPartition(m, shared.item_nodes, assignment)


def meta_path_neighbors(hin: Hin, node: int, path: MetaPath, max_neighbors: int | None = 64,
                        seed: int = 0) -> set[int]:
    """Nodes reachable by walking the exact type sequence of ``path``.

    Falls back to {node} when no walk exists, so downstream aggregation
    always has at least one neighbor. Results over ``max_neighbors`` are
    subsampled uniformly under the seed.
    """
    start_t = hin.node_type_id(path.node_types[0])
    if int(hin.node_type[node]) != start_t:
        raise GraphError(
            f"node {hin.node_ids[node]!r} has type {hin.node_type_names[hin.node_type[node]]}, "
            f"path starts at {path.node_types[0]}"
        )
    frontier = {node}
    for etype_name, next_type in zip(path.edge_types, path.node_types[1:]):
        et = hin.edge_type_id(etype_name)
        nt = hin.node_type_id(next_type)
        nxt: set[int] = set()
        for u in frontier:
            for v in hin.neighbors(u, et):
                if hin.node_type[v] == nt:
                    nxt.add(v)
        frontier = nxt
        if not frontier:
            break
    if not frontier:
        frontier = {node}
    if max_neighbors is not None and len(frontier) > max_neighbors:
        rng = np.random.default_rng([seed, node])
        picked = rng.choice(sorted(frontier), size=max_neighbors, replace=False)
        frontier = set(int(v) for v in picked)
    return frontier


def user_shared_hin_list(view: PrivateView, part: SharedHinPartition) -> np.ndarray:
    """Bit i set iff the user interacts with at least one item of shared HIN i."""
    bits = view.bits
    if bits.shape[0] != len(part.item_nodes):
        raise ValueError("view and partition cover different item universes")
    g = np.zeros(part.m, dtype=np.uint8)
    touched = np.unique(part.assignment[bits.astype(bool)])
    g[touched] = 1
    return g


def semantic_guided_item_set(g_tilde: np.ndarray, part: SharedHinPartition) -> list[np.ndarray]:
    """Item universe positions of each selected shared HIN, group boundaries kept."""
    g_tilde = np.asarray(g_tilde)
    if g_tilde.shape != (part.m,):
        raise ValueError(f"selection list must have length {part.m}")
    return [part.members[c] for c in np.flatnonzero(g_tilde)]
