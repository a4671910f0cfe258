"""Graph loading, partitioning, clustering, and meta-path queries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedhin.graph import (GraphError, Hin, IntegrityError, MetaPath, ParseError,
                          PrivateView, SharedHinPartition, SharedKnowledge,
                          cluster_items, meta_path_neighbors, partition,
                          resolve_meta_path, semantic_guided_item_set,
                          user_shared_hin_list)

SMALL_NODES = [("u0", "U"), ("u1", "U"), ("b0", "B"), ("b1", "B"), ("c0", "C")]
SMALL_EDGES = [("u0", "b0", "rate"), ("u1", "b0", "rate"), ("u0", "b1", "rate"),
               ("b0", "c0", "belongs"), ("b1", "c0", "belongs")]


def brute_force_walks(hin, start, path):
    """Exhaustive DFS over every typed walk matching the path."""
    def step(node, depth):
        if depth == len(path.edge_types):
            return {node}
        et = hin.edge_type_id(path.edge_types[depth])
        nt = hin.node_type_id(path.node_types[depth + 1])
        out = set()
        for v in hin.neighbors(node, et):
            if hin.node_type[v] == nt:
                out |= step(v, depth + 1)
        return out

    return step(start, 0)


class TestLoad:
    def test_minimal_graph(self, make_hin):
        hin = make_hin([("u0", "U"), ("b0", "B")], [("u0", "b0", "rate")])
        assert hin.num_nodes == 2
        assert len(hin.edges) == 1

    def test_unknown_node_in_edge_file(self, make_hin):
        with pytest.raises(IntegrityError):
            make_hin([("u0", "U"), ("b0", "B")], [("u0", "b9", "rate")])

    def test_malformed_line_reports_line_number(self, tmp_path):
        nodes = tmp_path / "nodes.tsv"
        nodes.write_text("u0\tU\nbadline\n")
        (tmp_path / "edges.tsv").write_text("")
        with pytest.raises(ParseError, match=":2:"):
            Hin.load(nodes, tmp_path / "edges.tsv", ())

    def test_duplicate_node_id(self, tmp_path):
        nodes = tmp_path / "nodes.tsv"
        nodes.write_text("u0\tU\nu0\tU\n")
        (tmp_path / "edges.tsv").write_text("")
        with pytest.raises(ParseError, match="duplicate"):
            Hin.load(nodes, tmp_path / "edges.tsv", ())

    def test_duplicate_edges_deduplicated(self, make_hin):
        hin = make_hin([("u0", "U"), ("b0", "B")],
                       [("u0", "b0", "rate"), ("u0", "b0", "rate")])
        assert len(hin.edges) == 1

    def test_homogeneous_graph_rejected(self, make_hin):
        with pytest.raises(IntegrityError, match="homogeneous"):
            make_hin([("u0", "U"), ("u1", "U")], [("u0", "u1", "rate")])

    def test_missing_private_type(self, make_hin):
        with pytest.raises(GraphError, match="not present"):
            make_hin([("b0", "B"), ("c0", "C")], [("b0", "c0", "belongs")])

    def test_type_ids_assigned_by_first_appearance(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        assert hin.node_type_names == ["U", "B", "C"]
        assert hin.edge_type_names == ["rate", "belongs"]


class TestMetaPathType:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            MetaPath(("U", "B"), ("rate", "belongs"))

    def test_symmetry(self):
        assert MetaPath(("U", "B", "U"), ("rate", "rate")).symmetric
        assert not MetaPath(("U", "B", "C"), ("rate", "belongs")).symmetric

    def test_str(self):
        assert str(MetaPath(("U", "B", "U"), ("rate", "rate"))) == "U-B-U"


class TestResolve:
    def test_resolves_edge_types(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        path = resolve_meta_path(hin, "U-B-C-B-U")
        assert path.edge_types == ("rate", "belongs", "belongs", "rate")

    def test_no_edge_type_between_pair(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        with pytest.raises(GraphError, match="no edge type"):
            resolve_meta_path(hin, "U-C-U")

    def test_too_short(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        with pytest.raises(GraphError):
            resolve_meta_path(hin, "U")


class TestPartition:
    def test_degree_counts_interactions(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        views, shared = partition(hin)
        assert views[0].degree == 2
        assert views[1].degree == 1

    def test_shared_item_sets_bit_in_both_views(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        views, shared = partition(hin)
        b0 = shared.item_nodes.index(hin.node_index("b0"))
        assert views[0].bits[b0] == 1
        assert views[1].bits[b0] == 1

    def test_user_without_interactions_has_zero_degree(self, make_hin):
        hin = make_hin(SMALL_NODES + [("u2", "U")], SMALL_EDGES)
        views, _ = partition(hin)
        assert views[2].degree == 0

    def test_features_are_row_normalized(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        _, shared = partition(hin)
        norms = np.linalg.norm(shared.features, axis=1)
        assert np.allclose(norms[norms > 0], 1.0)

    def test_private_edges_absent_from_shared(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        _, shared = partition(hin)
        rate = hin.edge_type_id("rate")
        assert all(et != rate for _, _, et in shared.shared_edges)


class TestPrivateView:
    def test_reads_are_counted(self):
        view = PrivateView(0, np.array([1, 0, 1], dtype=np.uint8))
        assert view.read_count == 0
        _ = view.bits
        _ = view.bits
        assert view.read_count == 2

    def test_without_item_clears_one_bit(self):
        view = PrivateView(0, np.array([1, 0, 1], dtype=np.uint8))
        reduced = view.without_item(2)
        assert reduced.degree == 1
        assert view.degree == 2  # original untouched

    def test_without_item_rejects_non_interaction(self):
        view = PrivateView(0, np.array([1, 0], dtype=np.uint8))
        with pytest.raises(ValueError):
            view.without_item(1)

    def test_bits_are_immutable(self):
        view = PrivateView(0, np.array([1, 0], dtype=np.uint8))
        with pytest.raises(ValueError):
            view.bits[0] = 0


class TestClustering:
    def _shared(self, feats):
        n = feats.shape[0]
        return SharedKnowledge(list(range(n)), [], feats, [])

    def test_single_cluster(self):
        part = cluster_items(self._shared(np.random.default_rng(0).random((5, 3))), 1, 0)
        assert np.all(part.assignment == 0)

    def test_identical_vectors_share_a_cluster(self):
        feats = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        part = cluster_items(self._shared(feats), 2, 0)
        assert part.assignment[0] == part.assignment[1]
        assert part.assignment[2] == part.assignment[3]
        assert part.assignment[0] != part.assignment[2]

    def test_deterministic_under_seed(self):
        feats = np.random.default_rng(3).random((30, 4))
        a = cluster_items(self._shared(feats), 5, 7).assignment
        b = cluster_items(self._shared(feats), 5, 7).assignment
        assert np.array_equal(a, b)

    def test_assignment_is_total_and_in_range(self):
        feats = np.random.default_rng(3).random((30, 4))
        part = cluster_items(self._shared(feats), 6, 0)
        assert part.assignment.shape == (30,)
        assert part.assignment.min() >= 0 and part.assignment.max() < 6

    def test_members_partition_the_items(self):
        feats = np.random.default_rng(1).random((20, 3))
        part = cluster_items(self._shared(feats), 4, 0)
        joined = np.concatenate(part.members)
        assert sorted(joined.tolist()) == list(range(20))

    def test_m_at_least_items_gives_singletons(self):
        feats = np.eye(3)
        part = cluster_items(self._shared(feats), 5, 0)
        assert np.array_equal(part.assignment, np.arange(3))

    def test_invalid_m(self):
        with pytest.raises(ValueError):
            cluster_items(self._shared(np.eye(2)), 0, 0)


class TestMetaPathNeighbors:
    def test_users_sharing_an_item_are_neighbors(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        path = resolve_meta_path(hin, "U-B-U")
        nbrs = meta_path_neighbors(hin, hin.node_index("u0"), path)
        assert hin.node_index("u1") in nbrs

    def test_isolated_user_falls_back_to_self(self, make_hin):
        hin = make_hin(SMALL_NODES + [("u2", "U")], SMALL_EDGES)
        path = resolve_meta_path(hin, "U-B-U")
        u2 = hin.node_index("u2")
        assert meta_path_neighbors(hin, u2, path) == {u2}

    def test_wrong_anchor_type_rejected(self, make_hin):
        hin = make_hin(SMALL_NODES, SMALL_EDGES)
        path = resolve_meta_path(hin, "U-B-U")
        with pytest.raises(GraphError):
            meta_path_neighbors(hin, hin.node_index("b0"), path)

    def test_long_path_matches_brute_force(self, make_hin):
        nodes = [("u0", "U"), ("u1", "U"), ("u2", "U"),
                 ("b0", "B"), ("b1", "B"), ("b2", "B"),
                 ("c0", "C"), ("c1", "C")]
        edges = [("u0", "b0", "rate"), ("u1", "b1", "rate"), ("u2", "b2", "rate"),
                 ("b0", "c0", "belongs"), ("b1", "c0", "belongs"),
                 ("b2", "c1", "belongs")]
        hin = make_hin(nodes, edges)
        path = resolve_meta_path(hin, "U-B-C-B-U")
        for uid in ("u0", "u1", "u2"):
            node = hin.node_index(uid)
            assert meta_path_neighbors(hin, node, path, max_neighbors=None) \
                == brute_force_walks(hin, node, path)

    def test_subsampling_caps_and_is_deterministic(self, synth_hin):
        path = resolve_meta_path(synth_hin, "U-B-U")
        candidates = [n for n in synth_hin.nodes_of_type("U")
                      if len(meta_path_neighbors(synth_hin, n, path, None)) > 5]
        node = candidates[0]
        a = meta_path_neighbors(synth_hin, node, path, max_neighbors=5, seed=3)
        b = meta_path_neighbors(synth_hin, node, path, max_neighbors=5, seed=3)
        assert len(a) == 5 and a == b
        assert a <= meta_path_neighbors(synth_hin, node, path, max_neighbors=None)


class TestSharedHinList:
    def _part(self, assignment, m):
        return SharedHinPartition(m, list(range(len(assignment))),
                                  np.asarray(assignment))

    def test_zero_degree_gives_all_zero(self):
        part = self._part([0, 1, 2], 3)
        view = PrivateView(0, np.zeros(3, dtype=np.uint8))
        assert np.array_equal(user_shared_hin_list(view, part), np.zeros(3))

    def test_single_cluster_bit(self):
        part = self._part([0, 1, 2, 3, 4], 5)
        view = PrivateView(0, np.array([0, 0, 0, 1, 0], dtype=np.uint8))
        assert np.array_equal(user_shared_hin_list(view, part),
                              np.array([0, 0, 0, 1, 0]))

    def test_spanning_clusters(self):
        part = self._part([0, 1, 1, 4, 4, 3], 5)
        view = PrivateView(0, np.array([0, 1, 0, 0, 1, 0], dtype=np.uint8))
        assert np.array_equal(user_shared_hin_list(view, part),
                              np.array([0, 1, 0, 0, 1]))

    def test_universe_mismatch(self):
        part = self._part([0, 1], 2)
        view = PrivateView(0, np.array([1, 0, 0], dtype=np.uint8))
        with pytest.raises(ValueError):
            user_shared_hin_list(view, part)

    @given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=30),
           seed=st.integers(0, 10))
    @settings(max_examples=50, deadline=None)
    def test_bit_set_iff_cluster_touched(self, bits, seed):
        n = len(bits)
        m = 4
        assignment = np.random.default_rng(seed).integers(0, m, size=n)
        part = self._part(assignment, m)
        view = PrivateView(0, np.array(bits, dtype=np.uint8))
        g = user_shared_hin_list(view, part)
        for c in range(m):
            touched = any(bits[i] and assignment[i] == c for i in range(n))
            assert bool(g[c]) == touched


class TestSemanticGuidedItemSet:
    def _part(self, sizes):
        assignment = np.concatenate([np.full(s, c) for c, s in enumerate(sizes)])
        return SharedHinPartition(len(sizes), list(range(len(assignment))), assignment)

    def test_all_zero_selection(self):
        assert semantic_guided_item_set(np.zeros(3, dtype=np.uint8),
                                        self._part([2, 3, 4])) == []

    def test_full_selection_covers_items(self):
        part = self._part([2, 3, 4])
        groups = semantic_guided_item_set(np.ones(3, dtype=np.uint8), part)
        assert sorted(np.concatenate(groups).tolist()) == list(range(9))

    def test_partial_selection_sizes(self):
        part = self._part([2, 3, 4])
        groups = semantic_guided_item_set(np.array([1, 0, 1]), part)
        assert len(groups) == 2
        assert sum(len(g) for g in groups) == 6

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            semantic_guided_item_set(np.array([1, 0]), self._part([2, 3, 4]))
