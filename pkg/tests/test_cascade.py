"""Cascade generators: graph growth, spreads, masking, features, ranking."""

import math

import numpy as np
import pytest

from sgnn_forge.cascade import (Cascade, NetGraph, UNINFECTED_TIME,
                                check_causality, connected_components,
                                edge_list_lines, generate_ba_graph,
                                graph_from_edge_lines, laplacian_pe,
                                mask_cascade, rumor_center,
                                sample_cascade_record, simulate_ic)
from sgnn_forge.errors import ParameterError
from sgnn_forge.stochastics import substream

from oracles import (bfs_distances, count_infection_orderings, er_max_degree,
                     random_attachment_tree)


def graph_from_edges(n, edges):
    adjacency = [set() for _ in range(n)]
    for u, v in edges:
        adjacency[u].add(v)
        adjacency[v].add(u)
    neighbors = tuple(np.array(sorted(s), dtype=np.int64) for s in adjacency)
    return NetGraph(n=n, neighbors=neighbors, model="test", attach_edges=0)


def star_graph(n_leaves):
    return graph_from_edges(n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)])


@pytest.fixture(scope="module")
def ba_graph():
    return generate_ba_graph(1000, 5, substream(810, 0), seed_label=810)


class TestGraphGeneration:
    def test_saturated_attachment_gives_complete_graph(self):
        g = generate_ba_graph(6, 5, substream(811, 0))
        assert g.edge_count == 15
        assert np.all(g.degrees() == 5)

    def test_default_size_structure(self, ba_graph):
        assert ba_graph.n == 1000
        assert ba_graph.edge_count == 10 + 995 * 5
        assert ba_graph.degrees().min() >= 5
        assert len(connected_components(ba_graph)) == 1

    def test_heavier_degree_tail_than_uniform_random(self):
        ratios = []
        for trial in range(50):
            rng = substream(812, trial)
            g = generate_ba_graph(1000, 5, rng)
            ratios.append(g.degrees().max() / er_max_degree(1000, g.edge_count, rng))
        assert np.mean(ratios) > 2.0

    def test_adjacency_is_sorted_and_symmetric(self, ba_graph):
        for u, nbrs in enumerate(ba_graph.neighbors):
            assert np.all(np.diff(nbrs) > 0)
            assert u not in nbrs
            for v in nbrs[:5]:
                assert u in ba_graph.neighbors[v]

    def test_invalid_sizes_rejected(self):
        with pytest.raises(ParameterError):
            generate_ba_graph(5, 5, substream(811, 1))
        with pytest.raises(ParameterError):
            generate_ba_graph(10, 0, substream(811, 1))
        with pytest.raises(ParameterError):
            generate_ba_graph(10, 5, None)


class TestIndependentCascade:
    def test_zero_probability_infects_only_source(self, ba_graph):
        cascade = simulate_ic(ba_graph, 17, p=0.0, rng=substream(813, 0))
        assert cascade.infection_time[17] == 0
        assert np.count_nonzero(cascade.infection_time >= 0) == 1

    def test_certain_spread_matches_bfs_distances(self, ba_graph):
        cascade = simulate_ic(ba_graph, 3, p=1.0, max_steps=15, rng=substream(813, 1))
        assert np.array_equal(cascade.infection_time,
                              bfs_distances(ba_graph.neighbors, 3))

    def test_step_cap_truncates_certain_spread(self, ba_graph):
        cascade = simulate_ic(ba_graph, 3, p=1.0, max_steps=2, rng=substream(813, 2))
        dist = bfs_distances(ba_graph.neighbors, 3)
        expected = np.where(dist <= 2, dist, UNINFECTED_TIME)
        assert np.array_equal(cascade.infection_time, expected)

    def test_star_mean_infections(self):
        star = star_graph(99)
        rng = substream(813, 3)
        sizes = [np.count_nonzero(simulate_ic(star, 0, 0.05, 15, rng).infection_time >= 0)
                 for _ in range(10_000)]
        assert abs(np.mean(sizes) - 5.95) < 0.2

    def test_single_attempt_per_neighbor(self, ba_graph):
        source = 0
        degree = len(ba_graph.neighbors[source])
        rng = substream(813, 4)
        first_step = [np.count_nonzero(
            simulate_ic(ba_graph, source, 0.1, 1, rng).infection_time == 1)
            for _ in range(5000)]
        expected = degree * 0.1
        tol = 4 * math.sqrt(degree * 0.1 * 0.9 / 5000)
        assert abs(np.mean(first_step) - expected) < tol

    def test_causality_holds_pre_masking(self, ba_graph):
        rng = substream(813, 5)
        for _ in range(50):
            source = int(rng.integers(1000))
            cascade = simulate_ic(ba_graph, source, 0.2, 15, rng)
            assert check_causality(ba_graph, cascade)

    def test_invalid_arguments_rejected(self, ba_graph):
        rng = substream(813, 6)
        with pytest.raises(ParameterError):
            simulate_ic(ba_graph, -1, 0.05, 15, rng)
        with pytest.raises(ParameterError):
            simulate_ic(ba_graph, 0, 1.5, 15, rng)
        with pytest.raises(ParameterError):
            simulate_ic(ba_graph, 0, 0.05, 15, None)


class TestMasking:
    def make_flood(self, n=10):
        times = np.zeros(n, dtype=np.int64)
        times[1:] = 1
        return Cascade(source=0, infection_time=times,
                       observed_mask=np.ones(n, dtype=bool),
                       infection_prob=1.0, max_steps=15)

    def test_zero_fraction_is_identity(self):
        cascade = self.make_flood()
        masked = mask_cascade(cascade, 0.0, substream(814, 0))
        assert np.array_equal(masked.infection_time, cascade.infection_time)
        assert masked.observed_mask.all()

    def test_full_fraction_hides_everything(self):
        masked = mask_cascade(self.make_flood(), 1.0, substream(814, 1))
        assert np.all(masked.infection_time == UNINFECTED_TIME)
        assert not masked.observed_mask.any()
        assert masked.source == 0

    def test_exact_mode_hides_floor_count(self):
        for n, expected in ((10, 2), (9, 1), (4, 0), (23, 4)):
            masked = mask_cascade(self.make_flood(n), 0.2, substream(814, 2))
            hidden = np.count_nonzero(~masked.observed_mask)
            assert hidden == expected
            assert np.count_nonzero(masked.infection_time >= 0) == n - expected

    def test_exact_mode_source_frequency_on_fixed_size(self):
        cascade = self.make_flood(1000)
        rng = substream(814, 3)
        hits = sum(not mask_cascade(cascade, 0.2, rng).observed_mask[0]
                   for _ in range(10_000))
        assert abs(hits / 10_000 - 0.2) < 0.01

    def test_per_node_mode_hides_binomial_count(self):
        cascade = self.make_flood(1000)
        rng = substream(814, 4)
        counts = [np.count_nonzero(~mask_cascade(cascade, 0.2, rng, "per-node").observed_mask)
                  for _ in range(400)]
        assert abs(np.mean(counts) - 200) < 4 * math.sqrt(1000 * 0.2 * 0.8 / 400)
        assert np.std(counts) > 5.0

    def test_masked_nodes_indistinguishable_from_uninfected(self):
        masked = mask_cascade(self.make_flood(), 0.2, substream(814, 5))
        hidden = np.flatnonzero(~masked.observed_mask)
        assert np.all(masked.infection_time[hidden] == UNINFECTED_TIME)

    def test_invalid_fraction_rejected(self):
        with pytest.raises(ParameterError):
            mask_cascade(self.make_flood(), 1.2, substream(814, 6))
        with pytest.raises(ParameterError):
            mask_cascade(self.make_flood(), 0.2, None)
        with pytest.raises(ParameterError):
            mask_cascade(self.make_flood(), 0.2, substream(814, 7), mode="half")


class TestLaplacianFeatures:
    def test_complete_graph_eigenvalues(self):
        k5 = graph_from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
        features = laplacian_pe(k5, k=3)
        assert np.allclose(features.eigenvalues, 5.0, atol=1e-10)

    def test_path_smallest_nontrivial_eigenvalue(self):
        p4 = graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])
        features = laplacian_pe(p4, k=2)
        assert abs(features.eigenvalues[0] - (2.0 - math.sqrt(2.0))) < 1e-10

    def test_orthonormal_and_mean_free(self, ba_graph):
        features = laplacian_pe(ba_graph, k=16)
        gram = features.vectors.T @ features.vectors
        assert np.allclose(gram, np.eye(16), atol=1e-8)
        assert np.allclose(features.vectors.sum(axis=0), 0.0, atol=1e-8)

    def test_eigen_residuals(self, ba_graph):
        features = laplacian_pe(ba_graph, k=16)
        laplacian = np.diag(ba_graph.degrees().astype(float))
        for u, nbrs in enumerate(ba_graph.neighbors):
            laplacian[u, nbrs] = -1.0
        for col in range(16):
            v = features.vectors[:, col]
            residual = laplacian @ v - features.eigenvalues[col] * v
            assert np.linalg.norm(residual) < 1e-6

    def test_sign_convention(self, ba_graph):
        features = laplacian_pe(ba_graph, k=16)
        for col in range(16):
            column = features.vectors[:, col]
            first = column[np.abs(column) > 1e-10][0]
            assert first > 0

    def test_disconnected_graph_reports_components(self):
        two_triangles = graph_from_edges(
            6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        with pytest.raises(ParameterError, match="2 connected components"):
            laplacian_pe(two_triangles, k=2)

    def test_dimension_bounds(self, ba_graph):
        with pytest.raises(ParameterError):
            laplacian_pe(ba_graph, k=1000)
        with pytest.raises(ParameterError):
            laplacian_pe(ba_graph, k=0)


class TestRumorCenter:
    def test_single_infected_node(self, ba_graph):
        ranking = rumor_center(ba_graph, [42])
        assert ranking.nodes.tolist() == [42]
        assert not ranking.restricted

    def test_star_center_ranks_first(self):
        star = star_graph(8)
        ranking = rumor_center(star, range(9))
        assert ranking.nodes[0] == 0

    def test_path_middle_ranks_first(self):
        path = graph_from_edges(3, [(0, 1), (1, 2)])
        ranking = rumor_center(path, [0, 1, 2])
        assert ranking.nodes[0] == 1
        assert math.isclose(math.exp(ranking.scores[0]), 2.0, rel_tol=1e-9)

    def test_scores_match_ordering_counts_on_random_trees(self):
        rng = substream(815, 0)
        for _ in range(30):
            adjacency = random_attachment_tree(7, rng)
            graph = graph_from_edges(7, [(u, v) for u in adjacency
                                         for v in adjacency[u] if u < v])
            ranking = rumor_center(graph, range(7))
            for node, score in zip(ranking.nodes, ranking.scores):
                expected = count_infection_orderings(adjacency, int(node))
                assert math.isclose(math.exp(score), expected, rel_tol=1e-9)

    def test_tie_break_by_node_id(self):
        pair = graph_from_edges(2, [(0, 1)])
        ranking = rumor_center(pair, [1, 0])
        assert ranking.nodes.tolist() == [0, 1]
        assert ranking.scores[0] == ranking.scores[1]

    def test_permutation_equivariance_on_trees(self):
        # The BFS spanning tree is the subgraph itself on trees, so the
        # exact formula applies and relabeling must permute the scores.
        # Sibling leaves tie, so the invariant lives on scores; among
        # tied nodes the ranking follows ids by construction.  On cyclic
        # subgraphs the spanning tree depends on parent choice and no
        # deterministic choice is label-free.
        rng = substream(815, 1)
        for _ in range(10):
            adjacency = random_attachment_tree(40, rng)
            graph = graph_from_edges(40, [(u, v) for u in adjacency
                                          for v in adjacency[u] if u < v])
            base = rumor_center(graph, range(40))
            base_score = dict(zip(base.nodes.tolist(), base.scores))

            perm = rng.permutation(40)
            relabeled = [set() for _ in range(40)]
            for u, nbrs in enumerate(graph.neighbors):
                for v in nbrs:
                    relabeled[perm[u]].add(int(perm[v]))
            shuffled = NetGraph(40, tuple(np.array(sorted(s), dtype=np.int64)
                                          for s in relabeled), "test", 0)
            mapped = rumor_center(shuffled, range(40))
            mapped_score = dict(zip(mapped.nodes.tolist(), mapped.scores))
            for v in range(40):
                assert math.isclose(mapped_score[int(perm[v])], base_score[v],
                                    rel_tol=1e-12)
            if not math.isclose(base.scores[0], base.scores[1], rel_tol=1e-12):
                assert mapped.nodes[0] == perm[base.nodes[0]]

    def test_disconnected_set_restricts_to_largest_piece(self, ba_graph):
        path = graph_from_edges(7, [(0, 1), (1, 2), (4, 5)])
        ranking = rumor_center(path, [0, 1, 2, 4, 5])
        assert ranking.restricted
        assert ranking.component_count == 2
        assert set(ranking.nodes.tolist()) == {0, 1, 2}

    def test_empty_or_invalid_set_rejected(self, ba_graph):
        with pytest.raises(ParameterError):
            rumor_center(ba_graph, [])
        with pytest.raises(ParameterError):
            rumor_center(ba_graph, [1000])

    def test_detection_rates_on_small_corpus(self, ba_graph):
        top1 = top20 = 0
        n_cascades = 300
        for rid in range(n_cascades):
            rng = substream(816, rid)
            masked = sample_cascade_record(ba_graph, rng)
            visible = masked.visible_infected()
            if visible.size == 0:
                continue
            ranking = rumor_center(ba_graph, visible)
            top1 += int(ranking.nodes[0] == masked.source)
            top20 += int(masked.source in ranking.nodes[:20])
        assert 0.45 <= top1 / n_cascades <= 0.75
        assert 0.60 <= top20 / n_cascades <= 0.90


class TestEdgeList:
    def test_round_trip(self, ba_graph):
        lines = edge_list_lines(ba_graph)
        assert len(lines) == ba_graph.edge_count
        rebuilt = graph_from_edge_lines(lines)
        assert rebuilt.n == ba_graph.n
        for u in range(ba_graph.n):
            assert np.array_equal(rebuilt.neighbors[u], ba_graph.neighbors[u])

    def test_lines_sorted_with_low_endpoint_first(self, ba_graph):
        lines = edge_list_lines(ba_graph)
        pairs = [tuple(map(int, line.split())) for line in lines]
        assert all(u < v for u, v in pairs)
        assert pairs == sorted(pairs)

    def test_malformed_lines_rejected(self):
        with pytest.raises(ParameterError):
            graph_from_edge_lines(["0 1 2"])
        with pytest.raises(ParameterError):
            graph_from_edge_lines(["3 3"])
        with pytest.raises(ParameterError):
            graph_from_edge_lines([])
