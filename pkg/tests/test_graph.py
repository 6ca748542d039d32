import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icsel.graph import (
    CoverSet,
    GraphError,
    GraphKind,
    SemanticGraph,
    build_cover_sets,
    build_delta_graph,
    build_mnn_graph,
    cosine_similarity,
    heuristic_m_range,
    pairwise_cosine,
)
from tests.conftest import make_pool


class TestCosine:
    def test_identity(self, rng):
        v = rng.normal(size=5)
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_closed_form_inv_sqrt2(self):
        # closed form: cos = 1/sqrt(2)
        assert cosine_similarity([1.0, 1.0], [1.0, 0.0]) == pytest.approx(
            0.7071067811865475, abs=1e-12
        )

    def test_zero_vector(self):
        with pytest.raises(GraphError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(GraphError):
            cosine_similarity([1.0], [1.0, 0.0])


def brute_pairwise(emb):
    n = len(emb)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            a, b = np.asarray(emb[i], float), np.asarray(emb[j], float)
            S[i, j] = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    return S


class TestMnnGraph:
    def test_collinear_endpoints_point_to_middle(self):
        # three collinear points; brute-force similarity decides the edges
        angles = [np.deg2rad(a) for a in (5.0, 30.0, 50.0)]
        emb = np.array([[np.cos(a), np.sin(a)] for a in angles], dtype=np.float32)
        S = brute_pairwise(emb)
        expected = {}
        for i in range(3):
            sims = [(S[i, j], j) for j in range(3) if j != i]
            expected[i] = max(sims, key=lambda t: (t[0], -t[1]))[1]
        assert expected[0] == 1 and expected[2] == 1  # endpoints -> middle
        g = build_mnn_graph(make_pool(emb), m=1)
        for i in range(3):
            assert list(g.out_idx[i]) == [expected[i]]

    def test_saturation_complete(self, rng):
        emb = rng.normal(size=(5, 3))
        g = build_mnn_graph(make_pool(emb), m=10)
        for i in range(5):
            assert sorted(g.out_idx[i]) == [j for j in range(5) if j != i]

    def test_identical_embeddings_tie_to_lowest(self):
        emb = np.ones((4, 3), dtype=np.float32)
        g = build_mnn_graph(make_pool(emb), m=2)
        assert list(g.out_idx[0]) == [1, 2]
        assert list(g.out_idx[3]) == [0, 1]

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 12), st.integers(1, 14), st.integers(0, 2**31 - 1))
    def test_degree_and_no_self_loops(self, n, m, seed):
        emb = np.random.default_rng(seed).normal(size=(n, 4))
        g = build_mnn_graph(make_pool(emb), m=m)
        for i in range(n):
            assert len(g.out_idx[i]) == min(m, n - 1)
            assert i not in g.out_idx[i]
            sims = g.out_sim[i]
            assert all(sims[j] >= sims[j + 1] for j in range(len(sims) - 1))


class TestDeltaGraph:
    def test_saturation(self, rng):
        emb = rng.normal(size=(6, 3)).astype(np.float32)
        g = build_delta_graph(make_pool(emb), target_avg_degree=5)
        S = brute_pairwise(emb)
        min_sim = min(S[i, j] for i in range(6) for j in range(6) if i != j)
        assert g.kind.delta == pytest.approx(min_sim, abs=1e-12)
        for i in range(6):
            assert len(g.out_idx[i]) == 5

    def test_two_tight_pairs(self):
        # independent oracle: scan all candidate thresholds by brute force
        emb = np.array(
            [[1.0, 0.0], [0.999, 0.01], [0.0, 1.0], [0.01, 0.999]], dtype=np.float32
        )
        S = brute_pairwise(emb)
        pair_sims = sorted(
            {S[i, j] for i in range(4) for j in range(4) if i < j}, reverse=True
        )
        best = None
        for delta in pair_sims:
            edges = sum(
                1 for i in range(4) for j in range(4) if i != j and S[i, j] >= delta
            )
            if edges / 4 <= 1:
                best = (delta, edges)
        assert best is not None
        g = build_delta_graph(make_pool(emb), target_avg_degree=1)
        assert g.kind.delta == pytest.approx(best[0], abs=1e-12)
        assert list(g.out_idx[0]) == [1]
        assert list(g.out_idx[1]) == [0]
        assert list(g.out_idx[2]) == [3]
        assert list(g.out_idx[3]) == [2]

    def test_degenerate_warns(self):
        emb = np.ones((5, 3), dtype=np.float32)
        with pytest.warns(UserWarning, match="degenerate"):
            g = build_delta_graph(make_pool(emb), target_avg_degree=1)
        assert g.kind.delta == 1.0

    @settings(max_examples=15, deadline=None)
    @given(st.integers(3, 10), st.integers(0, 2**31 - 1))
    def test_mean_degree_bound_tight(self, n, seed):
        rng = np.random.default_rng(seed)
        emb = rng.normal(size=(n, 3)).astype(np.float32)
        target = int(rng.integers(1, n))
        g = build_delta_graph(make_pool(emb), target_avg_degree=target)
        assert g.mean_out_degree() <= target + 1e-12
        # next-smaller candidate threshold would push the mean degree past target
        S = pairwise_cosine(emb)
        sims = sorted({S[i, j] for i in range(n) for j in range(n) if i < j})
        smaller = [s for s in sims if s < g.kind.delta]
        if smaller:
            edges = int(np.sum(S >= smaller[-1])) - n
            assert edges / n > target


class TestCoverSets:
    @pytest.fixture
    def worked_graph(self):
        # v1..v7 -> nodes 0..6; hard = {v1..v4}, easy = {v5..v7}
        edges = [
            (1, 0, 0.9),  # v2 -> v1
            (2, 0, 0.8),  # v3 -> v1
            (4, 0, 0.7),  # v5 -> v1 (easy voter, excluded from egonets)
            (0, 1, 0.9),  # v1 -> v2
            (3, 1, 0.8),  # v4 -> v2
            (5, 2, 0.6),  # v6 -> v3 (easy only)
            (6, 3, 0.6),  # v7 -> v4 (easy only)
        ]
        return SemanticGraph.from_edges(7, edges, GraphKind("mnn", m=4))

    def test_worked_one_hop(self, worked_graph):
        hard = [0, 1, 2, 3]
        sets = {s.center: set(s.members) for s in build_cover_sets(worked_graph, hard, 1)}
        assert sets[0] == {1, 2}  # S1 = {v2, v3}
        assert sets[1] == {0, 3}  # S2 = {v1, v4}
        assert sets[2] == set()  # S3 = empty
        assert sets[3] == set()

    def test_worked_two_hop(self, worked_graph):
        hard = [0, 1, 2, 3]
        sets = {s.center: set(s.members) for s in build_cover_sets(worked_graph, hard, 2)}
        assert sets[0] == {1, 2, 3}  # S1(2) = {v2, v3, v4}

    def test_empty_hard(self, worked_graph):
        assert build_cover_sets(worked_graph, [], 1) == []

    def test_easy_nodes_never_members(self, rng):
        emb = rng.normal(size=(12, 4))
        g = build_mnn_graph(make_pool(emb), m=3)
        hard = [0, 2, 4, 6, 8, 10]
        for s in build_cover_sets(g, hard, 2):
            assert set(s.members) <= set(hard)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(4, 12), st.integers(1, 4), st.integers(0, 2**31 - 1))
    def test_member_reconstruction(self, n, m, seed):
        # every member reaches the center by hard-node edges within the hop count
        rng = np.random.default_rng(seed)
        emb = rng.normal(size=(n, 3))
        g = build_mnn_graph(make_pool(emb), m=m)
        hard = sorted(rng.choice(n, size=max(2, n // 2), replace=False).tolist())
        hard_set = set(hard)
        one_hop = {
            v: {u for u in hard_set if u != v and v in g.out_idx[u]} for v in hard
        }
        for s in build_cover_sets(g, hard, 1):
            assert set(s.members) == one_hop[s.center]
        for s in build_cover_sets(g, hard, 2):
            expected = set(one_hop[s.center])
            for u in one_hop[s.center]:
                expected |= one_hop[u]
            expected.discard(s.center)
            assert set(s.members) == expected


class TestHeuristicM:
    def test_paper_default_one_hop(self):
        lo, hi = heuristic_m_range(20, 2, 0.5, 0.5, 300, hops=1)
        assert lo == pytest.approx(15.0, abs=1e-12)
        assert hi == pytest.approx(30.0, abs=1e-12)

    def test_two_hop_integer_range(self):
        # substitution: m^2 in (30, 60) -> integer m in {6, 7}
        lo, hi = heuristic_m_range(20, 2, 0.5, 0.5, 300, hops=2)
        assert lo == pytest.approx(math.sqrt(30.0), abs=1e-12)
        assert hi == pytest.approx(math.sqrt(60.0), abs=1e-12)
        assert [m for m in range(1, 50) if lo <= m <= hi] == [6, 7]

    def test_degenerate_equality(self):
        lo, hi = heuristic_m_range(10, 1, 1.0, 1.0, 100, hops=1)
        assert lo == hi == pytest.approx(10.0, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            heuristic_m_range(0, 1, 0.5, 0.5, 100)
        with pytest.raises(ValueError):
            heuristic_m_range(10, 1, 0.0, 0.5, 100)


def test_graph_json_dump(rng):
    emb = rng.normal(size=(4, 3))
    g = build_mnn_graph(make_pool(emb), m=2)
    import json

    data = json.loads(g.to_json())
    assert data["n"] == 4
    assert data["params"]["kind"] == "mnn"
    assert all(len(e) == 3 for e in data["edges"])
    assert len(data["edges"]) == 8
