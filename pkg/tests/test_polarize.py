import numpy as np
import pytest
from scipy import sparse

from stancelab.core.errors import DataError, FormatError, PreconditionError
from stancelab.core.polarize import (
    UserGraph,
    build_user_graph,
    groups_from_clusters,
    load_groups,
    prominent_nodes,
    rwc,
)


def clique(n):
    return np.ones((n, n)) - np.eye(n)


def two_cliques(n=10, bridge=False):
    weights = np.zeros((2 * n, 2 * n))
    weights[:n, :n] = clique(n)
    weights[n:, n:] = clique(n)
    if bridge:
        # bridge ends lose one clique edge so they never rank as prominent
        for end in (n - 1, 2 * n - 1):
            weights[end, end - 1] = weights[end - 1, end] = 0.0
        weights[n - 1, 2 * n - 1] = weights[2 * n - 1, n - 1] = 1.0
    ids = [f"a{i:02d}" for i in range(n)] + [f"b{i:02d}" for i in range(n)]
    return ids, ["A"] * n + ["B"] * n, weights


def test_same_single_account_gives_weight_one(tweets):
    source = tweets.post("acc", "x")
    tweets.retweet("u1", source)
    tweets.retweet("u2", source)
    graph = build_user_graph(tweets.corpus(), {"u1": "A", "u2": "B"})
    assert graph.weights[0, 1] == pytest.approx(1.0)


def test_disjoint_accounts_have_no_edge(tweets):
    tweets.retweet("u1", tweets.post("acc1", "x"))
    tweets.retweet("u2", tweets.post("acc2", "y"))
    graph = build_user_graph(tweets.corpus(), {"u1": "A", "u2": "B"})
    assert graph.weights.nnz == 0


def test_weights_match_direct_cosine(tweets):
    accounts = {name: tweets.post(name, name) for name in ("p", "q", "r")}
    plan = {"u1": "ppq", "u2": "pqqr", "u3": "rr"}
    for user, picks in plan.items():
        for name in picks:
            tweets.retweet(user, accounts[name])
    graph = build_user_graph(tweets.corpus(), {"u1": "A", "u2": "A", "u3": "B"})
    vectors = {"u1": np.array([2, 1, 0.0]), "u2": np.array([1, 2, 1.0]), "u3": np.array([0, 0, 2.0])}
    for i, u in enumerate(graph.user_ids):
        for j, v in enumerate(graph.user_ids):
            expected = 0.0 if i == j else vectors[u] @ vectors[v] / np.linalg.norm(vectors[u]) / np.linalg.norm(vectors[v])
            assert graph.weights[i, j] == pytest.approx(expected, abs=1e-12)


def test_absent_and_silent_members_are_dropped(tweets):
    source = tweets.post("acc", "x")
    tweets.retweet("u1", source)
    tweets.retweet("u2", source)
    tweets.post("quiet", "no retweets")
    graph = build_user_graph(tweets.corpus(), {"u1": "A", "u2": "B", "quiet": "A", "ghost": "B"})
    assert graph.user_ids == ("u1", "u2")
    assert graph.dropped == {"absent": ["ghost"], "no_retweets": ["quiet"]}


def test_graph_needs_both_groups():
    with pytest.raises(DataError):
        UserGraph.from_adjacency(["a", "b"], ["A", "A"], clique(2))


def test_prominent_star_center():
    weights = np.zeros((5, 5))
    weights[0, 1:] = weights[1:, 0] = 1.0
    graph = UserGraph.from_adjacency(["z", "a", "b", "c", "d"], ["A", "A", "A", "B", "B"], weights)
    assert prominent_nodes(graph, "A", 1) == ["z"]


def test_prominent_ties_by_id():
    ids, groups, weights = two_cliques(4)
    graph = UserGraph.from_adjacency(ids, groups, weights)
    assert prominent_nodes(graph, "B", 2) == ["b00", "b01"]


def test_prominent_clamps_to_group_size():
    ids, groups, weights = two_cliques(3)
    graph = UserGraph.from_adjacency(ids, groups, weights)
    assert len(prominent_nodes(graph, "A", 10)) == 3


def test_prominent_matches_sort_oracle():
    rng = np.random.default_rng(0)
    upper = np.triu(rng.random((30, 30)) < 0.2, 1)
    weights = (upper | upper.T).astype(float)
    ids = [f"u{i:02d}" for i in rng.permutation(30)]
    groups = ["A" if i % 2 else "B" for i in range(30)]
    graph = UserGraph.from_adjacency(ids, groups, weights)
    degrees = weights.sum(axis=1)
    members = [i for i in range(30) if groups[i] == "A"]
    expected = [ids[i] for i in sorted(members, key=lambda i: (-degrees[i], ids[i]))[:5]]
    assert prominent_nodes(graph, "A", 5) == expected


def test_disconnected_cliques_rwc_one():
    graph = UserGraph.from_adjacency(*two_cliques(5))
    result = rwc(graph, n_prominent=1)
    assert (result.p_aa, result.p_ab, result.p_ba, result.p_bb) == pytest.approx((1.0, 0.0, 0.0, 1.0))
    assert result.rwc == pytest.approx(1.0)
    assert result.unabsorbed_fraction == 0.0


@pytest.mark.parametrize("trial", range(10))
def test_complete_graph_is_not_polarized(trial):
    rng = np.random.default_rng(trial)
    groups = ["A"] * 10 + ["B"] * 10
    rng.shuffle(groups)
    graph = UserGraph.from_adjacency([f"u{i:02d}" for i in range(20)], groups, clique(20))
    assert abs(rwc(graph, n_prominent=2).rwc) <= 0.05


def test_bridge_exact_matches_monte_carlo():
    graph = UserGraph.from_adjacency(*two_cliques(10, bridge=True))
    exact = rwc(graph, n_prominent=2)
    sampled = rwc(graph, n_prominent=2, mode="monte_carlo", n_walks=100_000, seed=11)
    assert 0.0 < exact.rwc < 1.0
    assert sampled.rwc == pytest.approx(exact.rwc, abs=0.01)
    assert sampled.p_ab == pytest.approx(exact.p_ab, abs=0.01)


def random_connected(seed, n=24):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.25), 1)
    weights = upper + upper.T
    ring = np.arange(n)
    weights[ring, (ring + 1) % n] = weights[(ring + 1) % n, ring] = 0.5
    groups = ["A" if i < n // 2 else "B" for i in range(n)]
    return [f"u{i:02d}" for i in range(n)], groups, weights


def complete_shuffled(seed):
    groups = ["A"] * 10 + ["B"] * 10
    np.random.default_rng(seed).shuffle(groups)
    return [f"u{i:02d}" for i in range(20)], groups, clique(20)


TEST_GRAPHS = {
    "disconnected": (two_cliques(5), 1),
    "bridge": (two_cliques(10, bridge=True), 2),
    "complete": (complete_shuffled(0), 2),
    "random1": (random_connected(1), 3),
    "random2": (random_connected(2), 3),
    "random3": (random_connected(3), 2),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(TEST_GRAPHS))
def test_exact_and_monte_carlo_agree_within_three_sigma(name):
    (ids, groups, weights), n_prominent = TEST_GRAPHS[name]
    graph = UserGraph.from_adjacency(ids, groups, weights)
    n_walks = 20_000
    exact = rwc(graph, n_prominent=n_prominent)
    sampled = rwc(graph, n_prominent=n_prominent, mode="monte_carlo", n_walks=n_walks, seed=17)
    assert exact.unabsorbed_fraction == 0.0
    assert sampled.unabsorbed_fraction == 0.0
    for p_exact, p_sampled in ((exact.p_aa, sampled.p_aa), (exact.p_bb, sampled.p_bb)):
        sigma = np.sqrt(p_exact * (1.0 - p_exact) / n_walks)
        assert abs(p_sampled - p_exact) <= 3 * sigma + 1e-12


def test_monte_carlo_is_seeded():
    graph = UserGraph.from_adjacency(*two_cliques(6, bridge=True))
    first = rwc(graph, n_prominent=1, mode="monte_carlo", n_walks=2000, seed=3)
    second = rwc(graph, n_prominent=1, mode="monte_carlo", n_walks=2000, seed=3)
    assert first == second


def test_group_swap_symmetry():
    ids, groups, weights = two_cliques(8, bridge=True)
    weights[0, 12] = weights[12, 0] = 0.5
    result = rwc(UserGraph.from_adjacency(ids, groups, weights), n_prominent=2)
    swapped_groups = ["B" if g == "A" else "A" for g in groups]
    swapped = rwc(UserGraph.from_adjacency(ids, swapped_groups, weights), n_prominent=2)
    assert (swapped.p_aa, swapped.p_ab, swapped.p_ba, swapped.p_bb) == pytest.approx(
        (result.p_bb, result.p_ba, result.p_ab, result.p_aa)
    )
    assert swapped.rwc == pytest.approx(result.rwc)


def test_scaled_weights_leave_rwc_unchanged():
    rng = np.random.default_rng(4)
    upper = np.triu(rng.random((24, 24)), 1) * (np.triu(rng.random((24, 24)), 1) < 0.4)
    weights = upper + upper.T
    groups = ["A"] * 12 + ["B"] * 12
    ids = [f"u{i:02d}" for i in range(24)]
    base = rwc(UserGraph.from_adjacency(ids, groups, weights), n_prominent=3)
    scaled = rwc(UserGraph.from_adjacency(ids, groups, weights * 7.5), n_prominent=3)
    assert scaled.rwc == pytest.approx(base.rwc, abs=1e-9)
    assert scaled.p_ab == pytest.approx(base.p_ab, abs=1e-9)
    assert -1.0 <= base.rwc <= 1.0


def test_isolated_start_counts_as_unabsorbed():
    ids, groups, weights = two_cliques(4)
    weights = np.pad(weights, ((0, 1), (0, 1)))
    graph = UserGraph.from_adjacency(ids + ["lonely"], groups + ["A"], weights)
    result = rwc(graph, n_prominent=1)
    # 3 + 3 non-prominent starts plus the isolated node
    assert result.unabsorbed_fraction == pytest.approx(1 / 7)
    assert result.p_aa == pytest.approx(1.0)


@pytest.mark.parametrize("mode", ["exact", "monte_carlo"])
def test_all_prominent_group_has_no_walk_starts(mode):
    graph = UserGraph.from_adjacency(*two_cliques(3))
    with pytest.raises(PreconditionError, match="all prominent"):
        rwc(graph, n_prominent=3, mode=mode)


def test_unknown_mode():
    graph = UserGraph.from_adjacency(*two_cliques(3))
    with pytest.raises(PreconditionError):
        rwc(graph, mode="shortest_path")


def test_result_to_dict():
    data = rwc(UserGraph.from_adjacency(*two_cliques(3)), n_prominent=1).to_dict()
    assert set(data) == {"p_aa", "p_ab", "p_ba", "p_bb", "rwc", "n_prominent", "unabsorbed_fraction", "mode"}


def test_groups_file(tmp_path):
    path = tmp_path / "groups.csv"
    path.write_text("user_id,group\nu1,a\nu2,B\n", encoding="utf-8")
    assert load_groups(path) == {"u1": "A", "u2": "B"}
    path.write_text("user_id,group\nu1,C\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_groups(path)


def test_groups_from_clusters():
    clusters = {"a": 0, "b": 1, "c": 2, "d": -1, "e": 0}
    assert groups_from_clusters(clusters, 0, 1) == {"a": "A", "b": "B", "e": "A"}


def test_sparse_input_accepted():
    ids, groups, weights = two_cliques(3)
    graph = UserGraph.from_adjacency(ids, groups, sparse.csr_matrix(weights))
    assert graph.degrees.tolist() == [2] * 6
