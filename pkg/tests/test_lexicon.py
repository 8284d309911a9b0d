import json
import math
import random
from collections import Counter

import pytest

from stancelab.core.corpus import Corpus, Tweet
from stancelab.core.errors import DataError, DomainError, PreconditionError
from stancelab.core.lexicon import (
    TermStats,
    cluster_terms,
    load_stopwords,
    one_vs_rest,
    prominence,
    save_terms,
    save_wordcloud,
    term_stats,
    top_terms,
    valence,
)


def test_term_counts():
    stats = term_stats([["x", "x", "y"]], [["y"]])
    assert stats["x"] == TermStats("x", 2, 0, 3, 1)
    assert stats["y"] == TermStats("y", 1, 1, 3, 1)


def test_term_absent_from_first_set():
    stats = term_stats([["x"]], [["z"]])
    assert stats["z"].tf_a == 0


def test_counts_match_recount():
    rng = random.Random(0)
    vocab = [f"w{i}" for i in range(30)]
    a = [[rng.choice(vocab) for _ in range(rng.randint(1, 9))] for _ in range(50)]
    b = [[rng.choice(vocab) for _ in range(rng.randint(1, 9))] for _ in range(40)]
    stats = term_stats(a, b)
    count_a, count_b = Counter(), Counter()
    for doc in a:
        for token in doc:
            count_a[token] += 1
    for doc in b:
        for token in doc:
            count_b[token] += 1
    for term, s in stats.items():
        assert (s.tf_a, s.tf_b) == (count_a[term], count_b[term])
        assert (s.size_a, s.size_b) == (sum(count_a.values()), sum(count_b.values()))


def test_empty_set_rejected():
    with pytest.raises(PreconditionError):
        term_stats([], [["x"]])
    with pytest.raises(PreconditionError):
        term_stats([["x"]], [[]])


def test_equal_rates_give_zero():
    stats = TermStats("t", 4, 2, 100, 50)
    assert valence(stats) == 0.0
    assert prominence(stats) == 0.0


def test_exclusive_term():
    stats = TermStats("t", 100, 0, 1000, 10)
    assert valence(stats) == 1.0
    assert prominence(stats) == pytest.approx(math.log(100))
    assert prominence(stats) == pytest.approx(4.605, abs=1e-3)


def test_hand_evaluated_prominence():
    stats = TermStats("t", 6, 2, 100, 50)
    assert valence(stats) == pytest.approx(0.2)
    assert prominence(stats) == pytest.approx(0.3584, abs=1e-4)


def test_single_occurrence_has_zero_prominence():
    assert prominence(TermStats("t", 1, 0, 5, 5)) == 0.0


def test_zero_frequency_is_a_domain_error():
    with pytest.raises(DomainError):
        prominence(TermStats("t", 0, 3, 5, 5))


def test_valence_antisymmetric_and_bounded():
    rng = random.Random(1)
    for _ in range(50):
        size_a, size_b = rng.randint(1, 100), rng.randint(1, 100)
        tf_a, tf_b = rng.randint(0, size_a), rng.randint(0, size_b)
        if tf_a + tf_b == 0:
            continue
        forward = valence(TermStats("t", tf_a, tf_b, size_a, size_b))
        backward = valence(TermStats("t", tf_b, tf_a, size_b, size_a))
        assert forward == pytest.approx(-backward)
        assert -1.0 <= forward <= 1.0


def test_doubling_keeps_valence_and_raises_prominence():
    base = TermStats("t", 6, 2, 100, 50)
    doubled = TermStats("t", 12, 4, 200, 100)
    assert valence(doubled) == pytest.approx(valence(base))
    assert prominence(doubled) > prominence(base)


def test_invalid_stats():
    with pytest.raises(PreconditionError):
        TermStats("t", 5, 0, 4, 1)


def test_top_terms_small_vocabulary():
    entries = top_terms([["a", "a", "b"]], [["b", "c"]], k=50)
    assert [e.term for e in entries] == ["a", "b"]


def test_top_terms_all_shared_sorted_by_term():
    docs = [["y", "x", "y", "x"]]
    entries = top_terms(docs, docs, k=5)
    assert [e.term for e in entries] == ["x", "y"]
    assert all(e.prominence == 0.0 for e in entries)


def test_top_terms_drops_stopwords_and_number_token():
    entries = top_terms([["ve", "number", "seçim", "seçim"]], [["x"]], k=10, stopwords={"ve"})
    assert [e.term for e in entries] == ["seçim"]


def test_top_terms_k_must_be_positive():
    with pytest.raises(PreconditionError):
        top_terms([["a"]], [["b"]], k=0)


def test_planted_terms_rank_first():
    rng = random.Random(2)
    shared = [f"s{i}" for i in range(20)]

    def docs(planted):
        return [[rng.choice(shared) for _ in range(6)] + [planted] * 2 for _ in range(30)]

    a, b = docs("alpha"), docs("beta")
    assert top_terms(a, b, k=3)[0].term == "alpha"
    assert top_terms(b, a, k=3)[0].term == "beta"


def test_one_vs_rest():
    clusters = {0: [["a", "a", "x"]], 1: [["b", "b", "x"]], 2: [["c", "c", "x"]]}
    result = one_vs_rest(clusters, k=1)
    assert {cid: entries[0].term for cid, entries in result.items()} == {0: "a", 1: "b", 2: "c"}
    with pytest.raises(PreconditionError):
        one_vs_rest({0: [["a"]]})


def test_default_stopwords():
    words = load_stopwords()
    assert "ve" in words
    assert "the" in words
    assert not any(w.startswith("#") for w in words)


def test_custom_stopwords(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("# comment\nbir\n\n iki \n", encoding="utf-8")
    assert load_stopwords(path) == frozenset({"bir", "iki"})


def test_term_and_wordcloud_files(tmp_path):
    entries = top_terms([["a", "a", "b"]], [["b", "b", "b"]], k=5)
    csv = save_terms(entries, tmp_path / "terms.csv").read_text(encoding="utf-8").splitlines()
    assert csv[0] == "term,tf_a,tf_b,valence,prominence"
    assert csv[1].startswith("a,2,0,1.000000,0.693147")
    cloud = json.loads(save_wordcloud(entries, tmp_path / "cloud.json").read_text(encoding="utf-8"))
    assert cloud[0] == {"term": "a", "weight": pytest.approx(math.log(2))}
    assert all(item["weight"] >= 0 for item in cloud)


def test_cluster_terms_pairwise():
    corpus = Corpus(
        [
            Tweet("t1", "u1", "Seçim seçim ve sandık"),
            Tweet("t2", "u2", "Mülteci mülteci ve sınır"),
            Tweet("t3", "u3", "noise user words"),
        ]
    )
    result = cluster_terms(corpus, {"u1": 0, "u2": 1, "u3": -1}, k=1, stopwords={"ve"})
    assert result[0][0].term == "seçim"
    assert result[1][0].term == "mülteci"


def test_cluster_terms_needs_two_clusters():
    corpus = Corpus([Tweet("t1", "u1", "a b")])
    with pytest.raises(DataError):
        cluster_terms(corpus, {"u1": 0})
