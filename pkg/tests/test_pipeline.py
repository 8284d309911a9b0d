import json

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from stancelab.core.cluster import ClusterParams, load_assignment
from stancelab.core.config import ConfigManager, PipelineConfig, TopicConfig
from stancelab.core.errors import ConfigError, StageError
from stancelab.core.pipeline import STAGES, PipelineResult, TopicReport, run_pipeline
from stancelab.core.polarize import RwcParams
from stancelab.core.project import ProjectionParams, load_layout
from stancelab.core.synth import SynthParams, generate, independent_topics, plant_subgroups, save_synth

FAST_PROJECTION = ProjectionParams(n_epochs=150, seed=0)


def synth_inputs(tmp_path, **update):
    fields = dict(n_users_per_group=60, n_tweets_per_user=10, vocab_shared=100, vocab_exclusive_per_group=100, seed=5)
    fields.update(update)
    return save_synth(generate(SynthParams(**fields)), tmp_path / "data")


def make_config(paths, out, topics=("topic",), **fields):
    values = dict(
        corpus=paths["corpus"],
        gold=paths["gold"],
        topics=[TopicConfig(name=t, keywords=[t]) for t in topics],
        out=out,
        deterministic=True,
        projection=FAST_PROJECTION,
        clustering=ClusterParams(min_cluster_size=15),
    )
    values.update(fields)
    return PipelineConfig(**values)


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_small_synthetic_run(tmp_path):
    paths = synth_inputs(tmp_path)
    result = run_pipeline(make_config(paths, tmp_path / "out"))
    assert result.ok
    (report,) = result.reports
    assert report.n_users == 120
    assert report.n_clusters >= 2
    assert report.metrics["macro_f1"] >= 0.9
    assert report.trustworthiness > 0.8
    assert report.completed == list(STAGES)

    topic_dir = tmp_path / "out" / "topic"
    for name in ("layout.csv", "clusters.csv", "condensed_tree.json", "scatter.svg", "scatter_gold.svg", "report.json"):
        assert (topic_dir / name).exists(), name
    assert len(load_layout(topic_dir / "layout.csv")) == 120
    assert load_assignment(topic_dir / "clusters.csv").n_points == 120
    assert read_json(topic_dir / "report.json")["status"] == "completed"
    assert (tmp_path / "out" / "ami.csv").exists()
    assert read_json(tmp_path / "out" / "report.json")["topics"][0]["topic"] == "topic"


def test_lexicon_and_rwc_artifacts(tmp_path):
    paths = synth_inputs(tmp_path, retweet_rate=0.4, cross_rate=0.0)
    (report,) = run_pipeline(make_config(paths, tmp_path / "out")).reports
    assert 0.0 < report.rwc["rwc"] <= 1.0
    assert len(report.rwc["clusters"]) == 2
    assert set(report.lexicon) == {str(c) for c in range(report.n_clusters)}
    assert (tmp_path / "out" / "topic" / "terms_cluster0.csv").exists()
    assert (tmp_path / "out" / "topic" / "wordcloud_cluster0.json").exists()


@pytest.mark.slow
def test_two_groups_of_five_hundred(tmp_path):
    paths = save_synth(generate(SynthParams(n_users_per_group=500, n_tweets_per_user=20, seed=1)), tmp_path / "data")
    config = make_config(paths, tmp_path / "out", clustering=ClusterParams(), projection=ProjectionParams(seed=0))
    (report,) = run_pipeline(config).reports
    assert report.n_clusters == 2
    assert report.metrics["macro_f1"] >= 0.9


def test_deterministic_runs_are_byte_identical(tmp_path):
    paths = synth_inputs(tmp_path)
    run_pipeline(make_config(paths, tmp_path / "a"))
    run_pipeline(make_config(paths, tmp_path / "b"))
    for name in ("report.json", "ami.csv", "topic/report.json", "topic/layout.csv", "topic/scatter.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_seed_changes_layout(tmp_path):
    paths = synth_inputs(tmp_path)
    run_pipeline(make_config(paths, tmp_path / "a", seed=1))
    run_pipeline(make_config(paths, tmp_path / "b", seed=2))
    a = load_layout(tmp_path / "a" / "topic" / "layout.csv")
    b = load_layout(tmp_path / "b" / "topic" / "layout.csv")
    assert not np.array_equal(a.points, b.points)


def test_zero_topics_is_a_config_error(tmp_path):
    manager = ConfigManager()
    manager.set("corpus", str(tmp_path / "corpus.jsonl"))
    manager.set("topics", [])
    with pytest.raises(ConfigError):
        manager.build(check_paths=False)


def test_shared_structure_topics_agree(tmp_path):
    paths = synth_inputs(tmp_path, topic_names=["trump", "pkk"])
    result = run_pipeline(make_config(paths, tmp_path / "out", topics=("trump", "pkk")))
    assert result.ami_topics == ["trump", "pkk"]
    assert result.ami_pairs()["trump|pkk"] >= 0.8
    assert (tmp_path / "out" / "ami.svg").exists()
    text = (tmp_path / "out" / "ami.csv").read_text(encoding="utf-8")
    assert text.startswith("topic,trump,pkk\n")


def test_no_exclusive_vocabulary_cannot_be_separated(tmp_path):
    paths = synth_inputs(tmp_path, vocab_exclusive_per_group=0)
    (report,) = run_pipeline(make_config(paths, tmp_path / "out")).reports
    assert abs(report.metrics["macro_f1"] - 0.5) <= 0.1


def test_rwc_skipped_when_clusters_are_all_prominent(tmp_path):
    paths = synth_inputs(tmp_path, retweet_rate=0.4, cross_rate=0.0)
    config = make_config(paths, tmp_path / "out", rwc=RwcParams(n_prominent=500))
    (report,) = run_pipeline(config).reports
    assert report.status == "completed"
    assert "all prominent" in report.skipped["rwc"]
    assert report.rwc is None
    assert "lexicon" in report.completed


def test_failed_stage_is_reported(tmp_path):
    paths = synth_inputs(tmp_path)
    config = make_config(paths, tmp_path / "out", topics=("absent", "topic"))
    with pytest.raises(StageError) as excinfo:
        run_pipeline(config)
    assert excinfo.value.stage == "filter"
    assert excinfo.value.topic == "absent"

    failed = read_json(tmp_path / "out" / "absent" / "report.json")
    assert failed["status"] == "failed"
    assert "no tweets match" in failed["error"]
    assert set(failed["skipped"]) == set(STAGES)
    summary = read_json(tmp_path / "out" / "report.json")
    assert [t["status"] for t in summary["topics"]] == ["failed", "completed"]


def test_without_reference_labels_eval_is_skipped(tmp_path):
    paths = synth_inputs(tmp_path)
    (report,) = run_pipeline(make_config(paths, tmp_path / "out", gold=None, plots=False)).reports
    assert report.status == "completed"
    assert "eval" in report.skipped
    assert report.skipped["plot"] == "plots disabled"
    assert report.metrics is None
    assert not (tmp_path / "out" / "topic" / "scatter.svg").exists()


def test_seed_profiles_give_overlap(tmp_path):
    paths = synth_inputs(tmp_path, retweet_rate=0.5, cross_rate=0.0)
    config = make_config(paths, tmp_path / "out", profiles=paths["profiles"])
    (report,) = run_pipeline(config).reports
    assert (tmp_path / "out" / "labels.csv").exists()
    assert report.overlap is not None
    assert set(report.overlap) == {"pro", "anti"}


def test_retweet_representation(tmp_path):
    paths = synth_inputs(tmp_path, retweet_rate=0.5, cross_rate=0.0)
    (report,) = run_pipeline(make_config(paths, tmp_path / "out", representation="retweets")).reports
    assert report.status == "completed"
    assert 0 < report.n_users


def test_ami_pairs_and_nan():
    matrix = np.array([[1.0, 0.5, np.nan], [0.5, 1.0, np.nan], [np.nan, np.nan, np.nan]])
    result = PipelineResult([TopicReport("a"), TopicReport("b"), TopicReport("c")], ["a", "b", "c"], matrix)
    assert result.ami_pairs() == {"a|b": 0.5, "a|c": None, "b|c": None}
    assert result.to_dict()["ami"]["matrix"][2] == [None, None, None]
    assert not result.ok


def test_independent_topics_disagree(tmp_path):
    params = SynthParams(
        n_users_per_group=60, n_tweets_per_user=10, vocab_shared=100, vocab_exclusive_per_group=100,
        topic_names=["trump", "pkk"], seed=5,
    )
    paths = save_synth(independent_topics(params), tmp_path / "data")
    result = run_pipeline(make_config(paths, tmp_path / "out", topics=("trump", "pkk")))
    assert result.ami_pairs()["trump|pkk"] <= 0.2


@pytest.mark.slow
def test_planted_subgroups_are_recovered(tmp_path):
    params = SynthParams(n_users_per_group=200, n_tweets_per_user=20, seed=2)
    synth = plant_subgroups(generate(params), 2)
    paths = save_synth(synth, tmp_path / "data")
    (report,) = run_pipeline(make_config(paths, tmp_path / "out", gold=None)).reports
    assert report.n_clusters >= 4
    assignment = load_assignment(tmp_path / "out" / "topic" / "clusters.csv")
    clustered = assignment.clustered_users()
    users = sorted(clustered)
    score = adjusted_rand_score([synth.gold[u] for u in users], [clustered[u] for u in users])
    assert score >= 0.8
