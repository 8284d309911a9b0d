from pathlib import Path

import pytest
import yaml

from stancelab.core.config import ConfigManager, PipelineConfig, load_config
from stancelab.core.errors import ConfigError


def write_config(tmp_path, **fields):
    data = {"corpus": "data/corpus.jsonl", "topics": [{"name": "trump", "keywords": ["Trump", "trumpa"]}]}
    data.update(fields)
    path = tmp_path / "stancelab.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_paths_resolve_against_config_dir(tmp_path):
    path = write_config(tmp_path, gold="gold.csv", out="results", lexicon={"stopwords": "stop.txt"})
    config = load_config(path, check_paths=False)
    assert config.corpus == tmp_path / "data" / "corpus.jsonl"
    assert config.gold == tmp_path / "gold.csv"
    assert config.out == tmp_path / "results"
    assert config.lexicon.stopwords == tmp_path / "stop.txt"


def test_defaults(tmp_path):
    config = load_config(write_config(tmp_path), check_paths=False)
    assert config.seed == 7
    assert config.deterministic is False
    assert config.representation == "text"
    assert config.clustering.min_cluster_size == 25
    assert config.propagation.min_retweets == 10
    assert config.projection.n_neighbors == 15


def test_topic_keywords_are_folded(tmp_path):
    config = load_config(write_config(tmp_path), check_paths=False)
    (spec,) = config.topic_specs
    assert spec.name == "trump"
    assert spec.keywords == frozenset({"trump", "trumpa"})


def test_ascii_variants(tmp_path):
    path = write_config(tmp_path, topics=[{"name": "gezi", "keywords": ["Çarşı"], "ascii_variants": True}])
    (spec,) = load_config(path, check_paths=False).topic_specs
    assert {"çarşı", "carsi"} <= spec.keywords


def test_environment_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("STANCELAB_SEED", "42")
    monkeypatch.setenv("STANCELAB_OUT", str(tmp_path / "env-out"))
    monkeypatch.setenv("STANCELAB_DETERMINISTIC", "yes")
    config = load_config(write_config(tmp_path, seed=1), check_paths=False)
    assert config.seed == 42
    assert config.out == tmp_path / "env-out"
    assert config.deterministic is True


def test_bad_environment_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("STANCELAB_SEED", "many")
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path), check_paths=False)


def test_overrides_beat_environment_and_none_is_ignored(tmp_path, monkeypatch):
    monkeypatch.setenv("STANCELAB_SEED", "42")
    config = load_config(write_config(tmp_path), {"seed": 3, "out": None}, check_paths=False)
    assert config.seed == 3
    assert config.out == Path("stancelab-out")


def test_zero_topics(tmp_path):
    with pytest.raises(ConfigError, match="at least one topic"):
        load_config(write_config(tmp_path, topics=[]), check_paths=False)


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, colour="red"), check_paths=False)


def test_invalid_nested_value(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, clustering={"min_cluster_size": 1}), check_paths=False)


def test_invalid_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("topics: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_top_level_must_be_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_missing_input_file(tmp_path):
    with pytest.raises(ConfigError, match="corpus"):
        load_config(write_config(tmp_path))


def test_existing_inputs_pass_check(tmp_path):
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "corpus.jsonl").write_text("", encoding="utf-8")
    config = load_config(write_config(tmp_path))
    assert isinstance(config, PipelineConfig)


def test_manager_layers(tmp_path):
    manager = ConfigManager(write_config(tmp_path))
    manager.load()
    manager.set("threads", 2)
    manager.set("seed", None)
    assert manager.get("threads") == 2
    assert manager.get("seed") is None
    assert manager.build(check_paths=False).threads == 2


def test_manager_without_file_needs_topics():
    manager = ConfigManager()
    assert manager.load() == {}
    with pytest.raises(ConfigError):
        manager.build(check_paths=False)
