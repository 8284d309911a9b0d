"""
Stancelab - Pipeline
Per-topic stance detection runs, cross-topic AMI and report assembly
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..utils import atomic_write_text, derive_seed
from .cluster import ClusterAssignment, cluster, save_assignment
from .config import PipelineConfig
from .corpus import Corpus, TopicSpec, filter_language, filter_topic, load_corpus_with_report
from .embed import HashEmbedder, TweetVector, load_embeddings, retweet_count_matrix, stack_user_vectors, user_vectors
from .errors import DataError, PreconditionError, StageError, StancelabError
from .evaluate import (
    ami_matrix,
    label_overlap,
    load_gold,
    majority_label,
    predicted_classes,
    prf,
    save_ami_matrix,
)
from .labelprop import (
    Stance,
    StanceLabel,
    load_profiles,
    load_seed_rules,
    load_seeds,
    propagate,
    save_labels,
    seeds_from_profiles,
)
from .lexicon import cluster_terms, load_stopwords, save_terms, save_wordcloud
from .polarize import build_user_graph, groups_from_clusters, rwc
from .project import Layout2D, ProjectionParams, clamp_neighbors, project, save_layout, trustworthiness

logger = logging.getLogger(__name__)

STAGES = ("filter", "embed", "project", "cluster", "eval", "rwc", "lexicon", "plot")
TRUSTWORTHINESS_K = 10


@dataclass
class TopicReport:
    """Outcome of one topic's run; stages that did not run are listed in ``skipped``"""

    topic: str
    status: str = "pending"
    n_tweets: int = 0
    n_users: int = 0
    n_clusters: int = 0
    cluster_sizes: List[int] = field(default_factory=list)
    noise_fraction: float = 0.0
    trustworthiness: Optional[float] = None
    majority: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    metrics: Optional[Dict[str, Any]] = None
    overlap: Optional[Dict[str, float]] = None
    rwc: Optional[Dict[str, Any]] = None
    lexicon: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    completed: List[str] = field(default_factory=list)
    skipped: Dict[str, str] = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "topic": self.topic,
            "status": self.status,
            "n_tweets": self.n_tweets,
            "n_users": self.n_users,
            "n_clusters": self.n_clusters,
            "cluster_sizes": list(self.cluster_sizes),
            "noise_fraction": self.noise_fraction,
            "trustworthiness": self.trustworthiness,
            "majority": self.majority,
            "metrics": self.metrics,
            "overlap": self.overlap,
            "rwc": self.rwc,
            "lexicon": self.lexicon,
            "artifacts": dict(sorted(self.artifacts.items())),
            "completed": list(self.completed),
            "skipped": dict(sorted(self.skipped.items())),
            "error": self.error,
        }


@dataclass
class PipelineResult:
    reports: List[TopicReport]
    ami_topics: List[str]
    ami: np.ndarray

    @property
    def ok(self) -> bool:
        return all(r.status == "completed" for r in self.reports)

    def ami_pairs(self) -> Dict[str, Optional[float]]:
        pairs = {}
        for i, a in enumerate(self.ami_topics):
            for j in range(i + 1, len(self.ami_topics)):
                value = self.ami[i, j]
                pairs[f"{a}|{self.ami_topics[j]}"] = None if math.isnan(value) else float(value)
        return pairs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "topics": [r.to_dict() for r in self.reports],
            "ami": {
                "topics": list(self.ami_topics),
                "matrix": [[None if math.isnan(v) else float(v) for v in row] for row in self.ami],
                "pairs": self.ami_pairs(),
            },
        }


@dataclass
class _Inputs:
    """Shared read-only inputs of every topic run"""

    corpus: Corpus
    gold: Optional[Dict[str, str]]
    propagated: Optional[Dict[str, str]]
    tweet_vectors: Mapping[str, TweetVector]
    embedder: HashEmbedder
    stopwords: frozenset


def write_json(path: Path, payload: Any) -> Path:
    """Atomic, key-sorted, indented JSON."""
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n")


def _json_safe(value: Any) -> Any:
    if isinstance(value, float):
        return None if math.isnan(value) else value
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def _stage_labels(config: PipelineConfig, corpus: Corpus) -> Optional[Dict[str, StanceLabel]]:
    if config.seeds is not None:
        seeds = load_seeds(config.seeds)
    elif config.profiles is not None:
        seeds, _ = seeds_from_profiles(load_profiles(config.profiles), load_seed_rules(config.seed_rules))
    else:
        return None
    if not seeds:
        logger.warning("no seed users; label propagation skipped")
        return None
    result = propagate(corpus, seeds, config.propagation)
    save_labels(result, config.out / "labels.csv")
    logger.info(
        f"label propagation: {len(result.by_stance(Stance.PRO))} pro, "
        f"{len(result.by_stance(Stance.ANTI))} anti after {len(result.trace)} rounds"
    )
    return dict(result)


def _topic_vectors(config: PipelineConfig, corpus: Corpus, inputs: _Inputs) -> Tuple[List[str], np.ndarray]:
    if config.representation == "retweets":
        users, _, counts = retweet_count_matrix(corpus)
        dropped = len(corpus.users) - len(users)
        if dropped:
            logger.warning(f"{dropped} users without retweets left out of the retweet representation")
        return users, counts.toarray()
    return stack_user_vectors(user_vectors(corpus, inputs.tweet_vectors, inputs.embedder))


def _largest_two(assignment: ClusterAssignment) -> Tuple[int, int]:
    ranked = sorted(range(assignment.n_clusters), key=lambda c: (-assignment.sizes[c], c))
    return ranked[0], ranked[1]


class _TopicRun:
    """One topic's stages; artifacts go under ``<out>/<topic>/``"""

    def __init__(self, config: PipelineConfig, topic: TopicSpec, inputs: _Inputs):
        self.config = config
        self.topic = topic
        self.inputs = inputs
        self.dir = config.out / topic.name
        self.report = TopicReport(topic=topic.name)
        self.assignment: Optional[ClusterAssignment] = None

    def _artifact(self, key: str, path: Path) -> None:
        self.report.artifacts[key] = path.relative_to(self.config.out).as_posix()

    def _stage(self, name: str, action, optional: bool = False):
        try:
            result = action()
        except DataError as e:
            if not optional:
                raise StageError(name, self.topic.name, e) from e
            logger.warning(f"[{self.topic.name}] {name} skipped: {e}")
            self.report.skipped[name] = str(e)
            return None
        except (StancelabError, OSError, ValueError, ArithmeticError) as e:
            raise StageError(name, self.topic.name, e) from e
        self.report.completed.append(name)
        return result

    def run(self) -> TopicReport:
        config, report = self.config, self.report
        self.dir.mkdir(parents=True, exist_ok=True)
        try:
            topic_corpus = self._stage("filter", self._filter)
            ids, vectors = self._stage("embed", lambda: _topic_vectors(config, topic_corpus, self.inputs))
            layout = self._stage("project", lambda: self._project(ids, vectors))
            assignment = self._stage("cluster", lambda: self._cluster(layout))
            predicted = self._stage("eval", lambda: self._evaluate(assignment), optional=True)
            if assignment.n_clusters >= 2:
                self._stage("rwc", lambda: self._rwc(topic_corpus, assignment), optional=True)
                self._stage("lexicon", lambda: self._lexicon(topic_corpus, assignment), optional=True)
            else:
                report.skipped["rwc"] = report.skipped["lexicon"] = "fewer than two clusters"
            if config.plots:
                self._stage("plot", lambda: self._plot(layout, assignment, predicted))
            else:
                report.skipped["plot"] = "plots disabled"
            report.status = "completed"
        except StageError as e:
            report.status = "failed"
            report.error = str(e)
            for stage in STAGES:
                if stage not in report.completed:
                    report.skipped.setdefault(stage, "not run")
            logger.error(str(e))
            raise
        finally:
            write_json(self.dir / "report.json", _json_safe(report.to_dict()))
        return report

    def _filter(self) -> Corpus:
        topic_corpus = filter_topic(self.inputs.corpus, self.topic)
        self.report.n_tweets = len(topic_corpus)
        self.report.n_users = len(topic_corpus.users)
        if not topic_corpus.users:
            raise DataError(f"no tweets match topic '{self.topic.name}'")
        logger.info(f"[{self.topic.name}] {len(topic_corpus)} tweets from {len(topic_corpus.users)} users")
        return topic_corpus

    def _project(self, ids: List[str], vectors: np.ndarray) -> Layout2D:
        if len(ids) == 0:
            raise DataError("no user vectors")
        params = ProjectionParams.model_validate(
            {
                **self.config.projection.model_dump(),
                "seed": derive_seed(self.config.seed, "project", self.topic.name),
                "parallel": self.config.projection.parallel and not self.config.deterministic,
            }
        )
        layout = project(vectors, clamp_neighbors(params, len(ids)), ids)
        self.report.trustworthiness = trustworthiness(vectors, layout, TRUSTWORTHINESS_K)
        path = save_layout(layout, self.dir / "layout.csv")
        self._artifact("layout", path)
        return layout

    def _cluster(self, layout: Layout2D) -> ClusterAssignment:
        assignment = cluster(layout, self.config.clustering)
        path = save_assignment(assignment, self.dir / "clusters.csv", self.dir / "condensed_tree.json")
        self._artifact("clusters", path)
        self._artifact("condensed_tree", self.dir / "condensed_tree.json")
        self.report.n_clusters = assignment.n_clusters
        self.report.cluster_sizes = assignment.sizes
        self.report.noise_fraction = assignment.noise_fraction
        self.assignment = assignment
        logger.info(
            f"[{self.topic.name}] {assignment.n_clusters} clusters {assignment.sizes}, "
            f"noise {assignment.noise_fraction:.1%}"
        )
        return assignment

    def _evaluate(self, assignment: ClusterAssignment) -> Optional[Dict[str, Optional[str]]]:
        reference = self.inputs.gold if self.inputs.gold is not None else self.inputs.propagated
        if reference is None:
            raise DataError("no gold or propagated labels")
        majority = majority_label(assignment, reference)
        self.report.majority = {
            str(c): {"label": m.label, "tie": m.tie, "support": m.support} for c, m in sorted(majority.items())
        }
        predicted = predicted_classes(assignment, majority)
        if self.inputs.gold is not None:
            self.report.metrics = prf(predicted, self.inputs.gold).to_dict()
        if self.inputs.propagated is not None:
            in_topic = {u: v for u, v in self.inputs.propagated.items() if u in predicted}
            self.report.overlap = label_overlap(predicted, in_topic, [Stance.PRO.value, Stance.ANTI.value])
        return predicted

    def _rwc(self, topic_corpus: Corpus, assignment: ClusterAssignment) -> None:
        first, second = _largest_two(assignment)
        membership = groups_from_clusters(assignment.clustered_users(), first, second)
        graph = build_user_graph(topic_corpus, membership)
        params = self.config.rwc
        try:
            result = rwc(
                graph,
                n_prominent=params.n_prominent,
                mode=params.mode,
                n_walks=params.n_walks,
                seed=derive_seed(self.config.seed, "rwc", self.topic.name),
            )
        except PreconditionError as e:
            raise DataError(str(e)) from e
        self.report.rwc = dict(result.to_dict(), clusters=[first, second])

    def _lexicon(self, topic_corpus: Corpus, assignment: ClusterAssignment) -> None:
        terms = cluster_terms(topic_corpus, assignment.clustered_users(), self.config.lexicon.top, self.inputs.stopwords)
        for cid, entries in sorted(terms.items()):
            self._artifact(f"terms_{cid}", save_terms(entries, self.dir / f"terms_cluster{cid}.csv"))
            self._artifact(f"wordcloud_{cid}", save_wordcloud(entries, self.dir / f"wordcloud_cluster{cid}.json"))
            self.report.lexicon[str(cid)] = [e.to_dict() for e in entries[:10]]

    def _plot(self, layout: Layout2D, assignment: ClusterAssignment, predicted: Optional[Dict[str, Optional[str]]]) -> None:
        from ..plots import emit_scatter_svg

        if predicted is None:
            classes = {u: f"cluster {c}" for u, c in assignment.clustered_users().items()}
        else:
            classes = dict(predicted)
        path = emit_scatter_svg(layout, classes, self.dir / "scatter.svg", title=self.topic.name)
        self._artifact("scatter", path)
        gold = self.inputs.gold
        if gold is not None:
            gold_layout = layout.subset([u for u in layout.user_ids if u in gold])
            if len(gold_layout):
                path = emit_scatter_svg(gold_layout, gold, self.dir / "scatter_gold.svg", title=f"{self.topic.name} (gold)")
                self._artifact("scatter_gold", path)


def _load_inputs(config: PipelineConfig) -> _Inputs:
    corpus, load_report = load_corpus_with_report(config.corpus)
    if config.languages:
        corpus = filter_language(corpus, config.languages)
        logger.info(f"language filter {config.languages}: {len(corpus)} tweets kept")
    vectors = load_embeddings(config.embeddings, dim=None) if config.embeddings is not None else {}
    labels = _stage_labels(config, corpus)
    propagated = None
    if labels is not None:
        propagated = {u: label.value.value for u, label in labels.items() if label.value is not Stance.UNLABELED}
    return _Inputs(
        corpus=corpus,
        gold=load_gold(config.gold) if config.gold is not None else None,
        propagated=propagated,
        tweet_vectors=vectors,
        embedder=HashEmbedder(config.hash_embedder),
        stopwords=load_stopwords(config.lexicon.stopwords),
    )


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run every topic, then AMI across topics, and write all reports.

    Topics run on a thread pool unless ``config.deterministic``. Each
    topic's report is flushed even when a stage fails; the first failure
    (in topic order) is re-raised after the summary is written.
    Raises:
        StageError: Naming the failed stage and topic.
    """
    config.out.mkdir(parents=True, exist_ok=True)
    try:
        inputs = _load_inputs(config)
    except (StancelabError, OSError) as e:
        raise StageError("ingest", "*", e) from e

    runs = [_TopicRun(config, topic, inputs) for topic in config.topic_specs]
    outcomes: List[Optional[StageError]] = []

    def attempt(run: _TopicRun) -> Optional[StageError]:
        try:
            run.run()
        except StageError as e:
            return e
        return None

    if config.deterministic or len(runs) == 1:
        outcomes = [attempt(run) for run in runs]
    else:
        with ThreadPoolExecutor(max_workers=min(config.threads, len(runs))) as pool:
            outcomes = list(pool.map(attempt, runs))

    partitions = {run.topic.name: run.assignment.by_user() for run in runs if run.assignment is not None}
    topics, matrix = ami_matrix(partitions) if partitions else ([], np.zeros((0, 0)))
    if topics:
        save_ami_matrix(topics, matrix, config.out / "ami.csv")
        if config.plots:
            from ..plots import emit_heatmap_svg

            emit_heatmap_svg(matrix, config.out / "ami.svg", names=topics, title="AMI between topics")

    result = PipelineResult([run.report for run in runs], topics, matrix)
    write_json(config.out / "report.json", _json_safe(result.to_dict()))

    failures = [e for e in outcomes if e is not None]
    if failures:
        raise failures[0]
    return result
