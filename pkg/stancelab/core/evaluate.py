"""
Stancelab - Evaluation
Majority labeling of clusters, precision/recall/F1, Jaccard overlap and AMI
"""

import logging
from collections import Counter
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path
from typing import AbstractSet, Dict, Hashable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import adjusted_mutual_info_score, precision_recall_fscore_support

from ..utils import atomic_path
from .cluster import NOISE, ClusterAssignment
from .errors import DataError, FormatError, PreconditionError

logger = logging.getLogger(__name__)

UNKNOWN = "unknown"
_UNPREDICTED = "__unpredicted__"

GoldLabels = Dict[str, str]


class ClusterLabel(NamedTuple):
    label: str
    tie: bool
    support: int


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricReport:
    per_class: Dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_users: int
    n_unpredicted: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "per_class": {c: asdict(m) for c, m in sorted(self.per_class.items())},
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "n_users": self.n_users,
            "n_unpredicted": self.n_unpredicted,
        }


def load_gold(path: Union[str, Path]) -> GoldLabels:
    """Read a ``user_id,label`` CSV of gold classes."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"user_id", "label"} - set(df.columns)
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    gold: GoldLabels = {}
    for user_id, label in zip(df["user_id"], df["label"].str.strip()):
        if not user_id or not label:
            raise FormatError(f"{path}: empty user_id or label")
        gold[user_id] = label
    return gold


def save_gold(gold: Mapping[str, str], path: Union[str, Path]) -> Path:
    df = pd.DataFrame(sorted(gold.items()), columns=["user_id", "label"])
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index=False, lineterminator="\n")
    return Path(path)


def majority_label(assignment: ClusterAssignment, gold: Mapping[str, str]) -> Dict[int, ClusterLabel]:
    """Modal gold class of each cluster's gold-labeled members.

    Ties go to the lexicographically smallest class and set ``tie``;
    clusters without gold members are "unknown".
    """
    counts: Dict[int, Counter] = {c: Counter() for c in range(assignment.n_clusters)}
    for user_id, cluster_id in assignment.clustered_users().items():
        cls = gold.get(user_id)
        if cls is not None:
            counts[cluster_id][cls] += 1

    result: Dict[int, ClusterLabel] = {}
    for cluster_id, counter in counts.items():
        if not counter:
            result[cluster_id] = ClusterLabel(UNKNOWN, False, 0)
            continue
        top = max(counter.values())
        winners = sorted(cls for cls, n in counter.items() if n == top)
        result[cluster_id] = ClusterLabel(winners[0], len(winners) > 1, top)
        if len(winners) > 1:
            logger.warning(f"cluster {cluster_id}: majority tie between {winners}, using '{winners[0]}'")
    return result


def predicted_classes(
    assignment: ClusterAssignment, majority: Mapping[int, ClusterLabel]
) -> Dict[str, Optional[str]]:
    """Class per clustered user; None for noise and unknown-labeled clusters."""
    predicted: Dict[str, Optional[str]] = {}
    for user_id, cluster_id in assignment.by_user().items():
        if cluster_id == NOISE:
            predicted[user_id] = None
            continue
        label = majority[cluster_id].label
        predicted[user_id] = None if label == UNKNOWN else label
    return predicted


def prf(predicted: Mapping[str, Optional[str]], gold: Mapping[str, str]) -> MetricReport:
    """Per-class and macro precision, recall and F1 over gold users that were clustered.

    Unpredicted users (noise, unknown) lower recall but never precision.
    Undefined precision is reported as 0.
    Raises:
        DataError: If no gold user appears in ``predicted``.
    """
    users = [u for u in gold if u in predicted]
    if not users:
        raise DataError("predicted and gold labels share no users")
    classes = sorted({gold[u] for u in users})
    y_true = [gold[u] for u in users]
    y_pred = [predicted[u] if predicted[u] not in (None, UNKNOWN) else _UNPREDICTED for u in users]

    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=classes, average=None, zero_division=0
    )
    per_class = {
        cls: ClassMetrics(float(p), float(r), float(f), int(s))
        for cls, p, r, f, s in zip(classes, precision, recall, f1, support)
    }
    return MetricReport(
        per_class=per_class,
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        n_users=len(users),
        n_unpredicted=sum(1 for p in y_pred if p == _UNPREDICTED),
    )


def jaccard_overlap(set_a: AbstractSet, set_b: AbstractSet) -> float:
    """|A & B| / |A | B|; two empty sets overlap fully (1.0)."""
    union = set_a | set_b
    if not union:
        return 1.0
    return len(set_a & set_b) / len(union)


def label_overlap(
    predicted: Mapping[str, Optional[str]], reference: Mapping[str, str], labels: Optional[Sequence[str]] = None
) -> Dict[str, float]:
    """Per-label Jaccard overlap between predicted and reference user sets."""
    if labels is None:
        labels = sorted({v for v in predicted.values() if v is not None} | set(reference.values()))
    return {
        label: jaccard_overlap(
            {u for u, v in predicted.items() if v == label},
            {u for u, v in reference.items() if v == label},
        )
        for label in labels
    }


def ami(partition_u: Mapping[Hashable, Hashable], partition_v: Mapping[Hashable, Hashable]) -> float:
    """Adjusted mutual information with arithmetic-mean normalization.

    Expected MI is exact under the hypergeometric model. When both
    partitions are all-singletons or both are one cluster the adjustment is
    undefined and the result is 1.0 (the partitions are then identical).
    Raises:
        PreconditionError: If the partitions cover different elements.
        DataError: With fewer than two elements.
    """
    if set(partition_u) != set(partition_v):
        raise PreconditionError("partitions must be over the same element set")
    n = len(partition_u)
    if n < 2:
        raise DataError(f"AMI needs at least 2 common elements, got {n}")
    elements = sorted(partition_u, key=str)
    u = [partition_u[e] for e in elements]
    v = [partition_v[e] for e in elements]
    n_u, n_v = len(set(u)), len(set(v))
    if (n_u == n_v == n) or (n_u == n_v == 1):
        return 1.0
    return float(adjusted_mutual_info_score(u, v, average_method="arithmetic"))


def ami_matrix(partitions: Mapping[str, Mapping[str, int]]) -> Tuple[List[str], np.ndarray]:
    """AMI between every pair of topic clusterings.

    Each pair is compared on the users clustered (non-noise) in both; a
    pair with fewer than two shared users is NaN.
    """
    topics = list(partitions)
    clean = {t: {u: c for u, c in p.items() if c != NOISE} for t, p in partitions.items()}
    matrix = np.full((len(topics), len(topics)), np.nan)
    for i, j in combinations(range(len(topics)), 2):
        common = clean[topics[i]].keys() & clean[topics[j]].keys()
        if len(common) < 2:
            logger.warning(f"AMI {topics[i]}/{topics[j]}: only {len(common)} shared users")
            continue
        value = ami({u: clean[topics[i]][u] for u in common}, {u: clean[topics[j]][u] for u in common})
        matrix[i, j] = matrix[j, i] = value
    for i, t in enumerate(topics):
        if len(clean[t]) >= 2:
            matrix[i, i] = ami(clean[t], clean[t])
    return topics, matrix


def save_ami_matrix(topics: Sequence[str], matrix: np.ndarray, path: Union[str, Path]) -> Path:
    df = pd.DataFrame(matrix, index=list(topics), columns=list(topics))
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index_label="topic", lineterminator="\n", float_format="%.6f")
    return Path(path)
