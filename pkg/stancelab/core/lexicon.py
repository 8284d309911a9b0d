"""
Stancelab - Lexicon
Valence and prominence of terms per cluster, word-cloud export
"""

import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import AbstractSet, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import pandas as pd

from ..utils import atomic_path, atomic_write_text
from .corpus import DEFAULT_PREPROCESS, Corpus, PreprocessConfig, preprocess
from .errors import DataError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

Tokens = Sequence[str]


@dataclass(frozen=True)
class TermStats:
    term: str
    tf_a: int
    tf_b: int
    size_a: int
    size_b: int

    def __post_init__(self):
        if self.tf_a < 0 or self.tf_b < 0:
            raise PreconditionError(f"term {self.term!r}: negative frequency")
        if self.tf_a > self.size_a or self.tf_b > self.size_b:
            raise PreconditionError(f"term {self.term!r}: frequency exceeds set size")


@dataclass(frozen=True)
class ProminenceEntry:
    term: str
    tf_a: int
    tf_b: int
    valence: float
    prominence: float

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def term_stats(tweets_a: Iterable[Tokens], tweets_b: Iterable[Tokens]) -> Dict[str, TermStats]:
    """Term frequencies of two tweet sets; set size is the total token count.
    Raises:
        PreconditionError: If either set has no tokens.
    """
    counts_a = Counter(token for tweet in tweets_a for token in tweet)
    counts_b = Counter(token for tweet in tweets_b for token in tweet)
    size_a, size_b = sum(counts_a.values()), sum(counts_b.values())
    if size_a == 0 or size_b == 0:
        raise PreconditionError("both tweet sets must contain at least one token")
    return {
        term: TermStats(term, counts_a[term], counts_b[term], size_a, size_b)
        for term in sorted(counts_a.keys() | counts_b.keys())
    }


def valence(stats: TermStats) -> float:
    """2 * rate_a / (rate_a + rate_b) - 1, in [-1, 1]."""
    rate_a = stats.tf_a / stats.size_a if stats.size_a else 0.0
    rate_b = stats.tf_b / stats.size_b if stats.size_b else 0.0
    if rate_a + rate_b == 0:
        raise DomainError(f"term {stats.term!r} occurs in neither set")
    return 2.0 * (rate_a / (rate_a + rate_b)) - 1.0


def prominence(stats: TermStats) -> float:
    """ln(tf_a) * valence.
    Raises:
        DomainError: If tf_a is 0.
    """
    if stats.tf_a < 1:
        raise DomainError(f"term {stats.term!r} does not occur in the first set")
    return math.log(stats.tf_a) * valence(stats)


def top_terms(
    cluster_a: Iterable[Tokens],
    cluster_b: Iterable[Tokens],
    k: int = 50,
    stopwords: AbstractSet[str] = frozenset(),
    number_token: Optional[str] = "number",
) -> List[ProminenceEntry]:
    """The k most prominent terms of ``cluster_a`` against ``cluster_b``.

    Terms absent from ``cluster_a``, stopwords and the number token are
    skipped. Ties are broken by term.
    """
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    excluded = set(stopwords)
    if number_token:
        excluded.add(number_token)
    entries = [
        ProminenceEntry(s.term, s.tf_a, s.tf_b, valence(s), prominence(s))
        for s in term_stats(cluster_a, cluster_b).values()
        if s.tf_a > 0 and s.term not in excluded
    ]
    entries.sort(key=lambda e: (-e.prominence, e.term))
    return entries[:k]


def one_vs_rest(
    clusters: Mapping[int, Sequence[Tokens]],
    k: int = 50,
    stopwords: AbstractSet[str] = frozenset(),
    number_token: Optional[str] = "number",
) -> Dict[int, List[ProminenceEntry]]:
    """Top terms of each cluster against all other clusters pooled."""
    if len(clusters) < 2:
        raise PreconditionError("need at least two clusters to compare")
    result = {}
    for cid in sorted(clusters):
        rest = [tweet for other, tweets in clusters.items() if other != cid for tweet in tweets]
        result[cid] = top_terms(clusters[cid], rest, k, stopwords, number_token)
    return result


def load_stopwords(path: Optional[Union[str, Path]] = None) -> frozenset:
    """One word per line; '#' starts a comment line. Packaged list when ``path`` is None."""
    if path is None:
        text = resources.files("stancelab").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = (line.strip() for line in text.splitlines())
    return frozenset(w for w in words if w and not w.startswith("#"))


def save_terms(entries: Sequence[ProminenceEntry], path: Union[str, Path]) -> Path:
    """CSV ``term,tf_a,tf_b,valence,prominence`` in rank order."""
    df = pd.DataFrame(
        [e.to_dict() for e in entries], columns=["term", "tf_a", "tf_b", "valence", "prominence"]
    )
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index=False, lineterminator="\n", float_format="%.6f")
    return Path(path)


def wordcloud_data(entries: Sequence[ProminenceEntry]) -> List[Dict[str, object]]:
    return [{"term": e.term, "weight": max(e.prominence, 0.0)} for e in entries]


def save_wordcloud(entries: Sequence[ProminenceEntry], path: Union[str, Path]) -> Path:
    return atomic_write_text(path, json.dumps(wordcloud_data(entries), ensure_ascii=False, indent=2) + "\n")


def cluster_terms(
    corpus: Corpus,
    clusters: Mapping[str, int],
    k: int = 50,
    stopwords: AbstractSet[str] = frozenset(),
    cfg: PreprocessConfig = DEFAULT_PREPROCESS,
) -> Dict[int, List[ProminenceEntry]]:
    """Top terms per cluster from its members' tweets.

    Two clusters are compared with each other, more than two one-vs-rest.
    Noise (negative ids) is ignored.
    Raises:
        DataError: With fewer than two clusters or a cluster without tokens.
    """
    tokens: Dict[int, List[List[str]]] = {}
    for user_id, cid in clusters.items():
        if cid < 0:
            continue
        docs = tokens.setdefault(cid, [])
        docs.extend(preprocess(t.text, cfg) for t in corpus.tweets_of(user_id))
    if len(tokens) < 2:
        raise DataError(f"need at least two clusters, got {len(tokens)}")
    empty = sorted(cid for cid, docs in tokens.items() if not any(docs))
    if empty:
        raise DataError(f"clusters {empty} have no tokens")
    if len(tokens) == 2:
        a, b = sorted(tokens)
        return {
            a: top_terms(tokens[a], tokens[b], k, stopwords, cfg.number_token),
            b: top_terms(tokens[b], tokens[a], k, stopwords, cfg.number_token),
        }
    return one_vs_rest(tokens, k, stopwords, cfg.number_token)
