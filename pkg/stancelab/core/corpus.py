"""
Stancelab - Corpus
Tweet data model, JSONL ingestion, text preprocessing and topic filtering
"""

import json
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from ..utils import atomic_path
from .errors import FormatError, PreconditionError

logger = logging.getLogger(__name__)

URL_RE = re.compile(r"(?:https?://|www\.)\S+")
MENTION_RE = re.compile(r"@\w+")
APOSTROPHE_RE = re.compile(r"['’ʼ]")
NON_LETTER_RE = re.compile(r"[^\w\s]|_")

ASCII_FOLD = str.maketrans({"ç": "c", "ğ": "g", "ı": "i", "ö": "o", "ş": "s", "ü": "u", "â": "a", "î": "i", "û": "u"})

MAX_MALFORMED_FRACTION = 0.5


def fold_case(text: str) -> str:
    """Lowercase text, mapping dotted capital I to a plain i.

    ``"İ".lower()`` yields ``i`` followed by a combining dot, which the
    letter filter would otherwise split off.
    """
    return unicodedata.normalize("NFC", text).replace("İ", "i").lower()


@dataclass(frozen=True)
class Tweet:
    """One corpus record"""

    tweet_id: str
    user_id: str
    text: str
    retweeted_tweet_id: Optional[str] = None
    retweeted_user_id: Optional[str] = None
    timestamp: float = 0
    lang: str = "und"

    def __post_init__(self):
        if not isinstance(self.tweet_id, str) or not self.tweet_id:
            raise PreconditionError("tweet_id must be a nonempty string")
        if not isinstance(self.user_id, str) or not self.user_id:
            raise PreconditionError(f"tweet {self.tweet_id}: user_id must be a nonempty string")
        if not isinstance(self.text, str):
            raise PreconditionError(f"tweet {self.tweet_id}: text must be a string")
        if (self.retweeted_tweet_id is None) != (self.retweeted_user_id is None):
            raise PreconditionError(
                f"tweet {self.tweet_id}: retweeted_tweet_id and retweeted_user_id must be both present or both absent"
            )
        if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, (int, float)) or self.timestamp < 0:
            raise PreconditionError(f"tweet {self.tweet_id}: timestamp must be a number >= 0")

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_tweet_id is not None

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "Tweet":
        return cls(
            tweet_id=data.get("tweet_id"),  # type: ignore[arg-type]
            user_id=data.get("user_id"),  # type: ignore[arg-type]
            text=data.get("text"),  # type: ignore[arg-type]
            retweeted_tweet_id=data.get("retweeted_tweet_id"),  # type: ignore[arg-type]
            retweeted_user_id=data.get("retweeted_user_id"),  # type: ignore[arg-type]
            timestamp=data.get("timestamp", 0),  # type: ignore[arg-type]
            lang=data.get("lang") or "und",  # type: ignore[arg-type]
        )


class Corpus:
    """Immutable, insertion-ordered collection of tweets with a user index"""

    def __init__(self, tweets: Iterable[Tweet] = ()):
        ordered: List[Tweet] = []
        by_id: Dict[str, Tweet] = {}
        users: Dict[str, List[str]] = {}
        for tweet in tweets:
            if tweet.tweet_id in by_id:
                raise PreconditionError(f"duplicate tweet_id {tweet.tweet_id}")
            ordered.append(tweet)
            by_id[tweet.tweet_id] = tweet
            users.setdefault(tweet.user_id, []).append(tweet.tweet_id)
        self._tweets: Tuple[Tweet, ...] = tuple(ordered)
        self._by_id = MappingProxyType(by_id)
        self._users = MappingProxyType({u: tuple(ids) for u, ids in users.items()})

    @property
    def tweets(self) -> Tuple[Tweet, ...]:
        return self._tweets

    @property
    def users(self) -> Mapping[str, Tuple[str, ...]]:
        """user_id -> tweet ids, in first-appearance order"""
        return self._users

    @property
    def user_ids(self) -> List[str]:
        return list(self._users)

    def __len__(self) -> int:
        return len(self._tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self._tweets)

    def __contains__(self, tweet_id: object) -> bool:
        return tweet_id in self._by_id

    def get(self, tweet_id: str) -> Optional[Tweet]:
        return self._by_id.get(tweet_id)

    def tweets_of(self, user_id: str) -> List[Tweet]:
        return [self._by_id[t] for t in self._users.get(user_id, ())]

    def subset(self, keep: Callable[[Tweet], bool]) -> "Corpus":
        return Corpus(t for t in self._tweets if keep(t))

    def __repr__(self) -> str:
        return f"Corpus(tweets={len(self._tweets)}, users={len(self._users)})"


@dataclass
class LoadReport:
    """Outcome of a corpus load"""

    path: str
    n_lines: int = 0
    n_loaded: int = 0
    skipped: Counter = field(default_factory=Counter)

    @property
    def n_skipped(self) -> int:
        return sum(self.skipped.values())

    def to_dict(self) -> Dict[str, object]:
        return {
            "path": self.path,
            "n_lines": self.n_lines,
            "n_loaded": self.n_loaded,
            "n_skipped": self.n_skipped,
            "skipped": dict(sorted(self.skipped.items())),
        }


class TopicSpec(BaseModel):
    """A target topic and the keywords that select its tweets"""

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    keywords: frozenset[str]

    def model_post_init(self, __context) -> None:
        if not self.keywords:
            raise PreconditionError(f"topic '{self.name}' has no keywords")
        for kw in self.keywords:
            if not kw or kw != fold_case(kw):
                raise PreconditionError(f"topic '{self.name}': keyword {kw!r} must be nonempty lowercase")

    def with_ascii_variants(self) -> "TopicSpec":
        """Add English-letter spellings of each keyword (erdoğan -> erdogan)."""
        folded = {kw.translate(ASCII_FOLD) for kw in self.keywords}
        return TopicSpec(name=self.name, keywords=self.keywords | folded)


class PreprocessConfig(BaseModel):
    """Text normalization switches"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lowercase: bool = True
    strip_links_mentions: bool = True
    strip_nonletters: bool = True
    number_token: str = Field(default="number", min_length=1)
    normalizer: Optional[Callable[[str], str]] = None


DEFAULT_PREPROCESS = PreprocessConfig()


def _record_from_line(line: str) -> Tweet:
    data = json.loads(line)
    if not isinstance(data, dict):
        raise FormatError("line is not a JSON object")
    return Tweet.from_dict(data)


def load_corpus_with_report(path: Union[str, Path]) -> Tuple[Corpus, LoadReport]:
    """Load a JSONL corpus and report skipped records.
    Args:
        path: JSONL file, one tweet object per line.
    Returns:
        (corpus, report)
    Raises:
        OSError: If the file cannot be read.
        FormatError: If more than half of the nonblank lines are malformed.
    """
    path = Path(path)
    report = LoadReport(path=str(path))
    tweets: List[Tweet] = []
    seen: set = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            report.n_lines += 1
            try:
                tweet = _record_from_line(line)
            except json.JSONDecodeError:
                report.skipped["invalid_json"] += 1
                logger.debug(f"{path}:{lineno}: invalid JSON")
                continue
            except (FormatError, PreconditionError) as e:
                report.skipped["invalid_record"] += 1
                logger.debug(f"{path}:{lineno}: {e}")
                continue
            if tweet.tweet_id in seen:
                report.skipped["duplicate_tweet_id"] += 1
                logger.debug(f"{path}:{lineno}: duplicate tweet_id {tweet.tweet_id}")
                continue
            seen.add(tweet.tweet_id)
            tweets.append(tweet)

    report.n_loaded = len(tweets)
    if report.n_lines and report.n_skipped / report.n_lines > MAX_MALFORMED_FRACTION:
        raise FormatError(f"{path}: {report.n_skipped} of {report.n_lines} lines are malformed")
    if report.n_skipped:
        logger.warning(f"{path}: skipped {report.n_skipped} of {report.n_lines} records {dict(report.skipped)}")
    return Corpus(tweets), report


def load_corpus(path: Union[str, Path], format: str = "jsonl") -> Corpus:
    """Load a tweet corpus; see load_corpus_with_report for the skip report."""
    if format != "jsonl":
        raise FormatError(f"unsupported corpus format: {format}")
    corpus, _ = load_corpus_with_report(path)
    return corpus


def dumps_tweet(tweet: Tweet) -> str:
    """Canonical JSON line for a tweet (sorted keys, compact, UTF-8)."""
    return json.dumps(tweet.to_dict(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def save_corpus(corpus: Corpus, path: Union[str, Path]) -> Path:
    """Write canonical JSONL atomically."""
    with atomic_path(path) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            for tweet in corpus:
                f.write(dumps_tweet(tweet))
                f.write("\n")
    return Path(path)


def corpus_stats(corpus: Corpus, report: Optional[LoadReport] = None) -> Dict[str, object]:
    """Summary used by the ingest report."""
    stats: Dict[str, object] = {
        "n_tweets": len(corpus),
        "n_users": len(corpus.users),
        "n_retweets": sum(1 for t in corpus if t.is_retweet),
        "languages": dict(sorted(Counter(t.lang for t in corpus).items())),
    }
    if report is not None:
        stats["load"] = report.to_dict()
    return stats


def is_numeric_char(ch: str) -> bool:
    return unicodedata.category(ch).startswith("N")


def replace_numbers(text: str, token: str) -> str:
    """Replace each maximal run of numeric characters with `` token ``."""
    parts: List[str] = []
    in_run = False
    for ch in text:
        if is_numeric_char(ch):
            if not in_run:
                parts.append(f" {token} ")
            in_run = True
        else:
            parts.append(ch)
            in_run = False
    return "".join(parts)


def preprocess(text: str, cfg: PreprocessConfig = DEFAULT_PREPROCESS) -> List[str]:
    """Normalize tweet text into tokens.

    Steps, in order: case folding; removal of links and @-mentions; each
    maximal run of numeric characters (any Unicode N* category, so ``²``,
    ``½`` and ``Ⅻ`` too) becomes ``cfg.number_token``; removal of every
    character that is not a letter or whitespace (apostrophes are dropped
    so Turkish suffixes stay attached, other symbols become spaces); the
    optional normalizer hook; whitespace split.
    """
    if not text:
        return []
    if cfg.lowercase:
        text = fold_case(text)
    if cfg.strip_links_mentions:
        text = URL_RE.sub(" ", text)
        text = MENTION_RE.sub(" ", text)
    text = replace_numbers(text, cfg.number_token)
    if cfg.strip_nonletters:
        text = APOSTROPHE_RE.sub("", text)
        text = NON_LETTER_RE.sub(" ", text)
    if cfg.normalizer is not None:
        text = cfg.normalizer(text)
    return text.split()


def _check_topic(topic: TopicSpec) -> None:
    if not topic.keywords:
        raise PreconditionError(f"topic '{topic.name}' has no keywords")


def matches_topic(tweet: Tweet, topic: TopicSpec) -> bool:
    text = fold_case(tweet.text)
    return any(kw in text for kw in topic.keywords)


def filter_topic(corpus: Corpus, topic: TopicSpec) -> Corpus:
    """Tweets whose lowercased raw text contains any keyword (substring match)."""
    _check_topic(topic)
    filtered = corpus.subset(lambda t: matches_topic(t, topic))
    logger.debug(f"topic '{topic.name}': {len(filtered)} of {len(corpus)} tweets")
    return filtered


def filter_language(corpus: Corpus, languages: Iterable[str]) -> Corpus:
    """Tweets whose trusted lang tag is one of ``languages``."""
    keep = {lang.lower() for lang in languages}
    return corpus.subset(lambda t: t.lang.lower() in keep)
