"""
Stancelab - Label Propagation
Seed labels and round-synchronous propagation over co-retweets
"""

import json
import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Set, Tuple, Union

import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..utils import atomic_path
from .corpus import Corpus, fold_case
from .errors import ConfigError, FormatError, PreconditionError

logger = logging.getLogger(__name__)


class Stance(str, Enum):
    PRO = "pro"
    ANTI = "anti"
    UNLABELED = "unlabeled"

    @property
    def opposite(self) -> "Stance":
        if self is Stance.PRO:
            return Stance.ANTI
        if self is Stance.ANTI:
            return Stance.PRO
        return self


class LabelSource(str, Enum):
    SEED = "seed"
    PROPAGATED = "propagated"


@dataclass(frozen=True)
class StanceLabel:
    """A user's stance together with where it came from"""

    value: Stance
    source: Optional[LabelSource] = None
    iteration: int = 0

    def __post_init__(self):
        if self.value is Stance.UNLABELED:
            if self.source is not None:
                raise PreconditionError("an unlabeled stance carries no source")
            return
        if self.source is None:
            raise PreconditionError(f"{self.value.value} label needs a source")
        if self.source is LabelSource.SEED and self.iteration != 0:
            raise PreconditionError("seed labels have iteration 0")
        if self.source is LabelSource.PROPAGATED and self.iteration < 1:
            raise PreconditionError("propagated labels have iteration >= 1")

    @classmethod
    def seed(cls, value: Union[Stance, str]) -> "StanceLabel":
        return cls(Stance(value), LabelSource.SEED, 0)

    @classmethod
    def propagated(cls, value: Union[Stance, str], iteration: int) -> "StanceLabel":
        return cls(Stance(value), LabelSource.PROPAGATED, iteration)

    @classmethod
    def unlabeled(cls) -> "StanceLabel":
        return cls(Stance.UNLABELED)

    def swapped(self) -> "StanceLabel":
        return StanceLabel(self.value.opposite, self.source, self.iteration)


class PropagationParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    min_retweets: int = Field(default=10, ge=1)
    max_iterations: int = Field(default=20, ge=1)


class TraceEntry(NamedTuple):
    new_pro: int
    new_anti: int


class PropagationResult(Mapping[str, StanceLabel]):
    """Final labels (seeds included) plus the per-iteration trace"""

    def __init__(self, labels: Dict[str, StanceLabel], trace: List[TraceEntry]):
        self._labels = dict(labels)
        self.trace: Tuple[TraceEntry, ...] = tuple(trace)

    def __getitem__(self, user_id: str) -> StanceLabel:
        return self._labels[user_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def by_stance(self, stance: Stance) -> Set[str]:
        return {u for u, label in self._labels.items() if label.value is stance}

    def __repr__(self) -> str:
        return f"PropagationResult(labels={len(self._labels)}, iterations={len(self.trace)})"


def build_retweet_index(corpus: Corpus) -> Dict[str, FrozenSet[str]]:
    """Map each retweeted tweet id to the set of users who retweeted it."""
    index: Dict[str, Set[str]] = defaultdict(set)
    for tweet in corpus:
        if tweet.retweeted_tweet_id is not None:
            index[tweet.retweeted_tweet_id].add(tweet.user_id)
    return {tid: frozenset(users) for tid, users in index.items()}


def tweet_authors(corpus: Corpus) -> Dict[str, str]:
    """Original author of every tweet the corpus knows about, posted or retweeted."""
    authors: Dict[str, str] = {}
    for tweet in corpus:
        authors.setdefault(tweet.tweet_id, tweet.user_id)
        if tweet.retweeted_tweet_id is not None:
            authors.setdefault(tweet.retweeted_tweet_id, tweet.retweeted_user_id)  # type: ignore[arg-type]
    return authors


def _endorsers(corpus: Corpus) -> Dict[str, FrozenSet[str]]:
    index = build_retweet_index(corpus)
    authors = tweet_authors(corpus)
    return {tid: users | {authors[tid]} for tid, users in index.items()}


def _endorsement(endorsers: FrozenSet[str], stances: Mapping[str, Stance]) -> Optional[Stance]:
    seen = {stances[u] for u in endorsers if u in stances}
    if len(seen) == 1:
        return seen.pop()
    return None


def _check_seeds(seeds: Mapping[str, StanceLabel]) -> None:
    for user_id, label in seeds.items():
        if label.value is Stance.UNLABELED:
            raise PreconditionError(f"seed user {user_id} has an unlabeled stance")


def propagate(
    corpus: Corpus,
    seeds: Mapping[str, StanceLabel],
    params: PropagationParams = PropagationParams(),
) -> PropagationResult:
    """Spread seed stances through retweets of exclusively endorsed tweets.

    A tweet is endorsed by a side when every currently labeled user among
    its author and retweeters holds that stance. In round k an unlabeled
    user takes a stance after retweeting at least ``min_retweets`` distinct
    tweets endorsed by that side and none endorsed by the other. All of a
    round's decisions use the labels from the end of round k-1.

    Args:
        corpus: Tweets and retweets.
        seeds: Initial Pro/Anti labels. Never overwritten.
        params: Threshold and iteration cap.
    Returns:
        PropagationResult with seeds and propagated labels and the trace.
    Raises:
        PreconditionError: If a seed is Unlabeled.
    """
    _check_seeds(seeds)
    labels: Dict[str, StanceLabel] = dict(seeds)
    endorsers = _endorsers(corpus)

    retweeted_by_user: Dict[str, Set[str]] = defaultdict(set)
    for tweet in corpus:
        if tweet.retweeted_tweet_id is not None:
            retweeted_by_user[tweet.user_id].add(tweet.retweeted_tweet_id)

    trace: List[TraceEntry] = []
    for iteration in range(1, params.max_iterations + 1):
        stances = {u: label.value for u, label in labels.items()}
        endorsed = {tid: _endorsement(users, stances) for tid, users in endorsers.items()}

        fresh: Dict[str, Stance] = {}
        for user_id, retweeted in retweeted_by_user.items():
            if user_id in labels:
                continue
            pro = sum(1 for tid in retweeted if endorsed[tid] is Stance.PRO)
            anti = sum(1 for tid in retweeted if endorsed[tid] is Stance.ANTI)
            if pro >= params.min_retweets and anti == 0:
                fresh[user_id] = Stance.PRO
            elif anti >= params.min_retweets and pro == 0:
                fresh[user_id] = Stance.ANTI

        for user_id in sorted(fresh):
            labels[user_id] = StanceLabel.propagated(fresh[user_id], iteration)
        entry = TraceEntry(
            new_pro=sum(1 for s in fresh.values() if s is Stance.PRO),
            new_anti=sum(1 for s in fresh.values() if s is Stance.ANTI),
        )
        trace.append(entry)
        logger.debug(f"propagation round {iteration}: +{entry.new_pro} pro, +{entry.new_anti} anti")
        if not fresh:
            break
    else:
        logger.info(f"label propagation stopped at max_iterations={params.max_iterations}")

    return PropagationResult(labels, trace)


def propagation_trace(result: PropagationResult) -> List[TraceEntry]:
    """Per-iteration (new_pro, new_anti) counts; the last entry is (0, 0) at a fixpoint."""
    return list(result.trace)


def load_seeds(path: Union[str, Path]) -> Dict[str, StanceLabel]:
    """Read a ``user_id,label`` CSV of pro/anti seeds."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"user_id", "label"} - set(df.columns)
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    seeds: Dict[str, StanceLabel] = {}
    for user_id, label in zip(df["user_id"], df["label"].str.strip().str.lower()):
        if label not in (Stance.PRO.value, Stance.ANTI.value):
            raise FormatError(f"{path}: user {user_id} has label {label!r}, expected pro or anti")
        if not user_id:
            raise FormatError(f"{path}: empty user_id")
        seeds[user_id] = StanceLabel.seed(label)
    return seeds


def save_labels(labels: Mapping[str, StanceLabel], path: Union[str, Path]) -> Path:
    """Write ``user_id,label,source,iteration`` sorted by user id."""
    rows = [
        {
            "user_id": user_id,
            "label": label.value.value,
            "source": label.source.value if label.source else "",
            "iteration": label.iteration,
        }
        for user_id, label in sorted(labels.items())
    ]
    df = pd.DataFrame(rows, columns=["user_id", "label", "source", "iteration"])
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index=False, lineterminator="\n")
    return Path(path)


# Profile-based seeding


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    screen_name: str = ""
    name: str = ""
    description: str = ""

    @property
    def text(self) -> str:
        return " ".join((self.screen_name, self.name, self.description))


class SeedRules(BaseModel):
    """Profile terms that mark a user as pro or anti"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pro: List[str] = Field(default_factory=list)
    anti: List[str] = Field(default_factory=list)

    def patterns(self, stance: Stance) -> List[re.Pattern]:
        terms = self.pro if stance is Stance.PRO else self.anti
        return [re.compile(rf"(?<!\w){re.escape(fold_case(t))}(?!\w)") for t in terms]


def load_seed_rules(path: Optional[Union[str, Path]] = None) -> SeedRules:
    """Load a YAML rule file; the packaged default when ``path`` is None."""
    if path is None:
        text = resources.files("stancelab").joinpath("data/seed_rules.yaml").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        return SeedRules.model_validate(yaml.safe_load(text) or {})
    except ValidationError as e:
        raise ConfigError(f"invalid seed rules: {e}") from e


def load_profiles(path: Union[str, Path]) -> List[UserProfile]:
    profiles = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                profiles.append(
                    UserProfile(
                        user_id=str(data["user_id"]),
                        screen_name=data.get("screen_name") or "",
                        name=data.get("name") or "",
                        description=data.get("description") or "",
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise FormatError(f"{path}:{lineno}: bad profile record ({e})") from e
    return profiles


def seeds_from_profiles(
    profiles: Iterable[UserProfile], rules: SeedRules
) -> Tuple[Dict[str, StanceLabel], List[str]]:
    """Seed users whose profile matches exactly one side's terms.
    Returns:
        (seeds, conflicting user ids)
    """
    pro_patterns = rules.patterns(Stance.PRO)
    anti_patterns = rules.patterns(Stance.ANTI)
    seeds: Dict[str, StanceLabel] = {}
    conflicts: List[str] = []
    for profile in profiles:
        text = fold_case(profile.text)
        is_pro = any(p.search(text) for p in pro_patterns)
        is_anti = any(p.search(text) for p in anti_patterns)
        if is_pro and is_anti:
            conflicts.append(profile.user_id)
        elif is_pro:
            seeds[profile.user_id] = StanceLabel.seed(Stance.PRO)
        elif is_anti:
            seeds[profile.user_id] = StanceLabel.seed(Stance.ANTI)
    if conflicts:
        logger.warning(f"{len(conflicts)} profiles match both sides and were left unlabeled")
    return seeds, conflicts


def audit_labels(labels: Mapping[str, StanceLabel], gold: Mapping[str, str]) -> Dict[str, float]:
    """Compare labels against gold classes for the gold users."""
    agree = disagree = undecided = 0
    for user_id, cls in gold.items():
        label = labels.get(user_id)
        if label is None or label.value is Stance.UNLABELED:
            undecided += 1
        elif label.value.value == cls:
            agree += 1
        else:
            disagree += 1
    decided = agree + disagree
    return {
        "agree": agree,
        "disagree": disagree,
        "undecided": undecided,
        "accuracy": agree / decided if decided else 0.0,
    }
