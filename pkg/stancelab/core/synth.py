"""
Stancelab - Synthetic Corpora
Seeded two-group corpus generator with planted stance ground truth
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..utils import atomic_path
from .corpus import Corpus, Tweet, save_corpus
from .errors import PreconditionError
from .evaluate import save_gold
from .labelprop import UserProfile

logger = logging.getLogger(__name__)

SIDES = ("pro", "anti")
CONSONANTS = "bcdfghklmnprstvyz"
VOWELS = "aeiou"
SYLLABLES = tuple(c + v for c in CONSONANTS for v in VOWELS)
WORD_SYLLABLES = 3
SEED_FRACTION = 0.1
BASE_TIMESTAMP = 1_500_000_000

# profile text that the packaged seed rules recognize
PROFILE_MARKERS = {"pro": "AK Parti gönüllüsü", "anti": "CHP üyesi"}


class SynthParams(BaseModel):
    """Size, separation and homophily knobs of the generator"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_users_per_group: int = Field(default=500, ge=1)
    n_tweets_per_user: float = Field(default=20.0, gt=0)
    vocab_shared: int = Field(default=200, ge=1)
    vocab_exclusive_per_group: int = Field(default=200, ge=0)
    topic_names: List[str] = Field(default_factory=lambda: ["topic"], min_length=1)
    retweet_rate: float = Field(default=0.3, ge=0.0, le=1.0)
    cross_rate: float = Field(default=0.05, ge=0.0, le=1.0)
    tokens_per_tweet: int = Field(default=8, ge=1)
    popularity_exponent: float = Field(default=1.1, ge=0.0)
    lang: str = "tr"
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("topic_names")
    @classmethod
    def _check_topics(cls, names: List[str]) -> List[str]:
        if len(set(names)) != len(names):
            raise ValueError("topic names must be unique")
        for name in names:
            if not name or name != name.lower() or " " in name:
                raise ValueError(f"topic name {name!r} must be a lowercase single word")
        return names

    @property
    def exclusive_weight(self) -> float:
        """Share of tokens drawn from the group's own vocabulary."""
        return self.vocab_exclusive_per_group / (self.vocab_shared + self.vocab_exclusive_per_group)


@dataclass(frozen=True)
class SynthCorpus:
    """Generated corpus with its planted truth.

    ``gold`` is the finest planted class per user (the stance, or
    ``<stance>.<k>`` after planting sub-communities); ``groups`` always
    holds the stance. ``topic_sides`` gives the side each user takes on
    each topic.
    """

    corpus: Corpus
    gold: Dict[str, str]
    seed_subset: Dict[str, str]
    groups: Dict[str, str]
    topic_sides: Dict[str, Dict[str, str]]
    profiles: Tuple[UserProfile, ...]
    params: SynthParams
    n_subgroups: int = 1
    independent: bool = field(default=False, compare=False)


def _vocabulary(rng: np.random.Generator, n_words: int, banned: Sequence[str]) -> List[str]:
    """``n_words`` distinct consonant-vowel words containing none of ``banned``."""
    space = len(SYLLABLES) ** WORD_SYLLABLES
    words: List[str] = []
    for index in rng.permutation(space):
        parts = []
        for _ in range(WORD_SYLLABLES):
            index, digit = divmod(int(index), len(SYLLABLES))
            parts.append(SYLLABLES[digit])
        word = "".join(parts)
        if any(b in word for b in banned):
            continue
        words.append(word)
        if len(words) == n_words:
            return words
    raise PreconditionError(f"cannot generate {n_words} distinct words")


def _balanced_sides(rng: np.random.Generator, users: Sequence[str]) -> Dict[str, str]:
    half = len(users) // 2
    order = rng.permutation(len(users))
    return {users[i]: SIDES[0] if rank < half else SIDES[1] for rank, i in enumerate(order)}


def _build(params: SynthParams, n_subgroups: int = 1, independent: bool = False) -> SynthCorpus:
    rng = np.random.default_rng(params.seed)
    n = params.n_users_per_group
    users = [f"u{i:05d}" for i in range(2 * n)]
    groups = {u: SIDES[0] if i < n else SIDES[1] for i, u in enumerate(users)}

    subgroup: Dict[str, int] = {}
    for side in SIDES:
        members = [u for u in users if groups[u] == side]
        for rank, i in enumerate(rng.permutation(len(members))):
            subgroup[members[i]] = rank * n_subgroups // len(members)

    topic_sides: Dict[str, Dict[str, str]] = {}
    for position, topic in enumerate(params.topic_names):
        if independent and position > 0:
            topic_sides[topic] = _balanced_sides(rng, users)
        else:
            topic_sides[topic] = dict(groups)

    n_excl = params.vocab_exclusive_per_group
    n_sub = n_excl if n_subgroups > 1 else 0
    banned = list(params.topic_names) + ["rt", "number"]
    words = _vocabulary(rng, params.vocab_shared + 2 * n_excl + 2 * n_subgroups * n_sub, banned)
    shared = words[: params.vocab_shared]
    cursor = params.vocab_shared
    exclusive: Dict[str, List[str]] = {}
    for side in SIDES:
        exclusive[side] = words[cursor : cursor + n_excl]
        cursor += n_excl
    sub_vocab: Dict[Tuple[str, int], List[str]] = {}
    for side in SIDES:
        for k in range(n_subgroups):
            sub_vocab[(side, k)] = words[cursor : cursor + n_sub]
            cursor += n_sub

    p_excl = params.exclusive_weight

    def text_for(user: str, topic: str) -> str:
        side = topic_sides[topic][user]
        own_sub = sub_vocab.get((side, subgroup[user])) if n_sub else None
        tokens = []
        for _ in range(params.tokens_per_tweet):
            if n_excl and rng.random() < p_excl:
                pool = own_sub if own_sub and rng.random() < 0.5 else exclusive[side]
            else:
                pool = shared
            tokens.append(pool[rng.integers(len(pool))])
        tokens.insert(int(rng.integers(len(tokens) + 1)), topic)
        return " ".join(tokens)

    # every user opens each topic with an original tweet
    plan: List[Tuple[str, str, bool]] = []
    for user in users:
        for topic in params.topic_names:
            count = max(1, int(rng.poisson(params.n_tweets_per_user)))
            for slot in range(count):
                plan.append((user, topic, slot > 0 and rng.random() < params.retweet_rate))

    tweets: List[Tweet] = []
    originals: Dict[Tuple[str, str], List[Tweet]] = {}
    for user, topic, is_retweet in plan:
        if is_retweet:
            continue
        tweet = Tweet(
            tweet_id=f"t{len(tweets):07d}",
            user_id=user,
            text=text_for(user, topic),
            timestamp=BASE_TIMESTAMP + 60 * len(tweets),
            lang=params.lang,
        )
        tweets.append(tweet)
        originals.setdefault((topic, topic_sides[topic][user]), []).append(tweet)

    popularity: Dict[Tuple[str, str], np.ndarray] = {}
    for key, pool in originals.items():
        ranks = rng.permutation(len(pool)) + 1.0
        weights = ranks ** -params.popularity_exponent
        popularity[key] = weights / weights.sum()

    for user, topic, is_retweet in plan:
        if not is_retweet:
            continue
        side = topic_sides[topic][user]
        target = side if rng.random() >= params.cross_rate else [s for s in SIDES if s != side][0]
        pool = originals.get((topic, target), [])
        weights = popularity.get((topic, target))
        source = None
        for _ in range(8):
            if not pool:
                break
            candidate = pool[int(rng.choice(len(pool), p=weights))]
            if candidate.user_id != user:
                source = candidate
                break
        if source is None:
            continue
        tweets.append(
            Tweet(
                tweet_id=f"t{len(tweets):07d}",
                user_id=user,
                text=f"RT @{source.user_id}: {source.text}",
                retweeted_tweet_id=source.tweet_id,
                retweeted_user_id=source.user_id,
                timestamp=BASE_TIMESTAMP + 60 * len(tweets),
                lang=params.lang,
            )
        )

    seed_subset: Dict[str, str] = {}
    for side in SIDES:
        members = [u for u in users if groups[u] == side]
        n_seeds = max(1, int(round(SEED_FRACTION * len(members))))
        for i in sorted(rng.choice(len(members), size=n_seeds, replace=False)):
            seed_subset[members[i]] = side

    profiles = tuple(
        UserProfile(
            user_id=u,
            screen_name=u,
            name=f"user {u}",
            description=PROFILE_MARKERS[seed_subset[u]] if u in seed_subset else "",
        )
        for u in users
    )

    gold = {u: f"{groups[u]}.{subgroup[u]}" if n_subgroups > 1 else groups[u] for u in users}
    logger.debug(f"synthesized {len(tweets)} tweets for {len(users)} users")
    return SynthCorpus(
        corpus=Corpus(tweets),
        gold=gold,
        seed_subset=dict(sorted(seed_subset.items())),
        groups=groups,
        topic_sides=topic_sides,
        profiles=profiles,
        params=params,
        n_subgroups=n_subgroups,
        independent=independent,
    )


def generate(params: SynthParams = SynthParams()) -> SynthCorpus:
    """Two stance groups whose topics all follow group membership.

    Each tweet mixes shared words with the author's group words (weight
    ``exclusive_weight``) and contains the topic name. Retweets stay in the
    group with probability 1 - cross_rate and favor popular tweets.
    """
    return _build(params)


def independent_topics(params: SynthParams) -> SynthCorpus:
    """Like generate, but every topic after the first splits users at random."""
    if len(params.topic_names) < 2:
        raise PreconditionError("independent topics need at least two topic names")
    return _build(params, independent=True)


def plant_subgroups(synth: SynthCorpus, k: int) -> SynthCorpus:
    """Regenerate ``synth`` with k sub-communities per group.

    Sub-communities get vocabulary of their own on top of the group words;
    gold becomes ``<stance>.<index>``. k = 1 returns ``synth`` unchanged.
    Raises:
        PreconditionError: If k < 1 or k exceeds the group size.
    """
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if k == 1:
        return synth
    if k > synth.params.n_users_per_group:
        raise PreconditionError(f"k={k} exceeds group size {synth.params.n_users_per_group}")
    if synth.params.vocab_exclusive_per_group == 0:
        raise PreconditionError("sub-communities need vocab_exclusive_per_group >= 1")
    return _build(synth.params, n_subgroups=k, independent=synth.independent)


def save_synth(synth: SynthCorpus, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write corpus.jsonl, gold.csv, seeds.csv and profiles.jsonl under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": save_corpus(synth.corpus, out / "corpus.jsonl"),
        "gold": save_gold(synth.gold, out / "gold.csv"),
    }
    seeds = pd.DataFrame(sorted(synth.seed_subset.items()), columns=["user_id", "label"])
    with atomic_path(out / "seeds.csv") as tmp:
        seeds.to_csv(tmp, index=False, lineterminator="\n")
    paths["seeds"] = out / "seeds.csv"
    with atomic_path(out / "profiles.jsonl") as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            for p in synth.profiles:
                record = {"user_id": p.user_id, "screen_name": p.screen_name, "name": p.name, "description": p.description}
                f.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
                f.write("\n")
    paths["profiles"] = out / "profiles.jsonl"
    return paths


def retweet_components(corpus: Corpus) -> List[frozenset]:
    """Connected components of the undirected retweeter-author graph."""
    edges = [(t.user_id, t.retweeted_user_id) for t in corpus if t.is_retweet]
    if not edges:
        return []
    nodes = sorted({u for edge in edges for u in edge})  # type: ignore[type-var]
    index = {u: i for i, u in enumerate(nodes)}
    rows = [index[a] for a, _ in edges]
    cols = [index[b] for _, b in edges]
    adjacency = sparse.coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(len(nodes), len(nodes)))
    _, component = connected_components(adjacency, directed=False)
    members: Dict[int, set] = {}
    for node, c in zip(nodes, component):
        members.setdefault(int(c), set()).add(node)
    return sorted((frozenset(m) for m in members.values()), key=min)
