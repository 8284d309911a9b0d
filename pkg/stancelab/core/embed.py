"""
Stancelab - Embeddings
Tweet vectors (file ingest or signed character n-gram hashing) and per-user mean vectors
"""

import json
import logging
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse
from sklearn.feature_extraction.text import HashingVectorizer

from ..utils import atomic_path
from .corpus import DEFAULT_PREPROCESS, Corpus, PreprocessConfig, preprocess
from .errors import DataError, FormatError, PreconditionError

logger = logging.getLogger(__name__)

MAGIC = b"STLV"
DEFAULT_DIM = 512


@dataclass(frozen=True)
class TweetVector:
    tweet_id: str
    vec: np.ndarray

    def __post_init__(self):
        if self.vec.ndim != 1:
            raise FormatError(f"tweet {self.tweet_id}: vector must be one-dimensional")
        if not np.all(np.isfinite(self.vec)):
            raise FormatError(f"tweet {self.tweet_id}: vector has non-finite components")


@dataclass(frozen=True)
class UserVector:
    user_id: str
    vec: np.ndarray
    n_tweets: int

    def __post_init__(self):
        if self.n_tweets < 1:
            raise PreconditionError(f"user {self.user_id}: n_tweets must be >= 1")


class HashEmbedderParams(BaseModel):
    """Signed feature hashing over word-boundary padded character n-grams"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: int = Field(default=DEFAULT_DIM, ge=2)
    ngram_range: Tuple[int, int] = (3, 5)
    salt: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_range(self) -> "HashEmbedderParams":
        lo, hi = self.ngram_range
        if not 1 <= lo <= hi:
            raise ValueError(f"ngram_range must satisfy 1 <= min <= max, got {self.ngram_range}")
        return self


def char_ngrams(token: str, min_n: int, max_n: int) -> Iterator[str]:
    """Character n-grams of ``<token>``, shortest first."""
    padded = f"<{token}>"
    for n in range(min_n, max_n + 1):
        for i in range(len(padded) - n + 1):
            yield padded[i : i + n]


class HashEmbedder:
    """Deterministic stand-in for a sentence encoder"""

    def __init__(self, params: HashEmbedderParams = HashEmbedderParams()):
        self.params = params
        lo, hi = params.ngram_range
        salt = params.salt

        def analyzer(tokens: Sequence[str]) -> List[str]:
            return [f"{salt}:{gram}" for token in tokens for gram in char_ngrams(token, lo, hi)]

        self._vectorizer = HashingVectorizer(
            analyzer=analyzer,
            n_features=params.dim,
            alternate_sign=True,
            norm="l2",
            dtype=np.float64,
        )

    @property
    def dim(self) -> int:
        return self.params.dim

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        return self.embed_many([tokens])[0]

    def embed_many(self, docs: Iterable[Sequence[str]]) -> np.ndarray:
        docs = [list(d) for d in docs]
        if not docs:
            return np.zeros((0, self.dim))
        return self._vectorizer.transform(docs).toarray()


@lru_cache(maxsize=8)
def _embedder(params: HashEmbedderParams) -> HashEmbedder:
    return HashEmbedder(params)


def hash_embed(tokens: Sequence[str], params: HashEmbedderParams = HashEmbedderParams()) -> np.ndarray:
    """Unit-norm hashed vector for ``tokens``; zero vector when there are no n-grams."""
    return _embedder(params).embed(tokens)


# Embedding files


def _load_binary(data: bytes, path: Path, dim: Optional[int]) -> Dict[str, TweetVector]:
    if len(data) < 8:
        raise FormatError(f"{path}: truncated header")
    (file_dim,) = struct.unpack_from("<I", data, 4)
    if dim is not None and file_dim != dim:
        raise FormatError(f"{path}: dimension {file_dim}, expected {dim}")
    record_bytes = 4 * file_dim
    vectors: Dict[str, TweetVector] = {}
    offset = 8
    while offset < len(data):
        if offset + 2 > len(data):
            raise FormatError(f"{path}: truncated record at byte {offset}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        end = offset + id_len + record_bytes
        if end > len(data):
            raise FormatError(f"{path}: truncated record at byte {offset - 2}")
        tweet_id = data[offset : offset + id_len].decode("utf-8")
        vec = np.frombuffer(data, dtype="<f4", count=file_dim, offset=offset + id_len).astype(np.float64)
        offset = end
        if tweet_id in vectors:
            raise FormatError(f"{path}: duplicate tweet_id {tweet_id}")
        vectors[tweet_id] = TweetVector(tweet_id, vec)
    return vectors


def _load_jsonl(text: str, path: Path, dim: Optional[int]) -> Dict[str, TweetVector]:
    vectors: Dict[str, TweetVector] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            tweet_id = str(record["tweet_id"])
            vec = np.asarray(record["vec"], dtype=np.float64)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{path}:{lineno}: bad embedding record ({e})") from e
        expected = dim if dim is not None else (next(iter(vectors.values())).vec.shape[0] if vectors else None)
        if vec.ndim != 1 or (expected is not None and vec.shape[0] != expected):
            raise FormatError(f"{path}:{lineno}: tweet {tweet_id} has dimension {vec.size}, expected {expected}")
        if tweet_id in vectors:
            raise FormatError(f"{path}:{lineno}: duplicate tweet_id {tweet_id}")
        vectors[tweet_id] = TweetVector(tweet_id, vec)
    return vectors


def load_embeddings(path: Union[str, Path], dim: Optional[int] = DEFAULT_DIM) -> Dict[str, TweetVector]:
    """Read tweet vectors from the STLV binary format or JSONL.

    The format is detected from the leading magic bytes.
    Args:
        path: Embedding file.
        dim: Required dimension; None accepts whatever the file declares.
    Raises:
        OSError: If the file cannot be read.
        FormatError: On a dimension mismatch, duplicate id or corrupt record.
    """
    path = Path(path)
    data = path.read_bytes()
    if data.startswith(MAGIC):
        vectors = _load_binary(data, path, dim)
    else:
        vectors = _load_jsonl(data.decode("utf-8"), path, dim)
    logger.debug(f"loaded {len(vectors)} tweet vectors from {path}")
    return vectors


def save_embeddings(
    vectors: Mapping[str, Union[TweetVector, np.ndarray]], path: Union[str, Path], format: str = "binary"
) -> Path:
    """Write tweet vectors as STLV binary (float32) or JSONL."""
    items = [(tid, v.vec if isinstance(v, TweetVector) else np.asarray(v)) for tid, v in vectors.items()]
    dims = {vec.shape[0] for _, vec in items}
    if len(dims) > 1:
        raise PreconditionError(f"mixed vector dimensions {sorted(dims)}")
    with atomic_path(path) as tmp:
        if format == "binary":
            dim = dims.pop() if dims else DEFAULT_DIM
            with open(tmp, "wb") as f:
                f.write(MAGIC + struct.pack("<I", dim))
                for tid, vec in items:
                    raw = tid.encode("utf-8")
                    f.write(struct.pack("<H", len(raw)))
                    f.write(raw)
                    f.write(np.asarray(vec, dtype="<f4").tobytes())
        elif format == "jsonl":
            with open(tmp, "w", encoding="utf-8", newline="\n") as f:
                for tid, vec in items:
                    f.write(json.dumps({"tweet_id": tid, "vec": [float(x) for x in vec]}))
                    f.write("\n")
        else:
            raise PreconditionError(f"unknown embedding format: {format}")
    return Path(path)


# User vectors


def user_vectors(
    corpus: Corpus,
    tweet_vecs: Mapping[str, Union[TweetVector, np.ndarray]],
    embedder: Optional[HashEmbedder] = None,
    preprocess_cfg: PreprocessConfig = DEFAULT_PREPROCESS,
) -> List[UserVector]:
    """Mean tweet vector per user of a topic-filtered corpus.

    Tweets without a supplied vector are embedded with ``embedder``.
    Args:
        corpus: Topic-filtered corpus.
        tweet_vecs: Precomputed vectors by tweet id.
        embedder: Fallback for tweets missing from ``tweet_vecs``.
        preprocess_cfg: Tokenization for the fallback.
    Returns:
        One UserVector per user, in corpus user order.
    Raises:
        DataError: If a tweet has no vector and there is no embedder.
    """
    resolved: Dict[str, np.ndarray] = {}
    missing = []
    for tweet in corpus:
        vec = tweet_vecs.get(tweet.tweet_id)
        if vec is None:
            missing.append(tweet)
        else:
            resolved[tweet.tweet_id] = vec.vec if isinstance(vec, TweetVector) else np.asarray(vec, dtype=np.float64)

    if missing:
        if embedder is None:
            raise DataError(f"no vector for tweet {missing[0].tweet_id} and no embedder configured")
        computed = embedder.embed_many(preprocess(t.text, preprocess_cfg) for t in missing)
        for tweet, vec in zip(missing, computed):
            resolved[tweet.tweet_id] = vec
        logger.debug(f"hash-embedded {len(missing)} tweets")

    dims = {v.shape[0] for v in resolved.values()}
    if len(dims) > 1:
        raise DataError(f"tweet vectors have mixed dimensions {sorted(dims)}")

    result = []
    for user_id, tweet_ids in corpus.users.items():
        stacked = np.stack([resolved[tid] for tid in tweet_ids]).astype(np.float64)
        result.append(UserVector(user_id, stacked.mean(axis=0), len(tweet_ids)))
    return result


def stack_user_vectors(vectors: Sequence[UserVector]) -> Tuple[List[str], np.ndarray]:
    """User ids and an (n, d) matrix."""
    if not vectors:
        return [], np.zeros((0, 0))
    return [v.user_id for v in vectors], np.stack([v.vec for v in vectors])


def save_user_vectors(vectors: Sequence[UserVector], path: Union[str, Path]) -> Path:
    with atomic_path(path) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            for uv in vectors:
                record = {"user_id": uv.user_id, "n_tweets": uv.n_tweets, "vec": [float(x) for x in uv.vec]}
                f.write(json.dumps(record, sort_keys=True))
                f.write("\n")
    return Path(path)


def load_user_vectors(path: Union[str, Path]) -> List[UserVector]:
    vectors = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                vectors.append(
                    UserVector(
                        user_id=str(record["user_id"]),
                        vec=np.asarray(record["vec"], dtype=np.float64),
                        n_tweets=int(record.get("n_tweets", 1)),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: bad user vector record ({e})") from e
    return vectors


def retweet_count_matrix(
    corpus: Corpus, users: Optional[Sequence[str]] = None
) -> Tuple[List[str], List[str], sparse.csr_matrix]:
    """Per-user counts of retweets by retweeted account.
    Args:
        corpus: Tweets and retweets.
        users: Row order. Defaults to every user with at least one retweet.
    Returns:
        (user ids, account ids, csr matrix of shape (users, accounts))
    """
    if users is None:
        users = list(dict.fromkeys(t.user_id for t in corpus if t.is_retweet))
    row_of = {u: i for i, u in enumerate(users)}
    accounts = sorted({t.retweeted_user_id for t in corpus if t.is_retweet})  # type: ignore[type-var]
    col_of = {a: j for j, a in enumerate(accounts)}
    rows, cols = [], []
    for tweet in corpus:
        if tweet.is_retweet and tweet.user_id in row_of:
            rows.append(row_of[tweet.user_id])
            cols.append(col_of[tweet.retweeted_user_id])
    counts = sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.float64), (rows, cols)), shape=(len(users), len(accounts))
    )
    counts.sum_duplicates()
    return list(users), accounts, counts
