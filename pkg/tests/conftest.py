import numpy as np
import pytest

from stancelab.core.corpus import Corpus, Tweet


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    monkeypatch.setenv("STANCELAB_HOME", str(tmp_path / "home"))
    for name in ("STANCELAB_SEED", "STANCELAB_OUT", "STANCELAB_DETERMINISTIC"):
        monkeypatch.delenv(name, raising=False)


class TweetFactory:
    """Builds tweets with sequential ids; retweets copy the source's author."""

    def __init__(self):
        self.count = 0
        self.tweets = []

    def post(self, user, text="", **kwargs):
        self.count += 1
        tweet = Tweet(f"t{self.count}", user, text, **kwargs)
        self.tweets.append(tweet)
        return tweet

    def retweet(self, user, source):
        return self.post(
            user,
            f"RT @{source.user_id}: {source.text}",
            retweeted_tweet_id=source.tweet_id,
            retweeted_user_id=source.user_id,
        )

    def corpus(self):
        return Corpus(self.tweets)


@pytest.fixture
def tweets():
    return TweetFactory()


def make_blobs(n_per_blob=100, dim=512, n_blobs=2, separation=10.0, noise=0.05, latent=2, seed=0):
    """Gaussian blobs that live near a low-dimensional plane per blob.

    Returns (points, membership).
    """
    rng = np.random.default_rng(seed)
    points, membership = [], []
    for b in range(n_blobs):
        center = rng.normal(size=dim)
        center *= separation * (b + 1) / np.linalg.norm(center)
        basis = rng.normal(size=(latent, dim)) / np.sqrt(dim)
        coords = rng.normal(size=(n_per_blob, latent))
        points.append(center + coords @ basis + noise * rng.normal(size=(n_per_blob, dim)) / np.sqrt(dim))
        membership.extend([b] * n_per_blob)
    return np.vstack(points), np.array(membership)


@pytest.fixture
def blobs():
    return make_blobs
