"""
Stancelab - Polarization
Random Walk Controversy over a retweet-similarity user graph
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from sklearn.preprocessing import normalize

from .corpus import Corpus
from .embed import retweet_count_matrix
from .errors import DataError, FormatError, PreconditionError

logger = logging.getLogger(__name__)

GROUP_A, GROUP_B = "A", "B"
MAX_WALK_STEPS = 10_000


class RwcParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_prominent: int = Field(default=10, ge=1)
    mode: Literal["exact", "monte_carlo"] = "exact"
    n_walks: int = Field(default=10_000, ge=1)


@dataclass(frozen=True)
class UserGraph:
    """Undirected weighted user graph with an A/B group tag per node"""

    user_ids: Tuple[str, ...]
    groups: Tuple[str, ...]
    weights: sparse.csr_matrix
    dropped: Dict[str, List[str]] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.user_ids)
        if len(self.groups) != n or self.weights.shape != (n, n):
            raise PreconditionError("user ids, groups and weights disagree in size")
        bad = set(self.groups) - {GROUP_A, GROUP_B}
        if bad:
            raise PreconditionError(f"unknown group tags {sorted(bad)}")
        for g in (GROUP_A, GROUP_B):
            if g not in self.groups:
                raise DataError(f"group {g} has no users")

    @classmethod
    def from_adjacency(cls, user_ids: Sequence[str], groups: Sequence[str], weights) -> "UserGraph":
        matrix = sparse.csr_matrix(weights, dtype=np.float64)
        matrix.setdiag(0.0)
        matrix.eliminate_zeros()
        return cls(tuple(user_ids), tuple(groups), matrix)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.weights.indptr)

    def members(self, group: str) -> List[int]:
        return [i for i, g in enumerate(self.groups) if g == group]


@dataclass(frozen=True)
class RwcResult:
    p_aa: float
    p_ab: float
    p_ba: float
    p_bb: float
    rwc: float
    n_prominent: int
    unabsorbed_fraction: float
    mode: str

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def build_user_graph(corpus: Corpus, membership: Mapping[str, str]) -> UserGraph:
    """Cosine-similarity graph of users' retweeted-account count vectors.

    Members missing from the corpus, or without any retweet, are dropped
    with a warning and listed in ``UserGraph.dropped``.
    """
    absent = sorted(u for u in membership if u not in corpus.users)
    retweeters = {t.user_id for t in corpus if t.is_retweet}
    no_retweets = sorted(u for u in membership if u in corpus.users and u not in retweeters)
    if absent:
        logger.warning(f"{len(absent)} group members are not in the corpus; dropped")
    if no_retweets:
        logger.warning(f"{len(no_retweets)} group members have no retweets; dropped")

    kept = [u for u in membership if u in retweeters]
    users, _, counts = retweet_count_matrix(corpus, kept)
    unit = normalize(counts, norm="l2", axis=1)
    similarity = (unit @ unit.T).tocsr()
    similarity.setdiag(0.0)
    similarity.data = np.minimum(similarity.data, 1.0)
    similarity.data[similarity.data <= 0] = 0.0
    similarity.eliminate_zeros()
    similarity.sort_indices()
    return UserGraph(
        tuple(users),
        tuple(membership[u] for u in users),
        similarity,
        dropped={"absent": absent, "no_retweets": no_retweets},
    )


def prominent_nodes(graph: UserGraph, group: str, n: int) -> List[str]:
    """The n highest-degree users of ``group``; ties by user id."""
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    members = graph.members(group)
    if not members:
        raise PreconditionError(f"group {group} is empty")
    if n > len(members):
        logger.warning(f"group {group}: n_prominent {n} clamped to group size {len(members)}")
        n = len(members)
    degrees = graph.degrees
    ranked = sorted(members, key=lambda i: (-degrees[i], graph.user_ids[i]))
    return [graph.user_ids[i] for i in ranked[:n]]


def _can_reach(graph: UserGraph, absorbing: np.ndarray) -> np.ndarray:
    """True for absorbing nodes and transient nodes whose component touches one."""
    transient = np.flatnonzero(~absorbing)
    reach = absorbing.copy()
    if transient.size == 0:
        return reach
    rows = graph.weights[transient]
    n_components, component = connected_components(rows[:, transient], directed=False)
    touches = np.asarray(rows[:, np.flatnonzero(absorbing)].sum(axis=1)).ravel() > 0
    good = np.zeros(n_components, dtype=bool)
    good[np.unique(component[touches])] = True
    reach[transient] = good[component]
    return reach


def _exact(
    graph: UserGraph, absorbing: np.ndarray, target_a: np.ndarray, starts: np.ndarray, reach: np.ndarray
) -> np.ndarray:
    """Probability of absorption into A's prominent set for each start node."""
    degrees = np.asarray(graph.weights.sum(axis=1)).ravel()
    solve_for = np.flatnonzero(reach & ~absorbing)
    if solve_for.size == 0:
        return np.zeros(starts.size)
    inv = sparse.diags(1.0 / degrees[solve_for])
    rows = inv @ graph.weights[solve_for]
    system = sparse.identity(solve_for.size, format="csc") - rows[:, solve_for].tocsc()
    rhs = np.asarray(rows[:, np.flatnonzero(target_a)].sum(axis=1)).ravel()
    solution = np.atleast_1d(spsolve(system, rhs))
    position = {node: i for i, node in enumerate(solve_for)}
    return np.array([solution[position[s]] for s in starts])


def _monte_carlo(
    graph: UserGraph,
    absorbing: np.ndarray,
    target_a: np.ndarray,
    starts: np.ndarray,
    reach: np.ndarray,
    n_walks: int,
    rng: np.random.Generator,
) -> Tuple[int, int, int]:
    """(walks absorbed in A, walks absorbed in B, unabsorbed walks)."""
    w = graph.weights
    cum = np.cumsum(w.data)
    row_base = np.concatenate([[0.0], cum])[w.indptr[:-1]]
    row_total = np.asarray(w.sum(axis=1)).ravel()

    position = starts[rng.integers(0, starts.size, size=n_walks)]
    # walks that can never be absorbed are not simulated
    alive = reach[position] & (row_total[position] > 0)
    stuck = int(np.sum(~alive))
    hit_a = hit_b = 0
    for _ in range(MAX_WALK_STEPS):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        here = position[idx]
        draws = row_base[here] + rng.random(idx.size) * row_total[here]
        slot = np.searchsorted(cum, draws, side="right")
        slot = np.minimum(slot, w.indptr[here + 1] - 1)
        nxt = w.indices[slot]
        position[idx] = nxt
        done = absorbing[nxt]
        hit_a += int(np.sum(target_a[nxt[done]]))
        hit_b += int(np.sum(done)) - int(np.sum(target_a[nxt[done]]))
        alive[idx[done]] = False
    stuck += int(np.sum(alive))
    return hit_a, hit_b, stuck


def rwc(
    graph: UserGraph,
    n_prominent: int = 10,
    mode: str = "exact",
    n_walks: int = 10_000,
    seed: int = 0,
) -> RwcResult:
    """Random Walk Controversy between groups A and B.

    Walks start at non-prominent nodes of a group, move along edges with
    probability proportional to weight and stop at any prominent node of
    either group. P_XY is the probability that a walk from X ends in Y's
    prominent set. Starts with no path to a prominent node count as
    unabsorbed and are excluded from the conditional probabilities.
    Args:
        graph: User graph with A/B tags.
        n_prominent: Prominent nodes per group (clamped to group size).
        mode: "exact" solves the absorbing chain, "monte_carlo" samples
            ``n_walks`` walks per group of at most 10,000 steps.
        seed: Monte Carlo seed.
    Returns:
        RwcResult with rwc = p_aa*p_bb - p_ab*p_ba in [-1, 1].
    Raises:
        PreconditionError: A group has no members beyond its prominent nodes.
    """
    if mode not in ("exact", "monte_carlo"):
        raise PreconditionError(f"unknown rwc mode: {mode}")
    index = {u: i for i, u in enumerate(graph.user_ids)}
    prominent = {g: [index[u] for u in prominent_nodes(graph, g, n_prominent)] for g in (GROUP_A, GROUP_B)}
    n = len(graph.user_ids)
    absorbing = np.zeros(n, dtype=bool)
    target_a = np.zeros(n, dtype=bool)
    absorbing[prominent[GROUP_A] + prominent[GROUP_B]] = True
    target_a[prominent[GROUP_A]] = True
    reach = _can_reach(graph, absorbing)

    probs: Dict[str, Tuple[float, float]] = {}
    unabsorbed = total = 0
    streams = np.random.SeedSequence(seed).spawn(2)
    for g, stream in zip((GROUP_A, GROUP_B), streams):
        starts = np.array([i for i in graph.members(g) if not absorbing[i]], dtype=np.int64)
        if starts.size == 0:
            raise PreconditionError(
                f"group {g} has {len(prominent[g])} members, all prominent; "
                f"no walk starts beyond n_prominent={n_prominent}"
            )
        if mode == "exact":
            ok = reach[starts]
            total += starts.size
            unabsorbed += int(np.sum(~ok))
            if not ok.any():
                probs[g] = (0.0, 0.0)
                continue
            to_a = float(np.mean(_exact(graph, absorbing, target_a, starts[ok], reach)))
            probs[g] = (to_a, 1.0 - to_a)
        else:
            hit_a, hit_b, stuck = _monte_carlo(
                graph, absorbing, target_a, starts, reach, n_walks, np.random.default_rng(stream)
            )
            total += n_walks
            unabsorbed += stuck
            absorbed = hit_a + hit_b
            probs[g] = (hit_a / absorbed, hit_b / absorbed) if absorbed else (0.0, 0.0)

    p_aa, p_ab = probs[GROUP_A]
    p_ba, p_bb = probs[GROUP_B][0], probs[GROUP_B][1]
    fraction = unabsorbed / total if total else 0.0
    if fraction > 0:
        logger.warning(f"rwc: {fraction:.1%} of walks never reach a prominent node")
    return RwcResult(
        p_aa=p_aa,
        p_ab=p_ab,
        p_ba=p_ba,
        p_bb=p_bb,
        rwc=p_aa * p_bb - p_ab * p_ba,
        n_prominent=min(n_prominent, len(prominent[GROUP_A]), len(prominent[GROUP_B])),
        unabsorbed_fraction=fraction,
        mode=mode,
    )


def load_groups(path: Union[str, Path]) -> Dict[str, str]:
    """Read a ``user_id,group`` CSV with groups A and B."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"user_id", "group"} - set(df.columns)
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    groups = dict(zip(df["user_id"], df["group"].str.strip().str.upper()))
    bad = set(groups.values()) - {GROUP_A, GROUP_B}
    if bad:
        raise FormatError(f"{path}: unknown groups {sorted(bad)}")
    return groups


def groups_from_clusters(clusters: Mapping[str, int], first: int, second: int) -> Dict[str, str]:
    """Tag members of cluster ``first`` as A and of ``second`` as B."""
    return {u: GROUP_A if c == first else GROUP_B for u, c in clusters.items() if c in (first, second)}
