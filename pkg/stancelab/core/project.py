"""
Stancelab - Projection
Neighbor-preserving 2-D layout of user vectors: exact kNN graph, fuzzy
membership weights, spectral initialization and negative-sampling SGD.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import sparse
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist
from sklearn.manifold import trustworthiness as _sk_trustworthiness

from ..utils import atomic_path
from .errors import FormatError, PreconditionError

logger = logging.getLogger(__name__)

SPREAD = 1.0
NEGATIVE_SAMPLE_RATE = 5
REPULSION_STRENGTH = 1.0
GRAD_CLIP = 4.0
SIGMA_MIN, SIGMA_MAX = 1e-3, 1e3
SIGMA_ITERATIONS = 100
POWER_ITERATIONS = 200
INIT_MAX_COORD = 10.0
KNN_BLOCK = 1024


class ProjectionParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_neighbors: int = Field(default=15, ge=2)
    min_dist: float = Field(default=0.1, ge=0.0)
    n_epochs: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    metric: Literal["euclidean", "cosine"] = "euclidean"
    init: Literal["spectral", "random"] = "spectral"
    # Hogwild threads; layouts are no longer bitwise reproducible
    parallel: bool = False
    n_threads: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _check_min_dist(self) -> "ProjectionParams":
        if self.min_dist >= SPREAD:
            raise ValueError(f"min_dist must be < spread ({SPREAD})")
        return self


@dataclass(frozen=True)
class KnnGraph:
    """Directed kNN graph: row i lists i's k nearest neighbors, nearest first"""

    indices: np.ndarray
    distances: np.ndarray

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def edges(self) -> List[Tuple[int, int, float]]:
        return [
            (i, int(j), float(d))
            for i in range(self.n_points)
            for j, d in zip(self.indices[i], self.distances[i])
        ]


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric membership-strength graph"""

    weights: sparse.csr_matrix
    sigmas: np.ndarray
    rhos: np.ndarray

    @property
    def n_points(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Layout2D:
    user_ids: Tuple[str, ...]
    points: np.ndarray
    params: Optional[ProjectionParams] = None

    def __post_init__(self):
        if self.points.shape != (len(self.user_ids), 2):
            raise PreconditionError(f"points shape {self.points.shape} does not match {len(self.user_ids)} users")
        if not np.all(np.isfinite(self.points)):
            raise PreconditionError("layout has non-finite coordinates")

    def __len__(self) -> int:
        return len(self.user_ids)

    def subset(self, keep: Sequence[str]) -> "Layout2D":
        """Layout restricted to ``keep``, in layout order."""
        wanted = set(keep)
        idx = [i for i, u in enumerate(self.user_ids) if u in wanted]
        return Layout2D(tuple(self.user_ids[i] for i in idx), self.points[idx], self.params)


def _pairwise(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    d = cdist(a, b, metric=metric)
    if metric == "cosine":
        # zero vectors have undefined cosine distance
        d = np.nan_to_num(d, nan=1.0)
        np.clip(d, 0.0, 2.0, out=d)
    return d


def knn_graph(vectors: np.ndarray, k: int, metric: str = "euclidean") -> KnnGraph:
    """Exact k nearest neighbors by brute force, self excluded.

    Ties in distance are broken by lower point index.
    Raises:
        PreconditionError: If there are fewer than k+1 points.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if n < k + 1:
        raise PreconditionError(f"knn_graph needs at least {k + 1} points, got {n}")

    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, KNN_BLOCK):
        stop = min(start + KNN_BLOCK, n)
        block = _pairwise(vectors[start:stop], vectors, metric)
        rows = np.arange(stop - start)
        block[rows, rows + start] = np.inf
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(block, order, axis=1)
    return KnnGraph(indices, distances)


def _solve_sigmas(distances: np.ndarray, rhos: np.ndarray, target: float) -> np.ndarray:
    """Bisection for sigma per row, clamped to [SIGMA_MIN, SIGMA_MAX]."""
    shifted = np.maximum(distances - rhos[:, None], 0.0)

    def mass(sigma: np.ndarray) -> np.ndarray:
        return np.exp(-shifted / sigma[:, None]).sum(axis=1)

    n = distances.shape[0]
    lo = np.full(n, SIGMA_MIN)
    hi = np.full(n, SIGMA_MAX)
    for _ in range(SIGMA_ITERATIONS):
        mid = 0.5 * (lo + hi)
        too_much = mass(mid) > target
        hi = np.where(too_much, mid, hi)
        lo = np.where(too_much, lo, mid)
    sigmas = 0.5 * (lo + hi)
    sigmas[mass(np.full(n, SIGMA_MIN)) >= target] = SIGMA_MIN
    sigmas[mass(np.full(n, SIGMA_MAX)) <= target] = SIGMA_MAX
    return sigmas


def fuzzy_weights(graph: KnnGraph) -> FuzzyGraph:
    """Calibrated membership strengths, symmetrized by fuzzy union.

    rho_i is the distance to i's nearest neighbor and sigma_i is chosen so
    that i's memberships sum to log2(k). Directed weights a, b combine into
    a + b - a*b.
    """
    n, k = graph.indices.shape
    rhos = graph.distances[:, 0].copy()
    sigmas = _solve_sigmas(graph.distances, rhos, float(np.log2(k)))
    vals = np.exp(-np.maximum(graph.distances - rhos[:, None], 0.0) / sigmas[:, None])

    rows = np.repeat(np.arange(n), k)
    directed = sparse.csr_matrix((vals.ravel(), (rows, graph.indices.ravel())), shape=(n, n))
    transposed = directed.T.tocsr()
    weights = directed + transposed - directed.multiply(transposed)
    weights = sparse.csr_matrix(weights)
    weights.eliminate_zeros()
    weights.sort_indices()
    return FuzzyGraph(weights, sigmas, rhos)


@lru_cache(maxsize=32)
def find_ab_params(min_dist: float, spread: float = SPREAD) -> Tuple[float, float]:
    """Fit a, b so that 1/(1 + a*x^(2b)) tracks the offset exponential for min_dist."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros(xv.shape)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    result = -1.0 * np.ones(weights.shape[0], dtype=np.float64)
    n_samples = n_epochs * (weights / weights.max())
    result[n_samples > 0] = float(n_epochs) / n_samples[n_samples > 0]
    return result


def noisy_scale_coords(coords: np.ndarray, rng: np.random.Generator, max_coord: float = INIT_MAX_COORD, noise: float = 1e-4) -> np.ndarray:
    peak = np.abs(coords).max()
    expansion = max_coord / peak if peak > 0 else 1.0
    return coords * expansion + rng.normal(scale=noise, size=coords.shape)


# Initialization


def _component_spectral(weights: sparse.csr_matrix, rng: np.random.Generator) -> Optional[np.ndarray]:
    """Top two nontrivial eigenvectors of D^-1/2 W D^-1/2 by subspace iteration."""
    m = weights.shape[0]
    if m < 3:
        return None
    degree = np.asarray(weights.sum(axis=1)).ravel()
    if np.any(degree <= 0):
        return None
    inv_sqrt = sparse.diags(1.0 / np.sqrt(degree))
    normalized = (inv_sqrt @ weights @ inv_sqrt).tocsr()
    trivial = np.sqrt(degree)
    trivial /= np.linalg.norm(trivial)

    q = rng.standard_normal((m, 2))
    for _ in range(POWER_ITERATIONS):
        q -= np.outer(trivial, trivial @ q)
        q = 0.5 * (q + normalized @ q)
        q, _ = np.linalg.qr(q)
    q -= np.outer(trivial, trivial @ q)
    q, _ = np.linalg.qr(q)
    if not np.all(np.isfinite(q)):
        return None
    return q


def _component_anchors(n_components: int) -> np.ndarray:
    if n_components == 1:
        return np.zeros((1, 2))
    if n_components <= 4:
        return np.vstack([np.eye(2), -np.eye(2)])[:n_components]
    angles = 2.0 * np.pi * np.arange(n_components) / n_components
    return np.column_stack([np.cos(angles), np.sin(angles)])


def multi_component_layout(weights: sparse.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    """Spectral coordinates per connected component, each around its own anchor."""
    n = weights.shape[0]
    n_components, labels = connected_components(weights, directed=False)
    anchors = _component_anchors(n_components)
    if n_components > 1:
        gaps = cdist(anchors, anchors)
        data_range = gaps[gaps > 0].min() / 2.0
    else:
        data_range = 1.0

    result = np.empty((n, 2))
    for c in range(n_components):
        members = np.flatnonzero(labels == c)
        sub = weights[members][:, members].tocsr()
        coords = _component_spectral(sub, rng)
        if coords is None:
            coords = rng.uniform(-1.0, 1.0, size=(members.size, 2))
        peak = np.abs(coords).max()
        if peak > 0:
            coords = coords * (data_range / peak)
        result[members] = coords + anchors[c]
    if n_components > 1:
        logger.debug(f"layout init: {n_components} graph components")
    return result


def initial_coords(graph: FuzzyGraph, params: ProjectionParams, rng: np.random.Generator) -> np.ndarray:
    n = graph.n_points
    if params.init == "spectral":
        try:
            coords = multi_component_layout(graph.weights, rng)
            if np.all(np.isfinite(coords)):
                coords = noisy_scale_coords(coords, rng)
                span = coords.max(axis=0) - coords.min(axis=0)
                span[span == 0] = 1.0
                return INIT_MAX_COORD * (coords - coords.min(axis=0)) / span
        except (np.linalg.LinAlgError, ValueError) as e:
            logger.warning(f"spectral initialization failed ({e}); using random init")
    return rng.uniform(-INIT_MAX_COORD, INIT_MAX_COORD, size=(n, 2))


# Optimization


def _sgd_step(
    emb: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    n_neg: np.ndarray,
    a: float,
    b: float,
    alpha: float,
    rng: np.random.Generator,
) -> None:
    """One batch of attractive and repulsive updates, applied in place."""
    n = emb.shape[0]
    delta = np.zeros_like(emb)

    diff = emb[head] - emb[tail]
    d2 = np.einsum("ij,ij->i", diff, diff)
    safe = np.where(d2 > 0, d2, 1.0)
    coeff = np.where(d2 > 0, -2.0 * a * b * safe ** (b - 1.0) / (a * safe**b + 1.0), 0.0)
    grad = np.clip(coeff[:, None] * diff, -GRAD_CLIP, GRAD_CLIP) * alpha
    for axis in range(2):
        delta[:, axis] += np.bincount(head, grad[:, axis], minlength=n)
        delta[:, axis] -= np.bincount(tail, grad[:, axis], minlength=n)

    sources = np.repeat(head, n_neg)
    if sources.size:
        targets = rng.integers(0, n, size=sources.size)
        diff = emb[sources] - emb[targets]
        d2 = np.einsum("ij,ij->i", diff, diff)
        safe = np.where(d2 > 0, d2, 1.0)
        coeff = np.where(
            d2 > 0, 2.0 * REPULSION_STRENGTH * b / ((0.001 + safe) * (a * safe**b + 1.0)), 0.0
        )
        grad = np.clip(coeff[:, None] * diff, -GRAD_CLIP, GRAD_CLIP)
        # coincident distinct points get the maximal push
        grad[(d2 == 0) & (sources != targets)] = GRAD_CLIP
        grad[sources == targets] = 0.0
        grad *= alpha
        for axis in range(2):
            delta[:, axis] += np.bincount(sources, grad[:, axis], minlength=n)

    emb += delta


def _run_epochs(
    emb: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    epochs_per_sample: np.ndarray,
    params: ProjectionParams,
    a: float,
    b: float,
    rng: np.random.Generator,
) -> None:
    n = emb.shape[0]
    n_epochs = params.n_epochs
    epochs_per_negative = epochs_per_sample / NEGATIVE_SAMPLE_RATE
    next_sample = epochs_per_sample.copy()
    next_negative = epochs_per_negative.copy()
    batch = max(n, 256)

    pool = ThreadPoolExecutor(max_workers=params.n_threads) if params.parallel else None
    worker_rngs = rng.spawn(params.n_threads) if params.parallel else []
    try:
        for epoch in range(n_epochs):
            alpha = 1.0 - epoch / n_epochs
            active = np.flatnonzero(next_sample <= epoch)
            if active.size == 0:
                continue
            n_neg = np.floor((epoch - next_negative[active]) / epochs_per_negative[active])
            n_neg = np.maximum(n_neg, 0).astype(np.int64)
            next_sample[active] += epochs_per_sample[active]
            next_negative[active] += n_neg * epochs_per_negative[active]

            if pool is None:
                for start in range(0, active.size, batch):
                    sel = active[start : start + batch]
                    _sgd_step(emb, head[sel], tail[sel], n_neg[start : start + batch], a, b, alpha, rng)
            else:
                parts = np.array_split(np.arange(active.size), params.n_threads)
                futures = [
                    pool.submit(_sgd_step, emb, head[active[p]], tail[active[p]], n_neg[p], a, b, alpha, r)
                    for p, r in zip(parts, worker_rngs)
                    if p.size
                ]
                for f in futures:
                    f.result()
    finally:
        if pool is not None:
            pool.shutdown()


def optimize_layout(
    graph: FuzzyGraph,
    params: ProjectionParams = ProjectionParams(),
    user_ids: Optional[Sequence[str]] = None,
) -> Layout2D:
    """Lay the weighted graph out in 2-D.

    Spectral initialization (seeded uniform fallback), then attract/repulse
    SGD with 5 negative samples per sampled edge for ``n_epochs`` epochs,
    learning rate decaying linearly from 1 to 0. Bitwise reproducible for a
    fixed seed unless ``params.parallel`` is set.
    """
    n = graph.n_points
    ids = tuple(user_ids) if user_ids is not None else tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise PreconditionError(f"{len(ids)} user ids for {n} points")
    if n == 0:
        return Layout2D((), np.zeros((0, 2)), params)
    if n == 1:
        return Layout2D(ids, np.zeros((1, 2)), params)

    rng = np.random.default_rng(params.seed)
    emb = initial_coords(graph, params, rng).astype(np.float64)

    weights = graph.weights.tocoo()
    keep = weights.data >= weights.data.max() / params.n_epochs
    head = weights.row[keep].astype(np.int64)
    tail = weights.col[keep].astype(np.int64)
    epochs_per_sample = make_epochs_per_sample(weights.data[keep], params.n_epochs)

    a, b = find_ab_params(params.min_dist)
    _run_epochs(emb, head, tail, epochs_per_sample, params, a, b, rng)

    if not np.all(np.isfinite(emb)):
        raise PreconditionError("layout optimization diverged")
    return Layout2D(ids, emb, params)


def project(
    vectors: np.ndarray, params: ProjectionParams = ProjectionParams(), user_ids: Optional[Sequence[str]] = None
) -> Layout2D:
    """kNN graph, fuzzy weights and layout in one call.
    Raises:
        PreconditionError: If n_neighbors is not below the number of points.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    ids = tuple(user_ids) if user_ids is not None else tuple(str(i) for i in range(n))
    if n == 0:
        raise PreconditionError("nothing to project")
    if n == 1:
        return Layout2D(ids, np.zeros((1, 2)), params)
    if params.n_neighbors >= n:
        raise PreconditionError(f"n_neighbors={params.n_neighbors} must be < number of points ({n})")
    graph = fuzzy_weights(knn_graph(vectors, params.n_neighbors, params.metric))
    return optimize_layout(graph, params, ids)


def clamp_neighbors(params: ProjectionParams, n_points: int) -> ProjectionParams:
    """Lower n_neighbors to n_points - 1 when the topic is small."""
    if n_points >= 2 and params.n_neighbors >= n_points:
        logger.warning(f"n_neighbors {params.n_neighbors} clamped to {n_points - 1}")
        try:
            return ProjectionParams.model_validate({**params.model_dump(), "n_neighbors": n_points - 1})
        except ValidationError as e:
            raise PreconditionError(f"{n_points} points are too few to project: {e}") from e
    return params


def trustworthiness(original: np.ndarray, layout: Union[Layout2D, np.ndarray], k: int = 10) -> float:
    """Neighborhood trustworthiness of the layout; k is lowered for small inputs."""
    points = layout.points if isinstance(layout, Layout2D) else np.asarray(layout)
    n = points.shape[0]
    k = min(k, (n - 1) // 2)
    if k < 1:
        return 1.0
    return float(_sk_trustworthiness(np.asarray(original), points, n_neighbors=k))


def save_layout(layout: Layout2D, path: Union[str, Path]) -> Path:
    df = pd.DataFrame({"user_id": list(layout.user_ids), "x": layout.points[:, 0], "y": layout.points[:, 1]})
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index=False, lineterminator="\n", float_format="%.17g")
    return Path(path)


def load_layout(path: Union[str, Path]) -> Layout2D:
    df = pd.read_csv(path, dtype={"user_id": str}, keep_default_na=False)
    missing = {"user_id", "x", "y"} - set(df.columns)
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    return Layout2D(tuple(df["user_id"]), df[["x", "y"]].to_numpy(dtype=np.float64))
