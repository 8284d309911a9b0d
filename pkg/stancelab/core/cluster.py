"""
Stancelab - Clustering
Hierarchical density-based clustering of 2-D layouts: mutual reachability,
Prim's MST, single-linkage tree, condensed tree and excess-of-mass selection.
"""

import json
import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from ..utils import atomic_path, atomic_write_text
from .errors import ClusterLookupError, FormatError, PreconditionError
from .project import Layout2D

logger = logging.getLogger(__name__)

NOISE = -1

CONDENSED_DTYPE = np.dtype(
    [("parent", np.int64), ("child", np.int64), ("lambda_val", np.float64), ("child_size", np.int64)]
)


class ClusterParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    min_cluster_size: int = Field(default=25, ge=2)
    min_samples: Optional[int] = Field(default=None, ge=1)

    @property
    def effective_min_samples(self) -> int:
        return self.min_samples if self.min_samples is not None else self.min_cluster_size


@dataclass(frozen=True)
class SubCluster:
    node: int
    members: Tuple[int, ...]
    birth_lambda: float
    stability: float


@dataclass(frozen=True)
class ClusterAssignment:
    """Flat labels plus the condensed hierarchy they were selected from.

    Condensed-tree node ids: points are 0..n-1, the root cluster is n, and
    further clusters are numbered in order of appearance.
    """

    user_ids: Tuple[str, ...]
    labels: np.ndarray
    condensed_tree: np.ndarray
    stabilities: Tuple[float, ...]
    cluster_nodes: Tuple[int, ...]
    node_stability: Dict[int, float]
    min_cluster_size: int

    @property
    def n_points(self) -> int:
        return len(self.labels)

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_nodes)

    @property
    def root(self) -> int:
        return self.n_points

    @property
    def sizes(self) -> List[int]:
        return [int(np.sum(self.labels == c)) for c in range(self.n_clusters)]

    @property
    def noise_fraction(self) -> float:
        if self.n_points == 0:
            return 0.0
        return float(np.mean(self.labels == NOISE))

    def by_user(self) -> Dict[str, int]:
        return {u: int(label) for u, label in zip(self.user_ids, self.labels)}

    def clustered_users(self) -> Dict[str, int]:
        """user -> cluster, noise dropped"""
        return {u: c for u, c in self.by_user().items() if c != NOISE}

    def node_of(self, cluster: int) -> int:
        """Condensed-tree node behind flat cluster ``cluster``."""
        if not 0 <= cluster < self.n_clusters:
            raise ClusterLookupError(f"no flat cluster {cluster}")
        return self.cluster_nodes[cluster]

    def _children(self) -> Dict[int, List[int]]:
        children: Dict[int, List[int]] = defaultdict(list)
        for row in self.condensed_tree:
            children[int(row["parent"])].append(int(row["child"]))
        return children

    def cluster_ids(self) -> List[int]:
        """All condensed-tree cluster nodes, root included."""
        if self.n_points == 0:
            return []
        nodes = {self.root}
        nodes.update(int(c) for c in self.condensed_tree["child"] if c >= self.n_points)
        return sorted(nodes)

    def members(self, node: int) -> List[int]:
        """Point indices in the subtree of condensed-tree node ``node``."""
        if node not in self.cluster_ids():
            raise ClusterLookupError(f"no cluster node {node}")
        children = self._children()
        points, stack = [], [node]
        while stack:
            current = stack.pop()
            for child in children.get(current, ()):
                if child < self.n_points:
                    points.append(child)
                else:
                    stack.append(child)
        return sorted(points)

    def tree_json(self) -> str:
        records = [
            {
                "parent": int(r["parent"]),
                "child": int(r["child"]),
                "lambda": float(r["lambda_val"]),
                "size": int(r["child_size"]),
            }
            for r in self.condensed_tree
        ]
        payload = {
            "n_points": self.n_points,
            "root": self.root,
            "selected": list(self.cluster_nodes),
            "stability": {str(k): v for k, v in sorted(self.node_stability.items())},
            "tree": records,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def core_distances(points: np.ndarray, min_samples: int, distances: Optional[np.ndarray] = None) -> np.ndarray:
    """Distance to each point's min_samples-th nearest neighbor, self excluded."""
    if distances is None:
        distances = cdist(points, points)
    ordered = np.sort(distances, axis=1)
    return ordered[:, min_samples]


def mutual_reachability(points: np.ndarray, min_samples: int) -> Tuple[np.ndarray, np.ndarray]:
    """Core distances and the dense matrix max(core_a, core_b, d(a, b)).
    Raises:
        PreconditionError: With fewer than min_samples + 1 points.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < min_samples + 1:
        raise PreconditionError(f"mutual reachability needs at least {min_samples + 1} points, got {n}")
    distances = cdist(points, points)
    core = core_distances(points, min_samples, distances)
    reach = np.maximum(distances, np.maximum.outer(core, core))
    np.fill_diagonal(reach, 0.0)
    return core, reach


def prim_mst(reach: np.ndarray) -> np.ndarray:
    """MST edges (a, b, weight) of a dense matrix; ties go to the lowest index."""
    n = reach.shape[0]
    edges = np.zeros((max(n - 1, 0), 3))
    if n < 2:
        return edges
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    via = np.zeros(n, dtype=np.int64)
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        row = reach[current]
        better = ~in_tree & (row < best)
        best[better] = row[better]
        via[better] = current
        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))
        edges[step] = (via[nxt], nxt, best[nxt])
        in_tree[nxt] = True
        current = nxt
    return edges


def single_linkage(mst: np.ndarray, n: int) -> np.ndarray:
    """Merge table (left, right, distance, size) with new nodes numbered from n."""
    order = np.argsort(mst[:, 2], kind="stable")
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    hierarchy = np.zeros((n - 1, 4))
    next_node = n
    for row, edge in enumerate(mst[order]):
        left, right = find(int(edge[0])), find(int(edge[1]))
        size[next_node] = size[left] + size[right]
        hierarchy[row] = (left, right, edge[2], size[next_node])
        parent[left] = parent[right] = next_node
        next_node += 1
    return hierarchy


def _leaves(hierarchy: np.ndarray, node: int, n: int) -> List[int]:
    out, stack = [], [node]
    while stack:
        current = stack.pop()
        if current < n:
            out.append(current)
        else:
            left, right = hierarchy[current - n, :2].astype(np.int64)
            stack.extend((int(right), int(left)))
    return out


def condense_tree(hierarchy: np.ndarray, n: int, min_cluster_size: int) -> np.ndarray:
    """Walk the merge tree top-down; a split counts only when both sides reach min_cluster_size."""
    root = 2 * n - 2
    relabel = {root: n}
    next_label = n + 1
    rows: List[Tuple[int, int, float, int]] = []

    def size_of(node: int) -> int:
        return 1 if node < n else int(hierarchy[node - n, 3])

    queue = deque([root])
    while queue:
        node = queue.popleft()
        left, right, distance, _ = hierarchy[node - n]
        left, right = int(left), int(right)
        lam = 1.0 / distance if distance > 0 else np.inf
        parent = relabel[node]
        left_size, right_size = size_of(left), size_of(right)

        if left_size >= min_cluster_size and right_size >= min_cluster_size:
            for child, child_size in ((left, left_size), (right, right_size)):
                relabel[child] = next_label
                rows.append((parent, next_label, lam, child_size))
                next_label += 1
                queue.append(child)
            continue

        for child, child_size in ((left, left_size), (right, right_size)):
            if child_size >= min_cluster_size:
                relabel[child] = parent
                queue.append(child)
            else:
                rows.extend((parent, p, lam, 1) for p in _leaves(hierarchy, child, n))

    tree = np.array(rows, dtype=CONDENSED_DTYPE)
    finite = tree["lambda_val"][np.isfinite(tree["lambda_val"])]
    replacement = 2.0 * finite.max() if finite.size else 1.0
    tree["lambda_val"][~np.isfinite(tree["lambda_val"])] = replacement
    return tree


def compute_stability(tree: np.ndarray, root: int) -> Dict[int, float]:
    """Excess of mass per cluster node."""
    births: Dict[int, float] = {root: 0.0}
    for row in tree:
        if row["child"] > root:
            births[int(row["child"])] = float(row["lambda_val"])
    stability = {node: 0.0 for node in births}
    for row in tree:
        parent = int(row["parent"])
        stability[parent] += (float(row["lambda_val"]) - births[parent]) * int(row["child_size"])
    return stability


def _select_clusters(tree: np.ndarray, stability: Dict[int, float], root: int) -> List[int]:
    cluster_rows = tree[tree["child"] > root]
    children: Dict[int, List[int]] = defaultdict(list)
    for row in cluster_rows:
        children[int(row["parent"])].append(int(row["child"]))

    if not children.get(root):
        return [root]

    best = dict(stability)
    selected = {node: True for node in best if node != root}
    for node in sorted(selected, reverse=True):
        subtree = sum(best[c] for c in children.get(node, ()))
        if subtree > best[node]:
            selected[node] = False
            best[node] = subtree
        else:
            stack = list(children.get(node, ()))
            while stack:
                sub = stack.pop()
                selected[sub] = False
                stack.extend(children.get(sub, ()))
    return sorted(node for node, keep in selected.items() if keep)


def _label_points(tree: np.ndarray, chosen: Sequence[int], n: int) -> np.ndarray:
    parent_of = {int(r["child"]): int(r["parent"]) for r in tree}
    chosen_set = set(chosen)
    number = {node: i for i, node in enumerate(sorted(chosen))}
    labels = np.full(n, NOISE, dtype=np.int64)
    for point in range(n):
        node = parent_of.get(point)
        while node is not None and node not in chosen_set:
            node = parent_of.get(node)
        if node is not None:
            labels[point] = number[node]
    return labels


def cluster(
    layout: Union[Layout2D, np.ndarray],
    params: ClusterParams = ClusterParams(),
    user_ids: Optional[Sequence[str]] = None,
) -> ClusterAssignment:
    """Density-based flat clustering with noise.

    Excess-of-mass selection over the condensed tree; the root is selected
    only when it never splits into two clusters of min_cluster_size. Flat
    clusters are numbered by ascending condensed-tree node id.
    Args:
        layout: Layout2D or an (n, 2) array.
        params: Minimum cluster size and min_samples.
        user_ids: Ids for a raw array; taken from the layout otherwise.
    Raises:
        PreconditionError: On empty input.
    """
    if isinstance(layout, Layout2D):
        points, ids = layout.points, layout.user_ids
    else:
        points = np.asarray(layout, dtype=np.float64)
        ids = tuple(user_ids) if user_ids is not None else tuple(str(i) for i in range(points.shape[0]))
    n = points.shape[0]
    if n == 0:
        raise PreconditionError("cannot cluster an empty layout")
    mcs = params.min_cluster_size

    if n < mcs:
        logger.info(f"{n} points < min_cluster_size {mcs}: all noise")
        return ClusterAssignment(
            user_ids=tuple(ids),
            labels=np.full(n, NOISE, dtype=np.int64),
            condensed_tree=np.array([(n, p, 1.0, 1) for p in range(n)], dtype=CONDENSED_DTYPE),
            stabilities=(),
            cluster_nodes=(),
            node_stability={n: 0.0},
            min_cluster_size=mcs,
        )

    min_samples = min(params.effective_min_samples, n - 1)
    _, reach = mutual_reachability(points, min_samples)
    tree = condense_tree(single_linkage(prim_mst(reach), n), n, mcs)

    root = n
    stability = compute_stability(tree, root)
    chosen = _select_clusters(tree, stability, root)
    if chosen == [root]:
        labels = np.zeros(n, dtype=np.int64)
    else:
        labels = _label_points(tree, chosen, n)

    result = ClusterAssignment(
        user_ids=tuple(ids),
        labels=labels,
        condensed_tree=tree,
        stabilities=tuple(stability[c] for c in chosen),
        cluster_nodes=tuple(chosen),
        node_stability=stability,
        min_cluster_size=mcs,
    )
    logger.debug(f"clusters={result.n_clusters} sizes={result.sizes} noise={result.noise_fraction:.3f}")
    return result


def subclusters(assignment: ClusterAssignment, node: int) -> List[SubCluster]:
    """Immediate condensed-tree child clusters of ``node`` with their members.
    Raises:
        ClusterLookupError: If ``node`` is not a cluster node.
    """
    if node not in assignment.cluster_ids():
        raise ClusterLookupError(f"no cluster node {node}")
    n = assignment.n_points
    result = []
    for row in assignment.condensed_tree:
        if int(row["parent"]) == node and int(row["child"]) >= n:
            child = int(row["child"])
            result.append(
                SubCluster(
                    node=child,
                    members=tuple(assignment.members(child)),
                    birth_lambda=float(row["lambda_val"]),
                    stability=assignment.node_stability.get(child, 0.0),
                )
            )
    return sorted(result, key=lambda s: s.node)


def save_assignment(assignment: ClusterAssignment, path: Union[str, Path], tree_path: Optional[Union[str, Path]] = None) -> Path:
    """Write ``user_id,cluster`` CSV and optionally the condensed tree JSON."""
    df = pd.DataFrame({"user_id": list(assignment.user_ids), "cluster": assignment.labels})
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index=False, lineterminator="\n")
    if tree_path is not None:
        atomic_write_text(tree_path, assignment.tree_json() + "\n")
    return Path(path)


def load_cluster_labels(path: Union[str, Path]) -> Dict[str, int]:
    df = pd.read_csv(path, dtype={"user_id": str}, keep_default_na=False)
    missing = {"user_id", "cluster"} - set(df.columns)
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    return {u: int(c) for u, c in zip(df["user_id"], df["cluster"])}


def flat_assignment(labels: Mapping[str, int]) -> ClusterAssignment:
    """ClusterAssignment over saved flat labels, without the hierarchy.

    Cluster ids must be 0..k-1 with -1 for noise.
    """
    values = np.array(list(labels.values()), dtype=np.int64)
    n = len(values)
    k = int(values.max()) + 1 if n else 0
    present = set(values[values != NOISE].tolist())
    if values.size and (values.min() < NOISE or present != set(range(k))):
        raise FormatError(f"cluster ids must be -1 or 0..{k - 1} without gaps")
    return ClusterAssignment(
        user_ids=tuple(labels),
        labels=values,
        condensed_tree=np.zeros(0, dtype=CONDENSED_DTYPE),
        stabilities=(0.0,) * k,
        cluster_nodes=tuple(n + 1 + c for c in range(k)),
        node_stability={},
        min_cluster_size=0,
    )


def load_assignment(path: Union[str, Path]) -> ClusterAssignment:
    return flat_assignment(load_cluster_labels(path))
