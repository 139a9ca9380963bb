"""Graph representation, ingestion, random generation and node sampling.

Adjacency is kept as a dense float64 matrix; that is comfortably within desk
scale for the graph sizes this package targets (a few thousand nodes).
Graphs are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

PATTERN_MODES = ("column", "row", "concat")


def _read_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh.readlines()
        return
    if hasattr(source, "read"):
        yield from source.read().splitlines()
        return
    yield from source


@dataclass(frozen=True)
class Graph:
    """A (possibly directed, possibly weighted) graph over N nodes.

    adjacency[i, j] is the weight of the edge from node j into node i for
    directed graphs; undirected graphs are exactly symmetric.
    """

    adjacency: np.ndarray
    directed: bool = False
    node_names: tuple[str, ...] | None = None

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("adjacency entries must be finite")
        if np.any(a < 0):
            raise ValueError("adjacency entries must be non-negative")
        if not self.directed and not np.array_equal(a, a.T):
            raise ValueError("undirected graph requires an exactly symmetric adjacency")
        if self.node_names is not None and len(self.node_names) != a.shape[0]:
            raise ValueError("node_names length must match the number of nodes")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def index_of(self, name: str) -> int:
        if self.node_names is None:
            raise KeyError("graph carries no node names")
        try:
            return self.node_names.index(name)
        except ValueError:
            raise KeyError(f"unknown node name {name!r}") from None


@dataclass(frozen=True)
class ConnectivityPattern:
    """A node's adjacency column/row used as its feature vector."""

    vector: np.ndarray
    source_mode: str = "column"

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if self.source_mode not in PATTERN_MODES:
            raise ValueError(f"unknown pattern mode {self.source_mode!r}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class SamplingPlan:
    """An ordered set of sampled node indices and its complement."""

    sampled: np.ndarray
    unsampled: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sampled, dtype=np.int64).copy()
        u = np.asarray(self.unsampled, dtype=np.int64).copy()
        if np.intersect1d(s, u).size:
            raise ValueError("sampled and unsampled sets overlap")
        if len(set(s.tolist())) != s.size:
            raise ValueError("sampled indices must be distinct")
        s.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "sampled", s)
        object.__setattr__(self, "unsampled", u)

    @property
    def n_sampled(self) -> int:
        return int(self.sampled.size)


@dataclass(frozen=True)
class GraphSignal:
    """Real values attached to every node, plus the generating noise level."""

    values: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def load_edge_list(source, directed: bool = False, weighted: bool = False) -> Graph:
    """Parse an edge list of lines ``src dst [weight]``.

    Node tokens are mapped to dense 0-based indices in first-seen order.
    ``#`` starts a comment.  Duplicate edges keep the last weight; undirected
    edges are mirrored.  Extra columns are ignored unless ``weighted``.
    """
    names: dict[str, int] = {}
    edges: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(_read_lines(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ValueError(f"line {lineno}: expected 'src dst [weight]', got {raw.strip()!r}")
        if weighted:
            if len(tokens) < 3:
                raise ValueError(f"line {lineno}: weighted edge list needs a third column")
            try:
                w = float(tokens[2])
            except ValueError:
                raise ValueError(f"line {lineno}: weight {tokens[2]!r} is not a number") from None
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"line {lineno}: weight must be finite and non-negative")
        else:
            w = 1.0
        pair = []
        for tok in tokens[:2]:
            if tok not in names:
                names[tok] = len(names)
            pair.append(names[tok])
        edges.append((pair[0], pair[1], w))
    if not edges:
        raise ValueError("empty edge list")
    n = len(names)
    a = np.zeros((n, n))
    for i, j, w in edges:
        a[i, j] = w
        if not directed:
            a[j, i] = w
    return Graph(adjacency=a, directed=directed, node_names=tuple(names))


def load_labels(source) -> dict[str, np.ndarray]:
    """Parse a label file of lines ``node value [value ...]``.

    Returns a map from node token to a vector of label columns (several
    columns model repeated test signals).  All rows must carry the same
    number of columns.
    """
    labels: dict[str, np.ndarray] = {}
    width = None
    for lineno, raw in enumerate(_read_lines(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ValueError(f"line {lineno}: expected 'node value [value ...]'")
        try:
            vals = np.array([float(t) for t in tokens[1:]])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric label value") from None
        if width is None:
            width = vals.size
        elif vals.size != width:
            raise ValueError(f"line {lineno}: expected {width} label columns, got {vals.size}")
        labels[tokens[0]] = vals
    if not labels:
        raise ValueError("empty label file")
    return labels


def erdos_renyi(n: int, edge_prob: float, seed) -> Graph:
    """Random binary graph: independent directed edges, then symmetrized.

    The sum of a draw and its transpose is clamped back to {0, 1} so the
    graph stays simple and binary; the effective undirected edge probability
    is 1 - (1 - edge_prob)^2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError(f"edge_prob must be in [0, 1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    a0 = rng.random((n, n)) < edge_prob
    np.fill_diagonal(a0, False)
    a = np.logical_or(a0, a0.T).astype(np.float64)
    return Graph(adjacency=a, directed=False)


def connectivity_pattern(g: Graph, node: int, mode: str = "column") -> ConnectivityPattern:
    """A node's adjacency column (default), row, or their concatenation."""
    if not 0 <= node < g.n_nodes:
        raise IndexError(f"node {node} out of range for {g.n_nodes} nodes")
    if mode == "column":
        vec = g.adjacency[:, node]
    elif mode == "row":
        vec = g.adjacency[node, :]
    elif mode == "concat":
        vec = np.concatenate([g.adjacency[:, node], g.adjacency[node, :]])
    else:
        raise ValueError(f"unknown pattern mode {mode!r}")
    return ConnectivityPattern(vector=vec, source_mode=mode)


def normalized_laplacian(g: Graph) -> np.ndarray:
    """I - D^{-1/2} A D^{-1/2}, spectrum in [0, 2].

    Degree-0 nodes get a 0 inverse-root degree, which leaves their row equal
    to the identity row and keeps the matrix PSD.
    """
    if g.directed:
        raise ValueError("normalized Laplacian requires an undirected graph")
    deg = g.degrees
    dinv = np.where(deg > 0, deg, 1.0) ** -0.5
    dinv[deg <= 0] = 0.0
    lap = np.eye(g.n_nodes) - dinv[:, None] * g.adjacency * dinv[None, :]
    return (lap + lap.T) / 2.0


def power_adjacency(g: Graph, hops: int) -> np.ndarray:
    """A^hops, counting walks of the given length."""
    if hops < 1:
        raise ValueError("hops must be >= 1")
    return np.linalg.matrix_power(g.adjacency, hops)


def sample_nodes(g: Graph, m: int, seed) -> SamplingPlan:
    """Uniform m-subset of nodes without replacement, in random order."""
    if not 1 <= m <= g.n_nodes:
        raise ValueError(f"m must be in [1, {g.n_nodes}], got {m}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.n_nodes)
    return SamplingPlan(sampled=perm[:m], unsampled=np.sort(perm[m:]))


def synth_signal(g: Graph, kernel_matrix: np.ndarray, noise_var: float = 0.01, seed=None) -> GraphSignal:
    """x = K alpha + e with alpha_i ~ U[0.5, 1] and e_i ~ N(0, noise_var)."""
    k = np.asarray(kernel_matrix, dtype=np.float64)
    n = g.n_nodes
    if k.shape != (n, n):
        raise ValueError(f"kernel matrix must be {n}x{n}, got {k.shape}")
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.5, 1.0, size=n)
    x = k @ alpha
    if noise_var > 0:
        x = x + rng.normal(0.0, math.sqrt(noise_var), size=n)
    return GraphSignal(values=x, noise_var=noise_var)
