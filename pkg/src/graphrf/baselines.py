"""Batch comparison methods: kernel ridge regression, k-NN, and the exact
regularized least-squares solve in random-feature space.

The RF least-squares solve doubles as the comparator for regret diagnostics
and as the convergence oracle for the online learner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph import Graph, SamplingPlan


class KnnInapplicableError(ValueError):
    """Raised when a node has no labeled neighbor to average over."""


@dataclass(frozen=True)
class BatchKernelModel:
    """Ridge coefficients over the sampled nodes, tied to a kernel source."""

    alpha: np.ndarray
    sampled: SamplingPlan | None = None
    kernel_source: str = "connectivity"


def batch_kernel_ridge(k_matrix: np.ndarray, y: np.ndarray, mu: float) -> np.ndarray:
    """Solve (K + mu * M * I) alpha = y for a symmetric PSD kernel matrix."""
    k = np.asarray(k_matrix, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] != y.size:
        raise ValueError(f"need an MxM kernel and length-M labels, got {k.shape} and {y.shape}")
    scale = max(1.0, float(np.abs(k).max()))
    if np.abs(k - k.T).max() > 1e-8 * scale:
        raise ValueError("kernel matrix is not symmetric within tolerance")
    m = y.size
    system = k + mu * m * np.eye(m)
    try:
        alpha = np.linalg.solve(system, y)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "singular ridge system; kernel is rank-deficient and mu is too small"
        ) from exc
    residual = np.linalg.norm(system @ alpha - y)
    if residual > 1e-8 * max(np.linalg.norm(y), 1.0):
        raise ValueError(
            f"ridge solve residual {residual:.3e} exceeds tolerance; increase mu"
        )
    return alpha


def batch_predict(model: BatchKernelModel, cross_kernel_row: np.ndarray) -> float:
    """f(v) = alpha . k(v) with k built from the same kernel source."""
    row = np.asarray(cross_kernel_row, dtype=np.float64)
    if row.shape != model.alpha.shape:
        raise ValueError(f"cross-kernel row has shape {row.shape}, expected {model.alpha.shape}")
    return float(np.dot(model.alpha, row))


def knn_predict(g: Graph, labeled: Mapping[int, float], node: int, k: int) -> float:
    """Edge-weighted mean of up to k labeled neighbors.

    Weights are the adjacency entries renormalized over the labeled
    neighbors actually used, so unlabeled neighbors do not drag the estimate
    toward zero.
    """
    if not 0 <= node < g.n_nodes:
        raise IndexError(f"node {node} out of range")
    if k < 1:
        raise ValueError("k must be >= 1")
    row = g.adjacency[node]
    candidates = [(float(row[j]), j) for j in np.flatnonzero(row > 0) if j in labeled and j != node]
    if not candidates:
        raise KnnInapplicableError(f"node {node} has no labeled neighbor")
    candidates.sort(key=lambda item: (-item[0], item[1]))
    chosen = candidates[:k]
    total = sum(w for w, _ in chosen)
    return sum(w * labeled[j] for w, j in chosen) / total


def batch_rf_ls(z_matrix: np.ndarray, y: np.ndarray, mu: float) -> np.ndarray:
    """Exact solution of the regularized LS problem over encoded samples.

    theta = (Z^T Z + mu * M * I)^{-1} Z^T y; with mu = 0 the minimum-norm
    least-squares solution is returned.
    """
    z = np.asarray(z_matrix, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != y.size:
        raise ValueError(f"need (M, 2D) features and length-M labels, got {z.shape}, {y.shape}")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    m = y.size
    if mu > 0:
        if z.shape[1] > m:
            # dual form: identical solution, but an M x M solve when 2D > M
            dual = np.linalg.solve(z @ z.T + mu * m * np.eye(m), y)
            return z.T @ dual
        gram = z.T @ z + mu * m * np.eye(z.shape[1])
        return np.linalg.solve(gram, z.T @ y)
    theta, *_ = np.linalg.lstsq(z, y, rcond=None)
    return theta


def rf_ls_objective_grad(z_matrix: np.ndarray, y: np.ndarray, mu: float, theta: np.ndarray) -> np.ndarray:
    """Gradient of (1/M) sum (z.theta - y)^2 + mu ||theta||^2 at theta."""
    z = np.asarray(z_matrix, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    return (2.0 / m) * (z.T @ (z @ theta - y)) + 2.0 * mu * theta
