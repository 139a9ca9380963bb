"""Online multi-kernel learning with multiplicative weight updates.

P single-kernel learners run in parallel, each in its own random-feature
space; their predictions are combined with hedge weights that decay
exponentially in each kernel's own (clipped) loss.  With P = 1 the model
reduces bit-exactly to the single-kernel learner.

Weights are stored in the log domain.  Every update subtracts the running
maximum, which is a pure rescaling: normalized weights are invariant to it
and nothing can underflow on long streams.

Steps are strictly sequential; within a step the per-kernel updates are
independent.  Models are immutable snapshots, safe to share for prediction.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .features import RFMap, build_map
from .graph import power_adjacency
from .kernels import KernelSpec
from .online import (
    LossKind,
    SingleKernelState,
    _check_label,
    checkpoint_record,
    init_state,
    state_from_record,
)


def derive_seed(base_seed: int, index: int) -> int:
    """Stable per-kernel integer seed derived from (base seed, index)."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


@dataclass(frozen=True)
class MklModel:
    """P learners, their frozen maps, and log-domain hedge weights."""

    learners: tuple[SingleKernelState, ...]
    maps: tuple[RFMap, ...]
    log_weights: np.ndarray
    eta: float
    seed: int | None = None

    def __post_init__(self):
        if len(self.learners) != len(self.maps) or not self.learners:
            raise ValueError("need one learner per map, at least one kernel")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1] for the weight update")
        w = np.ascontiguousarray(self.log_weights, dtype=np.float64).copy()
        if w.shape != (len(self.learners),):
            raise ValueError("log_weights length must equal the number of kernels")
        if not np.all(np.isfinite(w)):
            raise ValueError("log weights must be finite")
        for learner, rf_map in zip(self.learners, self.maps):
            if learner.map_ref != rf_map.ref:
                raise ValueError("learner/map pairing mismatch")
        w.setflags(write=False)
        object.__setattr__(self, "log_weights", w)

    @property
    def n_kernels(self) -> int:
        return len(self.learners)

    @property
    def weights(self) -> np.ndarray:
        """Un-normalized positive weights."""
        return np.exp(self.log_weights)

    @property
    def normalized_weights(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()


@dataclass(frozen=True)
class MklStepRecord:
    combined_loss: float
    per_kernel_losses: np.ndarray
    weights_used: np.ndarray


@dataclass(frozen=True)
class MklTraces:
    """Per-step records of one training pass (all pre-update quantities)."""

    combined_loss: np.ndarray
    per_kernel_loss: np.ndarray
    weights: np.ndarray

    @property
    def n_steps(self) -> int:
        return int(self.combined_loss.size)


def mkl_init(
    kernels: Sequence[KernelSpec],
    d: int,
    n: int,
    eta: float,
    mu: float,
    loss: LossKind | str,
    seed: int,
) -> MklModel:
    """Zero-initialized model with one independently seeded map per kernel."""
    if not kernels:
        raise ValueError("kernel dictionary is empty")
    if isinstance(loss, str):
        loss = LossKind(loss, mu)
    elif loss.mu != mu:
        loss = LossKind(loss.kind, mu)
    maps = tuple(build_map(k, d, n, derive_seed(seed, p)) for p, k in enumerate(kernels))
    learners = tuple(init_state(m, eta, loss) for m in maps)
    log_weights = np.full(len(kernels), -np.log(len(kernels)))
    return MklModel(learners=learners, maps=maps, log_weights=log_weights, eta=eta, seed=seed)


def mkl_predict(model: MklModel, connectivity) -> float:
    """Hedge-weighted combination of the per-kernel predictions."""
    wbar = model.normalized_weights
    preds = np.array(
        [np.dot(lr.theta, m.encode(connectivity)) for lr, m in zip(model.learners, model.maps)]
    )
    return float(np.dot(wbar, preds))


def mkl_predict_batch(model: MklModel, patterns) -> np.ndarray:
    wbar = model.normalized_weights
    out = None
    for w, lr, m in zip(wbar, model.learners, model.maps):
        contrib = w * (m.encode_batch(patterns) @ lr.theta)
        out = contrib if out is None else out + contrib
    return out


def _run_stream(model: MklModel, patterns: np.ndarray, labels: np.ndarray):
    loss = model.learners[0].loss
    for y in labels:
        _check_label(loss, y)
    n_steps = labels.size
    if n_steps:
        zs = np.stack([m.encode_batch(patterns) for m in model.maps])
    else:
        zs = np.empty((model.n_kernels, 0, 2 * model.maps[0].d))
    thetas = np.stack([lr.theta for lr in model.learners])
    logw = model.log_weights.copy()
    combined, per_kernel, weights_used = _kernels.mkl_stream(
        zs, labels, model.eta, loss.mu, loss.code, thetas, logw
    )
    if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(combined))):
        raise FloatingPointError("multi-kernel training diverged to non-finite values")
    learners = tuple(
        SingleKernelState(theta=thetas[p], eta=lr.eta, loss=lr.loss, map_ref=lr.map_ref)
        for p, lr in enumerate(model.learners)
    )
    new_model = MklModel(
        learners=learners, maps=model.maps, log_weights=logw, eta=model.eta, seed=model.seed
    )
    return new_model, MklTraces(combined, per_kernel, weights_used)


def mkl_update(model: MklModel, connectivity, label: float) -> tuple[MklModel, MklStepRecord]:
    """One online step: every learner descends, every weight decays."""
    a = np.asarray(connectivity, dtype=np.float64)
    new_model, traces = _run_stream(model, a[None, :], np.array([float(label)]))
    record = MklStepRecord(
        combined_loss=float(traces.combined_loss[0]),
        per_kernel_losses=traces.per_kernel_loss[0],
        weights_used=traces.weights[0],
    )
    return new_model, record


def mkl_train(
    model: MklModel,
    samples: Sequence,
    feature_provider: Callable[[int], np.ndarray] | None = None,
) -> tuple[MklModel, MklTraces]:
    """Sequential training pass; see MklTraces for what is recorded.

    Samples are (connectivity, label) pairs, or (node, label) pairs when a
    feature provider maps nodes to patterns.
    """
    patterns, labels = [], []
    for first, label in samples:
        vec = feature_provider(first) if feature_provider is not None else first
        patterns.append(np.asarray(vec, dtype=np.float64))
        labels.append(float(label))
    n = model.maps[0].n
    stacked = np.stack(patterns) if patterns else np.empty((0, n))
    if stacked.size and stacked.shape[1] != n:
        raise ValueError(f"features have length {stacked.shape[1]}, maps expect {n}")
    return _run_stream(model, stacked, np.array(labels))


def absorb_new_node_mkl(
    model: MklModel, connectivity, label: float | None = None
) -> tuple[float, MklModel]:
    """Combined prediction for a newly-joining node, plus an optional update."""
    prediction = mkl_predict(model, connectivity)
    if label is None:
        return prediction, model
    new_model, _ = mkl_update(model, connectivity, label)
    return prediction, new_model


def traces_to_tsv(traces: MklTraces, path) -> None:
    """One row per step: t, combined loss, P per-kernel losses, P weights."""
    n_kernels = traces.per_kernel_loss.shape[1] if traces.n_steps else 0
    header = (
        ["t", "combined_loss"]
        + [f"loss_{p}" for p in range(n_kernels)]
        + [f"weight_{p}" for p in range(n_kernels)]
    )
    lines = ["\t".join(header)]
    for t in range(traces.n_steps):
        row = [str(t + 1), repr(float(traces.combined_loss[t]))]
        row += [repr(float(v)) for v in traces.per_kernel_loss[t]]
        row += [repr(float(v)) for v in traces.weights[t]]
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_mkl_checkpoint(model: MklModel, path, config_text: str = "") -> None:
    """Bundle of learner checkpoints, weights, and a config fingerprint."""
    record = {
        "format": "graphrf-mkl-v1",
        "eta": model.eta,
        "seed": model.seed,
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "log_weights_b64": base64.b64encode(
            np.ascontiguousarray(model.log_weights).astype("<f8").tobytes()
        ).decode("ascii"),
        "learners": [checkpoint_record(lr) for lr in model.learners],
        "maps": [
            {
                "family": m.kernel.family,
                "bandwidth": m.kernel.bandwidth,
                "d": m.d,
                "n": m.n,
                "seed": m.seed,
            }
            for m in model.maps
        ],
    }
    Path(path).write_text(json.dumps(record), encoding="utf-8")


def load_mkl_checkpoint(path) -> MklModel:
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    if record.get("format") != "graphrf-mkl-v1":
        raise ValueError("not a multi-kernel checkpoint")
    maps = tuple(
        build_map(KernelSpec(m["family"], m["bandwidth"]), m["d"], m["n"], m["seed"])
        for m in record["maps"]
    )
    learners = tuple(state_from_record(r) for r in record["learners"])
    log_weights = np.frombuffer(
        base64.b64decode(record["log_weights_b64"]), dtype="<f8"
    ).astype(np.float64)
    return MklModel(
        learners=learners,
        maps=maps,
        log_weights=log_weights,
        eta=float(record["eta"]),
        seed=record["seed"],
    )


# ---------------------------------------------------------------------------
# Feature ensembles: the same hedge rule one level up.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureProvider:
    """Named extractor from a node index to a fixed-dimension feature vector."""

    name: str
    extractor: Callable[[int], np.ndarray]
    dim: int

    def __call__(self, node: int) -> np.ndarray:
        vec = np.asarray(self.extractor(node), dtype=np.float64)
        if vec.shape != (self.dim,):
            raise ValueError(
                f"provider {self.name!r} produced shape {vec.shape}, declared dim {self.dim}"
            )
        return vec


def connectivity_provider(graph, mode: str = "column", restrict_to=None, normalize: bool = False):
    """Provider reading (optionally restricted, optionally unit-norm) patterns."""
    idx = None if restrict_to is None else np.asarray(restrict_to, dtype=np.int64)

    def extract(node: int) -> np.ndarray:
        if mode == "column":
            vec = graph.adjacency[:, node]
        elif mode == "row":
            vec = graph.adjacency[node, :]
        else:
            vec = np.concatenate([graph.adjacency[:, node], graph.adjacency[node, :]])
        if idx is not None:
            vec = vec[idx] if mode != "concat" else np.concatenate([vec[idx], vec[graph.n_nodes + idx]])
        if normalize:
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
        return vec

    base = graph.n_nodes if idx is None else idx.size
    dim = 2 * base if mode == "concat" else base
    label = f"connectivity[{mode}]"
    return FeatureProvider(name=label, extractor=extract, dim=dim)


def power_provider(graph, hops: int, restrict_to=None, normalize: bool = False):
    """Provider reading columns of A^hops (multi-hop connectivity)."""
    powered = power_adjacency(graph, hops)
    idx = None if restrict_to is None else np.asarray(restrict_to, dtype=np.int64)

    def extract(node: int) -> np.ndarray:
        vec = powered[:, node]
        if idx is not None:
            vec = vec[idx]
        if normalize:
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
        return vec

    dim = graph.n_nodes if idx is None else idx.size
    return FeatureProvider(name=f"hops[{hops}]", extractor=extract, dim=dim)


def matrix_provider(name: str, features: np.ndarray):
    """Provider over externally supplied per-node feature rows."""
    feats = np.asarray(features, dtype=np.float64)

    def extract(node: int) -> np.ndarray:
        return feats[node]

    return FeatureProvider(name=name, extractor=extract, dim=feats.shape[1])


@dataclass(frozen=True)
class EnsembleModel:
    """Hedge combination of (feature provider, multi-kernel model) members."""

    providers: tuple[FeatureProvider, ...]
    models: tuple[MklModel, ...]
    log_betas: np.ndarray
    eta: float

    def __post_init__(self):
        if len(self.providers) != len(self.models) or not self.providers:
            raise ValueError("need one model per provider")
        b = np.ascontiguousarray(self.log_betas, dtype=np.float64).copy()
        if b.shape != (len(self.providers),):
            raise ValueError("log_betas length mismatch")
        b.setflags(write=False)
        object.__setattr__(self, "log_betas", b)

    @property
    def betas(self) -> np.ndarray:
        b = np.exp(self.log_betas - self.log_betas.max())
        return b / b.sum()


def ensemble_combine(
    providers: Sequence[FeatureProvider], models: Sequence[MklModel], eta: float
) -> EnsembleModel:
    """Treat each (provider, model) pair as one learner in an outer hedge."""
    providers = tuple(providers)
    models = tuple(models)
    for provider, model in zip(providers, models):
        if model.maps[0].n != provider.dim:
            raise ValueError(
                f"provider {provider.name!r} has dim {provider.dim}, "
                f"model expects {model.maps[0].n}"
            )
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must be in (0, 1]")
    log_betas = np.full(len(providers), -np.log(len(providers)))
    return EnsembleModel(providers=providers, models=models, log_betas=log_betas, eta=eta)


def ensemble_predict(ensemble: EnsembleModel, node: int) -> float:
    betas = ensemble.betas
    preds = np.array(
        [
            mkl_predict(model, provider(node))
            for provider, model in zip(ensemble.providers, ensemble.models)
        ]
    )
    return float(np.dot(betas, preds))


def ensemble_update(ensemble: EnsembleModel, node: int, label: float) -> EnsembleModel:
    new_models = []
    log_betas = ensemble.log_betas.copy()
    for i, (provider, model) in enumerate(zip(ensemble.providers, ensemble.models)):
        new_model, record = mkl_update(model, provider(node), label)
        new_models.append(new_model)
        log_betas[i] -= ensemble.eta * min(max(record.combined_loss, 0.0), 1.0)
    log_betas -= log_betas.max()
    return EnsembleModel(
        providers=ensemble.providers,
        models=tuple(new_models),
        log_betas=log_betas,
        eta=ensemble.eta,
    )


def ensemble_train(ensemble: EnsembleModel, samples: Sequence) -> tuple[EnsembleModel, np.ndarray]:
    """Sequential pass over (node, label) samples; returns the beta trace."""
    beta_trace = np.empty((len(samples), len(ensemble.providers)))
    for t, (node, label) in enumerate(samples):
        beta_trace[t] = ensemble.betas
        ensemble = ensemble_update(ensemble, node, label)
    return ensemble, beta_trace


# ---------------------------------------------------------------------------
# Regret diagnostics.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretReport:
    """Cumulative online loss against a per-prefix batch comparator."""

    cumulative_online_loss: np.ndarray
    best_fixed_loss: np.ndarray
    regret: np.ndarray
    fitted_growth_exponent: float


def fit_growth_exponent(series: np.ndarray, t_min: int | None = None) -> float:
    """Log-log slope of a positive series against step index.

    Returns nan when fewer than two positive values fall in the fit window
    (e.g. an identically-zero regret series).
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.size
    if n < 2:
        return float("nan")
    if t_min is None:
        t_min = max(8, n // 100)
    t = np.arange(1, n + 1)
    mask = (t >= t_min) & (series > 0)
    if mask.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(t[mask]), np.log(series[mask]), 1)
    return float(slope)


def static_regret(online_losses: np.ndarray, best_fixed_losses: np.ndarray) -> RegretReport:
    """Regret series: cumulative online loss minus the per-prefix oracle loss."""
    online_losses = np.asarray(online_losses, dtype=np.float64)
    best_fixed_losses = np.asarray(best_fixed_losses, dtype=np.float64)
    if online_losses.shape != best_fixed_losses.shape:
        raise ValueError("online and oracle loss series must have equal length")
    cum = np.cumsum(online_losses)
    regret = cum - best_fixed_losses
    return RegretReport(
        cumulative_online_loss=cum,
        best_fixed_loss=best_fixed_losses,
        regret=regret,
        fitted_growth_exponent=fit_growth_exponent(regret),
    )
