"""Residual regressors over feature vectors and the learned-heuristic evaluator.

The models predict d* = h* - quick_h from a state's feature vector; at search
time the evaluator returns quick_h + max(0, prediction) per state, batched once
per expansion and memoized by state key.
"""

from __future__ import annotations

import json
import math
import random
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import domains
from .domains import Domain
from .pipeline import TrainingExample
from .search import HeuristicEvaluator
from .util import derive_seed

MODEL_FORMAT = "heurlab-model"
MODEL_VERSION = 1


class ModelKind(str, Enum):
    KNN = "knn"
    LINEAR = "linear"


@dataclass
class ResidualModel:
    kind: ModelKind
    domain: Domain
    mu: np.ndarray  # per-dimension training mean
    sigma: np.ndarray  # per-dimension training std, zeros replaced by 1
    k: int = 8
    neighbors: np.ndarray | None = None  # standardized features, insertion order
    targets: np.ndarray | None = None
    weights: np.ndarray | None = None
    bias: float = 0.0
    manifest: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.mu)

    def standardize(self, features: np.ndarray) -> np.ndarray:
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise ValueError(
                f"feature matrix has shape {features.shape}, expected (n, {self.n_features})"
            )
        return (features - self.mu) / self.sigma


def predict_batch(model: ResidualModel, features: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
    """Predicted residuals for a feature matrix, one row per state."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    z = model.standardize(x)
    if model.kind is ModelKind.LINEAR:
        return z @ model.weights + model.bias
    # k nearest stored neighbors by Euclidean distance; stable sort keeps
    # insertion order on distance ties.
    d2 = ((z[:, None, :] - model.neighbors[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=1, kind="stable")
    nearest = order[:, : model.k]
    return model.targets[nearest].mean(axis=1)


def _split_by_instance(examples: Sequence[TrainingExample], seed: int) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Hold out ~10% of instance ids for validation (at least one when possible)."""
    ids = sorted({ex.instance_id for ex in examples})
    if len(ids) < 2:
        return list(examples), []
    rng = random.Random(derive_seed(seed, "val_split"))
    rng.shuffle(ids)
    n_val = max(1, round(0.1 * len(ids)))
    val_ids = set(ids[:n_val])
    train = [ex for ex in examples if ex.instance_id not in val_ids]
    val = [ex for ex in examples if ex.instance_id in val_ids]
    return train, val


def train_residual_model(
    examples: Sequence[TrainingExample],
    kind: ModelKind | str = ModelKind.KNN,
    k: int = 8,
    ridge: float = 1e-6,
    seed: int = 0,
    manifest: dict | None = None,
) -> ResidualModel:
    """Fit a residual regressor on the selection; parameters come from the 90%
    training side of an instance-id split, the 10% holdout only scores
    validation MAE for the manifest."""
    kind = ModelKind(kind)
    if not examples:
        raise ValueError("cannot train on an empty selection")
    train, val = _split_by_instance(examples, seed)
    x = np.array([ex.feature_vector for ex in train], dtype=float)
    y = np.array([ex.d_star for ex in train], dtype=float)
    n, dims = x.shape
    needed = max(k, dims + 1) if kind is ModelKind.KNN else dims + 1
    if n < needed:
        raise ValueError(f"need at least {needed} training examples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature values in training set")

    mu = x.mean(axis=0)
    sigma = x.std(axis=0)
    sigma[sigma < 1e-12] = 1.0
    domain = train[0].domain
    model = ResidualModel(kind=kind, domain=domain, mu=mu, sigma=sigma, k=min(k, n))
    z = (x - mu) / sigma
    if kind is ModelKind.KNN:
        model.neighbors = z
        model.targets = y
    else:
        # Ridge-damped least squares; the intercept column is damped too, but
        # at 1e-6 the perturbation is far below the MAE tolerances in use.
        a = np.hstack([z, np.ones((n, 1))])
        gram = a.T @ a + ridge * np.eye(dims + 1)
        coef = np.linalg.solve(gram, a.T @ y)
        model.weights = coef[:-1]
        model.bias = float(coef[-1])

    def mae(subset: list[TrainingExample]) -> float | None:
        if not subset:
            return None
        feats = np.array([ex.feature_vector for ex in subset], dtype=float)
        actual = np.array([ex.d_star for ex in subset], dtype=float)
        return float(np.abs(predict_batch(model, feats) - actual).mean())

    model.manifest = dict(manifest or {})
    model.manifest.update(
        {
            "kind": kind.value,
            "domain": domain.value,
            "k": model.k,
            "seed": seed,
            "n_train": len(train),
            "n_val": len(val),
            "train_mae": mae(train),
            "val_mae": mae(val),
        }
    )
    return model


# ---------------------------------------------------------------------------
# Search-time evaluator

class LearnedHeuristic(HeuristicEvaluator):
    """quick_heuristic + floored model residual, with an LRU value cache.

    One predict_batch call per evaluate_batch covers every uncached state.
    cache_capacity None means unbounded, 0 disables caching entirely.
    """

    shareable = True
    cacheable = True

    def __init__(
        self,
        model: ResidualModel,
        cache_capacity: int | None = None,
        floor_at_zero: bool = True,
        round_predictions: bool = False,
    ):
        if cache_capacity is not None and cache_capacity < 0:
            raise ValueError("cache_capacity must be nonnegative")
        self.model = model
        self.cache_capacity = cache_capacity
        self.floor_at_zero = floor_at_zero
        self.round_predictions = round_predictions
        self.cache: OrderedDict[bytes, float] = OrderedDict()
        self.model_invocations = 0

    def _cache_get(self, key: bytes) -> float | None:
        if self.cache_capacity == 0:
            return None
        value = self.cache.get(key)
        if value is not None:
            self.cache.move_to_end(key)
        return value

    def _cache_put(self, key: bytes, value: float) -> None:
        if self.cache_capacity == 0:
            return
        self.cache[key] = value
        self.cache.move_to_end(key)
        if self.cache_capacity is not None:
            while len(self.cache) > self.cache_capacity:
                self.cache.popitem(last=False)

    def evaluate_batch(self, states, instance, gs):
        out: list[float | None] = []
        misses: list[int] = []
        keys = [domains.state_key(s) for s in states]
        for i, key in enumerate(keys):
            out.append(self._cache_get(key))
            if out[-1] is None:
                misses.append(i)
        if misses:
            feats = np.array([domains.feature_vector(states[i], instance) for i in misses], dtype=float)
            preds = predict_batch(self.model, feats)
            self.model_invocations += 1
            for i, pred in zip(misses, preds):
                residual = float(pred)
                if self.floor_at_zero:
                    residual = max(0.0, residual)
                if self.round_predictions:
                    residual = float(round(residual))
                value = float(domains.quick_heuristic(states[i], instance)) + residual
                self._cache_put(keys[i], value)
                out[i] = value
        return out


def learned_heuristic(
    model: ResidualModel,
    domain: Domain | None = None,
    cache_capacity: int | None = None,
    floor_at_zero: bool = True,
    round_predictions: bool = False,
) -> LearnedHeuristic:
    if domain is not None and model.domain is not Domain(domain):
        raise ValueError(f"model was trained for {model.domain.value}, not {Domain(domain).value}")
    return LearnedHeuristic(model, cache_capacity, floor_at_zero, round_predictions)


# ---------------------------------------------------------------------------
# Persistence

def save_model(model: ResidualModel, path: str | Path) -> None:
    record = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind.value,
        "domain": model.domain.value,
        "k": model.k,
        "mu": model.mu.tolist(),
        "sigma": model.sigma.tolist(),
        "neighbors": None if model.neighbors is None else model.neighbors.tolist(),
        "targets": None if model.targets is None else model.targets.tolist(),
        "weights": None if model.weights is None else model.weights.tolist(),
        "bias": model.bias,
        "manifest": model.manifest,
    }
    Path(path).write_text(json.dumps(record, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ResidualModel:
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    if record.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path} is not a model file")
    if record.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {record.get('version')}")
    return ResidualModel(
        kind=ModelKind(record["kind"]),
        domain=Domain(record["domain"]),
        mu=np.array(record["mu"], dtype=float),
        sigma=np.array(record["sigma"], dtype=float),
        k=record["k"],
        neighbors=None if record["neighbors"] is None else np.array(record["neighbors"], dtype=float),
        targets=None if record["targets"] is None else np.array(record["targets"], dtype=float),
        weights=None if record["weights"] is None else np.array(record["weights"], dtype=float),
        bias=record["bias"],
        manifest=record["manifest"],
    )
