"""Desk-scale training loop with periodic gradient-aligned subset refresh.

The loop alternates two stages.  At refresh iterations (t == 1 or
t % selection_period == 0) the epoch's batches are re-partitioned and a
per-batch rank search picks the subset of samples whose gradients best
span the batch mean gradient.  Between refreshes the previous subsets are
retained.  Every iteration performs one SGD step on the mean gradient of
the current batch's active subset.

Gradient-evaluation accounting is exact: each per-sample gradient
computed for training or selection increments the counter; diagnostic
quantities (full-data gradient norm tracking) do not.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .alignment import GradientBundle, cosine_alignment, select_rank
from .datasets import Dataset
from .errors import DegenerateBatch, DivergedModel, ZeroSubspace
from .features import extract_svd_features, extract_variance_features
from .models import gradient_bundle, make_model

SAMPLERS = ("graft", "graft_warm", "random", "full")


@dataclass(frozen=True)
class TrainConfig:
    total_iterations: int
    selection_period: int
    batch_size: int
    rank_set: tuple[int, ...]
    epsilon: float
    learning_rate: float = 0.1
    lr_schedule: str = "constant"  # or "cosine"
    seed: int = 0
    sampler: str = "graft"
    warm_fraction: float = 0.1
    random_fraction: float = 0.25
    error_mode: str = "normalized"  # or "absolute"
    feature_source: str = "raw_svd"  # or "variance"
    model: str = "logistic"
    hidden: int = 16
    track_full_grad_norm: bool = False
    parallel_batches: int = 1  # Stage 1 worker threads; results reduced in batch order

    def __post_init__(self):
        if self.selection_period < 1:
            raise ValueError("selection_period must be >= 1")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.error_mode not in ("normalized", "absolute"):
            raise ValueError("error_mode must be 'normalized' or 'absolute'")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError("lr_schedule must be 'constant' or 'cosine'")
        if self.feature_source not in ("raw_svd", "variance"):
            raise ValueError("feature_source must be 'raw_svd' or 'variance'")
        if list(self.rank_set) != sorted(self.rank_set) or not self.rank_set:
            raise ValueError("rank_set must be nonempty and ascending")
        if not (0.0 < self.warm_fraction < 1.0):
            raise ValueError("warm_fraction must be in (0, 1)")


@dataclass
class RunTrace:
    """Structured record of one training run.

    ``wall_time_seconds`` is measured, hence not part of the deterministic
    payload; serialization excludes it so identical runs produce identical
    bytes.
    """

    config: dict
    iterations: list = field(default_factory=list)   # [t, loss, subset_size, grad_evals_cum]
    refreshes: list = field(default_factory=list)    # [t, batch, chosen_R, error, satisfied, cos]
    epochs: list = field(default_factory=list)       # [epoch, train_loss, test_acc, class_hist]
    grad_norms: list = field(default_factory=list)   # [t, ||full grad||^2] when tracked
    final_test_accuracy: float = math.nan
    final_train_loss: float = math.nan
    total_gradient_evaluations: int = 0
    diverged: bool = False
    wall_time_seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_time_seconds")
        # Strict JSON has no NaN/Infinity tokens: undefined values (e.g.
        # test accuracy of a regression run) serialize as null, and an
        # unbounded epsilon uses the same "inf" spelling as run configs.
        if d["config"].get("epsilon") == math.inf:
            d["config"]["epsilon"] = "inf"
        return _nan_to_none(d)

    @classmethod
    def from_dict(cls, d: dict) -> "RunTrace":
        d = dict(d)
        for k in ("final_test_accuracy", "final_train_loss"):
            if d.get(k) is None:
                d[k] = math.nan
        if d.get("config", {}).get("epsilon") == "inf":
            d["config"] = dict(d["config"], epsilon=math.inf)
        return cls(**d)

    def min_grad_norm_sq(self) -> float:
        if not self.grad_norms:
            raise ValueError("run was not tracking full gradient norms")
        return min(g for _, g in self.grad_norms)


def _nan_to_none(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, dict):
        return {k: _nan_to_none(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_nan_to_none(v) for v in x]
    return x


def _learning_rate(cfg: TrainConfig, t: int) -> float:
    if cfg.lr_schedule == "cosine":
        return cfg.learning_rate * 0.5 * (1.0 + math.cos(math.pi * (t - 1) / max(cfg.total_iterations, 1)))
    return cfg.learning_rate


def _extract_features(cfg: TrainConfig, X_batch: np.ndarray, max_rank: int):
    R = min(max_rank, X_batch.shape[0], X_batch.shape[1])
    if cfg.feature_source == "variance":
        return extract_variance_features(X_batch, min(max_rank, X_batch.shape[1]))
    return extract_svd_features(X_batch, R)


def _select_batch_subset(cfg: TrainConfig, model, theta, Xb, yb):
    """Run the rank search for one batch; returns (local idx, refresh info, evals)."""
    K = Xb.shape[0]
    bundle = gradient_bundle(model, theta, Xb, yb)
    evals = K
    try:
        feats = _extract_features(cfg, Xb, max(cfg.rank_set))
        ranks = [r for r in cfg.rank_set if r <= feats.rank]
        if not ranks:
            raise DegenerateBatch("no feasible rank candidate")
        decision = select_rank(
            feats, bundle, ranks, cfg.epsilon,
            normalized=(cfg.error_mode == "normalized"),
        )
    except (DegenerateBatch, ZeroSubspace):
        # Degenerate batch: fall back to the full batch.
        cos = 1.0
        return list(range(K)), (K, 0.0, True, cos, True), evals
    chosen = decision.chosen
    idx = list(chosen.selection.indices)
    sub_mean = bundle.subset_mean(idx)
    if np.linalg.norm(bundle.mean) > 0 and np.linalg.norm(sub_mean) > 0:
        cos = cosine_alignment(bundle.mean, sub_mean)
    else:
        cos = 0.0
    return idx, (chosen.rank, chosen.error, decision.satisfied, cos, False), evals


def _run_selection(cfg, model, theta, X_train, y_train, batches):
    """Stage 1 over all batches, optionally on worker threads.

    Results are reduced in batch order regardless of completion order, so
    the outcome is identical to the sequential path.
    """
    def work(batch_idx):
        return _select_batch_subset(cfg, model, theta, X_train[batch_idx], y_train[batch_idx])

    if cfg.parallel_batches > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.parallel_batches) as pool:
            return list(pool.map(work, batches))
    return [work(b) for b in batches]


def train(cfg: TrainConfig, data: Dataset, model=None) -> RunTrace:
    """Run Stage 1 / Stage 2 training and return the full trace."""
    if model is None:
        model = make_model(cfg.model, data.d, max(data.class_count, 1), cfg.hidden)
    rng = np.random.default_rng(cfg.seed)
    theta = model.init_params(rng)

    X_train, y_train = data.train()
    n_train = len(y_train)
    K = cfg.batch_size
    if K > n_train:
        raise ValueError(f"batch_size {K} exceeds training set size {n_train}")
    B = n_train // K  # equal-size batches; remainder dropped at each shuffle
    warm_until = math.ceil(cfg.warm_fraction * cfg.total_iterations) if cfg.sampler == "graft_warm" else 0

    trace = RunTrace(config=asdict(cfg) | {"rank_set": list(cfg.rank_set)})
    batches: list[np.ndarray] = []
    subsets: list[np.ndarray] = []   # global dataset indices per batch
    grad_evals = 0
    start = time.perf_counter()
    classification = data.class_count > 0 and cfg.model != "linear"

    try:
        for t in range(1, cfg.total_iterations + 1):
            is_refresh = (t == 1) or (t % cfg.selection_period == 0)
            graft_active = cfg.sampler in ("graft", "graft_warm") and t > warm_until
            if is_refresh:
                perm = rng.permutation(n_train)
                batches = [perm[b * K : (b + 1) * K] for b in range(B)]
                subsets = []
                if graft_active:
                    results = _run_selection(cfg, model, theta, X_train, y_train, batches)
                    for b, (local, info, evals) in enumerate(results):
                        grad_evals += evals
                        chosen_r, err, satisfied, cos, _fallback = info
                        trace.refreshes.append(
                            [t, b, int(chosen_r), float(err), bool(satisfied), float(cos)]
                        )
                        subsets.append(batches[b][local])
                else:
                    for batch_idx in batches:
                        if cfg.sampler == "random":
                            m = max(1, math.ceil(cfg.random_fraction * K))
                            local = rng.choice(K, size=m, replace=False)
                            subsets.append(batch_idx[np.sort(local)])
                        else:  # full, or warm phase
                            subsets.append(batch_idx)

            b = (t - 1) % B
            active = subsets[b]
            Xs = X_train[active]
            ys = y_train[active]
            bundle = gradient_bundle(model, theta, Xs, ys)
            grad_evals += len(active)
            loss = float(np.mean(model.per_sample_losses(theta, Xs, ys)))
            theta = theta - _learning_rate(cfg, t) * bundle.mean
            if not np.all(np.isfinite(theta)):
                raise DivergedModel("parameters became non-finite")

            trace.iterations.append([t, loss, int(len(active)), int(grad_evals)])

            if cfg.track_full_grad_norm:
                g_full = model.per_sample_gradients(theta, X_train, y_train).mean(axis=1)
                trace.grad_norms.append([t, float(g_full @ g_full)])

            if t % B == 0 or t == cfg.total_iterations:
                epoch = (t + B - 1) // B
                train_loss = float(np.mean(model.per_sample_losses(theta, X_train, y_train)))
                if classification:
                    Xt, yt = data.test()
                    acc = float(np.mean(model.predict(theta, Xt) == yt)) if len(yt) else math.nan
                else:
                    acc = math.nan
                hist = [0] * max(data.class_count, 1)
                if classification:
                    for s in subsets:
                        for c, cnt in zip(*np.unique(y_train[s], return_counts=True)):
                            hist[int(c)] += int(cnt)
                trace.epochs.append([epoch, train_loss, acc, hist])
    except DivergedModel:
        trace.diverged = True

    trace.total_gradient_evaluations = int(grad_evals)
    if trace.epochs:
        trace.final_test_accuracy = trace.epochs[-1][2]
        trace.final_train_loss = trace.epochs[-1][1]
    trace.wall_time_seconds = time.perf_counter() - start
    return trace
