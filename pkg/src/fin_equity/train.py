"""Deterministic training loop, checkpoints, and multi-seed aggregation.

Given a seed, training is bit-reproducible: parameter init and per-epoch
shuffling use two generators spawned from one SeedSequence, batches are
contiguous slices of the shuffled order, and the optimizer is plain numpy.
The final short batch is kept, except that a batch of size 1 is dropped
when the model uses batch normalization (its training mode needs >= 2).

Checkpoints serialize to canonical JSON with 17-significant-digit floats,
so save -> load -> save is byte-identical and a loaded model reproduces
the saved model's inference outputs exactly.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Attribute, Dataset, PredictionRecord, require_valid
from .errors import (
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointVersionError,
    TrainingDivergedError,
    ValidationError,
)
from .fileio import dumps_canonical, load_json
from .metrics import MetricReport, discrepancy, equity_scaled, full_report
from .net import (
    AffineLayer,
    MlpModel,
    backward,
    cross_entropy,
    forward,
    init_mlp,
    named_gradients,
    named_parameters,
    softmax,
)
from .norms import BatchNormState, FinParams, NormKind
from .optim import AdamWConfig, AdamWState, adamw_step

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    layer_dims: tuple[int, ...] = (20, 32, 16)
    norm_kind: NormKind = NormKind.NONE
    fin_momentum: float = 0.3
    epochs: int = 10
    batch_size: int = 6
    optimizer: AdamWConfig = field(default_factory=AdamWConfig)
    seed: int = 0
    threshold: float = 0.5
    shuffle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
        if len(self.layer_dims) < 2:
            raise ValidationError("layer_dims needs at least input and feature dims")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.norm_kind is NormKind.BATCH and self.batch_size < 2:
            raise ValidationError("batch_size must be >= 2 with batch normalization")
        if not 0.0 <= self.fin_momentum <= 1.0:
            raise ValidationError(
                f"fin_momentum must lie in [0, 1], got {self.fin_momentum}"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError(f"threshold must lie in [0, 1], got {self.threshold}")


@dataclass
class Checkpoint:
    version: int
    config: TrainConfig
    model: MlpModel
    epoch: int


@dataclass
class RunHistory:
    losses: list[float]            # mean batch loss per epoch
    reports: list[MetricReport]    # evaluation report per epoch


def _score_model(model: MlpModel, dataset: Dataset) -> np.ndarray:
    logits, _ = forward(
        model, dataset.feature_matrix(), dataset.attr_vector(), mode="inference"
    )
    return softmax(logits)[:, 1]


def _evaluate(
    model: MlpModel, dataset: Dataset, threshold: float
) -> tuple[tuple[PredictionRecord, ...], MetricReport]:
    scores = _score_model(model, dataset)
    labels = dataset.label_vector()
    attrs = dataset.attr_vector()
    ids = dataset.ids()
    records = tuple(
        PredictionRecord(
            id=ids[i] or f"r{i}",
            score=float(scores[i]),
            label=int(labels[i]),
            attribute=Attribute(int(attrs[i])),
        )
        for i in range(len(dataset))
    )
    return records, full_report(records, dataset.attribute_set, threshold)


def evaluate_model(
    checkpoint: Checkpoint, dataset: Dataset, threshold: float | None = None
) -> tuple[tuple[PredictionRecord, ...], MetricReport]:
    """Score a dataset with a checkpointed model and audit the predictions."""
    require_valid(dataset)
    if dataset.d != checkpoint.model.input_dim:
        raise ValidationError(
            f"dataset feature dim {dataset.d} != model input dim "
            f"{checkpoint.model.input_dim}"
        )
    if threshold is None:
        threshold = checkpoint.config.threshold
    return _evaluate(checkpoint.model, dataset, threshold)


def train(
    train_set: Dataset, eval_set: Dataset, config: TrainConfig
) -> tuple[Checkpoint, RunHistory]:
    """Train from scratch; returns the final checkpoint and per-epoch history."""
    require_valid(train_set, "train set")
    require_valid(eval_set, "eval set")
    if train_set.d != config.layer_dims[0]:
        raise ValidationError(
            f"train set feature dim {train_set.d} != layer_dims[0] "
            f"{config.layer_dims[0]}"
        )
    if eval_set.d != train_set.d:
        raise ValidationError("train and eval feature dimensions differ")

    init_ss, shuffle_ss = np.random.SeedSequence(config.seed).spawn(2)
    init_rng = np.random.default_rng(init_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    model = init_mlp(
        config.layer_dims,
        config.norm_kind,
        train_set.attribute_set.group_count,
        init_rng,
        fin_momentum=config.fin_momentum,
    )
    params = named_parameters(model)
    state = AdamWState.create(params)

    x = train_set.feature_matrix()
    y = train_set.label_vector()
    a = train_set.attr_vector()
    n = len(train_set)
    losses: list[float] = []
    reports: list[MetricReport] = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n) if config.shuffle else np.arange(n)
        batch_losses: list[float] = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            if idx.size == 1 and config.norm_kind is NormKind.BATCH:
                continue  # training-mode batch norm cannot take a singleton
            logits, caches = forward(model, x[idx], a[idx], mode="training")
            loss, grad_logits = cross_entropy(logits, y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, "
                    f"batch {start // config.batch_size}"
                )
            grads = backward(model, caches, grad_logits)
            adamw_step(params, named_gradients(model, grads), state, config.optimizer)
            batch_losses.append(loss)
        losses.append(float(np.mean(batch_losses)))
        reports.append(_evaluate(model, eval_set, config.threshold)[1])
    checkpoint = Checkpoint(
        version=CHECKPOINT_VERSION, config=config, model=model, epoch=config.epochs
    )
    return checkpoint, RunHistory(losses=losses, reports=reports)


# ---------------------------------------------------------------------------
# multi-seed protocol


@dataclass(frozen=True)
class MetricSummary:
    mean: float | None
    std: float | None
    per_seed: tuple[float | None, ...]


@dataclass
class SeedAggregate:
    seeds: tuple[int, ...]
    metrics: dict[str, MetricSummary]
    es_from_means: dict[str, float | None]  # alternative aggregation, for comparison
    reports: tuple[MetricReport, ...]
    checkpoints: tuple[Checkpoint, ...]
    histories: tuple[RunHistory, ...]


def _summarize(values: list[float | None]) -> MetricSummary:
    """Mean and sample std (ddof 1; 0 when n == 1), None-propagating.

    Values are sorted before reduction so the result is bit-identical
    under any permutation of the seed list.
    """
    if any(v is None for v in values):
        return MetricSummary(mean=None, std=None, per_seed=tuple(values))
    arr = np.sort(np.asarray(values, dtype=np.float64))
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return MetricSummary(mean=float(arr.mean()), std=std, per_seed=tuple(values))


def _scalar_metrics(report: MetricReport, group_count: int) -> dict[str, float | None]:
    out: dict[str, float | None] = {
        "acc": report.overall["accuracy"],
        "auc": report.overall["auc"],
        "es_acc": report.equity_scaled["accuracy"],
        "es_auc": report.equity_scaled["auc"],
        "dpd": report.dpd,
        "deodds": report.deodds,
    }
    for g in range(group_count):
        row = report.per_group.get(g, {})
        out[f"acc_group{g}"] = row.get("accuracy")
        out[f"auc_group{g}"] = row.get("auc")
    return out


def _es_from_means(
    metrics: dict[str, MetricSummary], group_count: int
) -> dict[str, float | None]:
    """ES of the seed-averaged metrics (instead of the mean of per-seed ES)."""
    out: dict[str, float | None] = {}
    for name, prefix in (("acc", "acc_group"), ("auc", "auc_group")):
        overall = metrics[name].mean
        groups = {
            g: metrics[f"{prefix}{g}"].mean
            for g in range(group_count)
            if metrics[f"{prefix}{g}"].mean is not None
        }
        if overall is None or not groups:
            out[f"es_{name}"] = None
        else:
            out[f"es_{name}"] = equity_scaled(overall, discrepancy(overall, groups))
    return out


def run_seeds(
    train_set: Dataset,
    eval_set: Dataset,
    config: TrainConfig,
    seeds,
    max_workers: int = 1,
) -> SeedAggregate:
    """Train once per seed and aggregate the final evaluation reports.

    Equity-scaled metrics are computed per seed and then averaged; the
    alternative (ES of the seed-averaged metrics) is reported alongside in
    es_from_means. Runs are independent, so max_workers > 1 parallelizes
    them without changing any result.
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValidationError("need at least one seed")

    def one(seed: int) -> tuple[Checkpoint, RunHistory]:
        return train(train_set, eval_set, replace(config, seed=seed))

    if max_workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
            runs = list(pool.map(one, seeds))
    else:
        runs = [one(s) for s in seeds]
    checkpoints = tuple(r[0] for r in runs)
    histories = tuple(r[1] for r in runs)
    reports = tuple(h.reports[-1] for h in histories)
    group_count = eval_set.attribute_set.group_count
    per_seed = [_scalar_metrics(rep, group_count) for rep in reports]
    names = per_seed[0].keys()
    metrics = {name: _summarize([row[name] for row in per_seed]) for name in names}
    return SeedAggregate(
        seeds=seeds,
        metrics=metrics,
        es_from_means=_es_from_means(metrics, group_count),
        reports=reports,
        checkpoints=checkpoints,
        histories=histories,
    )


def sweep_momentum(
    train_set: Dataset,
    eval_set: Dataset,
    config: TrainConfig,
    grid,
    seeds,
    max_workers: int = 1,
) -> list[tuple[float, SeedAggregate]]:
    """run_seeds at every blend value in the grid, identical seeds throughout.

    The model kind is forced to the group-aware normalizer (the blend has
    no effect on the other kinds). Results come back sorted by m ascending.
    """
    grid = sorted(float(m) for m in grid)
    if not grid:
        raise ValidationError("momentum grid is empty")
    for m in grid:
        if not 0.0 <= m <= 1.0:
            raise ValidationError(f"momentum grid values must lie in [0, 1], got {m}")
    out: list[tuple[float, SeedAggregate]] = []
    for m in grid:
        cfg = replace(config, norm_kind=NormKind.FAIR_IDENTITY, fin_momentum=m)
        out.append((m, run_seeds(train_set, eval_set, cfg, seeds, max_workers)))
    return out


# ---------------------------------------------------------------------------
# checkpoint serialization


def train_config_to_dict(config: TrainConfig) -> dict:
    opt = config.optimizer
    return {
        "layer_dims": list(config.layer_dims),
        "norm_kind": config.norm_kind.value,
        "fin_momentum": config.fin_momentum,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "optimizer": {
            "lr": opt.lr,
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "eps": opt.eps,
            "weight_decay": opt.weight_decay,
        },
        "seed": config.seed,
        "threshold": config.threshold,
        "shuffle": config.shuffle,
    }


def train_config_from_dict(data: dict) -> TrainConfig:
    try:
        opt = data.get("optimizer", {})
        return TrainConfig(
            layer_dims=tuple(data["layer_dims"]),
            norm_kind=NormKind.from_string(data["norm_kind"]),
            fin_momentum=float(data.get("fin_momentum", 0.3)),
            epochs=int(data["epochs"]),
            batch_size=int(data["batch_size"]),
            optimizer=AdamWConfig(
                lr=float(opt.get("lr", 5e-5)),
                beta1=float(opt.get("beta1", 0.9)),
                beta2=float(opt.get("beta2", 0.999)),
                eps=float(opt.get("eps", 1e-8)),
                weight_decay=float(opt.get("weight_decay", 0.0)),
            ),
            seed=int(data.get("seed", 0)),
            threshold=float(data.get("threshold", 0.5)),
            shuffle=bool(data.get("shuffle", True)),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad train config: {exc!r}") from exc


def checkpoint_to_dict(ck: Checkpoint) -> dict:
    model = ck.model
    if model.norm_kind is NormKind.NONE:
        norm = None
    elif model.norm_kind is NormKind.BATCH:
        norm = {
            "kind": model.norm_kind.value,
            "gamma": model.norm.gamma,
            "beta": model.norm.beta,
            "running_mean": model.norm.running_mean,
            "running_var": model.norm.running_var,
            "eps": model.norm.eps,
            "bn_momentum": model.norm.bn_momentum,
        }
    else:
        norm = {
            "kind": model.norm_kind.value,
            "mu": model.norm.mu,
            "tau": model.norm.tau,
            "m": model.norm.momentum,
        }
    return {
        "version": ck.version,
        "config": train_config_to_dict(ck.config),
        "backbone": [{"w": layer.w, "b": layer.b} for layer in model.backbone],
        "norm": norm,
        "head": {"w": model.head.w, "b": model.head.b},
        "epoch": ck.epoch,
    }


def save_checkpoint(ck: Checkpoint, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(dumps_canonical(checkpoint_to_dict(ck)))
        f.write("\n")


def _as_array(obj, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=np.float64)
    if arr.shape != shape:
        raise CheckpointShapeError(f"{what}: expected shape {shape}, got {arr.shape}")
    return arr


def checkpoint_from_dict(data: dict) -> Checkpoint:
    if not isinstance(data, dict):
        raise CheckpointFormatError("checkpoint must be a JSON object")
    try:
        version = data["version"]
        config_data = data["config"]
        backbone_data = data["backbone"]
        norm_data = data["norm"]
        head_data = data["head"]
        epoch = int(data["epoch"])
    except (KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"checkpoint missing key: {exc!r}") from exc
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint version {version!r}; this build reads "
            f"version {CHECKPOINT_VERSION}"
        )
    config = train_config_from_dict(config_data)
    dims = config.layer_dims
    if not isinstance(backbone_data, list) or len(backbone_data) != len(dims) - 1:
        raise CheckpointShapeError(
            f"backbone: expected {len(dims) - 1} layers, "
            f"got {len(backbone_data) if isinstance(backbone_data, list) else '?'}"
        )
    try:
        backbone = [
            AffineLayer(
                w=_as_array(layer["w"], (dims[i], dims[i + 1]), f"backbone.{i}.w"),
                b=_as_array(layer["b"], (dims[i + 1],), f"backbone.{i}.b"),
            )
            for i, layer in enumerate(backbone_data)
        ]
        feature_dim = dims[-1]
        head = AffineLayer(
            w=_as_array(head_data["w"], (feature_dim, 2), "head.w"),
            b=_as_array(head_data["b"], (2,), "head.b"),
        )
        if config.norm_kind is NormKind.NONE:
            if norm_data is not None:
                raise CheckpointShapeError("norm must be null for the identity kind")
            norm = None
        elif config.norm_kind is NormKind.BATCH:
            norm = BatchNormState(
                gamma=_as_array(norm_data["gamma"], (feature_dim,), "norm.gamma"),
                beta=_as_array(norm_data["beta"], (feature_dim,), "norm.beta"),
                running_mean=_as_array(
                    norm_data["running_mean"], (feature_dim,), "norm.running_mean"
                ),
                running_var=_as_array(
                    norm_data["running_var"], (feature_dim,), "norm.running_var"
                ),
                eps=float(norm_data["eps"]),
                bn_momentum=float(norm_data["bn_momentum"]),
            )
        else:
            mu = np.asarray(norm_data["mu"], dtype=np.float64)
            if mu.ndim != 2 or mu.shape[1] != feature_dim:
                raise CheckpointShapeError(
                    f"norm.mu: expected (groups, {feature_dim}), got {mu.shape}"
                )
            if config.norm_kind is NormKind.LEARNABLE_SHARED and mu.shape[0] != 1:
                raise CheckpointShapeError(
                    f"norm.mu: shared normalizer needs 1 group, got {mu.shape[0]}"
                )
            norm = FinParams(
                mu=mu,
                tau=_as_array(norm_data["tau"], mu.shape, "norm.tau"),
                momentum=float(norm_data["m"]),
            )
    except (KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"checkpoint missing key: {exc!r}") from exc
    model = MlpModel(
        backbone=backbone, norm_kind=config.norm_kind, norm=norm, head=head
    )
    return Checkpoint(version=version, config=config, model=model, epoch=epoch)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        data = load_json(path, what="checkpoint")
    except ValidationError as exc:
        raise CheckpointFormatError(str(exc)) from exc
    return checkpoint_from_dict(data)
