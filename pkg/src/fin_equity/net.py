"""A small double-precision MLP classifier with a normalizer before the head.

Architecture: affine backbone layers with a ramp activation between them
(none after the last), then one of the normalizers from `norms`, then a
linear head producing 2 logits. Forward and backward are written by hand;
no autodiff. The ramp's subgradient at 0 is taken to be 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CacheError, ValidationError
from .norms import (
    BatchNormState,
    FinParams,
    NormKind,
    bn_backward,
    bn_forward,
    fin_backward,
    fin_forward,
    init_fin,
    lbn_backward,
    lbn_forward,
)


@dataclass
class AffineLayer:
    w: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)


@dataclass
class MlpModel:
    backbone: list[AffineLayer]
    norm_kind: NormKind
    norm: FinParams | BatchNormState | None
    head: AffineLayer

    @property
    def input_dim(self) -> int:
        return self.backbone[0].w.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.head.w.shape[0]


def init_mlp(
    layer_dims,
    norm_kind: NormKind,
    group_count: int,
    rng: np.random.Generator,
    fin_momentum: float = 0.3,
) -> MlpModel:
    """Build a model with scaled-uniform fan-in weight init and zero biases.

    Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), giving
    variance 1/(3 * fan_in). Backbone and head weights are drawn before any
    normalizer parameters, so two models that differ only in norm_kind get
    identical backbone/head draws from the same generator state.
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValidationError(
            f"layer_dims needs >= 2 positive entries (input..feature), got {dims}"
        )
    if norm_kind is NormKind.FAIR_IDENTITY and group_count < 1:
        raise ValidationError(f"group_count must be >= 1, got {group_count}")

    def draw(fan_in: int, fan_out: int) -> AffineLayer:
        limit = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        return AffineLayer(w=w, b=np.zeros(fan_out))

    backbone = [draw(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    head = draw(dims[-1], 2)

    feature_dim = dims[-1]
    norm: FinParams | BatchNormState | None
    if norm_kind is NormKind.NONE:
        norm = None
    elif norm_kind is NormKind.BATCH:
        norm = BatchNormState.create(feature_dim)
    elif norm_kind is NormKind.LEARNABLE_SHARED:
        norm = init_fin(1, feature_dim, rng, momentum=fin_momentum)
    elif norm_kind is NormKind.FAIR_IDENTITY:
        norm = init_fin(group_count, feature_dim, rng, momentum=fin_momentum)
    else:  # pragma: no cover
        raise ValidationError(f"unknown norm kind {norm_kind!r}")
    return MlpModel(backbone=backbone, norm_kind=norm_kind, norm=norm, head=head)


@dataclass
class ForwardCaches:
    mode: str
    backbone: list[tuple[np.ndarray, np.ndarray | None]]  # (input, pre) per layer
    norm_cache: object | None
    head_input: np.ndarray
    consumed: bool = False


def forward(
    model: MlpModel, x, attrs=None, mode: str = "training"
) -> tuple[np.ndarray, ForwardCaches]:
    """Run the model; returns (logits, caches).

    attrs is required only for the group-aware normalizer, which errors on
    any out-of-range group id instead of falling back. Inference mode never
    mutates model state (batch-norm running statistics stay frozen).
    """
    if mode not in ("training", "inference"):
        raise ValidationError(f"mode must be 'training' or 'inference', got {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValidationError(
            f"input must be (batch, {model.input_dim}), got {x.shape}"
        )
    h = x
    backbone_caches: list[tuple[np.ndarray, np.ndarray | None]] = []
    last = len(model.backbone) - 1
    for i, layer in enumerate(model.backbone):
        pre = h @ layer.w + layer.b
        if i < last:
            backbone_caches.append((h, pre))
            h = np.maximum(pre, 0.0)
        else:
            backbone_caches.append((h, None))  # no activation after the last layer
            h = pre

    if model.norm_kind is NormKind.NONE:
        z_out, norm_cache = h, None
    elif model.norm_kind is NormKind.BATCH:
        z_out, norm_cache = bn_forward(h, model.norm, mode)
    elif model.norm_kind is NormKind.LEARNABLE_SHARED:
        z_out, norm_cache = lbn_forward(h, model.norm)
    else:
        if attrs is None:
            raise ValidationError(
                "group-aware normalizer needs an attribute id per row"
            )
        z_out, norm_cache = fin_forward(h, attrs, model.norm)

    logits = z_out @ model.head.w + model.head.b
    caches = ForwardCaches(
        mode=mode, backbone=backbone_caches, norm_cache=norm_cache, head_input=z_out
    )
    return logits, caches


def softmax(logits) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. logits.

    Uses the log-sum-exp form so large logits cannot overflow. The gradient
    is (softmax - onehot) / batch.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n = logits.shape[0]
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ValidationError(f"logits must be (batch, 2), got {logits.shape}")
    if labels.shape != (n,) or not np.isin(labels, (0, 1)).all():
        raise ValidationError("labels must be a 1-D array of 0/1 matching the batch")
    labels = labels.astype(np.intp)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, grad


@dataclass
class Gradients:
    backbone: list[tuple[np.ndarray, np.ndarray]]  # (dw, db) per layer
    norm: tuple[np.ndarray, np.ndarray] | None     # (dmu, dtau) or (dgamma, dbeta)
    head: tuple[np.ndarray, np.ndarray]


def backward(model: MlpModel, caches: ForwardCaches, grad_logits) -> Gradients:
    """Backpropagate grad_logits through head, normalizer, and backbone."""
    if caches.mode != "training":
        raise CacheError("backward requires caches from a training-mode forward")
    if caches.consumed:
        raise CacheError("forward caches already consumed by a backward pass")
    caches.consumed = True
    g = np.asarray(grad_logits, dtype=np.float64)
    if g.shape != (caches.head_input.shape[0], 2):
        raise CacheError(
            f"grad_logits shape {g.shape} does not match batch "
            f"({caches.head_input.shape[0]}, 2)"
        )

    grad_head_w = caches.head_input.T @ g
    grad_head_b = g.sum(axis=0)
    gz = g @ model.head.w.T

    norm_grads: tuple[np.ndarray, np.ndarray] | None
    if model.norm_kind is NormKind.NONE:
        norm_grads = None
    elif model.norm_kind is NormKind.BATCH:
        gz, dgamma, dbeta = bn_backward(gz, caches.norm_cache)
        norm_grads = (dgamma, dbeta)
    elif model.norm_kind is NormKind.LEARNABLE_SHARED:
        gz, dmu, dtau = lbn_backward(gz, caches.norm_cache)
        norm_grads = (dmu, dtau)
    else:
        gz, dmu, dtau = fin_backward(gz, caches.norm_cache)
        norm_grads = (dmu, dtau)

    backbone_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.backbone)
    for i in range(len(model.backbone) - 1, -1, -1):
        inp, pre = caches.backbone[i]
        gpre = gz if pre is None else gz * (pre > 0)  # ramp subgradient at 0 is 0
        backbone_grads[i] = (inp.T @ gpre, gpre.sum(axis=0))
        gz = gpre @ model.backbone[i].w.T
    return Gradients(backbone=backbone_grads, norm=norm_grads, head=(grad_head_w, grad_head_b))


def named_parameters(model: MlpModel) -> dict[str, np.ndarray]:
    """Flat name -> array view of every trainable parameter.

    Batch-norm running statistics are state, not parameters, and are
    excluded. Iteration order is fixed: backbone, normalizer, head.
    """
    out: dict[str, np.ndarray] = {}
    for i, layer in enumerate(model.backbone):
        out[f"backbone.{i}.w"] = layer.w
        out[f"backbone.{i}.b"] = layer.b
    if model.norm_kind in (NormKind.FAIR_IDENTITY, NormKind.LEARNABLE_SHARED):
        out["norm.mu"] = model.norm.mu
        out["norm.tau"] = model.norm.tau
    elif model.norm_kind is NormKind.BATCH:
        out["norm.gamma"] = model.norm.gamma
        out["norm.beta"] = model.norm.beta
    out["head.w"] = model.head.w
    out["head.b"] = model.head.b
    return out


def named_gradients(model: MlpModel, grads: Gradients) -> dict[str, np.ndarray]:
    """Gradient arrays keyed to match named_parameters."""
    out: dict[str, np.ndarray] = {}
    for i, (dw, db) in enumerate(grads.backbone):
        out[f"backbone.{i}.w"] = dw
        out[f"backbone.{i}.b"] = db
    if model.norm_kind in (NormKind.FAIR_IDENTITY, NormKind.LEARNABLE_SHARED):
        out["norm.mu"], out["norm.tau"] = grads.norm
    elif model.norm_kind is NormKind.BATCH:
        out["norm.gamma"], out["norm.beta"] = grads.norm
    out["head.w"], out["head.b"] = grads.head
    return out
