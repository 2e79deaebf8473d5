"""Data model for identity-attributed samples and scored predictions.

Everything downstream (metrics, training, file formats) speaks in terms of
these types. Attributes are digitized group memberships: an integer id into
an ordered set of group names. All containers are immutable after
construction; feature arrays are copied and marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Attribute:
    """Identity group membership as a 0-based index into an AttributeSet."""

    id: int

    def __post_init__(self):
        if not isinstance(self.id, (int, np.integer)) or isinstance(self.id, bool):
            raise ValidationError(f"attribute id must be an integer, got {self.id!r}")
        if self.id < 0:
            raise ValidationError(f"attribute id must be non-negative, got {self.id}")
        object.__setattr__(self, "id", int(self.id))


@dataclass(frozen=True)
class AttributeSet:
    """Ordered, unique, non-empty names of the identity groups."""

    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        if not names:
            raise ValidationError("attribute set needs at least one group name")
        if any(not isinstance(n, str) or not n for n in names):
            raise ValidationError("group names must be non-empty strings")
        if len(set(names)) != len(names):
            raise ValidationError(f"group names must be unique, got {names}")
        object.__setattr__(self, "names", names)

    @property
    def group_count(self) -> int:
        return len(self.names)

    @classmethod
    def default(cls, group_count: int) -> "AttributeSet":
        """group0..group{k-1} placeholder names."""
        if group_count < 1:
            raise ValidationError("group_count must be >= 1")
        return cls(tuple(f"group{i}" for i in range(group_count)))


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """One training/evaluation example: features, binary label, attribute.

    sample_id is an opaque string; uniqueness is enforced at ingestion
    (CSV readers), not here.
    """

    features: np.ndarray
    label: int
    attribute: Attribute
    sample_id: str = ""

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64)  # copy, own it
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True, eq=False)
class Dataset:
    """A fixed feature dimension, an attribute set, and the samples."""

    d: int
    attribute_set: AttributeSet
    samples: tuple[LabeledSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def feature_matrix(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, self.d))
        return np.stack([s.features for s in self.samples])

    def label_vector(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def attr_vector(self) -> np.ndarray:
        return np.array([s.attribute.id for s in self.samples], dtype=np.intp)

    def ids(self) -> tuple[str, ...]:
        return tuple(s.sample_id for s in self.samples)


@dataclass(frozen=True)
class PredictionRecord:
    """A scored prediction for one sample: id, score in [0,1], label, group."""

    id: str
    score: float
    label: int
    attribute: Attribute

    def __post_init__(self):
        score = float(self.score)
        if not np.isfinite(score) or not 0.0 <= score <= 1.0:
            raise ValidationError(
                f"record {self.id!r}: score must lie in [0, 1], got {self.score!r}"
            )
        label = int(self.label)
        if label not in (0, 1):
            raise ValidationError(
                f"record {self.id!r}: label must be 0 or 1, got {self.label!r}"
            )
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "label", label)


@dataclass(frozen=True, eq=False)
class GroupPartition:
    """Disjoint index arrays per group id; empty groups map to empty arrays.

    The union of the index arrays covers every record exactly once.
    Treated as read-only everywhere.
    """

    indices_by_group: Mapping[int, np.ndarray]

    @property
    def group_count(self) -> int:
        return len(self.indices_by_group)

    def nonempty_groups(self) -> tuple[int, ...]:
        return tuple(
            g for g in sorted(self.indices_by_group) if self.indices_by_group[g].size
        )

    def sizes(self) -> dict[int, int]:
        return {g: int(ix.size) for g, ix in sorted(self.indices_by_group.items())}


def partition_from_ids(attr_ids: np.ndarray, group_count: int) -> GroupPartition:
    """Partition positions 0..n-1 by integer attribute id."""
    attr_ids = np.asarray(attr_ids)
    bad = np.flatnonzero((attr_ids < 0) | (attr_ids >= group_count))
    if bad.size:
        raise ValidationError(
            f"record {int(bad[0])}: attribute id {int(attr_ids[bad[0]])} out of "
            f"range for {group_count} groups"
        )
    indices = {
        g: np.flatnonzero(attr_ids == g).astype(np.intp) for g in range(group_count)
    }
    return GroupPartition(indices)


def partition_by_attribute(
    records: Sequence[PredictionRecord], attribute_set: AttributeSet
) -> GroupPartition:
    """Group record positions by attribute id.

    An out-of-range attribute raises a validation error naming the record.
    """
    ids = np.array([r.attribute.id for r in records], dtype=np.intp)
    for pos, rec in enumerate(records):
        if rec.attribute.id >= attribute_set.group_count:
            raise ValidationError(
                f"record {pos} (id={rec.id!r}): attribute id {rec.attribute.id} "
                f"out of range for {attribute_set.group_count} groups"
            )
    return partition_from_ids(ids, attribute_set.group_count)


@dataclass(frozen=True)
class Violation:
    """One validation finding; index is None for dataset-level problems."""

    index: int | None
    reason: str


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Check every sample against the dataset's declared structure.

    Returns an empty list when the dataset is valid. Checks: at least one
    sample, feature length == d, finite features, binary labels, attribute
    ids within the attribute set.
    """
    out: list[Violation] = []
    if dataset.d < 1:
        out.append(Violation(None, f"feature dimension must be >= 1, got {dataset.d}"))
    if not dataset.samples:
        out.append(Violation(None, "dataset has no samples"))
        return out
    g = dataset.attribute_set.group_count
    for i, s in enumerate(dataset.samples):
        if s.features.shape != (dataset.d,):
            out.append(
                Violation(i, f"feature shape {s.features.shape} != ({dataset.d},)")
            )
        elif not np.all(np.isfinite(s.features)):
            out.append(Violation(i, "non-finite feature value"))
        if s.label not in (0, 1):
            out.append(Violation(i, f"label {s.label} not in {{0, 1}}"))
        if s.attribute.id >= g:
            out.append(
                Violation(i, f"attribute id {s.attribute.id} out of range for {g} groups")
            )
    return out


def require_valid(dataset: Dataset, what: str = "dataset") -> None:
    """Raise ValidationError with the first few violations, if any."""
    violations = validate_dataset(dataset)
    if violations:
        head = "; ".join(
            f"[{v.index if v.index is not None else '-'}] {v.reason}"
            for v in violations[:5]
        )
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        raise ValidationError(f"{what} invalid: {head}{more}")
