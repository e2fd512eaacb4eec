"""Shared data model, validation, and error taxonomy.

Conventions used throughout the package:

* weak labels (votes) take values in ``{-1, 0, +1}`` where ``0`` means the
  labeling function abstained on that row;
* exactly two groups, encoded ``0`` and ``1``;
* gold labels, when present, are in ``{-1, +1}`` and are used for
  evaluation only.

Containers are frozen dataclasses wrapping read-only numpy arrays, so they
can be shared across workers without defensive copies.  Construction only
checks structure (shape / dtype); value-level problems are reported by
:func:`validate_dataset` so that malformed inputs can be diagnosed instead
of raising on the first bad cell.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

VOTE_VALUES = (-1, 0, 1)


class ValidationError(ValueError):
    """Raised for malformed or inconsistent inputs."""


class NumericalError(ArithmeticError):
    """Raised when a computation degenerates (singular matrix, underflow,
    non-finite objective, unusable moment estimates)."""


def _frozen_array(x, dtype) -> np.ndarray:
    a = np.array(x, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeakLabelMatrix:
    """n x m matrix of labeling-function votes in {-1, 0, +1}."""

    votes: np.ndarray

    def __post_init__(self):
        v = _frozen_array(self.votes, np.int64)
        if v.ndim != 2:
            raise ValidationError(f"votes must be 2-D, got ndim={v.ndim}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValidationError(f"votes must be at least 1x1, got {v.shape}")
        object.__setattr__(self, "votes", v)

    @property
    def n(self) -> int:
        return self.votes.shape[0]

    @property
    def m(self) -> int:
        return self.votes.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.votes[:, j]

    def restrict_rows(self, mask: np.ndarray) -> "WeakLabelMatrix":
        return WeakLabelMatrix(self.votes[np.asarray(mask)])


@dataclass(frozen=True)
class GroupedDataset:
    """Feature matrix plus group assignment and optional gold labels."""

    features: np.ndarray
    groups: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        f = _frozen_array(self.features, np.float64)
        g = _frozen_array(self.groups, np.int64)
        if f.ndim != 2:
            raise ValidationError(f"features must be 2-D, got ndim={f.ndim}")
        if g.shape != (f.shape[0],):
            raise ValidationError(
                f"groups must be a length-{f.shape[0]} vector, got {g.shape}")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "groups", g)
        if self.labels is not None:
            l = _frozen_array(self.labels, np.int64)
            if l.shape != (f.shape[0],):
                raise ValidationError(
                    f"labels must be a length-{f.shape[0]} vector, "
                    f"got {l.shape}")
            object.__setattr__(self, "labels", l)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def group_mask(self, k: int) -> np.ndarray:
        return self.groups == k

    def without_labels(self) -> "GroupedDataset":
        """Copy with gold labels stripped; estimation and transport stages
        receive their inputs through this so labels cannot leak."""
        return GroupedDataset(self.features, self.groups, None)


@dataclass(frozen=True)
class AccuracyEstimate:
    """Estimated LF accuracies, globally and per group.

    ``per_lf_global[j]`` estimates E[lambda_j * y]; ``per_lf_group[j, k]``
    the same restricted to group k.  ``aggregation`` records how values
    from individual triplets were combined.
    """

    per_lf_global: np.ndarray
    per_lf_group: np.ndarray
    aggregation: str = "median"

    def __post_init__(self):
        g = _frozen_array(self.per_lf_global, np.float64)
        p = _frozen_array(self.per_lf_group, np.float64)
        if g.ndim != 1:
            raise ValidationError("per_lf_global must be 1-D")
        if p.shape != (g.shape[0], 2):
            raise ValidationError(
                f"per_lf_group must be {g.shape[0]}x2, got {p.shape}")
        if np.any(np.abs(g) > 1 + 1e-12) or np.any(np.abs(p) > 1 + 1e-12):
            raise ValidationError("accuracy estimates must lie in [-1, 1]")
        if self.aggregation not in ("median", "mean"):
            raise ValidationError(f"unknown aggregation {self.aggregation!r}")
        object.__setattr__(self, "per_lf_global", g)
        object.__setattr__(self, "per_lf_group", p)

    @property
    def m(self) -> int:
        return self.per_lf_global.shape[0]


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the end-to-end repair pipeline.

    Defaults mirror the reference transport settings: 1 nearest neighbor,
    entropic regularization 1 with 10 scaling rounds.
    """

    ot_type: str = "none"
    knn_k: int = 1
    sinkhorn_eta: float = 1.0
    sinkhorn_max_iter: int = 10
    sinkhorn_tol: float = 1e-9
    covariance_ridge: float = 1e-6
    transport_scope: str = "per_lf"
    class_balance: float = 0.5
    tie_tol: float = 0.01
    seed: int = 0
    end_model: bool = True
    epochs: int = 500
    lr: float = 0.1
    l2: float = 1e-4

    def __post_init__(self):
        if self.ot_type not in ("none", "linear", "sinkhorn"):
            raise ValidationError(f"unknown ot_type {self.ot_type!r}")
        if self.transport_scope not in ("per_lf", "global"):
            raise ValidationError(
                f"unknown transport_scope {self.transport_scope!r}")
        if self.knn_k < 1:
            raise ValidationError("knn_k must be >= 1")
        if self.sinkhorn_eta <= 0:
            raise ValidationError("sinkhorn_eta must be positive")
        if self.sinkhorn_max_iter < 1:
            raise ValidationError("sinkhorn_max_iter must be >= 1")
        if self.sinkhorn_tol <= 0:
            raise ValidationError("sinkhorn_tol must be positive")
        if self.covariance_ridge < 0:
            raise ValidationError("covariance_ridge must be nonnegative")
        if not 0.0 < self.class_balance < 1.0:
            raise ValidationError("class_balance must be in (0, 1)")
        if self.tie_tol < 0:
            raise ValidationError("tie_tol must be nonnegative")
        if self.epochs < 1 or self.lr <= 0 or self.l2 < 0:
            raise ValidationError("bad end-model hyperparameters")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def validate_dataset(ds: GroupedDataset, wl: WeakLabelMatrix) -> list[str]:
    """Return a list of human-readable violations; empty means consistent.

    Idempotent and side-effect free.  Downstream operations refuse inputs
    for which this report is non-empty.
    """
    report: list[str] = []
    if ds.n != wl.n:
        report.append(
            f"row-count mismatch: {ds.n} feature rows vs {wl.n} vote rows")
    if not np.all(np.isfinite(ds.features)):
        r, c = np.argwhere(~np.isfinite(ds.features))[0]
        report.append(f"non-finite feature at row {r}, column {c}")
    bad_votes = ~np.isin(wl.votes, VOTE_VALUES)
    for r, c in np.argwhere(bad_votes):
        report.append(
            f"illegal vote value {wl.votes[r, c]} at row {r}, lf {c}")
    bad_groups = ~np.isin(ds.groups, (0, 1))
    for (r,) in np.argwhere(bad_groups):
        report.append(f"illegal group value {ds.groups[r]} at row {r}")
    if not bad_groups.any():
        for k in (0, 1):
            if not np.any(ds.groups == k):
                report.append(f"empty group {k}")
    if ds.labels is not None:
        bad_labels = ~np.isin(ds.labels, (-1, 1))
        for (r,) in np.argwhere(bad_labels):
            report.append(f"illegal label value {ds.labels[r]} at row {r}")
    return report


def require_valid(ds: GroupedDataset, wl: WeakLabelMatrix) -> None:
    """Raise ValidationError when validate_dataset reports violations."""
    report = validate_dataset(ds, wl)
    if report:
        raise ValidationError("; ".join(report))


def require_vote_values(votes: np.ndarray) -> None:
    """Raise ValidationError when any entry falls outside {-1, 0, +1}."""
    votes = np.asarray(votes)
    bad = ~np.isin(votes, VOTE_VALUES)
    if bad.any():
        where = tuple(np.argwhere(bad)[0])
        raise ValidationError(
            f"illegal vote value {votes[where]} at position {where}")
