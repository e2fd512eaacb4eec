"""Performance and group-fairness evaluation.

Gap definitions (two groups, positive class +1):

* demographic parity gap  dp = |P(pred=1 | A=1) - P(pred=1 | A=0)|
* equal opportunity gap   eo = |P(pred=1 | Y=1, A=1) - P(pred=1 | Y=1, A=0)|

When a group has no gold positives the eo gap is undefined and reported
as NaN with ``eo_defined=False`` rather than silently as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ValidationError, WeakLabelMatrix

_METRIC_KEYS = ("accuracy", "f1", "dp_gap", "eo_gap")


@dataclass(frozen=True)
class FairnessReport:
    accuracy: float
    f1: float
    dp_gap: float
    eo_gap: float
    per_group_accuracy: tuple[float, float]
    positive_rate_per_group: tuple[float, float]
    eo_defined: bool = True

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "dp_gap": self.dp_gap,
            "eo_gap": None if not self.eo_defined else self.eo_gap,
            "eo_defined": self.eo_defined,
            "per_group_accuracy": list(self.per_group_accuracy),
            "positive_rate_per_group": list(self.positive_rate_per_group),
        }


@dataclass(frozen=True)
class RegimeProfile:
    """Chosen center plus per-group cumulative accuracy curves.

    ``curves[k]`` is a list of (farthest_distance, cumulative_accuracy)
    pairs for group k, ordered by growing neighborhoods around the center.
    """

    center_index: int
    curves: tuple[tuple[tuple[float, float], ...], tuple[tuple[float, float], ...]]


def _check_pm1(x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x)
    if not np.isin(x, (-1, 1)).all():
        raise ValidationError(f"{what} entries must be in {{-1, +1}}")
    return x.astype(np.int64)


def fairness_report(
    pred: np.ndarray, gold: np.ndarray, groups: np.ndarray
) -> FairnessReport:
    """Accuracy, F1 and the two group gaps for hard +-1 predictions."""
    pred = _check_pm1(pred, "pred")
    gold = _check_pm1(gold, "gold")
    groups = np.asarray(groups)
    if not (pred.shape == gold.shape == groups.shape) or pred.ndim != 1:
        raise ValidationError("pred, gold and groups must share one length")
    if not np.isin(groups, (0, 1)).all():
        raise ValidationError("groups entries must be in {0, 1}")
    masks = [groups == k for k in (0, 1)]
    if not (masks[0].any() and masks[1].any()):
        raise ValidationError("both groups must be non-empty")

    accuracy = float((pred == gold).mean())
    tp = int(((pred == 1) & (gold == 1)).sum())
    fp = int(((pred == 1) & (gold == -1)).sum())
    fn = int(((pred == -1) & (gold == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)

    pos_rate = tuple(float((pred[m] == 1).mean()) for m in masks)
    grp_acc = tuple(float((pred[m] == gold[m]).mean()) for m in masks)
    dp_gap = abs(pos_rate[1] - pos_rate[0])

    tpr = []
    for m in masks:
        pos = m & (gold == 1)
        tpr.append(float((pred[pos] == 1).mean()) if pos.any() else math.nan)
    eo_defined = not any(math.isnan(t) for t in tpr)
    eo_gap = abs(tpr[1] - tpr[0]) if eo_defined else math.nan

    return FairnessReport(
        accuracy=accuracy,
        f1=f1,
        dp_gap=dp_gap,
        eo_gap=eo_gap,
        per_group_accuracy=grp_acc,
        positive_rate_per_group=pos_rate,
        eo_defined=eo_defined,
    )


def _delta(after: FairnessReport, before: FairnessReport) -> dict:
    out = {}
    for key in _METRIC_KEYS:
        x, y = getattr(after, key), getattr(before, key)
        out[key] = (x - y) if (math.isfinite(x) and math.isfinite(y)) else None
    return out


def lf_delta_report(
    before: WeakLabelMatrix,
    after: WeakLabelMatrix,
    gold: np.ndarray,
    groups: np.ndarray,
    names: list[str] | None = None,
) -> list[dict]:
    """Per-LF fairness reports for two vote matrices plus their deltas.

    Each LF is scored on the rows where it is non-abstaining in both
    matrices, so the before/after comparison covers a common row set.
    """
    if before.votes.shape != after.votes.shape:
        raise ValidationError("before/after vote shapes differ")
    gold = np.asarray(gold)
    groups = np.asarray(groups)
    if gold.shape != (before.n,) or groups.shape != (before.n,):
        raise ValidationError("gold/groups lengths must match the votes")
    if names is None:
        names = [f"lf_{j}" for j in range(before.m)]
    if len(names) != before.m:
        raise ValidationError("need one name per LF")
    rows = []
    for j in range(before.m):
        active = (before.votes[:, j] != 0) & (after.votes[:, j] != 0)
        if not active.any():
            raise ValidationError(f"{names[j]}: no mutually non-abstaining rows")
        try:
            rep_before = fairness_report(
                before.votes[active, j], gold[active], groups[active])
            rep_after = fairness_report(
                after.votes[active, j], gold[active], groups[active])
        except ValidationError as exc:
            raise ValidationError(f"{names[j]}: {exc}") from exc
        rows.append({
            "name": names[j],
            "before": rep_before,
            "after": rep_after,
            "delta": _delta(rep_after, rep_before),
        })
    return rows


def regime_profile(
    X: np.ndarray,
    correct_mask: np.ndarray,
    groups: np.ndarray,
    candidate_centers: list[int],
    neighborhood_frac: float = 0.10,
    step_frac: float = 0.02,
) -> RegimeProfile:
    """Locate the best-accuracy center and trace per-group accuracy decay.

    The center is the candidate whose nearest ``neighborhood_frac`` share
    of all points is most accurate (ties favor the earlier candidate).
    Each group's curve then grows the included set in ``step_frac`` steps
    ordered by distance to that center, recording the farthest included
    distance and the cumulative accuracy.
    """
    X = np.asarray(X, dtype=np.float64)
    correct = np.asarray(correct_mask, dtype=bool)
    groups = np.asarray(groups)
    if X.ndim != 2 or correct.shape != (X.shape[0],) \
            or groups.shape != (X.shape[0],):
        raise ValidationError("X, correct_mask and groups are inconsistent")
    if len(candidate_centers) == 0:
        raise ValidationError("candidate set must be non-empty")
    if not (0 < neighborhood_frac <= 1 and 0 < step_frac <= 1):
        raise ValidationError("fractions must lie in (0, 1]")
    n = X.shape[0]
    k_neigh = int(neighborhood_frac * n)
    if k_neigh == 0:
        raise ValidationError(
            f"{neighborhood_frac:.0%} of {n} points is an empty neighborhood")

    best_idx, best_acc = -1, -np.inf
    for c in candidate_centers:
        dist = np.linalg.norm(X - X[c], axis=1)
        nearest = np.lexsort((np.arange(n), dist))[:k_neigh]
        acc = float(correct[nearest].mean())
        if acc > best_acc:
            best_idx, best_acc = int(c), acc

    dist = np.linalg.norm(X - X[best_idx], axis=1)
    curves = []
    for k in (0, 1):
        mask = groups == k
        if not mask.any():
            raise ValidationError(f"empty group {k}")
        n_k = int(mask.sum())
        order = np.lexsort((np.arange(n_k), dist[mask]))
        d_k = dist[mask][order]
        c_k = correct[mask][order]
        step = max(1, int(step_frac * n_k))
        pts = []
        for stop in range(step, n_k + step, step):
            stop = min(stop, n_k)
            pts.append((float(d_k[stop - 1]), float(c_k[:stop].mean())))
            if stop == n_k:
                break
        curves.append(tuple(pts))
    return RegimeProfile(center_index=best_idx, curves=tuple(curves))
