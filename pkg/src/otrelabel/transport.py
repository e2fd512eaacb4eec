"""The repair step: pick a transport direction from estimated per-group
accuracies, map the low-accuracy group's feature points onto the
high-accuracy group, and re-assign its weak labels by nearest neighbors.

Only the source (low-accuracy) group's votes are ever rewritten; the
destination group's votes are untouched by construction.  The direction
decision uses estimated accuracies exclusively, never gold labels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

from .core import (
    AccuracyEstimate,
    GroupedDataset,
    NumericalError,
    PipelineConfig,
    ValidationError,
    WeakLabelMatrix,
    require_vote_values,
    validate_dataset,
)
from .ot import apply_monge, barycentric_map, fit_moments, linear_monge, sinkhorn_plan

logger = logging.getLogger("otrelabel")

_CHUNK = 256


@dataclass(frozen=True)
class TransportDecision:
    """Record of one direction decision (per LF, or "all" in global mode)."""

    lf_index: Union[int, str]
    src_group: int
    dst_group: int
    acc_src: float
    acc_dst: float
    skipped: bool = False
    reason: str = ""


@dataclass(frozen=True)
class RelabelResult:
    new_votes: WeakLabelMatrix
    changed_mask: np.ndarray
    decisions: list[TransportDecision]


def knn_transfer(
    X_query: np.ndarray,
    X_dst: np.ndarray,
    votes_dst: np.ndarray,
    k: int,
) -> np.ndarray:
    """Majority vote among the k nearest destination rows (Euclidean).

    Deterministic tie handling: exact distance ties prefer the lower row
    index; a tied majority falls back to the nearest non-abstaining
    neighbor's vote.  Abstaining neighbors are excluded from the majority;
    if all k neighbors abstain the transferred vote is abstain.
    """
    X_query = np.asarray(X_query, dtype=np.float64)
    X_dst = np.asarray(X_dst, dtype=np.float64)
    votes_dst = np.asarray(votes_dst, dtype=np.int64)
    if X_dst.shape[0] == 0:
        raise ValidationError("destination set is empty")
    if X_query.ndim != 2 or X_dst.ndim != 2 \
            or X_query.shape[1] != X_dst.shape[1]:
        raise ValidationError("query/destination dimensions differ")
    if votes_dst.shape != (X_dst.shape[0],):
        raise ValidationError("votes_dst length must match X_dst rows")
    require_vote_values(votes_dst)
    if not 1 <= k <= X_dst.shape[0]:
        raise ValidationError(
            f"k must be in [1, {X_dst.shape[0]}], got {k}")

    n_dst = X_dst.shape[0]
    out = np.empty(X_query.shape[0], dtype=np.int64)
    for start in range(0, X_query.shape[0], _CHUNK):
        chunk = X_query[start:start + _CHUNK]
        dist = cdist(chunk, X_dst, metric="euclidean")
        if k == 1:
            # argmin returns the first (lowest-index) minimum
            out[start:start + _CHUNK] = votes_dst[np.argmin(dist, axis=1)]
            continue
        for r in range(chunk.shape[0]):
            order = np.lexsort((np.arange(n_dst), dist[r]))[:k]
            votes = votes_dst[order]
            votes = votes[votes != 0]
            if votes.size == 0:
                out[start + r] = 0
                continue
            pos = int((votes > 0).sum())
            neg = votes.size - pos
            if pos > neg:
                out[start + r] = 1
            elif neg > pos:
                out[start + r] = -1
            else:
                out[start + r] = votes[0]
    return out


def _transported_sources(
    X_src: np.ndarray,
    X_dst: np.ndarray,
    cfg: PipelineConfig,
    d: int,
) -> np.ndarray:
    if cfg.ot_type == "none":
        return X_src
    if cfg.ot_type == "linear":
        for name, block in (("source", X_src), ("destination", X_dst)):
            if block.shape[0] < d + 1:
                raise ValidationError(
                    f"{name} group has {block.shape[0]} rows; covariance "
                    f"estimation needs at least d + 1 = {d + 1}")
        mm = linear_monge(
            fit_moments(X_src, cfg.covariance_ridge),
            fit_moments(X_dst, cfg.covariance_ridge),
        )
        return apply_monge(mm, X_src)
    cost = cdist(X_src, X_dst, metric="sqeuclidean")
    plan = sinkhorn_plan(
        cost,
        eta=cfg.sinkhorn_eta,
        max_iter=cfg.sinkhorn_max_iter,
        tol=cfg.sinkhorn_tol,
    )
    if not plan.converged:
        logger.info(
            "sinkhorn stopped after %d rounds with marginal violation "
            "%.2e (raise sinkhorn_max_iter to tighten)",
            plan.iterations_run, plan.marginal_violation)
    return barycentric_map(plan, X_dst)


def sbm_transport(
    ds: GroupedDataset,
    wl: WeakLabelMatrix,
    est: AccuracyEstimate,
    cfg: PipelineConfig,
) -> RelabelResult:
    """Repair the vote matrix by transporting the weaker group per LF.

    In ``per_lf`` scope each LF independently picks src = its lower
    estimated-accuracy group (skipped when the two estimates are within
    ``tie_tol``); in ``global`` scope one direction is chosen from the
    mean per-group accuracy and one shared map re-labels every LF.  The
    transported coordinates depend only on features, so they are computed
    once per (src, dst) direction and reused across LFs.
    """
    report = validate_dataset(ds, wl)
    if report:
        raise ValidationError("; ".join(report))
    if est.m != wl.m:
        raise ValidationError(
            f"estimate covers {est.m} LFs but matrix has {wl.m}")

    votes = wl.votes
    new_votes = votes.copy()
    decisions: list[TransportDecision] = []
    masks = {k: ds.group_mask(k) for k in (0, 1)}
    feats = {k: ds.features[masks[k]] for k in (0, 1)}
    transported_cache: dict[tuple[int, int], np.ndarray] = {}

    def transported(src: int, dst: int, context: str) -> np.ndarray:
        key = (src, dst)
        if key not in transported_cache:
            try:
                transported_cache[key] = _transported_sources(
                    feats[src], feats[dst], cfg, ds.d)
            except (ValidationError, NumericalError) as exc:
                raise type(exc)(f"{context}: {exc}") from exc
        return transported_cache[key]

    def relabel_column(j: int, src: int, dst: int, context: str) -> None:
        if feats[dst].shape[0] < cfg.knn_k:
            raise ValidationError(
                f"{context}: destination group {dst} has "
                f"{feats[dst].shape[0]} rows, fewer than k={cfg.knn_k}")
        moved = knn_transfer(
            transported(src, dst, context), feats[dst],
            votes[masks[dst], j], cfg.knn_k)
        new_votes[masks[src], j] = moved

    if cfg.transport_scope == "per_lf":
        for j in range(wl.m):
            a0, a1 = est.per_lf_group[j]
            if abs(a0 - a1) <= cfg.tie_tol:
                decisions.append(TransportDecision(
                    j, 0, 1, float(a0), float(a1),
                    skipped=True, reason="tie"))
                continue
            src = 0 if a0 < a1 else 1
            dst = 1 - src
            relabel_column(j, src, dst, f"lf_{j}")
            decisions.append(TransportDecision(
                j, src, dst,
                float(est.per_lf_group[j, src]),
                float(est.per_lf_group[j, dst])))
    else:
        mean_acc = est.per_lf_group.mean(axis=0)
        if abs(mean_acc[0] - mean_acc[1]) <= cfg.tie_tol:
            decisions.append(TransportDecision(
                "all", 0, 1, float(mean_acc[0]), float(mean_acc[1]),
                skipped=True, reason="tie"))
        else:
            src = 0 if mean_acc[0] < mean_acc[1] else 1
            dst = 1 - src
            for j in range(wl.m):
                relabel_column(j, src, dst, f"lf_{j}")
            decisions.append(TransportDecision(
                "all", src, dst,
                float(mean_acc[src]), float(mean_acc[dst])))

    changed = new_votes != votes
    return RelabelResult(
        new_votes=WeakLabelMatrix(new_votes),
        changed_mask=changed,
        decisions=decisions,
    )
