"""Synthetic generator used to stress the repair machinery numerically.

The generative model: latent points z are Gaussian; each group observes an
affine image of them (group 0 the identity by default).  A single noisy
labeler agrees with the true +-1 label at

    P(lambda(x) = y) = sigmoid(2 * theta0 * prox(x, center)),
    prox(x, center) = 1 / (1 + ||x - center||),

so accuracy is high near ``center`` and decays to coin flipping far away.
Three checkable consequences drive the harness:

* shifting a group's points arbitrarily far from the center drives its
  expected labeler accuracy to exactly 1/2 (``shift_sweep``);
* the accuracy probability is 4*theta0-Lipschitz in x
  (``lipschitz_check``);
* repairing a shifted group with an *estimated* affine transport map
  changes expected accuracy by at most 4*theta0 times the mean map error,
  a bound that shrinks as the fit uses more samples (``map_error_sweep``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import GroupedDataset, ValidationError, WeakLabelMatrix
from .ot import (
    MongeMap,
    apply_monge,
    fit_moments,
    inverse_monge,
    linear_monge,
    psd_sqrt,
    spectral_summary,
)


def identity_map(d: int) -> MongeMap:
    return MongeMap(np.eye(d), np.zeros(d))


@dataclass(frozen=True)
class SyntheticModel:
    """Latent Gaussian, per-group affine observations, and the labeler.

    ``theta0 = 0`` is allowed and makes the labeler a fair coin everywhere;
    positive values concentrate accuracy around ``center``.
    """

    theta0: float
    center: np.ndarray
    latent_mean: np.ndarray
    latent_cov: np.ndarray
    group_maps: tuple[MongeMap, MongeMap]
    label_balance: float = 0.5

    def __post_init__(self):
        if self.theta0 < 0:
            raise ValidationError("theta0 must be nonnegative")
        if not 0.0 < self.label_balance < 1.0:
            raise ValidationError("label_balance must be in (0, 1)")
        center = np.asarray(self.center, dtype=np.float64)
        mean = np.asarray(self.latent_mean, dtype=np.float64)
        cov = np.asarray(self.latent_cov, dtype=np.float64)
        d = center.shape[0]
        if mean.shape != (d,) or cov.shape != (d, d):
            raise ValidationError("latent moment shapes are inconsistent")
        for g in self.group_maps:
            if g.d != d:
                raise ValidationError("group transform dimension mismatch")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "latent_mean", mean)
        object.__setattr__(self, "latent_cov", cov)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @classmethod
    def gaussian(cls, dim: int, theta0: float,
                 label_balance: float = 0.5) -> "SyntheticModel":
        """Standard-normal latent centered on the high-accuracy point,
        both groups observing through the identity."""
        return cls(
            theta0=theta0,
            center=np.zeros(dim),
            latent_mean=np.zeros(dim),
            latent_cov=np.eye(dim),
            group_maps=(identity_map(dim), identity_map(dim)),
            label_balance=label_balance,
        )

    def with_group1(self, g1: MongeMap) -> "SyntheticModel":
        return replace(self, group_maps=(self.group_maps[0], g1))


@dataclass(frozen=True)
class SweepReport:
    """One sweep of a numeric check: values tried, what was measured, the
    bound or limit it is compared against, and whether the check passed."""

    sweep_values: tuple[float, ...]
    measured: tuple[float, ...]
    bound_or_limit: tuple[float, ...]
    passed: bool
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.sweep_values) == len(self.measured)
                == len(self.bound_or_limit)):
            raise ValidationError("sweep report lists must share a length")

    def to_dict(self) -> dict:
        return {
            "sweep_values": list(self.sweep_values),
            "measured": list(self.measured),
            "bound_or_limit": list(self.bound_or_limit),
            "passed": self.passed,
            "extras": self.extras,
        }


def proximity(x: np.ndarray, center: np.ndarray) -> np.ndarray:
    """(1 + Euclidean distance)^-1, in (0, 1], vectorized over rows."""
    x = np.asarray(x, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    dist = np.linalg.norm(np.atleast_2d(x) - center, axis=1)
    out = 1.0 / (1.0 + dist)
    return out[0] if x.ndim == 1 else out


def accuracy_prob(x: np.ndarray, model: SyntheticModel) -> np.ndarray:
    """P(lambda(x) = y) = sigmoid(2 * theta0 * prox(x, center))."""
    z = 2.0 * model.theta0 * proximity(x, model.center)
    return 1.0 / (1.0 + np.exp(-z))


def _latent_factor(model: SyntheticModel) -> np.ndarray:
    return psd_sqrt(model.latent_cov)


def _sample_latent(model: SyntheticModel, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    return model.latent_mean + rng.standard_normal((n, model.dim)) @ _latent_factor(model)


def _sample_votes(x: np.ndarray, y: np.ndarray, model: SyntheticModel,
                  rng: np.random.Generator) -> np.ndarray:
    agree = rng.random(x.shape[0]) < accuracy_prob(x, model)
    return np.where(agree, y, -y)


def sample_labeled(
    model: SyntheticModel, n: int, seed: int
) -> tuple[GroupedDataset, WeakLabelMatrix]:
    """Draw n examples with group assignments, labels and one LF column.

    Rows are split evenly between the groups (random order), each group is
    pushed through its own transform, and the single labeling function
    agrees with y with probability accuracy_prob at the observed point.
    Bit-reproducible for a fixed seed.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = _sample_latent(model, n, rng)
    groups = np.zeros(n, dtype=np.int64)
    groups[n // 2:] = 1
    rng.shuffle(groups)
    x = np.empty_like(z)
    for k in (0, 1):
        mask = groups == k
        if mask.any():
            x[mask] = apply_monge(model.group_maps[k], z[mask])
    y = np.where(rng.random(n) < model.label_balance, 1, -1).astype(np.int64)
    votes = _sample_votes(x, y, model, rng)
    return (
        GroupedDataset(x, groups, y),
        WeakLabelMatrix(votes.reshape(-1, 1)),
    )


def _monotone_nonincreasing(values: Sequence[float], slack: float) -> bool:
    return all(values[i + 1] <= values[i] + slack
               for i in range(len(values) - 1))


def shift_sweep(
    model: SyntheticModel,
    shifts: Sequence[float],
    n: int,
    seed: int = 0,
    final_tol: float = 0.02,
    mono_slack: float = 0.01,
) -> SweepReport:
    """Measure group-1 labeler accuracy as its points drift from the center.

    For each magnitude D the group-1 transform becomes identity plus an
    offset of norm D along the first axis.  Two channels are recorded:
    the mean of accuracy_prob over the sampled points ("measured") and the
    empirical agreement rate of sampled votes ("measured_sampled").  The
    check passes when the measured sequence is non-increasing within
    ``mono_slack`` and the final value lies within ``final_tol`` of the
    random-guessing limit 1/2.
    """
    shifts = [float(s) for s in shifts]
    if any(s < 0 for s in shifts) or any(
            b < a for a, b in zip(shifts, shifts[1:])):
        raise ValidationError("shifts must be nonnegative and increasing")
    if n < 1:
        raise ValidationError("n must be >= 1")
    direction = np.zeros(model.dim)
    direction[0] = 1.0
    measured, sampled = [], []
    for i, dist in enumerate(shifts):
        rng = np.random.default_rng(seed + i)
        shifted = model.with_group1(
            MongeMap(np.eye(model.dim), dist * direction))
        z = _sample_latent(shifted, n, rng)
        x1 = apply_monge(shifted.group_maps[1], z)
        p = accuracy_prob(x1, shifted)
        measured.append(float(p.mean()))
        y = np.where(rng.random(n) < shifted.label_balance, 1, -1)
        votes = _sample_votes(x1, y, shifted, rng)
        sampled.append(float((votes == y).mean()))
    passed = (_monotone_nonincreasing(measured, mono_slack)
              and abs(measured[-1] - 0.5) <= final_tol)
    return SweepReport(
        sweep_values=tuple(shifts),
        measured=tuple(measured),
        bound_or_limit=tuple(0.5 for _ in shifts),
        passed=passed,
        extras={"measured_sampled": sampled,
                "final_tol": final_tol, "mono_slack": mono_slack},
    )


def lipschitz_check(
    model: SyntheticModel, trials: int, seed: int = 0
) -> float:
    """Max observed |delta P| / ||delta x|| over random point pairs.

    Half the pairs are independent draws around the center, half are tight
    perturbations that probe the local gradient; coincident pairs are
    skipped.  The labeler construction guarantees the ratio stays strictly
    below 4 * theta0.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    d = model.dim
    n_wide = trials // 2
    n_tight = trials - n_wide
    x1 = model.center + rng.standard_normal((trials, d)) * 2.0
    x2 = np.empty_like(x1)
    x2[:n_wide] = model.center + rng.standard_normal((n_wide, d)) * 2.0
    step = rng.standard_normal((n_tight, d))
    step /= np.maximum(np.linalg.norm(step, axis=1, keepdims=True), 1e-300)
    x2[n_wide:] = x1[n_wide:] + step * (
        1e-3 * np.abs(rng.standard_normal((n_tight, 1))) + 1e-9)
    gap = np.abs(accuracy_prob(x1, model) - accuracy_prob(x2, model))
    dist = np.linalg.norm(x1 - x2, axis=1)
    keep = dist > 0
    if not keep.any():
        return 0.0
    return float((gap[keep] / dist[keep]).max())


def _require_identity(g: MongeMap, what: str) -> None:
    d = g.d
    if (np.abs(g.A - np.eye(d)).max() > 1e-12
            or np.abs(g.b).max() > 1e-12):
        raise ValidationError(f"{what} must be the identity transform")


def _require_spd(A: np.ndarray, what: str) -> None:
    if np.abs(A - A.T).max() > 1e-10:
        raise ValidationError(f"{what} must be symmetric")
    if np.linalg.eigvalsh(A)[0] <= 0:
        raise ValidationError(f"{what} must be positive definite")


def map_error_sweep(
    model: SyntheticModel,
    sample_sizes: Sequence[int],
    seed: int = 0,
    holdout: int = 20000,
    fit_ridge: float = 1e-9,
    t: float = 1.0,
) -> SweepReport:
    """Check that the repair-induced accuracy gap is controlled by the
    transport map's estimation error, and that the error decays with n.

    Group 0 must observe through the identity and the group-1 transform
    must be symmetric positive definite plus an offset, so that its exact
    inverse h is also the moment-matching transport map and the fitted map
    converges to it.  For each n an affine map is fitted from n samples
    per group; on a fixed held-out set we record

        measured[i] = |mean P(z) - mean P(h_fit(x'))|          (gap)
        bound[i]    = 4 * theta0 * mean ||h(x') - h_fit(x')||  (rhs)

    The check passes when gap <= rhs at every n (the Lipschitz step makes
    this exact on a shared sample) and rhs is strictly decreasing.
    Effective-rank and tau diagnostics for the fitted covariances are
    logged in ``extras``.
    """
    sizes = [int(s) for s in sample_sizes]
    if any(s < model.dim + 1 for s in sizes) or any(
            b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValidationError(
            "sample sizes must be increasing and exceed the dimension")
    if holdout < 2:
        raise ValidationError("holdout must be >= 2")
    g0, g1 = model.group_maps
    _require_identity(g0, "group-0 transform")
    _require_spd(g1.A, "group-1 transform matrix")
    h_true = inverse_monge(g1)

    rng_hold = np.random.default_rng(seed + 10_000)
    z_hold = _sample_latent(model, holdout, rng_hold)
    x_hold = apply_monge(g1, z_hold)
    p_latent = float(accuracy_prob(z_hold, model).mean())
    h_x = apply_monge(h_true, x_hold)

    measured, bound, diagnostics = [], [], []
    for i, n in enumerate(sizes):
        rng = np.random.default_rng(seed + i)
        z0 = _sample_latent(model, n, rng)
        x1 = apply_monge(g1, _sample_latent(model, n, rng))
        m1 = fit_moments(x1, fit_ridge)
        m0 = fit_moments(z0, fit_ridge)
        h_fit = linear_monge(m1, m0)
        mapped = apply_monge(h_fit, x_hold)
        gap = abs(p_latent - float(accuracy_prob(mapped, model).mean()))
        rhs = 4.0 * model.theta0 * float(
            np.linalg.norm(h_x - mapped, axis=1).mean())
        measured.append(gap)
        bound.append(rhs)
        s0 = spectral_summary(m0.sigma)
        s1 = spectral_summary(m1.sigma)
        tau = max(
            s0.effective_rank / n,
            s1.effective_rank / n,
            t / n,
            t * t / (n * n),
        )
        diagnostics.append({
            "n": n,
            "effective_rank_sigma1": s1.effective_rank,
            "trace_sigma1": s1.trace,
            "lambda_max_sigma1": s1.lambda_max,
            "lambda_min_sigma1": s1.lambda_min,
            "tau": tau,
        })
    passed = all(g <= r + 1e-9 for g, r in zip(measured, bound)) and all(
        bound[i + 1] < bound[i] for i in range(len(bound) - 1))
    return SweepReport(
        sweep_values=tuple(float(s) for s in sizes),
        measured=tuple(measured),
        bound_or_limit=tuple(bound),
        passed=passed,
        extras={"diagnostics": diagnostics, "t": t, "holdout": holdout},
    )
