"""Data ingestion, built-in labeling-function banks, and the end-to-end
repair run with its report artifacts.

File formats
------------
Features CSV: UTF-8, header row, comma-separated, ``.`` decimal.  Any
number of numeric feature columns, one group column with values 0/1, and
an optional label column with values -1/1.

Votes CSV: header exactly ``lf_0,...,lf_{m-1}``, integer values in
{-1, 0, 1}, row-aligned with the features CSV.

Config file: flat ``key=value`` lines (``#`` starts a comment).  Accepted
keys: ot_type, knn_k, sinkhorn_eta, sinkhorn_max_iter, sinkhorn_tol,
covariance_ridge, transport_scope, class_balance, tie_tol, seed,
end_model, epochs, lr, l2.

All artifacts are written atomically (temp file then rename), and a rerun
with identical inputs, config and seed produces byte-identical data
artifacts; only the manifest's timestamp and stage timings vary, and both
are excluded from the manifest digest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .core import (
    AccuracyEstimate,
    GroupedDataset,
    PipelineConfig,
    ValidationError,
    WeakLabelMatrix,
    validate_dataset,
)
from .estimate import per_group_accuracies, triplet_accuracies
from .labelmodel import fit_label_model, infer_pseudolabels, predict, train_end_model
from .metrics import fairness_report, lf_delta_report
from .ot import MongeMap
from .synthetic import (
    SyntheticModel,
    lipschitz_check,
    map_error_sweep,
    shift_sweep,
)
from .transport import sbm_transport

logger = logging.getLogger("otrelabel")

_CONFIG_PARSERS: dict[str, Callable[[str], object]] = {
    "ot_type": str,
    "knn_k": int,
    "sinkhorn_eta": float,
    "sinkhorn_max_iter": int,
    "sinkhorn_tol": float,
    "covariance_ridge": float,
    "transport_scope": str,
    "class_balance": float,
    "tie_tol": float,
    "seed": int,
    "end_model": lambda s: {"on": True, "off": False}[s],
    "epochs": int,
    "lr": float,
    "l2": float,
}


# ---------------------------------------------------------------------------
# configuration


def parse_config_text(text: str) -> dict:
    """Parse flat key=value config text into a keyword dict."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_PARSERS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_PARSERS[key](value)
        except (ValueError, KeyError) as exc:
            raise ValidationError(
                f"config line {lineno}: bad value {value!r} for {key}") from exc
    return out


def load_config(path: str, overrides: Optional[dict] = None) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        kwargs = parse_config_text(fh.read())
    if overrides:
        kwargs.update(overrides)
    return PipelineConfig(**kwargs)


# ---------------------------------------------------------------------------
# CSV ingestion


def _read_rows(path: str) -> tuple[list[str], list[list[str]]]:
    try:
        fh = open(path, "r", encoding="utf-8-sig", newline="")
    except OSError as exc:
        raise ValidationError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: file is empty") from None
        rows = list(reader)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    header = [h.strip() for h in header]
    width = len(header)
    for i, row in enumerate(rows, start=2):
        if len(row) != width:
            raise ValidationError(
                f"{path}: row {i} has {len(row)} fields, expected {width}")
    return header, rows


def load_features_csv(
    path: str,
    group_col: str = "group",
    label_col: Optional[str] = "label",
    feature_cols: Optional[Sequence[str]] = None,
) -> GroupedDataset:
    """Parse a features CSV into a GroupedDataset, preserving row order.

    ``label_col`` is optional in the file; when present it must contain
    -1/1.  Errors carry 1-based row numbers (the header is row 1) and
    column names.
    """
    header, rows = _read_rows(path)
    if group_col not in header:
        raise ValidationError(f"{path}: missing group column {group_col!r}")
    has_labels = label_col is not None and label_col in header
    if feature_cols is None:
        skip = {group_col} | ({label_col} if has_labels else set())
        feature_cols = [h for h in header if h not in skip]
    else:
        missing = [c for c in feature_cols if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing feature columns {missing}")
    if not feature_cols:
        raise ValidationError(f"{path}: no feature columns")
    col_idx = {h: i for i, h in enumerate(header)}

    n = len(rows)
    features = np.empty((n, len(feature_cols)))
    groups = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64) if has_labels else None
    for r, row in enumerate(rows):
        lineno = r + 2
        for c, name in enumerate(feature_cols):
            cell = row[col_idx[name]].strip()
            try:
                features[r, c] = float(cell)
            except ValueError:
                raise ValidationError(
                    f"{path}: row {lineno}, column {name!r}: "
                    f"non-numeric value {cell!r}") from None
        g = row[col_idx[group_col]].strip()
        if g not in ("0", "1"):
            raise ValidationError(
                f"{path}: row {lineno}: unknown group value {g!r}")
        groups[r] = int(g)
        if has_labels:
            l = row[col_idx[label_col]].strip()
            if l not in ("-1", "1", "+1"):
                raise ValidationError(
                    f"{path}: row {lineno}: label must be -1 or 1, got {l!r}")
            labels[r] = int(l)
    return GroupedDataset(features, groups, labels)


def load_votes_csv(path: str) -> WeakLabelMatrix:
    """Parse a votes CSV (header lf_0..lf_{m-1}, values in {-1, 0, 1})."""
    header, rows = _read_rows(path)
    expected = [f"lf_{j}" for j in range(len(header))]
    if header != expected:
        raise ValidationError(
            f"{path}: votes header must be {','.join(expected)}")
    votes = np.empty((len(rows), len(header)), dtype=np.int64)
    for r, row in enumerate(rows):
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell not in ("-1", "0", "1", "+1"):
                raise ValidationError(
                    f"{path}: row {r + 2}, lf_{c}: illegal vote {cell!r}")
            votes[r, c] = int(cell)
    return WeakLabelMatrix(votes)


def read_raw_csv(path: str) -> dict[str, list[str]]:
    """Read a raw (possibly non-numeric) CSV into column -> string values."""
    header, rows = _read_rows(path)
    if len(set(header)) != len(header):
        raise ValidationError(f"{path}: duplicate column names")
    return {name: [row[i].strip() for row in rows]
            for i, name in enumerate(header)}


# ---------------------------------------------------------------------------
# labeling-function rules


class Predicate:
    """Boolean expression over named raw-table columns."""

    def columns(self) -> set[str]:
        raise NotImplementedError

    def evaluate(self, row: dict[str, str]) -> bool:
        raise NotImplementedError


def _as_number(value: str, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(
            f"column {column!r}: cannot compare non-numeric value "
            f"{value!r}") from None


@dataclass(frozen=True)
class NumericCompare(Predicate):
    column: str
    op: str  # one of > >= < <= ==
    value: float

    def columns(self):
        return {self.column}

    def evaluate(self, row):
        x = _as_number(row[self.column], self.column)
        return {
            ">": x > self.value,
            ">=": x >= self.value,
            "<": x < self.value,
            "<=": x <= self.value,
            "==": x == self.value,
        }[self.op]


@dataclass(frozen=True)
class NumericBetween(Predicate):
    column: str
    low: float
    high: float  # inclusive on both ends

    def columns(self):
        return {self.column}

    def evaluate(self, row):
        x = _as_number(row[self.column], self.column)
        return self.low <= x <= self.high


@dataclass(frozen=True)
class ValueIn(Predicate):
    column: str
    values: frozenset

    def columns(self):
        return {self.column}

    def evaluate(self, row):
        return row[self.column] in self.values


@dataclass(frozen=True)
class Contains(Predicate):
    column: str
    substring: str

    def columns(self):
        return {self.column}

    def evaluate(self, row):
        return self.substring in row[self.column]


@dataclass(frozen=True)
class AnyOf(Predicate):
    parts: tuple[Predicate, ...]

    def columns(self):
        return set().union(*(p.columns() for p in self.parts))

    def evaluate(self, row):
        return any(p.evaluate(row) for p in self.parts)


@dataclass(frozen=True)
class AllOf(Predicate):
    parts: tuple[Predicate, ...]

    def columns(self):
        return set().union(*(p.columns() for p in self.parts))

    def evaluate(self, row):
        return all(p.evaluate(row) for p in self.parts)


@dataclass(frozen=True)
class LfRule:
    """Named predicate producing +1 when true, ``false_vote`` otherwise."""

    name: str
    predicate: Predicate
    false_vote: int = -1  # -1 or 0 (abstain)

    def __post_init__(self):
        if self.false_vote not in (-1, 0):
            raise ValidationError("false_vote must be -1 or 0")


def apply_lf_bank(
    table: dict[str, list[str]],
    rules: Sequence[LfRule],
    category_map: Optional[dict[str, dict[str, str]]] = None,
) -> WeakLabelMatrix:
    """Evaluate each rule row-wise into a vote column.

    ``category_map`` optionally renames raw category spellings per column
    (e.g. mapping a local dataset's "professional" onto the canonical
    "Prof-specialty") before rules are evaluated.
    """
    if not rules:
        raise ValidationError("rule list is empty")
    if not table:
        raise ValidationError("raw table has no columns")
    n = len(next(iter(table.values())))
    needed = set().union(*(r.predicate.columns() for r in rules))
    missing = sorted(needed - set(table))
    if missing:
        raise ValidationError(f"raw table is missing columns {missing}")
    remap = category_map or {}
    votes = np.empty((n, len(rules)), dtype=np.int64)
    for r in range(n):
        row = {c: table[c][r] for c in needed}
        for c, mapping in remap.items():
            if c in row:
                row[c] = mapping.get(row[c], row[c])
        for j, rule in enumerate(rules):
            try:
                hit = rule.predicate.evaluate(row)
            except ValidationError as exc:
                raise ValidationError(
                    f"rule {rule.name!r}, row {r + 2}: {exc}") from exc
            votes[r, j] = 1 if hit else rule.false_vote
    if len(rules) < 3:
        logger.warning(
            "bank produced %d vote columns; accuracy estimation needs >= 3",
            len(rules))
    return WeakLabelMatrix(votes)


def _adult_rules() -> list[LfRule]:
    # Category spellings follow the canonical census-income distribution;
    # pass a category_map to adapt local variants.
    return [
        LfRule("age", NumericBetween("age", 30, 60)),
        LfRule("education", ValueIn(
            "education", frozenset({"Bachelors", "Masters", "Doctorate"}))),
        LfRule("marital", ValueIn("marital-status", frozenset({
            "Married-civ-spouse", "Married-spouse-absent", "Married-AF-spouse",
        }))),
        LfRule("relationship", ValueIn(
            "relationship", frozenset({"Wife", "Own-child", "Husband"}))),
        LfRule("capital", NumericCompare("capital-gain", ">", 5000)),
        LfRule("race", ValueIn(
            "race", frozenset({"Asian-Pac-Islander", "Other"}))),
        LfRule("country", ValueIn("native-country", frozenset({
            "Germany", "Japan", "Greece", "China",
        }))),
        LfRule("workclass", ValueIn("workclass", frozenset({
            "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
            "Local-gov", "State-gov",
        }))),
        LfRule("occupation", ValueIn("occupation", frozenset({
            "Sales", "Exec-managerial", "Prof-specialty", "Machine-op-inspct",
        }))),
    ]


def _bank_marketing_rules() -> list[LfRule]:
    # Column/category spellings follow the "bank-additional" distribution.
    return [
        LfRule("loan", AnyOf((
            ValueIn("housing", frozenset({"yes"})),
            ValueIn("loan", frozenset({"yes"})),
        ))),
        LfRule("previous_contact", NumericCompare("previous", ">", 1.1)),
        LfRule("duration", NumericCompare("duration", ">", 360)),
        LfRule("marital", ValueIn("marital", frozenset({"single"}))),
        LfRule("previous_outcome", ValueIn("poutcome", frozenset({"success"}))),
        LfRule("education", ValueIn("education", frozenset({
            "university.degree", "professional.course",
        }))),
    ]


BUILTIN_BANKS: dict[str, Callable[[], list[LfRule]]] = {
    "adult-v1": _adult_rules,
    "bank-v1": _bank_marketing_rules,
}


def builtin_bank(name: str) -> list[LfRule]:
    if name not in BUILTIN_BANKS:
        raise ValidationError(
            f"unknown bank {name!r}; available: {sorted(BUILTIN_BANKS)}")
    return BUILTIN_BANKS[name]()


# ---------------------------------------------------------------------------
# artifact writing


def _atomic_write(path: str, write_fn: Callable) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_votes_csv(wl: WeakLabelMatrix, path: str) -> None:
    def write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"lf_{j}" for j in range(wl.m)])
        writer.writerows(wl.votes.tolist())

    _atomic_write(path, write)


def write_json(obj: dict, path: str) -> None:
    _atomic_write(path, lambda fh: fh.write(
        json.dumps(obj, indent=2, sort_keys=True) + "\n"))


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one pipeline run.

    The digest covers config, input digests and version only, so it is
    stable across reruns; timings and the timestamp are informational.
    """

    config: dict
    input_digests: dict[str, str]
    stage_timings_ms: dict[str, float]
    version: str
    created_unix: float
    failed_stage: Optional[str] = None

    def digest(self) -> str:
        stable = json.dumps(
            {"config": self.config, "inputs": self.input_digests,
             "version": self.version},
            sort_keys=True)
        return hashlib.sha256(stable.encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "input_digests": self.input_digests,
            "stage_timings_ms": self.stage_timings_ms,
            "version": self.version,
            "created_unix": self.created_unix,
            "failed_stage": self.failed_stage,
            "digest": self.digest(),
        }


# ---------------------------------------------------------------------------
# pipeline


def run_pipeline(
    cfg: PipelineConfig,
    features_path: str,
    votes_path: str,
    out_dir: str,
    group_col: str = "group",
    label_col: Optional[str] = "label",
    passthrough: bool = False,
    lf_names: Optional[list[str]] = None,
) -> RunManifest:
    """Execute estimate -> transport -> label model -> end model -> reports.

    Writes ``votes_repaired.csv``, ``pseudolabels.csv``, ``fairness.json``
    and ``manifest.json`` into ``out_dir``.  With ``passthrough=True`` the
    transport stage is skipped entirely and pseudolabels come from the raw
    votes (the plain weak-supervision baseline).  Gold labels, when
    present, are used only by the report stage.
    """
    timings: dict[str, float] = {}
    stage = "ingest"

    def finish_stage(name: str, started: float) -> float:
        timings[name] = (time.perf_counter() - started) * 1000.0
        return time.perf_counter()

    try:
        t0 = time.perf_counter()
        ds = load_features_csv(features_path, group_col, label_col)
        wl = load_votes_csv(votes_path)
        report = validate_dataset(ds, wl)
        if report:
            raise ValidationError("; ".join(report))
        if lf_names is not None and len(lf_names) != wl.m:
            raise ValidationError("need one LF name per vote column")
        names = lf_names or [f"lf_{j}" for j in range(wl.m)]
        blind = ds.without_labels()
        t0 = finish_stage("ingest", t0)

        stage = "estimate"
        group_acc = per_group_accuracies(wl, blind)
        global_acc, _ = triplet_accuracies(wl)
        est = AccuracyEstimate(global_acc, group_acc)
        t0 = finish_stage("estimate", t0)

        stage = "transport"
        if passthrough:
            repaired = wl
        else:
            repaired = sbm_transport(blind, wl, est, cfg).new_votes
        t0 = finish_stage("transport", t0)

        stage = "label_model"
        repaired_global, _ = triplet_accuracies(repaired)
        repaired_est = AccuracyEstimate(
            repaired_global, per_group_accuracies(repaired, blind))
        params = fit_label_model(repaired_est, cfg.class_balance)
        probs, hard = infer_pseudolabels(params, repaired)
        t0 = finish_stage("label_model", t0)

        stage = "end_model"
        end_model = None
        end_preds = None
        if cfg.end_model:
            end_model = train_end_model(
                ds.features, probs, cfg.epochs, cfg.lr, cfg.l2)
            _, end_preds = predict(end_model, ds.features)
        t0 = finish_stage("end_model", t0)

        stage = "reports"
        manifest = RunManifest(
            config=cfg.to_dict(),
            input_digests={
                features_path: _sha256(features_path),
                votes_path: _sha256(votes_path),
            },
            stage_timings_ms=timings,
            version=__version__,
            created_unix=time.time(),
        )
        if ds.labels is None:
            fairness: dict = {
                "skipped": True,
                "reason": "no gold labels in the features file",
                "manifest_digest": manifest.digest(),
            }
            logger.info("gold labels absent; metrics stage skipped")
        else:
            per_lf = lf_delta_report(wl, repaired, ds.labels, ds.groups, names)
            fairness = {
                "skipped": False,
                "per_lf": [
                    {"name": row["name"],
                     "before": row["before"].to_dict(),
                     "after": row["after"].to_dict(),
                     "delta": row["delta"]}
                    for row in per_lf
                ],
                "pseudolabels": fairness_report(
                    hard, ds.labels, ds.groups).to_dict(),
                "end_model": (
                    fairness_report(end_preds, ds.labels, ds.groups).to_dict()
                    if end_preds is not None else None),
                "manifest_digest": manifest.digest(),
            }

        write_votes_csv(repaired, os.path.join(out_dir, "votes_repaired.csv"))

        def write_pseudo(fh):
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["prob", "label"])
            for p, l in zip(probs, hard):
                writer.writerow([repr(float(p)), int(l)])

        _atomic_write(os.path.join(out_dir, "pseudolabels.csv"), write_pseudo)
        write_json(fairness, os.path.join(out_dir, "fairness.json"))
        timings["reports"] = (time.perf_counter() - t0) * 1000.0
        write_json(manifest.to_dict(), os.path.join(out_dir, "manifest.json"))
        return manifest
    except Exception:
        failed = RunManifest(
            config=cfg.to_dict(),
            input_digests={},
            stage_timings_ms=timings,
            version=__version__,
            created_unix=time.time(),
            failed_stage=stage,
        )
        try:
            write_json(failed.to_dict(), os.path.join(out_dir, "manifest.json"))
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# theory suite


def run_theory_suite(
    seed: int = 0,
    shift_theta0: float = 5.0,
    shifts: Sequence[float] = (0.0, 1.0, 10.0, 100.0, 1000.0),
    shift_n: int = 100_000,
    shift_dim: int = 3,
    final_tol: float = 0.02,
    mono_slack: float = 0.01,
    lipschitz_theta0s: Sequence[float] = (0.5, 1.0, 3.0),
    lipschitz_trials: int = 100_000,
    lipschitz_dim: int = 3,
    map_theta0: float = 1.0,
    map_dim: int = 4,
    map_sizes: Sequence[int] = (100, 1000, 10_000),
    map_holdout: int = 20_000,
) -> dict:
    """Run the three numeric checks and bundle their reports.

    The bundle's ``passed`` is the conjunction of the individual flags;
    the CLI maps a false overall flag to exit status 3.
    """
    shift_model = SyntheticModel.gaussian(shift_dim, shift_theta0)
    shift_report = shift_sweep(
        shift_model, shifts, shift_n, seed=seed,
        final_tol=final_tol, mono_slack=mono_slack)

    ratios = []
    for i, theta0 in enumerate(lipschitz_theta0s):
        model = SyntheticModel.gaussian(lipschitz_dim, theta0)
        ratios.append(lipschitz_check(model, lipschitz_trials, seed=seed + i))
    bounds = [4.0 * t for t in lipschitz_theta0s]
    lipschitz = {
        "theta0": list(lipschitz_theta0s),
        "max_ratio": ratios,
        "bound": bounds,
        "passed": all(r < b for r, b in zip(ratios, bounds)),
    }

    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((map_dim, map_dim)))
    g1_matrix = (q * rng.uniform(0.8, 1.6, map_dim)) @ q.T
    g1_offset = rng.standard_normal(map_dim)
    map_model = SyntheticModel.gaussian(map_dim, map_theta0).with_group1(
        MongeMap(g1_matrix, g1_offset))
    map_report = map_error_sweep(
        map_model, map_sizes, seed=seed, holdout=map_holdout)

    bundle = {
        "shift_limit": shift_report.to_dict(),
        "lipschitz": lipschitz,
        "map_error_bound": map_report.to_dict(),
        "passed": bool(
            shift_report.passed and lipschitz["passed"] and map_report.passed),
    }
    return bundle


def write_theory_artifacts(bundle: dict, out_dir: str) -> None:
    """Emit the JSON bundle plus plot-ready CSVs for the two sweeps."""
    write_json(bundle, os.path.join(out_dir, "theory_report.json"))

    def sweep_csv(report: dict, path: str, value_name: str):
        def write(fh):
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([value_name, "measured", "bound_or_limit"])
            for row in zip(report["sweep_values"], report["measured"],
                           report["bound_or_limit"]):
                writer.writerow([repr(float(x)) for x in row])

        _atomic_write(path, write)

    sweep_csv(bundle["shift_limit"],
              os.path.join(out_dir, "shift_sweep.csv"), "shift")
    sweep_csv(bundle["map_error_bound"],
              os.path.join(out_dir, "map_error_sweep.csv"), "n")

    def lipschitz_csv(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta0", "max_ratio", "bound"])
        lp = bundle["lipschitz"]
        for row in zip(lp["theta0"], lp["max_ratio"], lp["bound"]):
            writer.writerow([repr(float(x)) for x in row])

    _atomic_write(os.path.join(out_dir, "lipschitz.csv"), lipschitz_csv)


def write_regime_csv(profile, path: str) -> None:
    """Plot-ready CSV of a RegimeProfile's per-group curves."""
    def write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "farthest_distance", "cumulative_accuracy"])
        for k, curve in enumerate(profile.curves):
            for dist, acc in curve:
                writer.writerow([k, repr(float(dist)), repr(float(acc))])

    _atomic_write(path, write)
