"""Relative-error anomaly rule, ground-truth conventions, and the
dataset x model benchmark harness."""

from __future__ import annotations

import datetime as dt
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from . import forecast, report
from .core import ContractError, SplitSpec, TimeSeries, precision_recall_f1, rmse, split_series
from .ingest import DEFAULT_TIMEZONE

#: Default threshold, from the plant's "within 10% of actual" acceptability bar.
DEFAULT_LAMBDA = 0.1

#: Denominator floor as a fraction of the training-split RMS (scale-aware).
EPSILON_RMS_FRACTION = 1e-6

#: Scoring convention for defect-labeled vibration data: Failure counts as a
#: true anomaly, Normal as a non-anomaly, and NearFailure samples are excluded
#: from precision/recall/F1 scoring.
GROUND_TRUTH_CONVENTION = (
    "failure=anomaly, normal=clean, near-failure excluded from scoring; "
    "rolling one-step evaluation with true history (teacher forcing)"
)


@dataclass(frozen=True)
class AnomalyRuleConfig:
    lam: float = DEFAULT_LAMBDA
    epsilon: float = 1e-6
    two_sided: bool = True

    def __post_init__(self):
        if self.lam <= 0 or self.epsilon <= 0:
            raise ContractError("lambda and epsilon must be positive")

    def scaled_to(self, train_values) -> "AnomalyRuleConfig":
        """Same rule with the epsilon floor tied to the training-split RMS."""
        values = np.asarray(train_values, dtype=np.float64)
        scale = float(np.sqrt(np.mean(values * values)))
        eps = max(EPSILON_RMS_FRACTION * scale, 1e-300)
        return AnomalyRuleConfig(self.lam, eps, self.two_sided)


def relative_error(predicted, actual, cfg: AnomalyRuleConfig):
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    return (predicted - actual) / np.maximum(np.abs(predicted), cfg.epsilon)


def flag_anomaly(predicted, actual, cfg: AnomalyRuleConfig):
    """True when the relative error exceeds lambda (magnitude by default,
    signed over-prediction only when two_sided is off)."""
    r = relative_error(predicted, actual, cfg)
    flags = np.abs(r) > cfg.lam if cfg.two_sided else r > cfg.lam
    if np.ndim(flags) == 0:
        return bool(flags)
    return flags


@dataclass(frozen=True)
class DetectionResult:
    predictions: np.ndarray
    flags: np.ndarray
    rule: AnomalyRuleConfig


def detect_series(model, test: TimeSeries, cfg: AnomalyRuleConfig, history=None) -> DetectionResult:
    """Rolling one-step predictions over the test split with per-point flags.
    Context is seeded from the model's training tail unless given explicitly;
    the epsilon floor is rescaled to the model's training RMS when known."""
    if history is None:
        history = getattr(model, "train_tail", None)
        if history is None:
            raise ContractError("model carries no training tail; pass history explicitly")
    train_rms_basis = getattr(model, "train_values", history)
    rule = cfg.scaled_to(train_rms_basis)
    preds = forecast.rolling_forecast(model, history, test.values)
    flags = flag_anomaly(preds, test.values, rule)
    return DetectionResult(predictions=preds, flags=flags, rule=rule)


class TruthRule(Enum):
    LABEL_COLUMN = "label_column"
    DATE_RANGES = "date_ranges"
    INJECTED_SPIKES = "injected_spikes"


@dataclass
class AnomalyDataset:
    """A univariate series plus its anomaly ground-truth source.

    Exactly one of `label_flags`, `abnormal_dates`, `spike_indices` backs the
    chosen truth rule. `eval_mask` (optional) limits scoring to selected
    points, e.g. to exclude near-failure samples.
    """

    name: str
    series: TimeSeries
    truth_rule: TruthRule
    label_flags: Optional[np.ndarray] = None
    abnormal_dates: Optional[frozenset] = None
    spike_indices: Optional[np.ndarray] = None
    eval_mask: Optional[np.ndarray] = None
    tz: str = DEFAULT_TIMEZONE


def ground_truth_labels(dataset: AnomalyDataset) -> np.ndarray:
    """Per-point boolean anomaly flags for the whole series."""
    n = len(dataset.series)
    if dataset.truth_rule == TruthRule.LABEL_COLUMN:
        if dataset.label_flags is None:
            raise ContractError("LabelColumn rule needs label_flags")
        flags = np.asarray(dataset.label_flags, dtype=bool)
        if flags.shape != (n,):
            raise ContractError("label_flags length must match the series")
        return flags
    if dataset.truth_rule == TruthRule.DATE_RANGES:
        if dataset.abnormal_dates is None:
            raise ContractError("DateRanges rule needs abnormal_dates")
        zone = ZoneInfo(dataset.tz)
        stamps = dataset.series.timestamps()
        dates = {d for d in dataset.abnormal_dates}
        return np.array(
            [dt.datetime.fromtimestamp(t, zone).date() in dates for t in stamps], dtype=bool
        )
    if dataset.spike_indices is None:
        raise ContractError("InjectedSpikes rule needs the generator's injection log")
    flags = np.zeros(n, dtype=bool)
    flags[np.asarray(dataset.spike_indices, dtype=np.int64)] = True
    return flags


def _score(flags_pred, flags_true, mask):
    if mask is not None:
        flags_pred = flags_pred[mask]
        flags_true = flags_true[mask]
    return precision_recall_f1(flags_pred, flags_true)


def run_benchmark(
    datasets: Sequence[AnomalyDataset],
    model_grid: Dict[str, Sequence[forecast.ForecastModelConfig]],
    split: SplitSpec,
    cfg: AnomalyRuleConfig = AnomalyRuleConfig(),
) -> dict:
    """RMSE and detection sweep over datasets x model variants.

    Per model family the best variant by RMSE feeds the RMSE table and the
    best by F1 feeds the detection table; the full grid is retained. A model
    erroring on a dataset records an error cell and the sweep continues.
    """
    if not datasets or not model_grid:
        raise ContractError("need at least one dataset and one model family")
    grid_rows: List[dict] = []
    best_rmse: Dict[str, dict] = {}
    best_f1: Dict[str, dict] = {}
    dataset_info = {}
    for ds in datasets:
        dataset_info[ds.name] = {
            "n_points": len(ds.series),
            "truth_rule": ds.truth_rule.value,
            "fingerprint": report.data_fingerprint(ds.series.values),
        }
        train, test = split_series(ds.series, split)
        truth_all = ground_truth_labels(ds)
        truth_test = truth_all[len(train) :]
        mask_test = None
        if ds.eval_mask is not None:
            mask_test = np.asarray(ds.eval_mask, dtype=bool)[len(train) :]
        best_rmse[ds.name] = {}
        best_f1[ds.name] = {}
        for family, variants in model_grid.items():
            if not variants:
                raise ContractError(f"model family '{family}' has no variants")
            family_cells = []
            for variant in variants:
                cell = {
                    "dataset": ds.name,
                    "model": family,
                    "config": {
                        "model_kind": variant.model_kind,
                        "hyperparameters": variant.resolved(),
                        "seed": variant.seed,
                    },
                    "seed": variant.seed,
                }
                cell["config_fingerprint"] = report.config_fingerprint(cell["config"])
                t0 = time.perf_counter()
                try:
                    model = forecast.fit(variant, train)
                    result = detect_series(model, test, cfg)
                    score = _score(result.flags, truth_test, mask_test)
                    cell.update(
                        rmse=rmse(result.predictions, test.values),
                        precision=score.precision,
                        recall=score.recall,
                        f1=score.f1,
                        degenerate=score.degenerate,
                        n_test=len(test),
                        error=None,
                    )
                except ContractError as exc:
                    cell.update(
                        rmse=None, precision=None, recall=None, f1=None,
                        degenerate=None, n_test=len(test), error=str(exc),
                    )
                cell["runtime_s"] = round(time.perf_counter() - t0, 6)
                grid_rows.append(cell)
                family_cells.append(cell)
            scored = [c for c in family_cells if c["error"] is None]
            if scored:
                best_rmse[ds.name][family] = min(scored, key=lambda c: c["rmse"])
                best_f1[ds.name][family] = max(scored, key=lambda c: c["f1"])
            else:
                best_rmse[ds.name][family] = family_cells[0]
                best_f1[ds.name][family] = family_cells[0]
    return {
        "artifact_version": report.ARTIFACT_VERSION,
        "convention": GROUND_TRUTH_CONVENTION,
        "rule": {"lambda": cfg.lam, "two_sided": cfg.two_sided,
                 "epsilon_rms_fraction": EPSILON_RMS_FRACTION},
        "split": {"train_fraction": split.train_fraction, "mode": split.mode.name,
                  "seed": split.seed},
        "datasets": dataset_info,
        "grid": grid_rows,
        "best_rmse": best_rmse,
        "best_f1": best_f1,
    }


def strip_timings(bench: dict) -> dict:
    """Drop wall-clock cell timings so a rerun with the same seed produces a
    byte-identical artifact."""
    for cell in bench["grid"]:
        cell.pop("runtime_s", None)
    return bench


def benchmark_tables(bench: dict) -> str:
    """Human-readable RMSE and detection tables from a benchmark report."""
    dataset_names = sorted(bench["best_rmse"])
    families = sorted(next(iter(bench["best_rmse"].values())))
    rmse_rows = []
    for fam in families:
        row = [fam]
        for ds in dataset_names:
            cell = bench["best_rmse"][ds][fam]
            row.append("error" if cell["error"] else cell["rmse"])
        rmse_rows.append(row)
    out = ["RMSE (best variant per family; lower is better)",
           report.format_table(["model"] + dataset_names, rmse_rows), ""]
    det_rows = []
    for fam in families:
        for ds in dataset_names:
            cell = bench["best_f1"][ds][fam]
            if cell["error"]:
                det_rows.append([fam, ds, "error", "error", "error"])
            else:
                det_rows.append([fam, ds, cell["precision"], cell["recall"], cell["f1"]])
    out.append("Detection (best variant per family by F1)")
    out.append(report.format_table(["model", "dataset", "precision", "recall", "f1"], det_rows))
    return "\n".join(out)
