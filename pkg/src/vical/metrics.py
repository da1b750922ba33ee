"""Accuracy, calibration, and selective-prediction metrics.

Conventions, fixed here and relied on by the report layer:

* ECE uses equal-width confidence bins; interior bins are right-open
  and the last bin includes 1.0 (bin index floor(c*B) clipped to B-1).
* Confidence sorts break ties pessimistically, incorrect before
  correct, so coverage-at-risk and the risk-coverage AUC are
  deterministic and conservative.
* Coverage at risk uses error rate <= budget (inclusive).
* The AUC is the mean prefix risk, a step integral over coverage.
* All values here are raw fractions; the report layer scales ECE,
  Brier, and AUC by 100 for display.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .predict import PredictionBatch


@dataclass
class EvalRecord:
    """One scored prediction: confidence, predicted class, gold class."""

    confidence: float
    predicted: int
    gold: int


@dataclass
class RiskCoveragePoint:
    coverage: float
    risk: float


def records_from_probs(probs: np.ndarray, labels: np.ndarray) -> List[EvalRecord]:
    """MaxProb records for a probability matrix."""
    preds = np.argmax(probs, axis=1)
    confs = probs[np.arange(probs.shape[0]), preds]
    return [
        EvalRecord(float(c), int(p), int(g))
        for c, p, g in zip(confs, preds, labels)
    ]


def _check_batch(batch: PredictionBatch) -> Tuple[np.ndarray, np.ndarray]:
    probs = np.asarray(batch.probs, dtype=np.float64)
    labels = np.asarray(batch.labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise ValueError("empty prediction batch")
    if labels.shape != (probs.shape[0],):
        raise ValueError("labels do not match probability rows")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-9) or np.any(probs < -1e-9):
        raise ValueError("probability rows are not valid distributions")
    return probs, labels


def _record_arrays(records: Sequence[EvalRecord]) -> Tuple[np.ndarray, np.ndarray]:
    if len(records) == 0:
        raise ValueError("empty record list")
    conf = np.array([r.confidence for r in records], dtype=np.float64)
    correct = np.array([r.predicted == r.gold for r in records], dtype=np.float64)
    if np.any(conf < 0.0) or np.any(conf > 1.0):
        raise ValueError("confidence outside [0, 1]")
    return conf, correct


def accuracy(batch: PredictionBatch) -> float:
    probs, labels = _check_batch(batch)
    preds = np.argmax(probs, axis=1)
    return float(np.mean(preds == labels))


def nll(batch: PredictionBatch) -> float:
    """Mean negative log-likelihood; gold probabilities clamped at 1e-12."""
    probs, labels = _check_batch(batch)
    gold = probs[np.arange(probs.shape[0]), labels]
    return float(-np.mean(np.log(np.maximum(gold, 1e-12))))


def brier(batch: PredictionBatch) -> float:
    """Full multiclass Brier score, range [0, 2]."""
    probs, labels = _check_batch(batch)
    onehot = np.zeros_like(probs)
    onehot[np.arange(probs.shape[0]), labels] = 1.0
    return float(np.mean(np.sum((probs - onehot) ** 2, axis=1)))


def _bin_index(conf: np.ndarray, n_bins: int) -> np.ndarray:
    # interior bins right-open; confidence 1.0 folds into the last bin
    idx = np.floor(conf * n_bins).astype(np.int64)
    return np.minimum(idx, n_bins - 1)


def ece(records: Sequence[EvalRecord], n_bins: int = 10) -> float:
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    conf, correct = _record_arrays(records)
    idx = _bin_index(conf, n_bins)
    n = conf.shape[0]
    total = 0.0
    for b in range(n_bins):
        mask = idx == b
        cnt = int(mask.sum())
        if cnt == 0:
            continue
        gap = abs(float(correct[mask].mean()) - float(conf[mask].mean()))
        total += (cnt / n) * gap
    return total


def reliability_table(
    records: Sequence[EvalRecord], n_bins: int = 10
) -> List[Tuple[int, float, float]]:
    """Per-bin (count, mean confidence, accuracy); empty bins keep count 0."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    conf, correct = _record_arrays(records)
    idx = _bin_index(conf, n_bins)
    rows = []
    for b in range(n_bins):
        mask = idx == b
        cnt = int(mask.sum())
        if cnt == 0:
            rows.append((0, 0.0, 0.0))
        else:
            rows.append((cnt, float(conf[mask].mean()), float(correct[mask].mean())))
    return rows


def _pessimistic_order(conf: np.ndarray, correct: np.ndarray) -> np.ndarray:
    # descending confidence; at equal confidence incorrect rows come first
    return np.lexsort((correct, -conf))


def coverage_at_risk(records: Sequence[EvalRecord], risk_budget: float) -> float:
    """Largest answerable fraction keeping prefix error rate <= budget."""
    if not 0.0 <= risk_budget <= 1.0:
        raise ValueError("risk budget must lie in [0, 1]")
    conf, correct = _record_arrays(records)
    order = _pessimistic_order(conf, correct)
    errors = np.cumsum(1.0 - correct[order])
    n = conf.shape[0]
    k = np.arange(1, n + 1, dtype=np.float64)
    ok = errors / k <= risk_budget
    if not ok.any():
        return 0.0
    return float((int(np.nonzero(ok)[0].max()) + 1) / n)


def risk_coverage_curve(records: Sequence[EvalRecord]) -> List[RiskCoveragePoint]:
    conf, correct = _record_arrays(records)
    order = _pessimistic_order(conf, correct)
    errors = np.cumsum(1.0 - correct[order])
    n = conf.shape[0]
    k = np.arange(1, n + 1, dtype=np.float64)
    risks = errors / k
    return [RiskCoveragePoint(float(kk / n), float(r)) for kk, r in zip(k, risks)]


def risk_coverage_auc(records: Sequence[EvalRecord]) -> float:
    """Mean prefix risk over the pessimistically sorted records."""
    conf, correct = _record_arrays(records)
    order = _pessimistic_order(conf, correct)
    errors = np.cumsum(1.0 - correct[order])
    k = np.arange(1, conf.shape[0] + 1, dtype=np.float64)
    return float(np.mean(errors / k))
