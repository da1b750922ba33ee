"""From trained state to class probabilities and selective decisions.

A "template" here is any callable mapping (flat parameter vector,
feature matrix) to logits; the harness builds one per model variant so
these functions stay agnostic to plain-vs-LoRA parameterization.

MC prediction averages logits across posterior samples (not
probabilities; the two differ and the logit form is the documented
choice), then applies softmax once. Each sample k draws from an
independently derived child stream keyed by the sample index, so
results do not depend on evaluation order and a K-sample run shares its
first draws with any longer run from the same stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from . import numeric, optim, rng as vrng

LogitFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

ABSTAIN = -1


@dataclass
class PredictionBatch:
    """Probability rows [n, C] next to their gold labels [n]."""

    probs: np.ndarray
    labels: np.ndarray


@dataclass
class SelectiveDecision:
    answer: int  # class index, or ABSTAIN
    confidence: float


def predict_mean(state: optim.PosteriorState, template: LogitFn, features: np.ndarray) -> np.ndarray:
    """Probabilities at the posterior mean (no sampling)."""
    return numeric.softmax(template(state.mean, features), axis=1)


def predict_point(theta: np.ndarray, template: LogitFn, features: np.ndarray) -> np.ndarray:
    """Probabilities for a plain point estimate (the AdamW path)."""
    return numeric.softmax(template(theta, features), axis=1)


def predict_mc(
    state: optim.PosteriorState,
    config: optim.IvonConfig,
    template: LogitFn,
    features: np.ndarray,
    k: int,
    temperature: float,
    rng: vrng.RngState,
) -> np.ndarray:
    """Average logits over k posterior samples at temperature T, then softmax."""
    if k < 1:
        raise ValueError("mc sample count must be >= 1")
    if temperature <= 0.0:
        raise ValueError("temperature must be > 0")
    total = None
    for i in range(k):
        theta = optim.ivon_sample(state, config, vrng.child(rng, i), temperature)
        logits = template(theta, features)
        total = logits if total is None else total + logits
    return numeric.softmax(total / k, axis=1)


def _check_prob_row(row: np.ndarray) -> np.ndarray:
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("probability row must be a non-empty vector")
    if np.any(arr < -1e-9) or abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError("invalid probability distribution")
    return arr


def maxprob(prob_row: np.ndarray) -> Tuple[int, float]:
    """Predicted class and its probability; ties go to the lowest index."""
    arr = _check_prob_row(prob_row)
    k = int(np.argmax(arr))  # argmax returns the first maximum
    return k, float(arr[k])


def maxprob_batch(probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized maxprob over rows: (predictions, confidences)."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("probs must be a non-empty [n, C] matrix")
    preds = np.argmax(arr, axis=1)
    return preds, arr[np.arange(arr.shape[0]), preds]


def select(k: int, confidence: float, gamma: float) -> SelectiveDecision:
    """Answer k when confidence >= gamma (boundary answers), else abstain."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if confidence >= gamma:
        return SelectiveDecision(answer=int(k), confidence=float(confidence))
    return SelectiveDecision(answer=ABSTAIN, confidence=float(confidence))
