"""Rank-based detection metrics with OOD as the positive class.

All three metrics are threshold-free or threshold-enumerating over the
observed distinct scores, with tied scores moving between confusion cells
atomically. That makes every value invariant under strictly increasing
transforms of the scores and independent of sample order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DataError
from .tensor_io import ID, OOD


@dataclass(frozen=True)
class ScoredSample:
    sample_id: str
    score: float
    label: str  # ID or OOD; higher score = more OOD


@dataclass(frozen=True)
class MetricsTriple:
    auroc: float
    aupr: float
    fpr_at_tpr: float
    tpr_target: float = 0.75


@dataclass(frozen=True)
class TrialSummary:
    mean: MetricsTriple
    sd: MetricsTriple
    n_trials: int


def _arrays(samples: Sequence[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise DataError("no scored samples")
    scores = np.array([s.score for s in samples], dtype=np.float64)
    if not np.isfinite(scores).all():
        bad = samples[int(np.argwhere(~np.isfinite(scores))[0])]
        raise DataError(f"non-finite score for sample {bad.sample_id!r}")
    for s in samples:
        if s.label not in (ID, OOD):
            raise DataError(f"label {s.label!r} for {s.sample_id!r} is not ID or OOD")
    is_ood = np.array([s.label == OOD for s in samples], dtype=bool)
    return scores, is_ood


def auroc(samples: Sequence[ScoredSample]) -> float:
    """Probability a random OOD sample outscores a random ID sample (ties 1/2).

    Computed as the normalized Mann-Whitney U statistic via average ranks,
    which equals the trapezoidal area under the ROC curve built from the
    distinct scores.
    """
    scores, is_ood = _arrays(samples)
    n_ood = int(is_ood.sum())
    n_id = int((~is_ood).sum())
    if n_ood == 0 or n_id == 0:
        raise DataError("auroc needs at least one OOD and one ID sample")
    ranks = rankdata(scores)  # average ranks on ties
    u = float(ranks[is_ood].sum()) - n_ood * (n_ood + 1) / 2.0
    return u / (n_ood * n_id)


def _threshold_counts(scores: np.ndarray, is_ood: np.ndarray):
    """Cumulative (tp, fp) at each distinct score, descending (ties together)."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = is_ood[order].astype(np.int64)
    boundary = np.nonzero(np.diff(s))[0]
    last = np.concatenate([boundary, [len(s) - 1]])  # last index of each tie group
    tp = np.cumsum(pos)[last]
    fp = (last + 1) - tp
    return tp, fp


def aupr(samples: Sequence[ScoredSample]) -> float:
    """Average precision of the OOD class over descending distinct-score thresholds."""
    scores, is_ood = _arrays(samples)
    n_ood = int(is_ood.sum())
    if n_ood == 0:
        raise DataError("aupr needs at least one OOD sample")
    tp, fp = _threshold_counts(scores, is_ood)
    recall = tp / n_ood
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def fpr_at_tpr(samples: Sequence[ScoredSample], tpr_target: float = 0.75) -> float:
    """Minimum false positive rate among thresholds reaching TPR >= tpr_target."""
    if not (0.0 < tpr_target <= 1.0):
        raise ConfigError(f"tpr_target {tpr_target} not in (0, 1]")
    scores, is_ood = _arrays(samples)
    n_ood = int(is_ood.sum())
    n_id = int((~is_ood).sum())
    if n_ood == 0 or n_id == 0:
        raise DataError("fpr_at_tpr needs at least one OOD and one ID sample")
    tp, fp = _threshold_counts(scores, is_ood)
    tpr = tp / n_ood
    fpr = fp / n_id
    feasible = fpr[tpr >= tpr_target]
    # the lowest threshold predicts everything positive, so TPR=1 always occurs
    return float(feasible.min())


def evaluate(samples: Sequence[ScoredSample], tpr_target: float = 0.75) -> MetricsTriple:
    return MetricsTriple(
        auroc=auroc(samples),
        aupr=aupr(samples),
        fpr_at_tpr=fpr_at_tpr(samples, tpr_target),
        tpr_target=tpr_target,
    )


def aggregate_trials(triples: Iterable[MetricsTriple]) -> TrialSummary:
    """Fieldwise mean and population standard deviation over repeated trials."""
    triples = list(triples)
    if not triples:
        raise ConfigError("no trials to aggregate")
    targets = {t.tpr_target for t in triples}
    if len(targets) != 1:
        raise ConfigError(f"trials mix tpr_targets {sorted(targets)}")
    target = triples[0].tpr_target

    def stats(values: list[float]) -> tuple[float, float]:
        if all(v == values[0] for v in values):
            return values[0], 0.0  # identical trials have exactly zero spread
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / len(values)
        return mean, math.sqrt(var)

    a = stats([t.auroc for t in triples])
    p = stats([t.aupr for t in triples])
    f = stats([t.fpr_at_tpr for t in triples])
    return TrialSummary(
        mean=MetricsTriple(a[0], p[0], f[0], target),
        sd=MetricsTriple(a[1], p[1], f[1], target),
        n_trials=len(triples),
    )


def scored_samples(ids: Sequence[str], scores: Sequence[float],
                   labels_by_id: dict[str, Optional[str]]) -> list[ScoredSample]:
    """Join per-sample scores with a label lookup; every id must resolve."""
    out = []
    for sample_id, score in zip(ids, scores):
        label = labels_by_id.get(sample_id)
        if label is None:
            raise DataError(f"sample {sample_id!r} has no label")
        out.append(ScoredSample(sample_id, float(score), label))
    return out
