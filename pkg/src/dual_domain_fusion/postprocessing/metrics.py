"""Frame-level detection metrics: confusion counts, P/R/F1/ACC and rank AUC."""

from dataclasses import asdict, dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from ..data.defaults import DEFAULT_THRESHOLD
from ..errors import DomainError, ShapeError


@dataclass(frozen=True)
class ScoreSet:
    """Scores with parallel labels, 0 = real and 1 = fake."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        labels = np.asarray(self.labels).reshape(-1)
        if scores.size == 0 or scores.size != labels.size:
            raise ShapeError(f'Need equal, non-zero numbers of scores and labels, got {scores.size} and {labels.size}')
        if not np.all((labels == 0) | (labels == 1)):
            raise DomainError(f'Labels must be 0 or 1, got {np.unique(labels).tolist()}')
        if not np.all(np.isfinite(scores)):
            raise DomainError('Scores must be finite')
        object.__setattr__(self, 'scores', scores)
        object.__setattr__(self, 'labels', labels.astype(np.int64))

    @classmethod
    def from_lists(cls, scores: Sequence[float], labels: Sequence[int]) -> 'ScoreSet':
        return cls(np.asarray(scores), np.asarray(labels))

    @property
    def n_fake(self) -> int:
        return int(self.labels.sum())

    @property
    def n_real(self) -> int:
        return int(self.labels.size - self.labels.sum())


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int
    TN: int
    FP: int
    FN: int

    @property
    def total(self) -> int:
        return self.TP + self.TN + self.FP + self.FN


@dataclass(frozen=True)
class MetricsReport:
    acc: float
    precision: float
    recall: float
    f1: float
    auc: float
    threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(score_set: ScoreSet, threshold: float = DEFAULT_THRESHOLD) -> ConfusionCounts:
    """A sample is predicted fake when its score is at or above the threshold."""
    predicted = score_set.scores >= threshold
    actual = score_set.labels == 1
    return ConfusionCounts(
        TP=int(np.sum(predicted & actual)),
        TN=int(np.sum(~predicted & ~actual)),
        FP=int(np.sum(predicted & ~actual)),
        FN=int(np.sum(~predicted & actual)),
    )


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def prf_acc(counts: ConfusionCounts) -> Tuple[float, float, float, float]:
    """
    Precision, recall, F1 and accuracy; any 0/0 is 0.

    Returns
    -------
    Tuple[float, float, float, float]
        (P, R, F1, ACC)
    """
    precision = _ratio(counts.TP, counts.TP + counts.FP)
    recall = _ratio(counts.TP, counts.TP + counts.FN)
    f1 = _ratio(2 * precision * recall, precision + recall)
    acc = _ratio(counts.TP + counts.TN, counts.total)
    return precision, recall, f1, acc


def auc(score_set: ScoreSet) -> float:
    """
    Probability that a random fake outscores a random real, ties counting half.

    Uses the Mann-Whitney U statistic from mid-ranks.
    """
    n_fake, n_real = score_set.n_fake, score_set.n_real
    if n_fake == 0 or n_real == 0:
        raise DomainError(f'AUC needs both classes, got {n_fake} fake and {n_real} real')
    ranks = rankdata(score_set.scores, method='average')
    rank_sum = ranks[score_set.labels == 1].sum()
    u_statistic = rank_sum - n_fake * (n_fake + 1) / 2.0
    return float(u_statistic / (n_fake * n_real))


def evaluate_scores(score_set: ScoreSet, threshold: float = DEFAULT_THRESHOLD) -> MetricsReport:
    """All metrics of a score set at one threshold."""
    precision, recall, f1, acc = prf_acc(confusion(score_set, threshold))
    return MetricsReport(
        acc=acc, precision=precision, recall=recall, f1=f1, auc=auc(score_set), threshold=float(threshold)
    )
