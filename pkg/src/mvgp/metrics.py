"""Ranking and regression metrics for the evaluation protocol.

Candidates within a row are ranked by score descending with ties broken by
ascending column id, which keeps results deterministic across platforms.
Ranking metrics are computed per row and then averaged over rows; rows
with no relevant candidates are skipped by the aggregation layer rather
than counted as zero.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class RankedRow:
    """Scored candidate columns for one row, with 0/1 relevance labels.

    Candidates are expected to already exclude columns observed for this
    row in training.
    """

    row_id: int
    col_ids: np.ndarray
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.col_ids, dtype=int)
        scores = np.asarray(self.scores, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if not (cols.shape == scores.shape == labels.shape) or cols.ndim != 1:
            raise ValidationError("col_ids, scores, labels must be equal-length 1-d")
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise ValidationError("labels must be 0 or 1")
        object.__setattr__(self, "col_ids", cols)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def relevant_count(self):
        return int(self.labels.sum())

    def ranked_labels(self):
        """Labels sorted by score descending, ties by ascending column id."""
        order = np.lexsort((self.col_ids, -self.scores))
        return self.labels[order]


def precision_at_k(row, k):
    """Fraction of the top-k candidates that are relevant.

    When fewer than ``k`` candidates exist the hit count runs over the
    available prefix but ``k`` stays in the denominator.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    hits = int(row.ranked_labels()[:k].sum())
    return hits / k


def recall_at_k(row, k):
    """Fraction of the row's relevant candidates found in the top k."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    total = row.relevant_count
    if total == 0:
        raise ValidationError(
            "row has no relevant candidates; skip it during aggregation"
        )
    hits = int(row.ranked_labels()[:k].sum())
    return hits / total


def aggregate_rows(values):
    """Mean and population standard deviation of per-row metric values."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValidationError("cannot aggregate an empty list of rows")
    return float(v.mean()), float(v.std())


def rmse(predicted, actual):
    """Root mean square error between two equal-length value lists."""
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1 or p.size == 0:
        raise ValidationError("predicted and actual must be equal-length, nonempty")
    return float(np.sqrt(np.mean((p - a) ** 2)))


def relevance_from_ratings(ratings, threshold):
    """Binary relevance labels: 1 iff rating is strictly above threshold."""
    r = np.asarray(ratings, dtype=float)
    return (r > threshold).astype(int)
