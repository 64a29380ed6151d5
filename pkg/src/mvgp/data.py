"""Dataset ingestion, cross-validation folds, and negative sampling.

Triple files are UTF-8 text with one ``row col value`` entry per line.
An optional first header line ``#rows M cols N`` pins the matrix extent;
other ``#`` lines are comments.  Duplicate (row, col) entries are averaged
at load time.

Splits and samples are pure functions of (input, parameters, seed), so
identical seeds reproduce identical folds and replicates.
"""

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class ObservationSet:
    """Sparse list of observed matrix entries on an ``n_rows x n_cols`` grid."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=int)
        cols = np.asarray(self.cols, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if not (rows.shape == cols.shape == values.shape) or rows.ndim != 1:
            raise ValidationError("rows, cols, values must be equal-length 1-d")
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValidationError("grid extent must be positive")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n_rows:
                raise ValidationError(f"row index outside [0, {self.n_rows})")
            if cols.min() < 0 or cols.max() >= self.n_cols:
                raise ValidationError(f"col index outside [0, {self.n_cols})")
            flat = rows.astype(np.int64) * self.n_cols + cols
            if np.unique(flat).size != flat.size:
                raise ValidationError(
                    "duplicate (row, col) entries; use from_entries to average"
                )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.rows.size

    @classmethod
    def from_entries(cls, entries, n_rows=None, n_cols=None):
        """Build from (row, col, value) triples, averaging duplicates."""
        merged = {}
        counts = {}
        for m, n, y in entries:
            key = (int(m), int(n))
            merged[key] = merged.get(key, 0.0) + float(y)
            counts[key] = counts.get(key, 0) + 1
        keys = sorted(merged)
        rows = np.array([k[0] for k in keys], dtype=int)
        cols = np.array([k[1] for k in keys], dtype=int)
        values = np.array([merged[k] / counts[k] for k in keys])
        if n_rows is None:
            n_rows = int(rows.max()) + 1 if rows.size else 1
        if n_cols is None:
            n_cols = int(cols.max()) + 1 if cols.size else 1
        return cls(n_rows=n_rows, n_cols=n_cols, rows=rows, cols=cols,
                   values=values)

    def take(self, positions):
        """New ObservationSet keeping the entries at the given positions."""
        positions = np.asarray(positions, dtype=int)
        return ObservationSet(
            n_rows=self.n_rows, n_cols=self.n_cols,
            rows=self.rows[positions], cols=self.cols[positions],
            values=self.values[positions],
        )

    def indices(self):
        """Observed (row, col) pairs as an (L, 2) array."""
        return np.column_stack([self.rows, self.cols])


def load_triples(path):
    """Parse a triple file into an ObservationSet.

    The grid extent comes from a ``#rows M cols N`` header when present,
    otherwise from the largest observed indices.
    """
    entries = []
    n_rows = n_cols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                parts = stripped[1:].split()
                if len(parts) == 4 and parts[0] == "rows" and parts[2] == "cols":
                    try:
                        n_rows, n_cols = int(parts[1]), int(parts[3])
                    except ValueError as exc:
                        raise ValidationError(f"{path}:{lineno}: {exc}") from exc
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'row col value', got {stripped!r}"
                )
            try:
                entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    if not entries and (n_rows is None or n_cols is None):
        return ObservationSet(n_rows=n_rows or 1, n_cols=n_cols or 1,
                              rows=[], cols=[], values=[])
    return ObservationSet.from_entries(entries, n_rows=n_rows, n_cols=n_cols)


@dataclass(frozen=True)
class FoldSplit:
    """Deterministic k-fold assignment.

    In ``known_rows`` mode each fold holds positions into the observation
    list; in ``new_rows`` mode each fold holds row ids whose entries are
    all held out together.
    """

    mode: str
    fold_count: int
    folds: tuple
    seed: int

    def held_out_positions(self, obs, fold):
        """Positions (into obs) of the test entries for one fold."""
        if self.mode == "known_rows":
            return np.asarray(self.folds[fold], dtype=int)
        held_rows = np.asarray(self.folds[fold], dtype=int)
        return np.flatnonzero(np.isin(obs.rows, held_rows))

    def train_test(self, obs, fold):
        """(train ObservationSet, test ObservationSet) for one fold."""
        test_pos = self.held_out_positions(obs, fold)
        mask = np.ones(len(obs), dtype=bool)
        mask[test_pos] = False
        return obs.take(np.flatnonzero(mask)), obs.take(test_pos)

    def to_json(self):
        return json.dumps(
            {
                "mode": self.mode,
                "fold_count": self.fold_count,
                "seed": self.seed,
                "folds": [np.asarray(f).tolist() for f in self.folds],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        return cls(
            mode=raw["mode"], fold_count=raw["fold_count"], seed=raw["seed"],
            folds=tuple(np.array(f, dtype=int) for f in raw["folds"]),
        )


def split_known_rows(obs, fold_count, seed):
    """Random k-fold partition of the observed entries."""
    if fold_count < 2:
        raise ValidationError("fold_count must be at least 2")
    if len(obs) < fold_count:
        raise ValidationError(
            f"{len(obs)} entries cannot fill {fold_count} folds"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(obs))
    folds = tuple(np.sort(chunk) for chunk in np.array_split(order, fold_count))
    return FoldSplit(mode="known_rows", fold_count=fold_count, folds=folds,
                     seed=seed)


def split_new_rows(obs, fold_count, seed):
    """Row-wise k-fold partition: held-out rows never appear in training.

    Only rows with at least one observation participate; unobserved rows
    are outside the fold universe.
    """
    if fold_count < 2:
        raise ValidationError("fold_count must be at least 2")
    observed_rows = np.unique(obs.rows)
    if observed_rows.size < fold_count:
        raise ValidationError(
            f"{observed_rows.size} observed rows cannot fill {fold_count} folds"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(observed_rows.size)
    folds = tuple(
        np.sort(observed_rows[chunk])
        for chunk in np.array_split(order, fold_count)
    )
    return FoldSplit(mode="new_rows", fold_count=fold_count, folds=folds,
                     seed=seed)


@dataclass(frozen=True)
class NegativeSample:
    """One replicate of sampled zero-labeled cells (1-based replicate id)."""

    replicate: int
    rows: np.ndarray
    cols: np.ndarray

    def as_observations(self, n_rows, n_cols, value=0.0):
        return ObservationSet(
            n_rows=n_rows, n_cols=n_cols, rows=self.rows, cols=self.cols,
            values=np.full(self.rows.size, value),
        )


def sample_negatives(positives, count=None, reps=5, seed=0, per_row=False):
    """Sample unknown cells as negatives, uniformly without replacement.

    Returns ``reps`` independent replicates; each is disjoint from the
    positive set and internally duplicate-free.  ``count`` defaults to the
    number of positives.  Training replicates pair one sample with the
    positive set, and downstream scores are averaged over replicates.

    With ``per_row=True`` sampling is stratified: ``count`` unknown cells
    are drawn within each observed row (default: the rounded-up average
    number of positives per row).
    """
    if per_row:
        return _sample_negatives_per_row(positives, count, reps, seed)
    if count is None:
        count = len(positives)
    total = positives.n_rows * positives.n_cols
    known = set(
        zip(positives.rows.tolist(), positives.cols.tolist())
    )
    free = total - len(known)
    if count > free:
        raise ValidationError(
            f"requested {count} negatives but only {free} unknown cells exist"
        )
    if reps < 1:
        raise ValidationError("reps must be positive")
    rng = np.random.default_rng(seed)
    samples = []
    for rep in range(1, reps + 1):
        if free <= 4 * count or total <= 100_000:
            # small grid: enumerate the complement and choose directly
            known_flat = positives.rows * positives.n_cols + positives.cols
            pool = np.setdiff1d(np.arange(total), known_flat)
            flat = rng.choice(pool, size=count, replace=False)
        else:
            picked = set()
            while len(picked) < count:
                m = int(rng.integers(positives.n_rows))
                n = int(rng.integers(positives.n_cols))
                if (m, n) in known or (m, n) in picked:
                    continue
                picked.add((m, n))
            flat = np.array(
                sorted(m * positives.n_cols + n for m, n in picked), dtype=int
            )
        flat = np.sort(flat)
        samples.append(
            NegativeSample(
                replicate=rep,
                rows=flat // positives.n_cols,
                cols=flat % positives.n_cols,
            )
        )
    return samples


def _sample_negatives_per_row(positives, count, reps, seed):
    if reps < 1:
        raise ValidationError("reps must be positive")
    observed_rows = np.unique(positives.rows)
    if count is None:
        count = -(-len(positives) // observed_rows.size)  # ceil of the mean
    cols_by_row = {
        int(m): positives.cols[positives.rows == m] for m in observed_rows
    }
    rng = np.random.default_rng(seed)
    samples = []
    for rep in range(1, reps + 1):
        rows_out, cols_out = [], []
        for m in observed_rows:
            pool = np.setdiff1d(np.arange(positives.n_cols), cols_by_row[int(m)])
            if count > pool.size:
                raise ValidationError(
                    f"row {m}: requested {count} negatives but only "
                    f"{pool.size} unknown cells exist"
                )
            chosen = np.sort(rng.choice(pool, size=count, replace=False))
            rows_out.append(np.full(count, m, dtype=int))
            cols_out.append(chosen)
        samples.append(
            NegativeSample(
                replicate=rep,
                rows=np.concatenate(rows_out),
                cols=np.concatenate(cols_out),
            )
        )
    return samples
