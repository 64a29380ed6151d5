"""Reproducible cross-validation experiments over hyperparameter grids.

A single JSON config describes the dataset, the model variant, the prior
covariances, the grids, and the evaluation protocol.  ``run_cv`` builds
kernels once, fits every grid point on every fold, evaluates held-out
entries, selects hyperparameters independently per metric, and returns a
report whose CSV rendering is byte-identical across runs with the same
config and seed (timings are kept out of the CSV for that reason).

Model variants share one solver: ``con_mvgp`` uses the Frobenius term and
the nuclear penalty, ``trace_gp`` drops the Frobenius term, and ``mvgp``
pins the nuclear penalty at zero.
"""

import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels as kernels_mod
from .data import load_triples, sample_negatives, split_known_rows, split_new_rows
from .exceptions import ConvergenceError, ValidationError
from .metrics import RankedRow, aggregate_rows, precision_at_k, recall_at_k, \
    relevance_from_ratings, rmse
from .solver import FitOptions, MeanModel, fit_exact_prox, fit_factored, \
    objective, predict_mean, save_model

MODELS = ("con_mvgp", "trace_gp", "mvgp")
KERNELS = ("identity", "diffusion")
SPLIT_MODES = ("known_rows", "new_rows")
METRIC_NAMES = ("rmse", "precision_at_k", "recall_at_k")

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-3.0, 3.0, 5))
DEFAULT_NOISE_GRID = tuple(np.logspace(-3.0, 3.0, 20))
DEFAULT_K_VALUES = tuple(range(1, 21))


@dataclass(frozen=True)
class NegativeSamplingConfig:
    enabled: bool = False
    count: int | None = None
    reps: int = 5
    per_row: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one cross-validation experiment."""

    triples: str
    model: str = "con_mvgp"
    row_graph: str | None = None
    col_graph: str | None = None
    row_kernel: str = "identity"
    col_kernel: str = "identity"
    diffusion_decay: float = 1.0
    diffusion_offset: float = 1.0
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    noise_var_grid: tuple = DEFAULT_NOISE_GRID
    split_mode: str = "known_rows"
    fold_count: int = 5
    negatives: NegativeSamplingConfig = field(default_factory=NegativeSamplingConfig)
    metrics: tuple = ("rmse",)
    k_values: tuple = DEFAULT_K_VALUES
    selection_k: int = 20
    relevance_threshold: float | None = None
    seed: int | None = None
    solver: str = "factored"
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "noise_var_grid", tuple(float(v) for v in self.noise_var_grid))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))

    def validate(self, require_seed=False):
        if self.model not in MODELS:
            raise ValidationError(f"unknown model {self.model!r}; pick from {MODELS}")
        if self.row_kernel not in KERNELS or self.col_kernel not in KERNELS:
            raise ValidationError(f"kernels must be one of {KERNELS}")
        if self.split_mode not in SPLIT_MODES:
            raise ValidationError(f"split_mode must be one of {SPLIT_MODES}")
        if self.split_mode == "new_rows" and self.row_kernel == "identity":
            raise ValidationError(
                "identity row kernel cannot score new rows; use a graph kernel"
            )
        if not self.lambda_grid or not self.noise_var_grid:
            raise ValidationError("hyperparameter grids must be nonempty")
        if any(v < 0 for v in self.lambda_grid):
            raise ValidationError("lambda grid values must be nonnegative")
        if any(v <= 0 for v in self.noise_var_grid):
            raise ValidationError("noise variance grid values must be positive")
        if self.fold_count < 2:
            raise ValidationError("fold_count must be at least 2")
        if not self.metrics:
            raise ValidationError("metric list must be nonempty")
        for name in self.metrics:
            if name not in METRIC_NAMES:
                raise ValidationError(
                    f"unknown metric {name!r}; pick from {METRIC_NAMES}"
                )
        if any(name != "rmse" for name in self.metrics) and not self.k_values:
            raise ValidationError("ranking metrics need a nonempty k list")
        if self.row_kernel == "diffusion" and not self.row_graph:
            raise ValidationError("diffusion row kernel needs row_graph")
        if self.col_kernel == "diffusion" and not self.col_graph:
            raise ValidationError("diffusion col kernel needs col_graph")
        if self.solver not in ("factored", "exact"):
            raise ValidationError("solver must be 'factored' or 'exact'")
        if require_seed and self.seed is None:
            raise ValidationError("a seed is required for cross-validation runs")

    def effective_lambda_grid(self):
        """The plain MV-GP variant pins the nuclear penalty at zero."""
        return (0.0,) if self.model == "mvgp" else self.lambda_grid

    def frobenius_weight(self):
        return 0 if self.model == "trace_gp" else 1

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        neg = raw.pop("negatives", None)
        if neg is not None:
            raw["negatives"] = NegativeSamplingConfig(**neg)
        fit_opts = raw.pop("fit_options", None)
        if fit_opts is not None:
            raw["fit_options"] = FitOptions(**fit_opts)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self):
        out = {
            "triples": self.triples, "model": self.model,
            "row_graph": self.row_graph, "col_graph": self.col_graph,
            "row_kernel": self.row_kernel, "col_kernel": self.col_kernel,
            "diffusion_decay": self.diffusion_decay,
            "diffusion_offset": self.diffusion_offset,
            "lambda_grid": list(self.lambda_grid),
            "noise_var_grid": list(self.noise_var_grid),
            "split_mode": self.split_mode, "fold_count": self.fold_count,
            "negatives": {
                "enabled": self.negatives.enabled,
                "count": self.negatives.count,
                "reps": self.negatives.reps,
                "per_row": self.negatives.per_row,
            },
            "metrics": list(self.metrics), "k_values": list(self.k_values),
            "selection_k": self.selection_k,
            "relevance_threshold": self.relevance_threshold,
            "seed": self.seed, "solver": self.solver,
            "fit_options": {
                "max_outer_iters": self.fit_options.max_outer_iters,
                "max_rank": self.fit_options.max_rank,
                "objective_rel_tol": self.fit_options.objective_rel_tol,
                "power_iters": self.fit_options.power_iters,
                "power_tol": self.fit_options.power_tol,
                "inner_iters": self.fit_options.inner_iters,
                "seed": self.fit_options.seed,
            },
        }
        return out


@dataclass
class MetricsReport:
    """Grid records, per-metric selections, failures, and timings."""

    config: dict
    kernel_label: str
    records: list
    selected: dict
    failures: list
    timings: dict

    CSV_HEADER = "model,kernel,split_mode,fold,metric,k,mean,std"

    def csv_text(self):
        """Metric rows at the selected hyperparameters, one line per fold/k."""
        lines = [self.CSV_HEADER]
        model = self.config["model"]
        split_mode = self.config["split_mode"]
        for metric in self.config["metrics"]:
            chosen = self.selected[metric]
            rows = [
                r for r in self.records
                if r["metric"] == metric
                and r["lam"] == chosen["lam"]
                and r["noise_var"] == chosen["noise_var"]
            ]
            rows.sort(key=lambda r: (r["fold"], r["k"]))
            for r in rows:
                lines.append(
                    f"{model},{self.kernel_label},{split_mode},{r['fold']},"
                    f"{metric},{r['k']},{float(r['mean'])!r},{float(r['std'])!r}"
                )
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.csv_text())

    def to_json(self):
        return json.dumps(
            {
                "config": self.config,
                "kernel_label": self.kernel_label,
                "records": self.records,
                "selected": self.selected,
                "failures": self.failures,
                "timings": self.timings,
            },
            sort_keys=True,
        )

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            config=raw["config"], kernel_label=raw["kernel_label"],
            records=raw["records"], selected=raw["selected"],
            failures=raw["failures"], timings=raw["timings"],
        )


# ---------------------------------------------------------------------------
# kernel construction
# ---------------------------------------------------------------------------

def _build_side(kind, graph_path, needed, decay, offset):
    if kind == "identity":
        kernel = kernels_mod.identity_kernel(needed)
        label = f"identity:{needed}"
    else:
        graph = kernels_mod.load_edge_list(graph_path)
        if graph.node_count < needed:
            graph = kernels_mod.GraphSpec(node_count=needed, edges=graph.edges)
        lap = kernels_mod.normalized_laplacian(kernels_mod.build_adjacency(graph))
        kernel = kernels_mod.diffusion_kernel(lap, decay, offset)
        label = (
            f"diffusion(a={decay:g},b={offset:g}):"
            f"{os.path.basename(graph_path)}"
        )
    return kernel, kernels_mod.factorize_basis(kernel), label


def build_kernels(config, obs):
    """Row/col kernels and bases sized to cover the observed grid."""
    row_kernel, row_basis, row_id = _build_side(
        config.row_kernel, config.row_graph, obs.n_rows,
        config.diffusion_decay, config.diffusion_offset,
    )
    col_kernel, col_basis, col_id = _build_side(
        config.col_kernel, config.col_graph, obs.n_cols,
        config.diffusion_decay, config.diffusion_offset,
    )
    return row_kernel, col_kernel, row_basis, col_basis, row_id, col_id


def _fit_seed(base_seed, fold, rep):
    # stable across runs and platforms; independent of the grid point so
    # the mvgp variant reproduces the lam=0 column of con_mvgp exactly
    seq = np.random.SeedSequence([int(base_seed), int(fold), int(rep)])
    return int(seq.generate_state(1)[0])


def _fit(config, train_obs, row_basis, col_basis, lam, noise_var, seed):
    options = replace(config.fit_options, seed=seed)
    fitter = fit_factored if config.solver == "factored" else fit_exact_prox
    return fitter(train_obs, row_basis, col_basis, lam, noise_var,
                  frobenius_weight=config.frobenius_weight(), options=options)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _score_rows(models_by_rep, row_basis, col_basis, row_ids):
    """Replicate-averaged score matrix (len(row_ids) x n_cols)."""
    total = None
    for model in models_by_rep:
        left = row_basis.values[row_ids] @ model.row_factor
        right = col_basis.values[: model.n_cols] @ model.col_factor
        scores = left @ right.T
        total = scores if total is None else total + scores
    return total / len(models_by_rep)


def _ranking_rows(train, test, score_matrix, test_rows, relevance_threshold):
    """RankedRow per test row; candidates exclude train-observed columns.

    Only positive training associations count as observed for filtering;
    sampled negatives are synthetic and stay in the candidate set.
    """
    rows = []
    n_cols = train.n_cols
    for pos, m in enumerate(test_rows):
        seen = train.cols[train.rows == m]
        mask = np.ones(n_cols, dtype=bool)
        mask[seen] = False
        candidates = np.flatnonzero(mask)
        labels = np.zeros(n_cols, dtype=int)
        sel = test.rows == m
        test_cols = test.cols[sel]
        if relevance_threshold is None:
            labels[test_cols] = 1
        else:
            labels[test_cols] = relevance_from_ratings(
                test.values[sel], relevance_threshold
            )
        row = RankedRow(
            row_id=int(m),
            col_ids=candidates,
            scores=score_matrix[pos, candidates],
            labels=labels[candidates],
        )
        if row.relevant_count > 0:  # rows with nothing relevant are skipped
            rows.append(row)
    return rows


def _evaluate_cell(config, fold, lam, noise_var, models_by_rep, train, test,
                   row_basis, col_basis):
    records = []
    wants_ranking = any(m != "rmse" for m in config.metrics)
    if "rmse" in config.metrics and len(test) > 0:
        preds = np.zeros(len(test))
        for model in models_by_rep:
            preds += predict_mean(model, row_basis, col_basis, test.indices())
        preds /= len(models_by_rep)
        records.append({
            "fold": fold, "lam": lam, "noise_var": noise_var,
            "metric": "rmse", "k": 0,
            "mean": rmse(preds, test.values), "std": 0.0,
        })
    if wants_ranking and len(test) > 0:
        test_rows = np.unique(test.rows)
        score_matrix = _score_rows(models_by_rep, row_basis, col_basis, test_rows)
        ranked = _ranking_rows(train, test, score_matrix, test_rows,
                               config.relevance_threshold)
        for name, fn in (("precision_at_k", precision_at_k),
                         ("recall_at_k", recall_at_k)):
            if name not in config.metrics:
                continue
            for k in config.k_values:
                if ranked:
                    mean, std = aggregate_rows([fn(r, k) for r in ranked])
                else:
                    mean, std = float("nan"), float("nan")
                records.append({
                    "fold": fold, "lam": lam, "noise_var": noise_var,
                    "metric": name, "k": int(k), "mean": mean, "std": std,
                })
    return records


def _select_per_metric(config, records):
    """Best grid point independently per metric, from fold-averaged scores."""
    selected = {}
    for metric in config.metrics:
        sel_k = 0 if metric == "rmse" else int(config.selection_k)
        best = None
        for lam in config.effective_lambda_grid():
            for noise_var in config.noise_var_grid:
                vals = [
                    r["mean"] for r in records
                    if r["metric"] == metric and r["lam"] == lam
                    and r["noise_var"] == noise_var and r["k"] == sel_k
                    and np.isfinite(r["mean"])
                ]
                if not vals:
                    continue
                score = float(np.mean(vals))
                better = (
                    best is None
                    or (metric == "rmse" and score < best["score"])
                    or (metric != "rmse" and score > best["score"])
                )
                if better:
                    best = {
                        "lam": lam, "noise_var": noise_var, "score": score,
                        "selection_k": sel_k,
                    }
        if best is None:
            raise ValidationError(
                f"no usable records for metric {metric!r}; "
                "every fold may have lacked relevant test rows"
            )
        selected[metric] = best
    return selected


def run_cv(config):
    """Run the full cross-validation experiment described by ``config``."""
    config.validate(require_seed=True)
    t_start = time.perf_counter()
    obs = load_triples(config.triples)
    if len(obs) == 0:
        raise ValidationError(f"{config.triples}: no observations to fit")
    _, _, row_basis, col_basis, row_id, col_id = build_kernels(config, obs)

    if config.split_mode == "known_rows":
        split = split_known_rows(obs, config.fold_count, config.seed)
    else:
        split = split_new_rows(obs, config.fold_count, config.seed)

    replicate_negatives = [None]
    if config.negatives.enabled:
        replicate_negatives = sample_negatives(
            obs, count=config.negatives.count, reps=config.negatives.reps,
            seed=config.seed, per_row=config.negatives.per_row,
        )

    records, failures, fit_seconds = [], [], []
    for fold in range(config.fold_count):
        train, test = split.train_test(obs, fold)
        if len(train) == 0:
            raise ValidationError(f"fold {fold} has an empty training set")
        train_reps = []
        for neg in replicate_negatives:
            if neg is None:
                train_reps.append(train)
            else:
                neg_obs = neg.as_observations(obs.n_rows, obs.n_cols)
                merged = np.concatenate
                train_reps.append(type(train)(
                    n_rows=obs.n_rows, n_cols=obs.n_cols,
                    rows=merged([train.rows, neg_obs.rows]),
                    cols=merged([train.cols, neg_obs.cols]),
                    values=merged([train.values, neg_obs.values]),
                ))
        for lam in config.effective_lambda_grid():
            for noise_var in config.noise_var_grid:
                models_by_rep = []
                for rep, train_rep in enumerate(train_reps):
                    t0 = time.perf_counter()
                    seed = _fit_seed(config.seed, fold, rep)
                    try:
                        model = _fit(config, train_rep, row_basis, col_basis,
                                     lam, noise_var, seed)
                    except ConvergenceError as exc:
                        failures.append({
                            "fold": fold, "rep": rep, "lam": lam,
                            "noise_var": noise_var, "error": str(exc),
                        })
                        model = exc.model  # evaluate the last iterate anyway
                    fit_seconds.append(time.perf_counter() - t0)
                    models_by_rep.append(model)
                records.extend(_evaluate_cell(
                    config, fold, lam, noise_var, models_by_rep, train, test,
                    row_basis, col_basis,
                ))

    selected = _select_per_metric(config, records)
    kernel_label = f"{config.row_kernel}/{config.col_kernel}"
    timings = {
        "total_seconds": time.perf_counter() - t_start,
        "fit_seconds": fit_seconds,
        "row_kernel_id": row_id,
        "col_kernel_id": col_id,
    }
    return MetricsReport(
        config=config.to_dict(), kernel_label=kernel_label, records=records,
        selected=selected, failures=failures, timings=timings,
    )


def fit_once(config, lam, noise_var, model_path=None):
    """Fit a single model on the full dataset at one grid point.

    Returns ``(model, diagnostics)`` where diagnostics carry the final
    objective, the retained rank, and iteration/time counters; writes the
    serialized model when ``model_path`` is given.
    """
    config.validate()
    obs = load_triples(config.triples)
    if len(obs) == 0:
        raise ValidationError(f"{config.triples}: no observations to fit")
    _, _, row_basis, col_basis, row_id, col_id = build_kernels(config, obs)
    seed = _fit_seed(config.seed or 0, 0, 0)
    t0 = time.perf_counter()
    model = _fit(config, obs, row_basis, col_basis, lam, noise_var, seed)
    elapsed = time.perf_counter() - t0
    model = replace(model, row_kernel_id=row_id, col_kernel_id=col_id)
    diagnostics = {
        "final_objective": objective(model, row_basis, col_basis, obs),
        "rank": model.rank,
        "iterations": model.fit_iterations,
        "wall_seconds": elapsed,
        "lam": float(lam),
        "noise_var": float(noise_var),
        "solver": config.solver,
    }
    if model_path is not None:
        save_model(model, model_path)
    return model, diagnostics
