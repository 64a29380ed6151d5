"""Command line driver.

Subcommands: ``kernel`` (graph file to kernel/basis archive), ``fit``,
``predict``, ``cv``, ``report``.  Flags override config fields.  Exit
codes: 0 success, 2 validation error, 3 numeric or convergence failure.
"""

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import kernels as kernels_mod
from .exceptions import NumericError, ValidationError
from .experiment import ExperimentConfig, MetricsReport, fit_once, run_cv


def _load_config(args):
    config = ExperimentConfig.from_json_file(args.config)
    overrides = {}
    for name in ("model", "split_mode", "solver"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "folds", None) is not None:
        overrides["fold_count"] = args.folds
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return replace(config, **overrides) if overrides else config


def _cmd_kernel(args):
    if args.kind == "identity":
        if args.nodes is None:
            raise ValidationError("identity kernel needs --nodes")
        kernel = kernels_mod.identity_kernel(args.nodes)
        kernel_id = f"identity:{args.nodes}"
    else:
        graph = kernels_mod.load_edge_list(args.edges, node_count=args.nodes)
        lap = kernels_mod.normalized_laplacian(kernels_mod.build_adjacency(graph))
        kernel = kernels_mod.diffusion_kernel(lap, args.decay, args.offset)
        kernel_id = f"diffusion(a={args.decay:g},b={args.offset:g}):{args.edges}"
    basis = kernels_mod.factorize_basis(kernel)
    np.savez(
        args.out, kernel=kernel.values, basis=basis.values,
        kernel_id=np.array(kernel_id),
    )
    print(f"wrote {args.out}: dim={kernel.dim} basis_dim={basis.basis_dim}")
    return 0


def _cmd_fit(args):
    config = _load_config(args)
    lam = args.lam if args.lam is not None else config.effective_lambda_grid()[0]
    noise_var = (
        args.noise_var if args.noise_var is not None
        else config.noise_var_grid[0]
    )
    _, diagnostics = fit_once(config, lam, noise_var, model_path=args.model_out)
    if args.diagnostics_out:
        with open(args.diagnostics_out, "w", encoding="utf-8") as fh:
            json.dump(diagnostics, fh, sort_keys=True)
    print(
        f"fit: rank={diagnostics['rank']} "
        f"objective={diagnostics['final_objective']:.6g} "
        f"iterations={diagnostics['iterations']} -> {args.model_out}"
    )
    return 0


def _load_basis(path):
    with np.load(path, allow_pickle=False) as archive:
        if "basis" not in archive:
            raise ValidationError(f"{path}: not a kernel archive (no 'basis')")
        return kernels_mod.BasisFactor(archive["basis"])


def _read_index_file(path):
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'row col', got {stripped!r}"
                )
            pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def _cmd_predict(args):
    from .solver import load_model, predict_mean

    model = load_model(args.model)
    row_basis = _load_basis(args.row_basis)
    col_basis = _load_basis(args.col_basis)
    if args.indices:
        pairs = _read_index_file(args.indices)
    else:
        with open(args.full_rows, "r", encoding="utf-8") as fh:
            row_ids = [int(t) for t in fh.read().split()]
        pairs = [(m, n) for m in row_ids for n in range(col_basis.rows)]
    scores = predict_mean(model, row_basis, col_basis, pairs)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        for (m, n), s in zip(pairs, scores):
            fh.write(f"{m}\t{n}\t{float(s)!r}\n")
    print(f"wrote {len(pairs)} scores to {args.out}")
    return 0


def _cmd_cv(args):
    config = _load_config(args)
    report = run_cv(config)
    report.write_csv(args.out_csv)
    if args.out_report:
        report.write_json(args.out_report)
    for metric, best in sorted(report.selected.items()):
        print(
            f"{metric}: lam={best['lam']:g} noise_var={best['noise_var']:g} "
            f"cv_score={best['score']:.6g}"
        )
    print(f"wrote {args.out_csv}")
    return 0


def _cmd_report(args):
    report = MetricsReport.from_json_file(args.report)
    if args.out_csv:
        report.write_csv(args.out_csv)
        print(f"wrote {args.out_csv}")
    else:
        sys.stdout.write(report.csv_text())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvgp",
        description="Graph-kernel Gaussian process matrix completion with "
                    "nuclear-norm constrained means",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_kernel = sub.add_parser("kernel", help="build a kernel/basis archive from a graph")
    p_kernel.add_argument("--edges", help="edge-list file (i j [weight] per line)")
    p_kernel.add_argument("--kind", choices=("diffusion", "identity"),
                          default="diffusion")
    p_kernel.add_argument("--nodes", type=int, default=None)
    p_kernel.add_argument("--decay", type=float, default=1.0,
                          help="diffusion rate a (default 1)")
    p_kernel.add_argument("--offset", type=float, default=1.0,
                          help="diagonal offset b (default 1)")
    p_kernel.add_argument("--out", required=True, help="output .npz path")
    p_kernel.set_defaults(func=_cmd_kernel)

    p_fit = sub.add_parser("fit", help="fit one model at a single grid point")
    p_fit.add_argument("--config", required=True, help="experiment config JSON")
    p_fit.add_argument("--lam", type=float, default=None)
    p_fit.add_argument("--noise-var", dest="noise_var", type=float, default=None)
    p_fit.add_argument("--model", choices=("con_mvgp", "trace_gp", "mvgp"),
                       default=None, help="override config model")
    p_fit.add_argument("--solver", choices=("factored", "exact"), default=None)
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--model-out", required=True)
    p_fit.add_argument("--diagnostics-out", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="score indices with a saved model")
    p_pred.add_argument("--model", required=True, help="model file from fit")
    p_pred.add_argument("--row-basis", required=True, help="kernel archive (.npz)")
    p_pred.add_argument("--col-basis", required=True, help="kernel archive (.npz)")
    group = p_pred.add_mutually_exclusive_group(required=True)
    group.add_argument("--indices", help="file of 'row col' pairs to score")
    group.add_argument("--full-rows",
                       help="file of row ids; scores every column per row")
    p_pred.add_argument("--out", required=True, help="output TSV path")
    p_pred.set_defaults(func=_cmd_predict)

    p_cv = sub.add_parser("cv", help="run the cross-validation grid")
    p_cv.add_argument("--config", required=True)
    p_cv.add_argument("--seed", type=int, required=True)
    p_cv.add_argument("--model", choices=("con_mvgp", "trace_gp", "mvgp"),
                      default=None)
    p_cv.add_argument("--split-mode", dest="split_mode",
                      choices=("known_rows", "new_rows"), default=None)
    p_cv.add_argument("--folds", type=int, default=None)
    p_cv.add_argument("--solver", choices=("factored", "exact"), default=None)
    p_cv.add_argument("--out-csv", required=True)
    p_cv.add_argument("--out-report", default=None, help="full report JSON")
    p_cv.set_defaults(func=_cmd_cv)

    p_rep = sub.add_parser("report", help="render a saved report as CSV")
    p_rep.add_argument("--report", required=True, help="report JSON from cv")
    p_rep.add_argument("--out-csv", default=None)
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
