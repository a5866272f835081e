"""Command-line front end.

Subcommands cover the full pipeline: `cluster` runs the agglomerative engine
and writes the dendrogram, shift trace, and trace figure; `bench-shift`
times exact versus approximate shifts over a replayed merge sequence;
`classify` trains per-class subspaces and labels a test set; `impurity`
replays a dendrogram against a label hierarchy; `components` reports the
importance-shift and directional-change factor statistics; `param-study`
sweeps the thresholding parameters over a shift trace; `synth` generates
hierarchy embeddings and planted-spike traces.

Exit codes: 0 success, 2 usage error, 3 input error (missing or malformed
files), 4 numeric error (degenerate inputs to the math).
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bench import bench_merge_sequence, trace_error_stats
from .data import load_dendrogram, load_embeddings, save_dendrogram, save_embeddings
from .engine import SHIFT_MODES, SafariConfig, run_safari
from .errors import DataError, NumericError
from .evaluation import (
    CLASSIFY_MODES,
    DEFAULT_TOP_FRACTION,
    classify_all,
    impurity_curve,
    prf1_macro,
    prf1_per_class,
    train_class_sfs,
)
from .plotting import (
    save_bench_comparison,
    save_component_distributions,
    save_f1_bars,
    save_impurity_curves,
    save_param_study,
    save_shift_trace,
)
from .synthetic import HierarchySpec, generate_hierarchy, planted_spike_trace
from .thresholds import (
    DEFAULT_IMBALANCE_ALPHA,
    DEFAULT_MULTIPLIER,
    DEFAULT_WINDOW,
    segment_shifts,
    uniformity_metrics,
)

TRACE_COLUMNS = ["iteration", "exact", "approx", "mu", "tau", "is_sfs"]
PARAM_SDM_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
PARAM_MWS_GRID = (50, 100, 200)
EXIT_NOTE = "exit codes: 0 success, 2 usage error, 3 input error, 4 numeric error"


class UsageError(Exception):
    """Flag-level problem detected after argument parsing."""


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _ensure_parent(path: str) -> str:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def _write_csv(path: str, header: list[str], rows) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _read_csv_columns(path: str) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, expected a CSV header")
        rows = list(reader)
    return list(reader.fieldnames), rows


def _float_column(path: str, rows: list[dict[str, str]], column: str) -> np.ndarray:
    out = np.empty(len(rows))
    for k, row in enumerate(rows):
        text = row.get(column, "")
        try:
            out[k] = float(text)
        except (TypeError, ValueError):
            raise DataError(
                f"{path}: row {k + 2}: column {column!r} has non-numeric value {text!r}"
            ) from None
    return out


def _pick_value_column(path: str, header: list[str], rows: list[dict[str, str]]) -> str:
    for candidate in ("value", "exact", "approx"):
        if candidate in header and rows and all(row.get(candidate, "") != "" for row in rows):
            return candidate
    raise UsageError(
        f"{path}: no fully populated value column found (looked for 'value', 'exact', 'approx')"
    )


def _write_trace_csv(path: str, shift_trace) -> str:
    rows = [
        [r.iteration, _fmt(r.exact), _fmt(r.approx), _fmt(r.mu), _fmt(r.tau), int(r.is_sfs)]
        for r in shift_trace
    ]
    return _write_csv(path, TRACE_COLUMNS, rows)


def _engine_config(args) -> SafariConfig:
    return SafariConfig(
        window_size=args.window,
        multiplier=args.multiplier,
        shift_mode=getattr(args, "shift", "exact"),
        min_observations=args.min_observations,
        seed=args.seed,
    )


def cmd_cluster(args) -> int:
    es = load_embeddings(args.input, format=args.format)
    result = run_safari(es.rows, _engine_config(args))
    out = _ensure_dir(args.out)

    dendro_path = os.path.join(out, "dendrogram.json")
    save_dendrogram(result.dendrogram, dendro_path)
    trace_path = _write_trace_csv(os.path.join(out, "trace.csv"), result.shift_trace)

    trace = result.shift_trace
    iterations = np.array([r.iteration for r in trace])
    exact = None
    if any(r.exact is not None for r in trace):
        exact = np.array([r.exact for r in trace], dtype=np.float64)
    approx = None
    if any(r.approx is not None for r in trace):
        approx = np.array([r.approx for r in trace], dtype=np.float64)
    figure_path = save_shift_trace(
        os.path.join(out, "trace.png"),
        iterations,
        exact=exact,
        approx=approx,
        mu=np.array([r.mu for r in trace]),
        tau=np.array([r.tau for r in trace]),
        multiplier=args.multiplier,
        flagged=np.array([r.is_sfs for r in trace], dtype=bool),
    )

    flagged = sorted(result.dendrogram.sfs_registry)
    print(
        f"clustered {es.n} embeddings in {len(trace)} merges; "
        f"flagged {len(flagged)} semantic field subspaces"
    )
    if flagged:
        print("flagged iterations: " + ", ".join(str(i) for i in flagged))
    print(f"wrote {dendro_path}, {trace_path}, {figure_path}")
    return 0


def cmd_bench_shift(args) -> int:
    if (args.input is None) == (args.trace is None):
        raise UsageError("provide exactly one of --input (embeddings) or --trace (trace CSV)")
    out = _ensure_dir(args.out)
    csv_path = os.path.join(out, "bench.csv")
    figure_path = os.path.join(out, "bench.png")

    if args.trace is not None:
        header, rows = _read_csv_columns(args.trace)
        for needed in ("exact", "approx"):
            if needed not in header:
                raise UsageError(f"{args.trace}: trace lacks a {needed!r} column")
            missing = [k for k, row in enumerate(rows) if row.get(needed, "") == ""]
            if missing:
                raise UsageError(
                    f"{args.trace}: {needed!r} column is empty at row {missing[0] + 2}; "
                    "error statistics need a trace recorded with --shift both"
                )
        if not rows:
            raise UsageError(f"{args.trace}: trace has no data rows")
        exact = _float_column(args.trace, rows, "exact")
        approx = _float_column(args.trace, rows, "approx")
        stats = trace_error_stats(exact, approx)
        _write_csv(
            csv_path,
            ["metric", "value"],
            [
                ["n_merges", len(rows)],
                ["mean_abs_error", repr(stats["mean_abs_error"])],
                ["pearson_r", repr(stats["pearson_r"])],
            ],
        )
        save_bench_comparison(figure_path, exact, approx)
        print(
            f"compared {len(rows)} recorded merges: "
            f"MAE {stats['mean_abs_error']:.6f}, pearson {stats['pearson_r']:.4f}"
        )
        print(f"wrote {csv_path}, {figure_path}")
        return 0

    es = load_embeddings(args.input, format=args.format)
    report = bench_merge_sequence(es.rows, _engine_config(args), repeats=args.repeats)
    header = ["iteration", "cluster_size", "exact", "approx", "abs_err", "time_exact", "time_approx"]
    if args.repeats > 1:
        header += ["time_exact_spread", "time_approx_spread"]
    rows = []
    for r in report.rows:
        row = [
            r.iteration,
            r.cluster_size,
            repr(r.exact_value),
            repr(r.approx_value),
            repr(abs(r.exact_value - r.approx_value)),
            repr(r.time_exact),
            repr(r.time_approx),
        ]
        if args.repeats > 1:
            row += [repr(r.time_exact_spread), repr(r.time_approx_spread)]
        rows.append(row)
    _write_csv(csv_path, header, rows)
    save_bench_comparison(
        figure_path,
        report.exact_values(),
        report.approx_values(),
        [r.time_exact for r in report.rows],
        [r.time_approx for r in report.rows],
    )
    print(
        f"replayed {len(report.rows)} merges ({args.repeats} repeats): "
        f"median exact {report.median_time_exact * 1e3:.3f} ms, "
        f"median approx {report.median_time_approx * 1e3:.3f} ms, "
        f"median speedup {report.median_speedup:.2f}x"
    )
    print(f"MAE {report.mean_abs_error:.6f}, pearson {report.pearson_r:.4f}")
    print(f"wrote {csv_path}, {figure_path}")
    return 0


def cmd_classify(args) -> int:
    train = load_embeddings(args.train)
    test = load_embeddings(args.test)
    by_class = train_class_sfs(train, level=args.level)
    preds = classify_all(test.rows, by_class, mode=args.mode, fraction=args.fraction)
    train_vocab = train.labels.vocab[args.level]
    pred_names = [train_vocab[p] for p in preds]

    out = _ensure_dir(args.out)
    pred_path = os.path.join(out, "predictions.csv")
    written = [pred_path]

    have_truth = test.labels is not None and args.level < test.labels.level_count
    if have_truth:
        truth_names = test.labels.names(args.level)
        _write_csv(
            pred_path,
            ["id", "predicted", "truth"],
            zip(test.ids, pred_names, truth_names),
        )
        # align the two vocabularies by name before scoring
        shared: dict[str, int] = {}
        for name in truth_names + pred_names:
            shared.setdefault(name, len(shared))
        y_true = [shared[name] for name in truth_names]
        y_pred = [shared[name] for name in pred_names]
        macro = prf1_macro(y_true, y_pred)
        per_class = prf1_per_class(y_true, y_pred)
        by_name = sorted(
            (name, per_class[idx]) for name, idx in shared.items() if idx in per_class
        )
        metrics_path = _write_csv(
            os.path.join(out, "metrics.csv"),
            ["class", "precision", "recall", "f1"],
            [
                *[[name, repr(p), repr(r), repr(f)] for name, (p, r, f) in by_name],
                ["macro", repr(macro["precision"]), repr(macro["recall"]), repr(macro["f1"])],
            ],
        )
        figure_path = save_f1_bars(
            os.path.join(out, "f1.png"),
            {k: stats for k, (_, stats) in enumerate(by_name)},
            names=[name for name, _ in by_name],
        )
        written += [metrics_path, figure_path]
        print(
            f"classified {test.n} items into {len(by_class)} classes "
            f"({args.mode}): macro precision {macro['precision']:.4f}, "
            f"recall {macro['recall']:.4f}, F1 {macro['f1']:.4f}"
        )
    else:
        _write_csv(pred_path, ["id", "predicted"], zip(test.ids, pred_names))
        print(
            f"classified {test.n} items into {len(by_class)} classes "
            f"({args.mode}); no ground truth in test set, metrics skipped"
        )
    print("wrote " + ", ".join(written))
    return 0


def cmd_impurity(args) -> int:
    es = load_embeddings(args.input, format=args.format)
    if es.labels is None:
        raise DataError(f"{args.input}: embeddings carry no labels, impurity needs them")
    dendro = load_dendrogram(args.dendrogram)
    if dendro.n_leaves != es.n:
        raise DataError(
            f"{args.dendrogram}: dendrogram covers {dendro.n_leaves} leaves, "
            f"input has {es.n} embeddings"
        )
    if args.samples < 2:
        raise UsageError(f"--samples must be >= 2, got {args.samples}")
    samples = np.unique(np.linspace(0, dendro.n_leaves - 1, args.samples).round().astype(int))
    curve = impurity_curve(dendro, es.labels, samples)

    out = _ensure_dir(args.out)
    levels = list(range(curve.level_count))
    csv_path = _write_csv(
        os.path.join(out, "impurity.csv"),
        ["iteration"] + [f"lv{k}" for k in levels],
        [
            [int(curve.iterations[s])] + [repr(float(curve.values[k, s])) for k in levels]
            for s in range(curve.iterations.size)
        ],
    )
    figure_path = save_impurity_curves(
        os.path.join(out, "impurity.png"),
        curve.iterations,
        {k: curve.level(k) for k in levels},
    )
    print(
        f"measured impurity at {curve.iterations.size} iterations "
        f"across {curve.level_count} label levels"
    )
    print(f"wrote {csv_path}, {figure_path}")
    return 0


def cmd_components(args) -> int:
    es = load_embeddings(args.input, format=args.format)
    config = SafariConfig(
        window_size=args.window,
        multiplier=args.multiplier,
        shift_mode="exact",
        min_observations=args.min_observations,
        seed=args.seed,
    )
    result = run_safari(es.rows, config)
    dis = np.array([r.dis_sum for r in result.shift_trace])
    dc = np.array([r.dc_sum for r in result.shift_trace])

    linear_total = dis.sum() + dc.sum()
    log_dis = float(np.log1p(dis).sum())
    log_dc = float(np.log1p(dc).sum())
    if linear_total == 0.0 or log_dis + log_dc == 0.0:
        raise NumericError("all shift components are zero; shares are undefined")
    shares = {
        "dis": (dis.sum() / linear_total, log_dis / (log_dis + log_dc)),
        "dc": (dc.sum() / linear_total, log_dc / (log_dis + log_dc)),
    }

    out = _ensure_dir(args.out)
    rows = []
    for name, series in (("dis", dis), ("dc", dc)):
        std = float(series.std(ddof=1)) if series.size > 1 else 0.0
        rows.append(
            [
                name,
                repr(float(series.mean())),
                repr(float(np.median(series))),
                repr(std),
                repr(float(shares[name][0])),
                repr(float(shares[name][1])),
            ]
        )
    csv_path = _write_csv(
        os.path.join(out, "components.csv"),
        ["component", "mean", "median", "std", "linear_share", "log_share"],
        rows,
    )
    figure_path = save_component_distributions(os.path.join(out, "components.png"), dis, dc)
    print(
        f"importance-shift factors: linear share {shares['dis'][0] * 100:.1f}%, "
        f"log share {shares['dis'][1] * 100:.1f}%"
    )
    print(
        f"directional-change factors: linear share {shares['dc'][0] * 100:.1f}%, "
        f"log share {shares['dc'][1] * 100:.1f}%"
    )
    print(f"wrote {csv_path}, {figure_path}")
    return 0


def cmd_param_study(args) -> int:
    header, rows = _read_csv_columns(args.input)
    column = _pick_value_column(args.input, header, rows)
    values = _float_column(args.input, rows, column)

    mws_grid = (args.min_window,) if args.min_window is not None else PARAM_MWS_GRID
    table = []
    for sdm in PARAM_SDM_GRID:
        for mws in mws_grid:
            seg = segment_shifts(
                values, min_window_size=mws, imbalance_alpha=args.alpha, multiplier=sdm
            )
            detected = values[seg.detected_indices]
            entry = {"sdm": sdm, "mws": mws, "n_detected": int(detected.size)}
            if detected.size and detected.min() > 0.0:
                entry.update(uniformity_metrics(detected))
            else:
                entry.update({"cv": None, "max_min_ratio": None, "p90_p10_ratio": None})
            table.append(entry)

    out = _ensure_dir(args.out)
    csv_path = _write_csv(
        os.path.join(out, "param_study.csv"),
        ["sdm", "mws", "n_detected", "cv", "max_min_ratio", "p90_p10_ratio"],
        [
            [
                row["sdm"],
                row["mws"],
                row["n_detected"],
                _fmt(row["cv"]),
                _fmt(row["max_min_ratio"]),
                _fmt(row["p90_p10_ratio"]),
            ]
            for row in table
        ],
    )
    figure_path = save_param_study(os.path.join(out, "param_study.png"), table)
    print(f"swept {len(PARAM_SDM_GRID)} multipliers x {len(mws_grid)} window sizes "
          f"over {values.size} values from column {column!r}")
    print(f"{'sdm':>5} {'mws':>5} {'detected':>9} {'cv':>10} {'max/min':>10} {'p90/p10':>10}")
    for row in table:
        cv = "-" if row["cv"] is None else f"{row['cv']:.3f}"
        mm = "-" if row["max_min_ratio"] is None else f"{row['max_min_ratio']:.1f}"
        pp = "-" if row["p90_p10_ratio"] is None else f"{row['p90_p10_ratio']:.2f}"
        print(
            f"{row['sdm']:>5.1f} {row['mws']:>5d} {row['n_detected']:>9d} "
            f"{cv:>10} {mm:>10} {pp:>10}"
        )
    print(f"wrote {csv_path}, {figure_path}")
    return 0


def cmd_synth_hierarchy(args) -> int:
    spec = HierarchySpec(
        branching=tuple(args.branching),
        points_per_leaf=args.points_per_leaf,
        dim=args.dim,
        angular_spread=tuple(args.spread),
        seed=args.seed,
    )
    es = generate_hierarchy(spec)
    save_embeddings(es, _ensure_parent(args.out), format=args.format)
    print(
        f"wrote {es.n} embeddings (dim {es.d}, {spec.n_leaves} leaves, "
        f"{es.labels.level_count} label levels) to {args.out}"
    )
    return 0


def cmd_synth_trace(args) -> int:
    trace = planted_spike_trace(
        args.length, args.mean, args.std, args.positions, args.multiple, seed=args.seed
    )
    _write_csv(
        _ensure_parent(args.out),
        ["iteration", "value"],
        [[k, repr(float(v))] for k, v in enumerate(trace)],
    )
    print(f"wrote trace of length {trace.size} with {len(args.positions)} spikes to {args.out}")
    return 0


def _csv_ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _csv_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW,
                   help="sliding window length for the shift threshold (default 100)")
    p.add_argument("--multiplier", type=float, default=DEFAULT_MULTIPLIER,
                   help="threshold multiplier m in mu + m*tau (default 3.0)")
    p.add_argument("--min-observations", type=int, default=None, dest="min_observations",
                   help="observations required before flagging (default max(2, window/4))")
    p.add_argument("--seed", type=int, default=0, help="run seed echoed into artifacts")


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="embeddings file (.sfse, .csv, or .jsonl)")
    p.add_argument("--format", choices=("sfse", "csv", "jsonl"), default=None,
                   help="override the format inferred from the extension")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safari",
        description=__doc__.split("\n\n")[0],
        epilog=EXIT_NOTE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, func, help_text):
        p = sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            epilog=EXIT_NOTE,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.set_defaults(func=func)
        return p

    p = command("cluster", cmd_cluster,
                "agglomeratively cluster embeddings, writing the dendrogram, "
                "shift trace CSV, and trace figure")
    _add_input_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--shift", choices=SHIFT_MODES, default="exact",
                   help="which shift route(s) to compute per merge (default exact)")
    _add_engine_flags(p)

    p = command("bench-shift", cmd_bench_shift,
                "time exact vs approximate shifts over a replayed merge sequence, "
                "or score an existing trace with both routes recorded")
    p.add_argument("--input", help="embeddings file to cluster and replay")
    p.add_argument("--format", choices=("sfse", "csv", "jsonl"), default=None,
                   help="override the format inferred from the extension")
    p.add_argument("--trace", help="existing trace CSV with exact and approx columns")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--repeats", type=int, default=10,
                   help="timing repetitions per merge, median reported (default 10)")
    _add_engine_flags(p)

    p = command("classify", cmd_classify,
                "train one subspace per labeled class and label a test set")
    p.add_argument("--train", required=True, help="labeled embeddings file")
    p.add_argument("--test", required=True, help="embeddings file to classify")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=CLASSIFY_MODES, default="weighted_all",
                   help="distance weighting (default weighted_all)")
    p.add_argument("--fraction", type=float, default=DEFAULT_TOP_FRACTION,
                   help="basis fraction kept in top_fraction mode (default 0.05)")
    p.add_argument("--levels", type=int, default=0, dest="level", metavar="LEVEL",
                   help="label level to classify at, 0 = most specific (default 0)")

    p = command("impurity", cmd_impurity,
                "replay a dendrogram against labels and report impurity per level")
    _add_input_flags(p)
    p.add_argument("--dendrogram", required=True, help="dendrogram JSON from cluster")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samples", type=int, default=20,
                   help="evenly spaced iterations to sample (default 20)")

    p = command("components", cmd_components,
                "report statistics of the two exact-shift factor families")
    _add_input_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    _add_engine_flags(p)

    p = command("param-study", cmd_param_study,
                "sweep threshold multiplier and minimum window size over a trace")
    p.add_argument("--input", required=True, help="trace CSV (value, exact, or approx column)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--min-window", type=int, default=None, dest="min_window",
                   help="restrict the window grid to one value (default 50,100,200)")
    p.add_argument("--alpha", type=float, default=DEFAULT_IMBALANCE_ALPHA,
                   help="segment split sensitivity (default 1.0)")

    p = command("synth", lambda args: 0, "generate synthetic data")
    synth_sub = p.add_subparsers(dest="synth_command", required=True, metavar="KIND")

    sp = synth_sub.add_parser(
        "hierarchy",
        help="labeled unit-sphere embeddings with tree structure",
        epilog=EXIT_NOTE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sp.set_defaults(func=cmd_synth_hierarchy)
    sp.add_argument("--branching", type=_csv_ints, required=True, metavar="B0,B1,...",
                    help="children per level, e.g. 3,3,3,3 (first value = root count)")
    sp.add_argument("--points-per-leaf", type=int, default=5, dest="points_per_leaf")
    sp.add_argument("--dim", type=int, required=True, help="embedding dimension")
    sp.add_argument("--spread", type=_csv_floats, default=[0.1], metavar="S0,S1,...",
                    help="angular spreads in radians, transitions first then point "
                         "jitter; one value is broadcast (default 0.1)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output file (.sfse, .csv, or .jsonl)")
    sp.add_argument("--format", choices=("sfse", "csv", "jsonl"), default=None)

    sp = synth_sub.add_parser(
        "trace",
        help="Gaussian trace with planted spikes",
        epilog=EXIT_NOTE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sp.set_defaults(func=cmd_synth_trace)
    sp.add_argument("--length", type=int, required=True)
    sp.add_argument("--mean", type=float, default=1.0, help="baseline mean (default 1.0)")
    sp.add_argument("--std", type=float, default=0.05, help="baseline std (default 0.05)")
    sp.add_argument("--positions", type=_csv_ints, default=[], metavar="P0,P1,...",
                    help="spike indices (default none)")
    sp.add_argument("--multiple", type=float, default=5.0,
                    help="spike height in baseline stds (default 5.0)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output CSV file")

    return parser


def _thread_limit_from_env() -> int | None:
    raw = os.environ.get("SAFARI_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"SAFARI_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise UsageError(f"SAFARI_THREADS must be >= 0, got {value}")
    return value if value > 0 else None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        limit = _thread_limit_from_env()
        if limit is not None:
            with threadpool_limits(limits=limit):
                return args.func(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
