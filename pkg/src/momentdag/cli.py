"""Command-line interface: simulate, verify, identify, discover, experiment.

Exit status is 0 for success/acceptance, 1 for model rejection or a discovery
disagreement, and 2 for input or usage errors. Every stochastic command
requires a seed and is bit-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .constraints import verify_graph
from .discovery import (
    DEFAULT_THRESHOLDS,
    peel_steps,
    roc_experiment,
    sink_bar_experiment,
)
from .graph import Dag, load_dag
from .identify import membership_test
from .moments import (
    EdgeWeights,
    forward_moments,
    load_moments,
    save_moments,
)
from .simulate import NoiseSpec, derive_rng, empirical_moments, random_parameters, sample_lingam


class UsageError(ValueError):
    """Bad command configuration; the message names the offending field."""


# -- argument plumbing ---------------------------------------------------------


def _int_list(text: str) -> list[int]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return [int(s) for s in items]


def _float_list(text: str) -> list[float]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return [float(s) for s in items]  # float("inf") handles "inf"


def _float_pair(text: str) -> tuple[float, float]:
    parts = _float_list(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momentdag",
        description=(
            "Moment-based realizability tests, parameter recovery, and sink "
            "discovery for linear non-Gaussian acyclic models."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of defaults; explicit flags win")
    common.add_argument("--out-dir", help="directory for output files")
    common.add_argument("--seed", type=int, help="base seed for stochastic commands")
    common.add_argument("--tol", type=float, help="relative singular-value tolerance")
    common.add_argument("--dag", help="graph file (edge-list text or JSON)")
    common.add_argument("--moments", help="moments JSON file")

    p = sub.add_parser("simulate", parents=[common], help="sample a model and estimate moments")
    p.add_argument("--n-samples", type=int, help="number of observations to draw")
    p.add_argument("--params", help="JSON file with edge coefficients")
    p.add_argument("--random-params", action="store_true", help="draw generic coefficients")
    p.add_argument("--noise", help="noise spec JSON file (default: centered gamma(5, 1))")
    p.add_argument("--coeff-range", type=_float_pair, help="magnitude range for --random-params")
    p.add_argument("--skew-floor", type=float, help="minimum |third moment| for --random-params")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="rank-test moments against a graph")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("identify", parents=[common], help="recover parameters and certify membership")
    p.add_argument("--diag-tol", type=float, help="relative off-diagonal tolerance (default 1e-8)")
    p.add_argument(
        "--all-columns",
        action="store_true",
        help="least-squares fit over all constraint columns (robustness variant)",
    )
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("discover", parents=[common], help="recover a causal order by sink peeling")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("experiment", parents=[common], help="run the sink-bars or ROC protocol")
    p.add_argument("--kind", choices=["sink-bars", "roc"], help="which experiment to run")
    p.add_argument("--runs", type=int, help="independent runs per cell (default 50)")
    p.add_argument("--sample-sizes", type=_int_list, help="sink-bars grid, e.g. 100,1000,10000")
    p.add_argument("--n-samples", type=int, help="samples per ROC run (default 5000)")
    p.add_argument("--thresholds", type=_float_list, help="ROC thresholds, e.g. 0,1e-4,inf")
    p.add_argument("--noise", help="noise spec JSON file (default: centered gamma(5, 1))")
    p.add_argument("--coeff-range", type=_float_pair, help="magnitude range for per-run coefficients")
    p.set_defaults(func=cmd_experiment)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("config", "func", "command"):
            raise UsageError(f"unknown config field {key!r}")
        current = getattr(args, attr)
        if current is None or current is False:
            setattr(args, attr, value)


def _require(args: argparse.Namespace, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise UsageError(f"missing required option --{name.replace('_', '-')}")
    return value


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    return value


def _echo_config(args: argparse.Namespace, out_dir: Path) -> None:
    effective = {
        k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func",)
    }
    with open(out_dir / "config_used.json", "w", encoding="utf-8") as fh:
        json.dump(effective, fh, indent=2)
        fh.write("\n")


def _out_dir(args: argparse.Namespace) -> Path:
    path = Path(_require(args, "out_dir"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_noise(args: argparse.Namespace, n: int) -> NoiseSpec:
    if getattr(args, "noise", None):
        with open(args.noise, "r", encoding="utf-8") as fh:
            spec = NoiseSpec.from_json(json.load(fh))
        if spec.n != n:
            raise UsageError(f"noise spec covers {spec.n} vertices, graph has {n}")
        return spec
    return NoiseSpec.gamma(n)


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# -- commands --------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    g = load_dag(_require(args, "dag"))
    n_samples = int(_require(args, "n_samples"))
    if n_samples < 1:
        raise UsageError(f"n-samples must be at least 1, got {n_samples}")
    seed = int(_require(args, "seed"))
    out = _out_dir(args)
    noise = _load_noise(args, g.n)

    if args.params and args.random_params:
        raise UsageError("give either --params or --random-params, not both")
    if args.params:
        with open(args.params, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        lam = EdgeWeights(g.n, {(int(j), int(i)): float(v) for j, i, v in doc["lambda"]})
        if not lam.support <= g.edges:
            raise UsageError("params file has coefficients off the graph's edges")
    elif args.random_params:
        coeff_range = args.coeff_range or (0.3, 1.0)
        skew_floor = args.skew_floor or 0.2
        lam, _ = random_parameters(g, derive_rng(seed, 0), coeff_range, skew_floor)
    else:
        raise UsageError("missing required option --params or --random-params")

    x = sample_lingam(g, lam, noise, n_samples, derive_rng(seed, 1))
    with open(out / "samples.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{v}" for v in g.vertices])
        writer.writerows(x.tolist())
    save_moments(forward_moments(g, lam, noise.moments()), out / "moments_true.json")
    save_moments(empirical_moments(x), out / "moments_empirical.json")
    _write_json(
        out / "params_used.json",
        {
            "n": g.n,
            "lambda": [[j, i, v] for j, i, v in lam.items()],
            "noise": noise.to_json(),
        },
    )
    _echo_config(args, out)
    print(f"wrote samples and moments for n={g.n}, N={n_samples} to {out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    g = load_dag(_require(args, "dag"))
    m = load_moments(_require(args, "moments"))
    report = verify_graph(g, m, args.tol)
    doc = report.to_json()
    print(json.dumps(doc, indent=2))
    if args.out_dir:
        out = _out_dir(args)
        _write_json(out / "verify_report.json", doc)
        _echo_config(args, out)
    if not report.accepted:
        failing = report.failing_vertices()
        print(f"rejected: rank check failed at vertices {failing}", file=sys.stderr)
        return 1
    return 0


def cmd_identify(args: argparse.Namespace) -> int:
    g = load_dag(_require(args, "dag"))
    m = load_moments(_require(args, "moments"))
    diag_tol = args.diag_tol if args.diag_tol is not None else 1e-8
    decision = membership_test(
        g, m, rank_tol=args.tol, diag_tol=diag_tol, use_all_columns=args.all_columns
    )
    doc = decision.to_json()
    print(json.dumps(doc, indent=2))
    if args.out_dir:
        out = _out_dir(args)
        _write_json(out / "identification.json", doc)
        _echo_config(args, out)
    if not decision.accepted:
        print(
            "rejected: residuals "
            f"(omega2: {doc['offdiag_residual_2']:.3e}, omega3: {doc['offdiag_residual_3']:.3e})",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_discover(args: argparse.Namespace) -> int:
    m = load_moments(_require(args, "moments"))
    steps = peel_steps(m)
    order = [s.picked for s in steps]
    order.extend(v for v in range(1, m.n + 1) if v not in order)
    doc = {
        "elimination_order": order,
        "steps": [
            {
                "remaining": list(s.remaining),
                "picked": s.picked,
                "scores": [sc.to_json() for sc in s.scores],
            }
            for s in steps
        ],
    }
    print(json.dumps({"elimination_order": order}, indent=2))
    if args.out_dir:
        out = _out_dir(args)
        _write_json(out / "discover.json", doc)
        _echo_config(args, out)
    if args.dag:
        g = load_dag(args.dag)
        if g.n != m.n:
            raise UsageError(f"graph has n={g.n}, moments have n={m.n}")
        position = {v: k for k, v in enumerate(order)}
        bad = [(j, i) for j, i in sorted(g.edges) if position[i] > position[j]]
        if bad:
            print(f"disagreement: edges eliminated out of order: {bad}", file=sys.stderr)
            return 1
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    from . import figures  # defer pulling in matplotlib

    kind = _require(args, "kind")
    g = load_dag(_require(args, "dag"))
    seed = int(_require(args, "seed"))
    out = _out_dir(args)
    noise = _load_noise(args, g.n)
    runs = args.runs if args.runs is not None else 50
    coeff_range = args.coeff_range or (0.3, 1.0)
    summary: dict = {
        "kind": kind,
        "n": g.n,
        "runs": runs,
        "seed": seed,
        "noise": noise.to_json(),
        "rng": "philox",
    }

    if kind == "sink-bars":
        sizes = args.sample_sizes if args.sample_sizes is not None else [100, 1000, 10000, 100000]
        if not sizes:
            raise UsageError("sample-sizes grid is empty")
        cells = sink_bar_experiment(g, noise, tuple(sizes), runs, seed, coeff_range)
        with open(out / "sink_bars.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_samples", "vertex", "count"])
            for cell in cells:
                for v in sorted(cell.counts):
                    writer.writerow([cell.n_samples, v, cell.counts[v]])
        figures.save_sink_bar_chart(cells, out / "sink_bars.png")
        summary["cells"] = [
            {"n_samples": c.n_samples, "seed_path": list(c.seed_path)} for c in cells
        ]
        print(f"wrote sink_bars.csv and sink_bars.png to {out}")
    else:
        n_samples = args.n_samples if args.n_samples is not None else 5000
        thresholds = (
            tuple(args.thresholds) if args.thresholds is not None else DEFAULT_THRESHOLDS
        )
        if not thresholds:
            raise UsageError("thresholds grid is empty")
        points = roc_experiment(g, noise, n_samples, runs, thresholds, seed, coeff_range)
        with open(out / "roc.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "tpr", "fpr"])
            for pt in points:
                writer.writerow([pt.threshold, pt.tpr, pt.fpr])
        figures.save_roc_curve(points, out / "roc.png")
        summary["n_samples"] = n_samples
        summary["thresholds"] = [_jsonable(t) for t in thresholds]
        summary["run_seed_paths"] = [[seed, run] for run in range(runs)]
        print(f"wrote roc.csv and roc.png to {out}")

    _write_json(out / "summary.json", _jsonable(summary))
    _echo_config(args, out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
