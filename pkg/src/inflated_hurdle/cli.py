"""Command-line workflow: simulate, fit, compare, predict, margins,
rootogram, detect-spikes.

Every run writes a ``manifest.json`` beside its outputs recording the
subcommand, resolved options, input digests, versions, and the seed, so a
run can be reproduced from the manifest alone. Output files are written
via a temp file and rename, never partially.

Exit codes: 0 success; 1 usage or malformed declarations; 2 data errors;
3 the model was fitted but did not converge (outputs are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .estimation import FitOptions, FitResult, fit_model
from .inference import predict, predictive_margins
from .model_spec import (
    COMPONENTS,
    ColumnSchema,
    DataError,
    SpecError,
    load_csv,
    load_model_config,
)
from .selection import compare, rootogram, rootogram_svg, spike_candidate_scores
from .simulation import load_simulation_design, simulate

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        raise _UsageError(message)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace, inputs) -> None:
    manifest = {
        "command": command,
        "options": {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items())
            if k != "func"
        },
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if p and Path(p).exists()},
        "package_version": __version__,
        "python_version": sys.version.split()[0],
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    _write_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_options(args) -> FitOptions:
    opts = FitOptions()
    if getattr(args, "max_iters", None) is not None:
        opts.max_iter = args.max_iters
    if getattr(args, "tol_grad", None) is not None:
        opts.tol_grad = args.tol_grad
    if getattr(args, "tol_loglik", None) is not None:
        opts.tol_loglik = args.tol_loglik
    if getattr(args, "hessian_step", None) is not None:
        opts.hessian_step = args.hessian_step
    return opts


def _add_fit_flags(parser) -> None:
    parser.add_argument("--max-iters", type=int, help="optimizer iteration cap (default 500)")
    parser.add_argument("--tol-grad", type=float, help="gradient max-norm tolerance (default 1e-6)")
    parser.add_argument(
        "--tol-loglik", type=float, help="relative log-likelihood change tolerance (default 1e-9)"
    )
    parser.add_argument(
        "--hessian-step", type=float, help="central-difference step for the observed information"
    )


def _load_data_for_spec(spec, data_path, *, need_response: bool):
    schema = spec.csv_schema()
    with open(data_path, newline="", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r").split(",")
    response = spec.response
    if spec.response not in header:
        if need_response:
            raise DataError(f"{data_path}: response column {spec.response!r} missing")
        schema.pop(spec.response, None)
        response = None
    return load_csv(data_path, schema, response=response)


def _load_fit(path) -> FitResult:
    with open(path, encoding="utf-8") as fh:
        return FitResult.from_json(fh.read())


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    design = load_simulation_design(args.design)
    if args.seed is not None:
        design.seed = args.seed
    out = _out_dir(args)
    data = simulate(design)
    data.to_csv(out / "data.csv.tmp")
    os.replace(out / "data.csv.tmp", out / "data.csv")
    _write_atomic(out / "truth.json", design.to_json())
    _write_manifest(out, "simulate", args, [args.design])
    print(f"simulate: wrote {data.n} rows to {out / 'data.csv'} (seed {design.seed})")
    return EXIT_OK


def _convergence_exit(fit_converged: bool, out: Path) -> int:
    if fit_converged:
        return EXIT_OK
    print(f"warning: fit did not converge; outputs in {out} reflect the last iterate", file=sys.stderr)
    return EXIT_NOT_CONVERGED


def _cmd_fit(args) -> int:
    spec = load_model_config(args.config)
    data = _load_data_for_spec(spec, args.data, need_response=True)
    fit = fit_model(spec, data, _fit_options(args))
    out = _out_dir(args)
    _write_atomic(out / "fit.json", fit.to_json())
    report_lines = [f"dropped_rows={data.load_report.dropped_rows if data.load_report else 0}"]
    report_lines += [f"rank_ok_{c}=true" for c in COMPONENTS]
    report_lines += fit.convergence.warnings
    _write_atomic(out / "load_report.txt", "\n".join(report_lines) + "\n")
    _write_manifest(out, "fit", args, [args.config, args.data])
    print(
        f"fit: loglik={fit.loglik_total:.3f} aic={fit.aic:.1f} bic={fit.bic:.1f} "
        f"params={fit.n_params} converged={fit.converged}"
    )
    return _convergence_exit(fit.converged, out)


def _parse_inflated_set(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text or text in ("none", "-"):
        return ()
    try:
        return tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise _UsageError(f"cannot parse inflated set {text!r}") from None


def _cmd_compare(args) -> int:
    base = load_model_config(args.config)
    candidate_sets = [_parse_inflated_set(s) for s in (args.inflated_set or [])]
    if not candidate_sets:
        candidate_sets = [base.inflated.values]
    specs = [base.with_inflated(values) for values in candidate_sets]
    labels = [
        "inflated=" + (",".join(map(str, values)) if values else "none")
        for values in candidate_sets
    ]
    data = _load_data_for_spec(base, args.data, need_response=True)
    table = compare(specs, data, _fit_options(args), labels=labels)
    out = _out_dir(args)
    _write_atomic(out / "comparison.csv", table.to_csv_text())
    _write_manifest(out, "compare", args, [args.config, args.data])
    best = table.rows[0]
    print(f"compare: best by AIC is {best.label} (aic={best.aic:.1f})")
    return _convergence_exit(all(r.converged for r in table.rows), out)


def _cmd_predict(args) -> int:
    fit = _load_fit(args.fit)
    data = _load_data_for_spec(fit.spec, args.data, need_response=False)
    table = predict(fit, data, compute_se=not args.no_se)
    out = _out_dir(args)
    _write_atomic(out / "predictions.csv", table.to_csv_text())
    _write_manifest(out, "predict", args, [args.fit, args.data])
    print(f"predict: wrote {table.n} rows to {out / 'predictions.csv'}")
    return EXIT_OK


def _cmd_margins(args) -> int:
    fit = _load_fit(args.fit)
    data = _load_data_for_spec(fit.spec, args.data, need_response=False)
    extra = [c for c in args.over if c not in data]
    if extra:
        # margin columns need not be model covariates; load them too
        schema = {c: ColumnSchema("float") for c in extra}
        loaded = load_csv(args.data, {**fit.spec.csv_schema(), **schema},
                          response=data.response)
        data = loaded
    table = predictive_margins(
        fit, data, args.over, counterfactual=not args.subgroup, compute_se=not args.no_se
    )
    out = _out_dir(args)
    _write_atomic(out / "margins.csv", table.to_csv_text())
    _write_manifest(out, "margins", args, [args.fit, args.data])
    print(f"margins: {len(table.cells)} cells over {', '.join(args.over)}")
    return EXIT_OK


def _cmd_rootogram(args) -> int:
    fit = _load_fit(args.fit)
    data = _load_data_for_spec(fit.spec, args.data, need_response=True)
    table = rootogram(fit, data, max_count=args.max_count)
    svg = rootogram_svg(table, display_max=args.max_count)
    out = _out_dir(args)
    _write_atomic(out / "rootogram.csv", table.to_csv_text())
    _write_atomic(out / "rootogram.svg", svg)
    _write_manifest(out, "rootogram", args, [args.fit, args.data])
    worst = int(np.argmax(np.abs(table.hanging)))
    print(
        f"rootogram: counts 0..{int(table.counts[-1])}, "
        f"largest deviation {table.hanging[worst]:+.2f} at count {worst}"
    )
    return EXIT_OK


def _cmd_detect_spikes(args) -> int:
    data = load_csv(args.data, {args.response: ColumnSchema("int")}, response=args.response)
    scores = spike_candidate_scores(data)
    flagged = [
        r["value"]
        for r in scores
        if r["score"] > args.sensitivity and r["count"] >= args.min_count
    ]
    out = _out_dir(args)
    lines = ["value,count,smoothed,score,flagged"]
    for r in scores:
        lines.append(
            f"{r['value']},{r['count']},{r['smoothed']!r},{r['score']!r},"
            f"{r['value'] in flagged}"
        )
    _write_atomic(out / "spikes.csv", "\n".join(lines) + "\n")
    _write_manifest(out, "detect-spikes", args, [args.data])
    print(
        "detect-spikes: "
        + (", ".join(str(v) for v in flagged) if flagged else "no candidates")
        + f" (sensitivity {args.sensitivity})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="inflated-hurdle",
        description="Hurdle count regression with multiple inflated values.",
    )
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("simulate", help="generate a dataset from a simulation design")
    p.add_argument("--design", required=True, help="TOML simulation design")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the design seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit a model config to a CSV dataset")
    p.add_argument("--config", required=True, help="TOML model config")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output directory")
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("compare", help="compare candidate inflated-value sets by AIC/BIC")
    p.add_argument("--config", required=True, help="TOML model config (base spec)")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--inflated-set",
        action="append",
        metavar="VALUES",
        help='candidate set, e.g. "2,7,14"; empty or "none" for no inflation; repeatable',
    )
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("predict", help="per-row predictions from a saved fit")
    p.add_argument("--fit", required=True, help="fit.json from a previous fit run")
    p.add_argument("--data", required=True, help="input CSV (response optional)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-se", action="store_true", help="skip delta-method standard errors")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("margins", help="predictive margins over covariate grids")
    p.add_argument("--fit", required=True, help="fit.json from a previous fit run")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--over", action="append", required=True, help="grid column; repeatable")
    p.add_argument(
        "--subgroup",
        action="store_true",
        help="average only rows observed at each grid value instead of fixing all rows",
    )
    p.add_argument("--no-se", action="store_true", help="skip delta-method standard errors")
    p.set_defaults(func=_cmd_margins)

    p = sub.add_parser("rootogram", help="hanging rootogram table and SVG")
    p.add_argument("--fit", required=True, help="fit.json from a previous fit run")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-count", type=int, help="upper count bound (default: max observed)")
    p.set_defaults(func=_cmd_rootogram)

    p = sub.add_parser("detect-spikes", help="rank candidate inflated values")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--response", required=True, help="count column name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sensitivity", type=float, default=4.0, help="score threshold (default 4.0)")
    p.add_argument(
        "--min-count", type=int, default=10, help="minimum occurrences for a candidate"
    )
    p.set_defaults(func=_cmd_detect_spikes)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            print("inflated-hurdle: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except _UsageError as exc:
        print(f"inflated-hurdle: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(f"inflated-hurdle: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"inflated-hurdle: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
