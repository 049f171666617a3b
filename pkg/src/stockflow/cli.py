"""Command-line surface: check, run, sweep, compare, serve.

Exit codes: 0 success, 1 usage error, 2 model/parse error, 3 runtime abort
(non-finite value during simulation).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import corpus
from .analyzer import AnalysisError, ClassifiedModel, causes_tree, classify, uses_tree
from .ast import StockflowError, normalize_name
from .csvio import write_csv
from .engine import (
    CompiledModel,
    SimulationError,
    compile_model,
    run,
)
from .lang import ModelParseError
from .scenario import Scenario, SweepSpec, compare, sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want exit 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="stockflow", description="Stock-and-flow simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and classify a model")
    p_check.add_argument("model", help=".sd file path or bundled model id")
    p_check.add_argument("--tree", choices=("causes", "uses"))
    p_check.add_argument("--var", help="root variable for --tree")
    p_check.add_argument("--depth", type=int, default=3)

    p_run = sub.add_parser("run", help="simulate a model and export CSV")
    p_run.add_argument("model")
    p_run.add_argument("--set", action="append", default=[], metavar="NAME=V",
                       help="override a constant (repeatable)")
    p_run.add_argument("--set-init", action="append", default=[], metavar="STOCK=V",
                       help="override a stock initial value (repeatable)")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--vars", help="comma-separated list of columns to keep")
    p_run.add_argument("-o", "--output", help="CSV output path (default: stdout)")

    p_sweep = sub.add_parser("sweep", help="run once per value of one parameter")
    p_sweep.add_argument("model")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--set", action="append", default=[], metavar="NAME=V")
    p_sweep.add_argument("--set-init", action="append", default=[], metavar="STOCK=V")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--vars", help="variables for the summary table")
    p_sweep.add_argument("-o", "--output", help="CSV path stem for per-value files")

    p_cmp = sub.add_parser("compare", help="compare two model/override settings")
    p_cmp.add_argument("model_a")
    p_cmp.add_argument("model_b")
    p_cmp.add_argument("--set-a", action="append", default=[], metavar="NAME=V")
    p_cmp.add_argument("--set-b", action="append", default=[], metavar="NAME=V")
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--vars", required=True)
    p_cmp.add_argument("--window", help="t0:t1 (default: full horizon)")
    p_cmp.add_argument("-o", "--output", help="write the metric table as CSV")

    p_serve = sub.add_parser("serve", help="start the HTTP API")
    p_serve.add_argument("--port", type=int,
                         default=int(os.environ.get("STOCKFLOW_PORT", "8080")))
    p_serve.add_argument("--host", default="127.0.0.1")
    return parser


def _load_classified(ref: str) -> ClassifiedModel:
    if ref in corpus.BUNDLED_IDS:
        return classify(corpus.load_bundled(ref))
    path = Path(ref)
    if not path.exists():
        raise corpus.UnknownModelError(
            f"'{ref}' is neither a bundled model id nor an existing file"
        )
    from .lang import parse_model

    return classify(parse_model(path.read_text(encoding="utf-8"), model_id=path.stem))


def _parse_assignments(pairs: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name.strip():
            raise _UsageError(f"expected NAME=VALUE, got {pair!r}")
        try:
            out[normalize_name(name).key] = float(value)
        except ValueError:
            raise _UsageError(f"value in {pair!r} is not a number") from None
    return out


def _split_overrides(
    m: ClassifiedModel, sets: list[str], set_inits: list[str]
) -> dict[str, float]:
    from .analyzer import VarKind

    overrides = {}
    for key, value in _parse_assignments(sets).items():
        kind = m.kinds.get(key)
        if kind is None:
            raise StockflowError(f"--set targets unknown variable '{key}'")
        if kind is VarKind.STOCK:
            raise StockflowError(
                f"'{key}' is a stock; use --set-init to override its initial value"
            )
        if kind is VarKind.AUXILIARY:
            raise StockflowError(f"'{key}' is an auxiliary and cannot be overridden")
        overrides[key] = value
    for key, value in _parse_assignments(set_inits).items():
        if m.kinds.get(key) is not VarKind.STOCK:
            raise StockflowError(f"--set-init targets '{key}', which is not a stock")
        overrides[key] = value
    return overrides


def _selected_vars(arg: str | None) -> list[str] | None:
    if arg is None:
        return None
    return [v.strip() for v in arg.split(",") if v.strip()]


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_check(args) -> int:
    m = _load_classified(args.model)
    counts: dict[str, int] = {}
    for kind in m.kinds.values():
        counts[kind.value] = counts.get(kind.value, 0) + 1
    summary = ", ".join(f"{n} {k}" for k, n in sorted(counts.items()))
    print(f"{args.model}: {len(m.ast.equations)} equations ({summary})")
    for w in m.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.tree:
        if not args.var:
            raise _UsageError("--tree requires --var")
        fn = causes_tree if args.tree == "causes" else uses_tree
        tree = fn(m, normalize_name(args.var), args.depth)
        sys.stdout.write(tree.render())
    return EXIT_OK


def _run_once(
    compiled: CompiledModel, overrides: dict[str, float], seed: int, label: str = ""
):
    spec = compiled.spec_with(overrides, seed=seed)
    return run(compiled, overrides, spec, label=label)


def _cmd_run(args) -> int:
    m = _load_classified(args.model)
    compiled = compile_model(m)
    overrides = _split_overrides(m, args.set, args.set_init)
    result = _run_once(compiled, overrides, args.seed)
    _write_output(write_csv(result, _selected_vars(args.vars)), args.output)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _sweep_path(stem: str, value: float) -> Path:
    p = Path(stem)
    label = f"{value:g}".replace("/", "_")
    return p.with_name(f"{p.stem}_{label}{p.suffix or '.csv'}")


def _cmd_sweep(args) -> int:
    m = _load_classified(args.model)
    compiled = compile_model(m)
    overrides = _split_overrides(m, args.set, args.set_init)
    try:
        values = tuple(float(v) for v in args.values.split(",") if v.strip())
    except ValueError:
        raise _UsageError("--values must be comma-separated numbers") from None
    if not values:
        raise _UsageError("--values is empty")
    param_key = normalize_name(args.param).key
    spec = SweepSpec(
        base=Scenario(
            label=args.model, model_id=args.model, overrides=overrides, seed=args.seed
        ),
        param=param_key,
        values=values,
    )
    results = sweep(spec, compiled)
    selected = _selected_vars(args.vars) or [
        eq.name.canonical
        for eq in m.ast.equations
        if m.kinds[eq.name.key].value == "stock"
    ]
    header = f"{'value':>12}  " + "  ".join(f"{v:>24}" for v in selected)
    print(header)
    for value, result in results:
        cells = []
        for v in selected:
            series = result.series(v)
            cells.append(f"mean={sum(series)/len(series):<10.6g} final={series[-1]:<.6g}")
        print(f"{value:>12g}  " + "  ".join(f"{c:>24}" for c in cells))
        if args.output:
            path = _sweep_path(args.output, value)
            path.write_text(write_csv(result, _selected_vars(args.vars)), encoding="utf-8")
            print(f"wrote {path}")
    return EXIT_OK


def _parse_window(arg: str | None) -> tuple[float, float] | None:
    if arg is None:
        return None
    lo, sep, hi = arg.partition(":")
    if not sep:
        raise _UsageError("--window must be t0:t1")
    try:
        return float(lo), float(hi)
    except ValueError:
        raise _UsageError("--window bounds must be numbers") from None


def _cmd_compare(args) -> int:
    vars_list = _selected_vars(args.vars)
    if not vars_list:
        raise _UsageError("--vars must name at least one variable")
    window = _parse_window(args.window)

    runs = []
    for ref, sets, suffix in (
        (args.model_a, args.set_a, "a"),
        (args.model_b, args.set_b, "b"),
    ):
        m = _load_classified(ref)
        compiled = compile_model(m)
        overrides = _split_overrides(m, sets, [])
        label = ref if args.model_a != args.model_b else f"{ref}:{suffix}"
        scenario = Scenario(label=label, model_id=ref, overrides=overrides, seed=args.seed)
        runs.append((scenario, _run_once(compiled, overrides, args.seed, label=label)))

    report = compare(runs, vars_list, window)
    w0, w1 = report.window
    print(f"window [{w0:g}, {w1:g}]")
    print(f"{'variable':<34} {'run':<22} {'mean':>14} {'min':>14} {'max':>14} {'final':>14} {'peak_time':>10}")
    for row in report.metrics:
        print(
            f"{row.variable:<34} {row.label:<22} {row.mean:>14.6g} {row.min:>14.6g} "
            f"{row.max:>14.6g} {row.final:>14.6g} {row.peak_time:>10g}"
        )
    if args.output:
        lines = ["variable,run,mean,min,max,final,peak_time"]
        for row in report.metrics:
            lines.append(
                f"{row.variable},{row.label},{row.mean!r},{row.min!r},"
                f"{row.max!r},{row.final!r},{row.peak_time!r}"
            )
        Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "serve":
            return _cmd_serve(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelParseError as exc:
        for err in exc.errors:
            print(str(err), file=sys.stderr)
        return EXIT_MODEL
    except AnalysisError as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        return EXIT_MODEL
    except SimulationError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except StockflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
