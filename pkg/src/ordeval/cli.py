"""``ordeval`` command line: evaluate, audit, synth, metaeval."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .baselines import get_metric, registry_fingerprint, resolve_metrics
from .cem import TIE_CONVENTION
from .core import MetricReport, OrdinalScale, fingerprint, load_dataset
from .errors import InputError, OrdevalError
from .meta import DEFAULT_METRIC_PARAMS, DEFAULT_REFERENCE, MetaConfig, metaeval
from .properties import TOLERANCE, audit_all, diagnose_empty_classes
from .synth import DEFAULT_SEED, SynthConfig, generate_suite

log = logging.getLogger("ordeval")

LENIENT = ("cem_ord", "cem_flat")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    """Write the finished report; nothing reaches stdout before this point."""
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _scale(args, required: bool = True) -> OrdinalScale | None:
    if args.classes and args.scale_file:
        raise InputError("give either --classes or --scale-file, not both")
    if args.classes:
        return OrdinalScale.from_flag(args.classes)
    if args.scale_file:
        return OrdinalScale.from_file(args.scale_file)
    if required:
        raise InputError("a class scale is required: --classes a,b,c or --scale-file path")
    return None


def _float_range(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return tuple(round(start + k * step, 10) for k in range(count))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InputError(f"cannot parse range {text!r}; expected start:stop:step or a comma list") from None


def _pair(text: str) -> tuple[float, float]:
    try:
        low, high = (float(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"cannot parse {text!r}; expected low:high") from None
    return low, high


# --- evaluate --------------------------------------------------------------


def cmd_evaluate(args) -> int:
    scale = _scale(args)
    systems = {}
    for spec in args.system:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise InputError(f"--system expects name=path, got {spec!r}")
        if name in systems:
            raise InputError(f"system {name!r} given twice")
        systems[name] = path
    metrics = resolve_metrics(args.metrics)
    params = {m: {"allow_empty": True} for m in LENIENT} if args.allow_empty_classes else {}
    dataset = load_dataset(args.gold, systems, scale)

    described = []
    for m in metrics:
        entry = get_metric(m).describe()
        entry["params"].update(params.get(m, {}))
        described.append(entry)
    config = {
        "scale": list(scale.classes),
        "metrics": described,
        "tie_convention": TIE_CONVENTION,
        "registry": registry_fingerprint(),
    }
    config_id = fingerprint(config)
    notes = {"tie_convention": TIE_CONVENTION, "higher_is_better": "all scores; error metrics are negated"}
    if "cosine" in metrics:
        notes["cosine"] = "class values are 1-based positions"

    reports = []
    for name in systems:
        scores = {}
        for m in metrics:
            scores[m] = get_metric(m)(
                dataset.system_indices(name), dataset.gold_indices, len(scale), **params.get(m, {})
            )
        reports.append(MetricReport(dataset.name, name, scores, config_id, notes))

    if not args.quiet:
        width = max(len(m) for m in metrics) if metrics else 6
        print(f"{'metric':<{width}}  " + "  ".join(f"{s:>10}" for s in systems), file=sys.stderr)
        for m in metrics:
            row = "  ".join(f"{r.scores[m]:>10.4f}" for r in reports)
            print(f"{m:<{width}}  {row}", file=sys.stderr)
    _emit(_dump([r.to_dict() for r in reports]), args.out)
    return 0


# --- audit -----------------------------------------------------------------


def cmd_audit(args) -> int:
    metrics = resolve_metrics(args.metrics)
    if args.empty_classes:
        verdicts = diagnose_empty_classes(metrics, args.trials, args.seed, args.jobs)
        report = {
            "mode": "monotonicity with empty gold classes allowed",
            "trials": args.trials,
            "seed": args.seed,
            "tolerance": TOLERANCE,
            "records": [v.to_dict() for v in verdicts],
        }
        if not args.quiet:
            for v in verdicts:
                print(f"{v.metric:<26}{v.verdict}", file=sys.stderr)
        _emit(_dump(report), args.out)
        return 0
    table = audit_all(metrics, args.trials, args.seed, args.jobs)
    report = table.to_dict()
    mismatches = table.pattern_mismatches()
    report["pattern_mismatches"] = {
        m: {"found": list(found), "expected": list(exp)} for m, (found, exp) in mismatches.items()
    }
    if not args.quiet:
        print(table.render(), file=sys.stderr)
    _emit(_dump(report), args.out)
    if args.expect_table1 and mismatches:
        print(f"ordeval: {len(mismatches)} metric(s) differ from the reference pattern: "
              f"{', '.join(mismatches)}", file=sys.stderr)
        return 1
    return 0


# --- synth -----------------------------------------------------------------


def cmd_synth(args) -> int:
    try:
        config = SynthConfig(
            test_cases=args.test_cases,
            docs_per_case=args.docs,
            num_classes=args.classes,
            gold_mean=args.mean,
            sigma_range=_pair(args.sigma),
            error_ratios=_float_range(args.ratios),
            seed=args.seed,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = generate_suite(config, args.out)
    summary = {
        "out": str(out),
        "test_cases": config.test_cases,
        "systems": len(config.models) * len(config.error_ratios),
        "seed": config.seed,
    }
    _emit(_dump(summary), None)
    return 0


# --- metaeval --------------------------------------------------------------


def cmd_metaeval(args) -> int:
    scale = _scale(args, required=False)
    params = dict(DEFAULT_METRIC_PARAMS) if not args.strict_cem else {}
    config = MetaConfig(
        reference_metrics=tuple(resolve_metrics(args.reference)),
        evaluated_metrics=tuple(resolve_metrics(args.metrics)),
        metric_params=params,
    )
    report = metaeval(args.input, config, scale=scale, jobs=args.jobs)
    if not args.quiet:
        print(report.render(), file=sys.stderr)
    for w in report.warnings:
        log.info(w)
    _emit(_dump(report.to_dict()), args.out)
    return 0


# --- wiring ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordeval", description="Ordinal classification evaluation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score system outputs against a gold standard")
    ev.add_argument("--gold", required=True)
    ev.add_argument("--system", action="append", required=True, metavar="NAME=PATH")
    ev.add_argument("--classes", help="comma-separated labels, lowest first")
    ev.add_argument("--scale-file", help="one label per line, lowest first")
    ev.add_argument("--metrics", default="cem_ord")
    ev.add_argument("--allow-empty-classes", action="store_true",
                    help="score ordinal CEM even when some gold class is empty")
    ev.add_argument("--out")
    ev.add_argument("--quiet", action="store_true")
    ev.set_defaults(func=cmd_evaluate)

    au = sub.add_parser("audit", help="randomised property audit of metrics")
    au.add_argument("--metrics", default="all")
    au.add_argument("--trials", type=int, default=10000)
    au.add_argument("--seed", type=int, default=DEFAULT_SEED)
    au.add_argument("--jobs", type=int, default=1)
    au.add_argument("--expect-table1", action="store_true",
                    help="exit 1 unless every verdict pattern matches the reference table")
    au.add_argument("--empty-classes", action="store_true",
                    help="diagnostic: monotonicity on gold standards with empty classes")
    au.add_argument("--out")
    au.add_argument("--quiet", action="store_true")
    au.set_defaults(func=cmd_audit)

    sy = sub.add_parser("synth", help="write a synthetic evaluation suite")
    sy.add_argument("--out", required=True)
    sy.add_argument("--test-cases", type=int, default=100)
    sy.add_argument("--docs", type=int, default=200)
    sy.add_argument("--classes", type=int, default=11)
    sy.add_argument("--mean", type=float, default=4.0)
    sy.add_argument("--sigma", default="1:3")
    sy.add_argument("--ratios", default="0.1:1.0:0.1")
    sy.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sy.set_defaults(func=cmd_synth)

    me = sub.add_parser("metaeval", help="coverage and robustness of metrics over a suite")
    me.add_argument("--in", dest="input", required=True)
    me.add_argument("--reference", default=",".join(DEFAULT_REFERENCE))
    me.add_argument("--metrics", default="all")
    me.add_argument("--classes")
    me.add_argument("--scale-file")
    me.add_argument("--strict-cem", action="store_true",
                    help="refuse ordinal CEM on cases with empty gold classes (cells become undefined)")
    me.add_argument("--jobs", type=int, default=1)
    me.add_argument("--out")
    me.add_argument("--quiet", action="store_true")
    me.set_defaults(func=cmd_metaeval)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("ORDEVAL_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage errors are input errors
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except OrdevalError as exc:
        print(f"ordeval: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ordeval: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
