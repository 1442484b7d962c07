"""Command line entry point.

    nceval eval <manifest.json> [--out report.json] [--csv report.csv]
                [--skip-empty] [--epsilon 1e-6] [--normalize-distances]
                [--from-raw raw.json] [--config cfg.json] [--jobs N]
    nceval check-functions [--json]
    nceval compare <report.json>...

Exit status: 0 on success, 1 on validation errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import FileError, ManifestParseError, MetricError, ValidationError
from .harness import EvalOptions, compare_models, load_manifest, report_from_raw, run_evaluation
from .report import emit_report, format_ranking, load_report
from .scoring import CANDIDATES, CRITERIA, check_desiderata

log = logging.getLogger("nceval")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

_OPTION_DEFAULTS = {"skip_empty": False, "epsilon": 1e-6, "normalize_distances": False, "jobs": 1}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nceval", description="Narrative-consistency metrics for generated story images.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("eval", help="evaluate one model from a manifest")
    ev.add_argument("manifest", nargs="?", help="manifest JSON (optional with --from-raw)")
    ev.add_argument("--out", help="write the JSON report here (default: stdout)")
    ev.add_argument("--csv", help="also write a CSV report here")
    ev.add_argument("--skip-empty", action="store_true", default=None,
                    help="exclude and flag pairs with an empty contour instead of failing")
    ev.add_argument("--epsilon", type=float, default=None, help="covariance regularisation (default 1e-6)")
    ev.add_argument("--normalize-distances", action="store_true", default=None,
                    help="divide contour distances by the mask diagonal")
    ev.add_argument("--from-raw", help="JSON object with cn/sr/la/bdp/mc/ads; skips all measurement")
    ev.add_argument("--config", help="JSON file with option defaults; flags override it")
    ev.add_argument("--jobs", type=int, default=None, help="threads for per-pair work")

    cf = sub.add_parser("check-functions", help="tabulate the transformation-function criteria")
    cf.add_argument("--json", action="store_true", help="machine-readable output")

    cmp_ = sub.add_parser("compare", help="rank saved reports by Overall score")
    cmp_.add_argument("reports", nargs="+")
    return parser


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot read {what}: {exc.strerror}", path=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"{path}: invalid JSON in {what}: {exc}") from exc


def resolve_options(args) -> EvalOptions:
    values = dict(_OPTION_DEFAULTS)
    if args.config:
        cfg = _read_json(args.config, "config")
        if not isinstance(cfg, dict):
            raise ManifestParseError("config must be a JSON object")
        for key, val in cfg.items():
            key = key.replace("-", "_")
            if key not in values:
                raise ManifestParseError(f"unknown config option {key!r}")
            values[key] = val
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        opts = EvalOptions(
            skip_empty=bool(values["skip_empty"]),
            epsilon=float(values["epsilon"]),
            normalize_distances=bool(values["normalize_distances"]),
            jobs=int(values["jobs"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad option value: {exc}") from exc
    if opts.epsilon < 0 or opts.jobs < 1:
        raise ValidationError("epsilon must be >= 0 and jobs >= 1")
    return opts


def _cmd_eval(args) -> int:
    opts = resolve_options(args)
    if args.from_raw:
        raw = _read_json(args.from_raw, "raw metrics")
        name = None
        if args.manifest:
            name = _read_json(args.manifest, "manifest").get("model_name")
        report = report_from_raw(raw, name)
    else:
        if not args.manifest:
            raise ValidationError("eval needs a manifest unless --from-raw is given")
        report = run_evaluation(load_manifest(args.manifest), opts)
    for w in report.warnings:
        log.warning("%s", w)
    emit_report(report, "json", args.out)
    if args.csv:
        emit_report(report, "csv", args.csv)
    return EXIT_OK


def _cmd_check_functions(args) -> int:
    results = [check_desiderata(name) for name in CANDIDATES]
    if args.json:
        out = [
            {
                "candidate": r.candidate,
                "passed": r.passed,
                "all_passed": r.all_passed,
                "derivative_ratio": r.derivative_ratio,
                "analytic": list(r.analytic),
            }
            for r in results
        ]
        print(json.dumps(out, indent=2))
        return EXIT_OK
    width = max(len(c) for c in CRITERIA)
    print(f"{'criterion':<{width}}  " + "  ".join(f"{r.candidate:>4}" for r in results))
    for crit in CRITERIA:
        marks = "  ".join(f"{'pass' if r.passed[crit] else 'FAIL':>4}" for r in results)
        tag = "  (analytic)" if crit in results[0].analytic else ""
        print(f"{crit:<{width}}  {marks}{tag}")
    print(f"{'derivative ratio':<{width}}  " + "  ".join(f"{r.derivative_ratio:.3g}" for r in results))
    selected = [r.candidate for r in results if r.all_passed]
    print("all criteria met: " + ", ".join(selected))
    return EXIT_OK


def _cmd_compare(args) -> int:
    reports = [load_report(p) for p in args.reports]
    sys.stdout.write(format_ranking(compare_models(reports)))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    handler = {"eval": _cmd_eval, "check-functions": _cmd_check_functions, "compare": _cmd_compare}
    try:
        return handler[args.command](args)
    except FileError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except MetricError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
