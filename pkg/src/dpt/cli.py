"""Command-line interface.

Subcommands group the suite operations::

    dpt construct --spec field.json --out sampled.json
    dpt verify    --config checks.json --out report.json --format json
    dpt prove     --config ...
    dpt fluid     --config ...
    dpt kinetic   --config ...
    dpt homog     --config ...
    dpt report    --in report.json --format csv

Common options: ``--config <file>``, ``--out <file>``, ``--format json|csv``,
``--seed <u64>`` (overrides every job seed), ``--jobs <int>`` (parallel
jobs).  The environment variable ``DPT_LOG`` sets the logging level.  Exit
status is nonzero iff any check fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import DptError
from .report import reports_from_json, reports_to_csv, reports_to_json
from .suite import OPERATION_GROUPS, emit_report, parse_config, run_suite

log = logging.getLogger("dpt")


def _setup_logging() -> None:
    level = os.environ.get("DPT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _add_suite_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="suite configuration (JSON)")
    sub.add_argument("--out", default=None, help="write the report here instead of stdout")
    sub.add_argument("--format", choices=("json", "csv"), default=None)
    sub.add_argument("--seed", type=int, default=None, help="override every job seed")
    sub.add_argument("--jobs", type=int, default=1, help="parallel job count")


def _run_group(args: argparse.Namespace, group: str | None) -> int:
    with open(args.config) as fh:
        config = parse_config(fh.read())
    allowed = OPERATION_GROUPS[group] if group else None
    reports = run_suite(
        config,
        seed_override=args.seed,
        max_workers=max(args.jobs, 1),
        allowed_ops=allowed,
    )
    fmt = args.format or config.format
    text = emit_report(reports, fmt)
    out = args.out or config.out
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        log.info("wrote %d report(s) to %s", len(reports), out)
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))
    for r in reports:
        log.info("%s: %s (slack %.3e)", r.name, "pass" if r.passed else "FAIL", r.slack)
    return 0 if all(r.passed for r in reports) else 1


def _cmd_construct(args: argparse.Namespace) -> int:
    from .constructors import field_from_spec
    from .field import divergence_mass, field_average, save_field

    with open(args.spec) as fh:
        doc = json.load(fh)
    field = field_from_spec(doc)
    save_field(field, args.out)
    mean = field_average(field)
    summary = {
        "d": field.dim,
        "grid": list(field.grid.shape),
        "constructor": field.metadata.get("constructor", ""),
        "psd": field.is_psd(),
        "min_eig": float(field.min_eigs().min()),
        "mean_diag": [float(x) for x in mean.matrix.diagonal()],
    }
    try:
        summary["div_mass"] = divergence_mass(field)
    except DptError:
        pass
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    with open(args.infile) as fh:
        text = fh.read()
    reports = reports_from_json(text)
    out_text = reports_to_csv(reports) if args.format == "csv" else reports_to_json(reports)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out_text)
    else:
        sys.stdout.write(out_text)
    return 0 if all(r.passed for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpt",
        description="Divergence-free positive tensor fields: constructors and "
        "inequality verification suites.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    con = subs.add_parser("construct", help="build a field from a constructor spec")
    con.add_argument("--spec", required=True, help="constructor document (JSON)")
    con.add_argument("--out", required=True, help="field output path")
    con.set_defaults(func=_cmd_construct)

    for group in ("verify", "prove", "fluid", "kinetic", "homog"):
        sub = subs.add_parser(group, help=f"run {group} checks from a config")
        _add_suite_args(sub)
        sub.set_defaults(func=lambda a, g=group: _run_group(a, g))

    rep = subs.add_parser("report", help="re-emit an existing JSON report")
    rep.add_argument("--in", dest="infile", required=True)
    rep.add_argument("--out", default=None)
    rep.add_argument("--format", choices=("json", "csv"), default="csv")
    rep.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DptError as exc:
        sys.stderr.write(f"dpt: {type(exc).__name__}: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"dpt: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
