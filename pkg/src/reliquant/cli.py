"""Command-line entry point.

Exit status: 0 success (claim or certificate emitted), 1 campaign completed
with failures, 2 usage or validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from . import campaign as cp
from .domain import parse_domain
from .errors import CampaignRuntimeError, ParseError, ReliquantError, ValidationError
from .faulttree import (
    Method,
    format_event,
    improvement_ranking,
    minimal_cut_sets,
    parse_fault_tree,
    top_event_probability,
)
from .profile import parse_profiles
from .report import read_report, summarize, write_report
from .stats import format_sig, format_words, required_test_count, required_test_hours

EXIT_OK, EXIT_FAILURES, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ValidationError(f"cannot read {what} {path}: {exc}") from exc


def cmd_plan(args, out):
    if args.rate is not None:
        hours = required_test_hours(args.rate, args.confidence)
        print("basis: per-hour", file=out)
        print(f"rate: {args.rate!r} per hour", file=out)
        print(f"confidence: {args.confidence!r}", file=out)
        print(f"hours: {hours!r}", file=out)
        print(f"hours (3 s.f.): {format_sig(hours)}", file=out)
        print(f"{format_words(hours)} hours of failure-free testing", file=out)
        return EXIT_OK
    if args.per_hour:
        raise ValidationError("--per-hour needs --rate")
    count = required_test_count(args.pfd, args.confidence)
    print("basis: per-demand", file=out)
    print(f"pfd: {args.pfd!r}", file=out)
    print(f"confidence: {args.confidence!r}", file=out)
    print(f"tests: {count}", file=out)
    print(f"tests (3 s.f.): {format_sig(count)}", file=out)
    print(f"{format_words(count)} failure-free tests", file=out)
    return EXIT_OK


def cmd_tree(args, out):
    tree = parse_fault_tree(_read(args.file, "tree file"), source=args.file)
    if args.action == "eval":
        methods = [Method.EXACT, Method.RARE_EVENT] if args.method == "both" else [Method(args.method)]
        for m in methods:
            print(f"{m.value}: {top_event_probability(tree, m)!r}", file=out)
    elif args.action == "cuts":
        for cs in minimal_cut_sets(tree):
            print("{" + ", ".join(cs) + "}", file=out)
    else:
        report = improvement_ranking(tree)
        print(f"{'rank':>4}  {'event':<16} {'fussell_vesely':>14}  {'birnbaum':>12}", file=out)
        for k, eid in enumerate(report.ranking, start=1):
            e = report.entry(eid)
            print(f"{k:>4}  {eid:<16} {e.fussell_vesely:>14.6g}  {e.birnbaum:>12.6g}", file=out)
    return EXIT_OK


def cmd_run(args, out):
    domain = parse_domain(_read(args.domain, "domain file"), source=args.domain)
    defaults = {"workers": cp.default_workers()}
    spec = cp.parse_campaign_spec(_read(args.spec, "campaign spec"), defaults)
    if args.workers is not None:
        spec = cp.CampaignSpec(**{**spec.__dict__, "workers": args.workers})
    subject = cp.subject_from_string(args.subject)
    oracle = cp.oracle_from_string(args.oracle)
    profiles = None
    if spec.mode is cp.Mode.STATISTICAL:
        if not args.profile:
            raise ValidationError("statistical mode needs --profile")
        profiles = parse_profiles(_read(args.profile, "profile file"), source=args.profile)
        if spec.profile not in profiles:
            raise ValidationError(f"profile {spec.profile!r} not found in {args.profile}")
    result = cp.run_campaign(domain, spec, subject, oracle, profiles)
    write_report(result, args.report)
    print(summarize(result, max_failures=args.show), end="", file=out)
    if result.claim is not None or result.certificate is not None:
        line = format_event(cp.derive_fault_tree_input(result, event_id=args.event_id))
        print(line, file=out)
        if args.claim:
            with open(args.claim, "w", encoding="utf-8") as fh:
                fh.write(line + "\n")
    return EXIT_FAILURES if result.failure_count else EXIT_OK


def cmd_report(args, out):
    result = read_report(args.report)
    print(summarize(result, max_failures=args.show), end="", file=out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="reliquant", description="Quantified software reliability toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    plan = sub.add_parser("plan", help="failure-free tests (or hours) needed for a reliability target")
    which = plan.add_mutually_exclusive_group(required=True)
    which.add_argument("--pfd", type=float, help="probability of failure per demand to demonstrate")
    which.add_argument("--rate", type=float, help="failure rate per hour to demonstrate")
    plan.add_argument("--confidence", type=float, required=True)
    plan.add_argument("--per-hour", action="store_true", help="per-hour basis (implied by --rate)")
    plan.set_defaults(func=cmd_plan)

    tree = sub.add_parser("tree", help="evaluate or rank a fault tree")
    tree.add_argument("action", choices=["eval", "rank", "cuts"])
    tree.add_argument("file")
    tree.add_argument("--method", choices=["exact", "rare_event", "both"], default="both")
    tree.set_defaults(func=cmd_tree)

    run = sub.add_parser("run", help="run a test campaign")
    run.add_argument("--domain", required=True)
    run.add_argument("--spec", required=True, help="campaign spec (key=value lines)")
    run.add_argument("--subject", required=True, help="builtin:<name> or cmd:<command line>")
    run.add_argument("--oracle", required=True, help="expected:<ref>, prepost:<contract> or make-safe:<predicate>")
    run.add_argument("--profile", help="profile file (statistical mode)")
    run.add_argument("--report", required=True, help="report output path")
    run.add_argument("--claim", help="write the fault-tree event fragment here")
    run.add_argument("--event-id", default="sw_make_safe")
    run.add_argument("--workers", type=int, help="overrides workers= and RELIQUANT_WORKERS")
    run.add_argument("--show", type=int, default=10, help="failures to print")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="summarize a campaign report")
    rep.add_argument("report")
    rep.add_argument("--show", type=int, default=10, help="failures to print")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, ValidationError) as exc:
        print(f"reliquant: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CampaignRuntimeError, OSError) as exc:
        print(f"reliquant: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ReliquantError as exc:
        print(f"reliquant: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
