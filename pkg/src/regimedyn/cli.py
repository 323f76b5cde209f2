"""Command-line entry point.

    regimedyn --scenario S.json analyze --out results/
    regimedyn simulate --scenario S.json --seed 7 --out results/
    regimedyn jsr --scenario S.json --depth 14 --gap 1e-3
    regimedyn structure --scenario S.json --tol 1e-8
    regimedyn validate --scenario S.json
    regimedyn paper-example

Exit codes: 0 success, 1 paper-example comparison failure, 2 usage error,
3 invalid scenario, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import NumericalError, RegimeDynError, ScenarioError
from .scenario import (
    AnalysisFailed,
    emit_report,
    format_comparison,
    load_scenario,
    paper_example,
    run_scenario,
)

EXIT_OK, EXIT_BREACH, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3, 4

SUBCOMMANDS = {
    "simulate": ("fixed-point", "simulate"),
    "analyze": None,  # whatever the scenario requests
    "jsr": ("fixed-point", "linearize", "jsr"),
    "structure": ("fixed-point", "linearize", "commute", "irreducibility", "topology"),
}


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _add_common(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--scenario", metavar="PATH", default=d(None), help="scenario JSON file")
    p.add_argument("--out", metavar="DIR", default=d(None), help="directory for report.json and CSVs")
    p.add_argument("--seed", type=_u64, metavar="U64", default=d(None), help="override scenario seeds")
    p.add_argument("--depth", type=int, metavar="L", default=d(None), help="maximum JSR word length")
    p.add_argument("--gap", type=float, metavar="G", default=d(None), help="target JSR bracket width")
    p.add_argument("--tol", type=float, metavar="T", default=d(None),
                   help="fixed-point and structural tolerance")
    p.add_argument("--threads", type=int, metavar="N", default=d(1),
                   help="worker threads for structural sampling (results do not depend on it)")
    p.add_argument("--no-timings", action="store_true", default=d(False),
                   help="omit wall-clock timings from report.json")


def build_parser():
    parser = argparse.ArgumentParser(prog="regimedyn", description=__doc__.split("\n")[0] or None)
    parser.add_argument("--version", action="version", version=f"regimedyn {__version__}")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)
    sub.add_parser("simulate", parents=[common], help="simulate the scenario's trajectory")
    sub.add_parser("analyze", parents=[common], help="run every analysis the scenario requests")
    sub.add_parser("jsr", parents=[common], help="joint-spectral-radius bounds and stability verdict")
    sub.add_parser("structure", parents=[common], help="commutation, irreducibility and topology")
    sub.add_parser("validate", parents=[common], help="check a scenario file and exit")
    sub.add_parser("paper-example", parents=[common],
                   help="reproduce the two-regime collateral example and compare with reference values")
    return parser


def _summary(report):
    r = report.results
    lines = []
    fp = r.get("fixed-point")
    if fp:
        lines.append("fixed point: " + (fp["error"]["message"] if "error" in fp else
                     f"{fp['point']} converged={fp['converged']} residual={fp['residual']:.3g}"))
    lin = r.get("linearize")
    if lin and "error" not in lin:
        for label, sp in lin["spectra"].items():
            lines.append(f"rho(A_{label}) = {sp['spectral_radius']:.10g}")
    j = r.get("jsr")
    if j:
        if "error" in j:
            lines.append(f"jsr: {j['error']['message']}")
        else:
            b = j["bounds"]
            lines.append(f"JSR in [{b['lower']:.10g}, {b['upper']:.10g}] at depth {b['depth']} "
                         f"(witness {'.'.join(b['witness_word'])}, {b['products_evaluated']} products)")
            lines.append(f"verdict: {j['verdict']['status']} (margin {j['verdict']['margin']:.4g})")
    c = r.get("commute")
    if c:
        lines.append("invariant law: " + (c["error"]["message"] if "error" in c else
                     f"{c['verdict']['status']}: {c['verdict']['reason']}"))
    irr = r.get("irreducibility")
    if irr and "error" not in irr:
        pairs = ", ".join("/".join(p["pair"]) for p in irr["distinct_pairs"]) or "none"
        lines.append(f"distinct regime pairs: {pairs}")
    t = r.get("topology")
    if t and "error" not in t:
        lines.append(f"components: {t['component_count']}, "
                     f"conjugate to invariant law: {t['conjugate_to_invariant_law']}")
    s = r.get("simulate")
    if s:
        lines.append("simulate: " + (s["error"]["message"] if "error" in s else
                     f"T={s['horizon']} final state {s['final_state']}"))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    timings = not args.no_timings
    threads = max(1, args.threads)

    if args.command == "paper-example":
        try:
            report = paper_example(timings=timings, workers=threads)
        except RegimeDynError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        block = report.results["reference_comparison"]
        print(format_comparison(block))
        if args.out:
            emit_report(report, args.out)
        if not block["all_pass"]:
            for row in block["rows"]:
                if not row["pass"]:
                    print(f"FAILED: {row['quantity']}: computed {row['computed']}, "
                          f"reference {row['reference']}", file=sys.stderr)
            return EXIT_BREACH
        print("all comparisons within tolerance")
        return EXIT_OK

    if not args.scenario:
        print("error: --scenario PATH is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        scen = load_scenario(args.scenario)
        scen = scen.with_overrides(seed=args.seed, depth=args.depth, gap=args.gap, tol=args.tol)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        print(f"{args.scenario}: valid ({scen.system.size} regimes {list(scen.system.labels)}, "
              f"dimension {scen.dimension}, analyses {list(scen.analyses)})")
        return EXIT_OK

    analyses = SUBCOMMANDS[args.command]
    if args.command == "simulate" and scen.signal is None:
        print("invalid scenario: simulate requires a signal", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "simulate" and scen.initial_state is None:
        print("invalid scenario: simulate requires initial_state", file=sys.stderr)
        return EXIT_INVALID
    try:
        report = run_scenario(scen, analyses, timings=timings, workers=threads)
    except (AnalysisFailed, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(_summary(report))
    out = args.out or scen.config.get("output", {}).get("dir")
    if out:
        try:
            paths = emit_report(report, out)
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
