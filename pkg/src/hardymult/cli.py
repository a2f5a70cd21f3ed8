"""Command-line entry point: ``hardymult <command> [options]``.

Exit status: 0 all checks passed, 2 a verification check failed, 3 bad
input (unknown command, malformed table or config, unwritable output).
The default output directory is ``$HARDYMULT_OUT`` or ``./reports``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .commands import COMMANDS, ExperimentConfig, InputError, run_command

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 2, 3
OUT_ENV = "HARDYMULT_OUT"

# flags copied into ExperimentConfig.params (name -> type)
PARAM_FLAGS = {
    "table": str, "sequence": str, "which": str, "degree": int, "budget": int, "mode": str,
    "samples": int, "M": int, "stem": str,
}
CONFIG_FIELDS = ("group", "depth", "N", "trials", "seed", "tol", "out")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config; flags given explicitly win")
    common.add_argument("--group", help='e.g. "Z2,Z3", "T8^3" or "T16,T16"')
    common.add_argument("--depth", type=int)
    common.add_argument("--N", type=int, help="torus order (with --depth) when --group is absent")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="check tolerance where the command has one")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./reports)")
    common.add_argument("--table", metavar="PATH", help="multiplier table document (JSON)")
    common.add_argument("--sequence", help="fnorm sequence: ones:A:B or harmonic:M")
    common.add_argument("--which", help="equiv-report tag")
    common.add_argument("--degree", type=int, help="analytic degree of Hardy samples")
    common.add_argument("--budget", type=int, help="solver iteration budget")
    common.add_argument("--mode", help="dg-solve: hardy (default) or one-step")
    common.add_argument("--samples", type=int, help="Hardy samples per table (hardylast-norm)")
    common.add_argument("--M", type=int, help="hardy-ineq truncation length")
    common.add_argument("--stem", help="report file stem (default: command name)")

    p = _Parser(prog="hardymult", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "fnorm": "Fefferman norm of a one-dimensional sequence",
        "adapted-norm": "closed-form multiplier norm on the adapted L1(l2) space",
        "corollary-norm": "two-term formula for martingale Hardy multipliers",
        "hardylast-norm": "final-theorem formula (with --trials: soundness test)",
        "prop1-verify": "sign-search oracle against the adapted formula",
        "dg-solve": "Davis-Garsia decomposition, constrained and unconstrained",
        "equiv-report": "measured ratio bracket for one norm equivalence",
        "hardy-ineq": "Hardy's inequality sufficiency check",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except OSError as e:
            raise InputError(f"cannot read config {args.config}: {e}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"{args.config}: line {e.lineno}: {e.msg}") from None
        if not isinstance(base, dict):
            raise InputError(f"{args.config}: expected a JSON object")
    params = dict(base.get("params") or {})
    unknown = set(base) - set(CONFIG_FIELDS) - {"params", "command"}
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    if base.get("command", args.command) != args.command:
        raise InputError(f"config is for {base['command']!r}, not {args.command!r}")
    fields = {k: base.get(k) for k in CONFIG_FIELDS}
    for k in CONFIG_FIELDS:
        v = getattr(args, k)
        if v is not None:
            fields[k] = v
    for k in PARAM_FLAGS:
        v = getattr(args, k)
        if v is not None:
            params[k] = v
    if fields["seed"] is None:
        fields["seed"] = 0
    if not fields["out"]:
        fields["out"] = os.environ.get(OUT_ENV) or "reports"
    return ExperimentConfig(command=args.command, params=params, **fields)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run_command(cfg)
    except (InputError, ValueError, IndexError, OverflowError) as e:
        # library domain errors (bad group, out-of-range frequency, ...) are input errors
        print(f"hardymult {args.command}: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    stem = cfg.params.get("stem") or cfg.command
    print(json.dumps(report.body()["summary"], indent=2))
    print(f"report: {os.path.join(cfg.out, stem)}.json / .csv")
    failed = [c for c in report.checks if not c.passed]
    for c in failed:
        print(f"FAILED: {c.name} {c.detail}".rstrip(), file=sys.stderr)
    if report.checks:
        print(f"checks: {len(report.checks) - len(failed)}/{len(report.checks)} passed")
    return EXIT_FAILED if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
