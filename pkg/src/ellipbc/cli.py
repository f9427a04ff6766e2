"""Command line entry point: ``ellipbc run|suite|eval``."""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Sequence

from . import closed_forms, interp, qseries
from .errors import ConfigError, EllipError
from .qseries import Bases
from .verify import DEFAULT_SEED, SUITES, Report, run, run_scenarios, suite


def _c(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _i(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _list(text: str) -> list[complex]:
    return [_c(x) for x in text.split(",") if x]


def _ilist(text: str) -> tuple[int, ...]:
    return tuple(_i(x) for x in text.split(",") if x)


# name -> (argument names, parsers, callable)
EVALUATORS: dict[str, tuple[tuple[str, ...], tuple[Callable, ...], Callable]] = {
    "poch": (("u", "p"), (_c, _c), qseries.poch_p),
    "poch2": (("u", "p", "q"), (_c, _c, _c), qseries.poch_pq),
    "theta": (("u", "p"), (_c, _c), qseries.theta),
    "gamma": (("u", "p", "q"), (_c, _c, _c), qseries.ell_gamma),
    "e": (("u", "v", "p"), (_c, _c, _c), qseries.e_pair),
    "theta_fact": (("u", "p", "t", "k"), (_c, _c, _c, _i), qseries.theta_fact),
    "e_fact": (("u", "v", "p", "t", "k"), (_c, _c, _c, _c, _i), qseries.e_fact),
    "E": (("c", "mu", "z", "p", "t"), (_list, _ilist, _list, _c, _c), interp.E_eval),
    "c_rn": (("r", "n", "p", "q", "t"), (_i, _i, _c, _c, _c),
             lambda r, n, p, q, t: closed_forms.c_rn(r, n, Bases(p, q, t))),
    "selberg": (("a", "n", "p", "q", "t"), (_list, _i, _c, _c, _c),
                lambda a, n, p, q, t: closed_forms.selberg_closed(a, n, Bases(p, q, t))),
}


def _eval(name: str, raw: Sequence[str]) -> complex:
    if name not in EVALUATORS:
        raise ConfigError(f"unknown function {name!r}; choose from {', '.join(sorted(EVALUATORS))}")
    names, parsers, fn = EVALUATORS[name]
    if len(raw) != len(names):
        raise ConfigError(f"{name} takes {len(names)} arguments ({' '.join(names)}), got {len(raw)}")
    args = []
    for label, parse, text in zip(names, parsers, raw):
        try:
            args.append(parse(text))
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"argument {label}: {exc}") from None
    return complex(fn(*args))


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=1, help="scenarios run in parallel")
    common.add_argument("--json", metavar="PATH", help="write the JSON report here")
    common.add_argument("--tol-scale", type=float, default=None, metavar="FACTOR",
                        help="multiply every tolerance by FACTOR")
    common.add_argument("--quiet", action="store_true", help="print failures and the summary only")

    parser = argparse.ArgumentParser(prog="ellipbc", description="Elliptic BC_n integrals: checks and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="run the scenarios of a TOML config")
    p_run.add_argument("config")

    p_suite = sub.add_parser("suite", parents=[common], help="run a built-in suite")
    p_suite.add_argument("name", choices=sorted(SUITES))
    p_suite.add_argument("--with-n3", action="store_true", help="add the optional n = 3 Selberg check")

    p_eval = sub.add_parser("eval", help="evaluate one function, e.g. `eval theta 0.5+0.1j 0.2`",
                            description="Functions: " + "; ".join(
                                f"{k}({', '.join(v[0])})" for k, v in EVALUATORS.items())
                            + ". Lists are comma separated.")
    p_eval.add_argument("function")
    p_eval.add_argument("args", nargs="*")
    return parser


def _emit(report: Report, args) -> int:
    for result in report.results:
        if not args.quiet or not result.passed:
            print(result.line())
    total = len(report.results)
    failed = sum(not r.passed for r in report.results)
    print(f"{total - failed}/{total} checks passed (seed {report.seed})")
    if args.json:
        report.write(args.json)
    return 0 if report.passed else 1


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            value = _eval(args.function, args.args)
            print(f"{value.real:.17g}{value.imag:+.17g}j")
            return 0
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.tol_scale is not None and not args.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
        if args.command == "run":
            report = run(args.config, args.seed, args.threads, args.tol_scale)
        else:
            report = run_scenarios(suite(args.name, args.with_n3),
                                   args.seed if args.seed is not None else DEFAULT_SEED,
                                   args.threads, args.tol_scale or 1.0)
        return _emit(report, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EllipError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
