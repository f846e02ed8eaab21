"""``pbprop`` command line: run rules, measure degrees, generate and check.

Exit status: 0 success, 1 usage, 2 parse or validation error, 3 checker
violation.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from pbprop.adversarial import (
    AnyRuleSpec,
    ConstructionError,
    MesUpperSpec,
    PhragmenUpperSpec,
    gen_anyrule,
    gen_mes_upper,
    gen_phragmen_upper,
)
from pbprop.charts import degree_chart, difference_chart, winners, write_degree_csv
from pbprop.core import InvalidInstanceError, as_money, format_rational, is_cohesive, supporter_pool
from pbprop.degree import CheckerTooLarge, SamplePlan, check_ejr, check_lemma1, degree_reports, min_avg_group
from pbprop.pabulib_io import PabulibError, PabulibWarning, load_instance, write_canonical, write_pabulib
from pbprop.rules import RULES, TieBreak, format_trace, run_mes, run_rule, run_rules

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2, 3
DATASET_SUFFIXES = (".pb", ".pbc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _split(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _rule_list(text: str) -> list[str]:
    rules = _split(text)
    bad = [r for r in rules if r not in RULES]
    if bad or not rules:
        raise argparse.ArgumentTypeError(f"unknown rule(s) {bad}; choose from {','.join(RULES)}")
    return rules


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _tie_break(args) -> TieBreak:
    if args.tie_break == "adversarial":
        if not args.against:
            raise UsageError("--tie-break adversarial needs --against")
        return TieBreak.adversarial_to(_split(args.against))
    if args.tie_break == "explicit":
        if not args.order:
            raise UsageError("--tie-break explicit needs --order")
        return TieBreak.explicit(_split(args.order))
    return TieBreak()


def _add_tie_break(p):
    p.add_argument("--tie-break", choices=("lexicographic", "adversarial", "explicit"), default="lexicographic")
    p.add_argument("--against", help="comma separated projects that lose ties (adversarial)")
    p.add_argument("--order", help="comma separated full project ranking (explicit)")
    p.add_argument("--allowance", choices=("off", "first", "every"), default="off", help="MES free-credit top-up")
    p.add_argument("--stop-first", action="store_true", help="greedy scans stop at the first project that does not fit")


def _resolve_seed(seed: int | None) -> int | None:
    if seed is not None:
        return seed
    env = os.environ.get("PBPROP_SEED")
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"PBPROP_SEED must be an integer, got {env!r}") from None


def _datasets(paths: list[str]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(q for q in p.iterdir() if q.suffix in DATASET_SUFFIXES)
            if not found:
                raise UsageError(f"no .pb or .pbc files in {p}")
            out.extend(found)
        elif p.exists():
            out.append(p)
        else:
            raise UsageError(f"no such file: {p}")
    return out


# --------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    inst = load_instance(args.input)
    outcome = run_rule(args.rule, inst, _tie_break(args), args.allowance, args.stop_first)
    text = format_trace(outcome)
    if args.trace:
        Path(args.trace).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    leftover = inst.budget - outcome.total_cost
    print(f"funded\t{','.join(outcome.selected) or '-'}")
    print(f"size\t{len(outcome.selected)}")
    print(f"total_cost\t{_show(outcome.total_cost)}")
    print(f"leftover\t{_show(leftover)}")
    return EXIT_OK


def _show(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else format_rational(x)


def cmd_degree(args) -> int:
    paths = _datasets(args.inputs)
    seed = _resolve_seed(args.seed)
    instances = {}
    for p in paths:
        name = p.stem
        if name in instances:
            raise UsageError(f"two datasets share the name {name!r}")
        instances[name] = load_instance(p)
    sampling = any(
        math.comb(inst.m, k) > args.samples for inst in instances.values() for k in range(1, min(inst.m, args.k_max) + 1)
    )
    if sampling and seed is None:
        raise UsageError("sampling needed: pass --seed or set PBPROP_SEED")
    plan = SamplePlan(seed if seed is not None else 0, args.k_max, args.samples)
    tb = _tie_break(args)

    results = {}
    for name, inst in instances.items():
        outcomes = run_rules(inst, args.rules, tb, args.allowance, args.stop_first)
        results[name] = degree_reports(inst, outcomes, plan, args.workers)

    if args.csv and args.csv != "-":
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_degree_csv(results, fh)
    else:
        write_degree_csv(results, sys.stdout)

    if args.svg_dir:
        out = Path(args.svg_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, reports in results.items():
            (out / f"{name}.svg").write_text(degree_chart(name, reports), encoding="utf-8")
        if args.basis:
            chart = difference_chart(results, [r for r in args.rules if r != args.basis], args.basis)
            (out / f"difference-{args.basis}.svg").write_text(chart, encoding="utf-8")
    if args.winners:
        for rule, count in winners(results, args.rules).items():
            print(f"winner\t{rule}\t{count}", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "mes-upper":
        if args.nv is None:
            raise UsageError("mes-upper needs --nv")
        fam = gen_mes_upper(MesUpperSpec(args.nv, args.t_size, as_money(args.unit_cost), as_money(args.delta)))
    elif args.family == "phragmen-upper":
        if args.alpha is None:
            raise UsageError("phragmen-upper needs --alpha")
        fam = gen_phragmen_upper(PhragmenUpperSpec(args.alpha, args.beta, args.t_size))
    else:
        if (args.groups is None) == (args.multiplier is None):
            raise UsageError("anyrule needs exactly one of --groups or --multiplier")
        if args.groups is not None:
            spec = AnyRuleSpec.from_groups(args.groups, args.unit_cost, args.t_size)
        else:
            spec = AnyRuleSpec(args.multiplier, as_money(args.unit_cost), args.t_size)
        fam = gen_anyrule(spec)

    inst = fam.instance
    if args.output:
        path = Path(args.output)
        if path.suffix == ".pbc":
            path.write_bytes(write_canonical(inst))
        else:
            path.write_text(write_pabulib(inst, description=fam.name), encoding="utf-8")
        report = sys.stdout
    else:
        sys.stdout.buffer.write(write_canonical(inst))
        sys.stdout.flush()
        report = sys.stderr
    print(f"family\t{fam.name}", file=report)
    print(f"voters\t{inst.n}", file=report)
    print(f"projects\t{inst.m}", file=report)
    print(f"T\t{','.join(sorted(fam.T))}", file=report)
    print(f"V\t{','.join(sorted(fam.V.members))}", file=report)
    for key, value in fam.params.items():
        shown = _show(value) if isinstance(value, Fraction) else value
        print(f"param\t{key}\t{shown}", file=report)
    for key, value in fam.bounds.as_dict().items():
        print(f"bound\t{key}\t{_show(value)}", file=report)
    return EXIT_OK


def _lemma1_pairs(inst, outcome, max_T_size):
    """Cohesive ``(T, V)`` pairs: the least served minimum group and the whole pool."""
    for size in range(1, max_T_size + 1):
        for T in itertools.combinations(inst.projects, size):
            if inst.cost_of(T) > inst.budget:
                continue
            rep = min_avg_group(inst, outcome, T)
            if rep.group is None:
                continue
            yield T, rep.group.members
            pool = supporter_pool(inst, T)
            if pool != rep.group.members and is_cohesive(inst, T, pool):
                yield T, pool


def cmd_check(args) -> int:
    inst = load_instance(args.input)
    tb = _tie_break(args)
    max_T = inst.m if args.max_t_size is None else args.max_t_size
    if args.checker == "ejr":
        outcome = run_rule(args.rule, inst, tb, args.allowance, args.stop_first)
        try:
            violations = check_ejr(inst, outcome, max_T)
        except CheckerTooLarge as exc:
            raise UsageError(str(exc)) from None
        for v in violations:
            print(f"violation\tejr\t{v.describe()}")
        print(f"checked\tejr\t{args.rule}\tmax_T_size={min(max_T, inst.m)}\tviolations={len(violations)}")
        return EXIT_VIOLATION if violations else EXIT_OK

    if args.rule != "mes":
        raise UsageError("lemma1 applies to MES traces only (--rule mes)")
    budget = sum(math.comb(inst.m, s) for s in range(1, min(max_T, inst.m) + 1))
    if budget > 200_000:
        raise UsageError(f"{budget} project sets to inspect; pass a smaller --max-t-size")
    outcome = run_mes(inst, tb, args.allowance)
    failures = pairs = 0
    for T, V in _lemma1_pairs(inst, outcome, min(max_T, inst.m)):
        pairs += 1
        if not check_lemma1(inst, outcome.trace, T, V):
            failures += 1
            print(f"violation\tlemma1\tT={{{','.join(T)}}}\tV={{{','.join(sorted(V))}}}")
    print(f"checked\tlemma1\tpairs={pairs}\tviolations={failures}")
    return EXIT_VIOLATION if failures else EXIT_OK


def cmd_convert(args) -> int:
    inst = load_instance(args.input)
    data = write_canonical(inst)
    if args.output and args.output != "-":
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pbprop", description="Proportionality degree tools for approval-based participatory budgeting.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one rule and write its trace")
    p.add_argument("--input", required=True)
    p.add_argument("--rule", choices=RULES, default="mes")
    p.add_argument("--trace", help="write the trace here instead of stdout")
    _add_tie_break(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("degree", help="sampled proportionality degree per subset size")
    p.add_argument("inputs", nargs="+", help="dataset files or directories of .pb/.pbc files")
    p.add_argument("--rules", type=_rule_list, default=list(RULES))
    p.add_argument("--k-max", type=_positive, default=15)
    p.add_argument("--samples", type=_positive, default=5000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--csv", help="CSV output path (default stdout)")
    p.add_argument("--svg-dir", help="write one chart per dataset here")
    p.add_argument("--basis", choices=RULES, help="also write a difference chart against this rule")
    p.add_argument("--winners", action="store_true", help="print best-rule counts (ties separate) to stderr")
    _add_tie_break(p)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("gen", help="generate a worst-case family")
    p.add_argument("--family", choices=("mes-upper", "phragmen-upper", "anyrule"), required=True)
    p.add_argument("--nv", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--groups", type=int)
    p.add_argument("--multiplier", type=int, help="B / base cost for anyrule")
    p.add_argument("--t-size", type=_positive, default=1)
    p.add_argument("--unit-cost", default="1")
    p.add_argument("--delta", default="0")
    p.add_argument("--output", help=".pbc for canonical, anything else Pabulib (default canonical on stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", help="EJR or payment-bound checker")
    p.add_argument("checker", choices=("ejr", "lemma1"))
    p.add_argument("--input", required=True)
    p.add_argument("--rule", choices=RULES, default="mes")
    p.add_argument("--max-t-size", type=_positive)
    _add_tie_break(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("convert", help="Pabulib to canonical")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_convert)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", PabulibWarning)
            warnings.showwarning = _show_warning
            return args.func(args)
    except UsageError as exc:
        print(f"pbprop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PabulibError, InvalidInstanceError, ConstructionError, ValueError, KeyError, OSError) as exc:
        print(f"pbprop: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
