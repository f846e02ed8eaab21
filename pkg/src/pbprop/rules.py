"""PB rules: Method of Equal Shares, sequential Phragmén, greedy approval.

Every rule returns an :class:`~pbprop.core.Outcome` whose ``trace`` records
enough of the execution to re-check each decision independently.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from pbprop.core import Outcome, PbInstance, check_instance, format_rational

__all__ = [
    "TieBreak",
    "LEXICOGRAPHIC",
    "MesRound",
    "MesTrace",
    "PhragmenEvent",
    "PhragmenTrace",
    "GreedyTrace",
    "compute_rho",
    "run_mes",
    "run_phragmen",
    "run_greedy",
    "exhaust",
    "run_rule",
    "run_rules",
    "RULES",
    "format_trace",
]


@dataclass(frozen=True)
class TieBreak:
    """Ordering used to break ties between projects.

    ``mode`` is one of ``"lexicographic"``, ``"adversarial"`` (projects in
    ``against`` lose every tie) or ``"explicit"`` (``order`` ranks all
    projects, earlier wins).
    """

    mode: str = "lexicographic"
    against: frozenset[str] = frozenset()
    order: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in ("lexicographic", "adversarial", "explicit"):
            raise ValueError(f"unknown tie-break mode {self.mode!r}")
        object.__setattr__(self, "against", frozenset(self.against))
        object.__setattr__(self, "order", tuple(self.order))
        if self.mode == "explicit" and len(set(self.order)) != len(self.order):
            raise ValueError("explicit tie-break order repeats a project")

    @classmethod
    def adversarial_to(cls, T: Iterable[str]) -> "TieBreak":
        return cls(mode="adversarial", against=frozenset(T))

    @classmethod
    def explicit(cls, order: Sequence[str]) -> "TieBreak":
        return cls(mode="explicit", order=tuple(order))

    def key(self, project: str):
        if self.mode == "adversarial":
            return (project in self.against, project)
        if self.mode == "explicit":
            try:
                return (self.order.index(project), project)
            except ValueError:
                raise ValueError(f"project {project!r} missing from explicit tie-break order") from None
        return (False, project)

    def check_total(self, instance: PbInstance) -> None:
        if self.mode == "explicit" and set(self.order) != set(instance.projects):
            raise ValueError("explicit tie-break order must list every project exactly once")

    def describe(self) -> str:
        if self.mode == "adversarial":
            return "adversarial:" + ",".join(sorted(self.against))
        if self.mode == "explicit":
            return "explicit:" + ",".join(self.order)
        return "lexicographic"


LEXICOGRAPHIC = TieBreak()


# --------------------------------------------------------------------------
# Method of Equal Shares


@dataclass(frozen=True)
class MesRound:
    project: str
    rho: Fraction
    payments: Mapping[str, Fraction]
    leftover_after: Mapping[str, Fraction]
    injected: Mapping[str, Fraction] = field(default_factory=dict)

    @property
    def is_allowance_round(self) -> bool:
        return bool(self.injected)


@dataclass(frozen=True)
class MesTrace:
    initial_endowment: Fraction
    allowance_mode: bool
    rounds: tuple[MesRound, ...]

    @property
    def allowance_round(self) -> int | None:
        for i, r in enumerate(self.rounds):
            if r.injected:
                return i
        return None

    def leftovers_before(self, round_index: int, voters: Iterable[str]) -> dict[str, Fraction]:
        if round_index == 0:
            return {v: self.initial_endowment for v in voters}
        prev = self.rounds[round_index - 1].leftover_after
        return {v: prev[v] for v in voters}


def compute_rho(cost: Fraction, leftovers: Iterable[Fraction]) -> Fraction | None:
    """Smallest ``rho`` with ``sum(min(l, rho)) == cost``; ``None`` if unaffordable.

    Leftovers are sorted ascending and the piecewise-linear equation is
    solved one segment at a time.
    """
    counts = Counter(leftovers)
    return _rho_from_counts(Fraction(cost), counts)


def _rho_from_counts(cost: Fraction, counts: Mapping[Fraction, int]) -> Fraction | None:
    if cost <= 0:
        raise ValueError("project cost must be positive")
    if sum(v * c for v, c in counts.items()) < cost:
        return None
    remaining = cost
    payers = sum(counts.values())
    for value in sorted(counts):
        rho = remaining / payers
        if rho <= value:
            return rho
        k = counts[value]
        remaining -= value * k
        payers -= k
    raise AssertionError("unreachable: total leftover covers the cost")


def run_mes(instance: PbInstance, tie_break: TieBreak = LEXICOGRAPHIC, allowance: bool | str = False) -> Outcome:
    """Method of Equal Shares.

    ``allowance`` is ``False``/``"off"``, ``True``/``"first"`` or ``"every"``.
    With ``"first"`` the first selection at which some paying
    supporter cannot cover an equal share is completed with free credits:
    supporters that still hold money split the cost equally, and whoever is
    short pays their whole leftover while the gap is injected. Afterwards the
    rule runs unmodified. ``"every"`` keeps the top-up available for the whole
    run. The injection is only taken if the project still fits in the budget.
    """
    check_instance(instance)
    tie_break.check_total(instance)
    if instance.budget == 0:
        return Outcome.from_selection(
            instance, "mes", (), MesTrace(Fraction(0), allowance, ())
        )
    endowment = instance.budget / instance.n
    left = {v: endowment for v in instance.voters}
    supporters = instance.supporters
    remaining = set(p for p in instance.projects if supporters[p])
    selected: list[str] = []
    rounds: list[MesRound] = []
    spent = Fraction(0)
    mode = _allowance_mode(allowance)
    allowance_open = mode != "off"

    while remaining:
        best = None
        for p in remaining:
            cost = instance.costs[p]
            sup = supporters[p]
            injection = False
            if allowance_open:
                holders = [v for v in sup if left[v] > 0]
                if not holders:
                    continue
                rho = cost / len(holders)
                injection = any(left[v] < rho for v in holders)
                if injection and spent + cost > instance.budget:
                    injection = False
                    rho = _rho_from_counts(cost, Counter(left[v] for v in sup))
            else:
                rho = _rho_from_counts(cost, Counter(left[v] for v in sup))
            if rho is None:
                continue
            cand = (rho, tie_break.key(p), p, injection)
            if best is None or cand[:2] < best[:2]:
                best = cand
        if best is None:
            break
        rho, _, p, injection = best
        payments: dict[str, Fraction] = {}
        injected: dict[str, Fraction] = {}
        for v in supporters[p]:
            pay = min(left[v], rho)
            if pay > 0:
                payments[v] = pay
                left[v] -= pay
            if injection and 0 < pay < rho:
                injected[v] = rho - pay
        if injection and mode == "first":
            allowance_open = False
        spent += instance.costs[p]
        remaining.discard(p)
        selected.append(p)
        rounds.append(MesRound(p, rho, payments, dict(left), injected))

    trace = MesTrace(endowment, mode != "off", tuple(rounds))
    return Outcome.from_selection(instance, "mes", selected, trace)


def _allowance_mode(allowance: bool | str) -> str:
    if allowance is True:
        return "first"
    if allowance is False or allowance is None:
        return "off"
    if allowance in ("off", "first", "every"):
        return allowance
    raise ValueError(f"allowance must be a bool or one of off/first/every, got {allowance!r}")


# --------------------------------------------------------------------------
# Sequential Phragmén


@dataclass(frozen=True)
class PhragmenEvent:
    time: Fraction
    project: str
    paying_group: frozenset[str]
    credits_reset: Mapping[str, Fraction]


@dataclass(frozen=True)
class PhragmenTrace:
    events: tuple[PhragmenEvent, ...]
    stop_reason: str
    stopped_at_project: str | None = None
    stopped_at_time: Fraction | None = None


def run_phragmen(instance: PbInstance, tie_break: TieBreak = LEXICOGRAPHIC) -> Outcome:
    """Sequential Phragmén with continuous credit accrual.

    A supporter's balance at time ``t`` is ``t - last_reset``, so project
    ``p`` becomes affordable at ``(cost(p) + sum(last_reset)) / |N_p|``.
    The rule halts at the first project whose purchase would exceed the
    budget; exact fits are taken.
    """
    check_instance(instance)
    tie_break.check_total(instance)
    supporters = instance.supporters
    voter_projects: dict[str, list[str]] = {v: [] for v in instance.voters}
    for p in instance.projects:
        for v in supporters[p]:
            voter_projects[v].append(p)

    last_reset = {v: Fraction(0) for v in instance.voters}
    reset_sum = {p: Fraction(0) for p in instance.projects if supporters[p]}
    now = Fraction(0)
    spent = Fraction(0)
    selected: list[str] = []
    events: list[PhragmenEvent] = []
    stop_reason, stop_project, stop_time = "no-candidate", None, None

    while reset_sum:
        best = None
        for p, rs in reset_sum.items():
            t = (instance.costs[p] + rs) / len(supporters[p])
            cand = (t, tie_break.key(p), p)
            if best is None or cand[:2] < best[:2]:
                best = cand
        t, _, p = best
        assert t >= now, "Phragmén event scheduled in the past"
        now = t
        cost = instance.costs[p]
        if spent + cost > instance.budget:
            stop_reason, stop_project, stop_time = "budget-overshoot", p, t
            break
        group = supporters[p]
        credits = {v: t - last_reset[v] for v in group}
        for v in group:
            delta = t - last_reset[v]
            if delta:
                for q in voter_projects[v]:
                    if q in reset_sum:
                        reset_sum[q] += delta
            last_reset[v] = t
        del reset_sum[p]
        spent += cost
        selected.append(p)
        events.append(PhragmenEvent(t, p, frozenset(group), credits))

    trace = PhragmenTrace(tuple(events), stop_reason, stop_project, stop_time)
    return Outcome.from_selection(instance, "phragmen", selected, trace)


# --------------------------------------------------------------------------
# Greedy approval and exhaustion


@dataclass(frozen=True)
class GreedyTrace:
    order: tuple[str, ...]
    skipped: tuple[str, ...]
    stop_first: bool
    base: object = None


def _greedy_scan(
    instance: PbInstance,
    candidates: Iterable[str],
    budget_left: Fraction,
    tie_break: TieBreak,
    stop_first: bool,
):
    scores = instance.approval_scores
    order = sorted(candidates, key=lambda p: (-scores[p], tie_break.key(p)))
    taken, skipped = [], []
    for p in order:
        c = instance.costs[p]
        if c <= budget_left:
            taken.append(p)
            budget_left -= c
        else:
            skipped.append(p)
            if stop_first:
                break
    return order, taken, skipped


def run_greedy(instance: PbInstance, tie_break: TieBreak = LEXICOGRAPHIC, stop_first: bool = False) -> Outcome:
    """Greedy approval: fund projects by descending approval score.

    Projects that do not fit are skipped and the scan continues, unless
    ``stop_first`` is set, in which case the scan ends at the first misfit.
    """
    check_instance(instance)
    tie_break.check_total(instance)
    order, taken, skipped = _greedy_scan(instance, instance.projects, instance.budget, tie_break, stop_first)
    return Outcome.from_selection(instance, "greedy", taken, GreedyTrace(tuple(order), tuple(skipped), stop_first))


def exhaust(
    instance: PbInstance,
    base: Outcome,
    tie_break: TieBreak = LEXICOGRAPHIC,
    stop_first: bool = False,
) -> Outcome:
    """Spend what ``base`` left over with a greedy scan of the unselected projects."""
    if base.total_cost > instance.budget:
        raise ValueError("base outcome is infeasible")
    chosen = base.selected_set
    rest = [p for p in instance.projects if p not in chosen]
    order, taken, skipped = _greedy_scan(instance, rest, instance.budget - base.total_cost, tie_break, stop_first)
    trace = GreedyTrace(tuple(order), tuple(skipped), stop_first, base=base.trace)
    return Outcome.from_selection(instance, base.rule + "-exh", base.selected + tuple(taken), trace)


RULES = ("mes", "mes-exh", "phragmen", "phragmen-exh", "greedy")


def run_rule(
    name: str,
    instance: PbInstance,
    tie_break: TieBreak = LEXICOGRAPHIC,
    allowance: bool | str = False,
    stop_first: bool = False,
) -> Outcome:
    """Run a rule by its CLI name (see :data:`RULES`)."""
    if name == "mes":
        return run_mes(instance, tie_break, allowance)
    if name == "mes-exh":
        return exhaust(instance, run_mes(instance, tie_break, allowance), tie_break, stop_first)
    if name == "phragmen":
        return run_phragmen(instance, tie_break)
    if name == "phragmen-exh":
        return exhaust(instance, run_phragmen(instance, tie_break), tie_break, stop_first)
    if name == "greedy":
        return run_greedy(instance, tie_break, stop_first)
    raise ValueError(f"unknown rule {name!r}; expected one of {', '.join(RULES)}")


def run_rules(
    instance: PbInstance,
    rules: Iterable[str] = RULES,
    tie_break: TieBreak = LEXICOGRAPHIC,
    allowance: bool | str = False,
    stop_first: bool = False,
) -> dict[str, Outcome]:
    """Outcomes keyed by rule name; exhausted variants reuse the base run."""
    rules = list(rules)
    unknown = [r for r in rules if r not in RULES]
    if unknown:
        raise ValueError(f"unknown rules {unknown}; expected names from {', '.join(RULES)}")
    base: dict[str, Outcome] = {}
    out: dict[str, Outcome] = {}
    for r in rules:
        if r == "greedy":
            out[r] = run_greedy(instance, tie_break, stop_first)
            continue
        root = r.removesuffix("-exh")
        if root not in base:
            base[root] = run_mes(instance, tie_break, allowance) if root == "mes" else run_phragmen(instance, tie_break)
        out[r] = base[root] if r == root else exhaust(instance, base[root], tie_break, stop_first)
    return out


# --------------------------------------------------------------------------
# Line-oriented trace records


def _fmt_map(values: Mapping[str, Fraction]) -> str:
    return ",".join(f"{k}={format_rational(values[k])}" for k in sorted(values)) or "-"


def _trace_lines(trace) -> list[str]:
    lines = []
    if isinstance(trace, MesTrace):
        lines.append(f"endowment\t{format_rational(trace.initial_endowment)}")
        lines.append(f"allowance\t{int(trace.allowance_mode)}")
        for i, r in enumerate(trace.rounds, 1):
            lines.append(
                f"round\t{i}\t{r.project}\t{format_rational(r.rho)}\t{_fmt_map(r.payments)}\t{_fmt_map(r.injected)}"
            )
    elif isinstance(trace, PhragmenTrace):
        for i, e in enumerate(trace.events, 1):
            lines.append(f"event\t{i}\t{e.project}\t{format_rational(e.time)}\t{_fmt_map(e.credits_reset)}")
        stop = f"stop\t{trace.stop_reason}"
        if trace.stopped_at_project is not None:
            stop += f"\t{trace.stopped_at_project}\t{format_rational(trace.stopped_at_time)}"
        lines.append(stop)
    elif isinstance(trace, GreedyTrace):
        if trace.base is not None:
            lines.extend(_trace_lines(trace.base))
        lines.append("greedy_order\t" + (",".join(trace.order) or "-"))
        lines.append("greedy_skipped\t" + (",".join(trace.skipped) or "-"))
    return lines


def format_trace(outcome: Outcome) -> str:
    """Serialise an outcome and its trace, one record per line, tab separated."""
    lines = [f"rule\t{outcome.rule}"]
    lines.extend(_trace_lines(outcome.trace))
    for i, p in enumerate(outcome.selected, 1):
        lines.append(f"selected\t{i}\t{p}")
    lines.append(f"total_cost\t{format_rational(outcome.total_cost)}")
    return "\n".join(lines) + "\n"
