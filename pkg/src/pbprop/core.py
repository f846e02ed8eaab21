"""Data model for approval-based participatory budgeting.

All money is held as :class:`fractions.Fraction`. Nothing in rule execution
or cohesiveness testing touches floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping

Money = Fraction


class InvalidInstanceError(ValueError):
    """Raised when an operation receives an instance that fails validation."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid PB instance: " + "; ".join(self.violations))


def as_money(value: Any) -> Fraction:
    """Convert ``int``, ``str`` or ``Fraction`` to an exact rational.

    Floats are refused: a binary float has usually already lost the
    decimal value the caller meant.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not money")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a str, int or Fraction")
    raise TypeError(f"cannot interpret {type(value).__name__} as money")


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class PbInstance:
    """A PB instance ``(N, projects, B, cost, approvals)``.

    Voters and projects are kept in lexicographic id order, which is also the
    default tie-breaking order. Use :meth:`build` for construction from plain
    mappings; the raw constructor trusts its arguments.
    """

    voters: tuple[str, ...]
    projects: tuple[str, ...]
    budget: Fraction
    costs: Mapping[str, Fraction]
    approvals: Mapping[str, frozenset[str]]
    meta: Mapping[str, str] = field(default_factory=dict, compare=False)

    @classmethod
    def build(
        cls,
        budget: Any,
        costs: Mapping[str, Any],
        approvals: Mapping[str, Iterable[str]],
        meta: Mapping[str, str] | None = None,
    ) -> "PbInstance":
        projects = tuple(sorted(costs))
        voters = tuple(sorted(approvals))
        return cls(
            voters=voters,
            projects=projects,
            budget=as_money(budget),
            costs={p: as_money(costs[p]) for p in projects},
            approvals={v: frozenset(approvals[v]) for v in voters},
            meta=dict(meta or {}),
        )

    @property
    def n(self) -> int:
        return len(self.voters)

    @property
    def m(self) -> int:
        return len(self.projects)

    def cost_of(self, projects: Iterable[str]) -> Fraction:
        return sum((self.costs[p] for p in projects), Fraction(0))

    @cached_property
    def supporters(self) -> dict[str, tuple[str, ...]]:
        """Project id -> voters approving it, in voter order."""
        sup: dict[str, list[str]] = {p: [] for p in self.projects}
        for v in self.voters:
            for p in self.approvals[v]:
                if p in sup:
                    sup[p].append(v)
        return {p: tuple(vs) for p, vs in sup.items()}

    @cached_property
    def project_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.projects)}

    @cached_property
    def approval_scores(self) -> dict[str, int]:
        return {p: len(vs) for p, vs in self.supporters.items()}

    def __hash__(self) -> int:
        return hash((self.voters, self.projects, self.budget))


@dataclass(frozen=True)
class VoterGroup:
    members: frozenset[str]

    def __post_init__(self):
        if not isinstance(self.members, frozenset):
            object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise ValueError("a voter group needs at least one member")

    @property
    def size(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Outcome:
    """A feasible proposal plus the rule's execution record.

    ``selected`` is in selection order. ``trace`` is rule specific (see
    :mod:`pbprop.rules`).
    """

    rule: str
    selected: tuple[str, ...]
    total_cost: Fraction
    satisfaction: Mapping[str, int]
    trace: Any = field(default=None, compare=False)

    @classmethod
    def from_selection(cls, instance: PbInstance, rule: str, selected: Iterable[str], trace: Any = None) -> "Outcome":
        selected = tuple(selected)
        chosen = frozenset(selected)
        return cls(
            rule=rule,
            selected=selected,
            total_cost=instance.cost_of(selected),
            satisfaction={v: len(instance.approvals[v] & chosen) for v in instance.voters},
            trace=trace,
        )

    @property
    def selected_set(self) -> frozenset[str]:
        return frozenset(self.selected)


def validate(instance: PbInstance) -> list[str]:
    """Return one description per violated instance invariant (empty if valid)."""
    problems = []
    if len(instance.voters) == 0:
        problems.append("instance has no voters")
    if len(instance.projects) == 0:
        problems.append("instance has no projects")
    if len(set(instance.voters)) != len(instance.voters):
        problems.append("duplicate voter ids")
    if len(set(instance.projects)) != len(instance.projects):
        problems.append("duplicate project ids")
    if instance.budget < 0:
        problems.append(f"negative budget {instance.budget}")
    known = set(instance.projects)
    for p in instance.projects:
        c = instance.costs.get(p)
        if c is None:
            problems.append(f"project {p!r} has no cost")
        elif c <= 0:
            problems.append(f"project {p!r} has non-positive cost {c}")
    for p in set(instance.costs) - known:
        problems.append(f"cost given for unlisted project {p!r}")
    for v in instance.voters:
        if v not in instance.approvals:
            problems.append(f"voter {v!r} has no approval set")
            continue
        for p in sorted(instance.approvals[v] - known):
            problems.append(f"voter {v!r} approves unknown project {p!r}")
    return problems


def check_instance(instance: PbInstance) -> PbInstance:
    problems = validate(instance)
    if problems:
        raise InvalidInstanceError(problems)
    return instance


def satisfaction(instance: PbInstance, proposal: Iterable[str], voter: str) -> int:
    """``|proposal ∩ A_voter|``."""
    try:
        approved = instance.approvals[voter]
    except KeyError:
        raise KeyError(f"unknown voter {voter!r}") from None
    return len(approved.intersection(proposal))


def average_satisfaction(instance: PbInstance, proposal: Iterable[str], group: VoterGroup | Iterable[str]) -> Fraction:
    members = group.members if isinstance(group, VoterGroup) else frozenset(group)
    if not members:
        raise ValueError("average satisfaction of an empty group is undefined")
    proposal = frozenset(proposal)
    total = sum(satisfaction(instance, proposal, v) for v in members)
    return Fraction(total, len(members))


def _check_project_set(instance: PbInstance, T: Iterable[str]) -> frozenset[str]:
    T = frozenset(T)
    if not T:
        raise ValueError("cohesiveness is undefined for an empty project set")
    unknown = T - set(instance.projects)
    if unknown:
        raise KeyError(f"unknown projects {sorted(unknown)}")
    return T


def is_cohesive(instance: PbInstance, T: Iterable[str], group: VoterGroup | Iterable[str]) -> bool:
    """True iff every member approves all of ``T`` and ``cost(T)/B <= |V|/n``."""
    T = _check_project_set(instance, T)
    members = group.members if isinstance(group, VoterGroup) else frozenset(group)
    if not members:
        return False
    for v in members:
        if v not in instance.approvals:
            raise KeyError(f"unknown voter {v!r}")
        if not T <= instance.approvals[v]:
            return False
    # cost(T)/B <= |V|/n, cleared of denominators
    return instance.cost_of(T) * instance.n <= len(members) * instance.budget


def supporter_pool(instance: PbInstance, T: Iterable[str]) -> frozenset[str]:
    """All voters approving every project of ``T``. May be empty."""
    T = frozenset(T)
    return frozenset(v for v in instance.voters if T <= instance.approvals[v])


def required_group_size(instance: PbInstance, T: Iterable[str]) -> int | None:
    """Smallest size a ``T``-cohesive group can have, ``ceil(n*cost(T)/B)``.

    ``None`` when the budget is zero (no group can be cohesive).
    """
    if instance.budget == 0:
        return None
    return math.ceil(instance.n * instance.cost_of(T) / instance.budget)


def capped_satisfaction(value: Fraction, t_size: int) -> Fraction:
    """The guarantee-relevant value ``min(|T|, avg)``."""
    return min(Fraction(t_size), value)
