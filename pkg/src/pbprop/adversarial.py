"""Worst-case instance families and the analytic bounds they are measured against.

Three constructions are provided:

* :func:`gen_mes_upper` -- nested voter blocks ``Q_0 .. Q_{nV-2}`` each owning a
  private project bundle, with one member of every block plus one loner
  forming the group ``V`` that approves ``T``.
* :func:`gen_phragmen_upper` -- staggered projects ``b_j`` that keep ``V``'s
  credits draining one slice at a time, and a second family ``c_j`` that soaks
  up the remaining budget.
* :func:`gen_anyrule` -- a ring of equally sized groups where any feasible
  proposal leaves one group nearly unserved.

Generators never round: every derived quantity must come out exact or a
:class:`ConstructionError` names the failing condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from pbprop.core import PbInstance, VoterGroup, as_money, is_cohesive

__all__ = [
    "ConstructionError",
    "BoundValues",
    "evaluate_bounds",
    "bounds_for",
    "MesUpperSpec",
    "PhragmenUpperSpec",
    "AnyRuleSpec",
    "Family",
    "gen_mes_upper",
    "gen_phragmen_upper",
    "gen_anyrule",
]


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class BoundValues:
    mes_lower: Fraction
    mes_upper: Fraction
    phragmen_lower: Fraction
    phragmen_upper: Fraction
    ejr_lower: Fraction
    anyrule_upper: Fraction

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.__dict__)


def evaluate_bounds(cost_T: Any, min_cost: Any, max_cost: Any) -> BoundValues:
    """All six degree bounds for a project set with the given cost profile."""
    cost_T, lo, hi = as_money(cost_T), as_money(min_cost), as_money(max_cost)
    if not (0 < lo <= hi <= cost_T):
        raise ValueError("need 0 < min cost <= max cost <= cost(T)")
    ratio = cost_T / hi
    lower = (ratio - 1) / 2
    return BoundValues(
        mes_lower=lower,
        mes_upper=ratio / 2 + 1,
        phragmen_lower=lower,
        phragmen_upper=ratio / 2,
        ejr_lower=lo / hi * lower,
        anyrule_upper=ratio - 1,
    )


def bounds_for(instance: PbInstance, T) -> BoundValues:
    costs = [instance.costs[t] for t in T]
    return evaluate_bounds(sum(costs), min(costs), max(costs))


@dataclass(frozen=True)
class Family:
    """A generated instance with its distinguished project set and groups.

    ``groups[i]`` is cohesive for ``group_targets[i]``; for the two rule
    specific constructions there is a single group ``V`` for ``T``.
    """

    name: str
    instance: PbInstance
    T: frozenset[str]
    groups: tuple[VoterGroup, ...]
    group_targets: tuple[frozenset[str], ...]
    params: dict

    @property
    def V(self) -> VoterGroup:
        return self.groups[0]

    @property
    def bounds(self) -> BoundValues:
        return bounds_for(self.instance, self.T)


def _require_cohesive(instance: PbInstance, T, group, what: str) -> None:
    if not is_cohesive(instance, T, group):
        raise ConstructionError(f"{what} is not cohesive for its project set")


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MesUpperSpec:
    n_V: int
    T_size: int
    unit_cost: Fraction = Fraction(1)
    delta: Fraction = Fraction(0)
    budget: Fraction | None = None
    integral_budget: bool = False


def gen_mes_upper(spec: MesUpperSpec) -> Family:
    """Nested-block instance on which MES leaves ``V`` about half served.

    ``Q_j`` has ``n_V - j`` voters (``j = 0 .. n_V-2``) and approves its own
    bundle ``Z_j`` of ``T_size`` projects. Member 0 of every ``Q_j`` and the
    loner ``l`` form ``V`` and approve ``T``. ``delta`` raises the cost of
    the first project of ``T`` (and of every ``Z_j``). The budget is fixed by
    ``B/n = cost(T)/n_V``.
    """
    n_V, size = spec.n_V, spec.T_size
    if n_V < 2:
        raise ConstructionError("n_V must be at least 2")
    if size < 1:
        raise ConstructionError("T_size must be at least 1")
    unit = as_money(spec.unit_cost)
    delta = as_money(spec.delta)
    if unit <= 0 or delta < 0:
        raise ConstructionError("unit_cost must be positive and delta non-negative")
    bundle_costs = [unit + delta] + [unit] * (size - 1)

    T = [f"t{i:03d}" for i in range(size)]
    costs = {t: c for t, c in zip(T, bundle_costs)}
    approvals: dict[str, set[str]] = {}
    blocks = []
    V = []
    for j in range(n_V - 1):
        Z = [f"z{j:03d}-{i:03d}" for i in range(size)]
        costs.update(zip(Z, bundle_costs))
        block = [f"q{j:03d}-{i:03d}" for i in range(n_V - j)]
        for v in block:
            approvals[v] = set(Z)
        approvals[block[0]] |= set(T)
        V.append(block[0])
        blocks.append((block, Z))
    approvals["l"] = set(T)
    V.append("l")

    n = len(approvals)
    cost_T = sum(bundle_costs)
    budget = n * cost_T / n_V
    if spec.budget is not None and as_money(spec.budget) != budget:
        raise ConstructionError(
            f"budget {spec.budget} breaks B/n = cost(T)/n_V (needs B = {budget} for n = {n})"
        )
    if spec.integral_budget and budget.denominator != 1:
        raise ConstructionError(f"n*cost(T) = {n * cost_T} is not divisible by n_V = {n_V}")
    inst = PbInstance.build(budget, costs, approvals)

    _require_cohesive(inst, T, V, "V")
    _require_cohesive(inst, blocks[0][1], blocks[0][0], "Q_0")
    for j, (block, Z) in enumerate(blocks[1:], 1):
        if is_cohesive(inst, Z, block):
            raise ConstructionError(f"Q_{j} unexpectedly cohesive for Z_{j}")
    return Family(
        "mes-upper",
        inst,
        frozenset(T),
        (VoterGroup(frozenset(V)),),
        (frozenset(T),),
        {"n_V": n_V, "T_size": size, "unit_cost": unit, "delta": delta},
    )


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PhragmenUpperSpec:
    alpha: int
    beta: int = 1
    T_size: int = 1
    max_phase_projects: int | None = None


def phragmen_upper_parameters(alpha: int, beta: int) -> dict[str, int]:
    """Derived integers of the staggered construction.

    ``x = 2(B - cost(T))/cost(T) - 1 = 2*alpha - 3`` slices, ``R = beta*x``
    voters in ``V``, ``n = R*alpha`` voters overall, and every project costs
    ``n``.
    """
    if alpha < 3:
        raise ConstructionError("alpha must be at least 3 so that cost(T) < B/2")
    if beta < 1:
        raise ConstructionError("beta must be at least 1")
    x = 2 * alpha - 3
    R = beta * x
    n = R * alpha
    if R % x:
        raise ConstructionError(f"R = {R} is not divisible by x = {x}")
    if n - 2 * R < 0:
        raise ConstructionError("n - 2R must be non-negative")
    return {"x": x, "R": R, "n": n, "slice": R // x, "min_cost": n}


def gen_phragmen_upper(spec: PhragmenUpperSpec) -> Family:
    """Staggered instance on which Phragmén serves ``V`` roughly ``cost(T)/(2 min cost)``.

    Voters are ``1..n``. ``V = {1..R}`` approves ``T``. For ``j <= x``
    project ``b_j`` is approved by slice ``j`` of ``V`` plus voters
    ``R+1 .. n - j*R/x``; later ``b_j`` cycle through the slices of ``V``
    together with ``R+1 .. n-R``. Projects ``c_j`` are approved by the last
    ``R`` voters.
    """
    par = phragmen_upper_parameters(spec.alpha, spec.beta)
    if spec.T_size < 1:
        raise ConstructionError("T_size must be at least 1")
    x, R, n, sl = par["x"], par["R"], par["n"], par["slice"]
    cost = Fraction(n)
    cost_T = cost * spec.T_size
    budget = spec.alpha * cost_T
    slots = int(budget / cost)
    m1 = x + slots
    m2 = slots
    if spec.max_phase_projects is not None:
        m1 = max(x, min(m1, spec.max_phase_projects))
        m2 = min(m2, spec.max_phase_projects)

    vid = [None] + [f"v{i:05d}" for i in range(1, n + 1)]
    width = len(str(max(m1, m2, spec.T_size)))
    supporters: dict[str, list[int]] = {}
    for j in range(1, m1 + 1):
        if j <= x:
            head = range((j - 1) * sl + 1, j * sl + 1)
            tail = range(R + 1, n - j * sl + 1)
        else:
            s = (j - 1) % x
            head = range(s * sl + 1, (s + 1) * sl + 1)
            tail = range(R + 1, n - R + 1)
        supporters[f"b{j:0{width}d}"] = list(head) + list(tail)
    for j in range(1, m2 + 1):
        supporters[f"c{j:0{width}d}"] = list(range(n - R + 1, n + 1))
    T = [f"d{j:0{width}d}" for j in range(1, spec.T_size + 1)]
    for t in T:
        supporters[t] = list(range(1, R + 1))

    approvals: dict[str, set[str]] = {vid[i]: set() for i in range(1, n + 1)}
    for p, vs in supporters.items():
        for i in vs:
            approvals[vid[i]].add(p)
    inst = PbInstance.build(budget, {p: cost for p in supporters}, approvals)
    V = frozenset(vid[i] for i in range(1, R + 1))
    _require_cohesive(inst, T, V, "V")
    if len(supporters["b" + "1".zfill(width)]) != n - R:
        raise ConstructionError("b_1 must have n - R supporters")
    params = dict(par, alpha=spec.alpha, beta=spec.beta, T_size=spec.T_size, m1=m1, m2=m2)
    params["tau"] = budget / (budget - cost_T)
    return Family("phragmen-upper", inst, frozenset(T), (VoterGroup(V),), (frozenset(T),), params)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnyRuleSpec:
    budget_multiplier: int
    base_cost: Fraction = Fraction(1)
    T_size: int = 1

    @classmethod
    def from_budget(cls, budget: Any, base_cost: Any, T_size: int = 1) -> "AnyRuleSpec":
        budget, base_cost = as_money(budget), as_money(base_cost)
        q = budget / base_cost
        if q.denominator != 1:
            raise ConstructionError(f"budget {budget} is not divisible by base cost {base_cost}")
        return cls(int(q), base_cost, T_size)

    @classmethod
    def from_groups(cls, groups: int, base_cost: Any = 1, T_size: int = 1) -> "AnyRuleSpec":
        return cls(groups - 1, as_money(base_cost), T_size)


def gen_anyrule(spec: AnyRuleSpec) -> Family:
    """Ring of ``q+1`` groups, ``q = B/c``, each of size ``q+1``.

    Group ``j`` is ``q-1`` private voters plus the two voters it shares with
    its ring neighbours; it approves bundle ``j`` of ``T_size`` projects of
    cost ``c``. The budget is ``q*c*T_size``, so one bundle always goes
    unfunded. For ``T_size > 1`` every project of the base construction is
    replaced by a bundle approved by the same voters, and the budget is
    scaled by ``T_size``.
    """
    q = spec.budget_multiplier
    if q < 1:
        raise ConstructionError("need B/c >= 1")
    if spec.T_size < 1:
        raise ConstructionError("T_size must be at least 1")
    c = as_money(spec.base_cost)
    if c <= 0:
        raise ConstructionError("base cost must be positive")
    k = q + 1
    bundles = [[f"g{j:03d}-{i:03d}" for i in range(spec.T_size)] for j in range(k)]
    members: list[list[str]] = [[] for _ in range(k)]
    for j in range(k):
        for i in range(q - 1):
            members[j].append(f"x{j:03d}-{i:03d}")
    for j in range(k):
        s = f"s{j:03d}"
        members[j].append(s)
        members[(j + 1) % k].append(s)
    approvals: dict[str, set[str]] = {}
    for j in range(k):
        for v in members[j]:
            approvals.setdefault(v, set()).update(bundles[j])
    costs = {p: c for b in bundles for p in b}
    budget = q * c * spec.T_size
    inst = PbInstance.build(budget, costs, approvals)
    if inst.n != q * k:
        raise ConstructionError(f"expected {q * k} voters, built {inst.n}")
    groups = tuple(VoterGroup(frozenset(g)) for g in members)
    targets = tuple(frozenset(b) for b in bundles)
    for j, (g, b) in enumerate(zip(groups, targets)):
        _require_cohesive(inst, b, g, f"group {j}")
        if len(g) != k:
            raise ConstructionError(f"group {j} has {len(g)} voters, expected {k}")
    return Family(
        "anyrule",
        inst,
        targets[0],
        groups,
        targets,
        {"q": q, "groups": k, "base_cost": c, "T_size": spec.T_size, "gamma": 2 * c / (q * c)},
    )
