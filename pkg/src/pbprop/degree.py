"""Sampled proportionality degree, EJR checking and payment-bound checking.

The sampled degree follows a fixed procedure: run a rule, then for every
subset size ``k`` draw ``min(C(m, k), samples_per_k)`` distinct project sets
``T``; for each ``T`` take the ``ceil(n*cost(T)/B)`` least satisfied voters
among those approving all of ``T`` and record their average satisfaction.
Per-``k`` means are averaged into one number per dataset.

Random draws use numpy's Philox4x64-10 counter-based generator keyed by
``(seed, k)``, so results do not depend on how the work is split across
processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from pbprop.core import (
    Outcome,
    PbInstance,
    VoterGroup,
    is_cohesive,
    required_group_size,
    supporter_pool,
)
from pbprop.rules import MesTrace

__all__ = [
    "SamplePlan",
    "CohesiveGroupReport",
    "KStats",
    "DegreeReport",
    "EjrViolation",
    "CheckerTooLarge",
    "sample_subsets",
    "min_avg_group",
    "degree_report",
    "degree_reports",
    "check_ejr",
    "check_lemma1",
]


@dataclass(frozen=True)
class SamplePlan:
    seed: int
    k_max: int = 15
    samples_per_k: int = 5000

    def __post_init__(self):
        if self.samples_per_k < 1:
            raise ValueError("samples_per_k must be at least 1")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def k_range(self, m: int) -> range:
        return range(1, min(m, self.k_max) + 1)

    def effective_samples(self, m: int, k: int) -> int:
        return min(math.comb(m, k), self.samples_per_k)


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


def _sample_indices(m: int, k: int, samples: int, seed: int) -> list[tuple[int, ...]]:
    if not 1 <= k <= m:
        raise ValueError(f"subset size k={k} outside 1..{m}")
    total = math.comb(m, k)
    if total <= samples:
        return list(combinations(range(m), k))
    rng = _rng(seed, k)
    if total <= 4 * samples:
        everything = list(combinations(range(m), k))
        return [everything[i] for i in rng.permutation(total)[:samples]]
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    while len(out) < samples:
        batch = np.sort(rng.random((samples, m)).argsort(axis=1)[:, :k], axis=1)
        for row in batch.tolist():
            t = tuple(row)
            if t not in seen:
                seen.add(t)
                out.append(t)
                if len(out) == samples:
                    break
    return out


def sample_subsets(instance: PbInstance, plan: SamplePlan, k: int) -> list[frozenset[str]]:
    """Distinct size-``k`` project sets; all of them when there are few enough."""
    idx = _sample_indices(instance.m, k, plan.samples_per_k, plan.seed)
    return [frozenset(instance.projects[i] for i in t) for t in idx]


@dataclass(frozen=True)
class CohesiveGroupReport:
    T: frozenset[str]
    pool_size: int
    required_size: int | None
    group: VoterGroup | None
    avg_satisfaction: Fraction | None

    @property
    def status(self) -> str:
        return "measured" if self.group is not None else "no-cohesive-group"

    @property
    def capped(self) -> Fraction | None:
        if self.avg_satisfaction is None:
            return None
        return min(Fraction(len(self.T)), self.avg_satisfaction)


def min_avg_group(instance: PbInstance, outcome: Outcome, T: Iterable[str]) -> CohesiveGroupReport:
    """Least satisfied ``T``-cohesive group of minimum size.

    Ties between equally satisfied voters go to the smaller voter id.
    """
    T = frozenset(T)
    if not T:
        raise ValueError("T must be non-empty")
    pool = supporter_pool(instance, T)
    need = required_group_size(instance, T)
    if need is None or len(pool) < need:
        return CohesiveGroupReport(T, len(pool), need, None, None)
    sat = outcome.satisfaction
    chosen = sorted(pool, key=lambda v: (sat[v], v))[:need]
    avg = Fraction(sum(sat[v] for v in chosen), need)
    return CohesiveGroupReport(T, len(pool), need, VoterGroup(frozenset(chosen)), avg)


# --------------------------------------------------------------------------
# vectorised degree pipeline


@dataclass(frozen=True)
class KStats:
    k: int
    samples: int
    measured: int
    d_k: Fraction | None
    d_k_capped: Fraction | None


@dataclass(frozen=True)
class DegreeReport:
    rule: str
    per_k: Mapping[int, KStats]
    dataset_average: Fraction | None
    dataset_average_capped: Fraction | None = None

    @property
    def status(self) -> str:
        return "ok" if self.dataset_average is not None else "no-cohesive-groups"


@dataclass
class _Packed:
    """Integer/bitmask view of an instance, cheap to ship to worker processes."""

    n: int
    m: int
    words: np.ndarray  # (n, W) uint64 approval bitmasks
    costs: list[int]  # costs scaled to integers
    budget: int
    sats: dict[str, np.ndarray] = field(default_factory=dict)


def _pack(instance: PbInstance, outcomes: Mapping[str, Outcome]) -> _Packed:
    n, m = instance.n, instance.m
    n_words = (m + 63) // 64
    words = np.zeros((n, n_words), dtype=np.uint64)
    pidx = instance.project_index
    for i, v in enumerate(instance.voters):
        for p in instance.approvals[v]:
            j = pidx[p]
            words[i, j // 64] |= np.uint64(1 << (j % 64))
    scale = math.lcm(instance.budget.denominator, *(instance.costs[p].denominator for p in instance.projects))
    costs = [int(instance.costs[p] * scale) for p in instance.projects]
    budget = int(instance.budget * scale)
    sats = {
        name: np.array([o.satisfaction[v] for v in instance.voters], dtype=np.int64)
        for name, o in outcomes.items()
    }
    return _Packed(n, m, words, costs, budget, sats)


def _subset_words(subsets: Sequence[tuple[int, ...]], n_words: int) -> np.ndarray:
    out = np.zeros((len(subsets), n_words), dtype=np.uint64)
    for s, t in enumerate(subsets):
        for j in t:
            out[s, j // 64] |= np.uint64(1 << (j % 64))
    return out


def _evaluate_k(packed: _Packed, k: int, samples: int, seed: int, chunk: int = 1000):
    """Return ``{rule: (samples, measured, sum_raw, sum_capped)}`` for one ``k``.

    Sums are exact Fractions built from per-sample integer totals.
    """
    subsets = _sample_indices(packed.m, k, samples, seed)
    n_words = packed.words.shape[1]
    tw = _subset_words(subsets, n_words)
    costsum = [sum(packed.costs[j] for j in t) for t in subsets]
    if packed.budget == 0:
        required = np.full(len(subsets), packed.n + 1, dtype=np.int64)
    else:
        required = np.array(
            [min(-((-packed.n * c) // packed.budget), packed.n + 1) for c in costsum], dtype=np.int64
        )

    # by rule: list of (required, raw_sum, capped_sum) for measured samples
    acc: dict[str, list[np.ndarray]] = {name: [] for name in packed.sats}
    onehots = {}
    for name, sat in packed.sats.items():
        top = int(sat.max()) + 1 if len(sat) else 1
        oh = np.zeros((packed.n, top), dtype=np.float64)
        oh[np.arange(packed.n), sat] = 1.0
        onehots[name] = oh

    for start in range(0, len(subsets), chunk):
        stop = min(start + chunk, len(subsets))
        part = tw[start:stop]
        pool = np.ones((stop - start, packed.n), dtype=bool)
        for w in range(n_words):
            tcol = part[:, w][:, None]
            pool &= (packed.words[None, :, w] & tcol) == tcol
        pool_size = pool.sum(axis=1)
        req = required[start:stop]
        ok = pool_size >= req
        if not ok.any():
            continue
        pool_f = pool[ok].astype(np.float64)
        r = req[ok]
        for name, oh in onehots.items():
            counts = np.rint(pool_f @ oh).astype(np.int64)
            cum = np.cumsum(counts, axis=1)
            prev = cum - counts
            take = np.clip(np.minimum(cum, r[:, None]) - prev, 0, None)
            raw = (take * np.arange(counts.shape[1], dtype=np.int64)).sum(axis=1)
            capped = np.minimum(raw, k * r)
            acc[name].append(np.stack([r, raw, capped], axis=1))

    result = {}
    for name, parts in acc.items():
        if parts:
            rows = np.concatenate(parts)
            measured = len(rows)
            raw_total = Fraction(0)
            cap_total = Fraction(0)
            for rv in np.unique(rows[:, 0]):
                sel = rows[rows[:, 0] == rv]
                raw_total += Fraction(int(sel[:, 1].sum()), int(rv))
                cap_total += Fraction(int(sel[:, 2].sum()), int(rv))
        else:
            measured, raw_total, cap_total = 0, Fraction(0), Fraction(0)
        result[name] = (len(subsets), measured, raw_total, cap_total)
    return result


def _evaluate_k_job(args):
    return args[1], _evaluate_k(*args)


def degree_reports(
    instance: PbInstance,
    outcomes: Mapping[str, Outcome],
    plan: SamplePlan,
    workers: int = 1,
) -> dict[str, DegreeReport]:
    """Sampled degree for several outcomes on one instance.

    All outcomes are scored against the same sampled sets. ``workers > 1``
    spreads subset sizes over processes; the output is identical either way.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    packed = _pack(instance, outcomes)
    ks = list(plan.k_range(instance.m))
    jobs = [(packed, k, plan.effective_samples(instance.m, k), plan.seed) for k in ks]
    if workers == 1 or len(jobs) == 1:
        results = dict(_evaluate_k_job(j) for j in jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = dict(ex.map(_evaluate_k_job, jobs))

    reports = {}
    for name in outcomes:
        per_k = {}
        for k in ks:
            samples, measured, raw, cap = results[k][name]
            per_k[k] = KStats(
                k,
                samples,
                measured,
                raw / measured if measured else None,
                cap / measured if measured else None,
            )
        measured_k = [s for s in per_k.values() if s.measured]
        if measured_k:
            avg = sum((s.d_k for s in measured_k), Fraction(0)) / len(measured_k)
            avg_cap = sum((s.d_k_capped for s in measured_k), Fraction(0)) / len(measured_k)
        else:
            avg = avg_cap = None
        reports[name] = DegreeReport(name, per_k, avg, avg_cap)
    return reports


def degree_report(instance: PbInstance, outcome: Outcome, plan: SamplePlan, workers: int = 1) -> DegreeReport:
    return degree_reports(instance, {outcome.rule: outcome}, plan, workers)[outcome.rule]


# --------------------------------------------------------------------------
# EJR


class CheckerTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class EjrViolation:
    T: frozenset[str]
    group: frozenset[str]

    def describe(self) -> str:
        return f"T={{{','.join(sorted(self.T))}}} group={{{','.join(sorted(self.group))}}}"


def check_ejr(instance: PbInstance, outcome: Outcome, max_T_size: int | None = None, limit: int = 5_000_000) -> list[EjrViolation]:
    """All sets ``T`` (``|T| <= max_T_size``) with a cohesive group that EJR leaves unserved.

    For each affordable ``T`` the voters approving all of ``T`` but holding
    fewer than ``|T|`` funded approvals are collected; if they are numerous
    enough to be ``T``-cohesive on their own, ``T`` is reported.
    """
    m = instance.m
    max_T_size = m if max_T_size is None else min(max_T_size, m)
    if max_T_size < 1:
        return []
    worst_case = sum(math.comb(m, s) for s in range(1, max_T_size + 1))
    if worst_case > limit:
        raise CheckerTooLarge(
            f"up to {worst_case} project sets to inspect (limit {limit}); pass a smaller max_T_size"
        )
    n = instance.n
    B = instance.budget
    if B == 0:
        return []
    sat = outcome.satisfaction
    projects = instance.projects
    supporters = instance.supporters
    voter_bit = {v: 1 << i for i, v in enumerate(instance.voters)}
    sup_mask = [sum(voter_bit[v] for v in supporters[p]) for p in projects]
    costs = [instance.costs[p] for p in projects]
    voters = instance.voters
    violations: list[EjrViolation] = []

    def visit(start: int, chosen: list[int], pool: int, cost: Fraction):
        for j in range(start, m):
            new_cost = cost + costs[j]
            if new_cost > B:
                continue
            new_pool = pool & sup_mask[j]
            if not new_pool:
                continue
            chosen.append(j)
            size = len(chosen)
            need = math.ceil(n * new_cost / B)
            if new_pool.bit_count() >= need:
                short = [voters[i] for i in _bits(new_pool) if sat[voters[i]] < size]
                if len(short) >= need:
                    violations.append(EjrViolation(frozenset(projects[c] for c in chosen), frozenset(short)))
            if size < max_T_size:
                visit(j + 1, chosen, new_pool, new_cost)
            chosen.pop()

    visit(0, [], (1 << n) - 1, Fraction(0))
    return violations


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


# --------------------------------------------------------------------------
# payment bound along an MES run


def lemma1_relevant_rounds(instance: PbInstance, trace: MesTrace, T: Iterable[str], V: Iterable[str]) -> list[int]:
    """Indices of rounds where a member of ``V`` approves the selected project
    while some unselected project of ``T`` is still affordable from ``V``'s
    pooled leftovers."""
    T = frozenset(T)
    members = sorted(V)
    out = []
    done: set[str] = set()
    for idx, rnd in enumerate(trace.rounds):
        left = trace.leftovers_before(idx, members)
        pooled = sum(left.values(), Fraction(0))
        approved = any(rnd.project in instance.approvals[v] for v in members)
        affordable = any(pooled >= instance.costs[t] for t in T - done)
        if approved and affordable:
            out.append(idx)
        done.add(rnd.project)
    return out


def check_lemma1(instance: PbInstance, trace: MesTrace, T: Iterable[str], V: VoterGroup | Iterable[str]) -> bool:
    """Check the per-voter payment bound along an MES trace.

    Over the relevant rounds (see :func:`lemma1_relevant_rounds`) each
    member's largest payment is taken; the check passes iff the members can
    be ordered so that the one at position ``i`` never paid more than
    ``max_{t in T} cost(t) / (|V| - i)``. Sorting payments ascending gives
    such an ordering whenever one exists.
    """
    T = frozenset(T)
    members = V.members if isinstance(V, VoterGroup) else frozenset(V)
    if not is_cohesive(instance, T, members):
        raise ValueError("V is not T-cohesive")
    cap = max(instance.costs[t] for t in T)
    largest = {v: Fraction(0) for v in members}
    for idx in lemma1_relevant_rounds(instance, trace, T, members):
        pays = trace.rounds[idx].payments
        for v in members:
            p = pays.get(v)
            if p is not None and p > largest[v]:
                largest[v] = p
    n_v = len(members)
    return all(p * (n_v - i) <= cap for i, p in enumerate(sorted(largest.values())))
