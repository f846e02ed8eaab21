"""Independent reference implementations used by the tests.

Nothing here imports rule or degree internals; the code is deliberately
naive so that it can be checked by eye.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def rho_by_breakpoints(cost, leftovers):
    """Smallest rho with sum(min(l, rho)) >= cost, by scanning breakpoints.

    f(rho) = sum(min(l, rho)) is piecewise linear with kinks at the
    leftovers. Find the first kink where f reaches the cost and interpolate
    back to the previous kink.
    """
    cost = Fraction(cost)
    leftovers = [Fraction(x) for x in leftovers]

    def f(r):
        return sum(min(l, r) for l in leftovers)

    if f(max(leftovers, default=Fraction(0))) < cost:
        return None
    prev = Fraction(0)
    for b in sorted(set(leftovers) | {Fraction(0)}):
        if f(b) >= cost:
            slope = sum(1 for l in leftovers if l > prev)
            return prev + (cost - f(prev)) / slope
        prev = b
    raise AssertionError("unreachable")


def phragmen_times(instance, events):
    """Replay a Phragmén event list and return, for every step, the exact
    earliest affordability time of every unselected supported project."""
    last = {v: Fraction(0) for v in instance.voters}
    chosen = set()
    steps = []
    for e in events:
        times = {}
        for p in instance.projects:
            sup = [v for v in instance.voters if p in instance.approvals[v]]
            if p in chosen or not sup:
                continue
            # balance(t) = sum(t - last[v]) = cost
            times[p] = (instance.costs[p] + sum(last[v] for v in sup)) / len(sup)
        steps.append(times)
        for v in instance.voters:
            if e.project in instance.approvals[v]:
                last[v] = e.time
        chosen.add(e.project)
    return steps


def cohesive(instance, T, group):
    """Cohesion written from scratch: all approve T, |V|/n >= cost(T)/B."""
    if not group:
        return False
    if any(not set(T) <= set(instance.approvals[v]) for v in group):
        return False
    return Fraction(len(group), instance.n) >= sum(instance.costs[t] for t in T) / instance.budget


def brute_min_avg(instance, selected, T):
    """Minimum average satisfaction over every T-cohesive subset of the
    supporters of T (None if there is none)."""
    W = set(selected)
    pool = [v for v in instance.voters if set(T) <= set(instance.approvals[v])]
    best = None
    for r in range(1, len(pool) + 1):
        for group in itertools.combinations(pool, r):
            if not cohesive(instance, T, group):
                continue
            avg = Fraction(sum(len(W & set(instance.approvals[v])) for v in group), r)
            if best is None or avg < best:
                best = avg
    return best


def brute_degree(instance, selected, k_max):
    """Exhaustive per-k averages and the dataset average over measured k."""
    per_k = {}
    for k in range(1, min(k_max, instance.m) + 1):
        vals = []
        for T in itertools.combinations(instance.projects, k):
            v = brute_min_avg(instance, selected, T)
            if v is not None:
                vals.append(v)
        per_k[k] = (len(vals), sum(vals, Fraction(0)) / len(vals) if vals else None)
    measured = [d for _, d in per_k.values() if d is not None]
    avg = sum(measured, Fraction(0)) / len(measured) if measured else None
    return per_k, avg


def ejr_violations(instance, selected, max_size):
    """All T (|T| <= max_size, cost(T) <= B) whose unsatisfied supporters form a cohesive group."""
    W = set(selected)
    out = []
    for k in range(1, max_size + 1):
        for T in itertools.combinations(instance.projects, k):
            if sum(instance.costs[t] for t in T) > instance.budget:
                continue
            short = [
                v
                for v in instance.voters
                if set(T) <= set(instance.approvals[v]) and len(W & set(instance.approvals[v])) < k
            ]
            if cohesive(instance, T, short):
                out.append(frozenset(T))
    return out
