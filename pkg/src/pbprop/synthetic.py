"""Seeded random instances for property tests, benchmarks and fixtures."""

from __future__ import annotations

import random
from fractions import Fraction

from pbprop.core import PbInstance


def random_instance(
    rng: random.Random,
    n_max: int = 12,
    m_max: int = 8,
    cost_max: int = 20,
    n_min: int = 2,
    m_min: int = 2,
) -> PbInstance:
    """Small instance with integer costs in ``1..cost_max``.

    Each voter approves each project independently with a per-instance
    probability; the budget lies between the largest cost and the total cost.
    """
    n = rng.randint(n_min, n_max)
    m = rng.randint(m_min, m_max)
    density = rng.uniform(0.2, 0.7)
    projects = [f"p{j}" for j in range(m)]
    costs = {p: rng.randint(1, cost_max) for p in projects}
    total = sum(costs.values())
    budget = rng.randint(max(costs.values()), total)
    approvals = {
        f"v{i:02d}": {p for p in projects if rng.random() < density}
        for i in range(n)
    }
    return PbInstance.build(budget, costs, approvals)


def random_corpus(seed: int, size: int, **kwargs) -> list[PbInstance]:
    rng = random.Random(seed)
    return [random_instance(rng, **kwargs) for _ in range(size)]


def large_instance(seed: int, n: int = 2000, m: int = 25, clusters: int = 4) -> PbInstance:
    """Pabulib-sized instance with clustered, correlated ballots.

    Voters fall into ``clusters`` neighbourhoods, each with its own project
    popularity profile. Costs are multiples of 1000 between 10 000 and
    150 000; the budget is roughly half the total cost.
    """
    rng = random.Random(seed)
    projects = [f"{j + 1:03d}" for j in range(m)]
    profiles = [{p: rng.choice((0.05, 0.15, 0.6, 0.85)) for p in projects} for _ in range(clusters)]
    costs = {p: 1000 * rng.randint(10, 150) for p in projects}
    budget = Fraction(sum(costs.values()) // 2000 * 1000)
    approvals = {}
    for i in range(n):
        profile = profiles[rng.randrange(clusters)]
        approvals[f"{i + 1:05d}"] = {p for p in projects if rng.random() < profile[p]}
    return PbInstance.build(budget, costs, approvals)
