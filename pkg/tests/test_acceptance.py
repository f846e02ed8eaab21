"""The ten acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line; the lines are
printed at the end of the pytest run and when this file is executed as a
script (``python3 tests/test_acceptance.py``).
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_LINES, FIXTURES
from oracles import brute_degree, phragmen_times, rho_by_breakpoints
from pbprop import cli
from pbprop.adversarial import (
    AnyRuleSpec,
    MesUpperSpec,
    PhragmenUpperSpec,
    gen_anyrule,
    gen_mes_upper,
    gen_phragmen_upper,
)
from pbprop.core import average_satisfaction, is_cohesive, supporter_pool
from pbprop.degree import SamplePlan, check_ejr, check_lemma1, degree_report, degree_reports, min_avg_group
from pbprop.pabulib_io import load_instance
from pbprop.rules import TieBreak, run_greedy, run_mes, run_phragmen, run_rules
from pbprop.synthetic import random_corpus

CORPUS_SEED = 20240611
HALF = Fraction(1, 2)


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


_corpus_cache: dict = {}


def corpus():
    """500 random instances, n <= 12, m <= 8, integer costs <= 20, with MES and Phragmén runs."""
    if not _corpus_cache:
        insts = random_corpus(CORPUS_SEED, 500, n_max=12, m_max=8, cost_max=20)
        _corpus_cache["runs"] = [(i, run_mes(i), run_phragmen(i)) for i in insts]
    return _corpus_cache["runs"]


# ---------------------------------------------------------------------------


def test_c1_hand_traces():
    t0 = time.perf_counter()
    problems = []
    tiny = load_instance(FIXTURES / "tiny.pbc")

    mes = run_mes(tiny)
    r = mes.trace.rounds
    if mes.selected != ("p1",) or len(r) != 1 or r[0].rho != 1:
        problems.append("mes selection")
    if dict(r[0].payments) != {v: 1 for v in ("v1", "v2", "v3", "v4")}:
        problems.append("mes payments")
    if any(x != 1 for x in r[0].leftover_after.values()):
        problems.append("mes leftovers")

    ph = run_phragmen(tiny)
    times = [(e.project, e.time) for e in ph.trace.events]
    if times != [("p1", Fraction(1)), ("p2", Fraction(3))] or ph.total_cost != 8:
        problems.append(f"phragmen events {times}")
    if dict(ph.trace.events[1].credits_reset) != {"v1": 2, "v2": 2}:
        problems.append("phragmen credits")

    g = run_greedy(load_instance(FIXTURES / "greedy.pbc"))
    if g.selected != ("a", "c") or g.trace.skipped != ("b",):
        problems.append(f"greedy {g.selected}")

    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 1
    record(1, ok, f"mismatches={problems or 'none'} runtime={elapsed:.3f}s (limit 1s)")
    assert ok


def test_c2_rho_tau_minimality():
    t0 = time.perf_counter()
    bad = 0
    checked_rounds = checked_events = 0
    for inst, mes, ph in corpus():
        # MES: leftovers before each round, every remaining candidate
        chosen = set()
        for idx, rnd in enumerate(mes.trace.rounds):
            left = mes.trace.leftovers_before(idx, inst.voters)
            rhos = {}
            for p in inst.projects:
                if p in chosen:
                    continue
                sup = [v for v in inst.voters if p in inst.approvals[v]]
                if sup:
                    rr = rho_by_breakpoints(inst.costs[p], [left[v] for v in sup])
                    if rr is not None:
                        rhos[p] = rr
            best = min(rhos.values())
            if rnd.rho != best or rhos.get(rnd.project) != best:
                bad += 1
            if rnd.project != min((p for p in rhos if rhos[p] == best)):
                bad += 1
            chosen.add(rnd.project)
            checked_rounds += 1
        # Phragmén: replayed affordability times
        for e, times in zip(ph.trace.events, phragmen_times(inst, ph.trace.events)):
            best = min(times.values())
            if e.time != best or times[e.project] != best:
                bad += 1
            checked_events += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 30
    record(
        2,
        ok,
        f"violations={bad} over {checked_rounds} MES rounds and {checked_events} Phragmen events, runtime={elapsed:.1f}s (limit 30s)",
    )
    assert ok


def test_c3_lower_bounds():
    violations = measured = 0
    for inst, mes, ph in corpus():
        for k in range(1, 5):
            for T in itertools.combinations(inst.projects, k):
                cost = inst.cost_of(T)
                bound = min(Fraction(k), HALF * (cost / max(inst.costs[t] for t in T) - 1))
                for out in (mes, ph):
                    rep = min_avg_group(inst, out, T)
                    if rep.group is None:
                        continue
                    measured += 1
                    if rep.avg_satisfaction < bound:
                        violations += 1
    ok = violations == 0
    record(3, ok, f"violations={violations} over {measured} measured (T, rule) pairs")
    assert ok


def test_c4_ejr():
    mes_viol = 0
    for inst, mes, _ in corpus():
        mes_viol += len(check_ejr(inst, mes, inst.m))
    starve = load_instance(FIXTURES / "starvation.pbc")
    greedy_viol = check_ejr(starve, run_greedy(starve), starve.m)
    ok = mes_viol == 0 and len(greedy_viol) >= 1
    record(4, ok, f"MES violations={mes_viol}; greedy violations on starvation fixture={len(greedy_viol)}")
    assert ok


# |T| is not fixed by the criterion; 2 is the size used by the generator's
# reference example. Larger bundles are discussed in the decisions ledger.
C5_T_SIZE = 2
_c5_runs: dict = {}


def c5_runs():
    if not _c5_runs:
        for n_V in (10, 20, 50):
            fam = gen_mes_upper(MesUpperSpec(n_V, C5_T_SIZE))
            out = run_mes(fam.instance, TieBreak.adversarial_to(fam.T), allowance=True)
            _c5_runs[n_V] = (fam, out)
    return _c5_runs


def test_c5_mes_upper_construction():
    t0 = time.perf_counter()
    _c5_runs.clear()
    runs = c5_runs()
    elapsed = time.perf_counter() - t0
    parts = []
    ok = True
    for n_V, (fam, out) in runs.items():
        avg = average_satisfaction(fam.instance, out.selected, fam.V)
        ratio = fam.instance.cost_of(fam.T) / max(fam.instance.costs[t] for t in fam.T)
        lo, hi = HALF * (ratio - 1), HALF * ratio + 1
        if avg > hi or (n_V == 50 and avg < lo):
            ok = False
        parts.append(f"n_V={n_V}: avg={float(avg):.4f} in [{float(lo)}, {float(hi)}]")
    ok = ok and elapsed < 10
    record(5, ok, f"|T|={C5_T_SIZE} " + "; ".join(parts) + f"; runtime={elapsed:.2f}s (limit 10s)")
    assert ok


def test_c6_phragmen_upper_construction():
    t0 = time.perf_counter()
    alpha, beta = 10, 2
    # alpha*|T| >= x is needed for x events to fit in the budget; 2 is the smallest such size
    fam = gen_phragmen_upper(PhragmenUpperSpec(alpha, beta, T_size=2))
    inst = fam.instance
    out = run_phragmen(inst, TieBreak.adversarial_to(fam.T))
    x = fam.params["x"]
    cost_T = inst.cost_of(fam.T)
    tau = inst.budget / (inst.budget - cost_T)
    width = len(str(fam.params["m1"]))
    expected = [(f"b{j:0{width}d}", tau * j) for j in range(1, x + 1)]
    got = [(e.project, e.time) for e in out.trace.events[:x]]
    avg = average_satisfaction(inst, out.selected, fam.V)
    bound = HALF * cost_T / min(inst.costs[t] for t in fam.T) * (1 + Fraction(5, alpha))
    elapsed = time.perf_counter() - t0
    ok = got == expected and avg <= bound and elapsed < 30
    record(
        6,
        ok,
        f"x={x} tau={tau} first-x-events-match={got == expected} avg={float(avg):.4f} <= {float(bound):.4f}; runtime={elapsed:.2f}s (limit 30s)",
    )
    assert ok


def test_c7_anyrule_construction():
    parts = []
    failures = []
    for groups in (5, 11):
        fam = gen_anyrule(AnyRuleSpec.from_groups(groups))
        inst = fam.instance
        gamma = 2 * min(inst.costs.values()) / inst.budget
        assert all(is_cohesive(inst, T, g) for T, g in zip(fam.group_targets, fam.groups))
        for rule, out in run_rules(inst).items():
            slack = []
            for T, g in zip(fam.group_targets, fam.groups):
                bound = inst.cost_of(T) / min(inst.costs[t] for t in T) - 1 + gamma
                slack.append(bound - average_satisfaction(inst, out.selected, g))
            if max(slack) < 0:
                failures.append(f"groups={groups}/{rule}")
        parts.append(f"groups={groups} gamma={gamma}")
    ok = not failures
    record(7, ok, "; ".join(parts) + f"; rules without a group under the bound: {failures or 'none'}")
    assert ok


def _lemma1_pairs(inst, outcome, max_size=3, exhaustive_pool=10):
    for k in range(1, min(max_size, inst.m) + 1):
        for T in itertools.combinations(inst.projects, k):
            pool = sorted(supporter_pool(inst, T))
            rep = min_avg_group(inst, outcome, T)
            if rep.group is None:
                continue
            if len(pool) <= exhaustive_pool:
                for r in range(rep.required_size, len(pool) + 1):
                    for V in itertools.combinations(pool, r):
                        yield T, V
            else:
                yield T, rep.group.members
                yield T, pool


def test_c8_lemma1():
    failures = pairs = 0
    for inst, mes, _ in corpus():
        for T, V in _lemma1_pairs(inst, mes):
            pairs += 1
            if not check_lemma1(inst, mes.trace, T, V):
                failures += 1
    for fam, out in c5_runs().values():
        for T, V in [(fam.T, fam.V.members)] + list(zip(fam.group_targets, (g.members for g in fam.groups))):
            pairs += 1
            if not check_lemma1(fam.instance, out.trace, T, V):
                failures += 1
    ok = failures == 0
    record(8, ok, f"violations={failures} over {pairs} cohesive (T, V) pairs")
    assert ok


def test_c9_degree_oracle():
    mismatches = checked = 0
    for path in sorted(FIXTURES.glob("small_m*.pbc")):
        inst = load_instance(path)
        assert inst.m <= 6
        plan = SamplePlan(seed=1, k_max=inst.m, samples_per_k=5000)
        for rule, out in run_rules(inst).items():
            rep = degree_report(inst, out, plan)
            per_k, avg = brute_degree(inst, out.selected, inst.m)
            checked += 1
            for k, (measured, d) in per_k.items():
                s = rep.per_k[k]
                if s.measured != measured or s.d_k != d:
                    mismatches += 1
            if rep.dataset_average != avg:
                mismatches += 1
    ok = mismatches == 0 and checked > 0
    record(9, ok, f"mismatches={mismatches} over {checked} (fixture, rule) reports")
    assert ok


def adversarial_suite():
    return {
        "mes-upper-10": gen_mes_upper(MesUpperSpec(10, 2)).instance,
        "mes-upper-20": gen_mes_upper(MesUpperSpec(20, 2)).instance,
        "mes-upper-50": gen_mes_upper(MesUpperSpec(50, 2)).instance,
        "phragmen-upper-10-2": gen_phragmen_upper(PhragmenUpperSpec(10, 2, T_size=2)).instance,
        "anyrule-5": gen_anyrule(AnyRuleSpec.from_groups(5)).instance,
        "anyrule-11": gen_anyrule(AnyRuleSpec.from_groups(11)).instance,
    }


def test_c10_reproducibility_and_scale(tmp_path: Path):
    large = FIXTURES / "large.pb"
    inst = load_instance(large)
    assert (inst.n, inst.m) == (2000, 25)
    csvs = []
    t0 = time.perf_counter()
    for workers in (1, 2):
        out = tmp_path / f"w{workers}.csv"
        code = cli.main(["degree", str(large), "--seed", "2024", "--workers", str(workers), "--csv", str(out)])
        assert code == 0
        csvs.append(out.read_bytes())
    elapsed = (time.perf_counter() - t0) / 2
    identical = csvs[0] == csvs[1]

    plan = SamplePlan(seed=2024)
    losers = []
    suite = adversarial_suite()
    suite["large-fixture"] = inst
    for name, ds in suite.items():
        reps = degree_reports(ds, run_rules(ds), plan)
        g = reps["greedy"].dataset_average
        for rival in ("mes-exh", "phragmen-exh"):
            r = reps[rival].dataset_average
            if g is not None and r is not None and g > r:
                losers.append(f"{name}: greedy {float(g):.3f} > {rival} {float(r):.3f}")
    ok = elapsed < 60 and identical and not losers
    record(
        10,
        ok,
        f"runtime per run={elapsed:.1f}s (limit 60s) csv-identical-across-workers={identical}; "
        f"greedy-not-above-exhausted-rules: {'yes' if not losers else 'no, ' + '; '.join(losers)}",
    )
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
