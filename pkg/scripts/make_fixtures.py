"""Regenerate the bundled test fixtures (deterministic)."""

import random
import sys
from pathlib import Path

from pbprop.core import PbInstance
from pbprop.pabulib_io import write_canonical, write_pabulib
from pbprop.synthetic import large_instance, random_instance

out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")
out.mkdir(parents=True, exist_ok=True)

tiny = PbInstance.build(8, {"p1": 4, "p2": 4}, {"v1": {"p1", "p2"}, "v2": {"p1", "p2"}, "v3": {"p1"}, "v4": {"p1"}})
(out / "tiny.pbc").write_bytes(write_canonical(tiny))

greedy = PbInstance.build(8, {"a": 5, "b": 4, "c": 3}, {"v1": {"a", "b"}, "v2": {"a", "c"}, "v3": {"a"}, "v4": {"b", "c"}})
(out / "greedy.pbc").write_bytes(write_canonical(greedy))

starve = PbInstance.build(
    10,
    {"big": 9, "a": 1, "b": 1},
    {**{f"v{i}": {"big"} for i in range(6)}, **{f"w{i}": {"a", "b"} for i in range(4)}},
)
(out / "starvation.pbc").write_bytes(write_canonical(starve))

(out / "minimal.pb").write_text(
    "META\nkey;value\nnum_projects;2\nnum_votes;2\nbudget;100\nvote_type;approval\n"
    "PROJECTS\nproject_id;cost\np1;40\np2;70\n"
    "VOTES\nvoter_id;vote\nv1;p1\nv2;\"p1,p2\"\n",
    encoding="utf-8",
)

rng = random.Random(6)
for m in (4, 5, 6):
    inst = random_instance(rng, n_max=12, m_max=m, m_min=m, n_min=8, cost_max=10)
    (out / f"small_m{m}.pbc").write_bytes(write_canonical(inst))

(out / "large.pb").write_text(write_pabulib(large_instance(7), description="synthetic clustered"), encoding="utf-8")
