from fractions import Fraction

import pytest

from pbprop.core import (
    InvalidInstanceError,
    Outcome,
    PbInstance,
    VoterGroup,
    as_money,
    average_satisfaction,
    capped_satisfaction,
    check_instance,
    format_rational,
    is_cohesive,
    required_group_size,
    satisfaction,
    supporter_pool,
    validate,
)


@pytest.fixture
def tiny():
    return PbInstance.build(8, {"p1": 4, "p2": 4}, {"v1": {"p1", "p2"}, "v2": {"p1", "p2"}, "v3": {"p1"}, "v4": {"p1"}})


def test_money_conversion():
    assert as_money("12.50") == Fraction(25, 2)
    assert as_money(3) == 3
    assert as_money("7/3") == Fraction(7, 3)
    with pytest.raises(TypeError):
        as_money(0.1)
    with pytest.raises(TypeError):
        as_money(True)
    assert format_rational(Fraction(8)) == "8/1"


def test_build_sorts_ids():
    inst = PbInstance.build(5, {"b": 1, "a": 2}, {"z": {"a"}, "y": set()})
    assert inst.projects == ("a", "b")
    assert inst.voters == ("y", "z")
    assert inst.supporters == {"a": ("z",), "b": ()}
    assert inst.approval_scores == {"a": 1, "b": 0}


def test_validation_reports_every_problem():
    inst = PbInstance(
        voters=("v1",),
        projects=("p", "q"),
        budget=Fraction(-1),
        costs={"p": Fraction(0), "q": Fraction(1)},
        approvals={"v1": frozenset({"p", "x"})},
    )
    problems = validate(inst)
    assert any("negative budget" in p for p in problems)
    assert any("non-positive cost" in p for p in problems)
    assert any("unknown project 'x'" in p for p in problems)
    with pytest.raises(InvalidInstanceError) as exc:
        check_instance(inst)
    assert len(exc.value.violations) == 3


def test_empty_instance_is_invalid():
    inst = PbInstance.build(1, {}, {})
    assert "instance has no voters" in validate(inst)
    assert "instance has no projects" in validate(inst)


def test_satisfaction_and_average(tiny):
    assert satisfaction(tiny, {"p1"}, "v1") == 1
    assert satisfaction(tiny, {"p1", "p2"}, "v3") == 1
    assert average_satisfaction(tiny, {"p1", "p2"}, VoterGroup({"v1", "v3"})) == Fraction(3, 2)
    with pytest.raises(ValueError):
        average_satisfaction(tiny, {"p1"}, [])
    with pytest.raises(KeyError):
        satisfaction(tiny, {"p1"}, "nobody")


def test_cohesiveness_threshold(tiny):
    # cost(T)/B = 1/2 needs half the voters
    assert is_cohesive(tiny, {"p2"}, {"v1", "v2"})
    assert not is_cohesive(tiny, {"p2"}, {"v1"})
    assert not is_cohesive(tiny, {"p2"}, {"v1", "v3"})  # v3 does not approve p2
    assert is_cohesive(tiny, {"p1", "p2"}, {"v1", "v2", "v3", "v4"}) is False
    assert not is_cohesive(tiny, {"p1"}, [])
    with pytest.raises(ValueError):
        is_cohesive(tiny, set(), {"v1"})
    with pytest.raises(KeyError):
        is_cohesive(tiny, {"nope"}, {"v1"})


def test_cohesive_exactly_at_threshold():
    inst = PbInstance.build(9, {"t": 3}, {f"v{i}": {"t"} for i in range(6)})
    # cost(T)/B = 1/3, n = 6 -> 2 voters suffice
    assert required_group_size(inst, {"t"}) == 2
    assert is_cohesive(inst, {"t"}, {"v0", "v1"})
    assert not is_cohesive(inst, {"t"}, {"v0"})


def test_pool_and_required_size(tiny):
    assert supporter_pool(tiny, {"p2"}) == {"v1", "v2"}
    assert supporter_pool(tiny, {"p1", "p2"}) == {"v1", "v2"}
    assert required_group_size(tiny, {"p1"}) == 2
    zero = PbInstance.build(0, {"p": 1}, {"v": {"p"}})
    assert required_group_size(zero, {"p"}) is None
    assert not is_cohesive(zero, {"p"}, {"v"})


def test_capped_value():
    assert capped_satisfaction(Fraction(5, 2), 2) == 2
    assert capped_satisfaction(Fraction(1, 2), 2) == Fraction(1, 2)


def test_outcome_from_selection(tiny):
    out = Outcome.from_selection(tiny, "x", ["p2", "p1"])
    assert out.selected == ("p2", "p1")
    assert out.total_cost == 8
    assert out.satisfaction == {"v1": 2, "v2": 2, "v3": 1, "v4": 1}
    assert out.selected_set == {"p1", "p2"}


def test_voter_group_must_be_nonempty():
    with pytest.raises(ValueError):
        VoterGroup(frozenset())
    g = VoterGroup({"b", "a"})
    assert list(g) == ["a", "b"] and len(g) == 2
