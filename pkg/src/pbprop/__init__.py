"""Exact PB rules (MES, sequential Phragmén, greedy approval) and proportionality-degree tooling."""

from pbprop.core import (
    InvalidInstanceError,
    Outcome,
    PbInstance,
    VoterGroup,
    average_satisfaction,
    capped_satisfaction,
    check_instance,
    is_cohesive,
    required_group_size,
    satisfaction,
    supporter_pool,
    validate,
)
from pbprop.rules import RULES, TieBreak, exhaust, run_greedy, run_mes, run_phragmen, run_rule, run_rules

__version__ = "0.1.0"

__all__ = [
    "InvalidInstanceError",
    "Outcome",
    "PbInstance",
    "VoterGroup",
    "average_satisfaction",
    "capped_satisfaction",
    "check_instance",
    "is_cohesive",
    "required_group_size",
    "satisfaction",
    "supporter_pool",
    "validate",
    "RULES",
    "TieBreak",
    "exhaust",
    "run_greedy",
    "run_mes",
    "run_phragmen",
    "run_rule",
    "run_rules",
]
