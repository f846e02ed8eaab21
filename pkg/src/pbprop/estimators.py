"""scikit-learn style wrappers around the rules and the degree pipeline.

``X`` is always a :class:`~pbprop.core.PbInstance`. These classes add
``get_params``/``set_params``, ``clone`` support and the fitted-attribute
convention on top of the functional API; they hold no extra logic.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from pbprop.core import PbInstance, check_instance
from pbprop.degree import SamplePlan, degree_reports
from pbprop.rules import RULES, TieBreak, run_rule, run_rules

__all__ = ["check_pb_instance", "RuleEstimator", "DegreeEstimator", "NotFittedError"]


def check_pb_instance(X) -> PbInstance:
    """Validation helper in the spirit of ``check_array``."""
    if not isinstance(X, PbInstance):
        raise TypeError(f"expected a PbInstance, got {type(X).__name__}")
    return check_instance(X)


def _tie_break(mode: str, against, order) -> TieBreak:
    if mode == "adversarial":
        return TieBreak.adversarial_to(against or ())
    if mode == "explicit":
        return TieBreak.explicit(order or ())
    return TieBreak(mode)


class RuleEstimator(TransformerMixin, BaseEstimator):
    """Run one PB rule.

    After ``fit``: ``outcome_`` (the :class:`Outcome`), ``selected_`` (tuple
    in selection order) and ``satisfaction_`` (int array in voter order).
    ``transform`` returns the satisfaction vector for the fitted instance.
    """

    def __init__(self, rule="mes", tie_break="lexicographic", against=None, order=None, allowance=False, stop_first=False):
        self.rule = rule
        self.tie_break = tie_break
        self.against = against
        self.order = order
        self.allowance = allowance
        self.stop_first = stop_first

    def fit(self, X, y=None):
        X = check_pb_instance(X)
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        tb = _tie_break(self.tie_break, self.against, self.order)
        self.outcome_ = run_rule(self.rule, X, tb, self.allowance, self.stop_first)
        self.selected_ = self.outcome_.selected
        self.satisfaction_ = np.array([self.outcome_.satisfaction[v] for v in X.voters], dtype=np.int64)
        self.voters_ = X.voters
        return self

    def predict(self, X=None):
        check_is_fitted(self, "outcome_")
        return self.selected_

    def transform(self, X=None):
        check_is_fitted(self, "outcome_")
        return self.satisfaction_


class DegreeEstimator(BaseEstimator):
    """Sampled proportionality degree for several rules on one instance.

    After ``fit``: ``outcomes_`` and ``reports_``, both keyed by rule name.
    ``predict`` returns the dataset averages (``None`` when nothing was
    measured).
    """

    def __init__(self, rules=RULES, k_max=15, samples_per_k=5000, seed=None, workers=1, tie_break="lexicographic"):
        self.rules = rules
        self.k_max = k_max
        self.samples_per_k = samples_per_k
        self.seed = seed
        self.workers = workers
        self.tie_break = tie_break

    def fit(self, X, y=None):
        X = check_pb_instance(X)
        if self.seed is None:
            raise ValueError("a seed is required for sampling")
        plan = SamplePlan(self.seed, self.k_max, self.samples_per_k)
        tb = _tie_break(self.tie_break, None, None)
        self.outcomes_ = run_rules(X, self.rules, tb)
        self.reports_ = degree_reports(X, self.outcomes_, plan, self.workers)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "reports_")
        return {r: rep.dataset_average for r, rep in self.reports_.items()}

