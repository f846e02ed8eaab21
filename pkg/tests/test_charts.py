import xml.etree.ElementTree as ET
from fractions import Fraction

from pbprop.charts import (
    Series,
    decimal6,
    degree_chart,
    degree_csv,
    difference_chart,
    difference_series,
    line_chart,
    winners,
)
from pbprop.degree import DegreeReport, KStats


def report(rule, values):
    per_k = {
        k: KStats(k, 10, 0 if v is None else 5, None if v is None else Fraction(v), None if v is None else Fraction(v))
        for k, v in enumerate(values, 1)
    }
    measured = [Fraction(v) for v in values if v is not None]
    avg = sum(measured) / len(measured) if measured else None
    return DegreeReport(rule, per_k, avg, avg)


def test_decimal6_rounding():
    assert decimal6(Fraction(2, 3)) == "0.666667"
    assert decimal6(Fraction(1, 2_000_000)) == "0.000000"  # half to even
    assert decimal6(Fraction(3, 2_000_000)) == "0.000002"
    assert decimal6(Fraction(-7, 4)) == "-1.750000"


def test_csv_rows():
    text = degree_csv({"d": {"mes": report("mes", ["1/3", None])}})
    assert text.splitlines() == [
        "dataset,rule,k,samples,measured,d_k,d_k_exact,status",
        "d,mes,1,10,5,0.333333,1/3,measured",
        "d,mes,2,10,0,,,no-cohesive-group",
        "d,mes,avg,20,5,0.333333,1/3,ok",
    ]


def test_winners_counts_ties_separately():
    results = {
        "a": {"x": report("x", [2]), "y": report("y", [1])},
        "b": {"x": report("x", [1]), "y": report("y", [1])},
        "c": {"x": report("x", [None]), "y": report("y", [None])},
    }
    assert winners(results, ["x", "y"]) == {"x": 1, "y": 0, "tie": 1, "none": 1}


def test_svg_is_wellformed_and_stable():
    reps = {"mes": report("mes", [1, 2, "5/2"]), "greedy": report("greedy", [1, 1, None])}
    a = degree_chart("demo", reps)
    assert a == degree_chart("demo", reps)
    root = ET.fromstring(a)
    polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(polylines) == 2


def test_self_difference_is_flat_zero():
    results = {f"d{i}": {"mes": report("mes", [i, i + 1])} for i in range(3)}
    (s,) = difference_series(results, ["mes"], "mes")
    assert all(y == 0 for _, y in s.points)
    ET.fromstring(difference_chart(results, ["mes"], "mes"))


def test_empty_series_chart():
    ET.fromstring(line_chart([Series("none", ())], "t", "x", "y"))
