"""CSV and SVG output for degree results.

The SVG writer is deliberately tiny: axes, tick labels, one polyline per
series and a legend. Output bytes depend only on the input values.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from pbprop.core import format_rational
from pbprop.degree import DegreeReport

CSV_HEADER = ("dataset", "rule", "k", "samples", "measured", "d_k", "d_k_exact", "status")

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def decimal6(value: Fraction) -> str:
    """Exact rational rounded half-to-even at six decimals."""
    scaled = round(value * 1_000_000)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 1_000_000)
    return f"{sign}{whole}.{frac:06d}"


def degree_rows(dataset: str, reports: Mapping[str, DegreeReport]) -> list[tuple[str, ...]]:
    """Per-k rows followed by one ``k=avg`` summary row, for each rule."""
    rows = []
    for rule, rep in reports.items():
        for k in sorted(rep.per_k):
            s = rep.per_k[k]
            if s.d_k is None:
                rows.append((dataset, rule, str(k), str(s.samples), "0", "", "", "no-cohesive-group"))
            else:
                rows.append(
                    (dataset, rule, str(k), str(s.samples), str(s.measured), decimal6(s.d_k), format_rational(s.d_k), "measured")
                )
        samples = sum(s.samples for s in rep.per_k.values())
        measured = sum(s.measured for s in rep.per_k.values())
        if rep.dataset_average is None:
            rows.append((dataset, rule, "avg", str(samples), str(measured), "", "", "no-cohesive-groups"))
        else:
            avg = rep.dataset_average
            rows.append((dataset, rule, "avg", str(samples), str(measured), decimal6(avg), format_rational(avg), "ok"))
    return rows


def write_degree_csv(results: Mapping[str, Mapping[str, DegreeReport]], out) -> None:
    """Write ``{dataset: {rule: report}}`` as CSV with LF line endings."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for dataset in results:
        w.writerows(degree_rows(dataset, results[dataset]))


def degree_csv(results: Mapping[str, Mapping[str, DegreeReport]]) -> str:
    buf = io.StringIO()
    write_degree_csv(results, buf)
    return buf.getvalue()


def winners(results: Mapping[str, Mapping[str, DegreeReport]], rules: Sequence[str]) -> dict[str, int]:
    """How often each rule has the strictly best dataset average.

    Datasets where the best value is shared land in ``"tie"``; datasets with
    no measured groups land in ``"none"``.
    """
    counts = {r: 0 for r in rules}
    counts["tie"] = 0
    counts["none"] = 0
    for reports in results.values():
        vals = {r: reports[r].dataset_average for r in rules if r in reports}
        vals = {r: v for r, v in vals.items() if v is not None}
        if not vals:
            counts["none"] += 1
            continue
        best = max(vals.values())
        top = [r for r, v in vals.items() if v == best]
        counts[top[0] if len(top) == 1 else "tie"] += 1
    return counts


# --------------------------------------------------------------------------
# SVG


@dataclass(frozen=True)
class Series:
    label: str
    points: tuple[tuple[float, float], ...]


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1
    mag = 10 ** math.floor(math.log10((hi - lo) / count))
    step = next(m * mag for m in (1, 2, 5, 10) if (hi - lo) / (m * mag) <= count)
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return [round(i * step, 10) for i in range(first, last + 1)]


def line_chart(
    series: Sequence[Series],
    title: str,
    x_label: str,
    y_label: str,
    width: int = 640,
    height: int = 400,
    zero_line: bool = False,
) -> str:
    left, right, top, bottom = 60, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = [x for s in series for x, _ in s.points] or [0.0, 1.0]
    ys = [y for s in series for _, y in s.points] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(
            f'<text x="{sx(t):.1f}" y="{top + ph + 16}" text-anchor="middle" font-family="sans-serif" font-size="10">{_fmt(t)}</text>'
        )
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.1f}" x2="{left}" y2="{sy(t):.1f}" stroke="black"/>')
        out.append(
            f'<text x="{left - 6}" y="{sy(t) + 3:.1f}" text-anchor="end" font-family="sans-serif" font-size="10">{_fmt(t)}</text>'
        )
    if zero_line and y0 <= 0 <= y1:
        out.append(f'<line x1="{left}" y1="{sy(0):.1f}" x2="{left + pw}" y2="{sy(0):.1f}" stroke="#999" stroke-dasharray="4 3"/>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 15 {top + ph / 2:.1f})">{escape(y_label)}</text>'
    )
    for i, s in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        if s.points:
            pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s.points)
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>')
        ly = top + 14 * i + 10
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(
            f'<text x="{left + pw + 35}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(s.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def degree_chart(dataset: str, reports: Mapping[str, DegreeReport]) -> str:
    """Subset size against average degree, one line per rule."""
    series = []
    for rule, rep in reports.items():
        pts = tuple((float(k), float(s.d_k)) for k, s in sorted(rep.per_k.items()) if s.d_k is not None)
        series.append(Series(rule, pts))
    return line_chart(series, dataset, "subset size k", "average proportionality degree")


def difference_series(
    results: Mapping[str, Mapping[str, DegreeReport]], rules: Iterable[str], basis: str
) -> list[Series]:
    """Per rule, dataset average minus the basis rule's, datasets in input order.

    Datasets where either value is missing are left out of that rule's line.
    """
    names = list(results)
    out = []
    for rule in rules:
        pts = []
        for i, ds in enumerate(names):
            a = results[ds].get(rule)
            b = results[ds].get(basis)
            if a is None or b is None or a.dataset_average is None or b.dataset_average is None:
                continue
            pts.append((float(i + 1), float(a.dataset_average - b.dataset_average)))
        out.append(Series(rule, tuple(pts)))
    return out


def difference_chart(results: Mapping[str, Mapping[str, DegreeReport]], rules: Iterable[str], basis: str) -> str:
    series = difference_series(results, rules, basis)
    return line_chart(series, f"difference to {basis}", "dataset", "degree difference", zero_line=True)
