"""Reading and writing PB instances.

Two formats are supported:

* Pabulib ``.pb`` files (``META`` / ``PROJECTS`` / ``VOTES`` sections,
  semicolon separated). Only approval ballots are accepted.
* The canonical ``.pbc`` text format, a sorted, tab separated form that
  round-trips exactly. See ``FORMAT.md`` for a byte-level description.
"""

from __future__ import annotations

import csv
import io
import warnings
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Iterator

from pbprop.core import PbInstance, format_rational

__all__ = [
    "PabulibError",
    "PabulibWarning",
    "parse_pabulib",
    "write_pabulib",
    "parse_canonical",
    "write_canonical",
    "load_instance",
    "save_instance",
]

CANONICAL_HEADER = "pbc\t1"


class PabulibError(ValueError):
    """A malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class PabulibWarning(UserWarning):
    pass


def _parse_number(text: str, line: int, column: str, *, positive: bool) -> Fraction:
    raw = text.strip()
    try:
        # Fraction parses decimal strings exactly; "12.50" -> 25/2
        value = Fraction(raw)
    except (ValueError, ZeroDivisionError):
        raise PabulibError(f"malformed number {text!r}", line, column) from None
    if positive and value <= 0:
        raise PabulibError(f"expected a positive number, got {text!r}", line, column)
    if not positive and value < 0:
        raise PabulibError(f"expected a non-negative number, got {text!r}", line, column)
    return value


def _text_lines(source) -> Iterator[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        yield from io.StringIO(source)
    else:
        for chunk in source:
            yield chunk.decode("utf-8") if isinstance(chunk, bytes) else chunk


def parse_pabulib(source: str | bytes | IO) -> PbInstance:
    """Parse a Pabulib approval election into a :class:`PbInstance`.

    ``source`` may be text, bytes, or an open (text or binary) file; it is
    read line by line. Extra project and vote columns are kept in
    ``instance.meta`` under ``project:<id>:<column>`` and
    ``voter:<id>:<column>``.
    """
    section = None
    meta: dict[str, str] = {}
    meta_lines: dict[str, int] = {}
    costs: dict[str, Fraction] = {}
    approvals: dict[str, frozenset[str]] = {}
    extra: dict[str, str] = {}
    header: list[str] | None = None
    seen_sections: set[str] = set()

    for lineno, line in enumerate(_text_lines(source), 1):
        stripped = line.strip()
        if not stripped:
            continue
        upper = stripped.upper()
        if upper in ("META", "PROJECTS", "VOTES"):
            section = upper
            if section in seen_sections:
                raise PabulibError(f"duplicate {section} section", lineno)
            seen_sections.add(section)
            header = None
            if section == "PROJECTS" and "META" not in seen_sections:
                raise PabulibError("PROJECTS section before META", lineno)
            if section == "VOTES" and "PROJECTS" not in seen_sections:
                raise PabulibError("VOTES section before PROJECTS", lineno)
            if section == "PROJECTS":
                _check_meta(meta, meta_lines)
            continue
        if section is None:
            raise PabulibError("content outside any section", lineno)
        row = next(csv.reader([stripped], delimiter=";"))
        if section == "META":
            if header is None and [c.strip().lower() for c in row[:2]] == ["key", "value"]:
                header = row
                continue
            if len(row) < 2:
                raise PabulibError(f"META line needs key;value, got {stripped!r}", lineno)
            key = row[0].strip()
            meta[key] = ";".join(row[1:]).strip()
            meta_lines[key] = lineno
            continue
        if header is None:
            header = [c.strip() for c in row]
            required = ("project_id", "cost") if section == "PROJECTS" else ("voter_id", "vote")
            for col in required:
                if col not in header:
                    raise PabulibError(f"{section} header lacks mandatory column", lineno, col)
            continue
        if len(row) != len(header):
            raise PabulibError(f"expected {len(header)} fields, got {len(row)}", lineno)
        fields = dict(zip(header, row))
        if section == "PROJECTS":
            pid = fields["project_id"].strip()
            if not pid:
                raise PabulibError("empty project id", lineno, "project_id")
            if pid in costs:
                raise PabulibError(f"duplicate project id {pid!r}", lineno, "project_id")
            costs[pid] = _parse_number(fields["cost"], lineno, "cost", positive=True)
            for col, val in fields.items():
                if col not in ("project_id", "cost"):
                    extra[f"project:{pid}:{col}"] = val
        else:
            vid = fields["voter_id"].strip()
            if not vid:
                raise PabulibError("empty voter id", lineno, "voter_id")
            if vid in approvals:
                raise PabulibError(f"duplicate voter id {vid!r}", lineno, "voter_id")
            ballot = [p.strip() for p in fields["vote"].split(",") if p.strip()]
            unknown = [p for p in ballot if p not in costs]
            if unknown:
                raise PabulibError(f"ballot approves unknown project {unknown[0]!r}", lineno, "vote")
            if len(set(ballot)) != len(ballot):
                warnings.warn(f"line {lineno}: duplicate approvals in ballot of {vid!r} removed", PabulibWarning, stacklevel=2)
            approvals[vid] = frozenset(ballot)
            for col, val in fields.items():
                if col not in ("voter_id", "vote"):
                    extra[f"voter:{vid}:{col}"] = val

    for name in ("META", "PROJECTS", "VOTES"):
        if name not in seen_sections:
            raise PabulibError(f"missing {name} section")
    budget = _parse_number(meta["budget"], meta_lines["budget"], "budget", positive=False)
    n_projects = _parse_count(meta, meta_lines, "num_projects")
    n_votes = _parse_count(meta, meta_lines, "num_votes")
    if n_projects != len(costs):
        raise PabulibError(f"num_projects says {n_projects}, PROJECTS has {len(costs)} rows", meta_lines["num_projects"], "num_projects")
    if n_votes != len(approvals):
        raise PabulibError(f"num_votes says {n_votes}, VOTES has {len(approvals)} rows", meta_lines["num_votes"], "num_votes")
    if not costs:
        raise PabulibError("no projects")
    if not approvals:
        raise PabulibError("no votes")
    for pid, c in costs.items():
        if c > budget:
            warnings.warn(f"project {pid!r} costs more than the whole budget", PabulibWarning, stacklevel=2)
    all_meta = {f"meta:{k}": v for k, v in meta.items()}
    all_meta.update(extra)
    return PbInstance.build(budget, costs, approvals, meta=all_meta)


def _check_meta(meta: dict[str, str], meta_lines: dict[str, int]) -> None:
    for key in ("num_projects", "num_votes", "budget"):
        if key not in meta:
            raise PabulibError("META lacks mandatory key", None, key)
    vote_type = meta.get("vote_type", "approval").strip().lower()
    if vote_type != "approval":
        raise PabulibError(
            f"only approval ballots are supported, file declares vote_type {vote_type!r}",
            meta_lines.get("vote_type"),
            "vote_type",
        )


def _parse_count(meta, meta_lines, key) -> int:
    raw = meta[key].strip()
    if not raw.isdigit():
        raise PabulibError(f"malformed count {raw!r}", meta_lines[key], key)
    return int(raw)


def _decimal(value: Fraction) -> str:
    """Exact decimal text for ``value`` if it has one, else ``num/den``."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return format_rational(value)
    places = max(twos, fives)
    scaled = value * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def write_pabulib(instance: PbInstance, description: str = "") -> str:
    """Emit a minimal Pabulib approval file for ``instance``."""
    out = io.StringIO()
    w = csv.writer(out, delimiter=";", lineterminator="\n")
    out.write("META\n")
    w.writerow(["key", "value"])
    if description:
        w.writerow(["description", description])
    w.writerow(["num_projects", instance.m])
    w.writerow(["num_votes", instance.n])
    w.writerow(["budget", _decimal(instance.budget)])
    w.writerow(["vote_type", "approval"])
    out.write("PROJECTS\n")
    w.writerow(["project_id", "cost"])
    for p in instance.projects:
        w.writerow([p, _decimal(instance.costs[p])])
    out.write("VOTES\n")
    w.writerow(["voter_id", "vote"])
    for v in instance.voters:
        w.writerow([v, ",".join(sorted(instance.approvals[v]))])
    return out.getvalue()


# --------------------------------------------------------------------------
# canonical format


_RESERVED = ("\t", ",", "\n", "\r")


def write_canonical(instance: PbInstance) -> bytes:
    for ident in (*instance.projects, *instance.voters):
        if not ident or any(ch in ident for ch in _RESERVED):
            raise ValueError(f"id {ident!r} cannot be written to .pbc")
    lines = [CANONICAL_HEADER, f"budget\t{format_rational(instance.budget)}"]
    for p in sorted(instance.projects):
        lines.append(f"project\t{p}\t{format_rational(instance.costs[p])}")
    for v in sorted(instance.voters):
        lines.append(f"voter\t{v}\t{','.join(sorted(instance.approvals[v]))}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _canonical_rational(text: str, lineno: int, column: str) -> Fraction:
    num, sep, den = text.partition("/")
    if not sep or not num.lstrip("-").isdigit() or not den.isdigit() or int(den) == 0:
        raise PabulibError(f"expected num/den, got {text!r}", lineno, column)
    return Fraction(int(num), int(den))


def parse_canonical(source: str | bytes | IO) -> PbInstance:
    budget = None
    costs: dict[str, Fraction] = {}
    approvals: dict[str, list[str]] = {}
    vote_lines: dict[str, int] = {}
    saw_header = False
    for lineno, line in enumerate(_text_lines(source), 1):
        line = line.rstrip("\n").rstrip("\r")
        if not line:
            continue
        if not saw_header:
            if line != CANONICAL_HEADER:
                raise PabulibError(f"expected header {CANONICAL_HEADER!r}", lineno)
            saw_header = True
            continue
        parts = line.split("\t")
        kind = parts[0]
        if kind == "budget" and len(parts) == 2:
            if budget is not None:
                raise PabulibError("duplicate budget line", lineno)
            budget = _canonical_rational(parts[1], lineno, "budget")
            if budget < 0:
                raise PabulibError("negative budget", lineno, "budget")
        elif kind == "project" and len(parts) == 3:
            pid = parts[1]
            if not pid or pid in costs:
                raise PabulibError(f"empty or duplicate project id {pid!r}", lineno, "project")
            costs[pid] = _canonical_rational(parts[2], lineno, "cost")
            if costs[pid] <= 0:
                raise PabulibError("non-positive cost", lineno, "cost")
        elif kind == "voter" and len(parts) == 3:
            vid = parts[1]
            if not vid or vid in approvals:
                raise PabulibError(f"empty or duplicate voter id {vid!r}", lineno, "voter")
            approvals[vid] = [p for p in parts[2].split(",") if p]
            vote_lines[vid] = lineno
        else:
            raise PabulibError(f"unrecognised record {line!r}", lineno)
    if not saw_header:
        raise PabulibError("empty input")
    if budget is None:
        raise PabulibError("missing budget line")
    for vid, ballot in approvals.items():
        for p in ballot:
            if p not in costs:
                raise PabulibError(f"voter approves unknown project {p!r}", vote_lines[vid], "vote")
    return PbInstance.build(budget, costs, approvals)


def load_instance(path: str | Path) -> PbInstance:
    """Load a ``.pbc`` (canonical) or any other file as Pabulib."""
    path = Path(path)
    with open(path, "rb") as fh:
        if path.suffix == ".pbc":
            return parse_canonical(fh)
        return parse_pabulib(fh)


def save_instance(instance: PbInstance, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".pbc":
        path.write_bytes(write_canonical(instance))
    else:
        path.write_text(write_pabulib(instance), encoding="utf-8")
