"""Fixture tables, exact serialization and row diffing.

A fixture is one JSON file per table with keys ``name``, ``columns``,
``rows`` and ``provenance`` (one tag per cell), plus the ``stage`` of the
search it is compared against, the ``cases`` it covers and free-form
``annotations`` about cells that disagree with their printed source.

Rationals are written as ``"p/q"`` strings (``q = 1`` elided) in every
format; no decimal ever appears.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

from qfano.contractions import CaseOutcome
from qfano.core import FlipDatum, as_q, q_str
from qfano.enumerator import (
    TAG_C_F20,
    TAG_C_P2,
    TAG_CREPANT,
    TAG_D,
    TAG_E1,
    TAG_E1_ZU1,
    SolutionRow,
    canonical_sort,
    table_of,
)

SCHEMA = "qfano.rows/1"
FIXTURE_NAMES = ("table1", "table2", "table3", "table4", "table5", "crepant", "by-h")
FORMATS = ("json", "csv", "markdown")

INT_COLUMNS = ("h", "N", "e", "n")
RATIONAL_COLUMNS = ("kx3", "z", "u", "l_C", "delta_l", "deg_F", "kx_prime_3")
TEXT_COLUMNS = ("case", "x_prime")
PROJECTION_COLUMNS = ("h", "kx3", "N", "e", "n", "z", "u", "l_C", "delta_l", "deg_F", "kx_prime_3", "x_prime", "case")
KEY_COLUMNS = ("h", "kx3", "N", "n", "case", "x_prime", "z")


class Existence(str, Enum):
    EXAMPLE_KNOWN = "example-known"
    UNKNOWN = "unknown"
    QUESTIONED = "questioned"


class FixtureError(ValueError):
    """A fixture file does not follow the schema."""

    def __init__(self, file: str, message: str, row: Optional[int] = None, column: Optional[str] = None):
        where = file
        if row is not None:
            where += f", row {row}"
        if column is not None:
            where += f", column {column!r}"
        super().__init__(f"{where}: {message}")
        self.file, self.row, self.column = file, row, column


@dataclass(frozen=True)
class FixtureTable:
    name: str
    columns: tuple[str, ...]
    rows: tuple[dict[str, Any], ...]
    provenance: tuple[dict[str, str], ...]
    stage: str = "theorem"
    cases: Optional[tuple[str, ...]] = None
    title: str = ""
    annotations: tuple[dict[str, Any], ...] = ()

    def selects(self, row: SolutionRow) -> bool:
        return self.cases is None or row.case in self.cases


# --- loading ---------------------------------------------------------------


def default_fixture_dir() -> Path:
    return Path(str(resources.files("qfano.data").joinpath("fixtures")))


def _cell(file: str, i: int, col: str, value: Any) -> Any:
    if col == "existence":
        try:
            return Existence(value)
        except ValueError:
            raise FixtureError(file, f"unknown existence mark {value!r}", i, col) from None
    if value is None:
        return None
    if col in INT_COLUMNS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise FixtureError(file, f"expected an integer, got {value!r}", i, col)
        return value
    if col in RATIONAL_COLUMNS:
        try:
            if isinstance(value, bool):
                raise TypeError
            return as_q(value)
        except (TypeError, ValueError, ZeroDivisionError):
            raise FixtureError(file, f"expected an exact rational, got {value!r}", i, col) from None
    if col in TEXT_COLUMNS:
        if not isinstance(value, str):
            raise FixtureError(file, f"expected text, got {value!r}", i, col)
        return value
    raise FixtureError(file, "unknown column", i, col)


def load_fixture(path: Path) -> FixtureTable:
    path = Path(path)
    file = path.name
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FixtureError(file, f"invalid JSON ({exc})") from None
    for key in ("name", "columns", "rows", "provenance"):
        if key not in doc:
            raise FixtureError(file, f"missing top-level key {key!r}")
    columns = tuple(doc["columns"])
    for col in columns:
        if col != "existence" and col not in PROJECTION_COLUMNS:
            raise FixtureError(file, "unknown column", None, col)
    if len(doc["provenance"]) != len(doc["rows"]):
        raise FixtureError(file, "provenance must have one entry per row")
    rows, prov = [], []
    for i, (raw, tags) in enumerate(zip(doc["rows"], doc["provenance"])):
        if not isinstance(raw, dict):
            raise FixtureError(file, "row is not an object", i)
        row = {}
        for col, value in raw.items():
            if col not in columns:
                raise FixtureError(file, "cell outside the declared columns", i, col)
            if not tags.get(col):
                raise FixtureError(file, "cell has no provenance tag", i, col)
            row[col] = _cell(file, i, col, value)
        rows.append(row)
        prov.append(dict(tags))
    cases = doc.get("cases")
    return FixtureTable(
        name=doc["name"],
        columns=columns,
        rows=tuple(rows),
        provenance=tuple(prov),
        stage=doc.get("stage", "theorem"),
        cases=None if cases is None else tuple(cases),
        title=doc.get("title", ""),
        annotations=tuple(doc.get("annotations", ())),
    )


def load_fixtures(path: Optional[Path] = None) -> list[FixtureTable]:
    """All seven fixture sets from ``path``; a missing directory or file raises FileNotFoundError."""
    base = Path(path) if path is not None else default_fixture_dir()
    if not base.is_dir():
        raise FileNotFoundError(f"fixture directory not found: {base}")
    out = []
    for name in FIXTURE_NAMES:
        file = base / f"{name}.json"
        if not file.is_file():
            raise FileNotFoundError(f"fixture file not found: {file}")
        out.append(load_fixture(file))
    return out


# --- projection and diff ---------------------------------------------------


def project(row: SolutionRow) -> dict[str, Any]:
    d = row.derived
    return {
        "h": row.h,
        "kx3": row.kx3,
        "N": row.N,
        "e": row.e,
        "n": row.n,
        "z": row.z,
        "u": row.u,
        "l_C": d.l_C,
        "delta_l": d.delta_l,
        "deg_F": d.deg_F,
        "kx_prime_3": d.kx_prime_3,
        "x_prime": row.x_prime,
        "case": row.case,
    }


def _show(value: Any) -> str:
    if value is None:
        return "/"
    if isinstance(value, Fraction):
        return q_str(value)
    return str(value)


def _describe(cells: dict[str, Any]) -> str:
    return ", ".join(f"{k}={_show(v)}" for k, v in cells.items() if k != "existence")


@dataclass(frozen=True)
class FieldMismatch:
    key: dict[str, Any]
    column: str
    expected: Any
    actual: Any

    def __str__(self) -> str:
        return f"field mismatch at ({_describe(self.key)}): {self.column} expected {_show(self.expected)}, got {_show(self.actual)}"


@dataclass
class DiffReport:
    table: str
    missing: list[dict[str, Any]] = field(default_factory=list)
    unexpected: list[dict[str, Any]] = field(default_factory=list)
    mismatches: list[FieldMismatch] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not (self.missing or self.unexpected or self.mismatches)

    def lines(self) -> list[str]:
        out = [f"{self.table}: missing ({_describe(r)})" for r in self.missing]
        out += [f"{self.table}: unexpected ({_describe(r)})" for r in self.unexpected]
        out += [f"{self.table}: {m}" for m in self.mismatches]
        return out


def diff(expected: FixtureTable, actual: Iterable[SolutionRow]) -> DiffReport:
    """Compare fixture rows with the actual rows the fixture covers.

    Rows are paired on the key columns present in the fixture row; every
    other fixture column is then compared exactly.  ``None`` in a fixture
    means the value is not applicable and must be ``None`` in the row too.
    The existence mark is metadata and never compared.
    """
    report = DiffReport(expected.name)
    pool = [project(r) for r in actual if expected.selects(r)]
    used = [False] * len(pool)
    for row in expected.rows:
        keys = [c for c in KEY_COLUMNS if c in row]
        match = None
        for j, cand in enumerate(pool):
            if not used[j] and all(cand[c] == row[c] for c in keys):
                match = j
                break
        if match is None:
            report.missing.append(dict(row))
            continue
        used[match] = True
        cand = pool[match]
        key = {c: row[c] for c in keys}
        for col, want in row.items():
            if col == "existence" or col in keys:
                continue
            if cand[col] != want:
                report.mismatches.append(FieldMismatch(key, col, want, cand[col]))
    cols = [c for c in expected.columns if c != "existence"]
    for j, cand in enumerate(pool):
        if not used[j]:
            report.unexpected.append({c: cand[c] for c in cols})
    return report


def diff_all(
    fixtures: Iterable[FixtureTable],
    theorem_rows: Sequence[SolutionRow],
    main_rows: Sequence[SolutionRow],
) -> list[DiffReport]:
    """Diff each fixture against the rows of the stage it records."""
    return [diff(t, main_rows if t.stage == "main" else theorem_rows) for t in fixtures]


def existence_lookup(table: FixtureTable) -> Callable[[SolutionRow], str]:
    """Existence mark of the fixture row a solution pairs with, ``unknown`` otherwise."""

    def lookup(row: SolutionRow) -> str:
        p = project(row)
        for fr in table.rows:
            if all(p[c] == fr[c] for c in KEY_COLUMNS if c in fr):
                mark = fr.get("existence", Existence.UNKNOWN)
                return Existence(mark).value
        return Existence.UNKNOWN.value

    return lookup


# --- row encoding ----------------------------------------------------------


def _enc(value: Any) -> Any:
    if isinstance(value, Fraction):
        return q_str(value)
    return value


def _outcome_to_dict(out: CaseOutcome) -> dict[str, Any]:
    d: dict[str, Any] = {}
    for f in fields(CaseOutcome):
        v = getattr(out, f.name)
        if f.name == "residuals":
            v = [[name, q_str(x)] for name, x in v]
        elif f.name == "problems":
            v = list(v)
        else:
            v = _enc(v)
        d[f.name] = v
    return d


def _outcome_from_dict(d: dict[str, Any]) -> CaseOutcome:
    kw: dict[str, Any] = {}
    for f in fields(CaseOutcome):
        v = d[f.name]
        if f.name == "kind":
            kw[f.name] = v
        elif f.name == "residuals":
            kw[f.name] = tuple((name, as_q(x)) for name, x in v)
        elif f.name == "problems":
            kw[f.name] = tuple(v)
        else:
            kw[f.name] = None if v is None else as_q(v)
    return CaseOutcome(**kw)


def row_to_dict(row: SolutionRow) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in fields(SolutionRow):
        v = getattr(row, f.name)
        if f.name == "derived":
            v = _outcome_to_dict(v)
        elif f.name == "flags":
            v = list(v)
        elif f.name == "flips":
            v = [{"a": q_str(x.a), "d": q_str(x.d), "aw": x.aw} for x in v]
        else:
            v = _enc(v)
        out[f.name] = v
    return out


def row_from_dict(d: dict[str, Any]) -> SolutionRow:
    names = [f.name for f in fields(SolutionRow)]
    if sorted(d) != sorted(names):
        raise ValueError(f"row keys {sorted(d)} do not match {sorted(names)}")
    return SolutionRow(
        case=d["case"],
        h=int(d["h"]),
        kx3=as_q(d["kx3"]),
        N=int(d["N"]),
        e=int(d["e"]),
        n=int(d["n"]),
        z=as_q(d["z"]),
        u=as_q(d["u"]),
        derived=_outcome_from_dict(d["derived"]),
        x_prime=d["x_prime"],
        flags=tuple(d["flags"]),
        flips=tuple(FlipDatum(as_q(x["a"]), as_q(x["d"]), int(x["aw"])) for x in d["flips"]),
    )


# --- csv -------------------------------------------------------------------

_OUTCOME_COLS = [f"derived.{f.name}" for f in fields(CaseOutcome)]
CSV_COLUMNS = ["case", "h", "kx3", "N", "e", "n", "z", "u", "x_prime", "flags", "flips"] + _OUTCOME_COLS
_SEP = "|"


def _join(items: Sequence[str]) -> str:
    for item in items:
        if _SEP in item:
            raise ValueError(f"text {item!r} contains the list separator {_SEP!r}")
    return _SEP.join(items)


def _split(text: str) -> list[str]:
    return text.split(_SEP) if text else []


def _to_csv_record(row: SolutionRow) -> list[str]:
    d = row_to_dict(row)
    rec = [d["case"], str(d["h"]), d["kx3"], str(d["N"]), str(d["e"]), str(d["n"]), d["z"], d["u"], d["x_prime"]]
    rec.append(_join(d["flags"]))
    rec.append(";".join(f"{x['a']}:{x['d']}:{x['aw']}" for x in d["flips"]))
    for f in fields(CaseOutcome):
        v = d["derived"][f.name]
        if f.name == "residuals":
            rec.append(";".join(f"{name}={x}" for name, x in v))
        elif f.name == "problems":
            rec.append(_join(v))
        else:
            rec.append("" if v is None else str(v))
    return rec


def _from_csv_record(rec: dict[str, str]) -> SolutionRow:
    flips = []
    for item in filter(None, rec["flips"].split(";")):
        a, dd, aw = item.split(":")
        flips.append({"a": a, "d": dd, "aw": int(aw)})
    derived: dict[str, Any] = {}
    for f in fields(CaseOutcome):
        v = rec[f"derived.{f.name}"]
        if f.name == "residuals":
            derived[f.name] = [item.rsplit("=", 1) for item in filter(None, v.split(";"))]
        elif f.name == "problems":
            derived[f.name] = _split(v)
        elif f.name == "kind":
            derived[f.name] = v
        else:
            derived[f.name] = v or None
    return row_from_dict(
        {
            "case": rec["case"],
            "h": rec["h"],
            "kx3": rec["kx3"],
            "N": rec["N"],
            "e": rec["e"],
            "n": rec["n"],
            "z": rec["z"],
            "u": rec["u"],
            "derived": derived,
            "x_prime": rec["x_prime"],
            "flags": _split(rec["flags"]),
            "flips": flips,
        }
    )


# --- markdown --------------------------------------------------------------


def _q(x: Optional[Fraction]) -> str:
    return "/" if x is None else q_str(x)


def _type_and_target(row: SolutionRow) -> str:
    return f"{row.case}, {row.x_prime}"


_LAYOUTS: dict[str, tuple[str, list[tuple[str, Callable[[SolutionRow], str]]]]] = {
    "table1": (
        "Table 1. f' of type E1, u = z + 1",
        [("h", lambda r: str(r.h)), ("(-K_X)^3", lambda r: q_str(r.kx3)), ("N", lambda r: str(r.N)),
         ("e", lambda r: str(r.e)), ("n", lambda r: str(r.n)), ("z", lambda r: q_str(r.z)),
         ("l_C", lambda r: _q(r.derived.l_C)), ("X'", lambda r: r.x_prime)],
    ),
    "table2": (
        "Table 2. f' of type E1, z = u = 1 (h = 4, n = 0)",
        [("(-K_X)^3", lambda r: q_str(r.kx3)), ("N", lambda r: str(r.N)), ("e", lambda r: str(r.e)),
         ("l_C", lambda r: _q(r.derived.l_C)), ("X'", lambda r: r.x_prime)],
    ),
    "table3": (
        "Table 3. f' of type E2 to E12 (z = u = 1)",
        [("h", lambda r: str(r.h)), ("(-K_X)^3", lambda r: q_str(r.kx3)), ("N", lambda r: str(r.N)),
         ("e", lambda r: str(r.e)), ("n", lambda r: str(r.n)), ("type of f' and X'", _type_and_target)],
    ),
    "table4": (
        "Table 4. f' of type C",
        [("h", lambda r: str(r.h)), ("(-K_X)^3", lambda r: q_str(r.kx3)), ("N", lambda r: str(r.N)),
         ("e", lambda r: str(r.e)), ("n", lambda r: str(r.n)), ("deg Δ", lambda r: _q(r.derived.delta_l))],
    ),
    "table5": (
        "Table 5. f' of type D",
        [("h", lambda r: str(r.h)), ("(-K_X)^3", lambda r: q_str(r.kx3)), ("N", lambda r: str(r.N)),
         ("e", lambda r: str(r.e)), ("n", lambda r: str(r.n)), ("deg F", lambda r: _q(r.derived.deg_F))],
    ),
    "crepant": (
        "Crepant divisorial contraction",
        [("h", lambda r: str(r.h)), ("(-K_X)^3", lambda r: q_str(r.kx3)), ("N", lambda r: str(r.N)),
         ("z", lambda r: q_str(r.z)), ("u", lambda r: q_str(r.u))],
    ),
}


def _md_table(title: str, cols: Sequence[tuple[str, Callable[[Any], str]]], rows: Sequence[Any]) -> list[str]:
    out = [f"### {title}", ""]
    out.append("| " + " | ".join(c for c, _ in cols) + " |")
    out.append("|" + "|".join("---" for _ in cols) + "|")
    for r in rows:
        out.append("| " + " | ".join(get(r) for _, get in cols) + " |")
    out.append("")
    return out


def markdown_tables(rows: Iterable[SolutionRow]) -> str:
    """Rows grouped into the five by-type tables and the crepant row."""
    rows = canonical_sort(rows)
    out: list[str] = []
    for name, (title, cols) in _LAYOUTS.items():
        group = [r for r in rows if table_of(r) == name]
        if group:
            out += _md_table(title, cols, sorted(group, key=_table_order))
    return "\n".join(out)


def _table_order(r: SolutionRow) -> tuple:
    return (r.h, r.kx3, r.N, -r.e, r.z, r.x_prime)


def _f_and_target(r: SolutionRow) -> str:
    if r.case == TAG_D:
        return "D"
    if r.case in (TAG_C_P2, TAG_C_F20):
        return f"C, {r.x_prime}"
    if r.case in (TAG_E1, TAG_E1_ZU1):
        return f"E1, {r.x_prime}"
    if r.case == TAG_CREPANT:
        return f"crepant, {r.x_prime}"
    return f"{r.case}, {r.x_prime}"


BY_H_COLUMNS: list[tuple[str, Callable[[Any], str]]] = [
    ("exists", lambda m: m.existence),
    ("(-K_X)^3", lambda m: q_str(m.row.kx3)),
    ("N", lambda m: str(m.row.N)),
    ("e", lambda m: str(m.row.e)),
    ("n", lambda m: str(m.row.n)),
    ("z", lambda m: q_str(m.row.z)),
    ("u", lambda m: q_str(m.row.u)),
    ("deg Δ", lambda m: _q(m.row.derived.delta_l)),
    ("deg F", lambda m: _q(m.row.derived.deg_F)),
    ("l_C", lambda m: _q(m.row.derived.l_C)),
    ("f', X'", lambda m: _f_and_target(m.row)),
]


def markdown_by_h(groups: dict[int, list[Any]]) -> str:
    out: list[str] = []
    for h in sorted(groups):
        out += _md_table(f"h = {h}", BY_H_COLUMNS, groups[h])
    return "\n".join(out)


# --- serialize / parse -----------------------------------------------------


def serialize(rows: Iterable[SolutionRow], fmt: str = "json") -> str:
    """Byte-deterministic text for ``rows`` in canonical order."""
    rows = canonical_sort(rows)
    if fmt == "json":
        doc = {"schema": SCHEMA, "rows": [row_to_dict(r) for r in rows]}
        return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(_to_csv_record(r))
        return buf.getvalue()
    if fmt == "markdown":
        return markdown_tables(rows)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def parse(text: str, fmt: str = "json") -> list[SolutionRow]:
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {doc.get('schema')!r}")
        return [row_from_dict(d) for d in doc["rows"]]
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError("unexpected csv header")
        return [_from_csv_record(rec) for rec in reader]
    raise ValueError(f"cannot parse format {fmt!r}")


__all__ = [
    "DiffReport",
    "Existence",
    "FieldMismatch",
    "FixtureError",
    "FixtureTable",
    "default_fixture_dir",
    "diff",
    "diff_all",
    "existence_lookup",
    "load_fixture",
    "load_fixtures",
    "markdown_by_h",
    "markdown_tables",
    "parse",
    "project",
    "row_from_dict",
    "row_to_dict",
    "serialize",
]
