"""Sum structures in financial tables.

Every present cell is tried as a target against all other cells in its scope
(one column, or the whole table).  The relations found form a sum structure
that can be replayed against another column or a later version of the table
to flag inconsistent cells.
"""

from __future__ import annotations

import csv
import io
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from .anneal import EvolveConfig, evolve
from .errors import BadReference, MagnitudeOverflow, ParseError, ScopeTooSmall
from .hopfield import DescentConfig, MultistartConfig, multistart
from .model import MAX_VALUES, check_amount, new_instance
from .oracle import MITM_MAX_N, meet_in_middle

ABSENT_MARKERS = {"", "-", "\u2013", "\u2014", "n/a", "N/A"}
_CURRENCY = re.compile(r"[$€£¥]|\b[A-Z]{3}\b")
ENGINES = ("oracle-auto", "hopfield", "evolve")


# -- parsing ------------------------------------------------------------------

def parse_amount(text: str, decimal: str = ".", thousands: Sequence[str] = (",", " "),
                 decimals: int = 2) -> Optional[int]:
    """Parse a formatted amount into integer minor units.

    ``(1,234.50)`` is negative, dashes and blanks are absent (``None``) and
    currency symbols are ignored.  Raises ``ValueError`` for anything else
    that is not a plain number, including amounts with more fractional digits
    than ``decimals`` allows.
    """
    s = text.strip()
    if s in ABSENT_MARKERS:
        return None
    sign = 1
    if s.startswith("(") and s.endswith(")"):
        sign, s = -1, s[1:-1].strip()
    s = _CURRENCY.sub("", s).strip()
    if s and s[0] in "+-":
        if s[0] == "-":
            sign = -sign
        s = s[1:].strip()
    elif s.endswith("-"):
        sign, s = -sign, s[:-1].strip()
    for sep in thousands:
        s = s.replace(sep, "")
    s = s.replace("\u00a0", "").replace("\u202f", "")
    if decimal != ".":
        s = s.replace(decimal, ".")
    if not re.fullmatch(r"\d+(\.\d+)?|\.\d+", s):
        raise ValueError(f"not an amount: {text!r}")
    try:
        minor = Decimal(s).scaleb(decimals)
    except InvalidOperation as exc:
        raise ValueError(f"not an amount: {text!r}") from exc
    if minor != minor.to_integral_value():
        raise ValueError(f"{text!r} has more than {decimals} decimal places")
    return sign * int(minor)


@dataclass
class Table:
    cells: list[list[Optional[int]]]
    row_labels: list[str] = field(default_factory=list)
    col_labels: list[str] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.cells), (len(self.cells[0]) if self.cells else 0)

    def get(self, ref: "CellRef") -> Optional[int]:
        rows, cols = self.shape
        if not (0 <= ref.row < rows and 0 <= ref.col < cols):
            raise BadReference(f"cell {tuple(ref)} is outside a {rows}x{cols} table")
        return self.cells[ref.row][ref.col]

    def column(self, col: int) -> list[Optional[int]]:
        return [row[col] for row in self.cells]


def table_from_columns(columns: Sequence[Sequence[Optional[int]]]) -> Table:
    rows = max(len(c) for c in columns)
    cells = [[c[r] if r < len(c) else None for c in columns] for r in range(rows)]
    for row in cells:
        for v in row:
            if v is not None:
                check_amount(v)
    return Table(cells)


def parse_table(text: str, decimal: str = ".", thousands: Sequence[str] = (",", " "),
                decimals: int = 2, header: bool = True, row_labels: bool = True,
                delimiter: str = ",") -> Table:
    """Read a CSV table of amounts.

    With ``header`` the first row holds column labels; with ``row_labels`` the
    first column holds row labels.  Amount cells are parsed by
    :func:`parse_amount`.
    """
    rows = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    rows = [r for r in rows if any(c.strip() for c in r)]
    col_labels: list[str] = []
    if header and rows:
        col_labels = rows.pop(0)
        if row_labels:
            col_labels = col_labels[1:]
    cells: list[list[Optional[int]]] = []
    labels: list[str] = []
    width = None
    for r, raw in enumerate(rows):
        line = r + (2 if header else 1)
        if row_labels:
            labels.append(raw[0] if raw else "")
            raw = raw[1:]
        if width is None:
            width = len(raw)
        elif len(raw) != width:
            raise ParseError(f"line {line}: expected {width} amount cells, found {len(raw)}")
        parsed = []
        for c, cell in enumerate(raw):
            try:
                v = parse_amount(cell, decimal, thousands, decimals)
                if v is not None:
                    check_amount(v, f"cell ({r}, {c})")
            except MagnitudeOverflow:
                raise
            except ValueError as exc:
                raise ParseError(f"cell (row {r}, col {c}) on line {line}: {exc}") from None
            parsed.append(v)
        cells.append(parsed)
    if width is not None and col_labels and len(col_labels) != width:
        raise ParseError(f"header has {len(col_labels)} labels for {width} columns")
    return Table(cells, labels, col_labels)


# -- structures ---------------------------------------------------------------

class CellRef(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class SumRelation:
    target: CellRef
    components: tuple[CellRef, ...]
    scope: str = "column"
    truncated: bool = False

    def __post_init__(self):
        if not self.components:
            raise ValueError("a relation needs at least one component")
        if self.target in self.components or len(set(self.components)) != len(self.components):
            raise ValueError("components must be distinct cells other than the target")

    def cells(self) -> tuple[CellRef, ...]:
        return (self.target, *self.components)

    def residual(self, table: Table) -> Optional[int]:
        """``sum(components) - target`` on ``table``; ``None`` if a cell is absent."""
        vals = [table.get(c) for c in self.cells()]
        if any(v is None for v in vals):
            return None
        return sum(vals[1:]) - vals[0]


@dataclass
class SumStructure:
    relations: list[SumRelation]
    source: str = ""

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "relations": [{"target": list(r.target),
                           "components": [list(c) for c in r.components],
                           "scope": r.scope,
                           "truncated": r.truncated} for r in self.relations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Any) -> "SumStructure":
        if not isinstance(doc, dict) or not isinstance(doc.get("relations"), list):
            raise ParseError("structure document needs a 'relations' array")
        rels = []
        for k, rd in enumerate(doc["relations"]):
            try:
                rels.append(SumRelation(
                    target=CellRef(*_ref(rd["target"])),
                    components=tuple(CellRef(*_ref(c)) for c in rd["components"]),
                    scope=rd.get("scope", "column"),
                    truncated=bool(rd.get("truncated", False)),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"relations[{k}]: {exc}") from None
        return cls(rels, str(doc.get("source", "")))

    @classmethod
    def from_json(cls, text: str) -> "SumStructure":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _ref(v) -> tuple[int, int]:
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(i, int) and not isinstance(i, bool) for i in v)):
        raise ValueError(f"cell reference must be [row, col], got {v!r}")
    return v[0], v[1]


# -- extraction ---------------------------------------------------------------

def _scope_cells(table: Table, scope: str, col: Optional[int]) -> list[list[tuple[CellRef, int]]]:
    rows, cols = table.shape
    if scope == "table":
        cells = [(CellRef(r, c), table.cells[r][c]) for r in range(rows) for c in range(cols)
                 if table.cells[r][c] is not None]
        if len(cells) < 2:
            raise ScopeTooSmall("the table has fewer than two present cells")
        return [cells]
    if scope != "column":
        raise ValueError(f"unknown scope {scope!r}")
    if col is not None:
        if not 0 <= col < cols:
            raise BadReference(f"column {col} is outside a table with {cols} columns")
        cells = [(CellRef(r, col), v) for r, v in enumerate(table.column(col)) if v is not None]
        if len(cells) < 2:
            raise ScopeTooSmall(f"column {col} has fewer than two present cells")
        return [cells]
    groups = []
    for c in range(cols):
        cells = [(CellRef(r, c), v) for r, v in enumerate(table.column(c)) if v is not None]
        if len(cells) >= 2:
            groups.append(cells)
    if not groups:
        raise ScopeTooSmall("no column has two present cells")
    return groups


@dataclass(frozen=True)
class ExtractOptions:
    engine: str = "oracle-auto"
    max_per_target: Optional[int] = 10
    include_zero_targets: bool = False
    include_singletons: bool = False
    descent: DescentConfig = DescentConfig()
    multistart: MultistartConfig = MultistartConfig(max_restarts=10**5, batch=10**4, workers=1)
    evolve: EvolveConfig = EvolveConfig()
    workers: int = 1


def _solve_target(cells: list[tuple[CellRef, int]], t: int, scope: str,
                  opts: ExtractOptions) -> list[SumRelation]:
    target_ref, target_val = cells[t]
    if target_val == 0 and not opts.include_zero_targets:
        return []
    others = [cells[i] for i in range(len(cells)) if i != t]
    if len(others) > MAX_VALUES:
        raise ValueError(f"scope of {len(others)} cells exceeds the instance cap")
    inst = new_instance([v for _, v in others], target_val)
    singles = sum(1 for _, v in others if v == target_val)
    limit = opts.max_per_target
    want = None if limit is None else limit + (0 if opts.include_singletons else singles) + 1

    engine = opts.engine
    if engine == "oracle-auto" and inst.n > MITM_MAX_N:
        engine = "hopfield"
    if engine == "oracle-auto":
        masks = [tuple(np.flatnonzero(z)) for z in meet_in_middle(inst, cap=want).masks]
    elif engine == "hopfield":
        mcfg = replace(opts.multistart, collect_all=True, cap=want or 10**6)
        rep = multistart(inst, opts.descent, mcfg)
        masks = [s.indices for s in rep.solutions]
    elif engine == "evolve":
        masks = [s.indices for s in evolve(inst, opts.evolve).solutions]
    else:
        raise ValueError(f"unknown engine {engine!r}")

    if not opts.include_singletons:
        masks = [m for m in masks if len(m) > 1]
    masks = sorted(set(tuple(int(i) for i in m) for m in masks))
    truncated = limit is not None and len(masks) > limit
    if truncated:
        masks = masks[:limit]
    out = []
    for m in masks:
        comps = tuple(others[i][0] for i in m)
        if sum(others[i][1] for i in m) != target_val:
            raise RuntimeError(f"solver returned an invalid relation for {target_ref}")
        out.append(SumRelation(target_ref, comps, scope, truncated))
    return out


def extract_structure(table: Table, scope: str = "column", col: Optional[int] = None,
                      opts: ExtractOptions = ExtractOptions(), source: str = "") -> SumStructure:
    """Find, for every present cell in scope, the subsets of the other cells summing to it.

    Zero targets and single-cell "sums" equal to the target are skipped unless
    the options say otherwise.  At most ``max_per_target`` relations are kept
    per target; relations of a target with more solutions are marked
    ``truncated``.
    """
    groups = _scope_cells(table, scope, col)
    jobs = [(g, t) for g in groups for t in range(len(g))]
    if opts.workers > 1:
        with ThreadPoolExecutor(opts.workers) as pool:
            parts = list(pool.map(lambda job: _solve_target(job[0], job[1], scope, opts), jobs))
    else:
        parts = [_solve_target(g, t, scope, opts) for g, t in jobs]
    relations = [rel for part in parts for rel in part]
    if not source:
        source = "table" if scope == "table" else (f"column {col}" if col is not None else "columns")
    return SumStructure(relations, source)


# -- consistency --------------------------------------------------------------

class RelationCheck(NamedTuple):
    relation_index: int
    status: str  # "holds" | "violated" | "inapplicable"
    residual: Optional[int] = None


@dataclass
class ConsistencyReport:
    checks: list[RelationCheck]

    @property
    def all_hold(self) -> bool:
        return all(c.status == "holds" for c in self.checks)

    @property
    def violations(self) -> list[RelationCheck]:
        return [c for c in self.checks if c.status == "violated"]

    def to_list(self) -> list[dict]:
        out = []
        for c in self.checks:
            d: dict[str, Any] = {"relation_index": c.relation_index, "status": c.status}
            if c.status == "violated":
                d["residual"] = c.residual
            out.append(d)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_list(), indent=2) + "\n"


def retarget(relation: SumRelation, col: int) -> SumRelation:
    """Move a single-column relation onto column ``col``, keeping row indices."""
    cols = {c.col for c in relation.cells()}
    if len(cols) != 1:
        raise BadReference("only relations within one column can be re-targeted")
    return SumRelation(CellRef(relation.target.row, col),
                       tuple(CellRef(c.row, col) for c in relation.components),
                       relation.scope, relation.truncated)


def check_structure(structure: SumStructure, table: Table,
                    col: Optional[int] = None) -> ConsistencyReport:
    """Evaluate every relation on ``table`` (optionally re-targeted to column ``col``)."""
    checks = []
    for k, rel in enumerate(structure.relations):
        if col is not None:
            rel = retarget(rel, col)
        r = rel.residual(table)
        if r is None:
            checks.append(RelationCheck(k, "inapplicable"))
        elif r == 0:
            checks.append(RelationCheck(k, "holds"))
        else:
            checks.append(RelationCheck(k, "violated", r))
    return ConsistencyReport(checks)
