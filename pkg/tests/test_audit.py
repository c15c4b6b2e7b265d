from itertools import combinations

import numpy as np
import pytest

from subsetqubo.audit import (CellRef, ExtractOptions, SumRelation, SumStructure, Table,
                              check_structure, extract_structure, parse_amount, parse_table,
                              retarget, table_from_columns)
from subsetqubo.errors import BadReference, ParseError, ScopeTooSmall


def brute_relations(column, col=0, singletons=False):
    """All (target, components) pairs by plain enumeration, zero targets skipped."""
    cells = [(r, v) for r, v in enumerate(column) if v is not None]
    out = set()
    for t, (tr, tv) in enumerate(cells):
        if tv == 0:
            continue
        others = [c for i, c in enumerate(cells) if i != t]
        for k in range(1 if singletons else 2, len(others) + 1):
            for combo in combinations(others, k):
                if sum(v for _, v in combo) == tv:
                    out.add((CellRef(tr, col), tuple(CellRef(r, col) for r, _ in combo)))
    return out


def as_pairs(structure):
    return {(r.target, r.components) for r in structure.relations}


@pytest.mark.parametrize("text, kwargs, expected", [
    ("1,234.56", {}, 123456),
    ("(500.00)", {}, -50000),
    ("1.234,56", {"decimal": ",", "thousands": (".",)}, 123456),
    ("$ 12", {}, 1200),
    ("EUR 3.5", {}, 350),
    ("-7.25", {}, -725),
    ("7.25-", {}, -725),
    ("1 000", {}, 100000),
    ("42", {"decimals": 0}, 42),
    ("-", {}, None),
    ("", {}, None),
])
def test_parse_amount(text, kwargs, expected):
    assert parse_amount(text, **kwargs) == expected


@pytest.mark.parametrize("text", ["abc", "1.234", "1.2.3", "--5", "+"])
def test_parse_amount_rejects(text):
    with pytest.raises(ValueError):
        parse_amount(text)


def test_parse_table_with_labels():
    text = "item,2023,2022\ncash,100.00,90.00\ndebt,(20.00),-\n"
    t = parse_table(text)
    assert t.cells == [[10000, 9000], [-2000, None]]
    assert t.row_labels == ["cash", "debt"]
    assert t.col_labels == ["2023", "2022"]


def test_parse_table_error_names_cell():
    with pytest.raises(ParseError, match=r"row 1, col 0.*line 3"):
        parse_table("item,a\nx,1\ny,oops\n")
    with pytest.raises(ParseError, match="line 3"):
        parse_table("item,a,b\nx,1,2\ny,3\n")


def test_extract_examples():
    s = extract_structure(table_from_columns([[1, 2, 3, 6]]))
    assert as_pairs(s) == {
        (CellRef(2, 0), (CellRef(0, 0), CellRef(1, 0))),
        (CellRef(3, 0), (CellRef(0, 0), CellRef(1, 0), CellRef(2, 0))),
    }
    s = extract_structure(table_from_columns([[5, 5, 10]]))
    assert as_pairs(s) == {(CellRef(2, 0), (CellRef(0, 0), CellRef(1, 0)))}
    s = extract_structure(table_from_columns([[5, 5, 10]]),
                          opts=ExtractOptions(include_singletons=True))
    assert (CellRef(0, 0), (CellRef(1, 0),)) in as_pairs(s)
    assert extract_structure(table_from_columns([[7, 9]])).relations == []


def test_scope_too_small():
    with pytest.raises(ScopeTooSmall):
        extract_structure(table_from_columns([[7, None]]), col=0)
    with pytest.raises(BadReference):
        extract_structure(table_from_columns([[7, 8]]), col=3)


def test_self_check_and_corruption():
    col_a = [100, 200, 300, 600, 50, 650]
    col_b = [10, 20, 30, 60, 5, 65]
    table = table_from_columns([col_a, col_b])
    s = extract_structure(table, col=0)
    assert check_structure(s, table).all_hold
    assert check_structure(s, table, col=1).all_hold

    table.cells[2][1] += 1
    report = check_structure(s, table, col=1)
    flagged = {c.relation_index for c in report.violations}
    covering = {k for k, r in enumerate(s.relations) if CellRef(2, 0) in r.cells()}
    assert flagged == covering and covering
    for c in report.violations:
        rel = s.relations[c.relation_index]
        assert c.residual == (-1 if rel.target == CellRef(2, 0) else 1)


def test_inapplicable_relation():
    rel = SumRelation(CellRef(2, 0), (CellRef(0, 0), CellRef(1, 0)))
    table = table_from_columns([[1, None, 3]])
    report = check_structure(SumStructure([rel]), table)
    assert report.checks[0].status == "inapplicable"
    assert not report.all_hold and report.violations == []


def test_out_of_range_reference():
    rel = SumRelation(CellRef(5, 0), (CellRef(0, 0),))
    with pytest.raises(BadReference):
        check_structure(SumStructure([rel]), table_from_columns([[1, 2]]))
    cross = SumRelation(CellRef(0, 1), (CellRef(0, 0),))
    with pytest.raises(BadReference):
        retarget(cross, 0)


def test_relation_validation():
    with pytest.raises(ValueError):
        SumRelation(CellRef(0, 0), ())
    with pytest.raises(ValueError):
        SumRelation(CellRef(0, 0), (CellRef(0, 0),))


def test_nested_sum_closure():
    # a + b = c and c + d = e, so a + b + d = e too
    table = table_from_columns([[3, 4, 7, 10, 17]])
    pairs = as_pairs(extract_structure(table, opts=ExtractOptions(max_per_target=None)))
    a, b, c, d, e = (CellRef(i, 0) for i in range(5))
    assert (c, (a, b)) in pairs
    assert (e, (c, d)) in pairs
    assert (e, (a, b, d)) in pairs


def test_truncation():
    table = table_from_columns([[1, 1, 1, 1, 1, 1, 2]])
    s = extract_structure(table, opts=ExtractOptions(max_per_target=3))
    rels = [r for r in s.relations if r.target == CellRef(6, 0)]
    assert len(rels) == 3 and all(r.truncated for r in rels)
    full = extract_structure(table, opts=ExtractOptions(max_per_target=None))
    assert len([r for r in full.relations if r.target == CellRef(6, 0)]) == 15


def test_table_scope():
    table = table_from_columns([[1, 2], [3, 9]])
    s = extract_structure(table, scope="table", opts=ExtractOptions(max_per_target=None))
    assert (CellRef(0, 1), (CellRef(0, 0), CellRef(1, 0))) in as_pairs(s)
    assert all(r.scope == "table" for r in s.relations)


def test_json_round_trip():
    s = extract_structure(table_from_columns([[1, 2, 3, 6, 9]]), source="demo")
    back = SumStructure.from_json(s.to_json())
    assert back == s
    with pytest.raises(ParseError):
        SumStructure.from_json('{"relations": [{"target": [0], "components": []}]}')
    with pytest.raises(ParseError):
        SumStructure.from_json("{nope")


@pytest.mark.parametrize("engine", ["hopfield", "evolve"])
def test_heuristic_engines_are_sound(engine):
    table = table_from_columns([[120, 80, 200, 45, 245, 30]])
    s = extract_structure(table, opts=ExtractOptions(engine=engine))
    assert s.relations
    assert as_pairs(s) <= brute_relations(table.column(0))
    assert check_structure(s, table).all_hold


def test_completeness_against_enumeration():
    rng = np.random.default_rng(77)
    for _ in range(20):
        n = int(rng.integers(2, 13))
        column = [int(v) for v in rng.integers(-20, 40, size=n)]
        s = extract_structure(table_from_columns([column]),
                              opts=ExtractOptions(max_per_target=None))
        assert as_pairs(s) == brute_relations(column)


def test_parallel_extraction_matches_serial():
    table = table_from_columns([[1, 2, 3, 6, 4, 10], [5, 5, 10, 15, 20, 1]])
    a = extract_structure(table)
    b = extract_structure(table, opts=ExtractOptions(workers=4))
    assert a == b
