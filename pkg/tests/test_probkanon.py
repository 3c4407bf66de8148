from collections import Counter

import numpy as np
import pytest

from sdckit.datamodel import AttributeSchema, DatasetTable, flat_taxonomy
from sdckit.errors import ValidationError
from sdckit.probkanon import (IR_SWAP, MDAV_ID, MDAV_SWAP, ir_swap, mdav_id, mdav_swap,
                              rank_groups, reident_probability_bound)


def mixed(n, seed=0):
    rng = np.random.default_rng(seed)
    schema = (
        AttributeSchema("x", "numeric", "quasi-identifier", bounds=(0, 100)),
        AttributeSchema("y", "numeric", "quasi-identifier", bounds=(0, 100)),
        AttributeSchema("s", "numeric", "confidential", bounds=(0, 100)),
        AttributeSchema("u", "numeric", "confidential", bounds=(0, 100)),
    )
    rows = [tuple(float(v) for v in rng.integers(0, 101, size=4)) for _ in range(n)]
    return DatasetTable(schema, rows)


def multisets(table):
    return {a: Counter(table.column(a)) for a in table.names}


def test_rank_groups():
    assert rank_groups([5, 1, 4, 2, 3], 2) == [[1, 3], [4, 2, 0]]
    assert [len(g) for g in rank_groups(list(range(11)), 3)] == [3, 3, 5]
    assert rank_groups([1, 2, 3], 3) == [[0, 1, 2]]
    assert rank_groups([2, 2, 1, 2], 2) == [[2, 0], [1, 3]]


def test_mdav_id_replaces_only_qis():
    t = mixed(20)
    rel = mdav_id(t, 4)
    assert rel.method == MDAV_ID and rel.k == 4
    assert rel.table.column("s") == t.column("s")
    for g in rel.groups:
        xs = {rel.table.rows[i][0] for i in g}
        assert len(xs) == 1
        assert xs.pop() == pytest.approx(np.mean([t.rows[i][0] for i in g]))


def test_mdav_swap_preserves_multisets_and_blocks():
    t = mixed(23, seed=2)
    rel = mdav_swap(t, 5, rng=np.random.default_rng(7))
    assert rel.method == MDAV_SWAP
    assert multisets(rel.table) == multisets(t)
    for g in rel.groups:
        before = Counter((t.rows[i][0], t.rows[i][1]) for i in g)
        after = Counter((rel.table.rows[i][0], rel.table.rows[i][1]) for i in g)
        assert before == after
        assert all(rel.table.rows[i][2:] == t.rows[i][2:] for i in g)


def test_ir_swap_stays_in_rank_window():
    t = mixed(31, seed=3)
    rel = ir_swap(t, 4, rng=np.random.default_rng(1))
    assert rel.method == IR_SWAP
    assert multisets(rel.table) == multisets(t)
    assert rel.table.column("x") == t.column("x")
    for name, groups in zip(("s", "u"), rel.groups):
        col, new = t.column(name), rel.table.column(name)
        for g in groups:
            lo, hi = min(col[i] for i in g), max(col[i] for i in g)
            assert all(lo <= new[i] <= hi for i in g)
            assert Counter(new[i] for i in g) == Counter(col[i] for i in g)


def test_seeded_swaps_are_reproducible():
    t = mixed(25)
    assert mdav_swap(t, 3, rng=np.random.default_rng(5)).table == mdav_swap(t, 3, rng=np.random.default_rng(5)).table
    assert ir_swap(t, 3, rng=np.random.default_rng(5)).table == ir_swap(t, 3, rng=np.random.default_rng(5)).table


def test_validation():
    t = mixed(10)
    with pytest.raises(ValidationError):
        mdav_id(t, 11)
    with pytest.raises(ValidationError):
        mdav_swap(t, 0)
    with pytest.raises(ValidationError):
        ir_swap(t, 2, conf_set=())
    with pytest.raises(ValidationError):
        mdav_id(t, 2, qi_set=())
    tax = flat_taxonomy(["a", "b"])
    cat = DatasetTable((AttributeSchema("q", "numeric", "quasi-identifier", bounds=(0, 1)),
                        AttributeSchema("c", "categorical", "confidential", taxonomy=tax)),
                       [(0.0, "a"), (1.0, "b"), (0.5, "a")])
    with pytest.raises(ValidationError):
        ir_swap(cat, 2)


def test_reident_bound():
    assert reident_probability_bound(mdav_id(mixed(12), 4)) == 0.25
