import math

import numpy as np
import pytest

from sdckit.datamodel import AttributeSchema, DatasetTable, Taxonomy
from sdckit.errors import ValidationError
from sdckit.evaluation import (correlation_delta_report, evaluate, improvement_scores, rl,
                               scores_from_factors, sse, statistic_variation)
from sdckit.probkanon import ir_swap, mdav_id

from conftest import numeric_table


def shifted(table, i, j, delta):
    rows = [list(r) for r in table.rows]
    rows[i][j] += delta
    return DatasetTable(table.schema, rows)


def test_sse_basics():
    t = numeric_table([[1, 2], [3, 4], [5, 6]])
    assert sse(t, t) == 0
    assert sse(t, shifted(t, 1, 0, 3.0)) == 9


def test_sse_categorical():
    tax = Taxonomy.from_edges([("a", "p"), ("b", "p"), ("c", "root"), ("p", "root")])
    schema = (AttributeSchema("c", "categorical", taxonomy=tax),)
    t = DatasetTable(schema, [("a",), ("c",)])
    m = DatasetTable(schema, [("b",), ("c",)])
    assert sse(t, m) == pytest.approx(math.log2(1.5) ** 2, abs=1e-12)
    assert sse(t, m) == pytest.approx(0.3422, abs=1e-4)


def test_schema_mismatch():
    a = numeric_table([[1, 2], [3, 4]])
    with pytest.raises(ValidationError):
        sse(a, numeric_table([[1], [3]]))
    with pytest.raises(ValidationError):
        rl(a, numeric_table([[1, 2]]))


def test_rl_identity_and_collapse(backend):
    t = numeric_table([[1, 2], [3, 4], [5, 9], [7, 1]])
    assert rl(t, t) == 100.0
    c = numeric_table([[4, 4]] * 4)
    assert rl(t, c) == pytest.approx(25.0)


def test_rl_swapped_pairs(backend):
    t = numeric_table([[0, 0], [1, 0], [10, 10], [11, 10]])
    m = numeric_table([[1, 0], [0, 0], [11, 10], [10, 10]])
    assert rl(t, m) == 0.0


def test_rl_tie_shares_credit(backend):
    t = numeric_table([[0, 0], [2, 0], [50, 50]])
    m = numeric_table([[1, 0], [1, 0], [50, 50]])
    # the first two masked rows are equidistant from both originals
    assert rl(t, m) == pytest.approx(100 * (0.5 + 0.5 + 1) / 3)


def test_correlation_report():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 100, size=(60, 3))
    x[:, 2] = 0.5 * x[:, 0] + 0.5 * rng.uniform(0, 100, size=60)
    t = numeric_table(x)
    t = DatasetTable(tuple(AttributeSchema(a.name, "numeric", "confidential" if a.name == "a2" else a.role,
                                           bounds=a.bounds) for a in t.schema), t.rows)
    assert correlation_delta_report(t, t, ["a2"]) == (0.0, 0.0)
    rel = ir_swap(t, 60, rng=np.random.default_rng(1)).table
    mean, sd = correlation_delta_report(t, rel, ["a2"])
    c0 = np.corrcoef(t.numeric_matrix(), rowvar=False)
    c1 = np.corrcoef(rel.numeric_matrix(), rowvar=False)
    deltas = [abs(c1[i, 2] - c0[i, 2]) for i in (0, 1)]
    assert mean == pytest.approx(np.mean(deltas))
    assert sd == pytest.approx(np.std(deltas))
    with pytest.raises(ValidationError):
        correlation_delta_report(t, t.with_columns({"a1": [5.0] * 60}), ["a2"])


def test_statistic_variation():
    t = numeric_table([[1, 10], [2, 20], [3, 60]])
    swapped = ir_swap(t, 3, conf_set=["a0", "a1"], rng=np.random.default_rng(0)).table
    for v in statistic_variation(t, swapped).values():
        assert v.mean == 0 and v.variance == 0
    plus = t.with_columns({"a0": [4.0, 5.0, 6.0]})
    v = statistic_variation(t, plus)["a0"]
    assert v.mean == pytest.approx(3 / 2) and v.variance == 0
    collapsed = mdav_id(t, 3, qi_set=["a0", "a1"]).table
    for v in statistic_variation(t, collapsed).values():
        assert v.mean == pytest.approx(0, abs=1e-15) and v.variance == 1
    z = numeric_table([[-1, 1], [1, 2]], lo=-5)
    assert statistic_variation(z, z)["a0"].mean is None


def test_scores():
    s = scores_from_factors(0.014, 386.92)
    assert s.score_table == pytest.approx(5.37, rel=0.03)
    assert s.score_text == pytest.approx(0.014 / 386.92)
    assert scores_from_factors(9.92, 0.21).score_table == pytest.approx(2.04, rel=0.03)
    one = improvement_scores(4.0, 10.0, 4.0, 10.0)
    assert (one.sse_f, one.rl_f, one.score_text, one.score_table) == (1, 1, 1, 1)
    a = improvement_scores(9.0, 10.0, 4.0, 5.0)
    b = improvement_scores(900.0, 10.0, 400.0, 5.0)
    assert a.sse_f == pytest.approx(b.sse_f) == pytest.approx(1.5)
    with pytest.raises(ValidationError):
        improvement_scores(1.0, 1.0, 0.0, 1.0)


def test_evaluate_bundle():
    t = numeric_table([[1, 2], [3, 4], [5, 9]])
    rep = evaluate(t, t)
    assert rep.sse == 0 and rep.rl == 100
    assert set(rep.variations) == {"a0", "a1"}
