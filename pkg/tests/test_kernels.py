import numpy as np
import pytest

from sdckit import _accel, _kernels_py
from sdckit.datamodel import AttributeSchema, DatasetTable
from sdckit.distance import RecordSpace, record_distance
from sdckit.evaluation import rl
from sdckit.microagg import insensitive_microagg, mdav

from conftest import BACKENDS, _kernels

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def mixed_space(animals, n, seed):
    rng = np.random.default_rng(seed)
    leaves = ["dog", "cat", "horse", "sparrow", "eagle", "mammal"]
    schema = (AttributeSchema("x", "numeric", bounds=(0, 10)),
              AttributeSchema("pet", "categorical", taxonomy=animals),
              AttributeSchema("y", "numeric", bounds=(-5, 5)))
    rows = [(float(rng.uniform(0, 10)), leaves[rng.integers(len(leaves))], float(rng.uniform(-5, 5)))
            for _ in range(n)]
    return DatasetTable(schema, rows)


def test_backend_flag():
    assert _accel.BACKEND in ("python", "cython")
    assert _accel.BACKEND == ("cython" if _kernels is not None and _accel._impl is _kernels else "python")


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_sq_dists_agree(animals, seed):
    t = mixed_space(animals, 40, seed)
    space = RecordSpace(t.schema)
    num, codes = space.encode_table(t)
    a = _kernels_py.sq_dists(num, codes, space.tables, num[3], codes[3])
    b = _kernels.sq_dists(num, codes, space.tables, num[3], codes[3])
    assert np.allclose(a, b, rtol=0, atol=1e-12)
    ref = [record_distance(r, t.rows[3], t.schema) ** 2 for r in t.rows]
    assert np.allclose(a, ref, atol=1e-12)


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_linkage_agrees(animals, seed):
    t = mixed_space(animals, 60, seed)
    m = mixed_space(animals, 60, seed + 100)
    space = RecordSpace(t.schema)
    no, co = space.encode_table(t)
    nm, cm = space.encode_table(m)
    ha, ta = _kernels_py.linkage(no, co, nm, cm, space.tables, 1e-9)
    hb, tb = _kernels.linkage(no, co, nm, cm, space.tables, 1e-9)
    assert np.array_equal(ha, hb) and np.array_equal(ta, tb)


def test_results_independent_of_backend(animals, backend):
    t = mixed_space(animals, 30, 1)
    m = mixed_space(animals, 30, 2)
    assert mdav(t, 4).clusters == _reference_mdav(animals)
    assert insensitive_microagg(t, 4).clusters == _reference_insensitive(animals)
    assert rl(t, m) == pytest.approx(_reference_rl(animals))


def _run_python(fn):
    saved = _accel._impl
    _accel._impl = _kernels_py
    try:
        return fn()
    finally:
        _accel._impl = saved


def _reference_mdav(animals):
    return _run_python(lambda: mdav(mixed_space(animals, 30, 1), 4).clusters)


def _reference_insensitive(animals):
    return _run_python(lambda: insensitive_microagg(mixed_space(animals, 30, 1), 4).clusters)


def _reference_rl(animals):
    return _run_python(lambda: rl(mixed_space(animals, 30, 1), mixed_space(animals, 30, 2)))


def test_backends_listed():
    assert "python" in BACKENDS
