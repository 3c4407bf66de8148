import numpy as np
import pytest

from sdckit import _accel, _kernels_py
from sdckit.datamodel import AttributeSchema, DatasetTable, Taxonomy

try:
    from sdckit import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = ["python"] + (["cython"] if _kernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    mod = _kernels_py if request.param == "python" else _kernels
    monkeypatch.setattr(_accel, "_impl", mod)
    return request.param


def numeric_schema(m, lo=0.0, hi=100.0, role="quasi-identifier", prefix="a"):
    return tuple(AttributeSchema(f"{prefix}{j}", "numeric", role, bounds=(lo, hi)) for j in range(m))


def numeric_table(values, lo=0.0, hi=100.0):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return DatasetTable(numeric_schema(values.shape[1], lo, hi), [tuple(map(float, r)) for r in values])


@pytest.fixture
def animals():
    # small multi-level taxonomy: ANY > {mammal, bird} > leaves
    return Taxonomy.from_edges([
        ("mammal", "ANY"), ("bird", "ANY"),
        ("dog", "mammal"), ("cat", "mammal"), ("horse", "mammal"),
        ("sparrow", "bird"), ("eagle", "bird"),
    ], name="animals")


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
