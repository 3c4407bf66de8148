"""Utility and disclosure-risk measures for a masked table against its original."""

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .distance import RecordSpace, attribute_distance
from .errors import ValidationError


def _check_pair(original, masked):
    if original.names != masked.names:
        raise ValidationError("original and masked tables must share the schema")
    for a, b in zip(original.schema, masked.schema):
        if a.kind != b.kind:
            raise ValidationError(f"attribute {a.name!r} changes kind between tables")
    if len(original) != len(masked):
        raise ValidationError("original and masked tables must have the same row count")


def sse(original, masked):
    """Sum over rows and attributes of squared attribute distances (rows paired by position)."""
    _check_pair(original, masked)
    total = 0.0
    for attr, j in zip(original.schema, range(len(original.schema))):
        if attr.is_numeric:
            x = np.array([r[j] for r in original.rows], dtype=float)
            y = np.array([r[j] for r in masked.rows], dtype=float)
            total += float(np.dot(x - y, x - y))
        else:
            total += math.fsum(attribute_distance(attr, a[j], b[j]) ** 2
                               for a, b in zip(original.rows, masked.rows))
    return total


def rl(original, masked, tol=1e-9):
    """Percentage of correct record linkages to the nearest originals (ties share credit)."""
    _check_pair(original, masked)
    space = RecordSpace(original.schema)
    num_o, codes_o = space.encode_table(original)
    num_m, codes_m = space.encode_table(masked)
    hits, ties = _accel.linkage(num_o, codes_o, num_m, codes_m, space.tables, tol)
    return 100.0 * float(np.sum(hits / ties)) / len(original)


def correlation_delta_report(original, masked, conf_set):
    """Mean and standard deviation of |corr change| between every attribute and each confidential one."""
    _check_pair(original, masked)
    names = original.names
    for a in original.schema:
        if not a.is_numeric:
            raise ValidationError("correlation report needs numeric attributes")
    x = original.numeric_matrix()
    y = masked.numeric_matrix()
    if np.any(x.std(axis=0) == 0) or np.any(y.std(axis=0) == 0):
        raise ValidationError("correlation undefined for a constant attribute")
    cx, cy = np.corrcoef(x, rowvar=False), np.corrcoef(y, rowvar=False)
    deltas = []
    for c in conf_set:
        j = names.index(c)
        for i in range(len(names)):
            if i != j:
                deltas.append(abs(cy[i, j] - cx[i, j]))
    deltas = np.array(deltas)
    return float(deltas.mean()), float(deltas.std())


@dataclass(frozen=True)
class StatVariation:
    mean: float
    variance: float


def statistic_variation(original, masked):
    """Relative change |new - old| / |old| of each attribute's mean and variance; None when old is 0."""
    _check_pair(original, masked)
    out = {}
    for a in original.schema:
        if not a.is_numeric:
            continue
        x, y = original.column(a.name), masked.column(a.name)
        out[a.name] = StatVariation(_rel(_mean(x), _mean(y)), _rel(_var(x), _var(y)))
    return out


# exactly rounded sums make the statistics independent of row order
def _mean(x):
    return math.fsum(x) / len(x)


def _var(x):
    mu = _mean(x)
    return math.fsum((v - mu) ** 2 for v in x) / len(x)


def _rel(old, new):
    if old == 0:
        return None
    return abs(new - old) / abs(old)


@dataclass(frozen=True)
class Scores:
    sse_f: float
    rl_f: float
    score_text: float
    score_table: float


def improvement_scores(sse0, rl0, ssek, rlk):
    """Improvement of a release over a baseline.

    ``score_text`` is the ratio of the two factors; ``score_table`` is their
    product, which is the form published result tables are consistent with.
    """
    for name, v in (("SSE0", sse0), ("RL0", rl0), ("SSEk", ssek), ("RLk", rlk)):
        if not v > 0:
            raise ValidationError(f"{name} must be positive")
    sse_f = math.sqrt(sse0) / math.sqrt(ssek)
    rl_f = rl0 / rlk
    return scores_from_factors(sse_f, rl_f)


def scores_from_factors(sse_f, rl_f):
    if not (sse_f > 0 and rl_f > 0):
        raise ValidationError("factors must be positive")
    return Scores(sse_f, rl_f, sse_f / rl_f, sse_f * rl_f)


@dataclass(frozen=True)
class EvalReport:
    sse: float
    rl: float
    variations: dict


def evaluate(original, masked):
    return EvalReport(sse(original, masked), rl(original, masked), statistic_variation(original, masked))
