"""Probabilistic k-anonymity: microaggregation-based partitions plus swapping within groups."""

from dataclasses import dataclass

import numpy as np

from .datamodel import CONFIDENTIAL, QUASI_IDENTIFIER, DatasetTable
from .errors import ValidationError
from .microagg import mdav, replace_with_centroids

MDAV_ID = "MDAV-ID"
MDAV_SWAP = "MDAV-SWAP"
IR_SWAP = "IR-SWAP"


@dataclass(frozen=True)
class SwapRelease:
    table: DatasetTable
    method: str
    k: int
    seed: object = None
    groups: tuple = ()


def _qis(table, qi_set):
    qi_set = tuple(qi_set) if qi_set is not None else table.names_with_role(QUASI_IDENTIFIER)
    if not qi_set:
        raise ValidationError("at least one quasi-identifier is required")
    for a in qi_set:
        table.position(a)
    return qi_set


def _check_k(table, k):
    if int(k) != k or k < 1:
        raise ValidationError("k must be a positive integer")
    if k > len(table):
        raise ValidationError(f"k={k} exceeds the number of rows ({len(table)})")


def mdav_id(table, k, qi_set=None):
    """MDAV on the quasi-identifiers, which are then replaced by their group centroids."""
    qi_set = _qis(table, qi_set)
    _check_k(table, k)
    cl = mdav(table, k, qi_set)
    return SwapRelease(replace_with_centroids(table, cl), MDAV_ID, int(k), None, cl.clusters)


def mdav_swap(table, k, qi_set=None, rng=None):
    """MDAV on the quasi-identifiers, then one random permutation of the QI block inside each group."""
    qi_set = _qis(table, qi_set)
    _check_k(table, k)
    rng = rng if rng is not None else np.random.default_rng()
    cl = mdav(table, k, qi_set)
    pos = [table.position(a) for a in qi_set]
    rows = [list(r) for r in table.rows]
    for group in cl.clusters:
        perm = rng.permutation(len(group))
        blocks = [[table.rows[i][p] for p in pos] for i in group]
        for dst, src in zip(group, perm):
            for p, v in zip(pos, blocks[src]):
                rows[dst][p] = v
    return SwapRelease(DatasetTable(table.schema, rows), MDAV_SWAP, int(k), None, cl.clusters)


def rank_groups(values, k):
    """Consecutive groups of k rows in ascending value order; the last holds k..2k-1 rows."""
    n = len(values)
    order = sorted(range(n), key=lambda i: (values[i], i))
    cuts = list(range(0, n - 2 * k + 1, k)) if n >= 2 * k else []
    groups = [order[c:c + k] for c in cuts]
    groups.append(order[(cuts[-1] + k) if cuts else 0:])
    return groups


def ir_swap(table, k, conf_set=None, rng=None):
    """Independently per confidential attribute: rank, cut into groups of k, permute within groups."""
    conf_set = tuple(conf_set) if conf_set is not None else table.names_with_role(CONFIDENTIAL)
    if not conf_set:
        raise ValidationError("at least one confidential attribute is required")
    _check_k(table, k)
    rng = rng if rng is not None else np.random.default_rng()
    cols = {}
    all_groups = []
    for a in conf_set:
        if not table.attribute(a).is_numeric:
            raise ValidationError(f"attribute {a!r} is not orderable")
        col = table.column(a)
        out = list(col)
        groups = rank_groups(col, k)
        for g in groups:
            perm = rng.permutation(len(g))
            for dst, src in zip(g, perm):
                out[dst] = col[g[src]]
        cols[a] = out
        all_groups.append(tuple(tuple(sorted(g)) for g in groups))
    return SwapRelease(table.with_columns(cols), IR_SWAP, int(k), None, tuple(all_groups))


def reident_probability_bound(release):
    """Upper bound on the probability of a correct re-identification (1/k)."""
    return 1.0 / release.k
