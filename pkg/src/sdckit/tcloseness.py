"""t-closeness by bucketization of the confidential attribute.

Distributions are compared with the ratio distance
``max_j max(p_j / q_j, q_j / p_j)``.  The confidential attribute is cut into
``t + 1`` equal-size ordered buckets and rows are grouped so that each group
over-represents one bucket by at most a factor ``t`` and under-represents the
others by at most ``1/t``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize

from .datamodel import CATEGORICAL, NUMERIC, QUASI_IDENTIFIER, AttributeSchema, DatasetTable, flat_taxonomy
from .errors import InfeasibleError, ValidationError


def tc_distance(p, q):
    """Ratio distance between two distributions over the same outcomes (exact for Fractions)."""
    if len(p) != len(q):
        raise ValidationError("distributions must share the outcome set")
    worst = 1
    for a, b in zip(p, q):
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0:
            return math.inf
        worst = max(worst, a / b, b / a)
    return float(worst)


def _round_half_up(x):
    return math.floor(Fraction(x) + Fraction(1, 2))


def _bucket_count(t):
    if isinstance(t, bool) or int(t) != t or t < 1:
        raise ValidationError(f"t must be an integer >= 1 so that t + 1 buckets exist; try t={max(1, math.floor(t))}")
    return int(t) + 1


def _orderable(table, conf_attr):
    attr = table.attribute(conf_attr)
    if attr.kind != NUMERIC:
        raise ValidationError(f"confidential attribute {conf_attr!r} must be orderable (numeric)")
    col = table.column(conf_attr)
    return sorted(range(len(col)), key=lambda i: (col[i], i))


@dataclass(frozen=True)
class Bucketization:
    """Ordered buckets of row indices with their value ranges."""

    buckets: tuple
    ranges: tuple

    @property
    def sizes(self):
        return [len(b) for b in self.buckets]

    def labels(self):
        return [f"B{j + 1}" for j in range(len(self.buckets))]

    def bucket_of(self):
        out = {}
        for j, b in enumerate(self.buckets):
            for i in b:
                out[i] = j
        return out


def bucketize(table, conf_attr, t):
    b = _bucket_count(t)
    n = len(table)
    if n < b * b:
        raise ValidationError(f"need at least (t+1)^2 = {b * b} rows, got {n}")
    order = _orderable(table, conf_attr)
    col = table.column(conf_attr)
    cuts = [0] + [_round_half_up(Fraction(j * n, b)) for j in range(1, b + 1)]
    buckets = tuple(tuple(order[cuts[j]:cuts[j + 1]]) for j in range(b))
    ranges = tuple((col[bk[0]], col[bk[-1]]) for bk in buckets)
    return Bucketization(buckets, ranges)


@dataclass(frozen=True)
class TClosePartition:
    groups: tuple
    emphasized: tuple
    bucketization: Bucketization

    @classmethod
    def from_groups(cls, groups, bucketization):
        groups = tuple(tuple(g) for g in groups)
        counts = _counts(groups, bucketization)
        emph = tuple(int(np.argmax(c)) for c in counts)
        return cls(groups, emph, bucketization)

    @property
    def sizes(self):
        return [len(g) for g in self.groups]

    def counts(self):
        return _counts(self.groups, self.bucketization)

    def group_distributions(self):
        return [[Fraction(c, len(g)) for c in row] for g, row in zip(self.groups, self.counts())]

    def global_distribution(self):
        n = sum(self.bucketization.sizes)
        return [Fraction(s, n) for s in self.bucketization.sizes]


def _counts(groups, bucketization):
    where = bucketization.bucket_of()
    b = len(bucketization.buckets)
    out = []
    for g in groups:
        row = [0] * b
        for i in g:
            row[where[i]] += 1
        out.append(row)
    return out


def group_sizes(n, t, l):
    g = _bucket_count(t) * int(l)
    return [_round_half_up(Fraction(i * n, g)) - _round_half_up(Fraction((i - 1) * n, g))
            for i in range(1, g + 1)]


def composition(bucket_sizes, t, l):
    """Rows drawn from each bucket by each group, or InfeasibleError."""
    b = _bucket_count(t)
    if int(l) != l or l < 1:
        raise ValidationError("l must be a positive integer")
    n = sum(bucket_sizes)
    ks = group_sizes(n, t, l)
    p = [Fraction(s, n) for s in bucket_sizes]
    lower = [[math.ceil(k * pj / t) for pj in p] for k in ks]
    upper = [[math.floor(k * pj * t) for pj in p] for k in ks]
    emph = [i % b for i in range(len(ks))]
    x = []
    for i, k in enumerate(ks):
        row = list(lower[i])
        row[emph[i]] = k - sum(lower[i][j] for j in range(b) if j != emph[i])
        x.append(row)
    ok = all(lower[i][j] <= x[i][j] <= upper[i][j] for i in range(len(ks)) for j in range(b))
    if ok and all(sum(x[i][j] for i in range(len(ks))) == bucket_sizes[j] for j in range(b)):
        return ks, emph, x
    return ks, emph, _repair(ks, bucket_sizes, lower, upper, emph)


def _repair(ks, sizes, lower, upper, emph):
    # bounded transportation problem: fix row and column sums, stay within the
    # closeness bounds, and keep as many rows as possible in emphasized buckets
    g, b = len(ks), len(sizes)
    nv = g * b
    cost = np.array([0.0 if j == emph[i] else 1.0 for i in range(g) for j in range(b)])
    a_eq, rhs = [], []
    for i in range(g):
        row = np.zeros(nv)
        row[i * b:(i + 1) * b] = 1
        a_eq.append(row)
        rhs.append(ks[i])
    for j in range(b):
        row = np.zeros(nv)
        row[j::b] = 1
        a_eq.append(row)
        rhs.append(sizes[j])
    lb = np.array([lower[i][j] for i in range(g) for j in range(b)], dtype=float)
    ub = np.array([upper[i][j] for i in range(g) for j in range(b)], dtype=float)
    if np.any(lb > ub):
        raise InfeasibleError("no group composition satisfies the closeness bounds for these (t, l)")
    res = optimize.milp(cost, constraints=optimize.LinearConstraint(np.array(a_eq), rhs, rhs),
                        integrality=np.ones(nv), bounds=optimize.Bounds(lb, ub))
    if not res.success:
        raise InfeasibleError("no group composition satisfies the closeness bounds for these (t, l)")
    x = np.rint(res.x).astype(int).reshape(g, b)
    return [list(map(int, r)) for r in x]


def tclose_partition(table, conf_attr, t, l):
    """Groups of sizes k_i whose bucket distribution is within distance t of the global one."""
    bk = bucketize(table, conf_attr, t)
    ks, emph, x = composition(bk.sizes, t, l)
    cursor = [0] * len(bk.buckets)
    groups = []
    for i in range(len(ks)):
        members = []
        for j, bucket in enumerate(bk.buckets):
            members.extend(bucket[cursor[j]:cursor[j] + x[i][j]])
            cursor[j] += x[i][j]
        groups.append(tuple(sorted(members)))
    part = TClosePartition(tuple(groups), tuple(emph), bk)
    dist, passed = verify_tcloseness(part, t)
    if not passed:
        raise InfeasibleError(f"constructed partition has distance {dist} > t={t}")
    return part


def verify_tcloseness(partition, t):
    """Largest group-to-global distance and whether it is at most ``t``."""
    glob = partition.global_distribution()
    worst = max(tc_distance(d, glob) for d in partition.group_distributions())
    return worst, worst <= t


def dp_guarantee_check(partition, epsilon):
    """True when every group distribution is within a factor exp(epsilon) of the global one."""
    worst, _ = verify_tcloseness(partition, math.inf)
    return worst <= math.exp(epsilon) * (1 + 1e-12)


def conf_extreme_partition(table, conf_attr, k):
    """Groups of the k smallest and k largest confidential values, peeled from both ends."""
    n = len(table)
    if int(k) != k or k < 1:
        raise ValidationError("k must be a positive integer")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of rows ({n})")
    order = _orderable(table, conf_attr)
    lo, hi = 0, n
    groups = []
    while hi - lo >= 3 * k:
        groups.append(tuple(order[lo:lo + k]))
        groups.append(tuple(order[hi - k:hi]))
        lo, hi = lo + k, hi - k
    if hi - lo >= 2 * k:
        groups.append(tuple(order[lo:lo + k]))
        lo += k
    if hi > lo:
        groups.append(tuple(order[lo:hi]))
    return groups


@dataclass(frozen=True)
class AnatomyRelease:
    quasi_table: DatasetTable
    sensitive_table: DatasetTable


def _label_attr(name, labels, role):
    return AttributeSchema(name, CATEGORICAL, role, taxonomy=flat_taxonomy(labels, name=f"{name}-buckets"))


def _group_attr(count):
    return AttributeSchema("group", NUMERIC, QUASI_IDENTIFIER, bounds=(1.0, float(max(count, 2))))


def _group_ids(partition, n):
    gid = [0] * n
    for g, members in enumerate(partition.groups, start=1):
        for i in members:
            gid[i] = g
    return gid


def anatomy_release(table, partition, conf_attr=None):
    """Two linked tables: quasi-identifiers with a group id, and group id with bucket labels."""
    bk = partition.bucketization
    labels = bk.labels()
    where = bk.bucket_of()
    gid = _group_ids(partition, len(table))
    conf = set(table.names_with_role("confidential"))
    if conf_attr is not None:
        conf.add(conf_attr)
    keep = [a for a in table.schema if a.name not in conf]
    pos = [table.position(a.name) for a in keep]
    gattr = _group_attr(len(partition.groups))
    a_rows = [tuple(row[p] for p in pos) + (float(gid[r]),) for r, row in enumerate(table.rows)]
    quasi = DatasetTable(tuple(keep) + (gattr,), a_rows)
    b_rows = []
    for g, members in enumerate(partition.groups, start=1):
        for lab in sorted(labels[where[i]] for i in members):
            b_rows.append((float(g), lab))
    sens = DatasetTable((gattr, _label_attr(conf_attr or "bucket", labels, "confidential")), b_rows)
    return AnatomyRelease(quasi, sens)


def prob_release(table, partition, conf_attr, rng):
    """Single table whose confidential cell is a bucket label permuted within each group."""
    bk = partition.bucketization
    labels = bk.labels()
    where = bk.bucket_of()
    out = [None] * len(table)
    for members in partition.groups:
        members = list(members)
        labs = [labels[where[i]] for i in members]
        for i, j in zip(members, rng.permutation(len(members))):
            out[i] = labs[j]
    attr = table.attribute(conf_attr)
    new = _label_attr(conf_attr, labels, attr.role)
    return table.with_columns({conf_attr: out}, schema=[new])
