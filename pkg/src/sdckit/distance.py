"""Distances, centrality and total orders over records.

Numeric attributes use absolute difference; categorical attributes use the
taxonomic semantic distance ``log2(1 + (|A u B| - |A n B|) / |A u B|)`` over
ancestor sets.  Record distance normalizes each attribute by the distance
between its two domain boundaries.
"""

import itertools
import math
from collections import Counter, namedtuple
from functools import lru_cache

import numpy as np

from .errors import ValidationError

TotalOrderKey = namedtuple("TotalOrderKey", ["distance", "tiebreak"])


def semantic_distance(a, b, tax):
    pa, pb = tax.phi(a), tax.phi(b)
    if a == b:
        return 0.0
    union = len(pa | pb)
    return math.log2(1.0 + (union - len(pa & pb)) / union)


def marginality(sample, candidate, tax):
    """Sum of semantic distances from ``candidate`` to each sample value (multiplicity counts)."""
    tax.phi(candidate)
    counts = Counter(sample)
    return sum(n * semantic_distance(v, candidate, tax) for v, n in counts.items())


def _marginalities(counts, candidates, tax):
    # vectorized marginality of every candidate towards a counted sample
    dm = tax.distance_matrix
    vidx = np.array([tax.index[v] for v in counts], dtype=np.intp)
    w = np.array(list(counts.values()), dtype=float)
    cidx = np.array([tax.index[c] for c in candidates], dtype=np.intp)
    return dm[np.ix_(cidx, vidx)] @ w


def categorical_boundaries(tax, domain=None):
    """Most marginal concept of the domain and the concept farthest from it."""
    domain = sorted(tax.concepts if domain is None else set(domain))
    for c in domain:
        tax.phi(c)
    if len(domain) < 2:
        raise ValidationError("categorical boundaries need a domain of at least two concepts")
    return _boundaries(tax, tuple(domain))


@lru_cache(maxsize=256)
def _boundaries(tax, domain):
    # domain is sorted, so argmax picks the lexicographically smallest winner
    marg = _marginalities(Counter(domain), domain, tax)
    a_b = domain[int(np.argmax(marg))]
    row = tax.distance_matrix[tax.index[a_b]]
    far = np.array([row[tax.index[c]] for c in domain])
    a_t = domain[int(np.argmax(far))]
    return a_b, a_t


def marginality_centroid(sample, tax, candidates=None):
    """Least marginal concept; candidates default to the sample values and all their ancestors."""
    counts = Counter(sample)
    if candidates is None:
        cand = set()
        for v in counts:
            cand |= tax.phi(v)
        candidates = cand
    candidates = sorted(candidates)
    marg = _marginalities(counts, candidates, tax)
    return candidates[int(np.argmin(marg))]


def attribute_boundaries(attr):
    if attr.is_numeric:
        return attr.bounds
    return categorical_boundaries(attr.taxonomy)


def attribute_distance(attr, x, y):
    if attr.is_numeric:
        return abs(float(x) - float(y))
    return semantic_distance(x, y, attr.taxonomy)


def boundary_distance(attr):
    lo, hi = attribute_boundaries(attr)
    d = attribute_distance(attr, lo, hi)
    if d <= 0:
        raise ValidationError(f"attribute {attr.name!r} has zero boundary distance")
    return d


def record_distance(x, y, schema):
    total = 0.0
    for attr, a, b in zip(schema, x, y):
        total += (attribute_distance(attr, a, b) / boundary_distance(attr)) ** 2
    return math.sqrt(total)


def _next_corner(prev, before, used, m):
    # highest Hamming distance to prev, then to the point before, then lexicographic
    for h in range(m, -1, -1):
        level = []
        for flips in itertools.combinations(range(m), h):
            c = list(prev)
            for i in flips:
                c[i] = 1 - c[i]
            c = tuple(c)
            if c not in used:
                level.append(c)
        if level:
            if before is not None:
                best = max(sum(a != b for a, b in zip(c, before)) for c in level)
                level = [c for c in level if sum(a != b for a, b in zip(c, before)) == best]
            return min(level)
    return None


def corner_sequence(m, count):
    """Corners as 0/1 tuples (0 = lower boundary, 1 = upper boundary)."""
    if count < 1:
        raise ValidationError("count must be positive")
    seq = [tuple([0] * m)]
    total = 2 ** m if m < 60 else None
    used = {seq[0]}
    while len(seq) < count and (total is None or len(seq) < total):
        before = seq[-2] if len(seq) >= 2 else None
        nxt = _next_corner(seq[-1], before, used, m)
        seq.append(nxt)
        used.add(nxt)
    period = len(seq)
    return [seq[i % period] for i in range(count)]


def reference_point_sequence(schema, count):
    """Domain corners in the fixed order that drives insensitive microaggregation."""
    bounds = [attribute_boundaries(a) for a in schema]
    return [tuple(b[bit] for b, bit in zip(bounds, bits))
            for bits in corner_sequence(len(schema), count)]


def order_key(record, reference, schema):
    """Key of the total order: distance to the reference point, then raw values."""
    return TotalOrderKey(record_distance(record, reference, schema), tuple(record))


class RecordSpace:
    """Encodes records as normalized numeric columns plus categorical concept codes.

    Squared record distance in this space is
    ``sum((num - num')**2) + sum(tables[j, code_j, code_j']**2)``.
    """

    def __init__(self, schema):
        self.schema = tuple(schema)
        self.numeric = [i for i, a in enumerate(self.schema) if a.is_numeric]
        self.categorical = [i for i, a in enumerate(self.schema) if not a.is_numeric]
        self.lo = np.array([self.schema[i].bounds[0] for i in self.numeric], dtype=float)
        self.span = np.array([self.schema[i].span for i in self.numeric], dtype=float)
        self.taxonomies = [self.schema[i].taxonomy for i in self.categorical]
        size = max((len(t) for t in self.taxonomies), default=1)
        self.tables = np.zeros((len(self.categorical), size, size))
        self.cat_bounds = []
        for j, (i, tax) in enumerate(zip(self.categorical, self.taxonomies)):
            self.tables[j, :len(tax), :len(tax)] = tax.distance_matrix / boundary_distance(self.schema[i])
            self.cat_bounds.append(categorical_boundaries(tax))

    def encode(self, rows):
        rows = list(rows)
        n = len(rows)
        num = np.empty((n, len(self.numeric)))
        codes = np.empty((n, len(self.categorical)), dtype=np.intp)
        for r, row in enumerate(rows):
            for j, i in enumerate(self.numeric):
                num[r, j] = row[i]
            for j, i in enumerate(self.categorical):
                codes[r, j] = self.taxonomies[j].index[row[i]]
        num = (num - self.lo) / self.span if n else num
        return np.ascontiguousarray(num), np.ascontiguousarray(codes)

    def encode_table(self, table):
        return self.encode(table.rows)

    def corner(self, bits):
        """Encoded reference point for a 0/1 corner over the schema order."""
        num = np.array([float(bits[i]) for i in self.numeric])
        codes = np.array([self.taxonomies[j].index[self.cat_bounds[j][bits[i]]]
                          for j, i in enumerate(self.categorical)], dtype=np.intp)
        return num, codes

    def tiebreak_order(self, rows):
        """Rank of every row under lexicographic order of raw values."""
        keys = [tuple(row) for row in rows]
        order = sorted(range(len(keys)), key=lambda r: (keys[r], r))
        rank = np.empty(len(keys), dtype=np.intp)
        rank[order] = np.arange(len(keys))
        return rank
