"""MDAV and insensitive (fixed-order) microaggregation."""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .distance import RecordSpace, corner_sequence
from .errors import ValidationError


@dataclass(frozen=True)
class Clustering:
    """Ordered clusters of row indices with one centroid per cluster.

    Centroids hold raw values for ``attributes`` (means for numeric
    attributes, least-marginal concepts for categorical ones).
    """

    clusters: tuple
    centroids: tuple
    attributes: tuple

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(tuple(int(i) for i in c) for c in self.clusters))
        object.__setattr__(self, "centroids", tuple(tuple(c) for c in self.centroids))
        object.__setattr__(self, "attributes", tuple(self.attributes))

    @property
    def sizes(self):
        return [len(c) for c in self.clusters]

    def labels(self):
        n = sum(self.sizes)
        out = np.empty(n, dtype=np.intp)
        for g, c in enumerate(self.clusters):
            out[list(c)] = g
        return out


class _Encoded:
    """Encoded view of the clustering attributes plus centroid helpers."""

    def __init__(self, table, attributes):
        if attributes is None:
            attributes = table.names
        attributes = tuple(attributes)
        if not attributes:
            raise ValidationError("microaggregation needs at least one attribute")
        self.attributes = attributes
        self.schema = [table.attribute(a) for a in attributes]
        self.space = RecordSpace(self.schema)
        pos = [table.position(a) for a in attributes]
        self.rows = [tuple(row[p] for p in pos) for row in table.rows]
        self.num, self.codes = self.space.encode(self.rows)
        self.anc = []
        for tax in self.space.taxonomies:
            self.anc.append([np.array(sorted(tax.index[a] for a in tax.ancestors[c]), dtype=np.intp)
                             for c in tax.concepts])

    def centroid_point(self, idx):
        """Encoded centroid of the given rows."""
        num = self.num[idx].mean(axis=0) if len(idx) else np.zeros(self.num.shape[1])
        codes = np.empty(self.codes.shape[1], dtype=np.intp)
        for j, tax in enumerate(self.space.taxonomies):
            codes[j] = self._cat_centroid(j, self.codes[idx, j])
        return np.ascontiguousarray(num), codes

    def _cat_centroid(self, j, col):
        tax = self.space.taxonomies[j]
        counts = np.bincount(col, minlength=len(tax)).astype(float)
        present = np.nonzero(counts)[0]
        cand = np.unique(np.concatenate([self.anc[j][c] for c in present]))
        marg = tax.distance_matrix[np.ix_(cand, present)] @ counts[present]
        return int(cand[np.argmin(marg)])

    def centroid_values(self, idx):
        _, codes = self.centroid_point(idx)
        out, ci = [], 0
        for attr in self.schema:
            if attr.is_numeric:
                lo, hi = attr.bounds
                mean = float(np.mean([self.rows[i][len(out)] for i in idx]))
                out.append(min(max(mean, lo), hi))
            else:
                out.append(self.space.taxonomies[ci].concepts[codes[ci]])
                ci += 1
        return tuple(out)

    def sq_dists(self, idx, point):
        return _accel.sq_dists(np.ascontiguousarray(self.num[idx]), np.ascontiguousarray(self.codes[idx]),
                               self.space.tables, point[0], point[1])

    def row_point(self, i):
        return np.ascontiguousarray(self.num[i]), np.ascontiguousarray(self.codes[i])

    def clustering(self, clusters):
        clusters = [tuple(sorted(int(i) for i in c)) for c in clusters]
        return Clustering(tuple(clusters), tuple(self.centroid_values(list(c)) for c in clusters),
                          self.attributes)


def _check_k(n, k):
    if int(k) != k or k < 1:
        raise ValidationError("k must be a positive integer")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of rows ({n})")


# squared distances live in normalized units, so a fixed number of decimals
# separates rounding noise from real differences
_DECIMALS = 12


def _snap(d):
    return np.round(d, _DECIMALS)


def _farthest(rem, d):
    # lowest row index among the (snapped) maxima
    d = _snap(d)
    return rem[int(np.flatnonzero(d == d.max())[0])]


def _take_nearest(enc, rem, center, k):
    # center first, then its k-1 closest; ties go to the lower row index
    d = _snap(enc.sq_dists(rem, enc.row_point(center)))
    others = rem != center
    cand, dc = rem[others], d[others]
    pick = cand[np.lexsort((cand, dc))[:k - 1]]
    return np.concatenate(([center], pick))


def mdav(table, k, attributes=None):
    """Maximum-distance-to-average-record microaggregation.

    Distances are record distances with every attribute scaled by its domain
    boundaries, so the clustering does not depend on sample statistics.
    """
    n = len(table)
    _check_k(n, k)
    enc = _Encoded(table, attributes)
    rem = np.arange(n)
    clusters = []
    if k == 1:
        return enc.clustering([[i] for i in range(n)])
    while len(rem) >= 3 * k:
        d = enc.sq_dists(rem, enc.centroid_point(rem))
        x1 = _farthest(rem, d)
        d1 = enc.sq_dists(rem, enc.row_point(x1))
        x2 = _farthest(rem, d1)
        c1 = _take_nearest(enc, rem, x1, k)
        clusters.append(c1)
        rem = np.setdiff1d(rem, c1)
        if x2 not in rem:
            x2 = _farthest(rem, enc.sq_dists(rem, enc.row_point(x1)))
        c2 = _take_nearest(enc, rem, x2, k)
        clusters.append(c2)
        rem = np.setdiff1d(rem, c2)
    if len(rem) >= 2 * k:
        d = enc.sq_dists(rem, enc.centroid_point(rem))
        x1 = _farthest(rem, d)
        c1 = _take_nearest(enc, rem, x1, k)
        clusters.append(c1)
        rem = np.setdiff1d(rem, c1)
    if len(rem):
        clusters.append(rem)
    return enc.clustering(clusters)


def insensitive_microagg(table, k, attributes=None, fixed_order=False):
    """Fixed-size microaggregation driven by a data-independent sequence of total orders.

    Step i removes the k smallest remaining records under the order
    "distance to reference corner i, then lexicographic on raw values".
    Corners follow ``reference_point_sequence``; with ``fixed_order`` every
    step uses the first corner.  The final step keeps the last k..2k-1 rows.
    """
    n = len(table)
    _check_k(n, k)
    enc = _Encoded(table, attributes)
    if k == 1:
        return enc.clustering([[i] for i in range(n)])
    rank = enc.space.tiebreak_order(enc.rows)
    steps = max(1, n // k - 1)
    corners = corner_sequence(len(enc.schema), 1 if fixed_order else steps)
    rem = np.arange(n)
    clusters = []
    step = 0
    while len(rem) >= 2 * k:
        bits = corners[step % len(corners)]
        d = _snap(enc.sq_dists(rem, enc.space.corner(bits)))
        pick = rem[np.lexsort((rank[rem], d))[:k]]
        clusters.append(pick)
        rem = np.setdiff1d(rem, pick)
        step += 1
    clusters.append(rem)
    return enc.clustering(clusters)


def replace_with_centroids(table, clustering, attributes=None):
    """Replace the selected attributes of every row with its cluster centroid."""
    attributes = clustering.attributes if attributes is None else tuple(attributes)
    if not attributes:
        return table
    covered = sorted(i for c in clustering.clusters for i in c)
    if covered != list(range(len(table))):
        raise ValidationError("clustering does not partition the table rows")
    cols = {}
    for a in attributes:
        j = clustering.attributes.index(a)
        col = [None] * len(table)
        for c, cen in zip(clustering.clusters, clustering.centroids):
            for i in c:
                col[i] = cen[j]
        cols[a] = col
    return table.with_columns(cols)
