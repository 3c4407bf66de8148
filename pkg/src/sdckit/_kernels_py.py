"""Pure numpy versions of the compiled kernels (same signatures and results)."""

import numpy as np


def sq_dists(num, codes, tables, pnum, pcodes):
    """Squared encoded distance from every row to one point."""
    diff = num - pnum
    out = np.einsum("ij,ij->i", diff, diff)
    for j in range(codes.shape[1]):
        out += tables[j, codes[:, j], pcodes[j]] ** 2
    return out


def linkage(num_o, codes_o, num_m, codes_m, tables, tol, chunk=256):
    """For each masked row j, the originals at minimum distance.

    Returns ``hits[j]`` (1 when original j is among them) and ``ties[j]``
    (how many originals share the minimum, within ``tol`` on the distance).
    """
    n_m = num_m.shape[0]
    hits = np.zeros(n_m, dtype=np.uint8)
    ties = np.zeros(n_m, dtype=np.intp)
    for start in range(0, n_m, chunk):
        stop = min(start + chunk, n_m)
        blk = num_m[start:stop]
        diff = blk[:, None, :] - num_o[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        for j in range(codes_o.shape[1]):
            d2 += tables[j][codes_m[start:stop, j][:, None], codes_o[:, j][None, :]] ** 2
        d = np.sqrt(d2)
        near = d <= d.min(axis=1, keepdims=True) + tol
        ties[start:stop] = near.sum(axis=1)
        rows = np.arange(start, stop)
        ok = rows < num_o.shape[0]
        hits[start:stop][ok] = near[np.nonzero(ok)[0], rows[ok]]
    return hits, ties
