"""Differentially private microdata via insensitive microaggregation.

Insensitive microaggregation with cluster size k reduces the sensitivity of
each released centroid to ``(a_t - a_b) / k``.  Numeric centroids then get
Laplace (or optimal staircase) noise with budget ``eps / m`` per attribute and
are clamped to the domain; categorical centroids are drawn with the
exponential mechanism over all taxonomy concepts, scored by marginality.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distance import boundary_distance
from .dpnoise import optimize_step_density
from .errors import ValidationError
from .microagg import insensitive_microagg
from .rng import substream

LAPLACE = "laplace"
OPTIMAL = "optimal-step"


@dataclass(frozen=True)
class ReleaseConfig:
    k: int
    epsilon: float
    noise: str = LAPLACE
    seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValidationError("k must be a positive integer")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValidationError("epsilon must be positive and finite")
        noise = {"optimal": OPTIMAL}.get(self.noise, self.noise)
        if noise not in (LAPLACE, OPTIMAL):
            raise ValidationError(f"unknown noise kind {self.noise!r}")
        object.__setattr__(self, "noise", noise)


def centroid_sensitivity(attr, k):
    """Sensitivity of one released centroid coordinate."""
    return attr.span / k


def noise_scales(table, cfg):
    """Laplace scale per numeric attribute: ``(a_t - a_b) / (k * eps / m)``."""
    m = len(table.schema)
    eps_attr = cfg.epsilon / m
    return {a.name: centroid_sensitivity(a, cfg.k) / eps_attr for a in table.schema if a.is_numeric}


def exponential_weights(sample, attr, eps_attr):
    """Selection probabilities of every concept as the released centroid of ``sample``."""
    tax = attr.taxonomy
    counts = np.bincount([tax.index[v] for v in sample], minlength=len(tax)).astype(float)
    marg = tax.distance_matrix @ counts
    score = -eps_attr * marg / (2.0 * boundary_distance(attr))
    w = np.exp(score - score.max())
    return w / w.sum()


def _clusters(table, cfg):
    if cfg.k == 1:
        return [(i,) for i in range(len(table))], None
    cl = insensitive_microagg(table, cfg.k)
    return cl.clusters, cl


def dp_release(table, cfg):
    """Joint insensitive microaggregation, then per-cluster noisy numeric and sampled categorical centroids."""
    if len(table) < cfg.k:
        raise ValidationError(f"k={cfg.k} exceeds the number of rows ({len(table)})")
    m = len(table.schema)
    eps_attr = cfg.epsilon / m
    clusters, cl = _clusters(table, cfg)
    centroids = cl.centroids if cl is not None else [table.rows[c[0]] for c in clusters]
    cols = {a.name: [None] * len(table) for a in table.schema}
    step = {}
    for j, attr in enumerate(table.schema):
        if attr.is_numeric and cfg.noise == OPTIMAL:
            step[j] = optimize_step_density(eps_attr, centroid_sensitivity(attr, cfg.k)).density
    scales = noise_scales(table, cfg)
    for g, members in enumerate(clusters):
        cen = centroids[g]
        for j, attr in enumerate(table.schema):
            if attr.is_numeric:
                # one noise draw per record, from a stream keyed by (seed, row, attribute)
                for i in members:
                    rng = substream(cfg.seed, i, j)
                    if cfg.noise == LAPLACE:
                        noise = rng.laplace(0.0, scales[attr.name])
                    else:
                        noise = step[j].sample(rng)
                    lo, hi = attr.bounds
                    cols[attr.name][i] = min(max(float(cen[j]) + noise, lo), hi)
            else:
                rng = substream(cfg.seed, g, j, 1)
                sample = [table.rows[i][j] for i in members]
                p = exponential_weights(sample, attr, eps_attr)
                value = attr.taxonomy.concepts[int(rng.choice(len(p), p=p))]
                for i in members:
                    cols[attr.name][i] = value
    return table.with_columns(cols)


def dp_release_numeric(table, cfg):
    if any(not a.is_numeric for a in table.schema):
        raise ValidationError("dp_release_numeric needs an all-numeric table")
    return dp_release(table, cfg)


def dp_release_categorical(table, cfg):
    for a in table.schema:
        if a.is_numeric:
            raise ValidationError("dp_release_categorical needs an all-categorical table")
        if a.taxonomy is None:
            raise ValidationError(f"attribute {a.name!r} has no taxonomy")
    return dp_release(table, cfg)
