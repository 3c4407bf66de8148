"""Differentially private answers by refining a user-declared prior.

The responder multiplies the prior by ``alpha_u`` on a ball around the true
answer holding mass ``p_u = (1 - alpha_d) / (alpha_u - alpha_d)`` and by
``alpha_d`` elsewhere, then samples the result.  For discrete priors, where
such a ball rarely exists, the maximal ball below ``p_u`` and the maximal far
set below ``p_d = (alpha_u - 1) / (alpha_u - alpha_d)`` take the two factors
and the remaining outcomes take the factor that restores total mass one.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ValidationError

ABSOLUTE = "absolute"
NOMINAL = "nominal"
ORDINAL = "ordinal"
DISTANCES = (ABSOLUTE, NOMINAL, ORDINAL)

INDIVIDUAL = "individual"
STATISTICAL = "statistical"
KINDS = (INDIVIDUAL, STATISTICAL)

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class DiscretePrior:
    outcomes: tuple
    probs: tuple
    distance: str = ABSOLUTE

    def __post_init__(self):
        outcomes, probs = tuple(self.outcomes), tuple(float(p) for p in self.probs)
        if not outcomes or len(outcomes) != len(probs):
            raise ValidationError("prior needs one probability per outcome")
        if len(set(outcomes)) != len(outcomes):
            raise ValidationError("prior outcomes must be distinct")
        if any(p < 0 or not math.isfinite(p) for p in probs):
            raise ValidationError("prior probabilities must be non-negative")
        if abs(math.fsum(probs) - 1.0) > _MASS_TOL:
            raise ValidationError(f"prior mass is {math.fsum(probs)!r}, expected 1")
        if self.distance not in DISTANCES:
            raise ValidationError(f"distance must be one of {DISTANCES}")
        if self.distance == ABSOLUTE:
            try:
                [float(o) for o in outcomes]
            except (TypeError, ValueError):
                raise ValidationError("absolute distance needs numeric outcomes") from None
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probs", probs)

    def distances(self, value):
        if self.distance == ABSOLUTE:
            return np.abs(np.array(self.outcomes, dtype=float) - float(value))
        if value not in self.outcomes:
            raise ValidationError(f"true value {value!r} is not an outcome of the prior")
        if self.distance == NOMINAL:
            return np.array([0.0 if o == value else 1.0 for o in self.outcomes])
        rank = self.outcomes.index(value)
        return np.abs(np.arange(len(self.outcomes)) - rank).astype(float)

    def prob(self, outcome):
        return self.probs[self.outcomes.index(outcome)]

    def mean(self):
        x = np.array(self.outcomes, dtype=float)
        return float(np.dot(x, self.probs))

    def variance(self):
        x = np.array(self.outcomes, dtype=float)
        mu = self.mean()
        return float(np.dot((x - mu) ** 2, self.probs))

    def sample(self, rng):
        return self.outcomes[int(rng.choice(len(self.outcomes), p=np.array(self.probs)))]


@dataclass(frozen=True)
class PiecewiseUniformPrior:
    """Density constant on each interval ``[edges[i], edges[i+1])``; absolute distance."""

    edges: tuple
    densities: tuple
    distance: str = field(default=ABSOLUTE, init=False)

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        dens = tuple(float(d) for d in self.densities)
        if len(edges) != len(dens) + 1 or not dens:
            raise ValidationError("need len(edges) == len(densities) + 1")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValidationError("edges must be strictly increasing")
        if any(d < 0 for d in dens):
            raise ValidationError("densities must be non-negative")
        total = math.fsum(d * (b - a) for d, a, b in zip(dens, edges, edges[1:]))
        if abs(total - 1.0) > _MASS_TOL:
            raise ValidationError(f"prior mass is {total!r}, expected 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "densities", dens)

    @classmethod
    def uniform(cls, lo, hi):
        return cls((lo, hi), (1.0 / (hi - lo),))

    @property
    def support(self):
        return self.edges[0], self.edges[-1]

    def mass(self, lo, hi):
        total = 0.0
        for d, a, b in zip(self.densities, self.edges, self.edges[1:]):
            w = min(b, hi) - max(a, lo)
            if w > 0:
                total += d * w
        return total

    def pdf(self, x):
        for d, a, b in zip(self.densities, self.edges, self.edges[1:]):
            if a <= x < b:
                return d
        return self.densities[-1] if x == self.edges[-1] else 0.0

    def _moment(self, fn):
        return math.fsum(integrate.quad(lambda x, d=d: fn(x) * d, a, b)[0]
                         for d, a, b in zip(self.densities, self.edges, self.edges[1:]))

    def mean(self):
        return self._moment(lambda x: x)

    def variance(self):
        """Variance by numeric integration of each piece."""
        mu = self.mean()
        return self._moment(lambda x: (x - mu) ** 2)

    def sample(self, rng):
        masses = np.array([d * (b - a) for d, a, b in zip(self.densities, self.edges, self.edges[1:])])
        i = int(rng.choice(len(masses), p=masses / masses.sum()))
        return float(rng.uniform(self.edges[i], self.edges[i + 1]))


@dataclass(frozen=True)
class RefinementFactors:
    alpha_u: float
    alpha_d: float
    kind: str = STATISTICAL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"query kind must be one of {KINDS}")
        if not (self.alpha_u >= 1.0 >= self.alpha_d > 0.0):
            raise ValidationError("factors need alpha_u >= 1 >= alpha_d > 0")

    @classmethod
    def for_query(cls, kind, epsilon):
        if not (epsilon >= 0 and math.isfinite(epsilon)):
            raise ValidationError("epsilon must be a non-negative finite number")
        if kind == INDIVIDUAL:
            return cls(math.exp(epsilon), math.exp(-epsilon), kind)
        return cls(math.exp(epsilon / 2.0), math.exp(-epsilon / 2.0), kind)

    def check(self, epsilon):
        """True when the factors respect the privacy budget ``epsilon``."""
        tol = 1e-12
        if self.kind == INDIVIDUAL:
            return self.alpha_u <= math.exp(epsilon) * (1 + tol) and self.alpha_d >= math.exp(-epsilon) * (1 - tol)
        return self.alpha_u / self.alpha_d <= math.exp(epsilon) * (1 + tol)

    @property
    def identity(self):
        return self.alpha_u == self.alpha_d

    @property
    def p_u(self):
        return (1.0 - self.alpha_d) / (self.alpha_u - self.alpha_d)

    @property
    def p_d(self):
        return (self.alpha_u - 1.0) / (self.alpha_u - self.alpha_d)


@dataclass(frozen=True)
class Refinement:
    """Posterior plus the sets that received each factor."""

    posterior: object
    up: tuple
    down: tuple
    alpha_mid: float = None


def refine(prior, true_value, factors):
    if factors.identity:
        return Refinement(prior, (), (), None)
    if isinstance(prior, PiecewiseUniformPrior):
        return _refine_continuous(prior, float(true_value), factors)
    return _refine_discrete(prior, true_value, factors)


def _refine_discrete(prior, value, f):
    dist = prior.distances(value)
    probs = np.array(prior.probs)
    levels = np.unique(dist)
    p_u, p_d = f.p_u, f.p_d
    # balls around the true value are prefixes of the distance levels
    ball_mass = [math.fsum(probs[dist <= lev]) for lev in levels]
    for lev, m in zip(levels, ball_mass):
        if abs(m - p_u) <= _MASS_TOL:
            up = dist <= lev
            post = np.where(up, f.alpha_u * probs, f.alpha_d * probs)
            return Refinement(_normalized(prior, post), _members(prior, up),
                              _members(prior, ~up), None)
    up = np.zeros(len(probs), dtype=bool)
    for lev, m in zip(levels, ball_mass):
        if m < p_u:
            up = dist <= lev
    down = np.zeros(len(probs), dtype=bool)
    for lev in levels[::-1]:
        cand = dist >= lev
        if math.fsum(probs[cand]) < p_d:
            down = cand
    mid = ~(up | down)
    pu, pd, pm = math.fsum(probs[up]), math.fsum(probs[down]), math.fsum(probs[mid])
    alpha_mid = (1.0 - f.alpha_u * pu - f.alpha_d * pd) / pm if pm > 0 else 1.0
    if not (f.alpha_d * (1 - 1e-12) <= alpha_mid <= f.alpha_u * (1 + 1e-12)):
        raise ValidationError("middle factor falls outside [alpha_d, alpha_u]")
    post = np.where(up, f.alpha_u * probs, np.where(down, f.alpha_d * probs, alpha_mid * probs))
    return Refinement(_normalized(prior, post), _members(prior, up), _members(prior, down), alpha_mid)


def _members(prior, mask):
    return tuple(o for o, m in zip(prior.outcomes, mask) if m)


def _normalized(prior, post):
    post = np.maximum(post, 0.0)
    post = post / math.fsum(post)
    return DiscretePrior(prior.outcomes, tuple(post), prior.distance)


def _refine_continuous(prior, v, f):
    p_u = f.p_u
    lo, hi = prior.support
    top = max(abs(v - lo), abs(hi - v))
    # smallest radius whose ball carries mass p_u
    a, b = 0.0, top
    for _ in range(200):
        m = 0.5 * (a + b)
        if prior.mass(v - m, v + m) >= p_u:
            b = m
        else:
            a = m
    rho = b
    cuts = sorted(set(prior.edges) | {min(max(v - rho, lo), hi), min(max(v + rho, lo), hi)})
    edges, dens = [cuts[0]], []
    for x0, x1 in zip(cuts, cuts[1:]):
        mid = 0.5 * (x0 + x1)
        inside = abs(mid - v) <= rho
        dens.append(prior.pdf(mid) * (f.alpha_u if inside else f.alpha_d))
        edges.append(x1)
    dens = np.array(dens)
    widths = np.diff(edges)
    dens = dens / math.fsum(dens * widths)
    return Refinement(PiecewiseUniformPrior(tuple(edges), tuple(dens)), (v - rho, v + rho),
                      ((lo, v - rho), (v + rho, hi)), None)


def respond(prior, true_value, kind, epsilon, rng, factors=None):
    """One draw from the refined prior."""
    factors = factors or RefinementFactors.for_query(kind, epsilon)
    if not factors.check(epsilon):
        raise ValidationError("factors exceed the privacy budget")
    return refine(prior, true_value, factors).posterior.sample(rng)


def thresholded_laplace(true_value, scale, threshold=0.5):
    """P(response = 1) when Laplace noise is added and the result is thresholded."""
    x = threshold - true_value
    if x >= 0:
        return 0.5 * math.exp(-x / scale)
    return 1.0 - 0.5 * math.exp(x / scale)


@dataclass(frozen=True)
class Query:
    kind: str
    prior: object
    epsilon: float
    factors: RefinementFactors = None


@dataclass(frozen=True)
class Answer:
    value: object


@dataclass(frozen=True)
class Refusal:
    remaining_budget: float
    reason: str = "budget exceeded"


class RefinementSession:
    """Sequential query session; a query is answered only while the spent budget stays within ``epsilon``."""

    def __init__(self, epsilon):
        if not (epsilon > 0 and math.isfinite(epsilon)):
            raise ValidationError("session budget must be positive")
        self.epsilon = float(epsilon)
        self.transcript = []

    @property
    def consumed(self):
        return math.fsum(q.epsilon for q, _ in self.transcript)

    @property
    def remaining(self):
        return max(self.epsilon - self.consumed, 0.0)

    def submit(self, query, true_value, rng):
        if not (query.epsilon > 0):
            raise ValidationError("query epsilon must be positive")
        if math.fsum([self.consumed, query.epsilon]) > self.epsilon * (1 + 1e-12):
            return Refusal(self.remaining)
        value = respond(query.prior, true_value, query.kind, query.epsilon, rng, query.factors)
        self.transcript.append((query, value))
        return Answer(value)


class LaplaceSession:
    """Laplace noise with a fixed scale; answers while declared cumulative sensitivity / scale <= epsilon."""

    def __init__(self, epsilon, scale):
        if not (epsilon > 0 and scale > 0):
            raise ValidationError("epsilon and scale must be positive")
        self.epsilon = float(epsilon)
        self.scale = float(scale)
        self.transcript = []

    def submit(self, true_value, cumulative_sensitivity, rng):
        if cumulative_sensitivity < 0:
            raise ValidationError("sensitivity must be non-negative")
        if cumulative_sensitivity == 0:
            warnings.warn("declared sensitivity is 0; the answer is trusted to be data independent",
                          stacklevel=2)
        if cumulative_sensitivity / self.scale > self.epsilon * (1 + 1e-12):
            return Refusal(max(self.epsilon - self._spent(), 0.0))
        value = float(true_value) + float(rng.laplace(0.0, self.scale))
        self.transcript.append((cumulative_sensitivity, value))
        return Answer(value)

    def _spent(self):
        return max((s for s, _ in self.transcript), default=0.0) / self.scale
