"""Noise distributions for epsilon-differential privacy.

The optimal univariate noise is a symmetric staircase: density ``m0`` on the
plateau ``[-d, d]`` and ``m0 * exp(-i * eps)`` on band ``i``, the set
``d + (i-1)*df < |x| <= d + i*df``.  Its multivariate analogue for a box of
neighbor differences uses nested box shells with the same geometric decay.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import ValidationError

# band edges closer than this (in band units) count as the inner band, so that
# grid points computed in floating point never skip a band
_EDGE_TOL = 1e-9


def _check_pos(**kw):
    for name, v in kw.items():
        if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be a positive finite number, got {v!r}")


def laplace_mechanism(value, sensitivity, epsilon, rng):
    """Add i.i.d. Laplace(sensitivity/epsilon) noise to every component of ``value``."""
    _check_pos(sensitivity=sensitivity, epsilon=epsilon)
    value = np.asarray(value, dtype=float)
    return value + rng.laplace(0.0, sensitivity / epsilon, size=value.shape)


@dataclass(frozen=True)
class LaplaceDensity:
    """Zero-mean Laplace density with the given scale."""

    scale: float

    def __post_init__(self):
        _check_pos(scale=self.scale)

    @classmethod
    def calibrated(cls, epsilon, sensitivity):
        _check_pos(epsilon=epsilon, sensitivity=sensitivity)
        return cls(sensitivity / epsilon)

    @property
    def variance(self):
        return 2.0 * self.scale ** 2

    def logpdf(self, x):
        return -np.abs(np.asarray(x, dtype=float)) / self.scale - math.log(2.0 * self.scale)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.5 * np.exp(x / self.scale), 1.0 - 0.5 * np.exp(-x / self.scale))

    def ci_size(self, level):
        """Width of the symmetric interval holding ``level`` of the mass."""
        _check_level(level)
        return 2.0 * self.scale * math.log(1.0 / (1.0 - level))

    def tail_radius(self, mass):
        return self.scale * math.log(1.0 / mass)

    def breakpoints(self, radius):
        return np.array([0.0])

    def sample(self, rng, size=None):
        return rng.laplace(0.0, self.scale, size=size)


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise ValidationError("confidence level must lie in (0, 1)")


@dataclass(frozen=True)
class StepDensity:
    """Symmetric staircase density; see the module docstring."""

    epsilon: float
    sensitivity: float
    d: float
    m0: float

    @property
    def r(self):
        return math.exp(-self.epsilon)

    def normalization(self):
        r = self.r
        return 2.0 * self.m0 * self.d + 2.0 * self.sensitivity * self.m0 * r / (1.0 - r)

    def band_index(self, x):
        u = (np.abs(np.asarray(x, dtype=float)) - self.d) / self.sensitivity
        return np.maximum(np.ceil(u - _EDGE_TOL), 0.0)

    def logpdf(self, x):
        return math.log(self.m0) - self.epsilon * self.band_index(x)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    @property
    def variance(self):
        d, D, r, m0 = self.d, self.sensitivity, self.r, self.m0
        q = 1.0 - r
        s0, s1, s2 = 1.0 / q, r / q ** 2, r * (1.0 + r) / q ** 3
        # sum_i r^i * ((d+(i+1)D)^3 - (d+iD)^3) / 3 via power sums
        bands = (D * (d * d * s0 + 2.0 * d * D * s1 + D * D * s2)
                 + D * D * (d * s0 + D * s1) + D ** 3 * s0 / 3.0)
        return 2.0 * m0 * d ** 3 / 3.0 + 2.0 * m0 * r * bands

    def mass_within(self, w):
        """Probability of ``|X| <= w``."""
        d, D, r, m0 = self.d, self.sensitivity, self.r, self.m0
        if w <= d:
            return 2.0 * m0 * max(w, 0.0)
        n = math.floor((w - d) / D)
        full = 2.0 * m0 * D * r * (1.0 - r ** n) / (1.0 - r)
        return 2.0 * m0 * d + full + 2.0 * m0 * r ** (n + 1) * (w - d - n * D)

    def ci_size(self, level):
        _check_level(level)
        d, D, r, m0 = self.d, self.sensitivity, self.r, self.m0
        plateau = 2.0 * m0 * d
        if level <= plateau:
            return level / m0
        rho = level - plateau
        unit = 2.0 * m0 * D * r / (1.0 - r)
        n = math.floor(math.log(1.0 - rho / unit) / math.log(r))
        # guard against floor landing one band off at exact edges
        while n > 0 and unit * (1.0 - r ** n) > rho:
            n -= 1
        while unit * (1.0 - r ** (n + 1)) <= rho:
            n += 1
        w = d + n * D + (rho - unit * (1.0 - r ** n)) / (2.0 * m0 * r ** (n + 1))
        return 2.0 * w

    def tail_radius(self, mass):
        unit = 2.0 * self.m0 * self.sensitivity * self.r / (1.0 - self.r)
        if mass >= unit:
            return self.d
        n = math.ceil(math.log(mass / unit) / math.log(self.r))
        return self.d + n * self.sensitivity

    def breakpoints(self, radius):
        n = int(math.ceil(max(radius - self.d, 0.0) / self.sensitivity)) + 1
        pos = self.d + self.sensitivity * np.arange(n + 1)
        return np.concatenate([-pos[::-1], pos])

    def sample(self, rng, size=None):
        """Exact sampler: plateau or band by mass, then uniform inside, then a random sign."""
        shape = () if size is None else size
        u = rng.random(shape)
        plateau = u < 2.0 * self.m0 * self.d
        band = rng.geometric(1.0 - self.r, size=shape)
        lo = np.where(plateau, 0.0, self.d + (band - 1) * self.sensitivity)
        width = np.where(plateau, self.d, self.sensitivity)
        mag = lo + width * rng.random(shape)
        sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        out = sign * mag
        return float(out) if size is None else out


def optimal_univariate(epsilon, sensitivity, d):
    """Staircase density with plateau half-width ``d``; the plateau height follows from normalization."""
    _check_pos(epsilon=epsilon, sensitivity=sensitivity)
    if not (math.isfinite(d) and d >= 0):
        raise ValidationError(f"plateau half-width must be >= 0, got {d!r}")
    r = math.exp(-epsilon)
    m0 = (1.0 - r) / (2.0 * (d * (1.0 - r) + sensitivity * r))
    return StepDensity(float(epsilon), float(sensitivity), float(d), m0)


@dataclass(frozen=True)
class OptimizedStep:
    d: float
    m0: float
    value: float
    density: StepDensity


def optimize_step_density(epsilon, sensitivity, objective="min-variance", level=0.95):
    """Choose the plateau half-width minimizing variance or a symmetric confidence interval."""
    _check_pos(epsilon=epsilon, sensitivity=sensitivity)
    if objective in ("min-variance", "variance"):
        def f(d):
            return optimal_univariate(epsilon, sensitivity, d).variance
    elif objective in ("min-ci", "ci"):
        _check_level(level)

        def f(d):
            return optimal_univariate(epsilon, sensitivity, d).ci_size(level)
    else:
        raise ValidationError(f"unknown objective {objective!r}")
    hi = 4.0 * sensitivity
    while True:
        grid = np.linspace(0.0, hi, 2001)
        vals = np.array([f(d) for d in grid])
        j = int(np.argmin(vals))
        if j < len(grid) - 1:
            break
        hi *= 2.0
    step = grid[1] - grid[0]
    lo_b, hi_b = max(grid[j] - step, 0.0), grid[j] + step
    res = optimize.minimize_scalar(f, bounds=(lo_b, hi_b), method="bounded",
                                   options={"xatol": 1e-9 * sensitivity})
    d, val = (res.x, res.fun) if res.fun <= vals[j] else (grid[j], vals[j])
    dens = optimal_univariate(epsilon, sensitivity, float(d))
    return OptimizedStep(dens.d, dens.m0, float(val), dens)


@dataclass(frozen=True)
class BoxStepDensity:
    """Nested box shells with geometric decay.

    Box ``i`` has half-widths ``z + i*s``; shell ``i`` is box ``i`` minus
    box ``i-1`` and carries density ``M * exp(-i*eps)``.
    """

    epsilon: float
    s: tuple
    z: tuple
    M: float

    @property
    def dim(self):
        return len(self.s)

    @property
    def r(self):
        return math.exp(-self.epsilon)

    def half_widths(self, t):
        return np.asarray(self.z) + t * np.asarray(self.s)

    def box_volume(self, t):
        if t < 0:
            return 0.0
        return float(np.prod(2.0 * self.half_widths(t)))

    def shell_volume(self, i):
        return self.box_volume(i) - self.box_volume(i - 1)

    def shell_mass(self, i):
        return self.M * self.r ** i * self.shell_volume(i)

    def shell_index(self, points):
        x = np.abs(np.atleast_2d(np.asarray(points, dtype=float)))
        u = (x - np.asarray(self.z)) / np.asarray(self.s)
        return np.maximum(np.ceil(u - _EDGE_TOL), 0.0).max(axis=1)

    def logpdf(self, points):
        return math.log(self.M) - self.epsilon * self.shell_index(points)

    def pdf(self, points):
        return np.exp(self.logpdf(points))

    def total_mass(self):
        return _series(lambda i: self.shell_mass(i))

    def tail_shells(self, mass):
        """Smallest n with mass outside box n below ``mass`` (floored at float resolution)."""
        mass = max(mass, 1e-15)
        inside, n = 0.0, 0
        while True:
            inside += self.shell_mass(n)
            if 1.0 - inside < mass:
                return n
            n += 1

    def marginal_pdf(self, k, x):
        """Density of component ``k`` at ``x`` (closed form over shells)."""
        i = int(max(math.ceil((abs(x) - self.z[k]) / self.s[k] - _EDGE_TOL), 0))
        return self._marginal_level(k, i)

    def _other_volume(self, k, t):
        if t < 0:
            return 0.0
        h = self.half_widths(t)
        return float(np.prod(np.delete(2.0 * h, k)))

    def _marginal_level(self, k, i):
        r = self.r
        head = r ** i * self._other_volume(k, i)
        tail = _series(lambda j: r ** (i + 1 + j) * (self._other_volume(k, i + 1 + j)
                                                      - self._other_volume(k, i + j)))
        return self.M * (head + tail)

    def marginal_variance(self, k):
        z, s = self.z[k], self.s[k]

        def band_moment(i):
            if i == 0:
                return 2.0 * z ** 3 / 3.0
            return 2.0 * ((z + i * s) ** 3 - (z + (i - 1) * s) ** 3) / 3.0
        return _series(lambda i: self._marginal_level(k, i) * band_moment(i))

    def mass_within(self, t):
        """Mass of the box with half-widths ``z + t*s``."""
        if t < 0:
            return 0.0
        n = math.floor(t)
        inner = sum(self.shell_mass(i) for i in range(n + 1))
        return inner + self.M * self.r ** (n + 1) * (self.box_volume(t) - self.box_volume(n))

    def confidence_region(self, level):
        """Box ``[-(z + t*s), z + t*s]`` holding ``level`` of the mass: returns (t, volume)."""
        _check_level(level)
        hi = 1.0
        while self.mass_within(hi) < level:
            hi *= 2.0
        t = optimize.brentq(lambda t: self.mass_within(t) - level, 0.0, hi, xtol=1e-12)
        return t, self.box_volume(t)

    def sample(self, rng, size=None):
        """Shell by mass, then uniform inside the shell.

        Shells beyond the 1e-15 tail are dropped; that mass is below double
        precision resolution of the shell probabilities anyway.
        """
        count = 1 if size is None else int(size)
        n = self.tail_shells(1e-15)
        p = np.array([self.shell_mass(i) for i in range(n + 1)])
        shells = rng.choice(len(p), size=count, p=p / p.sum())
        out = np.empty((count, self.dim))
        for i in np.unique(shells):
            rows = np.flatnonzero(shells == i)
            out[rows] = self._uniform_in_shell(int(i), rng, len(rows))
        return out[0] if size is None else out

    def _uniform_in_shell(self, i, rng, count):
        b = np.asarray(self.half_widths(i))
        if i == 0:
            return rng.uniform(-b, b, size=(count, self.dim))
        a = np.asarray(self.half_widths(i - 1))
        # split the shell by the first coordinate that leaves the inner box
        vols = np.array([np.prod(2 * a[:j]) * 2 * (b[j] - a[j]) * np.prod(2 * b[j + 1:])
                         for j in range(self.dim)])
        first = rng.choice(self.dim, size=count, p=vols / vols.sum())
        inner = rng.uniform(-a, a, size=(count, self.dim))
        outer = rng.uniform(-b, b, size=(count, self.dim))
        cols = np.arange(self.dim)[None, :]
        x = np.where(cols < first[:, None], inner, outer)
        edge = rng.uniform(a[first], b[first]) * np.where(rng.random(count) < 0.5, -1.0, 1.0)
        x[np.arange(count), first] = edge
        return x


def _series(term, rtol=1e-16, min_terms=8):
    # terms are polynomial times geometric, so they eventually decrease monotonically
    total, i, small = 0.0, 0, 0
    while True:
        t = term(i)
        total += t
        small = small + 1 if abs(t) <= rtol * abs(total) else 0
        if small >= 3 and i >= min_terms:
            return total
        i += 1
        if i > 100000:
            return total


def box_step_density(epsilon, s, z):
    """Box-shell density for neighbor differences in ``prod([-s_j, s_j])``."""
    _check_pos(epsilon=epsilon)
    s = tuple(float(v) for v in s)
    z = tuple(float(v) for v in z)
    if len(s) != len(z) or not s:
        raise ValidationError("s and z must be non-empty and of equal dimension")
    for sj, zj in zip(s, z):
        if not (0.0 < zj <= sj):
            raise ValidationError("plateau half-widths must satisfy 0 < z_j <= s_j")
    unnorm = BoxStepDensity(float(epsilon), s, z, 1.0)
    return BoxStepDensity(float(epsilon), s, z, 1.0 / unnorm.total_mass())


@dataclass(frozen=True)
class MultiLaplaceDensity:
    """Independent Laplace noise per component with a common scale."""

    scale: float
    dim: int

    @property
    def variance(self):
        return 2.0 * self.scale ** 2

    def logpdf(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return -np.abs(x).sum(axis=1) / self.scale - self.dim * math.log(2.0 * self.scale)

    def l1_region(self, level):
        """L1 ball holding ``level`` of the mass: returns (radius, volume)."""
        _check_level(level)
        # the L1 norm of the noise is Gamma(dim, scale)
        alpha = self.scale * special.gammaincinv(self.dim, level)
        return alpha, (2.0 * alpha) ** self.dim / math.factorial(self.dim)

    def tail_shells(self, mass):
        return None

    def sample(self, rng, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.laplace(0.0, self.scale, size=shape)


@dataclass(frozen=True)
class DPCheck:
    passed: bool
    max_ratio: float


def dp_density_check(density, epsilon, sensitivity=None, step_fraction=None):
    """Grid check of ``pdf(x) <= exp(eps) * pdf(x + delta)`` for neighbor shifts ``delta``.

    Univariate densities are checked on a grid of step ``sensitivity/200``
    (plus band edges) over shifts ``|delta| <= sensitivity``.  Box densities
    are checked with shifts at the corners, edges and faces of the box of
    neighbor differences (``sensitivity`` defaults to the density's ``s``).
    """
    if isinstance(density, (BoxStepDensity, MultiLaplaceDensity)):
        return _box_check(density, epsilon, sensitivity, step_fraction or 20)
    _check_pos(epsilon=epsilon, sensitivity=sensitivity)
    frac = step_fraction or 200
    h = sensitivity / frac
    radius = density.tail_radius(1e-9) + sensitivity
    grid = np.arange(-radius, radius + h, h)
    edges = density.breakpoints(radius)
    grid = np.unique(np.concatenate([grid, edges, edges - h / 3.0, edges + h / 3.0]))
    shifts = np.arange(-frac, frac + 1) * h
    shifts[0], shifts[-1] = -sensitivity, sensitivity
    worst = -np.inf
    for start in range(0, len(grid), 4096):
        x = grid[start:start + 4096]
        lx = density.logpdf(x)
        ly = density.logpdf((x[:, None] + shifts[None, :]).ravel()).reshape(len(x), len(shifts))
        worst = max(worst, float((lx[:, None] - ly).max()))
    ratio = math.exp(worst)
    return DPCheck(ratio <= math.exp(epsilon) * (1.0 + 1e-9), ratio)


def _box_check(density, epsilon, sensitivity, frac):
    s = np.asarray(density.s if sensitivity is None else sensitivity, dtype=float)
    dim = len(s)
    if dim > 3:
        raise ValidationError("grid check supports at most three dimensions")
    if isinstance(density, BoxStepDensity):
        n = density.tail_shells(1e-9) + 1
        axes = []
        for j in range(dim):
            zj, sj = density.z[j], density.s[j]
            edges = zj + sj * np.arange(n + 1)
            edges = np.concatenate([-edges[::-1], edges])
            reg = np.arange(-edges[-1], edges[-1] + sj / frac, sj / frac)
            axes.append(np.unique(np.concatenate([reg, edges, edges - sj / (3 * frac), edges + sj / (3 * frac)])))
    else:
        # log-density is piecewise linear with kinks only on the axes, so a coarse grid suffices
        radius = density.scale * math.log(1e9)
        axes = [np.unique(np.concatenate([np.arange(-radius - sj, radius + 2 * sj, sj / 4), [0.0]]))
                for sj in s]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    levels = [np.array([-1.0, -0.5, 0.0, 0.5, 1.0]) * sj for sj in s]
    shifts = np.stack(np.meshgrid(*levels, indexing="ij"), axis=-1).reshape(-1, dim)
    shifts = shifts[np.any(shifts != 0, axis=1)]
    lx = density.logpdf(mesh)
    worst = -np.inf
    for delta in shifts:
        worst = max(worst, float((lx - density.logpdf(mesh + delta)).max()))
    ratio = math.exp(worst)
    return DPCheck(ratio <= math.exp(epsilon) * (1.0 + 1e-9), ratio)
