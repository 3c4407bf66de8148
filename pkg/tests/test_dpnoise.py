import math

import numpy as np
import pytest

from sdckit.dpnoise import (LaplaceDensity, MultiLaplaceDensity, StepDensity, box_step_density,
                            dp_density_check, laplace_mechanism, optimal_univariate, optimize_step_density)
from sdckit.errors import ValidationError


def test_laplace_mechanism_moments():
    rng = np.random.default_rng(0)
    n = 200_000
    out = laplace_mechanism(np.full(n, 10.0), 1.0, 1.0, rng)
    assert abs(out.mean() - 10.0) < 3 * math.sqrt(2.0 / n)
    # variance of a Laplace(1) sample variance: (mu4 - sigma^4)/n = (24 - 4)/n
    assert abs(out.var() - 2.0) < 3 * math.sqrt(20.0 / n)
    p = 1 - 0.5 * math.exp(-0.5)
    assert abs(np.mean(out - 10.0 <= 0.5) - p) < 3 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("args", [(1.0, 0.0, 1.0), (1.0, 1.0, -1.0)])
def test_laplace_mechanism_rejects(args):
    with pytest.raises(ValidationError):
        laplace_mechanism(args[0], args[1], args[2], np.random.default_rng(0))


def test_laplace_ci():
    assert LaplaceDensity.calibrated(1.0, 1.0).ci_size(0.95) == pytest.approx(2 * math.log(20))
    assert round(LaplaceDensity.calibrated(1.0, 1.0).ci_size(0.95), 2) == 5.99


def test_paper_plateau_width():
    dens = optimal_univariate(1.0, 1.0, 0.416737)
    assert dens.m0 == pytest.approx(0.500644, abs=1e-6)
    assert dens.variance == pytest.approx(1.9181, abs=1e-4)
    assert dens.normalization() == pytest.approx(1.0, abs=1e-12)


def test_degenerate_sensitivity():
    with pytest.raises(ValidationError):
        optimal_univariate(1.0, 0.0, 0.3)
    with pytest.raises(ValidationError):
        optimal_univariate(1.0, 1.0, -0.1)


# frozen from an independent arbitrary-precision minimization
@pytest.mark.parametrize("eps, d, var", [(0.1, 0.4917, 199.9167), (0.5, 0.4583, 7.9170), (1.0, 0.41674, 1.9181035)])
def test_min_variance(eps, d, var):
    res = optimize_step_density(eps, 1.0)
    assert res.value == pytest.approx(var, rel=1e-5)
    assert res.d == pytest.approx(d, abs=1e-4)
    assert res.value < LaplaceDensity.calibrated(eps, 1.0).variance


@pytest.mark.parametrize("eps, size", [(0.1, 59.9105), (0.5, 11.9784), (1.0, 5.98653)])
def test_min_ci(eps, size):
    res = optimize_step_density(eps, 1.0, "min-ci", 0.95)
    assert res.value == pytest.approx(size, abs=5e-4)
    assert res.value <= LaplaceDensity.calibrated(eps, 1.0).ci_size(0.95)


def test_ci_matches_mass():
    dens = optimal_univariate(0.7, 2.0, 0.6)
    for level in (0.3, 0.8, 0.95, 0.999):
        w = dens.ci_size(level) / 2
        assert dens.mass_within(w) == pytest.approx(level, abs=1e-12)


def test_unknown_objective():
    with pytest.raises(ValidationError):
        optimize_step_density(1.0, 1.0, "min-entropy")


def test_local_optimality():
    best = optimize_step_density(1.0, 1.0)
    for delta in (-1e-3, 1e-3):
        assert optimal_univariate(1.0, 1.0, best.d + delta).variance > best.value
    bumped = StepDensity(1.0, 1.0, best.d, best.m0 + 1e-3)
    assert abs(bumped.normalization() - 1.0) > 1e-4


def test_sampler_moments():
    dens = optimize_step_density(1.0, 1.0).density
    rng = np.random.default_rng(3)
    n = 200_000
    x = dens.sample(rng, n)
    var = dens.variance
    # fourth moment from a fine Riemann sum is enough to size the tolerance
    assert abs(x.mean()) < 3 * math.sqrt(var / n)
    grid = np.linspace(-40, 40, 800_001)
    m4 = float(np.sum(grid ** 4 * dens.pdf(grid)) * (grid[1] - grid[0]))
    assert abs(x.var() - var) < 3 * math.sqrt((m4 - var ** 2) / n)
    p = 2 * dens.m0 * dens.d
    assert abs(np.mean(np.abs(x) <= dens.d) - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_step_is_exactly_private():
    dens = optimize_step_density(1.0, 1.0).density
    check = dp_density_check(dens, 1.0, 1.0)
    assert check.passed
    assert check.max_ratio == pytest.approx(math.e, rel=1e-12)


def test_laplace_checks():
    assert dp_density_check(LaplaceDensity(1.0), 1.0, 1.0).passed
    bad = dp_density_check(LaplaceDensity(0.9), 1.0, 1.0)
    assert not bad.passed and bad.max_ratio > math.e


BOX = dict(epsilon=1.0, s=(1.0, 10.0), z=(0.1, 1.0))


def test_box_normalization_and_variances():
    box = box_step_density(**BOX)
    assert box.M == pytest.approx(0.0180405661523, rel=1e-10)
    assert box.total_mass() == pytest.approx(1.0, abs=1e-12)
    assert box.marginal_variance(0) == pytest.approx(4.0338048, rel=1e-7)
    assert box.marginal_variance(1) == pytest.approx(403.38048, rel=1e-7)


def test_box_region():
    t, vol = box_step_density(**BOX).confidence_region(0.95)
    assert t == pytest.approx(4.687717, abs=1e-6)
    assert vol == pytest.approx(916.8895, abs=1e-3)
    # the same region written as [-beta*s, beta*s]
    assert t + 0.1 / 1.0 == pytest.approx(4.79, abs=0.01)


def test_box_shell_mass_decays():
    box = box_step_density(**BOX)
    masses = [box.shell_mass(i) for i in range(60)]
    start = 3
    assert all(a > b for a, b in zip(masses[start:], masses[start + 1:]))


def test_box_sampler():
    box = box_step_density(**BOX)
    x = box.sample(np.random.default_rng(8), 40_000)
    assert x.shape == (40_000, 2)
    assert abs(x[:, 0].var() - box.marginal_variance(0)) < 0.15
    assert abs(x[:, 1].var() / box.marginal_variance(1) - 1) < 0.04


def test_box_validation():
    with pytest.raises(ValidationError):
        box_step_density(1.0, (1.0, 2.0), (0.5,))
    with pytest.raises(ValidationError):
        box_step_density(1.0, (1.0,), (1.5,))


def test_laplace_l1_region():
    alpha, size = MultiLaplaceDensity(11.0, 2).l1_region(0.95)
    assert alpha == pytest.approx(52.18251, abs=1e-4)
    assert size == pytest.approx(2 * alpha ** 2)
    assert MultiLaplaceDensity(11.0, 2).variance == 242.0
