"""Marginal checks for the subordinator samplers.

CDFs come from quadrature of the clock densities, tabulated on a fine
grid of quantiles and interpolated linearly, so they do not reuse any
sampler or closed-form CDF.
"""

import math

import numpy as np
from scipy import integrate, stats

from levy_pricer.mc_oracle import sample_gamma_subordinator, sample_ig_subordinator

KS_DRAWS = 100_000


def gamma_density(a, t):
    return lambda x: math.exp(a * t * math.log(a) + (a * t - 1) * math.log(x) - a * x - math.lgamma(a * t))


def ig_density(phi, t):
    # unit mean rate: first passage of B_s + phi s to phi t
    return lambda x: phi * t / math.sqrt(2 * math.pi) * x ** -1.5 * math.exp(-(phi * t - phi * x) ** 2 / (2 * x))


def quadrature_cdf(density, grid):
    """CDF on an increasing grid starting near 0, by cumulative quadrature."""
    pieces = [integrate.quad(density, 0.0, grid[0], epsabs=0, epsrel=1e-12, limit=200)[0]]
    for lo, hi in zip(grid[:-1], grid[1:]):
        pieces.append(integrate.quad(density, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0])
    cdf = np.cumsum(pieces)
    return lambda x: np.interp(x, grid, cdf, left=0.0, right=1.0)


def ks_pvalue(draws, density):
    grid = np.quantile(draws, np.linspace(0, 1, 4001)[1:-1])
    grid = np.unique(np.concatenate((grid, [draws.max() * 2])))
    return stats.kstest(draws, quadrature_cdf(density, grid)).pvalue


def gamma_draws(a, t, seed, size=KS_DRAWS):
    return sample_gamma_subordinator(a, t, np.random.default_rng(seed), size)


def ig_draws(phi, t, seed, size=KS_DRAWS):
    return sample_ig_subordinator(phi, t, np.random.default_rng(seed), size,
                                  accept_rng=np.random.default_rng(seed + 1))


def mgf_z_scores(draws, exponents, exact):
    """(empirical - exact) / standard error for each exponent u."""
    out = []
    for u in exponents:
        v = np.exp(u * draws)
        out.append((v.mean() - exact(u)) / (v.std(ddof=1) / math.sqrt(v.size)))
    return out


def gamma_mgf(a, t):
    return lambda u: (a / (a - u)) ** (a * t)


def ig_mgf_t(phi, t):
    return lambda u: math.exp(phi * t * (phi - math.sqrt(phi * phi - 2 * u)))


# exponents below half the boundary keep the MGF estimators at finite variance
GAMMA_CASES = [(2.0, 1.0), (0.7, 0.5), (5.0, 2.0)]
IG_CASES = [(1.5, 2.0), (0.4, 1.0), (3.0, 0.3)]


def gamma_exponents(a):
    return [-a, -0.3 * a, 0.1 * a, 0.25 * a, 0.45 * a]


def ig_exponents(phi):
    return [-phi * phi, -0.2 * phi * phi, 0.05 * phi * phi, 0.15 * phi * phi, 0.24 * phi * phi]
