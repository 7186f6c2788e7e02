"""Monte Carlo oracle for the digital prices.

Samples are generated in fixed-size chunks.  Chunk c draws component k
from its own Philox stream seeded by SeedSequence(seed, spawn_key=(c, k)),
so results do not depend on how chunks are spread over threads.  Chunk
statistics are merged in chunk order.

Two estimators are offered:

* ``plain``: the discounted payoff S^3 S^2 1{S^1 >= K} of full draws;
* ``conditional``: the Brownian parts are integrated out given the clocks
  and the clocks are drawn from exponentially tilted laws, with the
  likelihood ratio folded in.  It has finite variance whenever the price
  does, which the plain estimator lacks for some NIG specs.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import DomainError, UnsupportedDependenceError
from .model import CONSTRAINT_RTOL, Family, component_log_mgf, exponent_loadings

CHUNK = 1 << 16
MIN_SAMPLES = 10_000
DEFAULT_THREADS = 8
ESTIMATORS = ("plain", "conditional")

# stream ids within a chunk
_CLOCK, _COUNT, _JUMP, _NORMAL, _ACCEPT = 0, 4, 7, 10, 11


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    ci99_7: tuple
    seed: int
    estimator: str = "plain"
    condition_counts: tuple = None

    def to_json(self):
        return {"mean": self.mean, "std_error": self.std_error, "n_samples": self.n_samples,
                "ci99_7": list(self.ci99_7), "seed": self.seed, "estimator": self.estimator,
                "condition_counts": None if self.condition_counts is None
                else list(self.condition_counts)}


@dataclass(frozen=True)
class TerminalDraw:
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray


def thread_count():
    """Worker threads, capped by LEVY_PRICER_THREADS when set."""
    env = os.environ.get("LEVY_PRICER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(DEFAULT_THREADS, os.cpu_count() or 1))


def stream(seed, chunk, component):
    ss = np.random.SeedSequence(seed, spawn_key=(chunk, component))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# subordinators


def sample_gamma_subordinator(a, t, rng, size=None, tilt=0.0):
    """Gamma(shape a t, rate a - tilt); tilt = 0 gives the clock with mean t."""
    if not (a > 0 and t > 0):
        raise DomainError("gamma subordinator needs a > 0 and t > 0")
    if not tilt < a:
        raise DomainError("gamma tilt must be below the rate")
    return rng.gamma(a * t, 1.0 / (a - tilt), size)


def inverse_gaussian(mean, shape, rng, size=None, accept_rng=None):
    """Inverse-Gaussian draws by the chi-square transform with root selection.

    The smaller root is computed as mean^2 / (larger root) to avoid
    cancellation; it is kept with probability mean / (mean + root).
    """
    accept_rng = rng if accept_rng is None else accept_rng
    y = rng.standard_normal(size) ** 2
    my = mean * y
    big = mean + mean * my / (2.0 * shape) + mean / (2.0 * shape) * np.sqrt(
        4.0 * mean * shape * y + my * my)
    small = mean * mean / big
    u = accept_rng.random(size)
    return np.where(u <= mean / (mean + small), small, big)


def sample_ig_subordinator(phi, t, rng, size=None, tilt=0.0, accept_rng=None):
    """First passage of B_s + a s to phi t, with a = sqrt(phi^2 - 2 tilt).

    tilt = 0 gives the unit-mean-rate clock (mean t); a = 0 gives the
    Levy law (phi t)^2 / Z^2.
    """
    if not (phi > 0 and t > 0):
        raise DomainError("IG subordinator needs phi > 0 and t > 0")
    disc = phi * phi - 2.0 * tilt
    if disc < 0.0:
        raise DomainError("IG tilt must satisfy phi^2 >= 2 tilt")
    level = phi * t
    drift = math.sqrt(disc)
    if drift == 0.0:
        return level * level / rng.standard_normal(size) ** 2
    return inverse_gaussian(level / drift, level * level, rng, size, accept_rng)


def _sample_component(family, shape, t, rng, accept_rng, size, tilt=0.0):
    if family == Family.VG:
        return sample_gamma_subordinator(shape, t, rng, size, tilt)
    return sample_ig_subordinator(shape, t, rng, size, tilt, accept_rng)


def _normal_factor(corr):
    """A with A A^T = R, also for singular R."""
    r = corr.matrix()
    try:
        return np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(r)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


# ---------------------------------------------------------------------------
# chunk simulation


def _clock_tilts(spec):
    """Tilts c_k for the conditional estimator and whether the exponent is linear."""
    try:
        return np.asarray(exponent_loadings(spec), dtype=float), True
    except UnsupportedDependenceError:
        w = spec.subordinators.loading_matrix()
        a = spec.assets
        return a[1].u * w[1] + a[2].u * w[2], False


def _safe_tilt(family, shape, c):
    """Tilt used for the proposal; NIG loadings within rounding of the
    boundary phi^2 / 2 are snapped onto it (the residual absorbs the rest)."""
    limit = shape if family == Family.VG else 0.5 * shape * shape
    if family == Family.NIG and abs(c - limit) <= CONSTRAINT_RTOL * limit:
        return limit
    return c if c < limit else 0.0


class _Simulator:
    def __init__(self, spec, seed, counts, estimator, antithetic):
        if estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if antithetic and estimator != "plain":
            raise ValueError("antithetic sampling applies to the plain estimator only")
        self.spec = spec
        self.seed = seed
        self.counts = counts
        self.estimator = estimator
        self.antithetic = antithetic
        sub = spec.subordinators
        self.family = sub.family
        self.shapes = sub.shapes()
        self.w = sub.loading_matrix()
        self.used = np.any(self.w != 0.0, axis=0)
        self.factor = _normal_factor(spec.correlations)
        t = spec.maturity
        if estimator == "conditional":
            raw, _ = _clock_tilts(spec)
            self.tilts = np.array([_safe_tilt(self.family, self.shapes[k], raw[k]) if self.used[k]
                                   else 0.0 for k in range(4)])
            self.log_mgf = math.fsum(component_log_mgf(self.family, self.shapes[k], self.tilts[k], t)
                                     for k in range(4) if self.used[k])
        else:
            self.tilts = np.zeros(4)
            self.log_mgf = 0.0

    def clocks(self, chunk, size):
        t = self.spec.maturity
        comps = np.zeros((4, size))
        for k in range(4):
            if self.used[k]:
                comps[k] = _sample_component(self.family, self.shapes[k], t,
                                             stream(self.seed, chunk, _CLOCK + k),
                                             stream(self.seed, chunk, _ACCEPT + 1 + k), size,
                                             self.tilts[k])
        return comps, self.w @ comps

    def jumps(self, chunk, size):
        t = self.spec.maturity
        counts = np.zeros((3, size), dtype=np.int64)
        sums = np.zeros((3, size))
        for j, jump in enumerate(self.spec.jumps):
            if self.counts is not None:
                counts[j] = self.counts[j]
            elif jump.intensity > 0.0:
                counts[j] = stream(self.seed, chunk, _COUNT + j).poisson(jump.intensity * t, size)
            if counts[j].any():
                sums[j] = jump.law.sample_sums(stream(self.seed, chunk, _JUMP + j), counts[j])
        return counts, sums

    def draw(self, chunk, size):
        """Terminal prices and counts for one chunk (plain sampling)."""
        spec = self.spec
        t = spec.maturity
        _, theta = self.clocks(chunk, size)
        counts, sums = self.jumps(chunk, size)
        z = self.factor @ stream(self.seed, chunk, _NORMAL).standard_normal((3, size))
        logs = []
        for j, a in enumerate(spec.assets):
            logs.append(a.mu * t + a.beta * theta[j] + a.sigma * np.sqrt(theta[j]) * z[j] - sums[j])
        return logs, counts, theta, sums, z

    def payoff_plain(self, chunk, size):
        spec = self.spec
        t = spec.maturity
        logs, _, theta, sums, z = self.draw(chunk, size)
        disc = math.exp(-spec.rate_foreign * t)
        ln_k = math.log(spec.strike)
        out = disc * np.exp(logs[1] + logs[2]) * (logs[0] >= ln_k)
        if not self.antithetic:
            return out
        a = spec.assets
        anti = [a[j].mu * t + a[j].beta * theta[j] - a[j].sigma * np.sqrt(theta[j]) * z[j] - sums[j]
                for j in range(3)]
        out2 = disc * np.exp(anti[1] + anti[2]) * (anti[0] >= ln_k)
        return 0.5 * (out + out2)

    def payoff_conditional(self, chunk, size):
        spec = self.spec
        t = spec.maturity
        a = spec.assets
        rho = spec.correlations
        comps, theta = self.clocks(chunk, size)
        _, sums = self.jumps(chunk, size)
        s12 = np.sqrt(theta[0] * theta[1])
        s13 = np.sqrt(theta[0] * theta[2])
        s23 = np.sqrt(theta[1] * theta[2])
        half_var = (0.5 * a[1].sigma ** 2 * theta[1] + 0.5 * a[2].sigma ** 2 * theta[2]
                    + rho.rho23 * a[1].sigma * a[2].sigma * s23)
        expo = a[1].beta * theta[1] + a[2].beta * theta[2] + half_var
        residual = expo - self.tilts @ comps
        cov = rho.rho12 * a[0].sigma * a[1].sigma * s12 + rho.rho13 * a[0].sigma * a[2].sigma * s13
        mean1 = spec.log_moneyness + a[0].beta * theta[0] - sums[0] + cov
        sd1 = a[0].sigma * np.sqrt(theta[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            prob = np.where(sd1 > 0.0, sc.ndtr(mean1 / sd1), (mean1 >= 0.0).astype(float))
        log_const = (a[1].mu + a[2].mu - spec.rate_foreign) * t + self.log_mgf
        return np.exp(log_const + residual - sums[1] - sums[2]) * prob

    def chunk_stats(self, chunk, size):
        if self.estimator == "plain":
            x = self.payoff_plain(chunk, size)
        else:
            x = self.payoff_conditional(chunk, size)
        m = np.mean(x)
        return size, float(m), float(np.sum((x - m) ** 2))


def _chunks(n_samples):
    full, rest = divmod(n_samples, CHUNK)
    sizes = [CHUNK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _merge_stats(stats):
    """Chan et al. pairwise update, applied in chunk order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def estimate_price(spec, n_samples, seed, condition_counts=None, estimator="plain",
                   antithetic=False, threads=None):
    """Monte Carlo estimate of e^(-rT) E[S^3 S^2 1{S^1 >= K}].

    With ``condition_counts`` = (n1, n2, n3) the jump counts are fixed and
    the estimate targets DC(n1, n2, n3).  With ``antithetic`` each draw is
    paired with its mirror in the normals and the pair average counts as
    one sample.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}")
    counts = None if condition_counts is None else tuple(int(n) for n in condition_counts)
    if counts is not None and (len(counts) != 3 or min(counts) < 0):
        raise ValueError("condition_counts must be three counts >= 0")
    sim = _Simulator(spec, seed, counts, estimator, antithetic)
    chunks = _chunks(n_samples)
    workers = min(threads or thread_count(), len(chunks))
    if workers <= 1:
        stats = [sim.chunk_stats(c, s) for c, s in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(lambda cs: sim.chunk_stats(*cs), chunks))
    n, mean, m2 = _merge_stats(stats)
    se = math.sqrt(m2 / (n - 1) / n)
    return McEstimate(mean=mean, std_error=se, n_samples=n,
                      ci99_7=(mean - 3.0 * se, mean + 3.0 * se), seed=seed,
                      estimator=estimator, condition_counts=counts)


def sample_terminal(spec, seed, size, chunk=0, condition_counts=None):
    """A batch of terminal draws (S^1, S^2, S^3, N^1, N^2, N^3)."""
    sim = _Simulator(spec, seed, condition_counts, "plain", False)
    logs, counts, _, _, _ = sim.draw(chunk, size)
    return TerminalDraw(np.exp(logs[0]), np.exp(logs[1]), np.exp(logs[2]),
                        counts[0], counts[1], counts[2])


def sample_terminal_triple(spec, rng):
    """One draw (S^1, S^2, S^3, N^1, N^2, N^3) using a single generator."""
    seed = int(rng.integers(0, 2 ** 63))
    d = sample_terminal(spec, seed, 1)
    return (float(d.s1[0]), float(d.s2[0]), float(d.s3[0]),
            int(d.n1[0]), int(d.n2[0]), int(d.n3[0]))


def estimate_s3s2(spec, n_samples, seed):
    """Monte Carlo mean of S^3 S^2 (no indicator, no discount)."""
    chunks = _chunks(n_samples)
    sim = _Simulator(spec, seed, None, "plain", False)
    stats = []
    for c, s in chunks:
        logs, *_ = sim.draw(c, s)
        x = np.exp(logs[1] + logs[2])
        m = np.mean(x)
        stats.append((s, float(m), float(np.sum((x - m) ** 2))))
    n, mean, m2 = _merge_stats(stats)
    return mean, math.sqrt(m2 / (n - 1) / n)
