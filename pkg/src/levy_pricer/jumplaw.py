"""Jump-size laws and functionals of their n-fold sums.

Each law exposes three functionals of S = xi_1 + ... + xi_n (S = 0 when
n = 0): the Laplace transform at one E[exp(-S)], the point mass P(S = c),
and E[f(S) 1{S != c}].  Those are all the conditional prices need.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import tanhsinh

from .errors import CombinatorialBlowupError, ConvergenceError, DomainError

ATOM_TOL = 1e-12
SUPPORT_CAP = 1_000_000
QUAD_RTOL = 1e-10


class JumpLaw:
    """Interface shared by the concrete jump laws."""

    kind = "abstract"

    def laplace_at_one(self, n):
        raise NotImplementedError

    def atom_probability(self, n, c):
        raise NotImplementedError

    def expect_functional(self, n, f, atom_excluded, split_at=None):
        raise NotImplementedError

    def sample_sums(self, rng, counts):
        """Sums of ``counts[i]`` independent jumps for each i."""
        raise NotImplementedError

    def has_positive_jumps(self):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    @staticmethod
    def from_json(doc):
        kind = doc.get("kind")
        if kind == "constant":
            return ConstantJump(float(doc["value"]))
        if kind == "exponential":
            return ExponentialJump(float(doc["mean"]))
        if kind == "discrete":
            return DiscreteJump(tuple((float(v), float(p)) for v, p in doc["atoms"]))
        raise KeyError(f"unknown jump law kind {kind!r}")


def _point_mass(n, f, value, atom_excluded):
    if abs(value - atom_excluded) <= ATOM_TOL:
        return 0.0
    return float(f(value))


@dataclass(frozen=True)
class ConstantJump(JumpLaw):
    """Every jump has the same size ``value``."""

    value: float
    kind = "constant"

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise DomainError(f"constant jump must be finite and >= 0, got {self.value}")

    def laplace_at_one(self, n):
        return math.exp(-self.value * n)

    def atom_probability(self, n, c):
        return 1.0 if abs(n * self.value - c) <= ATOM_TOL else 0.0

    def expect_functional(self, n, f, atom_excluded, split_at=None):
        return _point_mass(n, f, n * self.value, atom_excluded)

    def sample_sums(self, rng, counts):
        return self.value * np.asarray(counts, dtype=float)

    def has_positive_jumps(self):
        return self.value > 0

    def to_json(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class ExponentialJump(JumpLaw):
    """Exponential jump sizes with the given mean; sums are Gamma(n, mean)."""

    mean: float
    kind = "exponential"

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise DomainError(f"exponential mean must be finite and > 0, got {self.mean}")

    def laplace_at_one(self, n):
        return (1.0 + self.mean) ** (-n)

    def atom_probability(self, n, c):
        if n == 0:
            return 1.0 if abs(c) <= ATOM_TOL else 0.0
        return 0.0

    def log_density(self, n, x):
        theta = self.mean
        return (n - 1) * np.log(x) - x / theta - math.lgamma(n) - n * math.log(theta)

    def expect_functional(self, n, f, atom_excluded, split_at=None):
        if n == 0:
            return _point_mass(n, f, 0.0, atom_excluded)
        sd = math.sqrt(n) * self.mean
        upper = n * self.mean + 40.0 * sd
        inner = {c for c in (atom_excluded, split_at) if c is not None and 0.0 < c < upper}
        cuts = [0.0, *sorted(inner), upper]
        vf = np.vectorize(lambda x: float(f(float(x))), otypes=[float])

        def integrand(x):
            return vf(x) * np.exp(self.log_density(n, x))

        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            res = tanhsinh(integrand, lo, hi, rtol=QUAD_RTOL, atol=1e-300, maxlevel=12)
            if not bool(res.success):
                raise ConvergenceError(
                    f"quadrature over [{lo}, {hi}] failed for the Gamma({n}, {self.mean}) sum")
            total += float(res.integral)
        return total

    def sample_sums(self, rng, counts):
        counts = np.asarray(counts)
        return rng.gamma(np.maximum(counts, 0).astype(float), self.mean) * (counts > 0)

    def has_positive_jumps(self):
        return True

    def to_json(self):
        return {"kind": "exponential", "mean": self.mean}


@dataclass(frozen=True)
class DiscreteJump(JumpLaw):
    """Finitely many jump sizes ``atoms = ((value, prob), ...)``."""

    atoms: tuple
    kind = "discrete"

    def __post_init__(self):
        if not self.atoms:
            raise DomainError("discrete jump law needs at least one atom")
        for v, p in self.atoms:
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"discrete atom values must be >= 0, got {v}")
            if not (math.isfinite(p) and p > 0):
                raise DomainError(f"discrete atom probabilities must be > 0, got {p}")
        if abs(math.fsum(p for _, p in self.atoms) - 1.0) > 1e-12:
            raise DomainError("discrete atom probabilities must sum to 1")

    @property
    def values(self):
        return np.array([v for v, _ in self.atoms])

    @property
    def probs(self):
        return np.array([p for _, p in self.atoms])

    def laplace_at_one(self, n):
        return math.fsum(p * math.exp(-v) for v, p in self.atoms) ** n

    def atom_probability(self, n, c):
        vals, probs = _convolution(self, n)
        hit = np.abs(vals - c) <= ATOM_TOL
        return math.fsum(probs[hit])

    def expect_functional(self, n, f, atom_excluded, split_at=None):
        vals, probs = _convolution(self, n)
        keep = np.abs(vals - atom_excluded) > ATOM_TOL
        return math.fsum(p * float(f(float(v))) for v, p in zip(vals[keep], probs[keep]))

    def sample_sums(self, rng, counts):
        counts = np.asarray(counts, dtype=np.int64)
        total = int(counts.sum())
        draws = rng.choice(self.values, size=total, p=self.probs)
        owner = np.repeat(np.arange(counts.size), counts)
        return np.bincount(owner, weights=draws, minlength=counts.size)

    def has_positive_jumps(self):
        return any(v > 0 for v, _ in self.atoms)

    def to_json(self):
        return {"kind": "discrete", "atoms": [[v, p] for v, p in self.atoms]}


def _merge(vals, probs):
    order = np.argsort(vals, kind="stable")
    vals, probs = vals[order], probs[order]
    starts = np.concatenate(([True], np.diff(vals) > ATOM_TOL))
    group = np.cumsum(starts) - 1
    merged_p = np.bincount(group, weights=probs)
    merged_v = vals[starts]
    return merged_v, merged_p


@lru_cache(maxsize=128)
def _convolution(law, n):
    """Support and masses of the n-fold sum of a discrete law."""
    vals = np.array([0.0])
    probs = np.array([1.0])
    base_v, base_p = _merge(law.values, law.probs)
    for _ in range(n):
        if vals.size * base_v.size > 50 * SUPPORT_CAP:
            raise CombinatorialBlowupError("discrete convolution support too large")
        vals, probs = _merge((vals[:, None] + base_v[None, :]).ravel(),
                             (probs[:, None] * base_p[None, :]).ravel())
        if vals.size > SUPPORT_CAP:
            raise CombinatorialBlowupError(
                f"discrete convolution support exceeds {SUPPORT_CAP} atoms")
    return vals, probs


@dataclass(frozen=True)
class SumLaw:
    """Law of the sum of ``count`` independent jumps drawn from ``base``."""

    base: JumpLaw
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise DomainError("jump count must be >= 0")


def laplace_at_one(s):
    """E[exp(-S)] for the sum law ``s``."""
    return s.base.laplace_at_one(s.count)


def atom_probability(s, c):
    """P(S = c), matched within 1e-12."""
    return s.base.atom_probability(s.count, c)


def expect_functional(s, f, atom_excluded, split_at=None):
    """E[f(S) 1{S != atom_excluded}].

    ``split_at`` marks a point where f changes quickly; continuous laws
    split their quadrature there.
    """
    return s.base.expect_functional(s.count, f, atom_excluded, split_at)
