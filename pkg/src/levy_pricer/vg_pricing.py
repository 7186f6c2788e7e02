"""Variance-gamma conditional prices.

The core quantity is the integral

    I(alpha, c, h, p) = int_0^inf x^alpha e^(-c x) N(h sqrt(x) + p / sqrt(x)) dx,

with alpha = a_1 T - 1, c = a_1 - b, h = slope / sigma_1 and
p = (mu_1 T - ln K - x) / sigma_1.  Most of the code works with the
normalised version

    P~ = c^(alpha+1) / Gamma(alpha+1) * I,

which is a probability (the mean of N(...) under a Gamma(alpha+1, c)
law) and so never overflows.  For p = 0,

    I = Gamma(alpha+3/2) / (sqrt(2 pi) c^(alpha+1))
        * (B(1/2, alpha+1)/sqrt(2) + h/sqrt(c) * 2F1(alpha+3/2, 1/2; 3/2; -h^2/(2c))),

and for p != 0, with r = sqrt(h^2 + 2c), s = p r, q = h / r,

    I = |s|^(alpha+1/2) e^s (1+q)^(alpha+1) / (sqrt(2 pi) c^(alpha+1))
        * [ B(1, alpha+1) (|s| K_(alpha+3/2)(|s|) + s K_(alpha+1/2)(|s|)) A_0
            - (1+q) s B(1, alpha+2) K_(alpha+1/2)(|s|) A_1 ],

    A_j = A(alpha+1+j, -alpha, alpha+2+j; (1+q)/2, -s(1+q)).

The Lambda and Xi kernels are sqrt(2 pi) c^(a_1 T) times I at p = 0 and
p != 0 respectively.

References
----------
Madan, D. B., Carr, P. P., Chang, E. C. (1998). The variance gamma
process and option pricing. European Finance Review 2, 79-105.
"""

import math
from dataclasses import dataclass

from scipy import special as sc

from .closed_form import ConditionalPricer
from .errors import BranchError
from .jumplaw import SumLaw, atom_probability, expect_functional
from .model import Family, INDICATOR, TheoremId, theorem_terms, validate_model
from .specfun import EPS, bessel_k, gauss_2f1, humbert_integral, log_bessel_k

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
ATOM_RTOL = 1e-13


@dataclass(frozen=True)
class VgKernelParams:
    """Inputs of the VG kernels for one theorem and spec."""

    alpha: float
    shape_a1: float
    drift_gap: float
    h: float
    p_base: float
    sigma1: float

    @property
    def c(self):
        return self.shape_a1 - self.drift_gap

    def p(self, x):
        return self.p_base - x / self.sigma1


@dataclass(frozen=True)
class LambdaXi:
    """Kernel values at one jump-sum level x."""

    q: float
    s: float
    lambda_value: float
    xi_value: float


def _center_probability(alpha, c, h):
    """P~ at p = 0 through the Gauss function."""
    if h == 0.0:
        return 0.5
    g = gauss_2f1(alpha + 1.5, 0.5, 1.5, -h * h / (2.0 * c))
    coef = math.exp(math.lgamma(alpha + 1.5) - math.lgamma(alpha + 1.0)) / math.sqrt(2.0 * math.pi * c)
    value = 0.5 + coef * h * g.value
    if value < 0.05:
        # the sum above cancels; the same probability is a regularised
        # incomplete beta function of (1 + q) / 2
        q = h / math.sqrt(h * h + 2.0 * c)
        value = float(sc.betainc(alpha + 1.0, alpha + 1.0, 0.5 * (1.0 + q)))
    return value


def _direct_probability(alpha, c, h, p):
    """P~ for p != 0 from the Bessel/Appell closed form.

    Returns (value, relative error estimate).
    """
    r = math.sqrt(h * h + 2.0 * c)
    s = p * r
    q = h / r
    a = abs(s)
    x = 0.5 * (1.0 + q)
    y = -s * (1.0 + q)
    a0 = humbert_integral(alpha + 1.0, -alpha, x, y)
    a1 = humbert_integral(alpha + 2.0, -alpha, x, y)
    lk12 = log_bessel_k(alpha + 0.5, a)
    ratio = math.exp(log_bessel_k(alpha + 1.5, a) - lk12)
    inner = a * ratio + s
    inner_cond = (a * ratio + a) / abs(inner) if inner != 0.0 else math.inf
    t1 = inner * a0.value / (alpha + 1.0)
    t2 = (1.0 + q) * s * a1.value / (alpha + 2.0)
    diff = t1 - t2
    if diff <= 0.0:
        return 0.0, math.inf
    log_pre = ((alpha + 0.5) * math.log(a) + s + lk12 + a0.log_scale
               + (alpha + 1.0) * math.log1p(q) - math.lgamma(alpha + 1.0) - LOG_SQRT_2PI)
    cond = (abs(t1) * inner_cond + abs(t2)) / diff
    appell_rel = (a0.tail_bound / a0.value if a0.value else 0.0) + (
        a1.tail_bound / a1.value if a1.value else 0.0)
    rel_err = cond * (16.0 * EPS + appell_rel)
    return math.exp(log_pre + math.log(diff)), rel_err


def tilted_probability(alpha, c, h, p):
    """Normalised integral P~ = c^(alpha+1) I(alpha, c, h, p) / Gamma(alpha+1).

    Equal to E[N(h sqrt(G) + p / sqrt(G))] with G ~ Gamma(alpha+1, rate c).
    """
    if p == 0.0:
        return _center_probability(alpha, c, h)
    direct, err_d = _direct_probability(alpha, c, h, p)
    if direct <= 0.5 and err_d < 1e-12:
        return direct
    mirror, err_m = _direct_probability(alpha, c, -h, -p)
    abs_d = err_d * direct if math.isfinite(err_d) else math.inf
    abs_m = err_m * mirror + EPS
    if abs_m < abs_d:
        return 1.0 - mirror
    return direct


def integral_I(alpha, a1_minus_b, h, p):
    """int_0^inf x^alpha e^(-(a1-b) x) N(h sqrt(x) + p / sqrt(x)) dx."""
    if not alpha > -1.0:
        raise ValueError("integral_I needs alpha > -1")
    if not a1_minus_b > 0.0:
        raise ValueError("integral_I needs a1 - b > 0")
    prob = tilted_probability(alpha, a1_minus_b, h, p)
    if prob == 0.0:
        return 0.0
    return math.exp(math.lgamma(alpha + 1.0) - (alpha + 1.0) * math.log(a1_minus_b) + math.log(prob))


def kernel_params(theorem, spec):
    theorem = TheoremId(theorem)
    terms = theorem_terms(theorem, spec)
    a1 = spec.subordinators.shapes()[INDICATOR]
    sigma1 = spec.assets[0].sigma
    return VgKernelParams(alpha=a1 * spec.maturity - 1.0, shape_a1=a1, drift_gap=terms.b,
                          h=terms.slope / sigma1, p_base=spec.log_moneyness / sigma1,
                          sigma1=sigma1)


def _kernel_scale(params):
    """log of sqrt(2 pi) Gamma(a_1 T), converting P~ to Lambda or Xi."""
    return LOG_SQRT_2PI + math.lgamma(params.alpha + 1.0)


def _check_theorem(theorem, spec):
    theorem = TheoremId(theorem)
    validate_model(spec, theorem).raise_if_failed()
    if spec.family != Family.VG:
        raise BranchError(f"theorem {theorem.value} is not a VG case")
    return theorem


def lambda_kernel(theorem, spec):
    """Lambda: the kernel on the event that the jump sum hits mu_1 T - ln K."""
    theorem = _check_theorem(theorem, spec)
    params = kernel_params(theorem, spec)
    prob = _center_probability(params.alpha, params.c, params.h)
    return math.exp(_kernel_scale(params) + math.log(prob))


def _atom_scale(spec):
    a = spec.assets[0]
    return ATOM_RTOL * max(1.0, abs(a.mu * spec.maturity), abs(math.log(spec.strike)))


def xi_kernel(theorem, spec, x):
    """Xi(x) for a jump sum x away from the atom mu_1 T - ln K."""
    theorem = _check_theorem(theorem, spec)
    if abs(spec.log_moneyness - x) <= _atom_scale(spec):
        raise BranchError("jump sum sits on the atom; use lambda_kernel")
    params = kernel_params(theorem, spec)
    prob = tilted_probability(params.alpha, params.c, params.h, params.p(x))
    if prob == 0.0:
        return 0.0
    return math.exp(_kernel_scale(params) + math.log(prob))


def lambda_xi(theorem, spec, x):
    """q, s, Lambda and Xi(x) together (Xi is nan on the atom)."""
    params = kernel_params(theorem, spec)
    r = math.sqrt(params.h ** 2 + 2.0 * params.c)
    s = params.p(x) * r
    lam = lambda_kernel(theorem, spec)
    try:
        xi = xi_kernel(theorem, spec, x)
    except BranchError:
        xi = math.nan
    return LambdaXi(q=params.h / r, s=s, lambda_value=lam, xi_value=xi)


def xi_closed_form(alpha, c, h, p):
    """Xi written out term by term in double precision, without rescaling.

    Only usable for moderate arguments; kept as a readable reference for
    the scaled evaluation inside ``tilted_probability``.
    """
    r = math.sqrt(h * h + 2.0 * c)
    s = p * r
    q = h / r
    a = abs(s)
    x = 0.5 * (1.0 + q)
    y = -s * (1.0 + q)
    a0 = humbert_integral(alpha + 1.0, -alpha, x, y).unscaled
    a1 = humbert_integral(alpha + 2.0, -alpha, x, y).unscaled
    k32 = bessel_k(alpha + 1.5, a)
    k12 = bessel_k(alpha + 0.5, a)
    b1 = 1.0 / (alpha + 1.0)
    b2 = 1.0 / (alpha + 2.0)
    return (a ** (alpha + 0.5) * math.exp(s) * (1.0 + q) ** (alpha + 1.0)
            * (b1 * (a * k32 + s * k12) * a0 - (1.0 + q) * s * b2 * k12 * a1))


class VgPricer(ConditionalPricer):
    """Conditional prices for the VG theorems."""

    def __init__(self, theorem, spec, validate=True):
        super().__init__(theorem, spec, validate)
        if spec.family != Family.VG:
            raise BranchError(f"theorem {self.theorem.value} is not a VG case")
        self.params = kernel_params(self.theorem, spec)

    def _indicator_expectation(self, n1):
        par = self.params
        spec = self.spec
        law = SumLaw(spec.jumps[0].law, n1)
        atom = spec.log_moneyness
        scale = _atom_scale(spec)

        def f(x):
            if abs(atom - x) <= scale:
                return _center_probability(par.alpha, par.c, par.h)
            return tilted_probability(par.alpha, par.c, par.h, par.p(x))

        total = expect_functional(law, f, atom)
        mass = atom_probability(law, atom)
        if mass > 0.0:
            total += mass * _center_probability(par.alpha, par.c, par.h)
        return total


def dc_conditional(theorem, spec, n1, n2, n3):
    """DC(n1, n2, n3) for a VG theorem."""
    return VgPricer(theorem, spec).dc(n1, n2, n3)
