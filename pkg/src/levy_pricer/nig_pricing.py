"""Normal-inverse-Gaussian conditional prices.

With an inverse-Gaussian indicator clock and the constraint
phi_1^2 = 2b, the tilted clock law is the Levy law and the digital part
reduces to

    J(h, p) = int_0^inf x^(-3/2) e^(-1/x) N(h sqrt(x) + p / sqrt(x)) dx,

    h = slope * phi_1 T / (sigma_1 sqrt 2),
    p = (mu_1 T - ln K - x) sqrt 2 / (sigma_1 phi_1 T).

The kernels are Lambda(x) = 2 J (slope = 0, an arctan) and Xi(x) = 2 J
(slope != 0).  Substituting x -> 1/x turns J into the VG integral with
alpha = -1/2, c = 1 and the roles of h and p swapped, so Xi reuses the
VG closed form:

    Xi(x) = 2 sqrt(pi) * P~(-1/2, 1, p, h).

References
----------
Barndorff-Nielsen, O. E. (1997). Normal inverse Gaussian distributions
and stochastic volatility modelling. Scand. J. Statist. 24, 1-13.
"""

import math
import warnings
from dataclasses import dataclass

from .closed_form import ConditionalPricer
from .errors import BranchError
from .jumplaw import SumLaw, expect_functional
from .model import Family, INDICATOR, TheoremId, ig_log_mgf, ig_mgf, theorem_terms, validate_model
from .specfun import bessel_k, beta, humbert_integral
from .vg_pricing import tilted_probability

SQRT_PI = math.sqrt(math.pi)
SLOPE_ZERO_RTOL = 1e-13
SLOPE_GUARD = 1e-8

__all__ = [
    "NigKernelParams",
    "NigPricer",
    "dc_conditional_nig",
    "ig_log_mgf",
    "ig_mgf",
    "kernel_params_nig",
    "lambda_kernel_nig",
    "xi_kernel_nig",
    "xi_kernel_nig_printed",
]


@dataclass(frozen=True)
class NigKernelParams:
    """Inputs of the NIG kernels."""

    phi1: float
    slope: float
    sigma1: float
    horizon: float
    log_moneyness: float

    @property
    def width(self):
        """sigma_1 phi_1 T, the scale of the jump-sum axis."""
        return self.sigma1 * self.phi1 * self.horizon

    def gap(self, x):
        return self.log_moneyness - x


def kernel_params_nig(theorem, spec):
    terms = theorem_terms(TheoremId(theorem), spec)
    return NigKernelParams(phi1=spec.subordinators.shapes()[INDICATOR], slope=terms.slope,
                           sigma1=spec.assets[0].sigma, horizon=spec.maturity,
                           log_moneyness=spec.log_moneyness)


def _center_probability(params, x):
    """Lambda(x) / (2 sqrt(pi)) = 1/2 + arctan(gap / width) / pi."""
    z = params.gap(x) / params.width
    if z >= 0.0:
        return 0.5 + math.atan(z) / math.pi
    # 1/2 - arctan(|z|)/pi without cancellation
    return math.atan(-1.0 / z) / math.pi


def _xi_probability(params, x):
    h = params.slope * params.phi1 * params.horizon / (params.sigma1 * math.sqrt(2.0))
    p = params.gap(x) * math.sqrt(2.0) / params.width
    return tilted_probability(-0.5, 1.0, p, h)


def lambda_kernel_nig(params, x):
    """Lambda(x) = sqrt(pi) + (2/sqrt(pi)) sign(g) arctan(|g| / (sigma_1 phi_1 T)), g = mu_1 T - ln K - x."""
    if abs(params.slope) >= SLOPE_GUARD:
        raise BranchError("lambda_kernel_nig needs a zero slope")
    return 2.0 * SQRT_PI * _center_probability(params, x)


def xi_kernel_nig(params, x):
    """Xi(x) = 2 J(h, p) for a nonzero slope."""
    if params.slope == 0.0:
        raise BranchError("xi_kernel_nig needs a nonzero slope")
    return 2.0 * SQRT_PI * _xi_probability(params, x)


def xi_kernel_nig_printed(params, x):
    """Bessel/Appell expression in the form it is usually quoted:

        |v| e^|v| / sqrt(q+1) * (K_1(|v|) U_0 + K_0(|v|) (U_0 - (q+1) U_1)),
        v = slope/sigma_1^2 * sqrt(g^2 + (sigma_1 phi_1 T)^2),  q = g / sqrt(g^2 + (sigma_1 phi_1 T)^2),
        U_j = B(1/2 + j, 1) A(1/2 + j, 1/2, 3/2 + j; (q+1)/2, -|v|(q+1)).

    It depends on the slope only through |v| and does not match 2 J;
    kept for comparison only.
    """
    g = params.gap(x)
    rad = math.hypot(g, params.width)
    v = abs(params.slope / params.sigma1 ** 2 * rad)
    q = g / rad
    u0 = beta(0.5, 1.0) * humbert_integral(0.5, 0.5, 0.5 * (q + 1.0), -v * (q + 1.0)).unscaled
    u1 = beta(1.5, 1.0) * humbert_integral(1.5, 0.5, 0.5 * (q + 1.0), -v * (q + 1.0)).unscaled
    return v * math.exp(v) / math.sqrt(q + 1.0) * (bessel_k(1, v) * u0 + bessel_k(0, v) * (u0 - (q + 1.0) * u1))


def slope_is_zero(params, beta1):
    return abs(params.slope) <= SLOPE_ZERO_RTOL * (1.0 + abs(beta1))


class NigPricer(ConditionalPricer):
    """Conditional prices for the NIG theorems."""

    def __init__(self, theorem, spec, validate=True):
        super().__init__(theorem, spec, validate)
        if spec.family != Family.NIG:
            raise BranchError(f"theorem {self.theorem.value} is not an NIG case")
        self.params = kernel_params_nig(self.theorem, spec)
        beta1 = spec.assets[0].beta
        self.use_lambda = abs(self.params.slope) < SLOPE_GUARD
        if self.use_lambda and not slope_is_zero(self.params, beta1):
            msg = (f"slope {self.params.slope:.3g} is below {SLOPE_GUARD:g}; "
                   "priced with the zero-slope kernel")
            self.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)

    def _indicator_expectation(self, n1):
        law = SumLaw(self.spec.jumps[0].law, n1)
        kernel = _center_probability if self.use_lambda else _xi_probability
        par = self.params
        return expect_functional(law, lambda x: kernel(par, x), -math.inf,
                                 split_at=par.log_moneyness)


def dc_conditional_nig(theorem, spec, n1, n2, n3):
    """DC(n1, n2, n3) for an NIG theorem."""
    validate_model(spec, TheoremId(theorem)).raise_if_failed()
    return NigPricer(theorem, spec, validate=False).dc(n1, n2, n3)
