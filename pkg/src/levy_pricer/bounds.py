"""Price brackets from truncated Poisson mixtures of conditional prices.

The price is sum_n w_1(n_1) w_2(n_2) w_3(n_3) DC(n_1, n_2, n_3) with
Poisson weights w_j.  Truncating at n_j <= N_j gives a lower bound.  Two
upper bounds are offered:

* ``PAPER_LITERAL`` adds DC(N) * prod_j P(N^j > N_j), which only covers
  the orthant where every count exceeds its order;
* ``CONSERVATIVE`` adds DC(0,0,0) * (1 - prod_j P(N^j <= N_j)), which covers
  the whole complement because DC is largest at the origin.

Because DC factorises over (n_1, n_2, n_3), the truncated triple sum is a
product of three one-dimensional sums.
"""

import enum
import math
from dataclasses import dataclass

from scipy import special as sc

from .errors import BudgetExceededError
from .model import Family, TheoremId, validate_model
from .nig_pricing import NigPricer
from .vg_pricing import VgPricer

ORDER_CAP = 200
SKIP_RTOL = 1e-18


class BoundMode(str, enum.Enum):
    PAPER_LITERAL = "paper-literal"
    CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class PriceBounds:
    lower: float
    upper: float
    orders: tuple
    tail_mass: tuple
    mode: BoundMode

    @property
    def width(self):
        return self.upper - self.lower

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper, "orders": list(self.orders),
                "tail_mass": list(self.tail_mass), "mode": BoundMode(self.mode).value}


def make_pricer(theorem, spec, validate=True):
    """Conditional pricer of the right family for ``theorem``."""
    theorem = TheoremId(theorem)
    if validate:
        validate_model(spec, theorem).raise_if_failed()
    if spec.family == Family.VG:
        return VgPricer(theorem, spec, validate=False)
    return NigPricer(theorem, spec, validate=False)


def poisson_log_pmf(n, mean):
    if mean == 0.0:
        return 0.0 if n == 0 else -math.inf
    return n * math.log(mean) - mean - math.lgamma(n + 1.0)


def poisson_weight(n, mean):
    return math.exp(poisson_log_pmf(n, mean))


def poisson_cdf(n, mean):
    return 1.0 if mean == 0.0 else float(sc.pdtr(n, mean))


def poisson_tail(n, mean):
    """P(N > n)."""
    return 0.0 if mean == 0.0 else float(sc.pdtrc(n, mean))


def _axis_sum(factor, order, mean):
    """(sum, slack) of the Poisson-weighted factors for n <= order.

    Terms whose weight is below SKIP_RTOL times the weight already summed
    are not evaluated.  Factors are nonnegative and nonincreasing in n, so
    the sum stays a lower bound and ``slack`` (skipped weight times the
    last evaluated factor) bounds what was left out.
    """
    terms, skipped, seen, last = [], 0.0, 0.0, None
    for n in range(order + 1):
        w = poisson_weight(n, mean)
        if last is not None and w < SKIP_RTOL * seen:
            skipped += w
            continue
        seen += w
        last = factor(n)
        terms.append(w * last)
    return math.fsum(terms), skipped * (last or 0.0)


def _axis_sums(pricer, orders, first=None):
    spec = pricer.spec
    means = [j.intensity * spec.maturity for j in spec.jumps]
    factors = (first or pricer.indicator_factor, lambda k: pricer.asset_factor(1, k),
               lambda k: pricer.asset_factor(2, k))
    return [_axis_sum(f, n, m) for f, n, m in zip(factors, orders, means)], means


def _bounds_from(pricer, orders, mode):
    n1, n2, n3 = orders
    sums, means = _axis_sums(pricer, orders)
    scale = math.exp(pricer.log_prefactor)
    lower = scale * math.prod(s for s, _ in sums)
    # the product of (sum + slack) minus the product of sums
    slack = scale * math.prod(s + d for s, d in sums) - lower
    tails = tuple(poisson_tail(n, m) for n, m in zip(orders, means))
    mode = BoundMode(mode)
    if mode == BoundMode.PAPER_LITERAL:
        rest = pricer.dc(n1, n2, n3) * math.prod(tails)
    else:
        cdf = math.prod(poisson_cdf(n, m) for n, m in zip(orders, means))
        rest = pricer.dc(0, 0, 0) * (1.0 - cdf)
    return PriceBounds(lower=lower, upper=lower + slack + rest, orders=tuple(orders),
                       tail_mass=tails, mode=mode)


def bracket_price(spec, theorem, orders, mode=BoundMode.CONSERVATIVE, pricer=None):
    """Lower and upper bounds on the price at truncation orders (N1, N2, N3)."""
    if any(n < 0 for n in orders):
        raise ValueError("truncation orders must be >= 0")
    if pricer is None:
        pricer = make_pricer(theorem, spec)
    return _bounds_from(pricer, tuple(int(n) for n in orders), mode)


def conservative_gap(pricer, n):
    spec = pricer.spec
    cdf = math.prod(poisson_cdf(n, j.intensity * spec.maturity) for j in spec.jumps)
    return pricer.dc(0, 0, 0) * (1.0 - cdf)


def auto_orders(spec, theorem, abs_tol, mode=BoundMode.CONSERVATIVE, pricer=None):
    """Smallest balanced orders (N, N, N) whose conservative gap is <= abs_tol."""
    if not abs_tol > 0:
        raise ValueError("abs_tol must be > 0")
    if pricer is None:
        pricer = make_pricer(theorem, spec)
    if conservative_gap(pricer, 0) <= abs_tol:
        n = 0
    else:
        lo, hi = 0, 1
        while conservative_gap(pricer, hi) > abs_tol:
            lo, hi = hi, 2 * hi
            if lo >= ORDER_CAP:
                raise BudgetExceededError(f"orders above {ORDER_CAP} needed for tolerance {abs_tol}")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if conservative_gap(pricer, mid) <= abs_tol:
                hi = mid
            else:
                lo = mid
        n = hi
        if n > ORDER_CAP:
            raise BudgetExceededError(f"orders above {ORDER_CAP} needed for tolerance {abs_tol}")
    return _bounds_from(pricer, (n, n, n), mode)


def put_bounds(spec, bounds, e_s3s2):
    """Bracket for the complementary digital (payoff when S^1 < K)."""
    disc = math.exp(-spec.rate_foreign * spec.maturity)
    return (disc * e_s3s2 - bounds.upper, disc * e_s3s2 - bounds.lower)


def truncated_put(pricer, orders):
    """Truncated sum for the complementary digital, using 1 - P~ directly."""
    sums, _ = _axis_sums(pricer, orders, lambda k: 1.0 - pricer.indicator_factor(k))
    return math.exp(pricer.log_prefactor) * math.prod(s for s, _ in sums)
