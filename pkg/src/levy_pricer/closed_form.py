"""Shared assembly of the conditional prices DC(n1, n2, n3).

Conditioning on the clocks and integrating out the Brownian parts gives

    DC(n1, n2, n3) = exp((mu_2 + mu_3 - r) T) * E[exp(-S_2)] * E[exp(-S_3)]
                     * prod_k MGF_k(c_k) * E[P~(S_1)],

where S_j is the sum of n_j jumps of asset j, c_k are the clock
coefficients of the theorem and P~(x) is the probability that the
indicator finishes in the money under the exponentially tilted law of
its clock.  The VG and NIG modules supply P~; everything else is here.
The factorisation also makes DC separable in (n1, n2, n3), which the
bracketing code relies on.
"""

import math
import threading

from .jumplaw import SumLaw, laplace_at_one
from .model import INDICATOR, TheoremId, component_log_mgf, theorem_terms, validate_model


class ConditionalPricer:
    """DC(n1, n2, n3) for one validated (theorem, spec) pair, with caching."""

    def __init__(self, theorem, spec, validate=True):
        self.theorem = TheoremId(theorem)
        self.spec = spec
        if validate:
            validate_model(spec, self.theorem).raise_if_failed()
        self.terms = theorem_terms(self.theorem, spec)
        sub = spec.subordinators
        shapes = sub.shapes()
        t = spec.maturity
        a = spec.assets
        log_pref = (a[1].mu + a[2].mu - spec.rate_foreign) * t
        log_pref += component_log_mgf(sub.family, shapes[INDICATOR], self.terms.b, t)
        for k, coef in self.terms.side:
            log_pref += component_log_mgf(sub.family, shapes[k], coef, t)
        self.log_prefactor = log_pref
        self.warnings = []
        self._indicator_cache = {}
        self._lock = threading.Lock()

    def asset_factor(self, asset, n):
        """E[exp(-S)] for n jumps of asset 2 (asset=1) or 3 (asset=2)."""
        return laplace_at_one(SumLaw(self.spec.jumps[asset].law, n))

    def indicator_factor(self, n1):
        with self._lock:
            if n1 in self._indicator_cache:
                return self._indicator_cache[n1]
        value = self._indicator_expectation(n1)
        with self._lock:
            self._indicator_cache[n1] = value
        return value

    def _indicator_expectation(self, n1):
        raise NotImplementedError

    def dc(self, n1, n2, n3):
        """Conditional price given n_j jumps of asset j."""
        e1 = self.indicator_factor(n1)
        if e1 == 0.0:
            return 0.0
        return math.exp(self.log_prefactor) * self.asset_factor(1, n2) * self.asset_factor(2, n3) * e1
