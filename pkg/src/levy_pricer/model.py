"""Three-asset market model with subordinated Brownian log-returns.

For j = 1, 2, 3 the log-return over [0, T] is

    H^j = mu_j T + beta_j theta^j + sigma_j B^j(theta^j) - Z^j,

where theta^j is a gamma (VG) or inverse-Gaussian (NIG) clock with unit
mean rate, the B^j are correlated Brownian motions and Z^j is a compound
Poisson sum of nonnegative jumps.  The clocks of assets 2 and 3 are
built from four independent components,

    theta^j = kappa_j G + kappa_j1 G^1 + kappa~_j G~^j,     theta^1 = G^1,

and the claim pays S^3_T S^2_T when S^1_T >= K, discounted at the
foreign rate r.
"""

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedDependenceError, ValidationError
from .jumplaw import JumpLaw, SumLaw, laplace_at_one

CONSTRAINT_RTOL = 1e-12
CONSISTENCY_RTOL = 1e-9
FINITENESS_MARGIN = 1e-9
PSD_TOL = 1e-12

# clock components, in column order of the loading matrix
COMMON, INDICATOR, IDIO2, IDIO3 = range(4)
COMPONENT_NAMES = ("common", "indicator", "idiosyncratic_2", "idiosyncratic_3")


class Family(str, enum.Enum):
    VG = "VG"
    NIG = "NIG"


class Linkage(str, enum.Enum):
    INDEPENDENT = "Independent"
    SHARED_EQUAL_23 = "SharedEqual23"
    ALL_EQUAL = "AllEqual"
    INDICATOR3_LINKED = "Indicator3Linked"
    INDICATOR2_LINKED = "Indicator2Linked"


class TheoremId(str, enum.Enum):
    """Closed-form cases.  1-4 (and 4s) are VG, 5-8 are NIG."""

    T1 = "1"
    T2 = "2"
    T3 = "3"
    T4 = "4"
    T4S = "4s"
    T5 = "5"
    T6 = "6"
    T7 = "7"
    T8 = "8"


@dataclass(frozen=True)
class AssetParams:
    mu: float
    beta: float
    sigma: float

    @property
    def u(self):
        """beta + sigma^2 / 2, the clock coefficient of E[exp(X)]."""
        return self.beta + 0.5 * self.sigma ** 2


@dataclass(frozen=True)
class CorrelationBlock:
    rho12: float = 0.0
    rho13: float = 0.0
    rho23: float = 0.0

    def matrix(self):
        return np.array([[1.0, self.rho12, self.rho13],
                         [self.rho12, 1.0, self.rho23],
                         [self.rho13, self.rho23, 1.0]])

    def is_psd(self, tol=PSD_TOL):
        """Cholesky with pivots down to -tol accepted as zero."""
        a = self.matrix()
        n = a.shape[0]
        low = np.zeros_like(a)
        for j in range(n):
            d = a[j, j] - np.dot(low[j, :j], low[j, :j])
            if d < -tol:
                return False
            low[j, j] = math.sqrt(max(d, 0.0))
            for i in range(j + 1, n):
                off = a[i, j] - np.dot(low[i, :j], low[j, :j])
                if low[j, j] > tol:
                    low[i, j] = off / low[j, j]
                elif abs(off) > math.sqrt(tol):
                    return False
        return True


@dataclass(frozen=True)
class SubordinatorStructure:
    """Shared-component clocks for assets 2 and 3.

    Pairs are indexed (asset 2, asset 3).  Shapes are a, a_1, a~_j for VG
    and phi, phi_1, phi~_j for NIG.
    """

    family: Family
    kappa: tuple
    kappa1: tuple
    kappa_tilde: tuple
    shape_shared: float
    shape_indicator: float
    shape_idios: tuple
    linkage: Linkage = Linkage.INDEPENDENT

    def loading_matrix(self):
        """3 x 4 matrix W with theta^j = sum_k W[j, k] * component_k."""
        w = np.zeros((3, 4))
        w[0, INDICATOR] = 1.0
        for j in (0, 1):
            w[j + 1, COMMON] = self.kappa[j]
            w[j + 1, INDICATOR] = self.kappa1[j]
            w[j + 1, IDIO2 + j] = self.kappa_tilde[j]
        return w

    def shapes(self):
        return np.array([self.shape_shared, self.shape_indicator,
                         self.shape_idios[0], self.shape_idios[1]], dtype=float)


@dataclass(frozen=True)
class JumpSpec:
    intensity: float
    law: JumpLaw

    def sum_law(self, n):
        return SumLaw(self.law, n)


@dataclass(frozen=True)
class ModelSpec:
    assets: tuple
    correlations: CorrelationBlock
    subordinators: SubordinatorStructure
    jumps: tuple
    rate_foreign: float
    rate_domestic: float
    maturity: float
    strike: float

    @property
    def family(self):
        return self.subordinators.family

    @property
    def log_moneyness(self):
        """mu_1 T - ln K: the threshold the indicator's jump sum is compared to."""
        return self.assets[0].mu * self.maturity - math.log(self.strike)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_json(self):
        sub = self.subordinators
        return {
            "assets": [{"mu": a.mu, "beta": a.beta, "sigma": a.sigma} for a in self.assets],
            "correlations": {"rho12": self.correlations.rho12,
                             "rho13": self.correlations.rho13,
                             "rho23": self.correlations.rho23},
            "subordinators": {
                "family": sub.family.value,
                "linkage": sub.linkage.value,
                "kappa": list(sub.kappa),
                "kappa1": list(sub.kappa1),
                "kappa_tilde": list(sub.kappa_tilde),
                "shape_shared": sub.shape_shared,
                "shape_indicator": sub.shape_indicator,
                "shape_idios": list(sub.shape_idios),
            },
            "jumps": [{"intensity": j.intensity, "law": j.law.to_json()} for j in self.jumps],
            "rates": {"foreign": self.rate_foreign, "domestic": self.rate_domestic},
            "maturity": self.maturity,
            "strike": self.strike,
        }

    def digest(self):
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


class SpecFormatError(ValueError):
    """A spec document is missing a field or has a field of the wrong type."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _as_num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFormatError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _num(doc, key, path):
    if not isinstance(doc, dict):
        raise SpecFormatError(path, "expected an object")
    if key not in doc:
        raise SpecFormatError(f"{path}.{key}", "missing field")
    return _as_num(doc[key], f"{path}.{key}")


def _obj(value, path):
    if not isinstance(value, dict):
        raise SpecFormatError(path, "expected an object")
    return value


def _pair(doc, key, path):
    if key not in doc:
        raise SpecFormatError(f"{path}.{key}", "missing field")
    value = doc[key]
    if not isinstance(value, list) or len(value) != 2:
        raise SpecFormatError(f"{path}.{key}", "expected a list of two numbers")
    return tuple(_as_num(v, f"{path}.{key}[{i}]") for i, v in enumerate(value))


def spec_from_json(doc):
    """Build a ModelSpec from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise SpecFormatError("$", "expected an object")
    for key in ("assets", "correlations", "subordinators", "jumps", "rates", "maturity", "strike"):
        if key not in doc:
            raise SpecFormatError(f"$.{key}", "missing field")
    assets_doc = doc["assets"]
    if not isinstance(assets_doc, list) or len(assets_doc) != 3:
        raise SpecFormatError("$.assets", "expected a list of three assets")
    assets = tuple(AssetParams(_num(a, "mu", f"$.assets[{i}]"), _num(a, "beta", f"$.assets[{i}]"),
                               _num(a, "sigma", f"$.assets[{i}]"))
                   for i, a in enumerate(assets_doc))
    c = _obj(doc["correlations"], "$.correlations")
    corr = CorrelationBlock(_num(c, "rho12", "$.correlations"), _num(c, "rho13", "$.correlations"),
                            _num(c, "rho23", "$.correlations"))
    s = _obj(doc["subordinators"], "$.subordinators")
    p = "$.subordinators"
    try:
        family = Family(s.get("family"))
    except ValueError:
        raise SpecFormatError(f"{p}.family", "expected 'VG' or 'NIG'") from None
    try:
        linkage = Linkage(s.get("linkage", "Independent"))
    except ValueError:
        raise SpecFormatError(f"{p}.linkage", "unknown linkage") from None
    sub = SubordinatorStructure(
        family=family, kappa=_pair(s, "kappa", p), kappa1=_pair(s, "kappa1", p),
        kappa_tilde=_pair(s, "kappa_tilde", p), shape_shared=_num(s, "shape_shared", p),
        shape_indicator=_num(s, "shape_indicator", p), shape_idios=_pair(s, "shape_idios", p),
        linkage=linkage)
    jumps_doc = doc["jumps"]
    if not isinstance(jumps_doc, list) or len(jumps_doc) != 3:
        raise SpecFormatError("$.jumps", "expected a list of three jump specs")
    jumps = []
    for i, j in enumerate(jumps_doc):
        path = f"$.jumps[{i}]"
        _obj(j, path)
        if "law" not in j:
            raise SpecFormatError(f"{path}.law", "missing field")
        try:
            law = JumpLaw.from_json(j["law"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError(f"{path}.law", str(exc)) from None
        jumps.append(JumpSpec(_num(j, "intensity", path), law))
    rates = _obj(doc["rates"], "$.rates")
    return ModelSpec(assets=assets, correlations=corr, subordinators=sub, jumps=tuple(jumps),
                     rate_foreign=_num(rates, "foreign", "$.rates"),
                     rate_domestic=_num(rates, "domestic", "$.rates"),
                     maturity=_num(doc, "maturity", "$"), strike=_num(doc, "strike", "$"))


# ---------------------------------------------------------------------------
# subordinator moment generating functions


def gamma_log_mgf(shape, coef, horizon):
    """log E[exp(coef * G_T)] for a unit-mean-rate gamma clock with rate ``shape``."""
    if coef == 0.0:
        return 0.0
    if not coef < shape:
        raise DomainError(f"gamma MGF needs coef < shape ({coef} >= {shape})")
    return -shape * horizon * math.log1p(-coef / shape)


def ig_mgf(phi, A):
    """E[exp(A * kappa_1)] for a unit-mean-rate inverse-Gaussian clock, per unit time."""
    return math.exp(ig_log_mgf(phi, A, 1.0))


def ig_log_mgf(phi, A, horizon):
    """log E[exp(A * kappa_T)] = phi T (phi - sqrt(phi^2 - 2A))."""
    if A == 0.0:
        return 0.0
    disc = phi * phi - 2.0 * A
    if disc < -CONSTRAINT_RTOL * phi * phi:
        raise DomainError(f"IG MGF needs phi^2 >= 2A ({phi ** 2} < {2 * A})")
    if disc <= CONSTRAINT_RTOL * phi * phi:
        # on the boundary up to rounding; the square root would amplify it
        disc = 0.0
    return phi * horizon * (phi - math.sqrt(disc))


def component_log_mgf(family, shape, coef, horizon):
    if family == Family.VG:
        return gamma_log_mgf(shape, coef, horizon)
    return ig_log_mgf(shape, coef, horizon)


# ---------------------------------------------------------------------------
# theorem table


@dataclass(frozen=True)
class TheoremConfig:
    family: Family
    linkage: Linkage
    zero_rhos: tuple


THEOREMS = {
    TheoremId.T1: TheoremConfig(Family.VG, Linkage.INDEPENDENT, ("rho12", "rho13", "rho23")),
    TheoremId.T2: TheoremConfig(Family.VG, Linkage.SHARED_EQUAL_23, ("rho12", "rho13")),
    TheoremId.T3: TheoremConfig(Family.VG, Linkage.ALL_EQUAL, ()),
    TheoremId.T4: TheoremConfig(Family.VG, Linkage.INDICATOR3_LINKED, ("rho12", "rho23")),
    TheoremId.T4S: TheoremConfig(Family.VG, Linkage.INDICATOR2_LINKED, ("rho13", "rho23")),
    TheoremId.T5: TheoremConfig(Family.NIG, Linkage.INDEPENDENT, ("rho12", "rho13", "rho23")),
    TheoremId.T6: TheoremConfig(Family.NIG, Linkage.SHARED_EQUAL_23, ("rho12", "rho13")),
    TheoremId.T7: TheoremConfig(Family.NIG, Linkage.ALL_EQUAL, ()),
    TheoremId.T8: TheoremConfig(Family.NIG, Linkage.INDICATOR3_LINKED, ("rho12", "rho23")),
}


@dataclass(frozen=True)
class TheoremTerms:
    """Closed-form ingredients of a theorem.

    b is the coefficient of the indicator clock in the exponent of
    S^2 S^3, slope is the drift of the indicator log-return per unit of
    its clock after conditioning, and side lists (component, coefficient)
    pairs whose MGFs multiply the price.
    """

    b: float
    slope: float
    side: tuple


def theorem_terms(theorem, spec):
    """Per-theorem (b, slope, side MGF arguments)."""
    theorem = TheoremId(theorem)
    a1, a2, a3 = spec.assets
    rho = spec.correlations
    sub = spec.subordinators
    u2, u3 = a2.u, a3.u
    w = u2 + u3 + rho.rho23 * a2.sigma * a3.sigma
    k2, k3 = sub.kappa
    k21, k31 = sub.kappa1
    kt2, kt3 = sub.kappa_tilde
    if theorem in (TheoremId.T1, TheoremId.T5):
        return TheoremTerms(k21 * u2 + k31 * u3, a1.beta,
                            ((COMMON, k2 * u2 + k3 * u3), (IDIO2, kt2 * u2), (IDIO3, kt3 * u3)))
    if theorem in (TheoremId.T2, TheoremId.T6):
        return TheoremTerms(k21 * w, a1.beta, ((COMMON, k2 * w),))
    if theorem in (TheoremId.T3, TheoremId.T7):
        slope = a1.beta + rho.rho12 * a1.sigma * a2.sigma + rho.rho13 * a1.sigma * a3.sigma
        return TheoremTerms(w, slope, ())
    if theorem in (TheoremId.T4, TheoremId.T8):
        return TheoremTerms(u3 + k21 * u2, a1.beta + rho.rho13 * a1.sigma * a3.sigma,
                            ((IDIO2, kt2 * u2),))
    # indicator clock shared with asset 2: mirror image of T4
    return TheoremTerms(u2 + k31 * u3, a1.beta + rho.rho12 * a1.sigma * a2.sigma,
                        ((IDIO3, kt3 * u3),))


def exponent_loadings(spec):
    """Linear clock coefficients of log(S^2 S^3) after integrating the Brownian parts.

    Returns an array c with E[S^2 S^3 | clocks] proportional to
    exp(sum_k c_k component_k).  Raises UnsupportedDependenceError when
    the cross term rho_23 sqrt(theta^2 theta^3) is not linear.
    """
    w = spec.subordinators.loading_matrix()
    a = spec.assets
    coef = a[1].u * w[1] + a[2].u * w[2]
    rho23 = spec.correlations.rho23
    if rho23 != 0.0:
        if not np.allclose(w[1], w[2], rtol=0, atol=1e-14):
            raise UnsupportedDependenceError(
                "rho23 != 0 with distinct clocks for assets 2 and 3 has no closed form")
        coef = coef + rho23 * a[1].sigma * a[2].sigma * w[1]
    return coef


def general_terms(spec):
    """(b, slope, side) derived from the loading matrix, for any structure
    in which the closed form exists."""
    w = spec.subordinators.loading_matrix()
    coef = exponent_loadings(spec)
    a = spec.assets
    rho = spec.correlations
    slope = a[0].beta
    for j, r in ((1, rho.rho12), (2, rho.rho13)):
        if r == 0.0:
            continue
        if not np.allclose(w[j], w[0], rtol=0, atol=1e-14):
            raise UnsupportedDependenceError(
                "indicator correlated with an asset on a different clock has no closed form")
        slope += r * a[0].sigma * a[j].sigma
    side = tuple((k, float(coef[k])) for k in (COMMON, IDIO2, IDIO3))
    return TheoremTerms(float(coef[INDICATOR]), slope, side)


def log_jump_laplace(spec, asset):
    """log E[exp(-Z^j_T)] for the compound Poisson part of an asset."""
    jump = spec.jumps[asset]
    if jump.intensity == 0.0:
        return 0.0
    return -jump.intensity * spec.maturity * (1.0 - laplace_at_one(SumLaw(jump.law, 1)))


def expected_s3s2(spec):
    """E[S^3_T S^2_T] under the model."""
    coef = exponent_loadings(spec)
    sub = spec.subordinators
    shapes = sub.shapes()
    t = spec.maturity
    total = (spec.assets[1].mu + spec.assets[2].mu) * t
    total += log_jump_laplace(spec, 1) + log_jump_laplace(spec, 2)
    for k in range(4):
        total += component_log_mgf(sub.family, shapes[k], float(coef[k]), t)
    return math.exp(total)


def price_put_from_call(call_price, e_s3s2, discount):
    """Put-side digital price: discount * E[S^3 S^2] - call."""
    return discount * e_s3s2 - call_price


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    theorem: object
    checks: tuple
    warnings: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_json(self):
        return {
            "theorem": None if self.theorem is None else TheoremId(self.theorem).value,
            "ok": bool(self.ok),
            "checks": [{"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                       for c in self.checks],
            "warnings": list(self.warnings),
        }

    def raise_if_failed(self):
        if not self.ok:
            names = ", ".join(c.name for c in self.failures)
            raise ValidationError(f"spec failed validation: {names}", self)


def _close(x, y, rtol):
    return abs(x - y) <= rtol * max(abs(x), abs(y), 1e-300) or x == y


def _structural_checks(spec):
    checks = []
    finite = all(math.isfinite(v) for a in spec.assets for v in (a.mu, a.beta, a.sigma))
    checks.append(Check("asset parameters finite", finite))
    checks.append(Check("volatilities nonnegative", all(a.sigma >= 0 for a in spec.assets)))
    rho = spec.correlations
    in_range = all(-1.0 <= r <= 1.0 for r in (rho.rho12, rho.rho13, rho.rho23))
    checks.append(Check("correlations in [-1, 1]", in_range))
    checks.append(Check("correlation matrix positive semidefinite", in_range and rho.is_psd()))
    checks.append(Check("maturity positive", spec.maturity > 0))
    checks.append(Check("strike positive", spec.strike > 0))
    checks.append(Check("rates nonnegative", spec.rate_foreign >= 0 and spec.rate_domestic >= 0))
    checks.append(Check("jump intensities nonnegative",
                        all(j.intensity >= 0 and math.isfinite(j.intensity) for j in spec.jumps)))
    return checks


def _subordinator_checks(spec):
    sub = spec.subordinators
    checks = []
    shapes_ok = all(s > 0 and math.isfinite(s) for s in sub.shapes())
    checks.append(Check("subordinator shapes positive", shapes_ok))
    weights_ok = True
    for j in (0, 1):
        ks = (sub.kappa[j], sub.kappa1[j], sub.kappa_tilde[j])
        if min(ks) < 0 or abs(sum(ks) - 1.0) > 1e-12:
            weights_ok = False
    checks.append(Check("clock weights nonnegative and summing to one", weights_ok))
    consistent = True
    detail = ""
    if shapes_ok and weights_ok:
        shapes = sub.shapes()
        for j in (0, 1):
            ks = (sub.kappa[j], sub.kappa1[j], sub.kappa_tilde[j])
            comp_shapes = (shapes[COMMON], shapes[INDICATOR], shapes[IDIO2 + j])
            present = [(k, s) for k, s in zip(ks, comp_shapes) if k > 0]
            if sub.family == Family.VG:
                a_j = sum(s for _, s in present)
                implied = [s / k for k, s in present]
            else:
                a_j = sum(s * math.sqrt(k) for k, s in present)
                implied = [s / math.sqrt(k) for k, s in present]
            if not all(_close(a_j, x, CONSISTENCY_RTOL) for x in implied):
                consistent = False
                detail += f"asset {j + 2}: component shapes imply {implied}, total {a_j}; "
    checks.append(Check("subordinator consistency", consistent, detail.strip()))

    link = sub.linkage
    k2, k3 = sub.kappa
    k21, k31 = sub.kappa1
    kt2, kt3 = sub.kappa_tilde
    if link == Linkage.SHARED_EQUAL_23:
        ok = kt2 == 0 and kt3 == 0 and k2 == k3 and k21 == k31
    elif link == Linkage.ALL_EQUAL:
        ok = k21 == 1 and k31 == 1
    elif link == Linkage.INDICATOR3_LINKED:
        ok = k31 == 1 and k2 == 0
    elif link == Linkage.INDICATOR2_LINKED:
        ok = k21 == 1 and k3 == 0
    else:
        ok = True
    checks.append(Check(f"clock weights match linkage {link.value}", ok))
    return checks


def validate_model(spec, theorem=None):
    """Check admissibility of ``spec`` for the closed form of ``theorem``.

    With theorem=None only structural, subordinator and moment checks run
    (enough for Monte Carlo).
    """
    checks = _structural_checks(spec) + _subordinator_checks(spec)
    warnings = []
    sub = spec.subordinators
    base_ok = all(c.passed for c in checks)

    if base_ok:
        try:
            exponent_loadings(spec)
            moment_ok = True
            detail = ""
        except UnsupportedDependenceError as exc:
            moment_ok = None
            detail = str(exc)
        if moment_ok:
            coef = exponent_loadings(spec)
            shapes = sub.shapes()
            bad = []
            for k in range(4):
                try:
                    component_log_mgf(sub.family, shapes[k], float(coef[k]), spec.maturity)
                except ValueError:
                    bad.append(COMPONENT_NAMES[k])
            moment_ok = not bad
            detail = "MGF infinite for " + ", ".join(bad) if bad else ""
            checks.append(Check("moment condition E[S^3 S^2] finite", moment_ok, detail))
            if moment_ok:
                _martingale_warnings(spec, warnings)
        else:
            warnings.append("moment of S^3 S^2 not checked: " + detail)

    if theorem is not None:
        checks.extend(_theorem_checks(spec, TheoremId(theorem), base_ok))
    return ValidationReport(theorem, tuple(checks), tuple(warnings))


def _martingale_warnings(spec, warnings):
    r = spec.rate_foreign
    t = spec.maturity
    try:
        value = expected_s3s2(spec)
    except (UnsupportedDependenceError, ValueError, OverflowError):
        return
    if not _close(value, math.exp(r * t), 1e-6):
        warnings.append(f"E[S^3 S^2] = {value:.6g} differs from exp(rT) = {math.exp(r * t):.6g}; "
                        "discounted foreign-currency asset is not a martingale")


def _theorem_checks(spec, theorem, base_ok):
    cfg = THEOREMS[theorem]
    sub = spec.subordinators
    checks = [
        Check(f"family {cfg.family.value}", sub.family == cfg.family),
        Check(f"linkage {cfg.linkage.value}", sub.linkage == cfg.linkage),
    ]
    rho = spec.correlations
    for name in cfg.zero_rhos:
        checks.append(Check(f"{name} = 0", getattr(rho, name) == 0.0))
    checks.append(Check("indicator volatility positive", spec.assets[0].sigma > 0))
    if not (base_ok and all(c.passed for c in checks)):
        return checks
    terms = theorem_terms(theorem, spec)
    shapes = sub.shapes()
    if cfg.family == Family.VG:
        a1 = shapes[INDICATOR]
        checks.append(Check("VG finiteness b<a1", terms.b < a1 - FINITENESS_MARGIN,
                            f"b = {terms.b:.6g}, a1 = {a1:.6g}"))
        for k, c in terms.side:
            checks.append(Check(f"VG finiteness {COMPONENT_NAMES[k]} argument < shape",
                                c < shapes[k] - FINITENESS_MARGIN,
                                f"argument {c:.6g}, shape {shapes[k]:.6g}"))
    else:
        phi1 = shapes[INDICATOR]
        checks.append(Check("NIG constraint phi1^2 = 2b", _close(phi1 ** 2, 2.0 * terms.b,
                                                                  CONSTRAINT_RTOL),
                            f"phi1^2 = {phi1 ** 2:.17g}, 2b = {2 * terms.b:.17g}"))
        for k, c in terms.side:
            ok = shapes[k] ** 2 >= 2.0 * c * (1.0 - CONSTRAINT_RTOL)
            checks.append(Check(f"NIG finiteness {COMPONENT_NAMES[k]} phi^2 >= 2A", ok,
                                f"phi^2 = {shapes[k] ** 2:.6g}, 2A = {2 * c:.6g}"))
    return checks


def select_theorem(spec):
    """Pick the closed-form case from the family, linkage and correlations."""
    sub = spec.subordinators
    matches = [tid for tid, cfg in THEOREMS.items()
               if cfg.family == sub.family and cfg.linkage == sub.linkage
               and all(getattr(spec.correlations, r) == 0.0 for r in cfg.zero_rhos)]
    if len(matches) != 1:
        raise UnsupportedDependenceError(
            f"no closed form for family {sub.family.value}, linkage {sub.linkage.value} "
            f"and correlations {spec.correlations}")
    return matches[0]
