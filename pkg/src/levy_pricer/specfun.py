"""Special functions used by the closed-form pricing kernels.

Normal CDF, log-gamma, beta and the MacDonald function K_nu are thin
wrappers around scipy with explicit domain and overflow checks.  The
Gauss hypergeometric series and the degenerate Appell (Humbert Phi_1)
function are evaluated here with tail bounds.

The degenerate Appell function is

    A(u1, u2, u3; x, y) = sum_{m,n} (u1)_{m+n} (u2)_m x^m y^n
                                    / ((u3)_{m+n} m! n!),     |x| < 1.

When u3 > u1 > 0 (the pricing kernels use u3 = u1 + 1) it has the Euler
integral form

    A = Gamma(u3) / (Gamma(u1) Gamma(u3 - u1))
        * int_0^1 t^(u1-1) (1-t)^(u3-u1-1) (1 - x t)^(-u2) exp(y t) dt

with a positive integrand, so it is evaluated by quadrature (Taylor
expansions at the end points, Gauss-Legendre panels elsewhere) instead
of the double series (the series cancels badly once u2 is a
large negative number).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sc

from .errors import ConvergenceError, DomainError

EPS = np.finfo(float).eps

GAUSS_TARGET = 1e-12
APPELL_TARGET = 1e-11
APPELL_TERM_CAP = 20_000
GAUSS_TERM_CAP = 2_000_000
DEGRADED_EDGE = 1.0 - 1e-6


@dataclass(frozen=True)
class SeriesResult:
    """Value of a series together with an absolute error bound.

    ``value * exp(log_scale)`` is the function value; ``tail_bound`` is in
    the same (scaled) units as ``value``.  ``degraded`` marks arguments
    close to the edge of the convergence domain.
    """

    value: float
    terms_used: int
    tail_bound: float
    degraded: bool = False
    log_scale: float = 0.0

    @property
    def unscaled(self):
        if self.log_scale == 0.0:
            return self.value
        return self.value * math.exp(self.log_scale)


def normal_cdf(u):
    """Standard normal distribution function."""
    return float(sc.ndtr(u))


def ln_gamma(u):
    """log Gamma(u) for u > 0."""
    if not u > 0:
        raise DomainError(f"ln_gamma needs u > 0, got {u!r}")
    return math.lgamma(u)


def beta(u1, u2):
    """Euler beta function B(u1, u2) for positive arguments."""
    if not (u1 > 0 and u2 > 0):
        raise DomainError(f"beta needs positive arguments, got {u1!r}, {u2!r}")
    return math.exp(ln_gamma(u1) + ln_gamma(u2) - ln_gamma(u1 + u2))


def bessel_k(order, x):
    """MacDonald function K_order(x) for x > 0.

    Raises OverflowError instead of returning inf.
    """
    if not x > 0:
        raise DomainError(f"bessel_k needs x > 0, got {x!r}")
    value = float(sc.kv(abs(order), x))
    if math.isinf(value):
        raise OverflowError(f"K_{order}({x}) exceeds the double range")
    if math.isnan(value):
        raise DomainError(f"K_{order}({x}) is undefined")
    return value


def log_bessel_k(order, x):
    """log K_order(x), usable where K itself would overflow or underflow."""
    if not x > 0:
        raise DomainError(f"log_bessel_k needs x > 0, got {x!r}")
    nu = abs(order)
    scaled = float(sc.kve(nu, x))
    if 0.0 < scaled < math.inf:
        return math.log(scaled) - x
    if nu > 0 and x * x < 1e-6 * (nu + 1):
        # small-argument expansion Gamma(nu)/2 (2/x)^nu (1 - x^2 / (4 (nu - 1)) + ...)
        lead = math.lgamma(nu) - math.log(2.0) + nu * math.log(2.0 / x)
        return lead + (math.log1p(-x * x / (4.0 * (nu - 1.0))) if nu > 1.0 else 0.0)
    raise OverflowError(f"log K_{order}({x}) is out of reach")


def _is_nonpositive_int(u):
    return u <= 0 and float(u).is_integer()


def _series_2f1(a, b, c, z):
    """Plain Gauss series for 0 <= z < 1, summed in blocks.

    Returns (value, terms, tail_bound).
    """
    block = 256
    pieces = []
    abs_total = 0.0
    last = 1.0
    k0 = 0
    regime = 2.0 * (abs(a) + abs(b) + abs(c)) + 10.0
    while k0 < GAUSS_TERM_CAP:
        k = np.arange(k0, k0 + block, dtype=float)
        ratios = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        terms = last * np.concatenate(([1.0], np.cumprod(ratios[:-1])))
        if k0 == 0:
            terms[0] = 1.0
        pieces.append(math.fsum(terms))
        abs_total += float(np.sum(np.abs(terms)))
        last = float(terms[-1] * ratios[-1])
        k0 += block
        if last == 0.0:
            return math.fsum(pieces), k0, 4 * EPS * abs_total
        kk = float(k0)
        if kk > regime:
            f = abs((a + kk) * (b + kk) / ((c + kk) * (kk + 1.0)))
            r = z * max(f, 1.0)
            if r < 1.0:
                tail = abs(last) / (1.0 - r)
                value = math.fsum(pieces)
                bound = tail + 4 * EPS * abs_total
                if bound <= GAUSS_TARGET * abs(value):
                    return value, k0, bound
    raise ConvergenceError(f"2F1({a}, {b}; {c}; {z}) did not converge in {GAUSS_TERM_CAP} terms")


def gauss_2f1(u1, u2, u3, u4):
    """Gauss hypergeometric function 2F1(u1, u2; u3; u4) for u4 < 1.

    Negative arguments are mapped into (0, 1) with a Pfaff transformation
    on whichever upper parameter gives faster term decay.
    """
    if _is_nonpositive_int(u3):
        raise DomainError("u3 must not be a nonpositive integer")
    if not u4 < 1.0:
        raise DomainError(f"gauss_2f1 needs u4 < 1, got {u4!r}")
    if u4 == 0.0:
        return SeriesResult(1.0, 1, 0.0)
    if u4 > 0.0:
        value, terms, bound = _series_2f1(u1, u2, u3, u4)
        return SeriesResult(value, terms, bound, degraded=u4 > DEGRADED_EDGE)
    w = u4 / (u4 - 1.0)
    # term growth exponent a + b - c - 1 of each transformed series
    if (u1 - u2) <= (u2 - u1):
        pref = (1.0 - u4) ** (-u1)
        value, terms, bound = _series_2f1(u1, u3 - u2, u3, w)
    else:
        pref = (1.0 - u4) ** (-u2)
        value, terms, bound = _series_2f1(u3 - u1, u2, u3, w)
    return SeriesResult(pref * value, terms, pref * bound, degraded=w > DEGRADED_EDGE)


# ---------------------------------------------------------------------------
# degenerate Appell function


@lru_cache(maxsize=64)
def _legendre_rule(n):
    z, w = sc.roots_legendre(n)
    return 0.5 * (z + 1.0), 0.5 * w


def _taylor_panel(p, factors, c, length):
    """int_0^length s^(p-1) G(s) ds with G(s) = prod_i (1 - b_i s)^(a_i) e^(c s).

    G is expanded in powers of s / length from G' = G (c - sum_i a_i b_i / (1 - b_i s)).
    Returns (value, abs_sum).
    """
    d = [c * length - sum(a * b * length for a, b in factors)]
    coefs = [1.0]
    total = 1.0 / p
    abs_total = total
    small = 0
    for k in range(1, 400):
        d.append(-sum(a * b * length * (b * length) ** k for a, b in factors))
        ck = math.fsum(d[j] * coefs[k - 1 - j] for j in range(k)) / k
        coefs.append(ck)
        term = ck / (p + k)
        total += term
        abs_total += abs(term)
        small = small + 1 if abs(term) <= 1e-18 * abs_total else 0
        if small >= 3:
            scale = length ** p
            return scale * total, scale * abs_total
    raise ConvergenceError("Appell end-panel expansion did not converge")


def _panel_length(factors, c, width):
    """Keep the variation of log G on an end panel below one."""
    rate = abs(c) + sum(2.0 * abs(a * b) for a, b in factors)
    reach = max([abs(b) for _, b in factors] + [1e-300])
    return min(0.25, width, 1.0 / (rate + 1e-300), 0.5 / reach)


def _euler_layout(u1, u2, v, x, y, width):
    """End-panel lengths and interior break points for the Euler integral."""
    left = _panel_length([(v - 1.0, 1.0), (-u2, x)], y, width)
    right = 0.0
    if v != 1.0:
        right = _panel_length([(u1 - 1.0, 1.0), (-u2, -x / (1.0 - x))], -y, width)
    edges = list(np.linspace(0.0, 1.0, int(math.ceil(1.0 / width)) + 1))
    g = left
    while g < edges[1]:
        edges.append(g)
        g *= 2.0
    g = right
    while 0.0 < g < edges[1]:
        edges.append(1.0 - g)
        g *= 2.0
    if x > 0.5:
        depth = int(math.ceil(math.log2(1.0 / (1.0 - x)))) + 2
        edges.extend(1.0 - 0.5 ** k for k in range(1, depth + 1))
    hi_end = 1.0 - right
    interior = sorted(e for e in set(edges) if left <= e <= hi_end)
    return left, right, interior


def _euler_quadrature(u1, u2, v, x, y, n, width):
    """int_0^1 t^(u1-1) (1-t)^(v-1) (1-xt)^(-u2) e^(y t - max(y,0)) dt.

    Both end panels are integrated from Taylor expansions that absorb the
    endpoint powers; interior panels use n-point Gauss-Legendre.
    Returns (value, abs_sum).
    """
    shift = max(y, 0.0)
    left, right, edges = _euler_layout(u1, u2, v, x, y, width)
    head, head_abs = _taylor_panel(u1, [(v - 1.0, 1.0), (-u2, x)], y, left)
    head_scale = math.exp(-shift)
    pieces = [head * head_scale]
    abs_sum = head_abs * head_scale
    if right > 0.0:
        tail, tail_abs = _taylor_panel(v, [(u1 - 1.0, 1.0), (-u2, -x / (1.0 - x))], -y, right)
        tail_scale = math.exp(-u2 * math.log1p(-x) + y - shift)
        pieces.append(tail * tail_scale)
        abs_sum += tail_abs * tail_scale
    tl, wl = _legendre_rule(n)
    lo = np.asarray(edges[:-1])
    hi = np.asarray(edges[1:])
    tt = lo[:, None] + (hi - lo)[:, None] * tl[None, :]
    ww = (hi - lo)[:, None] * wl[None, :]
    logs = (u1 - 1.0) * np.log(tt) - u2 * np.log1p(-x * tt) + y * tt - shift
    if v != 1.0:
        logs = logs + (v - 1.0) * np.log1p(-tt)
    vals = (ww * np.exp(logs)).ravel()
    pieces.extend(vals)
    return math.fsum(pieces), abs_sum + float(np.sum(np.abs(vals)))


def humbert_integral(u1, u2, x, y, u3=None):
    """A(u1, u2, u3; x, y) via its Euler integral, for u3 > u1 > 0 (default u3 = u1 + 1).

    The result is scaled: true value = value * exp(log_scale).
    """
    u3 = u1 + 1.0 if u3 is None else u3
    v = u3 - u1
    if not (u1 > 0 and v > 0):
        raise DomainError("integral form needs u3 > u1 > 0")
    if not abs(x) < 1.0:
        raise DomainError(f"Appell argument must satisfy |u4| < 1, got {x!r}")
    norm = math.exp(math.lgamma(u3) - math.lgamma(u1) - math.lgamma(v))
    width = min(1.0, 6.0 / max(abs(y), 1e-300))
    for _ in range(6):
        coarse, _ = _euler_quadrature(u1, u2, v, x, y, 20, width)
        fine, abs_sum = _euler_quadrature(u1, u2, v, x, y, 40, width)
        bound = abs(fine - coarse) + 8 * EPS * abs_sum
        if bound <= 0.01 * APPELL_TARGET * abs(fine):
            break
        width *= 0.5
    else:
        if x <= DEGRADED_EDGE:
            raise ConvergenceError(f"Appell integral ({u1}, {u2}, {u3}; {x}, {y}) did not converge")
    panels = len(_euler_layout(u1, u2, v, x, y, width)[2]) + 1
    return SeriesResult(norm * fine, 40 * panels, norm * bound, degraded=x > DEGRADED_EDGE,
                        log_scale=max(y, 0.0))


def _log_poch(a, count):
    """log|(a)_k| and sign for k = 0..count-1 (zeros flagged by -inf)."""
    k = np.arange(count - 1, dtype=float)
    factors = a + k
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(factors))
    lp = np.concatenate(([0.0], np.cumsum(logs)))
    sg = np.concatenate(([1.0], np.cumprod(np.sign(factors))))
    err = np.concatenate(([0.0], np.cumsum(np.abs(logs))))
    return lp, sg, err


def _humbert_series(u1, u2, u3, x, y):
    """Double series with a Kummer transformation on the n-sum when y < 0."""
    kummer = y < 0
    big_y = -y if kummer else y
    v = u3 - u1
    ly = math.log(big_y) if big_y > 0 else -math.inf
    lx = math.log(abs(x)) if x != 0 else -math.inf
    sx = -1.0 if x < 0 else 1.0
    rows = int(60 + 60 / (1.0 - abs(x)))
    cols = int(40 + 2 * big_y)
    regime = 2.0 * (abs(u1) + abs(u2) + abs(u3)) + 10.0
    while True:
        if rows > APPELL_TERM_CAP or cols > APPELL_TERM_CAP:
            raise ConvergenceError(
                f"Appell series ({u1}, {u2}, {u3}; {x}, {y}) hit the {APPELL_TERM_CAP} term cap")
        size = rows + cols
        lg_m = np.asarray([math.lgamma(m + 1.0) for m in range(rows)])
        lg_n = np.asarray([math.lgamma(n + 1.0) for n in range(cols)])
        l2, s2, e2 = _log_poch(u2, rows)
        l3, s3, e3 = _log_poch(u3, size)
        m_idx = np.arange(rows)
        n_idx = np.arange(cols)
        with np.errstate(invalid="ignore"):
            lm = l2 + m_idx * lx - lg_m
            ln = n_idx * ly - lg_n if big_y > 0 else np.where(n_idx == 0, 0.0, -np.inf)
        lm[0] = l2[0]
        sm = s2 * sx ** m_idx
        em = e2
        if kummer:
            l1, s1, e1 = _log_poch(u1, rows)
            lm = lm + l1
            sm = sm * s1
            em = em + e1
            lv, sv, ev = _log_poch(v, cols)
            ln = ln + lv
            sn = sv
            en = ev
            lk, sk, ek = -l3, s3, e3
        else:
            sn = np.ones(cols)
            en = np.zeros(cols)
            l1, s1, e1 = _log_poch(u1, size)
            lk, sk, ek = l1 - l3, s1 * s3, e1 + e3
        if not np.isfinite(lm[0]):
            lm[0] = 0.0
        if not np.isfinite(ln[0]):
            ln[0] = 0.0
        k_idx = m_idx[:, None] + n_idx[None, :]
        lt = lm[:, None] + ln[None, :] + lk[k_idx]
        st = sm[:, None] * sn[None, :] * sk[k_idx]
        et = em[:, None] + en[None, :] + ek[k_idx] + np.abs(lt) + 4.0
        finite = np.isfinite(lt)
        top = float(np.max(lt[finite])) if finite.any() else 0.0
        with np.errstate(under="ignore", invalid="ignore"):
            mag = np.where(finite, np.exp(lt - top), 0.0)
        terms = st * mag
        total = math.fsum(terms.ravel())
        abs_total = float(np.sum(mag))
        round_err = EPS * float(np.sum(mag[finite] * et[finite]))

        # n-direction tail of every row
        last = mag[:, -1]
        n_last = float(cols - 1)
        col_ok = n_last > regime + big_y
        kk = m_idx + n_last
        if kummer:
            ratio = big_y * np.abs(v + n_last) / ((n_last + 1.0) * np.abs(u3 + kk))
        else:
            ratio = big_y * np.abs(u1 + kk) / (np.abs(u3 + kk) * (n_last + 1.0))
        col_ok = col_ok and bool(np.all(ratio < 0.5))
        col_tail = float(np.sum(last * ratio / (1.0 - np.minimum(ratio, 0.5)))) if col_ok else math.inf

        # m-direction tail beyond the last row
        row_sums = np.sum(mag, axis=1)
        m_last = float(rows - 1)
        row_ok = m_last > regime
        if kummer:
            f = abs(u1 + m_last) / abs(u3 + m_last)
        else:
            f = max(1.0, abs(u1 + m_last) / abs(u3 + m_last))
        rho = max(abs(x) * abs(u2 + m_last) * f / (m_last + 1.0), abs(x))
        row_ok = row_ok and rho < 1.0
        row_tail = float(row_sums[-1]) * rho / (1.0 - rho) if row_ok else math.inf

        pre_log = top + (y if kummer else 0.0)
        pre = math.exp(pre_log)
        value = total * pre
        trunc = (col_tail + row_tail) * pre
        rounding = round_err * pre
        target = APPELL_TARGET * max(1.0, abs(value))
        if col_ok and row_ok and trunc <= 0.1 * target:
            if rounding > target:
                raise ConvergenceError(
                    f"Appell series ({u1}, {u2}, {u3}; {x}, {y}) loses too much to cancellation")
            return SeriesResult(value, rows * cols, trunc + rounding,
                                degraded=abs(x) > DEGRADED_EDGE)
        if not col_ok or col_tail * pre > 0.05 * target:
            cols *= 2
        if not row_ok or row_tail * pre > 0.05 * target:
            rows *= 2


def appell_degenerate(u1, u2, u3, u4, u5):
    """Degenerate Appell function A(u1, u2, u3; u4, u5) for |u4| < 1."""
    if not abs(u4) < 1.0:
        raise DomainError(f"Appell argument must satisfy |u4| < 1, got {u4!r}")
    if _is_nonpositive_int(u3):
        raise DomainError("u3 must not be a nonpositive integer")
    if u4 == 0.0 and u5 == 0.0:
        return SeriesResult(1.0, 1, 0.0)
    if u1 > 0 and u3 > u1:
        res = humbert_integral(u1, u2, u4, u5, u3)
        value = res.unscaled
        if math.isinf(value):
            raise OverflowError("Appell value exceeds the double range")
        factor = math.exp(res.log_scale)
        return SeriesResult(value, res.terms_used, res.tail_bound * factor, res.degraded)
    return _humbert_series(u1, u2, u3, u4, u5)
