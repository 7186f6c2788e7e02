"""Acceptance criteria, one test each.

Every test records a line "criterion N ...: PASS|FAIL (detail)" which the
conftest prints in the terminal summary.  Run this file directly to print
the lines without pytest.
"""

import itertools
import json
import math
import pathlib
import time

import mpmath as mp
import numpy as np
import pytest

from levy_pricer.bounds import auto_orders, bracket_price, make_pricer, truncated_put
from levy_pricer.errors import ConvergenceError
from levy_pricer.mc_oracle import estimate_price
from levy_pricer.model import AssetParams, TheoremId, expected_s3s2
from levy_pricer.nig_pricing import (dc_conditional_nig, kernel_params_nig, lambda_kernel_nig,
                                     xi_kernel_nig)
from levy_pricer.specfun import appell_degenerate, bessel_k, gauss_2f1
from levy_pricer.vg_pricing import dc_conditional, lambda_kernel, xi_kernel
from published import fx_digital_spec, fx_digital_value, nig_self_quanto_spec, nig_self_quanto_value
from quad_oracles import integral_i_fast, integral_j_fast
from sampler_checks import (GAMMA_CASES, IG_CASES, gamma_density, gamma_draws, gamma_exponents,
                            gamma_mgf, ig_density, ig_draws, ig_exponents, ig_mgf_t, ks_pvalue,
                            mgf_z_scores)
from specgen import ALL_THEOREMS, NIG_THEOREMS, VG_THEOREMS, random_spec

GRID = json.loads((pathlib.Path(__file__).parent / "oracles" / "specfun_grid.json").read_text())
T = TheoremId


def report(record_property, number, title, ok, detail):
    line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    record_property("acceptance", line)
    print(line)
    return ok


# b and slope written out per case, independently of the engine's bookkeeping

def hand_terms(theorem, spec):
    a1, a2, a3 = spec.assets
    rho = spec.correlations
    k21, k31 = spec.subordinators.kappa1
    u2 = a2.beta + a2.sigma ** 2 / 2
    u3 = a3.beta + a3.sigma ** 2 / 2
    w = u2 + u3 + rho.rho23 * a2.sigma * a3.sigma
    if theorem in (T.T1, T.T5):
        return k21 * u2 + k31 * u3, a1.beta
    if theorem in (T.T2, T.T6):
        return k21 * w, a1.beta
    if theorem in (T.T3, T.T7):
        return w, a1.beta + rho.rho12 * a1.sigma * a2.sigma + rho.rho13 * a1.sigma * a3.sigma
    if theorem in (T.T4, T.T8):
        return u3 + k21 * u2, a1.beta + rho.rho13 * a1.sigma * a3.sigma
    return u2 + k31 * u3, a1.beta + rho.rho12 * a1.sigma * a2.sigma


def with_beta1(spec, beta1):
    a1 = spec.assets[0]
    return spec.replace(assets=(AssetParams(a1.mu, beta1, a1.sigma),) + spec.assets[1:])


def test_vg_quadrature(record_property):
    rng = np.random.default_rng(101)
    start, worst, bad = time.perf_counter(), 0.0, 0
    for i in range(200):
        theorem = VG_THEOREMS[i % len(VG_THEOREMS)]
        spec = random_spec(theorem, rng)
        b, slope = hand_terms(theorem, spec)
        a1, t, s1 = spec.subordinators.shape_indicator, spec.maturity, spec.assets[0].sigma
        c = a1 - b
        gap = spec.assets[0].mu * t - math.log(spec.strike)
        x = float(rng.uniform(0.0, 0.3))
        scale = math.sqrt(2 * math.pi) * c ** (a1 * t)
        for value, p in ((lambda_kernel(theorem, spec), 0.0),
                         (xi_kernel(theorem, spec, x), (gap - x) / s1)):
            ref = scale * integral_i_fast(a1 * t - 1, c, slope / s1, p)
            err = abs(value - ref)
            worst = max(worst, err / max(abs(ref), 1e-300))
            bad += err > max(1e-7 * abs(ref), 1e-10)
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    assert report(record_property, 1, "VG closed form vs quadrature", ok,
                  f"400 kernels, {bad} outside tolerance, worst rel {worst:.1e}, {elapsed:.0f} s")


def test_nig_quadrature(record_property):
    rng = np.random.default_rng(102)
    worst, bad = 0.0, 0
    for i in range(200):
        theorem = NIG_THEOREMS[i % len(NIG_THEOREMS)]
        spec = random_spec(theorem, rng)
        b, slope = hand_terms(theorem, spec)
        phi, t, s1 = spec.subordinators.shape_indicator, spec.maturity, spec.assets[0].sigma
        x = float(rng.uniform(0.0, 0.3))
        gap = spec.assets[0].mu * t - math.log(spec.strike) - x
        p = gap * math.sqrt(2) / (s1 * phi * t)
        # Xi on the drawn spec, Lambda with beta_1 moved so that the slope vanishes
        flat = with_beta1(spec, spec.assets[0].beta - slope)
        cases = ((xi_kernel_nig(kernel_params_nig(theorem, spec), x),
                  slope * phi * t / (s1 * math.sqrt(2))),
                 (lambda_kernel_nig(kernel_params_nig(theorem, flat), x), 0.0))
        for value, h in cases:
            ref = 2 * integral_j_fast(h, p)
            err = abs(value - ref) / abs(ref)
            worst = max(worst, err)
            bad += err > 1e-7
    assert report(record_property, 2, "NIG closed form vs quadrature", bad == 0,
                  f"400 kernels (200 Xi, 200 Lambda), {bad} outside 1e-7, worst rel {worst:.1e}")


def test_bracket_containment(record_property):
    rng = np.random.default_rng(103)
    start, misses = time.perf_counter(), []
    for i in range(50):
        theorem = ALL_THEOREMS[i % len(ALL_THEOREMS)]
        spec = random_spec(theorem, rng, max_intensity_t=3.0)
        bounds = auto_orders(spec, theorem, 1e-6)
        est = estimate_price(spec, 1_000_000, seed=1000 + i, estimator="conditional")
        lo, hi = est.ci99_7
        if hi < bounds.lower or lo > bounds.upper:
            misses.append((i, theorem.value))
    elapsed = time.perf_counter() - start
    ok = not misses and elapsed < 900
    assert report(record_property, 3, "bracket contains MC CI", ok,
                  f"50 specs, violations {misses or 'none'}, {elapsed:.0f} s")


def test_conditional_dc_oracle(record_property):
    rng = np.random.default_rng(104)
    cells = hits = 0
    for i in range(10):
        theorem = ALL_THEOREMS[i % len(ALL_THEOREMS)]
        spec = random_spec(theorem, rng, max_intensity_t=2.0)
        dc = dc_conditional if spec.family.value == "VG" else dc_conditional_nig
        for counts in itertools.product(range(3), repeat=3):
            est = estimate_price(spec, 1_000_000, seed=10 * i + 7, condition_counts=counts,
                                 estimator="conditional")
            cells += 1
            hits += abs(est.mean - dc(theorem, spec, *counts)) <= 3 * est.std_error
    ok = hits >= 0.95 * cells
    assert report(record_property, 4, "count-conditioned MC vs DC", ok,
                  f"{hits}/{cells} cells within 3 SE")


def test_monotonicity(record_property):
    rng = np.random.default_rng(105)
    slack, violations, checks = 1e-12, 0, 0
    for theorem in ALL_THEOREMS:
        for _ in range(2):
            spec = random_spec(theorem, rng)
            pricer = make_pricer(theorem, spec)
            for n in itertools.product(range(5), repeat=3):
                here = pricer.dc(*n)
                for j in range(3):
                    up = list(n)
                    up[j] += 1
                    checks += 1
                    violations += pricer.dc(*up) > here + slack
            base = math.log(spec.strike)
            prices = [make_pricer(theorem, spec.replace(strike=math.exp(base + d))).dc(1, 0, 1)
                      for d in np.linspace(-0.5, 0.5, 10)]
            checks += 9
            violations += sum(b > a + slack for a, b in zip(prices, prices[1:]))
    assert report(record_property, 5, "monotone in counts and strike", violations == 0,
                  f"{checks} comparisons, {violations} violations")


def test_special_functions(record_property):
    failures = {}
    rel = lambda a, b: abs(a - b) / abs(b)
    for key in ("gauss_2f1", "gauss_2f1_kernel"):
        failures[key] = sum(rel(gauss_2f1(a, b, c, z).value, float(mp.mpf(r))) > 1e-10
                            for a, b, c, z, r in GRID[key])
    bad = 0
    for nu, x, r in GRID["bessel_k"]:
        r = float(mp.mpf(r))
        if r > 1e300:
            try:
                bessel_k(nu, x)
                bad += 1
            except OverflowError:
                pass
        else:
            bad += rel(bessel_k(nu, x), r) > 1e-10
    failures["bessel_k"] = bad
    for key in ("appell_integral", "appell_general"):
        failures[key] = sum(abs(appell_degenerate(*args).value - float(mp.mpf(r)))
                            > 1e-11 * max(1.0, abs(float(mp.mpf(r))))
                            for *args, r in GRID[key])
    bad = refused = 0
    for *args, r in GRID["appell_series"]:
        r = float(mp.mpf(r))
        try:
            bad += abs(appell_degenerate(*args).value - r) > 1e-11 * max(1.0, abs(r))
        except ConvergenceError:
            refused += 1
    failures["appell_series"] = bad
    ok = not any(failures.values())
    points = sum(len(GRID[k]) for k in failures)
    assert report(record_property, 6, "special functions on grids", ok,
                  f"{points} points, failures {failures}, series route refused {refused}")


def test_sampler_marginals(record_property):
    pvalues, zmax = [], 0.0
    for i, (a, t) in enumerate(GAMMA_CASES):
        pvalues.append(ks_pvalue(gamma_draws(a, t, 200 + i), gamma_density(a, t)))
        z = mgf_z_scores(gamma_draws(a, t, 300 + i), gamma_exponents(a), gamma_mgf(a, t))
        zmax = max(zmax, max(abs(v) for v in z))
    for i, (phi, t) in enumerate(IG_CASES):
        pvalues.append(ks_pvalue(ig_draws(phi, t, 400 + i), ig_density(phi, t)))
        z = mgf_z_scores(ig_draws(phi, t, 500 + i), ig_exponents(phi), ig_mgf_t(phi, t))
        zmax = max(zmax, max(abs(v) for v in z))
    ok = min(pvalues) > 0.01 and zmax <= 3
    assert report(record_property, 7, "sampler marginals", ok,
                  f"min KS p {min(pvalues):.3f}, max MGF |z| {zmax:.2f}")


FX_DIGITAL_CASES = [(third, lk) for third in (True, False) for lk in (-0.4, -0.1, 0.05, 0.3, None)]


def test_published_examples(record_property):
    worst = 0.0
    for third, lk in FX_DIGITAL_CASES:
        # lk None puts the strike on the atom mu_1 T = ln K
        lk = 0.02 * 1.3 if lk is None else lk
        spec = fx_digital_spec(third, 4.0, (0.02, 0.01), (0.1, -0.05), (0.2, 0.25), 0.3, 1.3, lk)
        got = dc_conditional(T.T3, spec, 0, 0, 0)
        worst = max(worst, abs(got / fx_digital_value(spec, third) - 1))
    for beta1, lk in ((0.05, 0.0), (0.05, 0.1), (-0.01, -0.2), (0.2, 0.3)):
        spec = nig_self_quanto_spec(beta1, 0.3, 0.02, 1.1, lk)
        got = dc_conditional_nig(T.T7, spec, 0, 0, 0)
        worst = max(worst, abs(got / nig_self_quanto_value(spec) - 1))
    assert report(record_property, 8, "published examples", worst <= 1e-12,
                  f"14 cases, worst rel {worst:.1e}")


def test_put_call_parity(record_property):
    rng = np.random.default_rng(109)
    worst, count = 0.0, 0
    specs = [(th, random_spec(th, rng, max_intensity_t=1.5)) for th in ALL_THEOREMS for _ in range(3)]
    specs += [(T.T3, fx_digital_spec(True, 4.0, (0.02, 0.01), (0.1, -0.05), (0.2, 0.25), 0.3, 1.3, 0.1)),
              (T.T7, nig_self_quanto_spec(0.05, 0.3, 0.02, 1.1, 0.1))]
    for theorem, spec in specs:
        pricer = make_pricer(theorem, spec)
        orders = (40, 40, 40)
        call = bracket_price(spec, theorem, orders, pricer=pricer).lower
        total = math.exp(spec.rate_foreign * spec.maturity) * (call + truncated_put(pricer, orders))
        worst = max(worst, abs(total / expected_s3s2(spec) - 1))
        count += 1
    assert report(record_property, 9, "put-call parity", worst <= 1e-9,
                  f"{count} specs, worst rel {worst:.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
