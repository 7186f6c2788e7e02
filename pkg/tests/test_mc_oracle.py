import math

import numpy as np
import pytest
from scipy import stats

from levy_pricer.jumplaw import ConstantJump
from levy_pricer.mc_oracle import (McEstimate, estimate_price, sample_gamma_subordinator,
                                   sample_ig_subordinator, sample_terminal,
                                   sample_terminal_triple)
from levy_pricer.bounds import make_pricer
from levy_pricer.model import (AssetParams, CorrelationBlock, JumpSpec, TheoremId, expected_s3s2)
from sampler_checks import (GAMMA_CASES, IG_CASES, gamma_density, gamma_draws, gamma_exponents,
                            gamma_mgf, ig_density, ig_draws, ig_exponents, ig_mgf_t, ks_pvalue,
                            mgf_z_scores)
from specgen import ALL_THEOREMS, VG_THEOREMS, random_spec

NO_JUMPS = tuple(JumpSpec(0.0, ConstantJump(0.0)) for _ in range(3))


class TestGammaSampler:
    def test_mean(self):
        x = sample_gamma_subordinator(2.0, 1.0, np.random.default_rng(0), 1_000_000)
        assert abs(x.mean() - 1.0) <= 4 / math.sqrt(2e6)
        assert x.var() == pytest.approx(0.5, rel=0.01)

    def test_mgf_at_half_rate(self):
        # at u = a/2 the estimator variance diverges only logarithmically
        x = sample_gamma_subordinator(2.0, 1.0, np.random.default_rng(1), 1_000_000)
        v = np.exp(x)
        assert abs(v.mean() - 4.0) <= 3 * v.std() / math.sqrt(v.size)

    @pytest.mark.parametrize("a,t", GAMMA_CASES)
    def test_ks(self, a, t):
        assert ks_pvalue(gamma_draws(a, t, 2), gamma_density(a, t)) > 0.01

    @pytest.mark.parametrize("a,t", GAMMA_CASES)
    def test_mgf_points(self, a, t):
        z = mgf_z_scores(gamma_draws(a, t, 3), gamma_exponents(a), gamma_mgf(a, t))
        assert max(abs(v) for v in z) <= 3

    def test_tilt(self):
        x = sample_gamma_subordinator(3.0, 1.0, np.random.default_rng(4), 200_000, tilt=1.0)
        assert abs(x.mean() - 1.5) <= 4 * x.std() / math.sqrt(x.size)


class TestIgSampler:
    def test_mean(self):
        x = sample_ig_subordinator(1.5, 2.0, np.random.default_rng(5), 1_000_000)
        assert abs(x.mean() - 2.0) <= 3 * x.std() / math.sqrt(x.size)

    def test_mgf_example(self):
        # E exp(2 A kappa) is infinite for A = 0.4 phi^2 > phi^2 / 4, so the plain mean
        # has no valid standard error.  Sampling from the law tilted by 0.35 phi^2 and
        # reweighting leaves exp(0.05 phi^2 kappa), which has finite variance.
        phi, t = 1.5, 2.0
        a, tilt = 0.4 * phi * phi, 0.35 * phi * phi
        x = sample_ig_subordinator(phi, t, np.random.default_rng(6), 1_000_000, tilt=tilt,
                                   accept_rng=np.random.default_rng(60))
        v = ig_mgf_t(phi, t)(tilt) * np.exp((a - tilt) * x)
        assert abs(v.mean() - ig_mgf_t(phi, t)(a)) <= 3 * v.std() / math.sqrt(v.size)

    @pytest.mark.parametrize("phi,t", IG_CASES)
    def test_ks(self, phi, t):
        assert ks_pvalue(ig_draws(phi, t, 7), ig_density(phi, t)) > 0.01

    @pytest.mark.parametrize("phi,t", IG_CASES)
    def test_mgf_points(self, phi, t):
        z = mgf_z_scores(ig_draws(phi, t, 8), ig_exponents(phi), ig_mgf_t(phi, t))
        assert max(abs(v) for v in z) <= 3

    def test_levy_law(self):
        phi, t = 0.8, 1.1
        x = sample_ig_subordinator(phi, t, np.random.default_rng(9), 100_000, tilt=phi * phi / 2)
        level = phi * t
        assert stats.kstest(x, lambda v: 2 * stats.norm.sf(level / np.sqrt(v))).pvalue > 0.01


class TestTerminal:
    def test_deterministic_model(self):
        spec = random_spec(TheoremId.T1, np.random.default_rng(10), zero_jumps=True)
        spec = spec.replace(assets=tuple(AssetParams(a.mu, 0.0, 0.0) for a in spec.assets))
        d = sample_terminal(spec, 1, 1000)
        for s, a in zip((d.s1, d.s2, d.s3), spec.assets):
            assert np.allclose(s, math.exp(a.mu * spec.maturity), rtol=1e-15, atol=0)
            assert np.all(s == s[0])
        assert np.all(d.n1 == 0)

    def test_independent_normals(self):
        spec = random_spec(TheoremId.T1, np.random.default_rng(11), zero_jumps=True)
        spec = spec.replace(assets=tuple(AssetParams(0.0, 0.0, a.sigma) for a in spec.assets))
        d = sample_terminal(spec, 2, 200_000)
        r = np.corrcoef(np.log(d.s2), np.log(d.s3))[0, 1]
        assert abs(r) <= 3 / math.sqrt(200_000)

    def test_correlated_normals(self):
        spec = random_spec(TheoremId.T3, np.random.default_rng(12), zero_jumps=True)
        spec = spec.replace(assets=tuple(AssetParams(0.0, 0.0, a.sigma) for a in spec.assets))
        d = sample_terminal(spec, 3, 200_000)
        # all clocks equal: corr(sqrt(theta) Z2, sqrt(theta) Z3) = rho23
        r = np.corrcoef(np.log(d.s2), np.log(d.s3))[0, 1]
        assert r == pytest.approx(spec.correlations.rho23, abs=0.01)

    def test_jump_counts(self):
        spec = random_spec(TheoremId.T2, np.random.default_rng(13))
        d = sample_terminal(spec, 4, 200_000)
        for n, j in zip((d.n1, d.n2, d.n3), spec.jumps):
            m = j.intensity * spec.maturity
            assert abs(n.mean() - m) <= 4 * math.sqrt(max(m, 1e-12) / n.size)
        forced = sample_terminal(spec, 4, 100, condition_counts=(2, 0, 1))
        assert np.all(forced.n1 == 2) and np.all(forced.n2 == 0) and np.all(forced.n3 == 1)

    def test_triple(self):
        spec = random_spec(TheoremId.T5, np.random.default_rng(14))
        a = sample_terminal_triple(spec, np.random.default_rng(1))
        b = sample_terminal_triple(spec, np.random.default_rng(1))
        assert a == b and len(a) == 6 and all(v > 0 for v in a[:3])

    @pytest.mark.parametrize("theorem", [TheoremId.T2, TheoremId.T4S])
    def test_expected_product(self, theorem):
        from levy_pricer.mc_oracle import estimate_s3s2
        spec = random_spec(theorem, np.random.default_rng(15))
        mean, se = estimate_s3s2(spec, 400_000, seed=6)
        assert abs(mean - expected_s3s2(spec)) <= 3 * se

    def test_additivity(self):
        # kappa_2 gamma(a) + kappa_21 gamma^1 + kappa~_2 gamma~^2 has the law of one gamma clock with rate a_2
        spec = random_spec(TheoremId.T1, np.random.default_rng(16))
        sub = spec.subordinators
        t = spec.maturity
        a2 = sub.shape_indicator / sub.kappa1[0]
        d = sample_terminal(spec, 7, 100_000)
        rng = [np.random.default_rng(s) for s in (20, 21, 22)]
        theta = (sub.kappa[0] * sample_gamma_subordinator(sub.shape_shared, t, rng[0], 100_000)
                 + sub.kappa1[0] * sample_gamma_subordinator(sub.shape_indicator, t, rng[1], 100_000)
                 + sub.kappa_tilde[0] * sample_gamma_subordinator(sub.shape_idios[0], t, rng[2], 100_000))
        single = sample_gamma_subordinator(a2, t, np.random.default_rng(23), 100_000)
        assert stats.ks_2samp(theta, single).pvalue > 0.01
        assert d.s1.size == 100_000


class TestEstimate:
    def test_determinism(self):
        spec = random_spec(TheoremId.T4, np.random.default_rng(17))
        a = estimate_price(spec, 100_000, seed=9)
        b = estimate_price(spec, 100_000, seed=9)
        assert a.mean == b.mean and a.std_error == b.std_error

    def test_thread_independence(self, monkeypatch):
        spec = random_spec(TheoremId.T6, np.random.default_rng(18))
        one = estimate_price(spec, 200_000, seed=4, estimator="conditional", threads=1)
        many = estimate_price(spec, 200_000, seed=4, estimator="conditional", threads=4)
        monkeypatch.setenv("LEVY_PRICER_THREADS", "3")
        env = estimate_price(spec, 200_000, seed=4, estimator="conditional")
        assert one.mean == many.mean == env.mean

    def test_ci(self):
        spec = random_spec(TheoremId.T1, np.random.default_rng(19))
        est = estimate_price(spec, 20_000, seed=1)
        assert isinstance(est, McEstimate)
        assert est.ci99_7 == (est.mean - 3 * est.std_error, est.mean + 3 * est.std_error)
        assert est.std_error >= 0 and est.n_samples == 20_000

    def test_minimum_samples(self):
        spec = random_spec(TheoremId.T1, np.random.default_rng(19))
        with pytest.raises(ValueError):
            estimate_price(spec, 9_999, seed=1)
        with pytest.raises(ValueError):
            estimate_price(spec, 20_000, seed=1, estimator="conditional", antithetic=True)

    @pytest.mark.parametrize("theorem", [TheoremId.T1, TheoremId.T3, TheoremId.T4S, TheoremId.T7])
    def test_antithetic_mean(self, theorem):
        spec = random_spec(theorem, np.random.default_rng(20))
        plain = estimate_price(spec, 400_000, seed=11)
        anti = estimate_price(spec, 200_000, seed=12, antithetic=True)
        assert abs(anti.mean - plain.mean) <= 3 * math.hypot(anti.std_error, plain.std_error)

    @pytest.mark.parametrize("theorem", [TheoremId.T1, TheoremId.T4])
    def test_vanishing_strike(self, theorem):
        spec = random_spec(theorem, np.random.default_rng(21)).replace(strike=1e-12)
        target = math.exp(-spec.rate_foreign * spec.maturity) * expected_s3s2(spec)
        for estimator in ("plain", "conditional"):
            est = estimate_price(spec, 200_000, seed=13, estimator=estimator)
            assert abs(est.mean - target) <= 3 * est.std_error

    @pytest.mark.parametrize("theorem", [TheoremId.T2, TheoremId.T8])
    def test_huge_strike(self, theorem):
        # 40 spreads of log S^1 above its median: Brownian part and clock part
        spec = random_spec(theorem, np.random.default_rng(22))
        a = spec.assets[0]
        t = spec.maturity
        shape = spec.subordinators.shape_indicator
        clock_sd = math.sqrt(t / shape) if theorem in VG_THEOREMS else math.sqrt(t) / shape
        spread = a.sigma * math.sqrt(t) + abs(a.beta) * (t + clock_sd)
        strike = math.exp(a.mu * t + 40 * spread)
        est = estimate_price(spec.replace(strike=strike), 100_000, seed=14)
        assert est.mean == 0.0

    def test_conditional_prices(self):
        rng = np.random.default_rng(23)
        for i in range(10):
            theorem = ALL_THEOREMS[i % len(ALL_THEOREMS)]
            spec = random_spec(theorem, rng)
            counts = tuple(int(v) for v in rng.integers(0, 3, 3))
            est = estimate_price(spec, 200_000, seed=i, condition_counts=counts, estimator="conditional")
            exact = make_pricer(theorem, spec).dc(*counts)
            assert abs(est.mean - exact) <= 3 * est.std_error, (theorem, counts)

    def test_estimators_agree(self):
        spec = random_spec(TheoremId.T2, np.random.default_rng(24))
        plain = estimate_price(spec, 400_000, seed=15)
        cond = estimate_price(spec, 400_000, seed=16, estimator="conditional")
        assert abs(plain.mean - cond.mean) <= 3 * math.hypot(plain.std_error, cond.std_error)
        assert cond.std_error < plain.std_error

    def test_mc_only_dependence(self):
        spec = random_spec(TheoremId.T1, np.random.default_rng(25))
        spec = spec.replace(correlations=CorrelationBlock(0.0, 0.0, 0.5),
                            strike=math.exp(spec.assets[0].mu * spec.maturity - 0.2))
        for estimator in ("plain", "conditional"):
            est = estimate_price(spec, 50_000, seed=17, estimator=estimator)
            assert math.isfinite(est.mean) and est.mean > 0

    def test_json(self):
        spec = random_spec(TheoremId.T1, np.random.default_rng(19))
        doc = estimate_price(spec, 20_000, seed=1, condition_counts=(1, 0, 0)).to_json()
        assert doc["condition_counts"] == [1, 0, 0] and doc["seed"] == 1
