import math

import numpy as np
import pytest
from scipy.stats import norm

from rgvix import _kernels_py
from rgvix.data import MarketSeries
from rgvix.errors import NumericError
from rgvix.filters import (
    default_h_init, filter_eg, filter_g, filter_hn, filter_rg, loglik_p,
)
from rgvix.params import EGParams, GParams, HNParams, RGParams
from rgvix.simulation import SimConfig, simulate_paths

from conftest import EG_SP500, G_SP500, HN_SP500, RG_SP500, simulate_rg_dataset

try:
    from rgvix import _kernels
except ImportError:
    _kernels = None


def flat_series(T=50, ret=0.0, rv=1e-4, seed=None):
    if seed is None:
        r = np.full(T, ret)
        x = np.full(T, rv)
    else:
        rng = np.random.default_rng(seed)
        r = rng.normal(0, 0.01, T)
        x = rng.uniform(5e-5, 5e-4, T)
    return MarketSeries(log_return=r, realized_measure=x)


def test_rg_fixed_point_no_shock_terms():
    omega, beta = -9.0 * 0.05, 0.95
    p = RGParams(lam=0.0, omega=omega, beta=beta, tau1=0.0, tau2=0.0, gamma=0.0,
                 kappa=0.0, phi=1.0, delta1=0.0, delta2=0.0, sigma=0.5, xi=0.0)
    h_star = math.exp(omega / (1.0 - beta))
    out = filter_rg(p, flat_series(seed=3), h_init=h_star)
    np.testing.assert_allclose(out.h, h_star, rtol=1e-13)
    np.testing.assert_allclose(out.h_next, h_star, rtol=1e-13)


def test_rg_loglik_matches_density_oracle_at_generating_states():
    # filter data simulated from the model itself; per-day return densities
    # evaluated at the generating variances must match exactly
    p = RG_SP500
    cfg = SimConfig("rg", p, "P", n_paths=1, n_days=400, burn_in=200, seed=9)
    paths = simulate_paths(cfg)
    r, x, h = paths.r[0], paths.x[0], paths.h[0]
    series = MarketSeries(log_return=r, realized_measure=x)
    out = filter_rg(p, series, h_init=h[0])
    mu = p.lam * np.sqrt(h) - 0.5 * h
    oracle = norm.logpdf(r, loc=mu, scale=np.sqrt(h))
    np.testing.assert_allclose(out.ll_r, oracle, atol=1e-10)


def test_rg_persistence_is_beta():
    assert RG_SP500.persistence == pytest.approx(0.991)


def test_rg_residuals_reproduce_observations():
    series = flat_series(T=200, seed=11)
    out = filter_rg(RG_SP500, series)
    p = RG_SP500
    h, z, u = out.h, out.z, out.u
    r_back = p.lam * np.sqrt(h) - 0.5 * h + np.sqrt(h) * z
    np.testing.assert_allclose(r_back, series.log_return, atol=1e-12)
    logx_back = (p.kappa + p.phi * np.log(h) + p.delta1 * z
                 + p.delta2 * (z * z - 1.0) + p.sigma * u)
    np.testing.assert_allclose(logx_back, np.log(series.realized_measure), atol=1e-12)


def test_rg_two_garch_forms_agree():
    # reconstructing log h via the structural equation from (z, u) must
    # reproduce the observation-driven recursion exactly
    series = flat_series(T=300, seed=21)
    p = RG_SP500
    out = filter_rg(p, series)
    logh = np.log(out.h)
    lev = p.tau1 * out.z + p.tau2 * (out.z ** 2 - 1.0)
    logh_next = p.omega + p.beta * logh + lev + p.gamma * p.sigma * out.u
    np.testing.assert_allclose(logh_next, np.log(out.h_next), atol=1e-12)


def test_rg_simulation_round_trip_long():
    p = RG_SP500
    cfg = SimConfig("rg", p, "P", n_paths=1, n_days=10_001, burn_in=100, seed=5)
    paths = simulate_paths(cfg)
    T = 10_000
    series = MarketSeries(log_return=paths.r[0, :T], realized_measure=paths.x[0, :T])
    out = filter_rg(p, series, h_init=paths.h[0, 0])
    np.testing.assert_allclose(out.h, paths.h[0, :T], rtol=1e-10)
    np.testing.assert_allclose(out.h_next[-1], paths.h[0, T], rtol=1e-10)


def test_rg_gamma_zero_equals_quadratic_eg():
    series = flat_series(T=250, seed=31)
    p = RGParams(lam=0.05, omega=-0.3, beta=0.96, tau1=-0.06, tau2=0.04,
                 gamma=0.0, kappa=0.2, phi=1.1, delta1=-0.05, delta2=0.1,
                 sigma=0.4, xi=-0.5)
    eg = EGParams(lam=0.05, omega=-0.3, beta=0.96, tau1=-0.06, tau2=0.04,
                  leverage="quad")
    h0 = 1e-4
    out_rg = filter_rg(p, series, h_init=h0)
    out_eg = filter_eg(eg, series, h_init=h0)
    np.testing.assert_allclose(out_rg.h, out_eg.h, rtol=1e-13)
    np.testing.assert_allclose(out_rg.ll_r, out_eg.ll_r, rtol=1e-13)


def test_ll_r_invariant_to_risk_free_shift():
    rng = np.random.default_rng(17)
    r = rng.normal(0, 0.01, 150)
    x = rng.uniform(5e-5, 5e-4, 150)
    c = 0.0003
    s0 = MarketSeries(log_return=r, realized_measure=x, risk_free_rate=0.0)
    s1 = MarketSeries(log_return=r + c, realized_measure=x, risk_free_rate=c)
    for fam, params in [("rg", RG_SP500), ("eg", EG_SP500), ("g", G_SP500),
                        ("hn", HN_SP500)]:
        ll0 = loglik_p(fam, params, s0, h_init=1e-4)
        ll1 = loglik_p(fam, params, s1, h_init=1e-4)
        assert ll0[0] == pytest.approx(ll1[0], abs=1e-9)


def test_eg_fixed_point():
    p = EGParams(lam=0.1, omega=-0.4, beta=0.95, tau1=0.0, tau2=0.0)
    h_star = math.exp(p.omega / (1.0 - p.beta))
    out = filter_eg(p, flat_series(seed=4), h_init=h_star)
    np.testing.assert_allclose(out.h, h_star, rtol=1e-13)


def test_eg_persistence_report():
    assert EG_SP500.persistence == pytest.approx(0.990)


def test_eg_round_trip_recovers_shocks():
    p = EG_SP500
    cfg = SimConfig("eg", p, "P", n_paths=1, n_days=2000, burn_in=100, seed=8)
    paths = simulate_paths(cfg)
    series = MarketSeries(log_return=paths.r[0])
    out = filter_eg(p, series, h_init=paths.h[0, 0])
    z_true = (paths.r[0] - p.lam * np.sqrt(paths.h[0]) + 0.5 * paths.h[0]) / np.sqrt(paths.h[0])
    np.testing.assert_allclose(out.z, z_true, atol=1e-12)


def test_g_alpha_zero_converges_geometrically():
    p = GParams(lam=0.0, omega=2e-5, beta=0.9, alpha=0.0)
    target = p.omega / (1.0 - p.beta)
    out = filter_g(p, flat_series(T=300), h_init=1e-3)
    errs = np.abs(out.h_next - target)
    keep = errs[:-1] > 1e-8  # below that the float quantization dominates
    ratios = errs[1:][keep] / errs[:-1][keep]
    assert keep.sum() > 80
    np.testing.assert_allclose(ratios, p.beta, rtol=1e-9)
    assert errs[-1] < 1e-14


def test_hn_persistence_value():
    # beta + alpha*delta^2 at the reference estimates
    assert HN_SP500.persistence == pytest.approx(0.990, abs=1e-3)


def test_g_persistence_value():
    assert G_SP500.persistence == pytest.approx(0.993, abs=1.1e-3)


def test_hn_uses_variance_drift():
    # one observation: z = (r - lam*h + h/2)/sqrt(h), not lam*sqrt(h)
    p = HNParams(lam=2.0, omega=1e-6, beta=0.9, alpha=1e-6, delta=50.0)
    h0 = 1e-4
    r0 = 0.004
    s = MarketSeries(log_return=[r0], realized_measure=[1e-4])
    out = filter_hn(p, s, h_init=h0)
    z_expected = (r0 - p.lam * h0 + 0.5 * h0) / math.sqrt(h0)
    assert out.z[0] == pytest.approx(z_expected, abs=1e-15)
    h1_expected = p.omega + p.beta * h0 + p.alpha * (z_expected - p.delta * math.sqrt(h0)) ** 2
    assert out.h_next[0] == pytest.approx(h1_expected, rel=1e-15)


def test_loglik_single_obs_standard_normal():
    p = GParams(lam=0.0, omega=0.5, beta=0.0, alpha=0.0)
    s = MarketSeries(log_return=[-0.5], realized_measure=[1e-4])
    # h = 1 and r = mu = -h/2
    ll_r, ll_x = loglik_p("g", p, s, h_init=1.0)
    assert ll_x is None
    assert ll_r == pytest.approx(-0.5 * math.log(2.0 * math.pi), abs=1e-14)


def test_ll_x_matches_direct_gaussian_sum():
    series = flat_series(T=100, seed=41)
    p = RG_SP500
    out = filter_rg(p, series)
    resid = (np.log(series.realized_measure) - p.kappa - p.phi * np.log(out.h)
             - p.delta1 * out.z - p.delta2 * (out.z ** 2 - 1.0))
    oracle = norm.logpdf(resid, scale=p.sigma).sum()
    assert out.ll_x_total == pytest.approx(oracle, abs=1e-9)


def test_h_init_contract():
    with pytest.raises(ValueError, match="h_init"):
        filter_rg(RG_SP500, flat_series(), h_init=0.0)
    with pytest.raises(ValueError, match="h_init"):
        filter_rg(RG_SP500, flat_series(), h_init=-1e-4)


def test_divergence_raises_numeric_error_with_location():
    p = RGParams(lam=0.0, omega=0.0, beta=0.999, tau1=0.0, tau2=0.0, gamma=3.0,
                 kappa=0.0, phi=0.0, delta1=0.0, delta2=0.0, sigma=1.0, xi=0.0)
    # gamma*log x pushes log h below the admissible floor within a few days
    s = MarketSeries(log_return=np.zeros(40), realized_measure=np.full(40, 1e-9))
    with pytest.raises(NumericError, match="index"):
        filter_rg(p, s, h_init=1e-4)


def test_default_h_init_rules(rg_dataset_small):
    series, _ = rg_dataset_small
    want = float(np.exp(np.mean(np.log(series.realized_measure[:22]))))
    assert default_h_init("rg", series) == pytest.approx(want, rel=1e-14)
    assert default_h_init("g", series) == pytest.approx(float(np.var(series.log_return)), rel=1e-14)


def test_filter_output_csv(tmp_path, rg_dataset_small):
    series, _ = rg_dataset_small
    out = filter_rg(RG_SP500, series)
    path = tmp_path / "filtered.csv"
    out.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "date,h,z,u,ll_r,ll_x"
    assert len(lines) == len(series) + 1


@pytest.mark.skipif(_kernels is None, reason="compiled kernels unavailable")
def test_backends_agree_exactly():
    rng = np.random.default_rng(77)
    T = 500
    r = rng.normal(0, 0.01, T)
    logx = np.log(rng.uniform(5e-5, 5e-4, T))
    for kern in ("rg", "eg", "g", "hn"):
        if kern == "rg":
            args = (r, logx, 0.05, -0.3, 0.96, -0.06, 0.04, 0.2, 0.1, 1.05,
                    -0.05, 0.1, True, 0.0, math.log(1e-4))
            outs_c = [np.empty(T + 1), np.empty(T), np.empty(T)]
            outs_p = [np.empty(T + 1), np.empty(T), np.empty(T)]
        elif kern == "eg":
            args = (r, 0.05, -0.3, 0.96, -0.06, 0.08, False, 0.0, math.log(1e-4))
            outs_c = [np.empty(T + 1), np.empty(T)]
            outs_p = [np.empty(T + 1), np.empty(T)]
        elif kern == "g":
            args = (r, 0.05, 2e-6, 0.9, 0.05, 0.0, 1e-4)
            outs_c = [np.empty(T + 1), np.empty(T)]
            outs_p = [np.empty(T + 1), np.empty(T)]
        else:
            args = (r, 2.0, 1e-6, 0.85, 2e-6, 150.0, 0.0, 1e-4)
            outs_c = [np.empty(T + 1), np.empty(T)]
            outs_p = [np.empty(T + 1), np.empty(T)]
        st_c = getattr(_kernels, f"{kern}_filter")(*args, *outs_c)
        st_p = getattr(_kernels_py, f"{kern}_filter")(*args, *outs_p)
        assert st_c == st_p
        for a, b in zip(outs_c, outs_p):
            np.testing.assert_array_equal(a, b)


def test_backend_guard_status_matches():
    rng = np.random.default_rng(3)
    T = 60
    r = rng.normal(0, 0.01, T)
    logx = np.full(T, math.log(1e-9))
    args = (r, logx, 0.0, 0.0, 0.999, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, True,
            0.0, math.log(1e-4))
    outs_p = [np.empty(T + 1), np.empty(T), np.empty(T)]
    st_p = _kernels_py.rg_filter(*args, *outs_p)
    assert st_p != -1
    if _kernels is not None:
        outs_c = [np.empty(T + 1), np.empty(T), np.empty(T)]
        assert getattr(_kernels, "rg_filter")(*args, *outs_c) == st_p
