import math

import numpy as np
import pytest
from scipy import integrate

from rgvix.errors import DegenerateInputError, PricingError
from rgvix.params import HNParams, RGParams
from rgvix.riskneutral import (
    SDFState, leverage_corr, map_hn_lrnvr, map_hn_vd, map_rg_to_q,
    mgf_normal_quadratic, moment_report, moments_logh, sdf_value,
    vrp_log_decomposition,
)
from rgvix.simulation import logh_moment_mc

from conftest import HNVD_SP500, HN_SP500, RG_SP500


def random_conventional_rg(rng) -> RGParams:
    """Draw parameters satisfying the usual sign conventions."""
    return RGParams(
        lam=rng.uniform(0.005, 0.08), omega=rng.uniform(-0.6, -0.05),
        beta=rng.uniform(0.85, 0.99), tau1=-rng.uniform(0.02, 0.12),
        tau2=rng.uniform(0.005, 0.08), gamma=rng.uniform(0.03, 0.3),
        kappa=rng.uniform(-0.3, 0.5), phi=rng.uniform(0.8, 1.2),
        delta1=-rng.uniform(0.02, 0.12), delta2=rng.uniform(0.02, 0.2),
        sigma=rng.uniform(0.3, 0.8), xi=-rng.uniform(0.2, 1.5),
    )


# -- measure-change maps -----------------------------------------------------

def test_rg_map_hand_arithmetic():
    q = map_rg_to_q(RG_SP500)
    # omega - tau1*lam + tau2*lam^2 - gamma*sigma*xi, four-term sum by hand
    assert q.omega_q == pytest.approx(-0.0381028, abs=2e-6)
    assert q.tau1_q == pytest.approx(-0.073 - 2 * 0.012 * 0.015, abs=1e-15)
    assert q.kappa_q == pytest.approx(
        0.427 + 0.083 * 0.015 + 0.129 * 0.015 ** 2 + 0.325 ** 0.5 * 1.07, abs=1e-12)
    assert q.delta1_q == pytest.approx(-0.083 - 2 * 0.129 * 0.015, abs=1e-15)


def test_rg_map_identity_at_zero_prices():
    q = map_rg_to_q(RG_SP500, lam=0.0, xi=0.0)
    assert q.omega_q == RG_SP500.omega
    assert q.tau1_q == RG_SP500.tau1
    assert q.kappa_q == RG_SP500.kappa
    assert q.delta1_q == RG_SP500.delta1


def test_rg_map_inverse_substitution_round_trip():
    # the map is not an involution, but re-substituting with the negated
    # risk prices on the Q system recovers the P system exactly
    rng = np.random.default_rng(2)
    for _ in range(25):
        p = random_conventional_rg(rng)
        q = map_rg_to_q(p)
        as_p = RGParams(lam=-p.lam, omega=q.omega_q, beta=q.beta, tau1=q.tau1_q,
                        tau2=q.tau2, gamma=q.gamma, kappa=q.kappa_q, phi=q.phi,
                        delta1=q.delta1_q, delta2=q.delta2, sigma=q.sigma,
                        xi=-p.xi)
        back = map_rg_to_q(as_p)
        assert back.omega_q == pytest.approx(p.omega, abs=1e-12)
        assert back.tau1_q == pytest.approx(p.tau1, abs=1e-12)
        assert back.kappa_q == pytest.approx(p.kappa, abs=1e-12)
        assert back.delta1_q == pytest.approx(p.delta1, abs=1e-12)


def test_hn_vd_reduces_to_lrnvr_at_zero_xi():
    p = HNParams(lam=3.0, omega=-1e-6, beta=0.88, alpha=2.5e-6, delta=180.0,
                 eta=1.0)
    vd = map_hn_vd(p)
    lr = map_hn_lrnvr(p)
    assert vd.delta == pytest.approx(lr.delta, abs=1e-15)  # lam + delta
    assert vd.omega == lr.omega
    assert vd.alpha == lr.alpha
    assert vd.h_scale == 1.0


def test_hn_lrnvr_persistence_hand_arithmetic():
    q = map_hn_lrnvr(HN_SP500)
    assert q.persistence == pytest.approx(0.870 + 3.10e-6 * (197.183 + 4.518) ** 2,
                                          abs=1e-12)
    assert q.persistence == pytest.approx(0.996, abs=2e-4)


def test_hn_vd_variance_ratio_and_implied_xi():
    q = map_hn_vd(HNVD_SP500)
    assert q.h_scale == pytest.approx(1.143)
    # eta is canonical; the implied variance risk aversion follows from
    # eta = 1/(1+2*alpha*xi)
    xi = HNVD_SP500.xi
    assert xi == pytest.approx((1 / 1.143 - 1) / (2 * 2.24e-6), rel=1e-12)
    assert -30000 < xi < -25000


def test_hn_vd_requires_eta():
    with pytest.raises(ValueError, match="eta"):
        map_hn_vd(HN_SP500)


# -- pricing kernel ----------------------------------------------------------

def test_sdf_trivial_at_zero_prices():
    s = SDFState(lam=0.0, xi=0.0)
    z = np.array([-3.0, 0.0, 2.5])
    np.testing.assert_array_equal(sdf_value(z, z, s), np.ones(3))


def test_sdf_unit_mean_monte_carlo():
    s = SDFState(lam=0.015, xi=-1.07)
    rng = np.random.default_rng(123)
    n = 1_000_000
    m = sdf_value(rng.standard_normal(n), rng.standard_normal(n), s)
    se = m.std() / math.sqrt(n)
    assert abs(m.mean() - 1.0) < 3.0 * se


def test_sdf_no_arbitrage_quadrature():
    # E[M * exp(r + lam*sqrt(h)*z - h/2 + sqrt(h)*z)] = exp(r), 2-D
    # Gauss-Hermite over the two shocks
    lam, xi, h, rf = 0.015, -1.07, 0.01, 0.0002
    s = SDFState(lam=lam, xi=xi)
    nodes, weights = np.polynomial.hermite_e.hermegauss(120)
    wz = weights / math.sqrt(2.0 * math.pi)
    sq = math.sqrt(h)
    est = sum(wi * math.exp(rf + lam * sq - 0.5 * h + sq * zi)
              * float(np.sum(wz * sdf_value(zi, nodes, s)))
              for zi, wi in zip(nodes, wz))
    assert est == pytest.approx(math.exp(rf), rel=1e-10)


def test_sdf_integrates_to_one_quadrature():
    s = SDFState(lam=0.32, xi=-0.9)
    nodes, weights = np.polynomial.hermite_e.hermegauss(80)
    w = weights / math.sqrt(2.0 * math.pi)
    est = sum(wi * float(np.sum(w * sdf_value(zi, nodes, s)))
              for zi, wi in zip(nodes, w))
    assert est == pytest.approx(1.0, abs=1e-8)


# -- normal-quadratic moment generating function ------------------------------

def test_mgf_trivial_values():
    assert mgf_normal_quadratic(0.0, 0.0) == 1.0
    assert mgf_normal_quadratic(1.0, 0.0) == pytest.approx(math.exp(0.5), rel=1e-15)


def quad_mgf_oracle(a, b):
    mean = a / (1.0 - 2.0 * b) if b < 0.5 else 0.0
    sd = (1.0 - 2.0 * b) ** -0.5 if b < 0.5 else 1.0
    lo, hi = mean - 60.0 * sd, mean + 60.0 * sd
    val, _ = integrate.quad(
        lambda x: math.exp(a * x + b * x * x - 0.5 * x * x) / math.sqrt(2.0 * math.pi),
        lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def test_mgf_against_quadrature():
    assert mgf_normal_quadratic(0.3, 0.2) == pytest.approx(quad_mgf_oracle(0.3, 0.2),
                                                           rel=1e-10)


def test_mgf_divergence():
    with pytest.raises(PricingError):
        mgf_normal_quadratic(0.1, 0.5)
    with pytest.raises(PricingError):
        mgf_normal_quadratic(0.1, 0.7)


# -- analytic moments ---------------------------------------------------------

def test_moments_equal_under_trivial_sdf():
    p = RGParams(lam=0.0, omega=-0.3, beta=0.95, tau1=-0.07, tau2=0.02,
                 gamma=0.1, kappa=0.0, phi=1.0, delta1=-0.05, delta2=0.1,
                 sigma=0.5, xi=0.0)
    assert moments_logh(p, "P") == moments_logh(p, "Q")


def test_variance_gap_identity():
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = random_conventional_rg(rng)
        _, vp = moments_logh(p, "P")
        _, vq = moments_logh(p, "Q")
        gap = 4.0 * p.lam * (p.lam * p.tau2 ** 2 - p.tau1 * p.tau2) / (1.0 - p.beta ** 2)
        assert vq - vp == pytest.approx(gap, rel=1e-12)


def test_moments_match_simulation_oracle():
    p = RGParams(lam=0.04, omega=-0.5, beta=0.9, tau1=-0.08, tau2=0.03,
                 gamma=0.15, kappa=0.1, phi=1.05, delta1=-0.06, delta2=0.12,
                 sigma=0.5, xi=-0.8)
    for measure in ("P", "Q"):
        mc = logh_moment_mc(p, measure, n_paths=64, n_days=3000, burn_in=400, seed=31)
        mean, var = moments_logh(p, measure)
        rho = leverage_corr(p, measure)
        assert abs(mc["mean"] - mean) < 3.0 * mc["mean_se"]
        assert abs(mc["var"] - var) < 3.0 * mc["var_se"]
        assert abs(mc["corr"] - rho) < 3.0 * mc["corr_se"]


def test_leverage_corr_values():
    assert leverage_corr(RG_SP500, "P") == pytest.approx(-0.832, abs=5e-4)
    rho_p = leverage_corr(RG_SP500, "P")
    rho_q = leverage_corr(RG_SP500, "Q")
    assert rho_q ** 2 > rho_p ** 2


def test_leverage_corr_zero_when_no_leverage():
    p = RGParams(lam=0.0, omega=-0.3, beta=0.9, tau1=0.0, tau2=0.05, gamma=0.1,
                 kappa=0.0, phi=1.0, delta1=0.0, delta2=0.1, sigma=0.5, xi=0.0)
    assert leverage_corr(p, "P") == 0.0


def test_leverage_corr_degenerate():
    p = RGParams(lam=0.0, omega=-0.3, beta=0.9, tau1=0.0, tau2=0.0, gamma=0.0,
                 kappa=0.0, phi=1.0, delta1=0.0, delta2=0.0, sigma=0.5, xi=0.0)
    with pytest.raises(DegenerateInputError):
        leverage_corr(p, "P")


# -- premium decomposition ----------------------------------------------------

def test_decomposition_reference_shares():
    total, eq, vol = vrp_log_decomposition(RG_SP500)
    assert total > 0
    assert eq == pytest.approx(0.022, abs=0.002)
    assert vol == pytest.approx(0.978, abs=0.002)
    assert eq + vol == pytest.approx(1.0, abs=1e-14)


def test_decomposition_trivial_cases():
    p = RGParams(lam=0.02, omega=-0.3, beta=0.9, tau1=-0.07, tau2=0.02,
                 gamma=0.1, kappa=0.0, phi=1.0, delta1=-0.05, delta2=0.1,
                 sigma=0.5, xi=0.0)
    _, eq, vol = vrp_log_decomposition(p)
    assert vol == 0.0 and eq == 1.0
    p2 = RGParams(lam=0.0, omega=-0.3, beta=0.9, tau1=-0.07, tau2=0.02,
                  gamma=0.1, kappa=0.0, phi=1.0, delta1=-0.05, delta2=0.1,
                  sigma=0.5, xi=-0.8)
    total2, eq2, vol2 = vrp_log_decomposition(p2)
    assert eq2 == 0.0 and total2 > 0


def test_decomposition_shares_do_not_depend_on_beta():
    rng = np.random.default_rng(6)
    p = random_conventional_rg(rng)
    _, eq0, vol0 = vrp_log_decomposition(p)
    from dataclasses import replace
    for beta in rng.uniform(-0.99, 0.99, 25):
        _, eq, vol = vrp_log_decomposition(replace(p, beta=float(beta)))
        assert eq == pytest.approx(eq0, abs=1e-12)
        assert vol == pytest.approx(vol0, abs=1e-12)


def test_decomposition_degenerate():
    p = RGParams(lam=0.0, omega=-0.3, beta=0.9, tau1=-0.07, tau2=0.02,
                 gamma=0.1, kappa=0.0, phi=1.0, delta1=-0.05, delta2=0.1,
                 sigma=0.5, xi=0.0)
    with pytest.raises(DegenerateInputError):
        vrp_log_decomposition(p)


def test_sign_convention_orderings_hold():
    rng = np.random.default_rng(8)
    for _ in range(40):
        p = random_conventional_rg(rng)
        mp, vp = moments_logh(p, "P")
        mq, vq = moments_logh(p, "Q")
        assert mq > mp
        assert vq >= vp
        assert leverage_corr(p, "Q") ** 2 >= leverage_corr(p, "P") ** 2
        total, _, _ = vrp_log_decomposition(p)
        assert total > 0


def test_sign_warnings_emitted_not_raised():
    from dataclasses import replace
    bad = replace(RG_SP500, lam=-0.05)
    with pytest.warns(UserWarning, match="lam"):
        issues = bad.check_signs()
    assert issues


def test_moment_report_keys():
    rep = moment_report(RG_SP500)
    assert rep["equity_share"] == pytest.approx(0.022, abs=0.002)
    assert set(rep) >= {"mean_logh_p", "mean_logh_q", "var_logh_p",
                        "var_logh_q", "leverage_corr_p", "leverage_corr_q",
                        "log_vrp_total", "equity_share", "volatility_risk_share"}
