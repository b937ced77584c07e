"""Exponentially affine pricing kernel, measure-change maps, and the
analytic log-variance moments they imply.

The pricing kernel weights states by exp(-lam*z - xi*u), normalized to unit
mean; under the risk-neutral measure the shocks shift to z* = z + lam,
u* = u + xi, which relabels the intercept-type parameters of the
log-variance dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rgvix.errors import DegenerateInputError, PricingError
from rgvix.params import HNParams, RGParams


@dataclass(frozen=True)
class SDFState:
    """Risk prices of the pricing kernel: lam for the return shock, xi for
    the volatility shock."""

    lam: float
    xi: float


def sdf_value(z, u, s: SDFState):
    """Pricing-kernel weight exp(-lam*z - xi*u - (lam^2 + xi^2)/2).

    Unit expectation over independent standard normal (z, u).
    """
    return np.exp(-s.lam * np.asarray(z) - s.xi * np.asarray(u)
                  - 0.5 * (s.lam ** 2 + s.xi ** 2))


def mgf_normal_quadratic(a: float, b: float) -> float:
    """E exp(a*X + b*X^2) for X ~ N(0,1); requires b < 1/2."""
    if not b < 0.5:
        raise PricingError(f"E exp(aX + bX^2) diverges for b = {b} >= 1/2")
    return (1.0 - 2.0 * b) ** -0.5 * math.exp(0.5 * a * a / (1.0 - 2.0 * b))


@dataclass(frozen=True)
class QParamsRG:
    """Risk-neutral parameter set of the realized-variance model.

    omega_q, tau1_q, kappa_q, delta1_q absorb the shock shifts;
    beta, tau2, gamma, sigma, phi, delta2 are measure-invariant.
    """

    omega_q: float
    tau1_q: float
    kappa_q: float
    delta1_q: float
    beta: float
    tau2: float
    gamma: float
    sigma: float
    phi: float
    delta2: float


def map_rg_to_q(p: RGParams, lam: float | None = None, xi: float | None = None) -> QParamsRG:
    """Measure change for the realized-variance model.

    omega_q = omega - tau1*lam + tau2*lam^2 - gamma*sigma*xi
    tau1_q  = tau1 - 2*tau2*lam
    kappa_q = kappa - delta1*lam + delta2*lam^2 - sigma*xi
    delta1_q= delta1 - 2*delta2*lam

    ``lam``/``xi`` default to the risk prices stored in ``p``; passing
    zeros yields the identity map (Q == P).
    """
    lam = p.lam if lam is None else lam
    xi = p.xi if xi is None else xi
    return QParamsRG(
        omega_q=p.omega - p.tau1 * lam + p.tau2 * lam * lam - p.gamma * p.sigma * xi,
        tau1_q=p.tau1 - 2.0 * p.tau2 * lam,
        kappa_q=p.kappa - p.delta1 * lam + p.delta2 * lam * lam - p.sigma * xi,
        delta1_q=p.delta1 - 2.0 * p.delta2 * lam,
        beta=p.beta, tau2=p.tau2, gamma=p.gamma, sigma=p.sigma,
        phi=p.phi, delta2=p.delta2,
    )


@dataclass(frozen=True)
class QParamsHN:
    """Risk-neutral Heston-Nandi-form recursion h' = omega + beta*h +
    alpha*(z - delta*sqrt(h))^2 plus the variance rescaling h_scale = h*/h
    applied to the physical one-day-ahead variance (1 for the one-shock
    change of measure)."""

    omega: float
    beta: float
    alpha: float
    delta: float
    h_scale: float = 1.0

    @property
    def persistence(self) -> float:
        return self.beta + self.alpha * self.delta * self.delta

    @property
    def long_run_variance(self) -> float:
        pi = self.persistence
        if pi >= 1.0:
            raise PricingError(f"risk-neutral persistence {pi} >= 1: geometric sums diverge")
        return (self.omega + self.alpha) / (1.0 - pi)


def map_hn_lrnvr(p: HNParams) -> QParamsHN:
    """One-shock change of measure: the leverage center shifts by lam."""
    return QParamsHN(omega=p.omega, beta=p.beta, alpha=p.alpha,
                     delta=p.delta + p.lam, h_scale=1.0)


def map_hn_vd(p: HNParams) -> QParamsHN:
    """Variance-dependent pricing kernel; requires the variance risk ratio
    eta = h*/h = 1/(1+2*alpha*xi) > 0 stored on the parameter record.

    h* = eta*h,  omega* = eta*omega,  alpha* = eta^2*alpha,
    delta* = (lam + delta - 1/2)/eta + 1/2.
    """
    if p.eta is None:
        raise ValueError("variance-dependent map needs params with eta set")
    if not p.eta > 0.0:
        raise ValueError(f"eta must be > 0, got {p.eta}")
    eta = p.eta
    return QParamsHN(
        omega=eta * p.omega,
        beta=p.beta,
        alpha=eta * eta * p.alpha,
        delta=(p.lam + p.delta - 0.5) / eta + 0.5,
        h_scale=eta,
    )


def _logh_innovation_var(tau1: float, tau2: float, gamma: float, sigma: float) -> float:
    # var of tau1*z + tau2*(z^2-1) + gamma*sigma*u for independent N(0,1)
    return tau1 * tau1 + 2.0 * tau2 * tau2 + gamma * gamma * sigma * sigma


def _effective(p: RGParams, measure: str) -> tuple[float, float]:
    """(intercept, leverage slope) of the log-variance AR(1) under a measure."""
    if measure == "P":
        return p.omega, p.tau1
    if measure == "Q":
        q = map_rg_to_q(p)
        return q.omega_q, q.tau1_q
    raise ValueError(f"measure must be 'P' or 'Q', got {measure!r}")


def moments_logh(p: RGParams, measure: str = "P") -> tuple[float, float]:
    """Stationary mean and variance of log h under the chosen measure.

    The variance uses the AR(1) denominator (1 - beta^2) under both
    measures.
    """
    if not abs(p.beta) < 1.0:
        raise ValueError(f"|beta| < 1 required, got {p.beta}")
    omega, tau1 = _effective(p, measure)
    mean = omega / (1.0 - p.beta)
    var = _logh_innovation_var(tau1, p.tau2, p.gamma, p.sigma) / (1.0 - p.beta ** 2)
    return mean, var


def leverage_corr(p: RGParams, measure: str = "P") -> float:
    """Conditional correlation between tomorrow's log variance and today's
    return under the chosen measure."""
    _, tau1 = _effective(p, measure)
    denom = _logh_innovation_var(tau1, p.tau2, p.gamma, p.sigma)
    if denom <= 0.0:
        raise DegenerateInputError("all volatility-shock coefficients are zero; "
                                   "leverage correlation undefined")
    return tau1 / math.sqrt(denom)


def vrp_log_decomposition(p: RGParams) -> tuple[float, float, float]:
    """Mean log-variance gap between the pricing and physical measures,
    split into an equity-risk/leverage share and a volatility-risk share.

    total = (-tau1*lam + tau2*lam^2 - gamma*sigma*xi) / (1 - beta); the two
    shares sum to one and do not depend on beta.
    """
    if not abs(p.beta) < 1.0:
        raise ValueError(f"|beta| < 1 required, got {p.beta}")
    equity = -p.tau1 * p.lam + p.tau2 * p.lam * p.lam
    volrisk = -p.gamma * p.sigma * p.xi
    denom = equity + volrisk
    if denom == 0.0:
        raise DegenerateInputError("log volatility premium is exactly zero; shares undefined")
    total = denom / (1.0 - p.beta)
    return total, equity / denom, volrisk / denom


def moment_report(p: RGParams) -> dict:
    """All closed-form measure-comparison quantities in one mapping,
    suitable for JSON/CSV export."""
    mean_p, var_p = moments_logh(p, "P")
    mean_q, var_q = moments_logh(p, "Q")
    total, eq_share, vol_share = vrp_log_decomposition(p)
    return {
        "mean_logh_p": mean_p,
        "mean_logh_q": mean_q,
        "var_logh_p": var_p,
        "var_logh_q": var_q,
        "leverage_corr_p": leverage_corr(p, "P"),
        "leverage_corr_q": leverage_corr(p, "Q"),
        "log_vrp_total": total,
        "equity_share": eq_share,
        "volatility_risk_share": vol_share,
    }
