"""Closed-form model-implied VIX for the five model variants, plus the
VIX pricing-error likelihood.

Everything is priced off the one-day-ahead conditional variance known at
the end of the quote day: VIX_t = 100*sqrt((252/22) * sum_k E_t[h_{t+k}])
with the 22-day horizon standing in for one month.  Passing the physical
parameters (identity measure change) yields the physical-expectation
analogue used for the model volatility premium.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from rgvix.data import ANNUAL_DAYS, MONTH_DAYS
from rgvix.errors import DataError, PricingError
from rgvix.params import EGParams, GParams, HNParams, RGParams
from rgvix.riskneutral import QParamsHN, QParamsRG, map_hn_lrnvr, map_hn_vd, map_rg_to_q

LOG2PI = math.log(2.0 * math.pi)

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass
class VixQuote:
    """One day's model quote with the underlying expected-variance path."""

    date: object
    model_vix: float
    eh_path: np.ndarray


def annualized_percent(eh_sum, horizon: int):
    """100 * sqrt((252/horizon) * sum of expected daily variances)."""
    return 100.0 * np.sqrt((ANNUAL_DAYS / horizon) * eh_sum)


def _rg_effective(q) -> tuple[float, float, float, float, float]:
    """(omega, tau1, tau2, beta, gamma2sigma2) under the measure encoded by q."""
    if isinstance(q, QParamsRG):
        return q.omega_q, q.tau1_q, q.tau2, q.beta, (q.gamma * q.sigma) ** 2
    if isinstance(q, RGParams):
        return q.omega, q.tau1, q.tau2, q.beta, (q.gamma * q.sigma) ** 2
    raise TypeError(f"expected QParamsRG or RGParams, got {type(q).__name__}")


def rg_step_factors(q, horizon: int = MONTH_DAYS) -> np.ndarray:
    """Per-lag accumulation factors F_i, i = 0..horizon-2, of the
    log-variance model's expected-variance recursion:

    F_i = (1 - 2 b^i tau2)^(-1/2)
          * exp{ b^i (omega - tau2) + b^(2i)/2 [tau1^2/(1-2 b^i tau2) + (gamma*sigma)^2] }
    """
    omega, tau1, tau2, beta, g2s2 = _rg_effective(q)
    i = np.arange(horizon - 1)
    bi = beta ** i
    denom = 1.0 - 2.0 * bi * tau2
    bad = denom <= 0.0
    if bad.any():
        raise PricingError(
            f"expected-variance factor diverges at lag i={int(np.flatnonzero(bad)[0])}: "
            f"1 - 2*beta^i*tau2 <= 0"
        )
    return denom ** -0.5 * np.exp(bi * (omega - tau2)
                                  + 0.5 * bi * bi * (tau1 * tau1 / denom + g2s2))


def _rg_path_coeffs(q, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """(A_k, beta^(k-1)) for k = 1..horizon with E[h_{t+k}] = A_k * h^(beta^(k-1))."""
    _, _, _, beta, _ = _rg_effective(q)
    F = rg_step_factors(q, horizon)
    A = np.concatenate([[1.0], np.cumprod(F)])
    pows = beta ** np.arange(horizon)
    return A, pows


def expected_h_path_rg(q, h_next: float, horizon: int = MONTH_DAYS) -> np.ndarray:
    """E[h_{t+k}], k = 1..horizon, from the one-day-ahead variance h_next.

    ``q`` is the risk-neutral parameter record for pricing, or the physical
    record for the physical expectation (the measure change is the identity
    in that case).
    """
    if not h_next > 0.0:
        raise ValueError(f"h_next must be > 0, got {h_next}")
    A, pows = _rg_path_coeffs(q, horizon)
    return A * h_next ** pows


def _rg_eh_sum(q, h_next: np.ndarray, horizon: int) -> np.ndarray:
    A, pows = _rg_path_coeffs(q, horizon)
    h = np.asarray(h_next, dtype=float)
    return np.exp(np.log(h)[..., None] * pows) @ A


def vix_rg(q, h_next, horizon: int = MONTH_DAYS):
    """Model VIX of the realized-variance model; vectorized over h_next."""
    scalar = np.isscalar(h_next) or np.ndim(h_next) == 0
    h = np.atleast_1d(np.asarray(h_next, dtype=float))
    if np.any(h <= 0.0):
        raise ValueError("h_next must be > 0")
    out = annualized_percent(_rg_eh_sum(q, h, horizon), horizon)
    return float(out[0]) if scalar else out


def eg_step_factors(p: EGParams, horizon: int = MONTH_DAYS, lam: float | None = None) -> np.ndarray:
    """Accumulation factors of the |z|-leverage log-variance model after the
    one-shock measure change z -> z - lam (lam = 0 gives the physical path).

    With c1 = b^i*(tau1+tau2), c2 = b^i*(tau1-tau2):
    F_i = exp[b^i (omega - tau2*sqrt(2/pi))]
          * { exp(-c1*lam + c1^2/2) Phi(c1 - lam)
            + exp(-c2*lam + c2^2/2) Phi(lam - c2) }
    """
    lam = p.lam if lam is None else lam
    i = np.arange(horizon - 1)
    bi = p.beta ** i
    c1 = bi * (p.tau1 + p.tau2)
    c2 = bi * (p.tau1 - p.tau2)
    lead = np.exp(bi * (p.omega - p.tau2 * _SQRT_2_OVER_PI))
    return lead * (np.exp(-c1 * lam + 0.5 * c1 * c1) * ndtr(c1 - lam)
                   + np.exp(-c2 * lam + 0.5 * c2 * c2) * ndtr(lam - c2))


def expected_h_path_eg(p: EGParams, h_next: float, horizon: int = MONTH_DAYS,
                       lam: float | None = None) -> np.ndarray:
    if not h_next > 0.0:
        raise ValueError(f"h_next must be > 0, got {h_next}")
    F = eg_step_factors(p, horizon, lam)
    A = np.concatenate([[1.0], np.cumprod(F)])
    pows = p.beta ** np.arange(horizon)
    return A * h_next ** pows


def _eg_eh_sum(p: EGParams, h_next: np.ndarray, horizon: int, lam: float | None) -> np.ndarray:
    F = eg_step_factors(p, horizon, lam)
    A = np.concatenate([[1.0], np.cumprod(F)])
    pows = p.beta ** np.arange(horizon)
    return np.exp(np.log(h_next)[..., None] * pows) @ A


def vix_eg(p: EGParams, h_next, horizon: int = MONTH_DAYS, lam: float | None = None):
    scalar = np.isscalar(h_next) or np.ndim(h_next) == 0
    h = np.atleast_1d(np.asarray(h_next, dtype=float))
    if np.any(h <= 0.0):
        raise ValueError("h_next must be > 0")
    out = annualized_percent(_eg_eh_sum(p, h, horizon, lam), horizon)
    return float(out[0]) if scalar else out


def expected_h_path_affine(h_next, persistence: float, long_run: float,
                           horizon: int = MONTH_DAYS) -> np.ndarray:
    """AR(1)-in-h expectations: E[h_{t+k}] = lr + pi^(k-1) * (h_next - lr)."""
    if persistence >= 1.0:
        raise PricingError(f"persistence {persistence} >= 1: geometric sums diverge")
    if long_run <= 0.0:
        raise PricingError(f"long-run variance {long_run} <= 0")
    pows = persistence ** np.arange(horizon)
    return long_run + np.multiply.outer(np.asarray(h_next, dtype=float) - long_run, pows)


def _affine_vix(h_next, persistence: float, long_run: float, horizon: int):
    eh = expected_h_path_affine(h_next, persistence, long_run, horizon)
    return annualized_percent(eh.sum(axis=-1), horizon)


def g_q_persistence(p: GParams) -> float:
    """Risk-neutral variance persistence beta + alpha*(1 + lam^2)."""
    return p.beta + p.alpha * (1.0 + p.lam * p.lam)


def vix_g(p: GParams, h_next, horizon: int = MONTH_DAYS):
    scalar = np.isscalar(h_next) or np.ndim(h_next) == 0
    pi_q = g_q_persistence(p)
    if pi_q >= 1.0:
        raise PricingError(f"risk-neutral persistence {pi_q} >= 1")
    out = _affine_vix(h_next, pi_q, p.omega / (1.0 - pi_q), horizon)
    return float(out) if scalar else out


def vix_hn(q: QParamsHN, h_next, horizon: int = MONTH_DAYS):
    """Heston-Nandi model VIX from the physical one-day-ahead variance.

    ``q.h_scale`` converts to the pricing-measure variance (identity for
    the one-shock change of measure).
    """
    scalar = np.isscalar(h_next) or np.ndim(h_next) == 0
    out = _affine_vix(q.h_scale * np.asarray(h_next, dtype=float),
                      q.persistence, q.long_run_variance, horizon)
    return float(out) if scalar else out


def vix_hnvd(q: QParamsHN, h_next, horizon: int = MONTH_DAYS):
    """Variance-dependent-kernel variant; identical machinery, with the
    variance risk ratio folded into ``q.h_scale``."""
    return vix_hn(q, h_next, horizon)


def price_series(family: str, params, h_next, horizon: int = MONTH_DAYS,
                 measure: str = "Q"):
    """Model VIX (measure='Q') or the expected-volatility analogue under the
    physical measure (measure='P'), vectorized over h_next."""
    if measure not in ("P", "Q"):
        raise ValueError(f"measure must be 'P' or 'Q', got {measure!r}")
    if family == "rg":
        q = map_rg_to_q(params) if measure == "Q" else params
        return vix_rg(q, h_next, horizon)
    if family == "eg":
        return vix_eg(params, h_next, horizon, lam=params.lam if measure == "Q" else 0.0)
    if family == "g":
        if measure == "Q":
            return vix_g(params, h_next, horizon)
        pi_p = params.alpha + params.beta
        if pi_p >= 1.0:
            raise PricingError(f"physical persistence {pi_p} >= 1")
        out = _affine_vix(h_next, pi_p, params.omega / (1.0 - pi_p), horizon)
        return float(out) if np.ndim(h_next) == 0 else out
    if family in ("hn", "hnvd"):
        if measure == "Q":
            q = map_hn_vd(params) if family == "hnvd" else map_hn_lrnvr(params)
            return vix_hn(q, h_next, horizon)
        qp = QParamsHN(omega=params.omega, beta=params.beta, alpha=params.alpha,
                       delta=params.delta, h_scale=1.0)
        return vix_hn(qp, h_next, horizon)
    raise ValueError(f"unknown family {family!r}")


def quote(family: str, params, h_next: float, date=None,
          horizon: int = MONTH_DAYS) -> VixQuote:
    """Full single-date quote including the expected-variance path."""
    if family == "rg":
        eh = expected_h_path_rg(map_rg_to_q(params), h_next, horizon)
    elif family == "eg":
        eh = expected_h_path_eg(params, h_next, horizon)
    elif family == "g":
        pi_q = g_q_persistence(params)
        if pi_q >= 1.0:
            raise PricingError(f"risk-neutral persistence {pi_q} >= 1")
        eh = expected_h_path_affine(h_next, pi_q, params.omega / (1.0 - pi_q), horizon)
    elif family in ("hn", "hnvd"):
        q = map_hn_vd(params) if family == "hnvd" else map_hn_lrnvr(params)
        eh = expected_h_path_affine(q.h_scale * h_next, q.persistence,
                                    q.long_run_variance, horizon)
    else:
        raise ValueError(f"unknown family {family!r}")
    return VixQuote(date=date, model_vix=float(annualized_percent(eh.sum(), horizon)),
                    eh_path=np.asarray(eh, dtype=float))


def loglik_vix_terms(model_vix, market_vix, sigma_vix: float,
                     spec: str = "additive") -> np.ndarray:
    """Per-observation Gaussian pricing-error log densities.

    additive:        VIX_model - VIX ~ N(0, sigma_vix^2)
    multiplicative:  log(VIX / VIX_model) ~ N(-sigma_vix^2/2, sigma_vix^2),
                     so the multiplicative error has unit mean; the -log VIX
                     Jacobian is included so the value is a density of the
                     VIX level under both specifications.
    """
    model_vix = np.asarray(model_vix, dtype=float)
    market_vix = np.asarray(market_vix, dtype=float)
    if model_vix.shape != market_vix.shape:
        raise ValueError(f"length mismatch: {model_vix.shape} vs {market_vix.shape}")
    if not sigma_vix > 0.0:
        raise ValueError(f"sigma_vix must be > 0, got {sigma_vix}")
    s2 = sigma_vix * sigma_vix
    if spec == "additive":
        e = model_vix - market_vix
        return -0.5 * (LOG2PI + math.log(s2) + e * e / s2)
    if spec == "multiplicative":
        if np.any(market_vix <= 0.0) or np.any(model_vix <= 0.0):
            raise DataError("multiplicative pricing errors need strictly positive "
                            "market and model VIX")
        g = np.log(market_vix / model_vix)
        return (-0.5 * (LOG2PI + math.log(s2) + (g + 0.5 * s2) ** 2 / s2)
                - np.log(market_vix))
    raise ValueError(f"spec must be 'additive' or 'multiplicative', got {spec!r}")


def loglik_vix(model_vix, market_vix, sigma_vix: float, spec: str = "additive") -> float:
    return float(loglik_vix_terms(model_vix, market_vix, sigma_vix, spec).sum())


def priced_series_to_csv(path, dates, market_vix, model_vix) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "market_vix", "model_vix", "pricing_error"])
        for t in range(len(model_vix)):
            writer.writerow([
                str(dates[t]) if dates is not None else str(t),
                repr(float(market_vix[t])),
                repr(float(model_vix[t])),
                repr(float(model_vix[t] - market_vix[t])),
            ])
