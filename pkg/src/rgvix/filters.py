"""Conditional-variance filtering and physical-measure likelihood terms."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from rgvix._backend import BACKEND, kernels
from rgvix.data import MarketSeries
from rgvix.errors import NumericError
from rgvix.params import EGParams, GParams, HNParams, RGParams

LOG2PI = math.log(2.0 * math.pi)


@dataclass
class FilterOutput:
    """Filtered state and per-observation likelihood contributions.

    ``h[t]`` is the conditional variance of day t's return; ``h_next[t]``
    is the one-day-ahead variance known at the end of day t (the input to
    VIX pricing on day t).  ``u`` and ``ll_x`` are None for the families
    without a measurement equation.
    """

    h: np.ndarray
    h_next: np.ndarray
    z: np.ndarray
    u: np.ndarray | None
    ll_r: np.ndarray
    ll_x: np.ndarray | None

    @property
    def ll_r_total(self) -> float:
        return float(self.ll_r.sum())

    @property
    def ll_x_total(self) -> float | None:
        return None if self.ll_x is None else float(self.ll_x.sum())

    def to_csv(self, path, dates=None) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "h", "z", "u", "ll_r", "ll_x"])
            for t in range(self.h.shape[0]):
                writer.writerow([
                    str(dates[t]) if dates is not None else str(t),
                    repr(float(self.h[t])),
                    repr(float(self.z[t])),
                    "" if self.u is None else repr(float(self.u[t])),
                    repr(float(self.ll_r[t])),
                    "" if self.ll_x is None else repr(float(self.ll_x[t])),
                ])


def _check_h_init(h_init: float) -> float:
    h_init = float(h_init)
    if not (h_init > 0.0) or not math.isfinite(h_init):
        raise ValueError(f"h_init must be a positive finite variance, got {h_init!r}")
    return h_init


def _raise_numeric(status: int, series: MarketSeries, T: int):
    # status == T means the final update (produced by the last observation)
    # escaped the admissible range.
    at = series.label(min(status, T - 1))
    raise NumericError(
        f"conditional variance left the admissible range [exp(-30), exp(10)] "
        f"at {at}; diverging parameters or bad data"
    )


def default_h_init(family: str, series: MarketSeries) -> float:
    """Data-driven start: exp(mean log RVcc over the first 22 days) for the
    log-variance families, sample return variance for the affine ones."""
    if family in ("rg", "eg") and series.realized_measure is not None:
        from rgvix.data import build_rvcc

        rvcc = build_rvcc(series)
        return float(np.exp(np.mean(np.log(rvcc[: min(22, len(series))]))))
    v = float(np.var(series.log_return))
    if v <= 0.0:
        raise ValueError("cannot initialize variance from a constant return series")
    return v


def _ll_r_from(z: np.ndarray, logh: np.ndarray) -> np.ndarray:
    return -0.5 * (LOG2PI + logh + z * z)


def filter_rg(params: RGParams, series: MarketSeries, h_init: float | None = None) -> FilterOutput:
    """Run the realized-variance-driven filter.

    The recursion is the observation-driven form
    log h_{t+1} = (omega - gamma*kappa) + (beta - gamma*phi) log h_t
                  + tau(z_t) - gamma*delta(z_t) + gamma*log x_t,
    which is algebraically identical to feeding the measurement residual
    back into the GARCH equation.
    """
    series.require("realized_measure")
    h_init = _check_h_init(default_h_init("rg", series) if h_init is None else h_init)
    r = series.log_return
    T = r.shape[0]
    logx = np.log(series.realized_measure)
    logh = np.empty(T + 1)
    z = np.empty(T)
    u_raw = np.empty(T)
    status = kernels.rg_filter(
        r, logx, params.lam, params.omega, params.beta, params.tau1,
        params.tau2, params.gamma, params.kappa, params.phi, params.delta1,
        params.delta2, params.leverage == "quad", series.risk_free_rate,
        math.log(h_init), logh, z, u_raw,
    )
    if status != -1:
        _raise_numeric(status, series, T)
    u = u_raw / params.sigma
    ll_x = -0.5 * (LOG2PI + 2.0 * math.log(params.sigma) + u * u)
    h = np.exp(logh)
    return FilterOutput(h=h[:T], h_next=h[1:], z=z, u=u,
                        ll_r=_ll_r_from(z, logh[:T]), ll_x=ll_x)


def filter_eg(params: EGParams, series: MarketSeries, h_init: float | None = None) -> FilterOutput:
    h_init = _check_h_init(default_h_init("eg", series) if h_init is None else h_init)
    r = series.log_return
    T = r.shape[0]
    logh = np.empty(T + 1)
    z = np.empty(T)
    status = kernels.eg_filter(
        r, params.lam, params.omega, params.beta, params.tau1, params.tau2,
        params.leverage == "quad", series.risk_free_rate, math.log(h_init),
        logh, z,
    )
    if status != -1:
        _raise_numeric(status, series, T)
    h = np.exp(logh)
    return FilterOutput(h=h[:T], h_next=h[1:], z=z, u=None,
                        ll_r=_ll_r_from(z, logh[:T]), ll_x=None)


def filter_g(params: GParams, series: MarketSeries, h_init: float | None = None) -> FilterOutput:
    h_init = _check_h_init(default_h_init("g", series) if h_init is None else h_init)
    r = series.log_return
    T = r.shape[0]
    h = np.empty(T + 1)
    z = np.empty(T)
    status = kernels.g_filter(r, params.lam, params.omega, params.beta,
                              params.alpha, series.risk_free_rate, h_init, h, z)
    if status != -1:
        _raise_numeric(status, series, T)
    return FilterOutput(h=h[:T], h_next=h[1:], z=z, u=None,
                        ll_r=_ll_r_from(z, np.log(h[:T])), ll_x=None)


def filter_hn(params: HNParams, series: MarketSeries, h_init: float | None = None) -> FilterOutput:
    h_init = _check_h_init(default_h_init("hn", series) if h_init is None else h_init)
    r = series.log_return
    T = r.shape[0]
    h = np.empty(T + 1)
    z = np.empty(T)
    status = kernels.hn_filter(r, params.lam, params.omega, params.beta,
                               params.alpha, params.delta, series.risk_free_rate,
                               h_init, h, z)
    if status != -1:
        _raise_numeric(status, series, T)
    return FilterOutput(h=h[:T], h_next=h[1:], z=z, u=None,
                        ll_r=_ll_r_from(z, np.log(h[:T])), ll_x=None)


_FILTERS = {"rg": filter_rg, "eg": filter_eg, "g": filter_g, "hn": filter_hn,
            "hnvd": filter_hn}


def run_filter(family: str, params, series: MarketSeries, h_init: float | None = None) -> FilterOutput:
    """Dispatch to the family's filter; the vd pricing variant shares the
    Heston-Nandi physical dynamics."""
    return _FILTERS[family](params, series, h_init)


def loglik_p(family: str, params, series: MarketSeries,
             h_init: float | None = None) -> tuple[float, float | None]:
    """Total physical-measure likelihood terms (return part, measurement part)."""
    out = run_filter(family, params, series, h_init)
    return out.ll_r_total, out.ll_x_total


__all__ = [
    "BACKEND", "FilterOutput", "default_h_init", "filter_rg", "filter_eg",
    "filter_g", "filter_hn", "run_filter", "loglik_p",
]
