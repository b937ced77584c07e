"""Market (model-free) and model-implied volatility-risk-premium series,
including the regression-based alternative for expected realized variance."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from rgvix.data import ANNUAL_DAYS, MONTH_DAYS, MarketSeries, build_rvcc, trailing_annualized_vol
from rgvix.errors import DegenerateInputError
from rgvix.vix import price_series


def market_annvol_martingale(series: MarketSeries) -> np.ndarray:
    """Trailing-month annualized volatility (the martingale proxy for the
    expected volatility of the next month); NaN before day 22."""
    rvcc = build_rvcc(series)
    idx, vols = trailing_annualized_vol(rvcc)
    out = np.full(len(series), np.nan)
    out[idx] = vols
    return out


def vrp_market_martingale(series: MarketSeries) -> tuple[np.ndarray, np.ndarray]:
    """VIX minus trailing-month annualized realized volatility.

    Returns (positions, values); dates without 22 trailing observations are
    skipped with a warning.
    """
    series.require("vix")
    annvol = market_annvol_martingale(series)
    ok = ~np.isnan(annvol)
    skipped = int((~ok).sum())
    if skipped:
        warnings.warn(f"{skipped} leading dates skipped: fewer than {MONTH_DAYS} "
                      f"trailing realized-variance observations")
    idx = np.flatnonzero(ok)
    return idx, series.vix[idx] - annvol[idx]


@dataclass
class HarFit:
    """OLS fit of next-month mean realized variance on trailing daily,
    weekly (5-day mean), and monthly (22-day mean) realized variance."""

    beta0: float
    beta_d: float
    beta_w: float
    beta_m: float
    window: tuple[int, int]


def _har_design(rvcc: np.ndarray, rows: np.ndarray):
    d = rvcc[rows]
    w = np.array([rvcc[s - 4:s + 1].mean() for s in rows])
    m = np.array([rvcc[s - 21:s + 1].mean() for s in rows])
    return np.column_stack([np.ones(rows.size), d, w, m])


def har_fit(rvcc: np.ndarray, t: int | None = None, window: int = 750,
            embargo: int = MONTH_DAYS) -> HarFit:
    """Fit the regression using observation dates in [t-window, t-embargo].

    The embargo keeps every target (the next month's mean realized
    variance) inside the information set at ``t``; data after ``t`` never
    enters the fit.
    """
    rvcc = np.asarray(rvcc, dtype=float)
    t = rvcc.shape[0] - 1 if t is None else int(t)
    if not 0 <= t < rvcc.shape[0]:
        raise ValueError(f"t={t} outside series of length {rvcc.shape[0]}")
    s_max = t - max(embargo, MONTH_DAYS)
    s_min = max(21, t - window)
    if s_min > s_max:
        raise DegenerateInputError(
            f"no admissible regression rows in [{t - window}, {t - embargo}] "
            f"(need >= 21 days of lags and a {MONTH_DAYS}-day target)")
    rows = np.arange(s_min, s_max + 1)
    X = _har_design(rvcc, rows)
    y = np.array([rvcc[s + 1:s + 1 + MONTH_DAYS].mean() for s in rows])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateInputError("rank-deficient regression design "
                                   "(collinear or constant realized variance)")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return HarFit(beta0=float(beta[0]), beta_d=float(beta[1]),
                  beta_w=float(beta[2]), beta_m=float(beta[3]),
                  window=(int(s_min), int(s_max)))


def har_forecast(fit: HarFit, rvcc_history: np.ndarray) -> float:
    """Expected mean daily realized variance over the next month, from the
    end of the supplied history.

    A negative regression forecast is floored at the smallest positive
    trailing value with a warning.
    """
    rvcc = np.asarray(rvcc_history, dtype=float)
    if rvcc.shape[0] < MONTH_DAYS:
        raise ValueError(f"need at least {MONTH_DAYS} trailing observations")
    d = rvcc[-1]
    w = rvcc[-5:].mean()
    m = rvcc[-MONTH_DAYS:].mean()
    y = fit.beta0 + fit.beta_d * d + fit.beta_w * w + fit.beta_m * m
    if y <= 0.0:
        tail = rvcc[-MONTH_DAYS:]
        floor = float(tail[tail > 0].min())
        warnings.warn(f"regression forecast {y:g} <= 0; floored at {floor:g}")
        return floor
    return float(y)


def har_annvol_series(series: MarketSeries, window: int = 750,
                      embargo: int = MONTH_DAYS, refit_every: int = MONTH_DAYS) -> np.ndarray:
    """Annualized percent volatility implied by monthly-refit regression
    forecasts; NaN where no fit is feasible yet."""
    rvcc = build_rvcc(series)
    n = rvcc.shape[0]
    out = np.full(n, np.nan)
    t0 = window + 21  # first date with full regressor/target coverage
    fit = None
    for t in range(t0, n):
        if fit is None or (t - t0) % refit_every == 0:
            fit = har_fit(rvcc, t=t, window=window, embargo=embargo)
        y = har_forecast(fit, rvcc[: t + 1])
        out[t] = 100.0 * math.sqrt(ANNUAL_DAYS * y)
    return out


def vrp_model(family: str, params, h_next) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(model_vrp, p_vol, q_vol): annualized expected volatility under the
    pricing measure minus the physical measure, per date."""
    q_vol = price_series(family, params, h_next, measure="Q")
    p_vol = price_series(family, params, h_next, measure="P")
    return q_vol - p_vol, p_vol, q_vol


@dataclass
class VrpSeries:
    """Date-aligned premium series; model_vrp == q_vol - p_vol by
    construction."""

    index: np.ndarray
    dates: np.ndarray | None
    market_vrp_martingale: np.ndarray
    market_vrp_har: np.ndarray | None
    model_vrp: np.ndarray
    p_vol: np.ndarray
    q_vol: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "market_vrp_martingale", "market_vrp_har",
                             "model_vrp", "p_vol", "q_vol"])
            fmt = lambda v: "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))
            for j, t in enumerate(self.index):
                writer.writerow([
                    str(self.dates[j]) if self.dates is not None else str(int(t)),
                    fmt(float(self.market_vrp_martingale[j])),
                    fmt(None if self.market_vrp_har is None else float(self.market_vrp_har[j])),
                    fmt(float(self.model_vrp[j])),
                    fmt(float(self.p_vol[j])),
                    fmt(float(self.q_vol[j])),
                ])


def build_vrp_series(family: str, params, series: MarketSeries, h_next,
                     include_har: bool = False, har_window: int = 750) -> VrpSeries:
    """Assemble the premium table for the dates where the martingale market
    premium exists."""
    series.require("vix")
    idx, market = vrp_market_martingale(series)
    model_vrp, p_vol, q_vol = vrp_model(family, params, np.asarray(h_next)[idx])
    har = None
    if include_har:
        annvol_har = har_annvol_series(series, window=har_window)
        har = series.vix[idx] - annvol_har[idx]
    return VrpSeries(
        index=idx,
        dates=None if series.dates is None else series.dates[idx],
        market_vrp_martingale=market,
        market_vrp_har=har,
        model_vrp=np.atleast_1d(model_vrp),
        p_vol=np.atleast_1d(p_vol),
        q_vol=np.atleast_1d(q_vol),
    )
