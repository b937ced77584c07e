"""Joint quasi-maximum-likelihood estimation of the model and pricing-error
parameters, robust (sandwich) standard errors, and the rolling backtest.

The objective is ll_r + ll_x + w*ll_vix (ll_x only for the
realized-variance family).  Optimization runs over transformed parameters
so every trial is admissible: beta through atanh, scales through log, and
the GARCH (alpha, beta) pair through a simplex map.  Under the additive
pricing-error specification sigma_vix is profiled out in closed form.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from rgvix.data import MarketSeries, MONTH_DAYS
from rgvix.errors import EstimationError, RgvixError
from rgvix.filters import default_h_init, run_filter
from rgvix.params import EGParams, GParams, HNParams, RGParams, param_names
from rgvix.vix import loglik_vix_terms, price_series

_BIG = 1e12


@dataclass
class FitOptions:
    n_starts: int = 5
    seed: int = 0
    h_init: float | None = None
    nm_maxiter: int | None = None
    polish: bool = True
    vix_weight: float = 1.0
    min_obs: int = 100
    leverage: str | None = None  # override the family default


@dataclass
class FitResult:
    family: str
    error_spec: str
    params: object
    se: dict = field(default_factory=dict)
    ll_r: float = math.nan
    ll_x: float | None = None
    ll_vix: float | None = None
    ll_total: float = math.nan
    vix_weight: float = 1.0
    converged: bool = False
    n_iter: int = 0
    n_starts: int = 0
    window: tuple[int, int] | None = None
    history: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "error_spec": self.error_spec,
            "params": self.params.to_dict(),
            "se": self.se,
            "ll_r": self.ll_r,
            "ll_x": self.ll_x,
            "ll_vix": self.ll_vix,
            "ll_total": self.ll_total,
            "vix_weight": self.vix_weight,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "n_starts": self.n_starts,
            "window": list(self.window) if self.window is not None else None,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class _Family:
    """Transform layer between natural parameters and the unconstrained
    optimization space."""

    def __init__(self, family: str, error_spec: str, leverage: str | None):
        self.family = family
        self.error_spec = error_spec
        # sigma_vix is profiled under the additive spec, free (log) otherwise
        self.free_sigma_vix = error_spec == "multiplicative"
        self.leverage = leverage

    def dim(self) -> int:
        base = {"rg": 12, "eg": 5, "g": 4, "hn": 5, "hnvd": 6}[self.family]
        return base + (1 if self.free_sigma_vix else 0)

    def unpack(self, th: np.ndarray, sigma_vix: float = 1.0):
        f = self.family
        sv = math.exp(th[-1]) if self.free_sigma_vix else sigma_vix
        if f == "rg":
            return RGParams(lam=th[0], omega=th[1], beta=math.tanh(th[2]),
                            tau1=th[3], tau2=th[4], gamma=th[5], kappa=th[6],
                            phi=th[7], delta1=th[8], delta2=th[9],
                            sigma=math.exp(th[10]), xi=th[11], sigma_vix=sv,
                            leverage=self.leverage or "quad")
        if f == "eg":
            return EGParams(lam=th[0], omega=th[1], beta=math.tanh(th[2]),
                            tau1=th[3], tau2=th[4], sigma_vix=sv,
                            leverage=self.leverage or "abs")
        if f == "g":
            ea, eb = math.exp(th[2]), math.exp(th[3])
            den = 1.0 + ea + eb
            return GParams(lam=th[0], omega=math.exp(th[1]), alpha=ea / den,
                           beta=eb / den, sigma_vix=sv)
        if f == "hn":
            return HNParams(lam=th[0], omega=th[1], beta=_sigmoid(th[2]),
                            alpha=math.exp(th[3]), delta=th[4], sigma_vix=sv)
        if f == "hnvd":
            return HNParams(lam=th[0], omega=th[1], beta=_sigmoid(th[2]),
                            alpha=math.exp(th[3]), delta=th[4],
                            eta=math.exp(th[5]), sigma_vix=sv)
        raise ValueError(f"unknown family {f!r}")

    def pack(self, p) -> np.ndarray:
        f = self.family
        if f == "rg":
            th = [p.lam, p.omega, math.atanh(p.beta), p.tau1, p.tau2, p.gamma,
                  p.kappa, p.phi, p.delta1, p.delta2, math.log(p.sigma), p.xi]
        elif f == "eg":
            th = [p.lam, p.omega, math.atanh(p.beta), p.tau1, p.tau2]
        elif f == "g":
            rest = 1.0 - p.alpha - p.beta
            th = [p.lam, math.log(p.omega), math.log(p.alpha / rest),
                  math.log(p.beta / rest)]
        elif f in ("hn", "hnvd"):
            th = [p.lam, p.omega, math.log(p.beta / (1.0 - p.beta)),
                  math.log(p.alpha), p.delta]
            if f == "hnvd":
                th.append(math.log(p.eta))
        else:
            raise ValueError(f"unknown family {f!r}")
        if self.free_sigma_vix:
            th.append(math.log(p.sigma_vix))
        return np.asarray(th, dtype=float)

    def jitter_scale(self) -> np.ndarray:
        f = self.family
        if f == "rg":
            s = [0.05, 0.3, 0.5, 0.05, 0.05, 0.15, 0.3, 0.15, 0.05, 0.05, 0.4, 0.5]
        elif f == "eg":
            s = [0.05, 0.3, 0.5, 0.05, 0.08]
        elif f == "g":
            s = [0.1, 0.5, 0.7, 0.7]
        elif f == "hn":
            s = [1.0, 2e-6, 0.7, 0.7, 40.0]
        else:
            s = [1.0, 2e-6, 0.7, 0.7, 40.0, 0.15]
        if self.free_sigma_vix:
            s.append(0.4)
        return np.asarray(s)


def _base_params(family: str, series: MarketSeries, leverage: str | None):
    """Data-driven center of the multistart cloud."""
    v = float(np.var(series.log_return))
    if family == "rg":
        mlx = float(np.mean(np.log(series.realized_measure)))
        return RGParams(lam=0.03, omega=0.03 * mlx, beta=0.97, tau1=-0.05,
                        tau2=0.05, gamma=0.2, kappa=0.0, phi=1.0, delta1=-0.05,
                        delta2=0.1, sigma=0.5, xi=-0.5, sigma_vix=1.0,
                        leverage=leverage or "quad")
    if family == "eg":
        mlh = math.log(v)
        return EGParams(lam=0.05, omega=0.03 * mlh, beta=0.97, tau1=-0.05,
                        tau2=0.1, sigma_vix=1.0, leverage=leverage or "abs")
    if family == "g":
        return GParams(lam=0.05, omega=max(v, 1e-8) * 0.04, alpha=0.08,
                       beta=0.88, sigma_vix=1.0)
    delta0 = 100.0
    alpha0 = 0.12 / delta0 ** 2
    omega0 = max(v, 1e-8) * 0.05 - alpha0
    if family == "hn":
        return HNParams(lam=2.0, omega=omega0, beta=0.8, alpha=alpha0,
                        delta=delta0, sigma_vix=1.0)
    return HNParams(lam=2.0, omega=omega0, beta=0.8, alpha=alpha0,
                    delta=delta0, eta=1.1, sigma_vix=1.0)


@dataclass
class _Problem:
    family: str
    fam: _Family
    series: MarketSeries
    error_spec: str
    vix_weight: float
    h_init: float

    def components(self, params):
        """(ll_r, ll_x, ll_vix, sigma_vix) at natural parameters."""
        out = run_filter(self.family, params, self.series, self.h_init)
        ll_r = out.ll_r_total
        ll_x = out.ll_x_total
        ll_vix = None
        sigma_vix = params.sigma_vix
        if self.vix_weight != 0.0 and self.series.vix is not None:
            mv = price_series(self.family, params, out.h_next)
            if self.error_spec == "additive" and not self.fam.free_sigma_vix:
                s2 = float(np.mean((mv - self.series.vix) ** 2))
                sigma_vix = math.sqrt(max(s2, 1e-12))
            ll_vix = float(loglik_vix_terms(mv, self.series.vix, sigma_vix,
                                            self.error_spec).sum())
        return ll_r, ll_x, ll_vix, sigma_vix

    def total(self, ll_r, ll_x, ll_vix):
        tot = ll_r + (ll_x or 0.0)
        if ll_vix is not None:
            tot += self.vix_weight * ll_vix
        return tot

    def objective(self, th: np.ndarray) -> float:
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                params = self.fam.unpack(th)
                ll_r, ll_x, ll_vix, _ = self.components(params)
                tot = self.total(ll_r, ll_x, ll_vix)
            except (RgvixError, OverflowError, FloatingPointError):
                return _BIG
        if not math.isfinite(tot):
            return _BIG
        return -tot


def estimate(family: str, series: MarketSeries, error_spec: str = "additive",
             opts: FitOptions | None = None) -> FitResult:
    """Fit one model family by joint quasi-maximum likelihood.

    Multistart Nelder-Mead around data-driven initials, each polished with
    BFGS on central-difference gradients; the best start wins.
    Deterministic given opts.seed.
    """
    opts = opts or FitOptions()
    if error_spec not in ("additive", "multiplicative"):
        raise ValueError(f"error_spec must be additive or multiplicative, got {error_spec!r}")
    if len(series) < opts.min_obs:
        raise EstimationError(f"need at least {opts.min_obs} observations, got {len(series)}")
    if family == "rg":
        series.require("realized_measure")
    if opts.vix_weight != 0.0:
        series.require("vix")
    if float(np.var(series.log_return)) <= 0.0:
        raise EstimationError("constant return series: variance parameters unidentified")

    fam = _Family(family, error_spec, opts.leverage)
    h_init = opts.h_init if opts.h_init is not None else default_h_init(family, series)
    prob = _Problem(family, fam, series, error_spec, opts.vix_weight, h_init)

    base = fam.pack(_base_params(family, series, opts.leverage))
    rng = np.random.default_rng(opts.seed)
    scale = fam.jitter_scale()
    starts = [base] + [base + scale * rng.standard_normal(base.shape)
                       for _ in range(max(0, opts.n_starts - 1))]

    history: list[float] = []

    def tracked(th):
        f = prob.objective(th)
        if f < _BIG and (not history or -f > history[-1]):
            history.append(-f)
        return f

    d = fam.dim()
    nm_maxiter = opts.nm_maxiter if opts.nm_maxiter is not None else 400 * d
    best = None
    total_nfev = 0
    for th0 in starts:
        res = optimize.minimize(tracked, th0, method="Nelder-Mead",
                                options={"maxiter": nm_maxiter, "xatol": 1e-5,
                                         "fatol": 1e-6, "adaptive": True})
        total_nfev += res.nfev
        if res.fun < _BIG and (best is None or res.fun < best[0]):
            best = (res.fun, res.x.copy(), bool(res.success))
    if best is None:
        raise EstimationError("all optimization starts diverged")
    if opts.polish:
        # quasi-Newton refinement of the winning simplex result, with
        # central-difference gradients
        with np.errstate(all="ignore"):
            pol = optimize.minimize(tracked, best[1], method="BFGS", jac="3-point",
                                    options={"maxiter": 200, "gtol": 1e-5})
        total_nfev += pol.nfev
        if pol.fun <= best[0]:
            best = (pol.fun, pol.x.copy(), best[2] or bool(pol.success))

    fun, th, success = best
    with np.errstate(all="ignore"):
        params = fam.unpack(th)
        ll_r, ll_x, ll_vix, sigma_vix = prob.components(params)
    params = replace(params, sigma_vix=sigma_vix)
    try:
        params.validate()
    except ValueError as exc:
        warnings.warn(f"fitted parameters violate a hard constraint: {exc}")
        success = False
    if hasattr(params, "check_signs"):
        params.check_signs()
    if opts.vix_weight == 0.0 and series.vix is not None:
        # diagnostic pricing fit at the return-only optimum
        try:
            mv = price_series(family, params, run_filter(family, params, series, h_init).h_next)
            s2 = float(np.mean((mv - series.vix) ** 2))
            params = replace(params, sigma_vix=math.sqrt(max(s2, 1e-12)))
            ll_vix = float(loglik_vix_terms(mv, series.vix, params.sigma_vix, error_spec).sum())
        except RgvixError:
            ll_vix = None
    return FitResult(
        family=family, error_spec=error_spec, params=params,
        ll_r=ll_r, ll_x=ll_x, ll_vix=ll_vix,
        ll_total=prob.total(ll_r, ll_x, ll_vix if opts.vix_weight != 0 else None),
        vix_weight=opts.vix_weight, converged=success, n_iter=total_nfev,
        n_starts=len(starts), window=(0, len(series)), history=history,
    )


# ---------------------------------------------------------------------------
# robust standard errors

_SCALE_FLOORS = {"omega": 1e-7, "alpha": 1e-7, "delta": 1.0, "eta": 0.1,
                 "sigma_vix": 0.05}


def loglik_obs(family: str, params, series: MarketSeries, h_init: float,
               error_spec: str = "additive", vix_weight: float = 1.0) -> np.ndarray:
    """Per-observation contributions of the (weighted) joint log-likelihood."""
    out = run_filter(family, params, series, h_init)
    terms = out.ll_r.copy()
    if out.ll_x is not None:
        terms += out.ll_x
    if vix_weight != 0.0 and series.vix is not None:
        mv = price_series(family, params, out.h_next)
        terms += vix_weight * loglik_vix_terms(mv, series.vix, params.sigma_vix, error_spec)
    return terms


def _natural_vector(family: str, params) -> tuple[list[str], np.ndarray]:
    names = param_names(family)
    return names, np.asarray([getattr(params, n) for n in names], dtype=float)


def _params_from_natural(family: str, template, names, vec):
    return replace(template, **{n: float(v) for n, v in zip(names, vec)})


def sandwich_se(per_obs, theta: np.ndarray, scales: np.ndarray | None = None,
                rel_step: float = 1e-5):
    """Generic sandwich covariance H^{-1} S H^{-1} by central differences.

    ``per_obs(theta)`` returns the vector of per-observation log-likelihood
    contributions.  Returns (se, cov); coordinates where the Hessian is
    unusable come back NaN.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    if scales is None:
        scales = np.maximum(np.abs(theta), 1e-3)
    eps = rel_step * scales

    def f_vec(th):
        return np.asarray(per_obs(th), dtype=float)

    base = f_vec(theta)
    T = base.size

    # scores: T x p by central differences
    sc = np.empty((T, p))
    plus_tot = np.empty(p)
    minus_tot = np.empty(p)
    for j in range(p):
        e = np.zeros(p)
        e[j] = eps[j]
        fp = f_vec(theta + e)
        fm = f_vec(theta - e)
        sc[:, j] = (fp - fm) / (2.0 * eps[j])
        plus_tot[j] = fp.sum()
        minus_tot[j] = fm.sum()
    S = sc.T @ sc

    # Hessian of the total log-likelihood
    H = np.empty((p, p))
    f0 = base.sum()
    for j in range(p):
        H[j, j] = (plus_tot[j] - 2.0 * f0 + minus_tot[j]) / eps[j] ** 2
    for j in range(p):
        for k in range(j + 1, p):
            ej = np.zeros(p); ej[j] = eps[j]
            ek = np.zeros(p); ek[k] = eps[k]
            fpp = f_vec(theta + ej + ek).sum()
            fpm = f_vec(theta + ej - ek).sum()
            fmp = f_vec(theta - ej + ek).sum()
            fmm = f_vec(theta - ej - ek).sum()
            H[j, k] = H[k, j] = (fpp - fpm - fmp + fmm) / (4.0 * eps[j] * eps[k])

    try:
        Hinv = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        Hinv = np.linalg.pinv(H)
    cov = Hinv @ S @ Hinv
    diag = np.diag(cov).copy()
    se = np.where(np.isfinite(diag) & (diag > 0), np.sqrt(np.abs(diag)), np.nan)
    return se, cov


def robust_se(fit: FitResult, series: MarketSeries, h_init: float | None = None) -> dict:
    """Sandwich standard errors of the fitted natural parameters.

    The profiled sigma_vix enters as a free coordinate; the full-likelihood
    gradient vanishes there as well, so the usual sandwich applies.
    """
    family = fit.family
    h_init = h_init if h_init is not None else default_h_init(family, series)
    names, theta = _natural_vector(family, fit.params)
    scales = np.array([max(abs(v), _SCALE_FLOORS.get(n, 1e-3))
                       for n, v in zip(names, theta)])

    def per_obs(vec):
        with np.errstate(all="ignore"):
            params = _params_from_natural(family, fit.params, names, vec)
            return loglik_obs(family, params, series, h_init, fit.error_spec,
                              fit.vix_weight)

    se, _ = sandwich_se(per_obs, theta, scales)
    return dict(zip(names, (float(s) for s in se)))


# ---------------------------------------------------------------------------
# rolling out-of-sample backtest

@dataclass
class BacktestResult:
    family: str
    index: np.ndarray          # positions in the source series
    window_id: np.ndarray
    model_vix: np.ndarray
    p_vol: np.ndarray
    model_vrp: np.ndarray
    fits: list
    n_failed_windows: int = 0

    def to_csv(self, path, series: MarketSeries | None = None) -> None:
        from rgvix.vrp import market_annvol_martingale

        market_vix = market_annvol = None
        if series is not None and series.vix is not None:
            market_vix = series.vix
        if series is not None and series.realized_measure is not None:
            market_annvol = market_annvol_martingale(series)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["date", "window_id", "model_vix", "p_vol", "model_vrp"]
            if market_vix is not None:
                header += ["market_vix"]
            if market_annvol is not None:
                header += ["market_annvol", "market_vrp"]
            writer.writerow(header)
            for j, t in enumerate(self.index):
                date = (str(series.dates[t]) if series is not None and series.dates is not None
                        else str(int(t)))
                row = [date, int(self.window_id[j]), repr(float(self.model_vix[j])),
                       repr(float(self.p_vol[j])), repr(float(self.model_vrp[j]))]
                if market_vix is not None:
                    row.append(repr(float(market_vix[t])))
                if market_annvol is not None:
                    av = market_annvol[t]
                    row.append("" if math.isnan(av) else repr(float(av)))
                    if market_vix is not None and not math.isnan(av):
                        row.append(repr(float(market_vix[t] - av)))
                    else:
                        row.append("")
                writer.writerow(row)


def _fit_window(args):
    family, series, lo, hi, error_spec, opts = args
    try:
        fit = estimate(family, series.window(lo, hi), error_spec, opts)
        return replace(fit, window=(lo, hi))
    except RgvixError as exc:
        return exc


def rolling_backtest(family: str, series: MarketSeries, window: int = 750,
                     refit_every: int = MONTH_DAYS, start: int | None = None,
                     error_spec: str = "additive", opts: FitOptions | None = None,
                     threads: int = 1) -> BacktestResult:
    """Re-estimate on a trailing window every ``refit_every`` days and quote
    daily out-of-sample values with frozen parameters (the variance filter
    still updates on incoming data).

    A window whose estimation fails inherits the previous window's
    parameters with a warning.
    """
    opts = opts or FitOptions()
    start = window if start is None else int(start)
    if start < window:
        raise ValueError(f"start={start} leaves less than window={window} days of history")
    if start >= len(series):
        raise ValueError(f"start={start} is beyond the series (length {len(series)})")
    refit_points = list(range(start, len(series), refit_every))
    tasks = [(family, series, s - window, s, error_spec, opts) for s in refit_points]

    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_fit_window, tasks, chunksize=1))
    else:
        raw = [_fit_window(t) for t in tasks]

    # resolve failures by carrying the previous window's parameters forward,
    # in window order (deterministic regardless of completion order)
    fits = []
    n_failed = 0
    last_good = None
    for s, res in zip(refit_points, raw):
        if isinstance(res, Exception) or (isinstance(res, FitResult) and not np.isfinite(res.ll_total)):
            n_failed += 1
            if last_good is None:
                raise EstimationError(f"first backtest window ending at {s} failed: {res}")
            warnings.warn(f"window ending at {s} failed ({res}); carrying previous parameters")
            fits.append(replace(last_good, window=(s - window, s)))
        else:
            fits.append(res)
            last_good = res
    index, window_id, mv_all, pv_all = [], [], [], []
    for wid, (s, fit) in enumerate(zip(refit_points, fits)):
        stop = min(s + refit_every, len(series))
        lo = s - window
        out = run_filter(family, fit.params, series.window(lo, stop),
                         opts.h_init if opts.h_init is not None
                         else default_h_init(family, series.window(lo, s)))
        h_next = out.h_next[s - lo:stop - lo]
        mv = price_series(family, fit.params, h_next, measure="Q")
        pv = price_series(family, fit.params, h_next, measure="P")
        index.extend(range(s, stop))
        window_id.extend([wid] * (stop - s))
        mv_all.append(np.atleast_1d(mv))
        pv_all.append(np.atleast_1d(pv))
    model_vix = np.concatenate(mv_all)
    p_vol = np.concatenate(pv_all)
    return BacktestResult(
        family=family, index=np.asarray(index, dtype=int),
        window_id=np.asarray(window_id, dtype=int), model_vix=model_vix,
        p_vol=p_vol, model_vrp=model_vix - p_vol, fits=fits,
        n_failed_windows=n_failed,
    )
