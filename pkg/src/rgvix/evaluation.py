"""Scoring model series against market series, and equal-accuracy tests on
loss differentials with a positive-semidefinite long-run variance."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from rgvix.errors import DegenerateInputError

LOSS_KINDS = ("squared", "absolute")


@dataclass
class ErrorStats:
    """Error summary plus distribution moments of the model series.

    bias/RMSE/MAE/autocorrelations describe the error (model - market);
    corr is the correlation between the two level series; mean/var/skew/
    kurt describe the model series itself (var with ddof=1, kurt excess by
    default).  Unavailable entries are NaN.
    """

    bias: float
    rmse: float
    mae: float
    corr: float
    ar1: float
    ar10: float
    ar22: float
    mean: float
    var: float
    skew: float
    kurt: float


def autocorrelation(x: np.ndarray, lag: int) -> float:
    """Sample autocorrelation with 1/T normalization; NaN when there are
    not at least lag+1 observations or the series is constant."""
    x = np.asarray(x, dtype=float)
    T = x.shape[0]
    if lag < 1 or T < lag + 1:
        return math.nan
    xc = x - x.mean()
    denom = float(np.sum(xc * xc))
    if denom == 0.0:
        return math.nan
    return float(np.sum(xc[lag:] * xc[:-lag]) / denom)


def _moments(x: np.ndarray, excess_kurtosis: bool) -> tuple[float, float, float, float]:
    mu = float(x.mean())
    var = float(x.var(ddof=1)) if x.size > 1 else math.nan
    m2 = float(x.var())
    if m2 == 0.0:
        return mu, var, math.nan, math.nan
    xc = x - mu
    skew = float(np.mean(xc ** 3) / m2 ** 1.5)
    kurt = float(np.mean(xc ** 4) / m2 ** 2)
    return mu, var, skew, kurt - 3.0 if excess_kurtosis else kurt


def error_stats(model: np.ndarray, market: np.ndarray,
                excess_kurtosis: bool = True) -> ErrorStats:
    model = np.asarray(model, dtype=float)
    market = np.asarray(market, dtype=float)
    if model.shape != market.shape:
        raise ValueError(f"length mismatch: {model.shape} vs {market.shape}")
    e = model - market
    if model.std() == 0.0 or market.std() == 0.0:
        corr = math.nan  # constant series: correlation undefined
    else:
        corr = float(np.corrcoef(model, market)[0, 1])
    mean, var, skew, kurt = _moments(model, excess_kurtosis)
    return ErrorStats(
        bias=float(e.mean()),
        rmse=float(np.sqrt(np.mean(e * e))),
        mae=float(np.mean(np.abs(e))),
        corr=corr,
        ar1=autocorrelation(e, 1),
        ar10=autocorrelation(e, 10),
        ar22=autocorrelation(e, 22),
        mean=mean, var=var, skew=skew, kurt=kurt,
    )


def parzen_weight(x):
    """Parzen lag window: 1-6x^2+6x^3 on [0,1/2], 2(1-x)^3 on (1/2,1], 0 beyond."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    lo = x <= 0.5
    hi = (x > 0.5) & (x <= 1.0)
    out[lo] = 1.0 - 6.0 * x[lo] ** 2 + 6.0 * x[lo] ** 3
    out[hi] = 2.0 * (1.0 - x[hi]) ** 3
    return out


def parzen_lrv(d: np.ndarray, H: int) -> float:
    """Long-run variance with the Parzen kernel at bandwidth H.

    Mean-centered 1/T autocovariances; the kernel is positive semidefinite
    so the estimate is nonnegative (tiny negative float dust is clipped).
    """
    if H < 1:
        raise ValueError(f"bandwidth must be >= 1, got {H}")
    d = np.asarray(d, dtype=float)
    T = d.shape[0]
    if T < 1:
        raise ValueError("empty loss differential")
    dc = d - d.mean()
    acc = float(np.sum(dc * dc) / T)
    for j in range(1, min(H, T)):
        w = parzen_weight(j / H)
        if w == 0.0:
            continue
        acc += 2.0 * w * float(np.sum(dc[j:] * dc[:-j]) / T)
    return max(acc, 0.0)


@dataclass
class LossDiffSeries:
    """Loss differentials d_t = g(e_model,t) - g(e_ref,t)."""

    d: np.ndarray
    loss_kind: str

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        self.d = np.asarray(self.d, dtype=float)
        if not np.all(np.isfinite(self.d)):
            raise ValueError("loss differentials must be finite")


def loss_diff(e_model: np.ndarray, e_ref: np.ndarray, loss_kind: str) -> LossDiffSeries:
    e_model = np.asarray(e_model, dtype=float)
    e_ref = np.asarray(e_ref, dtype=float)
    if e_model.shape != e_ref.shape:
        raise ValueError(f"length mismatch: {e_model.shape} vs {e_ref.shape}")
    g = (lambda e: e * e) if loss_kind == "squared" else np.abs
    return LossDiffSeries(d=g(e_model) - g(e_ref), loss_kind=loss_kind)


@dataclass
class DmResult:
    stat: float
    p_value: float


def dm_test(d, bandwidth: int = 42) -> DmResult:
    """Equal-predictive-accuracy t statistic sqrt(T)*dbar/sigma_hat with the
    Parzen long-run variance; two-sided normal p-value.

    An identically-zero differential returns stat 0 by convention; zero
    long-run variance with a nonzero mean is an error.
    """
    arr = d.d if isinstance(d, LossDiffSeries) else np.asarray(d, dtype=float)
    T = arr.shape[0]
    if T < 2 * bandwidth:
        warnings.warn(f"series length {T} < 2*bandwidth={2 * bandwidth}; "
                      f"the normal approximation may be poor")
    dbar = float(arr.mean())
    lrv = parzen_lrv(arr, bandwidth)
    if lrv == 0.0:
        if dbar == 0.0:
            return DmResult(stat=0.0, p_value=1.0)
        raise DegenerateInputError("zero long-run variance with nonzero mean differential")
    stat = math.sqrt(T) * dbar / math.sqrt(lrv)
    return DmResult(stat=float(stat), p_value=float(2.0 * (1.0 - ndtr(abs(stat)))))


def delta_pct(loss_model: float, loss_ref: float) -> float:
    """Loss reduction of the reference relative to the alternative model:
    (loss_model - loss_ref) / loss_model."""
    if loss_model == 0.0:
        return math.nan
    return (loss_model - loss_ref) / loss_model


TARGETS = ("vrp", "vix", "annvol")


@dataclass
class EvalReport:
    """Per-target, per-model statistics plus pairwise accuracy tests
    against the reference model."""

    ref_model: str
    stats: dict = field(default_factory=dict)       # target -> model -> ErrorStats
    dm: dict = field(default_factory=dict)          # target -> model -> loss -> DmResult
    delta: dict = field(default_factory=dict)       # target -> model -> loss -> float

    def to_json_dict(self) -> dict:
        return {
            "ref_model": self.ref_model,
            "stats": {t: {m: asdict(s) for m, s in by_model.items()}
                      for t, by_model in self.stats.items()},
            "dm": {t: {m: {k: asdict(r) for k, r in by_loss.items()}
                       for m, by_loss in by_model.items()}
                   for t, by_model in self.dm.items()},
            "delta_pct": self.delta,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def target_table(self, target: str) -> tuple[list[str], list[list[str]]]:
        """Rows of a statistics-by-model table for one target."""
        models = list(self.stats[target])
        rows = []
        fmt = lambda v: "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))
        for stat in ("bias", "rmse", "mae", "corr", "ar1", "ar10", "ar22",
                     "mean", "var", "skew", "kurt"):
            rows.append([stat] + [fmt(getattr(self.stats[target][m], stat)) for m in models])
        for loss in LOSS_KINDS:
            rows.append([f"dm_{loss}"]
                        + [fmt(self.dm[target][m][loss].stat) if m in self.dm.get(target, {}) else ""
                           for m in models])
            rows.append([f"dm_{loss}_pvalue"]
                        + [fmt(self.dm[target][m][loss].p_value) if m in self.dm.get(target, {}) else ""
                           for m in models])
            rows.append([f"delta_pct_{loss}"]
                        + [fmt(self.delta[target][m][loss]) if m in self.delta.get(target, {}) else ""
                           for m in models])
        return models, rows

    def save_csv(self, path, target: str) -> None:
        models, rows = self.target_table(target)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["statistic"] + models)
            writer.writerows(rows)


def build_report(model_series: dict, market_series: dict, ref_model: str,
                 bandwidth: int = 42, excess_kurtosis: bool = True) -> EvalReport:
    """Score every model against the market on every target.

    ``model_series[target][model]`` and ``market_series[target]`` are
    aligned arrays.  DM statistics and loss reductions are computed
    against ``ref_model`` with squared and absolute losses.
    """
    report = EvalReport(ref_model=ref_model)
    for target, by_model in model_series.items():
        market = np.asarray(market_series[target], dtype=float)
        if ref_model not in by_model:
            raise ValueError(f"reference model {ref_model!r} missing for target {target!r}")
        report.stats[target] = {m: error_stats(v, market, excess_kurtosis)
                                for m, v in by_model.items()}
        e_ref = np.asarray(by_model[ref_model], dtype=float) - market
        report.dm[target] = {}
        report.delta[target] = {}
        for m, v in by_model.items():
            if m == ref_model:
                continue
            e_m = np.asarray(v, dtype=float) - market
            report.dm[target][m] = {}
            report.delta[target][m] = {}
            for loss in LOSS_KINDS:
                report.dm[target][m][loss] = dm_test(loss_diff(e_m, e_ref, loss), bandwidth)
            s_m, s_ref = report.stats[target][m], report.stats[target][ref_model]
            report.delta[target][m]["squared"] = delta_pct(s_m.rmse, s_ref.rmse)
            report.delta[target][m]["absolute"] = delta_pct(s_m.mae, s_ref.mae)
    return report
