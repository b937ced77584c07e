"""Monte Carlo engine for all model families under both measures.

Paths are generated in fixed-size blocks, each with its own counter-based
generator keyed by (seed, block index), and normals come from inverting
uniforms, so results are reproducible and independent of scheduling.
Reductions accumulate per block in index order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from rgvix.data import ANNUAL_DAYS, MONTH_DAYS
from rgvix.errors import NumericError
from rgvix.params import EGParams, GParams, HNParams, RGParams
from rgvix.riskneutral import map_hn_lrnvr, map_hn_vd, map_rg_to_q
from rgvix.vix import annualized_percent

BLOCK_PATHS = 65536
N_JACK_GROUPS = 32

_LOGH_MIN, _LOGH_MAX = -30.0, 10.0
_H_MIN, _H_MAX = math.exp(_LOGH_MIN), math.exp(_LOGH_MAX)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
# largest fraction of overflowing paths a run may silently exclude
MAX_EXCLUDED_FRAC = 1e-4


@dataclass
class SimConfig:
    family: str
    params: object
    measure: str = "P"
    n_paths: int = 1000
    n_days: int = 250
    burn_in: int = 750
    seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.measure not in ("P", "Q"):
            raise ValueError(f"measure must be 'P' or 'Q', got {self.measure!r}")


@dataclass
class SimPaths:
    r: np.ndarray
    h: np.ndarray
    x: np.ndarray | None
    n_excluded: int


@dataclass
class MomentCurve:
    """Cross-path skewness and excess kurtosis of cumulative returns, with
    delete-a-group jackknife Monte Carlo standard errors."""

    horizons: np.ndarray
    skew: np.ndarray
    kurt: np.ndarray
    skew_se: np.ndarray
    kurt_se: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["horizon", "skew", "kurt", "skew_se", "kurt_se"])
            for j in range(len(self.horizons)):
                writer.writerow([int(self.horizons[j]), repr(float(self.skew[j])),
                                 repr(float(self.kurt[j])), repr(float(self.skew_se[j])),
                                 repr(float(self.kurt_se[j]))])


def _day_normals(seed: int, block: int, day: int, m: int, need_u: bool):
    """Shocks for one (path block, day) cell.

    The counter-based generator is keyed by the seed with the counter's
    high words set to (day, block), and each path consumes a fixed pair of
    draws, so any path's shock sequence depends only on (seed, path index)
    and normals come from inverting uniforms.
    """
    counter = np.array([0, 0, day, block], dtype=np.uint64)
    rng = np.random.Generator(
        np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF, counter=counter))
    u01 = rng.random((m, 2))
    np.clip(u01, 2.0 ** -55, None, out=u01)
    z = ndtri(u01[:, 0])
    u = ndtri(u01[:, 1]) if need_u else None
    return z, u


def _mean_abs_shifted(lam: float) -> float:
    """E|Z - lam| for Z ~ N(0,1)."""
    return _SQRT_2_OVER_PI * math.exp(-0.5 * lam * lam) + lam * (2.0 * ndtr(lam) - 1.0)


def _mean_leverage(tau1: float, tau2: float, lam: float, quad: bool) -> float:
    if quad:
        return -tau1 * lam + tau2 * lam * lam
    return -tau1 * lam + tau2 * (_mean_abs_shifted(lam) - _SQRT_2_OVER_PI)


class _Dynamics:
    """One family/measure pair: state initialization and the daily update.

    ``advance`` consumes the day's standard-normal shocks and returns
    (new_state, return_increment, h_of_day).  Under Q the return uses the
    raw shock while the variance update uses the shifted one (the
    substitution form of the measure change), so every family and leverage
    variant shares one code path.
    """

    def __init__(self, family: str, params, measure: str, rf: float = 0.0):
        self.family = family
        self.params = params
        self.measure = measure
        self.rf = rf
        self.needs_u = family == "rg"
        self.log_state = family in ("rg", "eg")
        p = params
        q_measure = measure == "Q"
        if family in ("rg", "eg"):
            quad = p.leverage == "quad"
            gs = p.gamma * p.sigma if family == "rg" else 0.0
            xi = p.xi if family == "rg" else 0.0
            shift = _mean_leverage(p.tau1, p.tau2, p.lam, quad) - gs * xi if q_measure else 0.0
            self.state0 = (p.omega + shift) / (1.0 - p.beta)
        elif family == "g":
            pi = p.beta + p.alpha * (1.0 + p.lam * p.lam) if q_measure else p.alpha + p.beta
            if pi >= 1.0:
                raise ValueError(f"variance persistence {pi} >= 1: no stationary start")
            self.state0 = p.omega / (1.0 - pi)
        elif family == "hn":
            pi = p.beta + p.alpha * (p.delta + p.lam) ** 2 if q_measure else p.persistence
            if pi >= 1.0:
                raise ValueError(f"variance persistence {pi} >= 1: no stationary start")
            self.state0 = (p.omega + p.alpha) / (1.0 - pi)
        elif family == "hnvd":
            if q_measure:
                q = map_hn_vd(p)
                self.state0 = q.long_run_variance
                self._starred = q
            else:
                if p.persistence >= 1.0:
                    raise ValueError(f"variance persistence {p.persistence} >= 1")
                self.state0 = (p.omega + p.alpha) / (1.0 - p.persistence)
        else:
            raise ValueError(f"unknown family {family!r}")
        if self.state0 <= 0 and not self.log_state:
            raise ValueError(f"nonpositive stationary variance {self.state0}")

    def init_state(self, m: int) -> np.ndarray:
        return np.full(m, self.state0)

    def advance(self, state, z, u):
        p, rf = self.params, self.rf
        q_measure = self.measure == "Q"
        if self.log_state:
            h = np.exp(state)
            sq = np.sqrt(h)
            if q_measure:
                r = rf - 0.5 * h + sq * z
                ze = z - p.lam
            else:
                r = rf + p.lam * sq - 0.5 * h + sq * z
                ze = z
            if p.leverage == "quad":
                lev = p.tau1 * ze + p.tau2 * (ze * ze - 1.0)
            else:
                lev = p.tau1 * ze + p.tau2 * (np.abs(ze) - _SQRT_2_OVER_PI)
            new = p.omega + p.beta * state + lev
            if self.family == "rg":
                ue = u - p.xi if q_measure else u
                new = new + p.gamma * p.sigma * ue
            ok = (new >= _LOGH_MIN) & (new <= _LOGH_MAX)
            return np.where(ok, new, np.nan), r, h
        h = state
        sq = np.sqrt(h)
        if self.family == "g":
            if q_measure:
                r = rf - 0.5 * h + sq * z
                ze = z - p.lam
            else:
                r = rf + p.lam * sq - 0.5 * h + sq * z
                ze = z
            new = p.omega + p.beta * h + p.alpha * h * ze * ze
        elif self.family == "hnvd" and q_measure:
            q = self._starred
            r = rf - 0.5 * h + sq * z
            d = z - q.delta * sq
            new = q.omega + q.beta * h + q.alpha * d * d
        else:  # hn under either measure, hnvd under P
            if q_measure:
                r = rf - 0.5 * h + sq * z
                ze = z - p.lam * sq
            else:
                r = rf + p.lam * h - 0.5 * h + sq * z
                ze = z
            d = ze - p.delta * sq
            new = p.omega + p.beta * h + p.alpha * d * d
        ok = (new >= _H_MIN) & (new <= _H_MAX)
        return np.where(ok, new, np.nan), r, h

    def measurement(self, state, z, u):
        """Realized-measure observation for the realized-variance family."""
        p = self.params
        if self.measure == "Q":
            z = z - p.lam
            u = u - p.xi
        dz = p.delta1 * z + p.delta2 * (z * z - 1.0)
        return np.exp(p.kappa + p.phi * state + dz + p.sigma * u)


def _blocks(n_paths: int):
    start = 0
    block = 0
    while start < n_paths:
        yield block, start, min(BLOCK_PATHS, n_paths - start)
        block += 1
        start += min(BLOCK_PATHS, n_paths - start)


def _check_excluded(n_excluded: int, n_paths: int) -> None:
    if n_excluded > MAX_EXCLUDED_FRAC * n_paths:
        raise NumericError(
            f"{n_excluded} of {n_paths} paths overflowed "
            f"(> {MAX_EXCLUDED_FRAC:.2%} allowed): parameters diverge"
        )


def simulate_paths(cfg: SimConfig) -> SimPaths:
    """Materialize (r, h, x) path arrays of shape (n_paths, n_days).

    The realized-measure column x is only produced for the
    realized-variance family.  Memory is the caller's problem; the moment
    and pricing oracles below stream instead.
    """
    dyn = _Dynamics(cfg.family, cfg.params, cfg.measure)
    n, T = cfg.n_paths, cfg.n_days
    r = np.empty((n, T))
    h = np.empty((n, T))
    x = np.empty((n, T)) if dyn.needs_u else None
    n_excluded = 0
    for block, start, m in _blocks(n):
        state = dyn.init_state(m)
        for day in range(cfg.burn_in + T):
            z, u = _day_normals(cfg.seed, block, day, m, dyn.needs_u)
            if day >= cfg.burn_in and x is not None:
                x[start:start + m, day - cfg.burn_in] = dyn.measurement(state, z, u)
            new, rday, hday = dyn.advance(state, z, u)
            if day >= cfg.burn_in:
                t = day - cfg.burn_in
                r[start:start + m, t] = rday
                h[start:start + m, t] = hday
            state = new
        n_excluded += int(np.isnan(state).sum())
    _check_excluded(n_excluded, n)
    return SimPaths(r=r, h=h, x=x, n_excluded=n_excluded)


def _jack_se(total: np.ndarray, group: np.ndarray, stat) -> tuple[float, float]:
    """Delete-a-group jackknife of ``stat`` over power-sum rows.

    ``total`` is the pooled row of sums, ``group`` the (G, k) per-group rows.
    """
    est = stat(total)
    G = group.shape[0]
    loo = np.array([stat(total - group[g]) for g in range(G)])
    se = math.sqrt((G - 1) / G * np.sum((loo - loo.mean()) ** 2))
    return est, se


def _skew_from_sums(row) -> float:
    n, s1, s2, s3, _ = row
    mu = s1 / n
    m2 = s2 / n - mu * mu
    m3 = s3 / n - 3.0 * mu * s2 / n + 2.0 * mu ** 3
    return m3 / m2 ** 1.5


def _kurt_from_sums(row) -> float:
    n, s1, s2, s3, s4 = row
    mu = s1 / n
    m2 = s2 / n - mu * mu
    m4 = s4 / n - 4.0 * mu * s3 / n + 6.0 * mu * mu * s2 / n - 3.0 * mu ** 4
    return m4 / (m2 * m2) - 3.0


def cumret_moments(cfg: SimConfig, horizons) -> MomentCurve:
    """Cross-path skewness and excess kurtosis of cumulative returns at the
    requested horizons (in days from the end of the burn-in)."""
    horizons = np.asarray(sorted(set(int(h) for h in horizons)), dtype=int)
    if horizons.size == 0 or horizons[0] < 1 or horizons[-1] > cfg.n_days:
        raise ValueError(f"horizons must lie in [1, n_days={cfg.n_days}]")
    dyn = _Dynamics(cfg.family, cfg.params, cfg.measure)
    hset = {int(hz): j for j, hz in enumerate(horizons)}
    # power sums [n, c, c^2, c^3, c^4] per jackknife group and horizon
    sums = np.zeros((N_JACK_GROUPS, len(horizons), 5))
    n_excluded = 0
    for block, start, m in _blocks(cfg.n_paths):
        state = dyn.init_state(m)
        cum = np.zeros(m)
        groups = (start + np.arange(m)) % N_JACK_GROUPS
        for day in range(cfg.burn_in + int(horizons[-1])):
            z, u = _day_normals(cfg.seed, block, day, m, dyn.needs_u)
            state, rday, _ = dyn.advance(state, z, u)
            if day >= cfg.burn_in:
                cum += rday
                j = hset.get(day - cfg.burn_in + 1)
                if j is not None:
                    alive = ~np.isnan(state) & np.isfinite(cum)
                    g = groups[alive]
                    c = cum[alive]
                    pw = np.ones_like(c)
                    sums[:, j, 0] += np.bincount(g, minlength=N_JACK_GROUPS)
                    for mom in range(1, 5):
                        pw = pw * c
                        sums[:, j, mom] += np.bincount(g, weights=pw, minlength=N_JACK_GROUPS)
        n_excluded += int(np.isnan(state).sum())
    _check_excluded(n_excluded, cfg.n_paths)

    skew = np.empty(len(horizons))
    kurt = np.empty(len(horizons))
    skew_se = np.empty(len(horizons))
    kurt_se = np.empty(len(horizons))
    for j in range(len(horizons)):
        total = sums[:, j, :].sum(axis=0)
        skew[j], skew_se[j] = _jack_se(total, sums[:, j, :], _skew_from_sums)
        kurt[j], kurt_se[j] = _jack_se(total, sums[:, j, :], _kurt_from_sums)
    return MomentCurve(horizons=horizons, skew=skew, kurt=kurt,
                       skew_se=skew_se, kurt_se=kurt_se)


def density_grid(cfg: SimConfig, horizon: int, n_bins: int):
    """Histogram density of standardized cumulative returns at one horizon.

    Returns (bin centers, densities); the densities integrate to one over
    the grid.
    """
    if n_bins < 10:
        raise ValueError("n_bins must be >= 10")
    if not 1 <= horizon <= cfg.n_days:
        raise ValueError(f"horizon must lie in [1, n_days={cfg.n_days}]")
    dyn = _Dynamics(cfg.family, cfg.params, cfg.measure)
    out = np.full(cfg.n_paths, np.nan)
    for block, start, m in _blocks(cfg.n_paths):
        state = dyn.init_state(m)
        cum = np.zeros(m)
        for day in range(cfg.burn_in + horizon):
            z, u = _day_normals(cfg.seed, block, day, m, dyn.needs_u)
            state, rday, _ = dyn.advance(state, z, u)
            if day >= cfg.burn_in:
                cum += rday
        alive = ~np.isnan(state) & np.isfinite(cum)
        vals = np.where(alive, cum, np.nan)
        out[start:start + m] = vals
    good = out[np.isfinite(out)]
    _check_excluded(cfg.n_paths - good.size, cfg.n_paths)
    std = good.std()
    if std == 0.0:
        raise NumericError("cumulative returns are degenerate; no density")
    c = (good - good.mean()) / std
    dens, edges = np.histogram(c, bins=n_bins, density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return centers, dens


def _oracle_dynamics(family: str, params, method: str) -> _Dynamics:
    if method == "direct":
        return _Dynamics(family, params, "Q")
    if method == "is":
        if family != "rg":
            raise ValueError("importance sampling reweighting needs the dual-shock family")
        return _Dynamics(family, params, "P")
    raise ValueError(f"method must be 'direct' or 'is', got {method!r}")


def mc_expected_h_path(family: str, params, h_next: float, n_paths: int,
                       seed: int = 0, horizon: int = MONTH_DAYS,
                       method: str = "direct"):
    """Monte Carlo E^Q[h_{t+k}], k = 1..horizon, from the one-day-ahead
    physical variance, with per-horizon standard errors.

    method='direct' simulates the risk-neutral dynamics; method='is'
    simulates the physical dynamics and reweights by the pricing-kernel
    product (only the dual-shock family has the second shock to reweight).
    """
    dyn = _oracle_dynamics(family, params, method)
    p = params
    h_start = float(h_next)
    if family == "hnvd" and method == "direct":
        h_start = map_hn_vd(p).h_scale * h_start
    state_val = math.log(h_start) if dyn.log_state else h_start
    sums = np.zeros(horizon)
    sq_sums = np.zeros(horizon)
    n_alive = np.zeros(horizon)
    weight_const = math.exp(-0.5 * (getattr(p, "lam", 0.0) ** 2 + getattr(p, "xi", 0.0) ** 2)) \
        if method == "is" else 1.0
    n_excluded = 0
    for block, start, m in _blocks(n_paths):
        state = np.full(m, state_val)
        w = np.ones(m)
        hk = np.full(m, h_start)
        for k in range(1, horizon + 1):
            wh = w * hk
            alive = np.isfinite(wh)
            sums[k - 1] += wh[alive].sum()
            sq_sums[k - 1] += (wh[alive] ** 2).sum()
            n_alive[k - 1] += alive.sum()
            if k == horizon:
                break
            z, u = _day_normals(seed, block, k - 1, m, dyn.needs_u)
            if method == "is":
                w = w * np.exp(-p.lam * z - p.xi * u) * weight_const
            state, _, _ = dyn.advance(state, z, u)
            hk = np.exp(state) if dyn.log_state else state
        n_excluded += int((~np.isfinite(state)).sum())
    _check_excluded(n_excluded, n_paths)
    mean = sums / n_alive
    var = sq_sums / n_alive - mean ** 2
    se = np.sqrt(np.maximum(var, 0.0) / n_alive)
    return mean, se


def mc_vix_oracle(family: str, params, h_next: float, n_paths: int,
                  seed: int = 0, horizon: int = MONTH_DAYS,
                  method: str = "direct"):
    """Simulation estimate of the model VIX with a delta-method standard
    error; the closed-form pricing formulas are validated against this."""
    dyn = _oracle_dynamics(family, params, method)
    p = params
    h_start = float(h_next)
    if family == "hnvd" and method == "direct":
        h_start = map_hn_vd(p).h_scale * h_start
    state_val = math.log(h_start) if dyn.log_state else h_start
    s_sum = 0.0
    s_sq = 0.0
    n_ok = 0
    n_excluded = 0
    for block, start, m in _blocks(n_paths):
        state = np.full(m, state_val)
        w = np.ones(m)
        hk = np.full(m, h_start)
        tot = np.zeros(m)
        for k in range(1, horizon + 1):
            tot += w * hk
            if k == horizon:
                break
            z, u = _day_normals(seed, block, k - 1, m, dyn.needs_u)
            if method == "is":
                w = w * np.exp(-p.lam * z - p.xi * u - 0.5 * (p.lam ** 2 + p.xi ** 2))
            state, _, _ = dyn.advance(state, z, u)
            hk = np.exp(state) if dyn.log_state else state
        alive = np.isfinite(tot) & np.isfinite(hk)
        s_sum += tot[alive].sum()
        s_sq += (tot[alive] ** 2).sum()
        n_ok += int(alive.sum())
        n_excluded += int((~alive).sum())
    _check_excluded(n_excluded, n_paths)
    s_mean = s_sum / n_ok
    s_var = max(s_sq / n_ok - s_mean ** 2, 0.0)
    if s_var < (1e-6 * s_mean) ** 2:
        s_var = 0.0  # cancellation dust on a degenerate ensemble
    s_se = math.sqrt(s_var / n_ok)
    factor = ANNUAL_DAYS / horizon
    vix = annualized_percent(s_mean, horizon)
    if s_se == 0.0:
        return float(vix), 0.0
    se = 100.0 * factor * s_se / (2.0 * math.sqrt(factor * s_mean))
    return float(vix), float(se)


def logh_moment_mc(params, measure: str, n_paths: int = 200, n_days: int = 5000,
                   burn_in: int = 750, seed: int = 0) -> dict:
    """Simulation oracle for the stationary log-variance moments and the
    conditional leverage correlation of the log-variance families.

    Per-path statistics give clean Monte Carlo standard errors; the
    variance uses the pooled mean so its small-sample bias is O(1/total
    days) rather than O(1/path length).
    """
    if not isinstance(params, (RGParams, EGParams)):
        raise TypeError("log-variance moments need the rg or eg family")
    family = "rg" if isinstance(params, RGParams) else "eg"
    dyn = _Dynamics(family, params, measure)
    beta = params.beta
    P = n_paths
    s_lh = np.zeros(P)
    s_lh2 = np.zeros(P)
    corr = np.zeros(P)
    done = 0
    for block, start, m in _blocks(P):
        state = dyn.init_state(m)
        a_lh = np.zeros(m)
        a_lh2 = np.zeros(m)
        a_z = np.zeros(m)
        a_z2 = np.zeros(m)
        a_w = np.zeros(m)
        a_w2 = np.zeros(m)
        a_wz = np.zeros(m)
        n_rec = 0
        for day in range(burn_in + n_days):
            z, u = _day_normals(seed, block, day, m, dyn.needs_u)
            new, _, _ = dyn.advance(state, z, u)
            if day >= burn_in:
                a_lh += state
                a_lh2 += state * state
                w = new - beta * state
                a_z += z
                a_z2 += z * z
                a_w += w
                a_w2 += w * w
                a_wz += w * z
                n_rec += 1
            state = new
        if np.isnan(state).any():
            raise NumericError("a path overflowed while sampling stationary moments")
        s_lh[start:start + m] = a_lh
        s_lh2[start:start + m] = a_lh2
        cov = a_wz / n_rec - (a_w / n_rec) * (a_z / n_rec)
        vw = a_w2 / n_rec - (a_w / n_rec) ** 2
        vz = a_z2 / n_rec - (a_z / n_rec) ** 2
        corr[start:start + m] = cov / np.sqrt(vw * vz)
        done = n_rec
    mean_p = s_lh / done
    mu = float(mean_p.mean())
    var_p = s_lh2 / done - 2.0 * mu * mean_p + mu * mu
    return {
        "mean": mu,
        "mean_se": float(mean_p.std(ddof=1) / math.sqrt(P)),
        "var": float(var_p.mean()),
        "var_se": float(var_p.std(ddof=1) / math.sqrt(P)),
        "corr": float(corr.mean()),
        "corr_se": float(corr.std(ddof=1) / math.sqrt(P)),
    }
