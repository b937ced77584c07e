"""Command-line front end: reproducible runs driven by an INI config file.

Every command writes its artifacts plus a manifest (config hash, package
and library versions, seed, thread count) under the output directory.
Exit codes: 2 for configuration problems, 1 for numeric or estimation
failures.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import os
import platform
import sys
import time

import click
import numpy as np

from rgvix import __version__
from rgvix._backend import BACKEND
from rgvix.data import load_csv
from rgvix.errors import RgvixError
from rgvix.estimation import FitOptions, estimate, robust_se, rolling_backtest
from rgvix.evaluation import build_report, dm_test, loss_diff
from rgvix.filters import default_h_init, run_filter
from rgvix.params import FAMILIES, param_names, params_from_dict
from rgvix.riskneutral import moment_report
from rgvix.simulation import SimConfig, cumret_moments, density_grid
from rgvix.vix import price_series, priced_series_to_csv
from rgvix.vrp import build_vrp_series, har_annvol_series, market_annvol_martingale

DEFAULT_CONFIG = """\
[data]
csv =
date_col = date
return_col = ret
rv_col = rv
vix_col = vix
overnight_col = overnight
rv_scale = 1.0
risk_free_rate = 0.0

[estimate]
models = rg
error_spec = additive
n_starts = 5
seed = 0
vix_weight = 1.0
min_obs = 100
; optional JSON file {family: {param: value, ...}} to skip optimization
params_json =

[backtest]
window = 750
refit_every = 22
; blank start_index means the first date with a full window of history
start_index =
reference = rg

[vrp]
market = martingale
har_window = 750

[simulate]
family = rg
measure = P
n_paths = 100000
n_days = 250
burn_in = 750
horizons = 22,125,250
density_horizon = 125
n_bins = 100

[evaluate]
dm_bandwidth = 42

[output]
dir = out
"""


class ConfigError(click.ClickException):
    exit_code = 2


def _load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cfg.read_string(DEFAULT_CONFIG)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                cfg.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return cfg


def _config_dict(cfg: configparser.ConfigParser) -> dict:
    return {s: dict(cfg.items(s)) for s in cfg.sections()}


def _load_series(cfg, ctx):
    path = cfg.get("data", "csv")
    if not path:
        raise ConfigError("no input data: set [data] csv in the config")
    if not os.path.exists(path):
        raise ConfigError(f"data file not found: {path}")
    schema = {
        "date": cfg.get("data", "date_col"),
        "log_return": cfg.get("data", "return_col"),
        "realized_measure": cfg.get("data", "rv_col"),
        "vix": cfg.get("data", "vix_col"),
        "overnight_return": cfg.get("data", "overnight_col"),
    }
    try:
        return load_csv(path, schema=schema,
                        rv_scale=cfg.getfloat("data", "rv_scale"),
                        risk_free_rate=cfg.getfloat("data", "risk_free_rate"))
    except RgvixError as exc:
        raise ConfigError(f"cannot load {path}: {exc}") from None


def _models(cfg, override) -> list[str]:
    models = list(override) if override else [
        m.strip() for m in cfg.get("estimate", "models").split(",") if m.strip()]
    for m in models:
        if m not in FAMILIES:
            raise ConfigError(f"unknown model {m!r}; choose from {FAMILIES}")
    return models


def _fit_options(cfg, seed) -> FitOptions:
    return FitOptions(
        n_starts=cfg.getint("estimate", "n_starts"),
        seed=cfg.getint("estimate", "seed") if seed is None else seed,
        vix_weight=cfg.getfloat("estimate", "vix_weight"),
        min_obs=cfg.getint("estimate", "min_obs"),
    )


def _preset_params(cfg) -> dict:
    path = cfg.get("estimate", "params_json")
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"params_json file not found: {path}")
    with open(path) as fh:
        raw = json.load(fh)
    return {fam: params_from_dict(fam, d) for fam, d in raw.items()}


def _fit_or_preset(model, series, cfg, opts):
    preset = _preset_params(cfg)
    if model in preset:
        return None, preset[model]
    fit = estimate(model, series, cfg.get("estimate", "error_spec"), opts)
    return fit, fit.params


def _manifest(out_dir, command, cfg, seed, threads, outputs):
    blob = json.dumps(_config_dict(cfg), sort_keys=True).encode()
    manifest = {
        "command": command,
        "config": _config_dict(cfg),
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "package_version": __version__,
        "backend": BACKEND,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "seed": seed,
        "threads": threads,
        "outputs": sorted(outputs),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run(ctx, worker):
    """Shared driver: load config, run, write the manifest, map errors to
    exit codes."""
    cfg = _load_config(ctx.obj["config"])
    out_dir = ctx.obj["out"] or cfg.get("output", "dir")
    os.makedirs(out_dir, exist_ok=True)
    try:
        outputs = worker(cfg, out_dir)
    except RgvixError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    _manifest(out_dir, ctx.info_name, cfg, ctx.obj["seed"], ctx.obj["threads"], outputs)
    click.echo(f"wrote {len(outputs)} file(s) to {out_dir}")


@click.group()
@click.option("--config", type=click.Path(), default=None, help="INI config file.")
@click.option("--threads", type=int, default=None, help="Worker processes (default: all cores).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--model", "models", multiple=True,
              type=click.Choice(FAMILIES), help="Model family (repeatable).")
@click.option("--error-spec", type=click.Choice(["additive", "multiplicative"]), default=None)
@click.option("--market-vrp", type=click.Choice(["martingale", "har"]), default=None)
@click.pass_context
def main(ctx, config, threads, seed, out, models, error_spec, market_vrp):
    """Volatility, VIX, and volatility-risk-premium modeling toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(config=config, threads=threads or os.cpu_count() or 1,
                   seed=seed, out=out, models=models, error_spec=error_spec,
                   market_vrp=market_vrp)


@main.group()
def config():
    """Configuration helpers."""


@config.command("init")
@click.option("--out", "path", type=click.Path(), default="rgvix.ini", show_default=True)
def config_init(path):
    """Write a config file with every knob at its default."""
    with open(path, "w") as fh:
        fh.write(DEFAULT_CONFIG)
    click.echo(f"wrote {path}")


def _apply_overrides(cfg, ctx):
    if ctx.obj["error_spec"]:
        cfg.set("estimate", "error_spec", ctx.obj["error_spec"])
    if ctx.obj["market_vrp"]:
        cfg.set("vrp", "market", ctx.obj["market_vrp"])
    if ctx.obj["seed"] is not None:
        cfg.set("estimate", "seed", str(ctx.obj["seed"]))


@main.command("estimate")
@click.pass_context
def cmd_estimate(ctx):
    """Full-sample fits; writes one JSON per model plus a parameter table."""

    def worker(cfg, out_dir):
        _apply_overrides(cfg, ctx)
        series = _load_series(cfg, ctx)
        opts = _fit_options(cfg, ctx.obj["seed"])
        outputs = []
        fits = {}
        for model in _models(cfg, ctx.obj["models"]):
            fit, params = _fit_or_preset(model, series, cfg, opts)
            if fit is None:
                continue
            fit.se = robust_se(fit, series)
            path = os.path.join(out_dir, f"fit_{model}.json")
            fit.save_json(path)
            outputs.append(path)
            fits[model] = fit
        if fits:
            path = os.path.join(out_dir, "estimate_table.csv")
            _write_param_table(path, fits)
            outputs.append(path)
        return outputs

    _run(ctx, worker)


def _write_param_table(path, fits: dict) -> None:
    models = list(fits)
    rows = []
    seen = []
    for m in models:
        for name in param_names(m):
            if name not in seen:
                seen.append(name)
    fmt = lambda v: "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))
    for name in seen:
        rows.append([name] + [fmt(getattr(fits[m].params, name, None)) for m in models])
        rows.append([f"se_{name}"] + [fmt(fits[m].se.get(name)) for m in models])
    for stat in ("ll_r", "ll_x", "ll_vix", "ll_total"):
        rows.append([stat] + [fmt(getattr(fits[m], stat)) for m in models])
    rows.append(["persistence"] + [fmt(getattr(fits[m].params, "persistence", None)) for m in models])
    rows.append(["converged"] + [str(fits[m].converged).lower() for m in models])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter"] + models)
        writer.writerows(rows)


@main.command("vix")
@click.pass_context
def cmd_vix(ctx):
    """In-sample model VIX series per model."""

    def worker(cfg, out_dir):
        _apply_overrides(cfg, ctx)
        series = _load_series(cfg, ctx).require("vix")
        opts = _fit_options(cfg, ctx.obj["seed"])
        outputs = []
        for model in _models(cfg, ctx.obj["models"]):
            _, params = _fit_or_preset(model, series, cfg, opts)
            out = run_filter(model, params, series, default_h_init(model, series))
            mv = price_series(model, params, out.h_next)
            path = os.path.join(out_dir, f"vix_{model}.csv")
            priced_series_to_csv(path, series.dates, series.vix, np.atleast_1d(mv))
            outputs.append(path)
        return outputs

    _run(ctx, worker)


@main.command("vrp")
@click.pass_context
def cmd_vrp(ctx):
    """Premium series (market and model) per model."""

    def worker(cfg, out_dir):
        _apply_overrides(cfg, ctx)
        series = _load_series(cfg, ctx).require("vix", "realized_measure")
        opts = _fit_options(cfg, ctx.obj["seed"])
        include_har = cfg.get("vrp", "market") == "har"
        outputs = []
        for model in _models(cfg, ctx.obj["models"]):
            _, params = _fit_or_preset(model, series, cfg, opts)
            out = run_filter(model, params, series, default_h_init(model, series))
            vs = build_vrp_series(model, params, series, out.h_next,
                                  include_har=include_har,
                                  har_window=cfg.getint("vrp", "har_window"))
            path = os.path.join(out_dir, f"vrp_{model}.csv")
            vs.to_csv(path)
            outputs.append(path)
        return outputs

    _run(ctx, worker)


@main.command("backtest")
@click.pass_context
def cmd_backtest(ctx):
    """Rolling out-of-sample run; emits per-model forecasts and score tables."""

    def worker(cfg, out_dir):
        _apply_overrides(cfg, ctx)
        series = _load_series(cfg, ctx).require("vix", "realized_measure")
        opts = _fit_options(cfg, ctx.obj["seed"])
        raw_start = cfg.get("backtest", "start_index").strip()
        start = int(raw_start) if raw_start else None
        window = cfg.getint("backtest", "window")
        refit = cfg.getint("backtest", "refit_every")
        models = _models(cfg, ctx.obj["models"])
        reference = cfg.get("backtest", "reference")
        if reference not in models:
            raise ConfigError(f"reference model {reference!r} not in model list {models}")
        outputs = []
        results = {}
        for model in models:
            bt = rolling_backtest(model, series, window=window, refit_every=refit,
                                  start=start, error_spec=cfg.get("estimate", "error_spec"),
                                  opts=opts, threads=ctx.obj["threads"])
            path = os.path.join(out_dir, f"backtest_{model}.csv")
            bt.to_csv(path, series)
            outputs.append(path)
            results[model] = bt
        outputs += _score_backtests(cfg, out_dir, series, results, reference)
        return outputs

    _run(ctx, worker)


def _market_annvol(cfg, series):
    if cfg.get("vrp", "market") == "har":
        return har_annvol_series(series, window=cfg.getint("vrp", "har_window"))
    return market_annvol_martingale(series)


def _score_backtests(cfg, out_dir, series, results: dict, reference: str) -> list:
    annvol = _market_annvol(cfg, series)
    some = next(iter(results.values()))
    idx = some.index
    ok = ~np.isnan(annvol[idx])
    idx = idx[ok]
    market = {
        "vix": series.vix[idx],
        "annvol": annvol[idx],
        "vrp": series.vix[idx] - annvol[idx],
    }
    model_series = {t: {} for t in market}
    for m, bt in results.items():
        sel = ok  # all results share the same schedule
        model_series["vix"][m] = bt.model_vix[sel]
        model_series["annvol"][m] = bt.p_vol[sel]
        model_series["vrp"][m] = bt.model_vrp[sel]
    report = build_report(model_series, market, reference,
                          bandwidth=cfg.getint("evaluate", "dm_bandwidth"))
    outputs = []
    path = os.path.join(out_dir, "eval_report.json")
    report.save_json(path)
    outputs.append(path)
    for target in market:
        path = os.path.join(out_dir, f"eval_{target}.csv")
        report.save_csv(path, target)
        outputs.append(path)
    return outputs


@main.command("simulate")
@click.pass_context
def cmd_simulate(ctx):
    """Cumulative-return moment curves and a density grid."""

    def worker(cfg, out_dir):
        _apply_overrides(cfg, ctx)
        preset = _preset_params(cfg)
        family = cfg.get("simulate", "family")
        if family not in preset:
            raise ConfigError("cmd simulate needs [estimate] params_json with "
                              f"parameters for family {family!r}")
        seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else cfg.getint("estimate", "seed")
        sim = SimConfig(family=family, params=preset[family],
                        measure=cfg.get("simulate", "measure"),
                        n_paths=cfg.getint("simulate", "n_paths"),
                        n_days=cfg.getint("simulate", "n_days"),
                        burn_in=cfg.getint("simulate", "burn_in"),
                        seed=seed)
        horizons = [int(h) for h in cfg.get("simulate", "horizons").split(",")]
        curve = cumret_moments(sim, horizons)
        tag = f"{family}_{sim.measure.lower()}"
        outputs = []
        path = os.path.join(out_dir, f"moments_{tag}.csv")
        curve.to_csv(path)
        outputs.append(path)
        centers, dens = density_grid(sim, cfg.getint("simulate", "density_horizon"),
                                     cfg.getint("simulate", "n_bins"))
        path = os.path.join(out_dir, f"density_{tag}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["center", "density"])
            for c, d in zip(centers, dens):
                writer.writerow([repr(float(c)), repr(float(d))])
        outputs.append(path)
        return outputs

    _run(ctx, worker)


@main.command("moments")
@click.pass_context
def cmd_moments(ctx):
    """Closed-form measure-comparison report for the dual-shock family."""

    def worker(cfg, out_dir):
        _apply_overrides(cfg, ctx)
        preset = _preset_params(cfg)
        if "rg" in preset:
            params = preset["rg"]
        else:
            series = _load_series(cfg, ctx)
            fit, params = _fit_or_preset("rg", series, cfg, _fit_options(cfg, ctx.obj["seed"]))
        rep = moment_report(params)
        outputs = []
        path = os.path.join(out_dir, "moments_report.json")
        with open(path, "w") as fh:
            json.dump(rep, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(path)
        path = os.path.join(out_dir, "moments_report.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["quantity", "value"])
            for k in sorted(rep):
                writer.writerow([k, repr(float(rep[k]))])
        outputs.append(path)
        return outputs

    _run(ctx, worker)


def _read_forecast_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = [r for r in reader]
    need = ["date", "model_vix", "p_vol", "model_vrp", "market_vix",
            "market_annvol", "market_vrp"]
    for col in need:
        if rows and col not in rows[0]:
            raise ConfigError(f"{path}: forecast file lacks column {col!r}")
    out = {}
    for r in rows:
        if any(not r[c] for c in need[1:]):
            continue
        out[r["date"]] = tuple(float(r[c]) for c in need[1:])
    return out


@main.command("dm")
@click.argument("reference", type=click.Path(exists=True))
@click.argument("alternatives", nargs=-1, required=True, type=click.Path(exists=True))
@click.pass_context
def cmd_dm(ctx, reference, alternatives):
    """Equal-accuracy tests of forecast files against a reference file.

    Files are backtest CSVs; dates present in both files are compared on
    the vix, annualized-volatility, and premium targets with squared and
    absolute losses.
    """

    def worker(cfg, out_dir):
        bandwidth = cfg.getint("evaluate", "dm_bandwidth")
        ref = _read_forecast_csv(reference)
        rows = []
        for alt_path in alternatives:
            alt = _read_forecast_csv(alt_path)
            dates = sorted(set(ref) & set(alt))
            if not dates:
                raise ConfigError(f"no overlapping dates between {reference} and {alt_path}")
            r = np.array([ref[d] for d in dates])
            a = np.array([alt[d] for d in dates])
            # columns: model_vix, p_vol, model_vrp, market_vix, market_annvol, market_vrp
            errors = {
                "vix": (a[:, 0] - a[:, 3], r[:, 0] - r[:, 3]),
                "annvol": (a[:, 1] - a[:, 4], r[:, 1] - r[:, 4]),
                "vrp": (a[:, 2] - a[:, 5], r[:, 2] - r[:, 5]),
            }
            for target, (e_alt, e_ref) in errors.items():
                for loss in ("squared", "absolute"):
                    res = dm_test(loss_diff(e_alt, e_ref, loss), bandwidth)
                    rows.append([os.path.basename(alt_path), target, loss,
                                 repr(res.stat), repr(res.p_value), len(dates)])
        path = os.path.join(out_dir, "dm_table.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alternative", "target", "loss", "dm_stat", "p_value", "n"])
            writer.writerows(rows)
        return [path]

    _run(ctx, worker)


if __name__ == "__main__":
    main()
