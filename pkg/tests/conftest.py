"""Shared fixtures: reference parameter sets (full-sample S&P 500 2004-2018
estimates) and simulated datasets."""

import numpy as np
import pytest

from rgvix.data import MarketSeries
from rgvix.params import EGParams, GParams, HNParams, RGParams
from rgvix.riskneutral import map_rg_to_q
from rgvix.simulation import SimConfig, simulate_paths
from rgvix.vix import vix_rg

RG_SP500 = RGParams(lam=0.015, omega=-0.088, beta=0.991, tau1=-0.073,
                    tau2=0.012, gamma=0.080, kappa=0.427, phi=1.078,
                    delta1=-0.083, delta2=0.129, sigma=0.325 ** 0.5,
                    xi=-1.07, sigma_vix=2.5)
EG_SP500 = EGParams(lam=0.153, omega=-0.086, beta=0.990, tau1=-0.062,
                    tau2=0.096, sigma_vix=2.9)
G_SP500 = GParams(lam=0.305, omega=1.60e-6, beta=0.940, alpha=0.054,
                  sigma_vix=3.0)
HN_SP500 = HNParams(lam=4.518, omega=-1.44e-6, beta=0.870, alpha=3.10e-6,
                    delta=197.183, sigma_vix=3.6)
HNVD_SP500 = HNParams(lam=9.128, omega=-1.39e-6, beta=0.895, alpha=2.24e-6,
                      delta=202.167, eta=1.143, sigma_vix=3.5)

ALL_SP500 = {"rg": RG_SP500, "eg": EG_SP500, "g": G_SP500, "hn": HN_SP500,
             "hnvd": HNVD_SP500}


@pytest.fixture(scope="session")
def rg_params():
    return RG_SP500


def simulate_rg_dataset(params: RGParams, T: int, seed: int, n_sets: int = 1,
                        vix_noise: float | None = None):
    """Datasets drawn from the dual-shock model with model-consistent VIX
    plus additive pricing noise.  Returns a list of (series, h_next)."""
    cfg = SimConfig("rg", params, "P", n_paths=n_sets, n_days=T + 1,
                    burn_in=750, seed=seed)
    paths = simulate_paths(cfg)
    q = map_rg_to_q(params)
    noise = params.sigma_vix if vix_noise is None else vix_noise
    rng = np.random.default_rng(seed + 1)
    out = []
    for i in range(n_sets):
        r = paths.r[i, :T]
        x = paths.x[i, :T]
        h_next = paths.h[i, 1:T + 1]
        vix = vix_rg(q, h_next) + noise * rng.standard_normal(T)
        assert (vix > 0).all(), "synthetic VIX went nonpositive; lower the noise"
        out.append((MarketSeries(log_return=r, realized_measure=x, vix=vix), h_next))
    return out


@pytest.fixture(scope="session")
def rg_dataset_small():
    """One simulated dataset, long enough to estimate on but quick."""
    return simulate_rg_dataset(RG_SP500, T=1200, seed=101)[0]
