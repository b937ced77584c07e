"""Parameter records for the five model families.

All conditional variances are daily variances of decimal log returns;
``sigma_vix`` is in VIX percent points for the additive pricing-error
specification and in log units for the multiplicative one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

FAMILIES = ("rg", "eg", "g", "hn", "hnvd")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass
class RGParams:
    """Realized-GARCH parameters plus the two risk prices.

    ``lam`` prices equity risk (per sqrt of daily variance), ``xi`` prices
    the volatility shock.  The leverage functions are quadratic by default,
    tau(z) = tau1*z + tau2*(z^2-1), with an |z| variant behind
    ``leverage="abs"``.
    """

    lam: float
    omega: float
    beta: float
    tau1: float
    tau2: float
    gamma: float
    kappa: float
    phi: float
    delta1: float
    delta2: float
    sigma: float
    xi: float
    sigma_vix: float = 1.0
    leverage: str = "quad"

    def validate(self) -> "RGParams":
        _require(abs(self.beta) < 1.0, f"|beta| < 1 required, got {self.beta}")
        _require(self.sigma > 0.0, f"sigma > 0 required, got {self.sigma}")
        _require(self.sigma_vix > 0.0, f"sigma_vix > 0 required, got {self.sigma_vix}")
        _require(self.leverage in ("quad", "abs"), f"unknown leverage {self.leverage!r}")
        return self

    def check_signs(self) -> list[str]:
        """Warn (never fail) when signs deviate from the usual conventions.

        The conventions guarantee a stationary volatility process, positive
        equity premium, negative volatility premium, and a leverage effect;
        deviations can still be legitimate estimates.
        """
        issues = []
        for name, want_pos in (
            ("lam", True), ("gamma", True), ("sigma", True), ("tau2", True),
            ("delta2", True), ("xi", False), ("tau1", False), ("delta1", False),
        ):
            v = getattr(self, name)
            if (v <= 0) if want_pos else (v >= 0):
                issues.append(f"{name}={v:g} has an unconventional sign")
        for msg in issues:
            warnings.warn(msg, stacklevel=2)
        return issues

    @property
    def sigma2(self) -> float:
        return self.sigma * self.sigma

    @property
    def persistence(self) -> float:
        return self.beta

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EGParams:
    """EGARCH(1,1) parameters with |z| leverage."""

    lam: float
    omega: float
    beta: float
    tau1: float
    tau2: float
    sigma_vix: float = 1.0
    leverage: str = "abs"

    def validate(self) -> "EGParams":
        _require(abs(self.beta) < 1.0, f"|beta| < 1 required, got {self.beta}")
        _require(self.sigma_vix > 0.0, f"sigma_vix > 0 required, got {self.sigma_vix}")
        _require(self.leverage in ("quad", "abs"), f"unknown leverage {self.leverage!r}")
        return self

    @property
    def persistence(self) -> float:
        return self.beta

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GParams:
    """GARCH(1,1) parameters; variance recursion h' = omega + beta*h + alpha*h*z^2."""

    lam: float
    omega: float
    beta: float
    alpha: float
    sigma_vix: float = 1.0

    def validate(self) -> "GParams":
        _require(self.omega > 0.0, f"omega > 0 required, got {self.omega}")
        _require(self.alpha >= 0.0 and self.beta >= 0.0, "alpha, beta >= 0 required")
        _require(self.alpha + self.beta < 1.0, "alpha + beta < 1 required")
        _require(self.sigma_vix > 0.0, f"sigma_vix > 0 required, got {self.sigma_vix}")
        return self

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class HNParams:
    """Heston-Nandi GARCH parameters.

    The equity premium is lam*h (not lam*sqrt(h)).  ``eta`` is the variance
    risk ratio h*/h = 1/(1+2*alpha*xi) of the variance-dependent pricing
    variant and is None for the plain (one-shock) variant.
    """

    lam: float
    omega: float
    beta: float
    alpha: float
    delta: float
    sigma_vix: float = 1.0
    eta: float | None = None

    def validate(self) -> "HNParams":
        _require(self.alpha > 0.0, f"alpha > 0 required, got {self.alpha}")
        _require(self.beta >= 0.0, f"beta >= 0 required, got {self.beta}")
        _require(self.persistence < 1.0,
                 f"beta + alpha*delta^2 < 1 required, got {self.persistence}")
        _require(self.sigma_vix > 0.0, f"sigma_vix > 0 required, got {self.sigma_vix}")
        if self.eta is not None:
            _require(self.eta > 0.0, f"eta > 0 required, got {self.eta}")
        return self

    @property
    def persistence(self) -> float:
        return self.beta + self.alpha * self.delta * self.delta

    @property
    def xi(self) -> float | None:
        """Variance risk aversion implied by eta; for display only."""
        if self.eta is None:
            return None
        return (1.0 / self.eta - 1.0) / (2.0 * self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)


PARAM_CLASSES = {"rg": RGParams, "eg": EGParams, "g": GParams, "hn": HNParams,
                 "hnvd": HNParams}


def param_names(family: str) -> list[str]:
    """Names of the scalar parameters estimated for a family."""
    cls = PARAM_CLASSES[family]
    skip = {"leverage"}
    if family == "hn":
        skip.add("eta")
    names = [f.name for f in fields(cls) if f.name not in skip]
    return names


def params_from_dict(family: str, d: dict):
    cls = PARAM_CLASSES[family]
    allowed = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in d.items() if k in allowed})


def unconditional_variance(family: str, p) -> float:
    """Stationary mean of h (log-variance families: exp of mean log h)."""
    if family in ("rg", "eg"):
        return math.exp(p.omega / (1.0 - p.beta))
    if family == "g":
        return p.omega / (1.0 - p.alpha - p.beta)
    return (p.omega + p.alpha) / (1.0 - p.persistence)
