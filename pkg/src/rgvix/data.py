"""Loading, validation, and windowing of the daily market series.

Internal units are canonical: decimal daily log returns, daily variances
for the realized measure, and annualized percent for the VIX.  Trading-day
arithmetic is positional (row index), never calendar arithmetic.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from rgvix.errors import DataError, SchemaError

ANNUAL_DAYS = 252
MONTH_DAYS = 22

DEFAULT_SCHEMA = {
    "date": "date",
    "log_return": "ret",
    "realized_measure": "rv",
    "vix": "vix",
    "overnight_return": "overnight",
}


class ObservationRow(NamedTuple):
    date: _dt.date
    log_return: float
    realized_measure: float | None
    overnight_return: float
    vix: float | None


@dataclass(frozen=True)
class MarketSeries:
    """Date-aligned daily series, immutable after construction.

    ``realized_measure``, ``overnight_return``, and ``vix`` may be None in
    memory (the GARCH-family filters only need returns); operations that
    require a column raise when it is missing.  The CSV loader always
    populates returns, realized measure, and VIX.
    """

    log_return: np.ndarray
    realized_measure: np.ndarray | None = None
    overnight_return: np.ndarray | None = None
    vix: np.ndarray | None = None
    dates: np.ndarray | None = None
    risk_free_rate: float = 0.0

    def __post_init__(self):
        ret = np.ascontiguousarray(np.asarray(self.log_return, dtype=float))
        object.__setattr__(self, "log_return", ret)
        n = ret.shape[0]
        for name in ("realized_measure", "overnight_return", "vix"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.ascontiguousarray(np.asarray(arr, dtype=float))
            if arr.shape[0] != n:
                raise DataError(f"{name} has length {arr.shape[0]}, expected {n}")
            object.__setattr__(self, name, arr)
        if self.dates is None:
            object.__setattr__(self, "dates", None)
        else:
            d = np.asarray(self.dates, dtype="datetime64[D]")
            if d.shape[0] != n:
                raise DataError(f"dates has length {d.shape[0]}, expected {n}")
            object.__setattr__(self, "dates", d)
        self._validate()
        for name in ("log_return", "realized_measure", "overnight_return", "vix", "dates"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def _validate(self):
        if not np.all(np.isfinite(self.log_return)):
            i = int(np.flatnonzero(~np.isfinite(self.log_return))[0])
            raise DataError(f"non-finite return at {self.label(i)}")
        if self.realized_measure is not None:
            bad = ~(np.isfinite(self.realized_measure) & (self.realized_measure > 0))
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise DataError(
                    f"realized measure must be finite and > 0; offending row {self.label(i)} "
                    f"(value {self.realized_measure[i]!r})"
                )
        if self.vix is not None:
            bad = ~(np.isfinite(self.vix) & (self.vix > 0))
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise DataError(
                    f"vix must be finite and > 0; offending row {self.label(i)} "
                    f"(value {self.vix[i]!r})"
                )
        if self.overnight_return is not None and not np.all(np.isfinite(self.overnight_return)):
            i = int(np.flatnonzero(~np.isfinite(self.overnight_return))[0])
            raise DataError(f"non-finite overnight return at {self.label(i)}")
        if self.dates is not None and self.dates.shape[0] > 1:
            if not np.all(np.diff(self.dates).astype(int) > 0):
                i = int(np.flatnonzero(np.diff(self.dates).astype(int) <= 0)[0]) + 1
                raise DataError(f"dates must be strictly increasing; offending row {self.label(i)}")

    def __len__(self) -> int:
        return int(self.log_return.shape[0])

    def label(self, i: int) -> str:
        """Human-readable identifier of row ``i`` for error messages."""
        if self.dates is not None:
            return str(self.dates[i])
        return f"index {i}"

    def row(self, i: int) -> ObservationRow:
        return ObservationRow(
            date=self.dates[i].astype(_dt.date) if self.dates is not None else None,
            log_return=float(self.log_return[i]),
            realized_measure=None if self.realized_measure is None else float(self.realized_measure[i]),
            overnight_return=0.0 if self.overnight_return is None else float(self.overnight_return[i]),
            vix=None if self.vix is None else float(self.vix[i]),
        )

    def window(self, start: int, stop: int) -> "MarketSeries":
        """Positional slice [start, stop)."""
        if not (0 <= start < stop <= len(self)):
            raise ValueError(f"window [{start}, {stop}) out of range for length {len(self)}")
        pick = lambda a: None if a is None else a[start:stop].copy()
        return MarketSeries(
            log_return=self.log_return[start:stop].copy(),
            realized_measure=pick(self.realized_measure),
            overnight_return=pick(self.overnight_return),
            vix=pick(self.vix),
            dates=pick(self.dates),
            risk_free_rate=self.risk_free_rate,
        )

    def with_risk_free_rate(self, r: float) -> "MarketSeries":
        return replace(self, risk_free_rate=float(r))

    def require(self, *names: str) -> "MarketSeries":
        for name in names:
            if getattr(self, name) is None:
                raise DataError(f"series has no {name} column, required for this operation")
        return self


def build_rvcc(series: MarketSeries) -> np.ndarray:
    """Whole-day variance proxy: realized measure plus squared overnight return."""
    series.require("realized_measure")
    if series.overnight_return is None:
        return series.realized_measure.copy()
    return series.realized_measure + series.overnight_return ** 2


def annualized_vol(rvcc_window: Sequence[float]) -> float:
    """Annualized percent volatility of one 22-day window of daily variances."""
    w = np.asarray(rvcc_window, dtype=float)
    if w.shape != (MONTH_DAYS,):
        raise ValueError(f"window must hold exactly {MONTH_DAYS} values, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("window values must be >= 0")
    return 100.0 * math.sqrt((ANNUAL_DAYS / MONTH_DAYS) * float(w.sum()))


def trailing_annualized_vol(rvcc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Annualized vol of the trailing 22-day window ending at each date.

    Returns (indices, values); dates with fewer than 22 trailing values are
    skipped.
    """
    rvcc = np.asarray(rvcc, dtype=float)
    n = rvcc.shape[0]
    if n < MONTH_DAYS:
        return np.empty(0, dtype=int), np.empty(0)
    csum = np.concatenate([[0.0], np.cumsum(rvcc)])
    sums = csum[MONTH_DAYS:] - csum[:-MONTH_DAYS]
    idx = np.arange(MONTH_DAYS - 1, n)
    return idx, 100.0 * np.sqrt((ANNUAL_DAYS / MONTH_DAYS) * sums)


def _parse_float(text: str, what: str, line_no: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"line {line_no}: cannot parse {what} from {text!r}") from None


def load_csv(path, schema: dict | None = None, rv_scale: float = 1.0,
             risk_free_rate: float = 0.0) -> MarketSeries:
    """Load a daily market series from CSV.

    ``schema`` maps the canonical field names (date, log_return,
    realized_measure, vix, overnight_return) to column names in the file;
    the overnight column is optional.  ``rv_scale`` multiplies the realized
    measure once at ingestion (e.g. 1e-4 for data distributed in percent^2)
    so a single variance unit is used internally.  Rows are sorted by date.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [c.strip() for c in header]
        cols = {}
        for canonical in ("date", "log_return", "realized_measure", "vix"):
            name = schema[canonical]
            if name not in header:
                raise SchemaError(f"{path}: required column {name!r} ({canonical}) not in header {header}")
            cols[canonical] = header.index(name)
        overnight_col = None
        name = schema.get("overnight_return")
        if name and name in header:
            overnight_col = header.index(name)

        dates, rets, rvs, vixs, overnights = [], [], [], [], []
        for line_no, rowvals in enumerate(reader, start=2):
            if not rowvals or all(not c.strip() for c in rowvals):
                continue
            raw_date = rowvals[cols["date"]].strip()
            try:
                date = _dt.date.fromisoformat(raw_date)
            except ValueError:
                raise DataError(f"line {line_no}: cannot parse ISO date from {raw_date!r}") from None
            dates.append(date)
            rets.append(_parse_float(rowvals[cols["log_return"]], "return", line_no))
            rvs.append(_parse_float(rowvals[cols["realized_measure"]], "realized measure", line_no) * rv_scale)
            vixs.append(_parse_float(rowvals[cols["vix"]], "vix", line_no))
            if overnight_col is not None:
                overnights.append(_parse_float(rowvals[overnight_col], "overnight return", line_no))

    if not dates:
        raise DataError(f"{path}: no data rows")
    order = np.argsort(np.asarray(dates, dtype="datetime64[D]"), kind="stable")
    if len(set(dates)) != len(dates):
        dup = sorted(d for d in set(dates) if dates.count(d) > 1)[0]
        raise DataError(f"duplicate date {dup}")
    take = lambda xs: np.asarray(xs, dtype=float)[order]
    return MarketSeries(
        log_return=take(rets),
        realized_measure=take(rvs),
        overnight_return=take(overnights) if overnights else None,
        vix=take(vixs),
        dates=np.asarray(dates, dtype="datetime64[D]")[order],
        risk_free_rate=risk_free_rate,
    )


def save_csv(series: MarketSeries, path, schema: dict | None = None) -> None:
    """Write a series back to CSV (input schema plus derived rvcc/annvol columns).

    Floats are written with shortest round-trip formatting, so
    load_csv(save_csv(s)) reproduces s exactly.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    series.require("realized_measure", "vix")
    rvcc = build_rvcc(series)
    idx, annvol = trailing_annualized_vol(rvcc)
    annvol_full = np.full(len(series), np.nan)
    annvol_full[idx] = annvol
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [schema["date"], schema["log_return"], schema["realized_measure"], schema["vix"]]
        has_overnight = series.overnight_return is not None
        if has_overnight:
            header.append(schema["overnight_return"])
        header += ["rvcc", "annvol"]
        writer.writerow(header)
        for i in range(len(series)):
            row = [
                str(series.dates[i]) if series.dates is not None else str(i),
                repr(float(series.log_return[i])),
                repr(float(series.realized_measure[i])),
                repr(float(series.vix[i])),
            ]
            if has_overnight:
                row.append(repr(float(series.overnight_return[i])))
            row.append(repr(float(rvcc[i])))
            row.append("" if math.isnan(annvol_full[i]) else repr(float(annvol_full[i])))
            writer.writerow(row)
