"""Tick parsing, minute-bar aggregation and the wash-trade amount treatment."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

MINUTES_PER_DAY = 1440
MS_PER_MINUTE = 60_000
MS_PER_DAY = MINUTES_PER_DAY * MS_PER_MINUTE

#: relative tolerance for quote_amount == price * base_qty
AMOUNT_RECONCILE_RTOL = 1e-6

TICK_COLUMNS = ("timestamp_ms", "price", "qty", "quote_amount")


class IngestError(Exception):
    """Fatal ingest failure (unreadable stream, reject budget exceeded, no price basis)."""


@dataclass(frozen=True)
class TradeTick:
    """One raw exchange trade."""

    timestamp_ms: int
    price: float
    base_qty: float
    quote_amount: float


@dataclass(frozen=True)
class TickSchema:
    """Column layout of a tick file."""

    columns: tuple[str, ...] = TICK_COLUMNS
    has_header: bool = False
    delimiter: str = ","


@dataclass
class ParseReport:
    n_lines: int = 0
    n_rejected: int = 0
    reject_reasons: dict[str, int] = field(default_factory=dict)

    def add_rejects(self, reason: str, count: int) -> None:
        if count:
            self.n_rejected += count
            self.reject_reasons[reason] = self.reject_reasons.get(reason, 0) + count


@dataclass
class DayBars:
    """One asset-day of minute bars (arrays indexed by minute)."""

    day_index: int
    close: np.ndarray
    r: np.ndarray
    amount: np.ndarray
    trade_count: np.ndarray
    treated: bool = False

    @property
    def n_minutes(self) -> int:
        return self.close.shape[0]


@dataclass(frozen=True)
class TreatmentSpec:
    """Quantile-based amount reduction: (P50, P75] scaled by q3_multiplier, above P75 by q4_multiplier."""

    q3_multiplier: float = 0.5
    q4_multiplier: float = 0.25
    enabled: bool = True

    def __post_init__(self) -> None:
        if not (0.0 <= self.q4_multiplier <= self.q3_multiplier <= 1.0):
            raise ValueError(
                f"multipliers must satisfy 0 <= q4 <= q3 <= 1, got q3={self.q3_multiplier} q4={self.q4_multiplier}"
            )


def ticks_to_frame(ticks) -> pd.DataFrame:
    """Normalize a tick container (DataFrame or iterable of TradeTick) to a DataFrame."""
    if isinstance(ticks, pd.DataFrame):
        return ticks
    rows = [(t.timestamp_ms, t.price, t.base_qty, t.quote_amount) for t in ticks]
    return pd.DataFrame(rows, columns=list(TICK_COLUMNS))


def parse_ticks(stream, schema: TickSchema = TickSchema(), max_reject_frac: float = 0.01):
    """Parse a line-delimited tick stream into a timestamp-sorted DataFrame.

    `stream` may be a path, bytes, or a file-like object. Malformed lines and
    rows with non-positive price/qty or an irreconcilable quote amount are
    rejected and counted; more than `max_reject_frac` rejected lines is fatal.
    Returns (frame, ParseReport).
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    report = ParseReport()
    try:
        raw = pd.read_csv(
            stream,
            header=0 if schema.has_header else None,
            names=list(schema.columns),
            sep=schema.delimiter,
            dtype=str,
            skip_blank_lines=True,
            comment=None,
            engine="c",
        )
    except pd.errors.EmptyDataError:
        return _empty_tick_frame(), report
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise IngestError(f"unreadable tick stream: {exc}") from exc

    report.n_lines = len(raw)
    if raw.empty:
        return _empty_tick_frame(), report

    cols = {}
    bad = np.zeros(len(raw), dtype=bool)
    for name in TICK_COLUMNS:
        vals = pd.to_numeric(raw[name], errors="coerce")
        bad |= vals.isna().to_numpy()
        cols[name] = vals.to_numpy(dtype=np.float64)
    report.add_rejects("malformed", int(bad.sum()))

    ok = ~bad
    nonpos = ok & ((cols["price"] <= 0) | (cols["qty"] <= 0) | (cols["quote_amount"] <= 0))
    report.add_rejects("non_positive", int(nonpos.sum()))
    ok &= ~nonpos

    mismatch = ok & (
        np.abs(cols["quote_amount"] - cols["price"] * cols["qty"])
        > AMOUNT_RECONCILE_RTOL * np.abs(cols["quote_amount"])
    )
    report.add_rejects("amount_mismatch", int(mismatch.sum()))
    ok &= ~mismatch

    if report.n_lines and report.n_rejected > max_reject_frac * report.n_lines:
        raise IngestError(
            f"rejected {report.n_rejected}/{report.n_lines} lines "
            f"(> {max_reject_frac:.2%}): {report.reject_reasons}"
        )

    frame = pd.DataFrame(
        {
            "timestamp_ms": cols["timestamp_ms"][ok].astype(np.int64),
            "price": cols["price"][ok],
            "qty": cols["qty"][ok],
            "quote_amount": cols["quote_amount"][ok],
        }
    )
    frame = frame.sort_values("timestamp_ms", kind="stable", ignore_index=True)
    if report.n_rejected:
        log.debug("parse_ticks rejected %d/%d lines: %s", report.n_rejected, report.n_lines, report.reject_reasons)
    return frame, report


def _empty_tick_frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "timestamp_ms": np.array([], dtype=np.int64),
            "price": np.array([], dtype=np.float64),
            "qty": np.array([], dtype=np.float64),
            "quote_amount": np.array([], dtype=np.float64),
        }
    )


def build_minute_bars(ticks, day_start_ms: int, day_index: int = 0, seed_price: float | None = None) -> DayBars:
    """Aggregate one asset-day of ticks into 1440 minute bars.

    Per-minute close is the last trade price, carried forward through empty
    minutes; the first minute returns against `seed_price` (prior-day close)
    or, when absent, the first trade price of the day.
    """
    frame = ticks_to_frame(ticks)
    ts = frame["timestamp_ms"].to_numpy(dtype=np.int64)
    if ts.size == 0 and seed_price is None:
        raise IngestError(f"day {day_index}: no trades and no seed price")

    minute_idx = (ts - day_start_ms) // MS_PER_MINUTE
    if ts.size and (minute_idx.min() < 0 or minute_idx.max() >= MINUTES_PER_DAY):
        raise IngestError(f"day {day_index}: ticks outside [day_start, day_start + 24h)")

    amount = np.bincount(minute_idx, weights=frame["quote_amount"].to_numpy(), minlength=MINUTES_PER_DAY)
    trade_count = np.bincount(minute_idx, minlength=MINUTES_PER_DAY).astype(np.int64)

    close = np.full(MINUTES_PER_DAY, np.nan)
    if ts.size:
        # ticks are timestamp-sorted, so the last row per minute is the close
        prices = frame["price"].to_numpy()
        close[minute_idx] = prices  # repeated assignment keeps the last occurrence
    filled = _forward_fill(close)
    seed = float(seed_price) if seed_price is not None else float(frame["price"].iloc[0])
    filled = np.where(np.isnan(filled), seed, filled)

    prev = np.empty_like(filled)
    prev[0] = seed
    prev[1:] = filled[:-1]
    r = filled / prev - 1.0

    return DayBars(
        day_index=day_index,
        close=filled,
        r=r,
        amount=amount.astype(np.float64),
        trade_count=trade_count,
    )


def _forward_fill(values: np.ndarray) -> np.ndarray:
    # positions before the first valid entry keep NaN (index pinned at 0)
    mask = np.isnan(values)
    idx = np.where(~mask, np.arange(values.size), 0)
    np.maximum.accumulate(idx, out=idx)
    return values[idx]


def apply_wash_treatment(bars: DayBars, spec: TreatmentSpec) -> DayBars:
    """Scale the upper amount quantiles of one asset-day.

    Positive-amount minutes are ranked; amounts in (P50, P75] are multiplied by
    q3_multiplier and amounts above P75 by q4_multiplier (linear-interpolation
    percentiles, ties stay in the lower bucket). Returns are never altered.
    """
    if not spec.enabled:
        return bars
    if bars.treated:
        raise ValueError(f"day {bars.day_index}: treatment already applied")

    amount = bars.amount.copy()
    positive = amount > 0
    if positive.sum() < 4:
        log.warning("day %d: fewer than 4 positive-amount minutes, treatment skipped", bars.day_index)
        return replace(bars, amount=amount, treated=True)

    p50, p75 = np.percentile(amount[positive], [50.0, 75.0])
    q3_band = positive & (amount > p50) & (amount <= p75)
    q4_band = positive & (amount > p75)
    amount[q3_band] *= spec.q3_multiplier
    amount[q4_band] *= spec.q4_multiplier
    return replace(bars, amount=amount, treated=True)


def write_minute_bars_csv(bars: DayBars, path) -> None:
    """Optional bar export: day_index,minute_index,close,r,amount,trades."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("day_index,minute_index,close,r,amount,trades\n")
        for m in range(bars.n_minutes):
            fh.write(
                f"{bars.day_index},{m},{bars.close[m]:.12g},{bars.r[m]:.12g},"
                f"{bars.amount[m]:.12g},{bars.trade_count[m]}\n"
            )
