"""Deterministic synthetic tick-data generator with wash-trade injection.

Prices follow a per-minute geometric random walk with optional volume-backed
jumps; trades arrive per minute with lognormal sizes. All randomness comes
from counter-based Philox streams keyed by (seed, asset, day, purpose), so
output is bit-reproducible and independent of generation order.

Wash modes:
  hf_small - bursts of many small prints over a few consecutive minutes whose
             close follows a bridge returning to the clean path (momentum
             churn: large amount, drastic price points, no net drift).
  whale    - a few very large prints dropped into the day's highest-movement
             minutes, never setting the minute close (no price footprint).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import pandas as pd

from tickfolio.ingest import MINUTES_PER_DAY, MS_PER_DAY, MS_PER_MINUTE

log = logging.getLogger(__name__)

# Philox stream purposes; keys are (seed, asset << 24 | day << 4 | purpose)
_PURPOSE_PRICE = 0
_PURPOSE_TRADES = 1
_PURPOSE_WASH = 2
_PURPOSE_DRIFT = 3

# intra-minute timestamp layout (ms offsets): whale prints never set the
# close, hf_small prints always do
_WHALE_OFFSET = 0
_CLEAN_OFFSET_LO, _CLEAN_OFFSET_HI = 1_000, 58_999
_WASH_OFFSET_LO, _WASH_OFFSET_HI = 59_000, 59_998
_WASH_CLOSE_OFFSET = 59_999

DEFAULT_DAY0_MS = 1_577_836_800_000  # 2020-01-01T00:00:00Z


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic market. Per-asset fields accept a scalar
    or a length-n_assets sequence."""

    seed: int = 0
    n_assets: int = 10
    n_days: int = 400
    base_price: float | tuple = 100.0
    minute_vol: float = 5e-4
    drift_per_day: float | tuple = 0.0
    drift_rho: float = 0.0  # AR(1) persistence of the extra daily drift state
    drift_sigma: float = 0.0  # stationary std of that state (daily units)
    # volume-backed price jumps (legit extreme-liquidity events)
    jump_intensity: float | tuple = 0.0  # expected jumps per day
    jump_mean_frac: float = 0.0  # jump mean as a fraction of the jump std
    jump_vol_mult: float = 30.0  # jump std, in minute_vol units
    jump_amount_mult: float = 400.0  # jump-minute amount multiple
    # trade flow
    base_arrival_rate: float = 3.0  # trades per minute
    quote_per_trade: float = 1000.0  # mean quote amount per trade
    qty_sigma: float = 0.8  # lognormal dispersion of trade sizes
    micro_noise: float = 5e-5  # per-print price jitter
    # wash injection
    wash_mode: str = "none"  # none | hf_small | whale
    wash_burst_rate: float = 35.0  # hf_small bursts per day
    wash_burst_len: int = 4  # consecutive minutes per burst
    wash_volume_fraction: float = 1.9  # injected volume / clean daily volume
    wash_trades_per_minute: float = 60.0  # small prints per burst minute
    wash_price_jitter_mult: float = 5.0  # burst bridge step std, minute_vol units
    whale_rate: float = 2.0  # whale prints per day
    whale_volume_multiple: float = 300.0  # whale amount / clean minute amount
    day0_ms: int = DEFAULT_DAY0_MS

    def __post_init__(self) -> None:
        if self.wash_mode not in ("none", "hf_small", "whale"):
            raise ValueError(f"unknown wash_mode {self.wash_mode!r}")
        for name in ("minute_vol", "base_arrival_rate", "quote_per_trade", "wash_burst_rate",
                     "wash_volume_fraction", "wash_trades_per_minute", "whale_rate",
                     "whale_volume_multiple"):
            if np.min(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_assets < 1 or self.n_days < 1:
            raise ValueError("n_assets and n_days must be positive")

    def asset_names(self) -> list[str]:
        return [f"A{i:02d}" for i in range(self.n_assets)]

    def per_asset(self, name: str) -> np.ndarray:
        value = getattr(self, name)
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim == 0:
            return np.full(self.n_assets, float(arr))
        if arr.shape != (self.n_assets,):
            raise ValueError(f"{name} must be scalar or length {self.n_assets}")
        return arr


def _stream(spec: SynthSpec, asset: int, day: int, purpose: int) -> np.random.Generator:
    key = np.array([spec.seed & 0xFFFFFFFFFFFFFFFF, (asset << 24) | (day << 4) | purpose], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def daily_drift_path(spec: SynthSpec, asset: int) -> np.ndarray:
    """Deterministic AR(1) daily drift state for one asset (one value per day)."""
    base = spec.per_asset("drift_per_day")[asset]
    if spec.drift_sigma <= 0.0:
        return np.full(spec.n_days, base)
    rng = _stream(spec, asset, 0, _PURPOSE_DRIFT)
    rho = spec.drift_rho
    innov_sd = spec.drift_sigma * math.sqrt(max(1.0 - rho * rho, 1e-12))
    shocks = rng.standard_normal(spec.n_days)
    path = np.empty(spec.n_days)
    state = spec.drift_sigma * shocks[0]
    path[0] = state
    for d in range(1, spec.n_days):
        state = rho * state + innov_sd * shocks[d]
        path[d] = state
    return base + path


def generate_clean_day(spec: SynthSpec, asset: int, day: int, prev_close: float,
                       drift: float | None = None) -> pd.DataFrame:
    """Clean tick frame for one asset-day (no wash trades)."""
    rng_p = _stream(spec, asset, day, _PURPOSE_PRICE)
    vol = spec.minute_vol
    if drift is None:
        drift = float(daily_drift_path(spec, asset)[day])
    steps = rng_p.standard_normal(MINUTES_PER_DAY) * vol + drift / MINUTES_PER_DAY

    intensity = spec.per_asset("jump_intensity")[asset] / MINUTES_PER_DAY
    jump_mask = rng_p.random(MINUTES_PER_DAY) < intensity
    n_jumps = int(jump_mask.sum())
    if n_jumps:
        jump_sd = spec.jump_vol_mult * vol
        sizes = rng_p.normal(spec.jump_mean_frac * jump_sd, jump_sd, n_jumps)
        steps[jump_mask] += sizes
    minute_close = prev_close * np.exp(np.cumsum(steps))

    rng_t = _stream(spec, asset, day, _PURPOSE_TRADES)
    counts = rng_t.poisson(spec.base_arrival_rate, MINUTES_PER_DAY)
    if n_jumps:
        # a jump always prints: its volume arrives as a burst of trades
        counts[jump_mask] += 1 + rng_t.poisson(3.0 * spec.base_arrival_rate, n_jumps)
    total = int(counts.sum())
    if total == 0:
        return _empty_frame()

    minute_of_trade = np.repeat(np.arange(MINUTES_PER_DAY), counts)
    offsets = rng_t.integers(_CLEAN_OFFSET_LO, _CLEAN_OFFSET_HI + 1, total)
    price = minute_close[minute_of_trade] * np.exp(rng_t.standard_normal(total) * spec.micro_noise)
    quote = spec.quote_per_trade * np.exp(
        rng_t.standard_normal(total) * spec.qty_sigma - 0.5 * spec.qty_sigma**2
    )
    if n_jumps:
        quote[jump_mask[minute_of_trade]] *= spec.jump_amount_mult
    qty = quote / price

    ts = spec.day0_ms + day * MS_PER_DAY + minute_of_trade * MS_PER_MINUTE + offsets
    frame = pd.DataFrame(
        {"timestamp_ms": ts.astype(np.int64), "price": price, "qty": qty, "quote_amount": price * qty}
    )
    frame.sort_values(["timestamp_ms"], kind="stable", ignore_index=True, inplace=True)
    return frame


def _empty_frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "timestamp_ms": np.array([], dtype=np.int64),
            "price": np.array([], dtype=np.float64),
            "qty": np.array([], dtype=np.float64),
            "quote_amount": np.array([], dtype=np.float64),
        }
    )


def _minute_closes_from_ticks(frame: pd.DataFrame, fallback: float) -> np.ndarray:
    minute = (frame["timestamp_ms"].to_numpy() % MS_PER_DAY) // MS_PER_MINUTE
    close = np.full(MINUTES_PER_DAY, np.nan)
    close[minute] = frame["price"].to_numpy()
    mask = np.isnan(close)
    idx = np.where(~mask, np.arange(MINUTES_PER_DAY), 0)
    np.maximum.accumulate(idx, out=idx)
    filled = close[idx]
    return np.where(np.isnan(filled), fallback, filled)


def inject_wash_trades(frame: pd.DataFrame, spec: SynthSpec, asset: int, day: int) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Add wash prints per spec.wash_mode; returns (ticks, ground-truth sidecar).

    The sidecar has one row per injected print: timestamp_ms, quote_amount, mode.
    """
    if spec.wash_mode == "none":
        raise ValueError("inject_wash_trades requires wash_mode != 'none'")
    if frame.empty:
        return frame, _truth_frame([], [], spec.wash_mode)

    rng = _stream(spec, asset, day, _PURPOSE_WASH)
    minute_close = _minute_closes_from_ticks(frame, float(frame["price"].iloc[0]))
    clean_minute_amount = float(frame["quote_amount"].sum()) / MINUTES_PER_DAY
    day_base = spec.day0_ms + day * MS_PER_DAY

    ts_list: list[np.ndarray] = []
    price_list: list[np.ndarray] = []
    quote_list: list[np.ndarray] = []

    if spec.wash_mode == "hf_small":
        n_bursts = int(rng.poisson(spec.wash_burst_rate))
        burst_len = max(1, int(spec.wash_burst_len))
        expected_minutes = max(spec.wash_burst_rate * burst_len, 1.0)
        per_minute_amount = (
            spec.wash_volume_fraction * clean_minute_amount * MINUTES_PER_DAY / expected_minutes
        )
        n_bursts = min(n_bursts, (MINUTES_PER_DAY - burst_len) // (burst_len + 1))
        starts = np.sort(rng.choice(MINUTES_PER_DAY - burst_len, size=n_bursts, replace=False)) if n_bursts else []
        used = np.zeros(MINUTES_PER_DAY, dtype=bool)
        jitter = spec.wash_price_jitter_mult * spec.minute_vol
        for start in starts:
            span = np.arange(start, start + burst_len)
            if used[span].any():
                continue
            used[span] = True
            # bridge: drastic price points inside the burst, no net drift at its end
            walk = np.cumsum(rng.standard_normal(burst_len) * jitter)
            bridge = walk - (np.arange(1, burst_len + 1) / burst_len) * walk[-1]
            for i, m in enumerate(span):
                n_prints = max(1, int(rng.poisson(spec.wash_trades_per_minute)))
                target_close = minute_close[m] * np.exp(bridge[i])
                prev_level = minute_close[m] * np.exp(bridge[i - 1]) if i else minute_close[m]
                # prints walk from the previous burst level to the new close
                frac = np.arange(1, n_prints + 1) / n_prints
                px = prev_level * (target_close / prev_level) ** frac
                px *= np.exp(rng.standard_normal(n_prints) * spec.micro_noise)
                px[-1] = target_close
                shares = rng.dirichlet(np.ones(n_prints)) if n_prints > 1 else np.ones(1)
                quotes = per_minute_amount * shares
                offs = np.sort(rng.integers(_WASH_OFFSET_LO, _WASH_OFFSET_HI + 1, n_prints))
                offs[-1] = _WASH_CLOSE_OFFSET
                ts_list.append(day_base + m * MS_PER_MINUTE + offs)
                price_list.append(px)
                quote_list.append(quotes)
    else:  # whale
        n_whales = int(rng.poisson(spec.whale_rate))
        if n_whales:
            # whales ride the day's momentum: they hit the minutes contributing
            # most to the net move, in the direction of that move
            r = np.diff(np.log(minute_close), prepend=np.log(minute_close[0]))
            aligned = r * np.sign(r.sum()) if r.sum() != 0.0 else np.abs(r)
            minutes = np.argsort(aligned)[-min(n_whales, MINUTES_PER_DAY):]
            for m in minutes:
                px = np.array([minute_close[m]])
                quotes = np.array([spec.whale_volume_multiple * clean_minute_amount])
                ts_list.append(np.array([day_base + int(m) * MS_PER_MINUTE + _WHALE_OFFSET]))
                price_list.append(px)
                quote_list.append(quotes)

    if not ts_list:
        return frame, _truth_frame([], [], spec.wash_mode)

    ts = np.concatenate(ts_list).astype(np.int64)
    price = np.concatenate(price_list)
    quote = np.concatenate(quote_list)
    wash = pd.DataFrame(
        {"timestamp_ms": ts, "price": price, "qty": quote / price, "quote_amount": quote}
    )
    merged = pd.concat([frame, wash], ignore_index=True)
    merged.sort_values(["timestamp_ms"], kind="stable", ignore_index=True, inplace=True)
    return merged, _truth_frame(ts, quote, spec.wash_mode)


def _truth_frame(ts, quote, mode: str) -> pd.DataFrame:
    ts = np.asarray(ts, dtype=np.int64)
    return pd.DataFrame(
        {
            "timestamp_ms": ts,
            "quote_amount": np.asarray(quote, dtype=np.float64),
            "mode": np.full(ts.size, mode, dtype=object),
        }
    )


def generate_asset_day(spec: SynthSpec, asset: int, day: int, prev_close: float,
                       drift: float | None = None):
    """(ticks, truth, latent end-of-day close) for one asset-day."""
    frame = generate_clean_day(spec, asset, day, prev_close, drift=drift)
    if spec.wash_mode != "none":
        frame, truth = inject_wash_trades(frame, spec, asset, day)
    else:
        truth = _truth_frame([], [], "none")
    if frame.empty:
        end_close = prev_close
    else:
        end_close = float(frame["price"].iloc[-1])
    return frame, truth, end_close


def iter_asset_days(spec: SynthSpec, asset: int):
    """Yield (day, ticks, truth, seed_price) sequentially with price continuity."""
    prev_close = float(spec.per_asset("base_price")[asset])
    drifts = daily_drift_path(spec, asset)
    for day in range(spec.n_days):
        seed_price = prev_close
        frame, truth, prev_close = generate_asset_day(spec, asset, day, prev_close, drift=float(drifts[day]))
        yield day, frame, truth, seed_price


def write_tick_csv(frame: pd.DataFrame, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ts, px, qty, amt in frame.itertuples(index=False):
            fh.write(f"{ts},{px:.12g},{qty:.12g},{amt:.12g}\n")


def generate_market(spec: SynthSpec, out_dir) -> dict:
    """Write per-asset-day tick files plus the wash ground-truth sidecars.

    Layout: <out>/ticks/<asset>/day_<d>.csv and <out>/ticks/<asset>/wash_truth.csv,
    plus <out>/universe.json describing the run. Returns the universe dict.
    """
    out = Path(out_dir)
    tick_root = out / "ticks"
    tick_root.mkdir(parents=True, exist_ok=True)
    assets = spec.asset_names()
    seeds: dict[str, list[float]] = {}
    for a_idx, asset in enumerate(assets):
        adir = tick_root / asset
        adir.mkdir(parents=True, exist_ok=True)
        truth_rows = []
        seeds[asset] = []
        for day, frame, truth, seed_price in iter_asset_days(spec, a_idx):
            seeds[asset].append(seed_price)
            write_tick_csv(frame, adir / f"day_{day:05d}.csv")
            if len(truth):
                truth_rows.append(truth)
        truth_all = pd.concat(truth_rows, ignore_index=True) if truth_rows else _truth_frame([], [], spec.wash_mode)
        with open(adir / "wash_truth.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("timestamp_ms,quote_amount,mode\n")
            for ts, amt, mode in truth_all.itertuples(index=False):
                fh.write(f"{ts},{amt:.12g},{mode}\n")
    universe = {
        "assets": assets,
        "n_days": spec.n_days,
        "day0_ms": spec.day0_ms,
        "seed": spec.seed,
        "wash_mode": spec.wash_mode,
        "seed_prices": seeds,
        "spec": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()},
    }
    with open(out / "universe.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(universe, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return universe


# ---------------------------------------------------------------------------
# bundled fixed-seed scenarios
# ---------------------------------------------------------------------------

def clean_scenario(n_assets: int = 10, n_days: int = 400, seed: int = 1128) -> SynthSpec:
    """Quiet crypto-like market: no jumps, no wash, well-mixed trade sizes."""
    return SynthSpec(seed=seed, n_assets=n_assets, n_days=n_days,
                     base_arrival_rate=4.0, qty_sigma=0.5)


def hf_small_scenario(n_assets: int = 10, n_days: int = 400, seed: int = 2202) -> SynthSpec:
    """High-frequency small-print wash regime used by the treatment tests."""
    return SynthSpec(
        seed=seed,
        n_assets=n_assets,
        n_days=n_days,
        wash_mode="hf_small",
        wash_burst_rate=35.0,
        wash_burst_len=4,
        wash_volume_fraction=1.9,
        wash_trades_per_minute=60.0,
        wash_price_jitter_mult=8.0,
    )


def whale_scenario(n_assets: int = 10, n_days: int = 400, seed: int = 2202) -> SynthSpec:
    """Few very-large-print regime; shares the hf_small seed for paired comparisons."""
    return SynthSpec(
        seed=seed,
        n_assets=n_assets,
        n_days=n_days,
        wash_mode="whale",
        whale_rate=6.0,
        whale_volume_multiple=300.0,
    )


def jump_heavy_scenario(n_assets: int = 10, n_days: int = 430, seed: int = 3303) -> SynthSpec:
    """Volume-backed extreme price jumps in half the universe on top of a
    persistent (forecastable) daily drift. Used by the portfolio tests."""
    drift = tuple(0.0012 if i < n_assets // 2 else -0.0008 for i in range(n_assets))
    intensity = tuple(0.0 if i < n_assets // 2 else 0.25 for i in range(n_assets))
    return SynthSpec(
        seed=seed,
        n_assets=n_assets,
        n_days=n_days,
        drift_per_day=drift,
        drift_rho=0.97,
        drift_sigma=0.005,
        jump_intensity=intensity,
        jump_mean_frac=0.0,
        jump_vol_mult=250.0,
        jump_amount_mult=2500.0,
    )
