"""Market-data ingestion, series preparation, and synthetic stream generators.

Input files
-----------
Market CSV (hourly, UTC, comma-separated, decimal point):

    timestamp,spot,up_reg,down_reg,
    onshore_dk1_real,onshore_dk1_fc,offshore_dk1_real,offshore_dk1_fc,
    onshore_dk2_real,onshore_dk2_fc,offshore_dk2_real,offshore_dk2_fc

Prices are currency/MWh, wind series MWh. Rows with missing price or wind
values are dropped and counted, as are rows whose derived penalties are
corrupted beyond the rounding clamp. Unparseable rows are an error.

Capacity table CSV:

    from,zone,technology,capacity_mw

One row per capacity epoch; a series value at time t is scaled by the most
recent epoch covering t.

Stream CSV (the generator's own export format):

    t,energy,psi_plus,psi_minus,x0[,x1,...]
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import MarketPrices, PenaltyPair, Sample, penalties_from_prices
from .errors import DataError

logger = logging.getLogger(__name__)

MARKET_CSV_COLUMNS = (
    "timestamp",
    "spot",
    "up_reg",
    "down_reg",
    "onshore_dk1_real",
    "onshore_dk1_fc",
    "offshore_dk1_real",
    "offshore_dk1_fc",
    "onshore_dk2_real",
    "onshore_dk2_fc",
    "offshore_dk2_real",
    "offshore_dk2_fc",
)

CAPACITY_CSV_COLUMNS = ("from", "zone", "technology", "capacity_mw")

WIND_SERIES = ("onshore_dk1", "offshore_dk1", "onshore_dk2", "offshore_dk2")


@dataclass(frozen=True)
class RawMarketRecord:
    """One parsed market CSV row."""

    timestamp: datetime
    spot: float
    up_reg: float
    down_reg: float
    onshore_dk1_real: float
    onshore_dk1_fc: float
    offshore_dk1_real: float
    offshore_dk1_fc: float
    onshore_dk2_real: float
    onshore_dk2_fc: float
    offshore_dk2_real: float
    offshore_dk2_fc: float

    @property
    def prices(self) -> MarketPrices:
        return MarketPrices(forward=self.spot, up_reg=self.up_reg, down_reg=self.down_reg)


def _parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def load_market_csv(path) -> list[RawMarketRecord]:
    """Parse a market CSV into timestamp-sorted records.

    Rows with missing values are dropped (count logged); rows whose derived
    penalties are corrupted beyond the rounding clamp are dropped too.
    A wrong header or an unparseable row raises DataError with the line
    number; non-hourly spacing is only warned about.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        if tuple(h.strip() for h in header) != MARKET_CSV_COLUMNS:
            raise DataError(
                f"{path}: malformed header {header!r}, expected {','.join(MARKET_CSV_COLUMNS)}"
            )
        records: list[RawMarketRecord] = []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(MARKET_CSV_COLUMNS):
                raise DataError(f"{path}:{lineno}: expected {len(MARKET_CSV_COLUMNS)} fields, got {len(row)}")
            if any(not cell.strip() for cell in row):
                dropped += 1
                continue
            try:
                ts = _parse_timestamp(row[0].strip())
                values = [float(cell) for cell in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparseable row: {exc}") from exc
            record = RawMarketRecord(ts, *values)
            try:
                penalties_from_prices(record.prices)
            except DataError:
                dropped += 1
                continue
            records.append(record)
    records.sort(key=lambda r: r.timestamp)
    if dropped:
        logger.info("%s: dropped %d rows with missing or corrupted values", path, dropped)
    hour = timedelta(hours=1)
    gaps = sum(
        1 for a, b in zip(records, records[1:]) if b.timestamp - a.timestamp != hour
    )
    if gaps:
        logger.warning("%s: %d non-hourly gaps in the timestamp sequence", path, gaps)
    return records


def load_capacity_csv(path) -> dict[tuple[str, str], list[tuple[datetime, float]]]:
    """Parse a capacity table into per-(zone, technology) epoch lists."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        if tuple(h.strip() for h in header) != CAPACITY_CSV_COLUMNS:
            raise DataError(
                f"{path}: malformed header {header!r}, expected {','.join(CAPACITY_CSV_COLUMNS)}"
            )
        epochs: dict[tuple[str, str], list[tuple[datetime, float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                ts = _parse_timestamp(row[0].strip())
                capacity = float(row[3])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: unparseable row: {exc}") from exc
            epochs.setdefault((row[1].strip(), row[2].strip()), []).append((ts, capacity))
    for key in epochs:
        epochs[key].sort(key=lambda e: e[0])
    return epochs


def normalize_capacity(
    values: Sequence[float],
    timestamps: Sequence[datetime],
    epochs: Sequence[tuple[datetime, float]],
) -> np.ndarray:
    """Rescale a series to the 0..100 MW reference plant.

    Each value is multiplied by 100 / capacity of the epoch covering its
    timestamp; values exceeding 100 after scaling (data noise) are clamped
    and counted.
    """
    values = np.asarray(values, dtype=float)
    if len(values) != len(timestamps):
        raise DataError("values and timestamps must be aligned")
    epochs = sorted(epochs, key=lambda e: e[0])
    if not epochs:
        raise DataError("no capacity epochs supplied")
    starts = [e[0] for e in epochs]
    caps = [e[1] for e in epochs]
    out = np.empty_like(values)
    for i, ts in enumerate(timestamps):
        idx = np.searchsorted(np.asarray(starts), ts, side="right") - 1
        if idx < 0:
            raise DataError(f"timestamp {ts} precedes every capacity epoch")
        out[i] = values[i] * 100.0 / caps[idx]
    over = int(np.sum(out > 100.0))
    if over:
        logger.info("normalize_capacity: clamped %d values above 100", over)
        out = np.minimum(out, 100.0)
    return out


def enhance_forecast(
    raw_forecast: Sequence[float], realized: Sequence[float], train_len: int
) -> np.ndarray:
    """Upgrade a day-ahead forecast to hour-ahead quality with a linear model.

    Regresses the realization on [1, raw forecast, three lags of the
    realization] over the first train_len hours, then applies the frozen
    coefficients causally to the rest of the series. The first three hours
    (no lags available) fall back to the raw forecast.
    """
    raw = np.asarray(raw_forecast, dtype=float)
    real = np.asarray(realized, dtype=float)
    if raw.shape != real.shape:
        raise DataError("forecast and realized series must be aligned")
    if train_len < 24:
        raise DataError(f"train_len must be at least 24 hours, got {train_len}")
    if train_len > len(raw):
        raise DataError("train_len exceeds the series length")

    n_lags = 3

    def design(lo: int, hi: int) -> np.ndarray:
        rows = np.arange(lo, hi)
        cols = [np.ones(len(rows)), raw[rows]]
        cols.extend(real[rows - k] for k in range(1, n_lags + 1))
        return np.column_stack(cols)

    A = design(n_lags, train_len)
    y = real[n_lags:train_len]
    gram = A.T @ A + 1e-8 * np.eye(A.shape[1])
    try:
        beta = np.linalg.solve(gram, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise DataError(f"rank-deficient forecast design: {exc}") from exc
    if not np.all(np.isfinite(beta)):
        raise DataError("rank-deficient forecast design: non-finite coefficients")

    out = raw.copy()
    out[n_lags:] = design(n_lags, len(raw)) @ beta
    return out


@dataclass(frozen=True)
class FeatureSpec:
    """Ordered feature layout of the case-study vector."""

    names: tuple[str, ...] = (
        "intercept",
        "onshore_dk1_fc",
        "offshore_dk1_fc",
        "onshore_dk2_fc",
        "offshore_dk2_fc",
        "psi_plus_lag1",
        "psi_minus_lag1",
        "penalty_ratio_lag1",
    )
    ratio_epsilon: float = 1e-5

    def __post_init__(self):
        if not self.names or self.names[0] != "intercept":
            raise ValueError("the first feature must be the intercept column of ones")
        if self.ratio_epsilon <= 0:
            raise ValueError("ratio_epsilon must be positive")


def build_features(
    records: Sequence[RawMarketRecord],
    enhanced_forecasts: np.ndarray,
    realized_energy: Sequence[float],
    spec: FeatureSpec | None = None,
) -> list[Sample]:
    """Assemble hourly samples from processed series.

    Feature vector per hour: intercept, the four hour-ahead wind forecasts,
    last hour's penalties, and last hour's penalty ratio
    psi+ / (psi+ + psi- + ratio_epsilon). The first hour is unusable (no
    lagged penalties). Sample energy is the normalized DK1 onshore
    realization.
    """
    spec = spec or FeatureSpec()
    enhanced = np.asarray(enhanced_forecasts, dtype=float)
    realized = np.asarray(realized_energy, dtype=float)
    n = len(records)
    if enhanced.shape != (n, 4) or len(realized) != n:
        raise DataError(
            f"misaligned inputs: {n} records, enhanced {enhanced.shape}, realized {len(realized)}"
        )
    penalties = [penalties_from_prices(r.prices) for r in records]
    eps = spec.ratio_epsilon
    samples: list[Sample] = []
    for t in range(1, n):
        prev = penalties[t - 1]
        ratio = prev.psi_plus / (prev.psi_plus + prev.psi_minus + eps)
        x = np.concatenate(([1.0], enhanced[t], [prev.psi_plus, prev.psi_minus, ratio]))
        samples.append(Sample(energy=realized[t], penalties=penalties[t], features=x))
    return samples


@dataclass(frozen=True)
class FixedPenalties:
    psi_plus: float
    psi_minus: float


@dataclass(frozen=True)
class AlternatingPenalties:
    """Two penalty regimes swapped every `period` hours, starting with `first`."""

    period: int
    first: tuple[float, float]
    second: tuple[float, float]

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")


@dataclass(frozen=True)
class CsvPenalties:
    """Penalties derived from the prices of a market CSV, hour by hour."""

    path: str


PenaltyScheme = Union[FixedPenalties, AlternatingPenalties, CsvPenalties]


@dataclass(frozen=True)
class SynthConfig:
    """Single-feature synthetic stream: x ~ U(low, high), E = x + noise."""

    seed: int
    horizon: int
    penalties: PenaltyScheme
    feature_low: float = 10.0
    feature_high: float = 90.0
    noise_sd: float = 6.0
    capacity: float = 100.0

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.feature_low >= self.feature_high:
            raise ValueError("feature_low must be below feature_high")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")


def _scheme_penalties(scheme: PenaltyScheme, horizon: int) -> list[PenaltyPair]:
    if isinstance(scheme, FixedPenalties):
        pair = PenaltyPair(scheme.psi_plus, scheme.psi_minus)
        return [pair] * horizon
    if isinstance(scheme, AlternatingPenalties):
        a = PenaltyPair(*scheme.first)
        b = PenaltyPair(*scheme.second)
        return [a if (t // scheme.period) % 2 == 0 else b for t in range(horizon)]
    if isinstance(scheme, CsvPenalties):
        records = load_market_csv(scheme.path)
        if len(records) < horizon:
            raise DataError(
                f"penalty CSV supplies {len(records)} usable hours, need {horizon}"
            )
        return [penalties_from_prices(r.prices) for r in records[:horizon]]
    raise TypeError(f"unknown penalty scheme {scheme!r}")


def synth_stream(cfg: SynthConfig) -> list[Sample]:
    """Deterministic synthetic stream for a fixed seed.

    Two independent child generators (spawned from the seed) drive the
    feature draws and the noise, so either series can be reproduced on its
    own. The single feature doubles as the noiseless forecast; no intercept.
    Energies are clamped to the physical range, with the clamp count logged.
    """
    feat_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng_feat = np.random.default_rng(feat_seq)
    rng_noise = np.random.default_rng(noise_seq)
    x = rng_feat.uniform(cfg.feature_low, cfg.feature_high, cfg.horizon)
    energy = x + rng_noise.normal(0.0, cfg.noise_sd, cfg.horizon)
    clamped = int(np.sum((energy < 0.0) | (energy > cfg.capacity)))
    if clamped:
        logger.info("synth_stream: clamped %d energies into [0, %.6g]", clamped, cfg.capacity)
    energy = np.clip(energy, 0.0, cfg.capacity)
    penalties = _scheme_penalties(cfg.penalties, cfg.horizon)
    return [
        Sample(energy=float(energy[t]), penalties=penalties[t], features=np.array([x[t]]))
        for t in range(cfg.horizon)
    ]


def write_stream_csv(samples: Sequence[Sample], path) -> None:
    """Export a sample stream in the documented stream CSV format."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot write an empty stream")
    p = samples[0].features.shape[0]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "energy", "psi_plus", "psi_minus"] + [f"x{j}" for j in range(p)])
        for t, s in enumerate(samples):
            writer.writerow(
                [t, f"{s.energy:.12g}", f"{s.penalties.psi_plus:.12g}", f"{s.penalties.psi_minus:.12g}"]
                + [f"{v:.12g}" for v in s.features]
            )


def read_stream_csv(path) -> list[Sample]:
    """Load a stream CSV written by write_stream_csv."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        if header[:4] != ["t", "energy", "psi_plus", "psi_minus"]:
            raise DataError(f"{path}: malformed stream header {header!r}")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                energy = float(row[1])
                pair = PenaltyPair(float(row[2]), float(row[3]))
                x = np.array([float(v) for v in row[4:]])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: unparseable row: {exc}") from exc
            samples.append(Sample(energy=energy, penalties=pair, features=x))
    if not samples:
        raise DataError(f"{path}: stream file contains no samples")
    return samples
