"""Reproducible experiment runner: backtests, grid search, report files.

An experiment is described by one YAML document (see README for the full
schema): a data source (synthetic generator, market CSV pipeline, or a
previously exported stream), a method set drawn from {FO, OLNV, LP, LP2,
FX}, the evaluation span, and the regret reporting options. Everything is
deterministic for a fixed config and seed.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from . import batch, learner, metrics
from .core import AnchorConfig, PenaltyPair, Sample
from .geometry import box_offer
from .data import (
    AlternatingPenalties,
    CsvPenalties,
    FixedPenalties,
    SynthConfig,
    build_features,
    enhance_forecast,
    load_capacity_csv,
    load_market_csv,
    normalize_capacity,
    read_stream_csv,
    synth_stream,
    WIND_SERIES,
)
from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

KNOWN_METHODS = ("FO", "OLNV", "LP", "LP2", "FX")


@dataclass(frozen=True)
class MarketCsvSource:
    """Case-study pipeline: market CSV + capacity table -> feature stream."""

    market_path: str
    capacity_path: str
    forecast_train_len: int = 4320


@dataclass(frozen=True)
class StreamCsvSource:
    """A stream previously exported with the `synth` verb."""

    path: str
    capacity: float = 100.0


@dataclass(frozen=True)
class OlnvParams:
    """Learner hyperparameters plus the warm-up span used before evaluation."""

    eta: float = 1e-3
    mu: float = 0.7
    rho: float = 0.95
    epsilon: float = 1e-6
    mode: str = "subgradient"
    alpha: float | None = None
    anchors: tuple[float, float] = (1.0, 1.0)
    warmup_hours: int = 0
    q_init: tuple[float, ...] | None = None  # None -> default unit-on-forecast vector


@dataclass(frozen=True)
class Lp2Params:
    window: int = 4320
    refresh_every: int = 24
    wind_features: tuple[int, ...] | None = None  # None -> all features (synth) / 0..4 (csv)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    source: SynthConfig | MarketCsvSource | StreamCsvSource
    methods: tuple[str, ...]
    eval_start: int
    eval_len: int | None = None
    olnv: OlnvParams = field(default_factory=OlnvParams)
    lp_windows: tuple[int, ...] = (4320,)
    lp_refresh_every: int = 24
    lp2: Lp2Params = field(default_factory=Lp2Params)
    partition_lengths: tuple[int, ...] = ()
    static_regret_step: int | None = None
    fo_feature: int | None = None
    output_dir: str | None = None
    validation_start: int | None = None
    validation_len: int | None = None
    grid_mus: tuple[float, ...] = ()
    grid_etas: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        unknown = [m for m in self.methods if m not in KNOWN_METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {KNOWN_METHODS}")
        if self.eval_start < 0:
            raise ConfigError("evaluation start must be nonnegative")


@dataclass(frozen=True, eq=False)
class MethodResult:
    name: str
    offers: np.ndarray
    losses: np.ndarray  # per-hour deviation cost of the submitted offers
    deviation_cost: float
    improvement_pct: float | None
    decision_time_s: float
    q_trajectory: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class BacktestReport:
    experiment: str
    seed: int | None
    eval_start: int
    eval_len: int
    methods: dict[str, MethodResult]
    regret_series: dict[str, list[tuple[int, float]]]


# ---------------------------------------------------------------------------
# config parsing


def _require(mapping: Mapping, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing key '{key}' in {context}")
    return mapping[key]


def _parse_penalties(node: Mapping) -> FixedPenalties | AlternatingPenalties | CsvPenalties:
    scheme = _require(node, "scheme", "source.penalties")
    try:
        if scheme == "fixed":
            return FixedPenalties(float(node["psi_plus"]), float(node["psi_minus"]))
        if scheme == "alternating":
            first = node["first"]
            second = node["second"]
            return AlternatingPenalties(
                period=int(node.get("period", 1440)),
                first=(float(first[0]), float(first[1])),
                second=(float(second[0]), float(second[1])),
            )
        if scheme == "market_csv":
            return CsvPenalties(str(node["path"]))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid penalties section: {exc}") from exc
    raise ConfigError(f"unknown penalty scheme {scheme!r}")


def _parse_source(node: Mapping):
    kind = _require(node, "kind", "source")
    try:
        if kind == "synth":
            return SynthConfig(
                seed=int(_require(node, "seed", "source")),
                horizon=int(_require(node, "horizon", "source")),
                penalties=_parse_penalties(_require(node, "penalties", "source")),
                feature_low=float(node.get("feature_low", 10.0)),
                feature_high=float(node.get("feature_high", 90.0)),
                noise_sd=float(node.get("noise_sd", 6.0)),
                capacity=float(node.get("capacity", 100.0)),
            )
        if kind == "market_csv":
            return MarketCsvSource(
                market_path=str(_require(node, "market", "source")),
                capacity_path=str(_require(node, "capacity_table", "source")),
                forecast_train_len=int(node.get("forecast_train_len", 4320)),
            )
        if kind == "stream_csv":
            return StreamCsvSource(
                path=str(_require(node, "path", "source")),
                capacity=float(node.get("capacity", 100.0)),
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid source section: {exc}") from exc
    raise ConfigError(f"unknown source kind {kind!r}")


def _parse_olnv(node: Mapping) -> OlnvParams:
    anchors = node.get("anchors", (1.0, 1.0))
    q_init = node.get("q_init", "default")
    try:
        return OlnvParams(
            eta=float(node.get("eta", 1e-3)),
            mu=float(node.get("mu", 0.7)),
            rho=float(node.get("rho", 0.95)),
            epsilon=float(node.get("epsilon", 1e-6)),
            mode=str(node.get("mode", "subgradient")),
            alpha=None if node.get("alpha") is None else float(node["alpha"]),
            anchors=(float(anchors[0]), float(anchors[1])),
            warmup_hours=int(node.get("warmup_hours", 0)),
            q_init=None if q_init == "default" else tuple(float(v) for v in q_init),
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid olnv section: {exc}") from exc


_TOP_LEVEL_KEYS = {
    "experiment",
    "source",
    "methods",
    "evaluation",
    "olnv",
    "rolling",
    "lp2",
    "regret",
    "fo_feature",
    "output",
    "validation",
    "grid",
}


def parse_experiment_config(doc) -> ExperimentConfig:
    """Build an ExperimentConfig from a YAML path, YAML text, or a mapping."""
    if isinstance(doc, (str, Path)) and Path(doc).exists():
        with Path(doc).open() as fh:
            doc = yaml.safe_load(fh)
    elif isinstance(doc, str):
        doc = yaml.safe_load(doc)
    if not isinstance(doc, Mapping):
        raise ConfigError("experiment config must be a mapping")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    evaluation = _require(doc, "evaluation", "config")
    rolling = doc.get("rolling", {})
    regret = doc.get("regret", {})
    lp2 = doc.get("lp2", {})
    validation = doc.get("validation", {}) or {}
    grid = doc.get("grid", {}) or {}
    methods = _require(doc, "methods", "config")
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    try:
        windows = rolling.get("windows", rolling.get("window", 4320))
        if isinstance(windows, (int, float)):
            windows = [windows]
        wind_feats = lp2.get("wind_features")
        return ExperimentConfig(
            name=str(doc.get("experiment", "experiment")),
            source=_parse_source(_require(doc, "source", "config")),
            methods=tuple(methods),
            eval_start=int(_require(evaluation, "start", "evaluation")),
            eval_len=None if evaluation.get("length") is None else int(evaluation["length"]),
            olnv=_parse_olnv(doc.get("olnv", {})),
            lp_windows=tuple(int(w) for w in windows),
            lp_refresh_every=int(rolling.get("refresh_every", 24)),
            lp2=Lp2Params(
                window=int(lp2.get("window", 4320)),
                refresh_every=int(lp2.get("refresh_every", 24)),
                wind_features=None if wind_feats is None else tuple(int(i) for i in wind_feats),
            ),
            partition_lengths=tuple(int(v) for v in regret.get("partition_lengths", ())),
            static_regret_step=(
                None if regret.get("static_step") is None else int(regret["static_step"])
            ),
            fo_feature=None if doc.get("fo_feature") is None else int(doc["fo_feature"]),
            output_dir=None if doc.get("output") is None else str(doc["output"]),
            validation_start=(
                None if validation.get("start") is None else int(validation["start"])
            ),
            validation_len=(
                None if validation.get("length") is None else int(validation["length"])
            ),
            grid_mus=tuple(float(v) for v in grid.get("mus", ())),
            grid_etas=tuple(float(v) for v in grid.get("etas", ())),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc


# ---------------------------------------------------------------------------
# stream assembly


def load_stream(source) -> tuple[list[Sample], float, int]:
    """Materialize (samples, capacity, default forecast-feature index)."""
    if isinstance(source, SynthConfig):
        return synth_stream(source), source.capacity, 0
    if isinstance(source, StreamCsvSource):
        return read_stream_csv(source.path), source.capacity, 0
    if isinstance(source, MarketCsvSource):
        return _load_market_stream(source), 100.0, 1
    raise ConfigError(f"unknown source type {type(source).__name__}")


def _load_market_stream(source: MarketCsvSource) -> list[Sample]:
    records = load_market_csv(source.market_path)
    if not records:
        raise DataError(f"{source.market_path}: no usable records")
    capacities = load_capacity_csv(source.capacity_path)
    timestamps = [r.timestamp for r in records]

    def normalized(series_name: str, field_suffix: str) -> np.ndarray:
        zone = "DK1" if "dk1" in series_name else "DK2"
        tech = "Onshore" if series_name.startswith("onshore") else "Offshore"
        key = (zone, tech)
        if key not in capacities:
            raise DataError(f"capacity table lacks an entry for {key}")
        values = [getattr(r, f"{series_name}_{field_suffix}") for r in records]
        return normalize_capacity(values, timestamps, capacities[key])

    enhanced = np.column_stack(
        [
            enhance_forecast(
                normalized(name, "fc"), normalized(name, "real"), source.forecast_train_len
            )
            for name in WIND_SERIES
        ]
    )
    realized = normalized("onshore_dk1", "real")
    return build_features(records, enhanced, realized)


# ---------------------------------------------------------------------------
# backtest


def _eval_bounds(config: ExperimentConfig, total: int) -> tuple[int, int]:
    start = config.eval_start
    stop = total if config.eval_len is None else start + config.eval_len
    if not 0 <= start < stop <= total:
        raise ConfigError(
            f"evaluation span [{start}, {stop}) does not fit the {total}-hour stream"
        )
    return start, stop


def _unit_vector(dim: int, index: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise ConfigError(f"forecast feature index {index} outside dimension {dim}")
    e = np.zeros(dim)
    e[index] = 1.0
    return e


def _olnv_config(params: OlnvParams, dim: int, capacity: float, fo_feature: int) -> learner.OlnvConfig:
    if params.q_init is None:
        q_init = learner.default_q_init(dim, fo_feature)
    else:
        q_init = np.asarray(params.q_init, dtype=float)
        if q_init.shape != (dim,):
            raise ConfigError(f"q_init has dimension {q_init.shape[0]}, stream has {dim}")
    return learner.OlnvConfig(
        q_init=q_init,
        capacity=capacity,
        eta=params.eta,
        rho=params.rho,
        epsilon=params.epsilon,
        mode=params.mode,
        alpha=params.alpha,
        anchor=AnchorConfig(
            mu=params.mu, psi_bar_plus=params.anchors[0], psi_bar_minus=params.anchors[1]
        ),
    )


def _offer_losses(samples: Sequence[Sample], offers: np.ndarray) -> np.ndarray:
    X, E, pp, pm = batch.stream_arrays(samples)
    r = E - offers
    return pp * np.maximum(r, 0.0) + pm * np.maximum(-r, 0.0)


def run_olnv(
    samples: Sequence[Sample],
    eval_start: int,
    eval_stop: int,
    params: OlnvParams,
    capacity: float,
    fo_feature: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """OLNV over the evaluation span after an optional warm-up run.

    Returns (offers, per-hour decision vectors, decision seconds). The
    decision at hour t is the state the learner held *before* seeing t.
    """
    dim = samples[0].features.shape[0]
    config = _olnv_config(params, dim, capacity, fo_feature)
    if params.warmup_hours > eval_start:
        raise ConfigError(
            f"OLNV warm-up of {params.warmup_hours} h does not fit before hour {eval_start}"
        )
    state = None
    if params.warmup_hours > 0:
        state, _ = learner.run_stream(
            samples[eval_start - params.warmup_hours : eval_start], config
        )
    t0 = time.perf_counter()
    q_before = (state or learner.init(config)).q
    final, records = learner.run_stream(samples[eval_start:eval_stop], config, state=state)
    elapsed = time.perf_counter() - t0
    offers = np.array([rec.offer for rec in records])
    decisions = np.vstack([q_before] + [rec.q_after for rec in records[:-1]])
    return offers, decisions, elapsed


def run_backtest(config: ExperimentConfig) -> BacktestReport:
    """Run every configured method over the evaluation span and score it."""
    samples, capacity, default_fo = load_stream(config.source)
    fo_feature = default_fo if config.fo_feature is None else config.fo_feature
    start, stop = _eval_bounds(config, len(samples))
    eval_samples = samples[start:stop]
    X_eval, _, _, _ = batch.stream_arrays(eval_samples)
    dim = X_eval.shape[1]

    methods = tuple(dict.fromkeys(("FO",) + tuple(config.methods)))  # FO always present
    results: dict[str, MethodResult] = {}
    olnv_decisions: np.ndarray | None = None

    def add(name, offers, time_s, trajectory=None):
        losses = _offer_losses(eval_samples, offers)
        results[name] = MethodResult(
            name=name,
            offers=offers,
            losses=losses,
            deviation_cost=float(np.mean(losses)),
            improvement_pct=None,
            decision_time_s=time_s,
            q_trajectory=trajectory,
        )

    e_fo = _unit_vector(dim, fo_feature)
    t0 = time.perf_counter()
    fo_offers = np.clip(X_eval[:, fo_feature], 0.0, capacity)
    add("FO", fo_offers, time.perf_counter() - t0, np.tile(e_fo, (len(eval_samples), 1)))

    for method in methods:
        if method == "FO":
            continue
        if method == "OLNV":
            offers, decisions, elapsed = run_olnv(
                samples, start, stop, config.olnv, capacity, fo_feature
            )
            olnv_decisions = decisions
            add("OLNV", offers, elapsed, decisions)
        elif method == "LP":
            for window in config.lp_windows:
                if window > start:
                    raise ConfigError(
                        f"LP window of {window} h does not fit before hour {start}"
                    )
                cfg = batch.RollingWindowConfig(
                    window_len=window, refresh_every=config.lp_refresh_every
                )
                t0 = time.perf_counter()
                pairs = batch.rolling_window_run(eval_samples, samples[:start], cfg, capacity)
                elapsed = time.perf_counter() - t0
                name = _lp_name(window, config.lp_windows)
                add(
                    name,
                    np.array([offer for offer, _ in pairs]),
                    elapsed,
                    np.vstack([q for _, q in pairs]),
                )
        elif method == "LP2":
            offers, trajectory, elapsed = _run_lp2(samples, start, stop, config, capacity)
            add("LP2", offers, elapsed, trajectory)
        elif method == "FX":
            t0 = time.perf_counter()
            solution = batch.hindsight_fx(eval_samples, capacity)
            offers = np.array(
                [box_offer(s.features, solution.q_star, capacity) for s in eval_samples]
            )
            elapsed = time.perf_counter() - t0
            add("FX", offers, elapsed, np.tile(solution.q_star, (len(eval_samples), 1)))

    fo_cost = results["FO"].deviation_cost
    for name, res in results.items():
        if fo_cost > 0:
            results[name] = replace(res, improvement_pct=metrics.relative_improvement(res.deviation_cost, fo_cost))
        else:
            logger.warning("FO baseline cost is zero; relative improvement undefined")

    regret_series: dict[str, list[tuple[int, float]]] = {}
    if olnv_decisions is not None and (config.partition_lengths or config.static_regret_step):
        run = metrics.EvaluationRun(
            offers=results["OLNV"].offers, decisions=list(olnv_decisions), samples=eval_samples
        )
        if config.static_regret_step:
            regret_series["static"] = metrics.averaged_static_regret_series(
                run, config.static_regret_step, capacity
            )
        for length in config.partition_lengths:
            regret_series[f"dynamic_{length}"] = metrics.averaged_dynamic_regret_series(
                run, length, capacity
            )

    seed = config.source.seed if isinstance(config.source, SynthConfig) else None
    return BacktestReport(
        experiment=config.name,
        seed=seed,
        eval_start=start,
        eval_len=stop - start,
        methods=results,
        regret_series=regret_series,
    )


def _lp_name(window: int, windows: tuple[int, ...]) -> str:
    if len(windows) == 1:
        return "LP"
    if window % 720 == 0:
        return f"LP-{window // 720}M"
    return f"LP-{window}h"


def _run_lp2(samples, start, stop, config: ExperimentConfig, capacity: float):
    """Two-step benchmark: unit-penalty wind regression, then market correction.

    Step 1 re-solves the training LP on the wind features with both
    penalties set to one, yielding an enhanced production estimate. Step 2
    regresses on [1, estimate] with the true penalties and no capacity
    constraint; offers still pass through the box.
    """
    p = samples[0].features.shape[0]
    wind = config.lp2.wind_features
    if wind is None:
        wind = tuple(range(min(5, p)))
    if any(not 0 <= i < p for i in wind):
        raise ConfigError(f"lp2.wind_features {wind} outside feature dimension {p}")
    window, refresh = config.lp2.window, config.lp2.refresh_every
    stage1_start = start - window
    if stage1_start < window:
        raise ConfigError(
            f"LP2 needs {2 * window} h of history before hour {start}, have {start}"
        )
    unit = PenaltyPair(1.0, 1.0)
    t0 = time.perf_counter()
    stage1_stream = [
        Sample(energy=s.energy, penalties=unit, features=s.features[list(wind)])
        for s in samples[:stop]
    ]
    cfg1 = batch.RollingWindowConfig(window_len=window, refresh_every=refresh)
    pairs1 = batch.rolling_window_run(
        stage1_stream[stage1_start:], stage1_stream[:stage1_start], cfg1, capacity
    )
    estimates = np.array([offer for offer, _ in pairs1])

    stage2 = [
        Sample(
            energy=samples[stage1_start + i].energy,
            penalties=samples[stage1_start + i].penalties,
            features=np.array([1.0, estimates[i]]),
        )
        for i in range(len(estimates))
    ]
    cfg2 = batch.RollingWindowConfig(window_len=window, refresh_every=refresh)
    pairs2 = batch.rolling_window_run(
        stage2[window:], stage2[:window], cfg2, capacity, enforce_capacity=False
    )
    elapsed = time.perf_counter() - t0
    offers = np.array([offer for offer, _ in pairs2])
    trajectory = np.vstack([q for _, q in pairs2])
    assert len(offers) == stop - start
    return offers, trajectory, elapsed


# ---------------------------------------------------------------------------
# grid search


@dataclass(frozen=True, eq=False)
class GridSearchResult:
    mus: tuple[float, ...]
    etas: tuple[float, ...]
    table: np.ndarray  # improvement %, shape (len(etas), len(mus))
    best_mu: float
    best_eta: float


def grid_search(
    config: ExperimentConfig,
    mus: Sequence[float] | None = None,
    etas: Sequence[float] | None = None,
) -> GridSearchResult:
    """Score OLNV on the validation span for every (mu, eta) cell.

    The validation span must be disjoint from the evaluation span. Ties for
    the best cell break toward the smaller eta, then the smaller mu.
    """
    mus = tuple(mus) if mus is not None else config.grid_mus
    etas = tuple(etas) if etas is not None else config.grid_etas
    if not mus or not etas:
        raise ConfigError("grid search requires nonempty mu and eta grids")
    if config.validation_start is None or config.validation_len is None:
        raise ConfigError("grid search requires a validation span (start and length)")

    samples, capacity, default_fo = load_stream(config.source)
    fo_feature = default_fo if config.fo_feature is None else config.fo_feature
    v_start, v_stop = config.validation_start, config.validation_start + config.validation_len
    if not 0 <= v_start < v_stop <= len(samples):
        raise ConfigError(f"validation span [{v_start}, {v_stop}) does not fit the stream")
    e_start, e_stop = _eval_bounds(config, len(samples))
    if v_start < e_stop and e_start < v_stop:
        raise ConfigError(
            f"validation span [{v_start}, {v_stop}) overlaps evaluation span [{e_start}, {e_stop})"
        )

    val_samples = samples[v_start:v_stop]
    X_val, _, _, _ = batch.stream_arrays(val_samples)
    fo_offers = np.clip(X_val[:, fo_feature], 0.0, capacity)
    fo_cost = float(np.mean(_offer_losses(val_samples, fo_offers)))
    if fo_cost <= 0:
        raise ConfigError("FO baseline cost is zero on the validation span")

    table = np.empty((len(etas), len(mus)))
    for i, eta in enumerate(etas):
        for j, mu in enumerate(mus):
            params = replace(config.olnv, eta=eta, mu=mu)
            offers, _, _ = run_olnv(samples, v_start, v_stop, params, capacity, fo_feature)
            cost = float(np.mean(_offer_losses(val_samples, offers)))
            table[i, j] = metrics.relative_improvement(cost, fo_cost)

    best_eta, best_mu, best_score = None, None, -np.inf
    for i in sorted(range(len(etas)), key=lambda k: etas[k]):
        for j in sorted(range(len(mus)), key=lambda k: mus[k]):
            if table[i, j] > best_score:
                best_score = table[i, j]
                best_eta, best_mu = etas[i], mus[j]
    return GridSearchResult(mus=mus, etas=etas, table=table, best_mu=best_mu, best_eta=best_eta)


# ---------------------------------------------------------------------------
# report files


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def emit_reports(report: BacktestReport, out_dir) -> list[Path]:
    """Write the per-method and regret CSVs plus a plain-text summary.

    Files: offers_<method>.csv (t, offer, loss), metrics.csv,
    q_trajectory_<method>.csv (t, q0..), regret_static.csv and
    regret_<l>.csv (prefix_hours, averaged_regret), summary.txt.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for name, res in report.methods.items():
        path = out / f"offers_{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "offer", "loss"])
            for t, (offer, loss) in enumerate(zip(res.offers, res.losses)):
                writer.writerow([t, _fmt(offer), _fmt(loss)])
        written.append(path)
        if res.q_trajectory is not None:
            qpath = out / f"q_trajectory_{name}.csv"
            dim = res.q_trajectory.shape[1]
            with qpath.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t"] + [f"q{j}" for j in range(dim)])
                for t, q in enumerate(res.q_trajectory):
                    writer.writerow([t] + [_fmt(v) for v in q])
            written.append(qpath)

    # Wall-clock timings go to their own file so every other CSV is
    # byte-reproducible for a fixed seed.
    mpath = out / "metrics.csv"
    with mpath.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "deviation_cost", "improvement_pct"])
        for name, res in report.methods.items():
            improvement = "" if res.improvement_pct is None else _fmt(res.improvement_pct)
            writer.writerow([name, _fmt(res.deviation_cost), improvement])
    written.append(mpath)

    tpath = out / "timings.csv"
    with tpath.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "decision_time_s"])
        for name, res in report.methods.items():
            writer.writerow([name, _fmt(res.decision_time_s)])
    written.append(tpath)

    for key, series in report.regret_series.items():
        rpath = out / (
            "regret_static.csv" if key == "static" else f"regret_{key.split('_', 1)[1]}.csv"
        )
        with rpath.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["prefix_hours", "averaged_regret"])
            for hours, value in series:
                writer.writerow([hours, _fmt(value)])
        written.append(rpath)

    spath = out / "summary.txt"
    spath.write_text(render_summary(report))
    written.append(spath)
    return written


def render_summary(report: BacktestReport) -> str:
    lines = [
        f"experiment: {report.experiment}",
        f"seed: {report.seed}",
        f"evaluation: hours [{report.eval_start}, {report.eval_start + report.eval_len})",
        "",
        f"{'method':10s} {'deviation_cost':>16s} {'improvement_%':>14s} {'time_s':>10s}",
    ]
    for name, res in report.methods.items():
        imp = "undefined" if res.improvement_pct is None else f"{res.improvement_pct:.2f}"
        lines.append(
            f"{name:10s} {res.deviation_cost:16.6f} {imp:>14s} {res.decision_time_s:10.3f}"
        )
    for key, series in report.regret_series.items():
        lines.append("")
        lines.append(f"averaged regret ({key}): final {series[-1][1]:.6f} at {series[-1][0]} h")
    lines.append("")
    return "\n".join(lines)


def write_grid_csv(result: GridSearchResult, out_dir) -> Path:
    """Write the grid-search table with mus as columns and etas as rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "grid.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eta\\mu"] + [_fmt(mu) for mu in result.mus])
        for i, eta in enumerate(result.etas):
            writer.writerow([_fmt(eta)] + [_fmt(v) for v in result.table[i]])
        writer.writerow([])
        writer.writerow(["best_mu", _fmt(result.best_mu)])
        writer.writerow(["best_eta", _fmt(result.best_eta)])
    return path
