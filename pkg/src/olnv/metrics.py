"""Economic and regret metrics for an evaluated offer/decision trajectory.

Economic performance is the average deviation cost of the boxed offers the
producer actually submitted; regret notions evaluate the loss of the raw
decision vectors against hindsight comparators of varying strength (fixed
vector, partitioned vectors, per-sample minimizers). The two views coincide
whenever every decision is feasible for its own feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .batch import comparator_sequence, hindsight_fx, stream_arrays
from .core import Sample


@dataclass(frozen=True, eq=False)
class EvaluationRun:
    """Offers, decision vectors, and the samples they were played against."""

    offers: np.ndarray
    decisions: Sequence[np.ndarray]
    samples: Sequence[Sample]

    def __post_init__(self):
        object.__setattr__(self, "offers", np.asarray(self.offers, dtype=float))
        n = len(self.samples)
        if n < 1:
            raise ValueError("an evaluation run needs at least one sample")
        if len(self.offers) != n or len(self.decisions) != n:
            raise ValueError(
                f"length mismatch: {len(self.offers)} offers, "
                f"{len(self.decisions)} decisions, {n} samples"
            )


def _decision_losses(run: EvaluationRun) -> np.ndarray:
    """Per-hour newsvendor loss of the raw (unboxed) decisions."""
    X, E, pp, pm = stream_arrays(run.samples)
    Q = np.stack([np.asarray(q, dtype=float) for q in run.decisions])
    r = E - np.einsum("tp,tp->t", X, Q)
    return pp * np.maximum(r, 0.0) + pm * np.maximum(-r, 0.0)


def _comparator_losses(samples: Sequence[Sample], comparators: Sequence[np.ndarray]) -> np.ndarray:
    X, E, pp, pm = stream_arrays(samples)
    U = np.stack([np.asarray(u, dtype=float) for u in comparators])
    r = E - np.einsum("tp,tp->t", X, U)
    return pp * np.maximum(r, 0.0) + pm * np.maximum(-r, 0.0)


def deviation_cost(run: EvaluationRun) -> float:
    """Average cost of the submitted offers under the raw penalties."""
    X, E, pp, pm = stream_arrays(run.samples)
    r = E - run.offers
    return float(np.mean(pp * np.maximum(r, 0.0) + pm * np.maximum(-r, 0.0)))


def relative_improvement(cost_method: float, cost_fo: float) -> float:
    """Percent of the forecast baseline's deviation cost that was removed.

    100 means zero deviation cost; undefined when the baseline is already
    perfect.
    """
    if cost_fo <= 0:
        raise ValueError("relative improvement is undefined for a zero-cost baseline")
    return (cost_fo - cost_method) / cost_fo * 100.0


def static_regret(run: EvaluationRun, capacity: float) -> float:
    """Cumulative loss gap against the best single feasible vector in hindsight."""
    losses = _decision_losses(run)
    best = hindsight_fx(run.samples, capacity)
    return float(np.sum(losses) - best.objective * len(run.samples))


def worst_case_regret(run: EvaluationRun) -> float:
    """Cumulative loss gap against per-sample minimizers.

    A nonzero feature vector always admits a zero-loss decision for its own
    sample, so the comparator term vanishes and the regret is simply the
    summed loss of the played decisions.
    """
    X = np.stack([s.features for s in run.samples])
    assert np.all(np.any(X != 0.0, axis=1)), (
        "worst-case comparator is not zero-loss on all-zero feature vectors"
    )
    return float(np.sum(_decision_losses(run)))


def dynamic_regret(run: EvaluationRun, comparators: Sequence[np.ndarray]) -> float:
    """Cumulative loss gap against an arbitrary per-hour comparator sequence."""
    if len(comparators) != len(run.samples):
        raise ValueError(
            f"comparator length {len(comparators)} != run length {len(run.samples)}"
        )
    return float(np.sum(_decision_losses(run)) - np.sum(_comparator_losses(run.samples, comparators)))


def averaged_static_regret_series(
    run: EvaluationRun, step: int, capacity: float
) -> list[tuple[int, float]]:
    """Static regret per elapsed hour, evaluated at growing prefixes.

    The hindsight comparator is refreshed on every prefix; each entry is
    (prefix hours, regret / prefix hours).
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    losses = _decision_losses(run)
    cum = np.cumsum(losses)
    out: list[tuple[int, float]] = []
    n = len(run.samples)
    for stop in _prefix_boundaries(n, step):
        best = hindsight_fx(run.samples[:stop], capacity)
        out.append((stop, float(cum[stop - 1] - best.objective * stop) / stop))
    return out


def averaged_dynamic_regret_series(
    run: EvaluationRun, partition_len: int, capacity: float
) -> list[tuple[int, float]]:
    """Dynamic regret per elapsed hour against partitioned hindsight comparators.

    Comparators are the per-partition hindsight optima over the full run;
    prefixes advance one partition at a time.
    """
    comparators = comparator_sequence(run.samples, partition_len, capacity)
    gap = np.cumsum(_decision_losses(run) - _comparator_losses(run.samples, comparators))
    return [
        (stop, float(gap[stop - 1]) / stop)
        for stop in _prefix_boundaries(len(run.samples), partition_len)
    ]


def _prefix_boundaries(n: int, step: int) -> list[int]:
    bounds = list(range(step, n + 1, step))
    if not bounds or bounds[-1] != n:
        bounds.append(n)
    return bounds
