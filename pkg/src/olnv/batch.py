"""Batch benchmarks: the empirical-risk LP, rolling-window retraining,
hindsight comparators, and the analytical quantile offer.

The training problem minimizes the average newsvendor loss of a linear
policy over a sample window, subject (optionally) to every in-window offer
respecting the plant limits. The piecewise-linear objective is reformulated
exactly with per-sample over/under slack variables; the resulting LP is
solved through its bounded dual (one box variable per sample, one equality
row per feature), which HiGHS dispatches orders of magnitude faster than
the primal at backtest scales. The primal decision vector is recovered from
the equality-row multipliers; when the capacity constraints are requested,
the unconstrained solution is certified against them and the full primal LP
is solved only if the certificate fails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .core import Sample
from .errors import SolverError
from .geometry import box_offer

logger = logging.getLogger(__name__)

# Slack allowed when certifying the unconstrained solution against the
# in-window capacity constraints (offers live on a ~100 MWh scale).
_CAPACITY_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class ErmProblem:
    """One training window for the empirical-risk LP."""

    samples: Sequence[Sample]
    capacity: float
    enforce_capacity: bool = True

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("empty sample set")
        if self.capacity <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")


@dataclass(frozen=True, eq=False)
class ErmSolution:
    q_star: np.ndarray
    objective: float
    solver_status: str  # optimal | infeasible | degenerate


@dataclass(frozen=True)
class RollingWindowConfig:
    """Trailing-window retraining schedule."""

    window_len: int
    refresh_every: int = 24

    def __post_init__(self):
        if self.window_len <= 0 or self.refresh_every <= 0:
            raise ValueError("window_len and refresh_every must be positive")
        if self.refresh_every > self.window_len:
            raise ValueError("refresh_every must not exceed window_len")


def stream_arrays(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stack a sample stream into (X, E, psi_plus, psi_minus) arrays."""
    dims = {s.features.shape[0] for s in samples}
    if len(dims) > 1:
        raise ValueError(f"non-uniform feature dimension across the stream: {sorted(dims)}")
    X = np.stack([s.features for s in samples])
    E = np.array([s.energy for s in samples])
    pp = np.array([s.penalties.psi_plus for s in samples])
    pm = np.array([s.penalties.psi_minus for s in samples])
    return X, E, pp, pm


def mean_pinball_loss(X: np.ndarray, E: np.ndarray, pp: np.ndarray, pm: np.ndarray, q: np.ndarray) -> float:
    """Average newsvendor loss of decision q over a window."""
    r = E - X @ q
    return float(np.mean(pp * np.maximum(r, 0.0) + pm * np.maximum(-r, 0.0)))


def _solve_dual(X, E, pp, pm):
    """Unconstrained ERM via the bounded dual; returns (q, status_code)."""
    T, p = X.shape
    res = linprog(
        -E,
        A_eq=sp.csc_matrix(X.T),
        b_eq=np.zeros(p),
        bounds=np.column_stack([-pm / T, pp / T]),
        method="highs",
        options={"presolve": False},
    )
    if res.status != 0 or res.eqlin is None or res.eqlin.marginals is None:
        return None, res.status
    # The equality-row multipliers of the dual are the primal policy weights.
    return -np.asarray(res.eqlin.marginals, dtype=float), 0


def _solve_primal(X, E, pp, pm, capacity, enforce_capacity):
    """Full primal LP with per-sample slacks and optional capacity rows."""
    T, p = X.shape
    I = sp.identity(T, format="csc")
    Xs = sp.csc_matrix(X)
    Z = sp.csc_matrix((T, T))
    blocks = [
        sp.hstack([-Xs, -I, Z]),  # over_t >= E_t - x'q
        sp.hstack([Xs, Z, -I]),   # under_t >= x'q - E_t
    ]
    b_ub = [-E, E]
    if enforce_capacity:
        blocks.append(sp.hstack([Xs, Z, Z]))   # x'q <= capacity
        blocks.append(sp.hstack([-Xs, Z, Z]))  # x'q >= 0
        b_ub.extend([np.full(T, capacity), np.zeros(T)])
    c = np.concatenate([np.zeros(p), pp / T, pm / T])
    bounds = [(None, None)] * p + [(0, None)] * (2 * T)
    res = linprog(
        c,
        A_ub=sp.vstack(blocks, format="csc"),
        b_ub=np.concatenate(b_ub),
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        return None, res.status
    return np.asarray(res.x[:p], dtype=float), 0


def solve_erm_arrays(
    X: np.ndarray,
    E: np.ndarray,
    pp: np.ndarray,
    pm: np.ndarray,
    capacity: float,
    enforce_capacity: bool = True,
) -> ErmSolution:
    """Array-level entry point for the empirical-risk LP."""
    if X.shape[0] == 0:
        raise ValueError("empty sample set")
    q, status = _solve_dual(X, E, pp, pm)
    if q is not None:
        if enforce_capacity:
            offers = X @ q
            if offers.min() < -_CAPACITY_TOL or offers.max() > capacity + _CAPACITY_TOL:
                # Unconstrained optimum leaves the feasible slab; solve exactly.
                q, status = _solve_primal(X, E, pp, pm, capacity, True)
    else:
        q, status = _solve_primal(X, E, pp, pm, capacity, enforce_capacity)

    if q is None:
        if status == 2:
            logger.warning("ERM training window reported infeasible (status 2)")
            return ErmSolution(
                q_star=np.full(X.shape[1], np.nan),
                objective=float("nan"),
                solver_status="infeasible",
            )
        raise SolverError(f"LP backend failed with status {status}")
    if not np.all(np.isfinite(q)):
        return ErmSolution(q_star=q, objective=float("nan"), solver_status="degenerate")
    return ErmSolution(
        q_star=q,
        objective=mean_pinball_loss(X, E, pp, pm, q),
        solver_status="optimal",
    )


def solve_erm(problem: ErmProblem) -> ErmSolution:
    """Best linear policy for one training window (exact LP)."""
    X, E, pp, pm = stream_arrays(problem.samples)
    return solve_erm_arrays(X, E, pp, pm, problem.capacity, problem.enforce_capacity)


def rolling_window_run(
    stream: Sequence[Sample],
    warmup: Sequence[Sample],
    cfg: RollingWindowConfig,
    capacity: float,
    enforce_capacity: bool = True,
) -> list[tuple[float, np.ndarray]]:
    """Re-train on a trailing window every refresh_every hours, offer hourly.

    The window at stream hour i holds the last window_len samples of
    warmup + stream[:i]; output is one (offer, q_used) pair per stream hour.
    An infeasible refresh keeps the previous decision vector.
    """
    if len(warmup) < cfg.window_len:
        raise ValueError(
            f"insufficient warmup: {len(warmup)} samples < window of {cfg.window_len}"
        )
    stream = list(stream)
    X, E, pp, pm = stream_arrays(list(warmup) + stream)
    base = len(warmup)
    q = None
    out: list[tuple[float, np.ndarray]] = []
    for i in range(len(stream)):
        if i % cfg.refresh_every == 0:
            lo = base + i - cfg.window_len
            hi = base + i
            sol = solve_erm_arrays(
                X[lo:hi], E[lo:hi], pp[lo:hi], pm[lo:hi], capacity, enforce_capacity
            )
            if sol.solver_status == "optimal":
                q = sol.q_star
            elif q is None:
                raise SolverError(f"initial rolling solve failed: {sol.solver_status}")
        out.append((box_offer(X[base + i], q, capacity), q))
    return out


def hindsight_fx(samples: Sequence[Sample], capacity: float) -> ErmSolution:
    """Best single decision vector in hindsight over the whole evaluation set."""
    return solve_erm(ErmProblem(samples=samples, capacity=capacity, enforce_capacity=True))


def comparator_sequence(
    samples: Sequence[Sample], partition_len: int, capacity: float
) -> list[np.ndarray]:
    """Per-hour comparators: hindsight optimum of each adjacent partition.

    The horizon splits into partitions of partition_len hours (the last one
    possibly shorter); every hour inside a partition is assigned that
    partition's hindsight-optimal decision vector.
    """
    if partition_len < 1:
        raise ValueError(f"partition_len must be >= 1, got {partition_len}")
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample set")
    X, E, pp, pm = stream_arrays(samples)
    out: list[np.ndarray] = []
    for start in range(0, len(samples), partition_len):
        stop = min(start + partition_len, len(samples))
        sol = solve_erm_arrays(X[start:stop], E[start:stop], pp[start:stop], pm[start:stop], capacity)
        if sol.solver_status != "optimal":
            raise SolverError(f"comparator solve failed on [{start}, {stop}): {sol.solver_status}")
        out.extend([sol.q_star] * (stop - start))
    return out


def optimal_quantile_offer(
    history: Sequence[float], psi_bar_plus: float, psi_bar_minus: float
) -> float:
    """Analytical featureless offer: empirical quantile at psi+/(psi+ + psi-).

    Uses the lower (type-1 inverse CDF) convention: the smallest observed
    value whose empirical CDF reaches the level.
    """
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        raise ValueError("empty history")
    total = psi_bar_plus + psi_bar_minus
    if total <= 0:
        raise ValueError("at least one penalty anchor must be positive")
    level = psi_bar_plus / total
    return float(np.quantile(history, level, method="inverted_cdf"))
