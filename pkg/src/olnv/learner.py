"""The online newsvendor learner.

Per-sample loop: offer through the box projection, pay the exact loss at
the offer, then update the decision vector with a component-wise adaptive
step. The learning rate divides a base rate by the square root of an
exponentially decayed average of squared gradients, so each feature is
stepped on its own scale and the average tracks the most recent dynamics.
Gradients come either from the exact loss (subgradient, zero on the kink)
or from its softplus smoothing, optionally with penalties anchored toward
their historical averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    AnchorConfig,
    Sample,
    pinball,
    smooth_gradient_scale,
    subgradient_scale,
)
from .errors import ConfigError
from .geometry import Slab, box_offer, project_decision


def default_q_init(dim: int, forecast_index: int = 0) -> np.ndarray:
    """Initial decision vector: 1 on the producer's own forecast feature, 0.01 elsewhere."""
    q = np.full(dim, 0.01)
    q[forecast_index] = 1.0
    return q


@dataclass(frozen=True, eq=False)
class OlnvConfig:
    """Hyperparameters of the online learner.

    eta/rho/epsilon drive the adaptive rate; mode selects subgradient or
    smoothed gradients (alpha required for the latter); anchor blends the
    penalties used for learning (mu = 1 disables anchoring).
    """

    q_init: np.ndarray
    capacity: float
    eta: float = 1e-3
    rho: float = 0.95
    epsilon: float = 1e-6
    mode: str = "subgradient"
    alpha: float | None = None
    anchor: AnchorConfig = field(default_factory=lambda: AnchorConfig(mu=0.7))

    def __post_init__(self):
        object.__setattr__(self, "q_init", np.asarray(self.q_init, dtype=float))
        if self.q_init.ndim != 1 or not np.all(np.isfinite(self.q_init)):
            raise ConfigError("q_init must be a finite 1-D vector")
        if self.capacity <= 0:
            raise ConfigError(f"capacity must be positive, got {self.capacity}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"rho must lie in [0, 1), got {self.rho}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.mode not in ("subgradient", "smooth"):
            raise ConfigError(f"mode must be 'subgradient' or 'smooth', got {self.mode!r}")
        if self.mode == "smooth" and (self.alpha is None or self.alpha <= 0):
            raise ConfigError("smooth mode requires alpha > 0")


@dataclass(frozen=True, eq=False)
class OlnvState:
    """Decision vector plus the running average of squared gradients."""

    q: np.ndarray
    g2_bar: np.ndarray
    step_count: int = 0


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Audit trail of a single update."""

    offer: float
    loss: float
    gradient: np.ndarray
    learning_rate: np.ndarray
    q_after: np.ndarray


def init(config: OlnvConfig) -> OlnvState:
    """Fresh state: configured decision vector, zeroed gradient averages."""
    return OlnvState(
        q=config.q_init.copy(),
        g2_bar=np.zeros_like(config.q_init),
        step_count=0,
    )


def accumulate_sq_grad(g2_bar_prev: np.ndarray, g: np.ndarray, rho: float) -> np.ndarray:
    """Exponentially decayed average of the squared gradient, component-wise."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    return rho * np.asarray(g2_bar_prev, dtype=float) + (1.0 - rho) * np.square(g)


def learning_rate(g2_bar: np.ndarray, eta: float, epsilon: float) -> np.ndarray:
    """Component-wise rate eta / sqrt(g2_bar + epsilon); finite and positive."""
    if eta <= 0 or epsilon <= 0:
        raise ValueError("eta and epsilon must be positive")
    return eta / np.sqrt(np.asarray(g2_bar, dtype=float) + epsilon)


def step(state: OlnvState, sample: Sample, config: OlnvConfig) -> tuple[OlnvState, StepRecord]:
    """One online round: offer, pay, learn.

    Order is fixed: (i) box the offer; (ii) record the loss at the offer
    under the RAW penalties (the producer's true cash flow); (iii) anchor
    the penalties; (iv) take the (sub)gradient of the anchored loss at the
    current q; (v) decay-accumulate its square; (vi) form the rate;
    (vii) project the stepped q onto the slab of the current feature.
    A zero feature vector constrains nothing, so the projection is skipped.
    """
    x = sample.features
    q = state.q
    if x.shape != q.shape:
        raise ValueError(f"dimension mismatch: features {x.shape} vs state {q.shape}")

    offer = box_offer(x, q, config.capacity)
    raw = sample.penalties
    loss = pinball(raw.psi_plus, raw.psi_minus, sample.energy - offer)

    mu = config.anchor.mu
    psi_plus = mu * raw.psi_plus + (1.0 - mu) * config.anchor.psi_bar_plus
    psi_minus = mu * raw.psi_minus + (1.0 - mu) * config.anchor.psi_bar_minus

    u = sample.energy - float(x @ q)
    if config.mode == "smooth":
        scale = smooth_gradient_scale(psi_plus, psi_minus, u, config.alpha)
    else:
        scale = subgradient_scale(psi_plus, psi_minus, u)
    g = scale * x

    g2_bar = config.rho * state.g2_bar + (1.0 - config.rho) * np.square(g)
    rate = config.eta / np.sqrt(g2_bar + config.epsilon)

    q_next = q - rate * g
    if np.any(x != 0.0):
        q_next = project_decision(q_next, Slab(x=x, capacity=config.capacity))

    new_state = OlnvState(q=q_next, g2_bar=g2_bar, step_count=state.step_count + 1)
    record = StepRecord(
        offer=offer, loss=loss, gradient=g, learning_rate=rate, q_after=q_next
    )
    return new_state, record


def run_stream(
    samples, config: OlnvConfig, state: OlnvState | None = None
) -> tuple[OlnvState, list[StepRecord]]:
    """Fold `step` over a sample stream, in order.

    Deterministic for fixed inputs. Pass a previous state to continue a
    stream (e.g. after a warm-up span); otherwise starts from init(config).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("run_stream requires a nonempty stream")
    if state is None:
        state = init(config)
    records: list[StepRecord] = []
    for sample in samples:
        state, record = step(state, sample, config)
        records.append(record)
    return state, records
