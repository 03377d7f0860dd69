"""Domain types and newsvendor arithmetic.

Covers the market-side quantities (prices, penalties, settlement) and the
per-sample newsvendor loss in its exact and smoothed forms, together with
their (sub)gradients and the average-penalty anchoring transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError

# Penalties derived from prices that land in [-PENALTY_CLIP, 0) are rounding
# noise and get clamped to zero; anything below -PENALTY_CLIP is corrupted.
PENALTY_CLIP = 1e-6


@dataclass(frozen=True)
class MarketPrices:
    """Forward, up-regulation and down-regulation prices for one hour (currency/MWh)."""

    forward: float
    up_reg: float
    down_reg: float


@dataclass(frozen=True)
class PenaltyPair:
    """Per-MWh costs of over- and under-producing relative to the offer."""

    psi_plus: float
    psi_minus: float

    def __post_init__(self):
        if self.psi_plus < 0 or self.psi_minus < 0:
            raise ValueError(f"penalties must be nonnegative, got {self}")

    @property
    def total(self) -> float:
        return self.psi_plus + self.psi_minus


@dataclass(frozen=True, eq=False)
class Sample:
    """One market hour: realized energy, penalty pair, and the feature vector."""

    energy: float
    penalties: PenaltyPair
    features: np.ndarray

    def __post_init__(self):
        if not (self.energy >= 0 and math.isfinite(self.energy)):
            raise ValueError(f"energy must be finite and >= 0, got {self.energy}")
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))
        if self.features.ndim != 1:
            raise ValueError("features must be a 1-D vector")


@dataclass(frozen=True)
class Revenue:
    """Settled revenue split into the forward and balancing components."""

    forward_part: float
    balancing_part: float

    @property
    def total(self) -> float:
        return self.forward_part + self.balancing_part


@dataclass(frozen=True)
class AnchorConfig:
    """Convex blend of realized penalties toward historical averages.

    mu = 1 leaves penalties untouched; mu = 0 replaces them entirely with
    the anchors.
    """

    mu: float
    psi_bar_plus: float = 1.0
    psi_bar_minus: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.psi_bar_plus < 0 or self.psi_bar_minus < 0:
            raise ValueError("anchor penalties must be nonnegative")


def penalties_from_prices(prices: MarketPrices) -> PenaltyPair:
    """Map a dual-price settlement triple to (psi_plus, psi_minus).

    psi_plus = forward - down_reg, psi_minus = up_reg - forward. Small
    negatives within PENALTY_CLIP (rounding noise in published prices) are
    clamped to zero; larger ones signal a corrupted record.
    """
    psi_plus = prices.forward - prices.down_reg
    psi_minus = prices.up_reg - prices.forward
    if psi_plus < -PENALTY_CLIP or psi_minus < -PENALTY_CLIP:
        raise DataError(
            f"corrupted price record: penalties ({psi_plus}, {psi_minus}) "
            f"below -{PENALTY_CLIP}"
        )
    return PenaltyPair(max(psi_plus, 0.0), max(psi_minus, 0.0))


def settle_revenue(prices: MarketPrices, offer: float, energy: float) -> Revenue:
    """Settle one hour: forward income plus the (always nonpositive-value) balancing leg.

    Cross-checks the price-based settlement against the equivalent
    penalty-based form lambda_F * E - (psi+ (E-offer)+ + psi- (offer-E)+).
    """
    if offer < 0 or energy < 0:
        raise ValueError("offer and energy must be nonnegative")
    forward_part = prices.forward * offer
    short = max(offer - energy, 0.0)
    surplus = max(energy - offer, 0.0)
    balancing_part = -prices.up_reg * short + prices.down_reg * surplus
    total = forward_part + balancing_part

    pen = penalties_from_prices(prices)
    penalty_form = prices.forward * energy - (pen.psi_plus * surplus + pen.psi_minus * short)
    assert math.isclose(total, penalty_form, rel_tol=1e-9, abs_tol=1e-9), (
        f"settlement forms disagree: {total} vs {penalty_form}"
    )
    return Revenue(forward_part=forward_part, balancing_part=balancing_part)


def _check_dims(sample: Sample, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != sample.features.shape:
        raise ValueError(
            f"dimension mismatch: features {sample.features.shape} vs decision {q.shape}"
        )
    return q


def pinball(psi_plus: float, psi_minus: float, error: float) -> float:
    """Newsvendor cost of a signed error (realization minus offer)."""
    if error >= 0:
        return psi_plus * error
    return -psi_minus * error


def nv_loss(sample: Sample, q: np.ndarray) -> float:
    """Exact per-sample newsvendor loss at the linear-policy offer x'q."""
    q = _check_dims(sample, q)
    u = sample.energy - float(sample.features @ q)
    return pinball(sample.penalties.psi_plus, sample.penalties.psi_minus, u)


def smooth_pinball(psi_plus: float, psi_minus: float, error: float, alpha: float) -> float:
    """Softplus-smoothed newsvendor cost; upper-bounds the exact one."""
    # logaddexp(0, z) = log(1 + e^z) without overflow for any z.
    return psi_plus * error + alpha * (psi_plus + psi_minus) * float(
        np.logaddexp(0.0, -error / alpha)
    )


def smooth_nv_loss(sample: Sample, q: np.ndarray, alpha: float) -> float:
    """Smoothed newsvendor loss with smoothing width alpha > 0."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q = _check_dims(sample, q)
    u = sample.energy - float(sample.features @ q)
    return smooth_pinball(sample.penalties.psi_plus, sample.penalties.psi_minus, u, alpha)


def smooth_gradient_scale(psi_plus: float, psi_minus: float, error: float, alpha: float) -> float:
    """Scalar multiplier of x in the gradient of the smoothed loss."""
    return -psi_plus + (psi_plus + psi_minus) * float(expit(-error / alpha))


def smooth_gradient(sample: Sample, q: np.ndarray, alpha: float) -> np.ndarray:
    """Gradient of smooth_nv_loss with respect to q (closed form)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q = _check_dims(sample, q)
    u = sample.energy - float(sample.features @ q)
    scale = smooth_gradient_scale(
        sample.penalties.psi_plus, sample.penalties.psi_minus, u, alpha
    )
    return scale * sample.features


def subgradient_scale(psi_plus: float, psi_minus: float, error: float) -> float:
    """Scalar multiplier of x in the chosen subgradient of the exact loss.

    Zero when the error is exactly zero (deterministic tie rule).
    """
    if error > 0:
        return -psi_plus
    if error < 0:
        return psi_minus
    return 0.0


def nv_subgradient(sample: Sample, q: np.ndarray) -> np.ndarray:
    """A subgradient of nv_loss at q; the zero vector on the kink."""
    q = _check_dims(sample, q)
    u = sample.energy - float(sample.features @ q)
    return subgradient_scale(sample.penalties.psi_plus, sample.penalties.psi_minus, u) * sample.features


def gradient_error(sample: Sample, q: np.ndarray, alpha: float) -> np.ndarray:
    """Difference between the smoothed gradient and the exact subgradient.

    Undefined on the kink (the exact subdifferential is set-valued there),
    so error exactly at zero is rejected.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q = _check_dims(sample, q)
    u = sample.energy - float(sample.features @ q)
    if u == 0.0:
        raise ValueError("gradient_error is undefined at a zero prediction error")
    total = sample.penalties.total
    if u > 0:
        scale = total * float(expit(-u / alpha))
    else:
        scale = -total * float(expit(u / alpha))
    return scale * sample.features


def anchor_penalties(raw: PenaltyPair, cfg: AnchorConfig) -> PenaltyPair:
    """Blend realized penalties with the historical anchors."""
    mu = cfg.mu
    return PenaltyPair(
        mu * raw.psi_plus + (1.0 - mu) * cfg.psi_bar_plus,
        mu * raw.psi_minus + (1.0 - mu) * cfg.psi_bar_minus,
    )
