"""Projection operators: the scalar offer box and the decision-vector slab."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Slab:
    """Feasible decisions for one feature vector: {q : 0 <= x'q <= capacity}."""

    x: np.ndarray
    capacity: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.capacity <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")


def box_offer(x: np.ndarray, q: np.ndarray, capacity: float) -> float:
    """Clip the linear-policy offer x'q into the physical range [0, capacity]."""
    if capacity <= 0:
        raise ValueError(f"capacity must be positive, got {capacity}")
    return float(min(max(0.0, float(np.dot(x, q))), capacity))


def project_decision(o: np.ndarray, slab: Slab) -> np.ndarray:
    """Euclidean projection of o onto the slab, in closed form.

    Points already satisfying the bounds (boundary included) are returned
    unchanged; otherwise the correction is parallel to x. A zero feature
    vector makes the slab degenerate and is rejected; the caller decides
    the skip policy.
    """
    o = np.asarray(o, dtype=float)
    x = slab.x
    sq_norm = float(x @ x)
    if sq_norm == 0.0:
        raise ValueError("cannot project onto a slab with a zero feature vector")
    v = float(x @ o)
    if 0.0 <= v <= slab.capacity:
        return o.copy()
    if v > slab.capacity:
        return o + ((slab.capacity - v) / sq_norm) * x
    return o + (-v / sq_norm) * x
