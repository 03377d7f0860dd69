import numpy as np
import pytest

from olnv.geometry import Slab, box_offer, project_decision


def kkt_projection_oracle(o, x, capacity):
    """Slab projection via KKT case enumeration.

    Candidates: the point itself, and the stationary points of the
    Lagrangian with either face active; feasibility and multiplier signs
    are checked explicitly and the closest feasible candidate wins.
    """
    sq = float(x @ x)
    v = float(x @ o)
    candidates = []
    if -1e-12 <= v <= capacity + 1e-12:
        candidates.append(o)
    mu_upper = (v - capacity) / sq  # active x'q = capacity needs mu >= 0
    if mu_upper >= -1e-12:
        candidates.append(o - mu_upper * x)
    mu_lower = -v / sq  # active x'q = 0 needs mu >= 0
    if mu_lower >= -1e-12:
        candidates.append(o + mu_lower * x)
    feasible = [
        c for c in candidates if -1e-9 <= float(x @ c) <= capacity + 1e-9
    ]
    assert feasible, "oracle found no feasible candidate"
    return min(feasible, key=lambda c: float(np.linalg.norm(c - o)))


class TestBoxOffer:
    def test_interior_unchanged(self):
        assert box_offer(np.array([1.0]), np.array([50.0]), 100.0) == 50.0

    def test_lower_clamp(self):
        assert box_offer(np.array([1.0]), np.array([-3.0]), 100.0) == 0.0

    def test_upper_clamp(self):
        assert box_offer(np.array([1.0]), np.array([120.0]), 100.0) == 100.0

    def test_capacity_validated(self):
        with pytest.raises(ValueError):
            box_offer(np.array([1.0]), np.array([1.0]), 0.0)


class TestProjectDecision:
    def test_interior_point_unchanged(self):
        out = project_decision(np.array([2.0, 5.0]), Slab(np.array([1.0, 0.0]), 10.0))
        np.testing.assert_array_equal(out, [2.0, 5.0])

    def test_upper_face(self):
        out = project_decision(np.array([12.0, 5.0]), Slab(np.array([1.0, 0.0]), 10.0))
        np.testing.assert_allclose(out, [10.0, 5.0])

    def test_lower_face(self):
        out = project_decision(np.array([-2.0, -2.0]), Slab(np.array([1.0, 1.0]), 10.0))
        np.testing.assert_allclose(out, [0.0, 0.0], atol=1e-15)

    def test_exact_boundary_is_interior(self):
        o = np.array([10.0, 3.0])
        out = project_decision(o, Slab(np.array([1.0, 0.0]), 10.0))
        np.testing.assert_array_equal(out, o)

    def test_zero_feature_vector_rejected(self):
        with pytest.raises(ValueError):
            project_decision(np.array([1.0]), Slab(np.array([0.0]), 10.0))

    def test_slab_requires_positive_capacity(self):
        with pytest.raises(ValueError):
            Slab(np.array([1.0]), -1.0)


class TestProjectionProperties:
    def _random_instance(self, rng):
        dim = int(rng.integers(1, 9))
        x = rng.uniform(-3.0, 3.0, dim)
        if np.all(x == 0.0):
            x[0] = 1.0
        o = rng.uniform(-50.0, 50.0, dim)
        capacity = float(rng.uniform(1.0, 150.0))
        return o, x, capacity

    def test_feasibility_and_idempotence(self, rng):
        for _ in range(10_000):
            o, x, capacity = self._random_instance(rng)
            proj = project_decision(o, Slab(x, capacity))
            v = float(x @ proj)
            assert -1e-9 <= v <= capacity + 1e-9
            again = project_decision(proj, Slab(x, capacity))
            np.testing.assert_allclose(again, proj, rtol=0, atol=1e-12)

    def test_minimal_distance_against_feasible_points(self, rng):
        for _ in range(1000):
            o, x, capacity = self._random_instance(rng)
            proj = project_decision(o, Slab(x, capacity))
            dist = float(np.linalg.norm(proj - o))
            sq = float(x @ x)
            for _ in range(100):
                z = rng.uniform(-50.0, 50.0, len(o))
                target = float(rng.uniform(0.0, capacity))
                z = z + ((target - float(x @ z)) / sq) * x  # feasible by construction
                assert dist <= float(np.linalg.norm(z - o)) + 1e-9

    def test_correction_parallel_to_feature(self, rng):
        for _ in range(2000):
            o, x, capacity = self._random_instance(rng)
            proj = project_decision(o, Slab(x, capacity))
            move = proj - o
            residual = move - (float(move @ x) / float(x @ x)) * x
            assert float(np.linalg.norm(residual)) < 1e-12

    def test_matches_kkt_oracle(self, rng):
        for _ in range(300):
            o, x, capacity = self._random_instance(rng)
            proj = project_decision(o, Slab(x, capacity))
            oracle = kkt_projection_oracle(o, x, capacity)
            np.testing.assert_allclose(proj, oracle, rtol=0, atol=1e-8)
