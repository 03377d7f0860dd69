import numpy as np
import pytest

from olnv.core import PenaltyPair, Sample


def random_sample(rng, dim=None, psi_max=10.0, allow_zero_penalty=True):
    """A generic random sample with moderate magnitudes."""
    dim = dim or int(rng.integers(1, 9))
    psi_plus = float(rng.uniform(0.0, psi_max))
    psi_minus = float(rng.uniform(0.0, psi_max))
    if not allow_zero_penalty and psi_plus + psi_minus < 1e-6:
        psi_plus = 1.0
    features = rng.uniform(-3.0, 3.0, dim)
    energy = float(rng.uniform(0.0, 10.0))
    return Sample(energy=energy, penalties=PenaltyPair(psi_plus, psi_minus), features=features)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
