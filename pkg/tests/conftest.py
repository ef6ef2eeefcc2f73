import numpy as np
import pytest

from sparsecox.dataset import CovariatePath, Subject, SurvivalDataset


@pytest.fixture
def d1():
    """Three-subject worked example used across the suite.

    Subjects: (0.2, event, Z=(1,0)), (0.5, event, Z=(0,1)),
    (0.9, censored, Z=(1,1)).  Small enough that every risk-set quantity
    has a hand-checkable closed form.
    """
    return SurvivalDataset(
        [
            Subject(0.2, True, CovariatePath.constant([1.0, 0.0])),
            Subject(0.5, True, CovariatePath.constant([0.0, 1.0])),
            Subject(0.9, False, CovariatePath.constant([1.0, 1.0])),
        ]
    )


def random_dataset(rng, n, p, censor=0.3, law="uniform"):
    """Draw a small constant-covariate dataset with roughly a censor share censored."""
    if law == "uniform":
        Z = rng.uniform(-1.0, 1.0, size=(n, p))
    elif law == "rademacher":
        Z = rng.choice([-1.0, 1.0], size=(n, p))
    else:
        raise ValueError(law)
    times = rng.uniform(0.05, 1.0, size=n)
    events = rng.uniform(size=n) > censor
    if not events.any():
        events[0] = True
    return SurvivalDataset.from_arrays(times, events, Z)
