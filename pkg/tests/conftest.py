import os

import hypothesis
import numpy as np
import pytest

from lmspectra.cells import ComplexSample, sample_complex

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))

RUN_SLOW = os.getenv("LM_SPECTRA_RUN_SLOW", "") == "1"


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip_slow = pytest.mark.skip(reason="set LM_SPECTRA_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def single_triangle() -> ComplexSample:
    """n=4, d=2 with only the 2-cell {1,2,3}."""
    return ComplexSample.from_cells(4, 2, [(1, 2, 3)])


@pytest.fixture
def small_sample() -> ComplexSample:
    return sample_complex(12, 2, 0.2, seed=7)
