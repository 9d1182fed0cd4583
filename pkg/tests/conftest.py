"""
    Fixtures shared by the lhvlab tests.

    Read more about conftest.py under:
    - https://docs.pytest.org/en/stable/fixture.html
    - https://docs.pytest.org/en/stable/writing_plugins.html
"""

import pytest

from lhvlab.lhv_model import lhv_from_separable, u_decomposition
from lhvlab.sampling import make_rng, random_separable_decomposition
from lhvlab.settings import DEFAULT_TOLERANCES

SEED = 20240917
N_RANDOM_MODELS = 100


@pytest.fixture
def tolerances():
    return DEFAULT_TOLERANCES


@pytest.fixture
def rng():
    return make_rng(SEED)


@pytest.fixture
def u_model():
    """The LHV model of U(0.3, 0.7)"""
    return lhv_from_separable(u_decomposition(0.3, 0.7))


@pytest.fixture(scope="session")
def random_models():
    """100 LHV models of seeded random separable two-qubit decompositions"""
    rng = make_rng(SEED)
    return [
        lhv_from_separable(random_separable_decomposition(rng))
        for _ in range(N_RANDOM_MODELS)
    ]
