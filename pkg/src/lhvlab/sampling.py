"""
Seeded random operators, states, decompositions and CHSH settings.

All functions draw from a numpy Generator, so a fixed seed reproduces every sample.
"""

import logging

import numpy as np

from lhvlab.chsh import BlochDirection, ChshSettings
from lhvlab.lhv_model import SeparableDecomposition
from lhvlab.operators import HermitianOperator, projector

_logger = logging.getLogger(__name__)

MIN_COMPONENTS = 2
MAX_COMPONENTS = 8


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> HermitianOperator:
    """
    Entries uniform in [-scale, scale] for real and imaginary parts, symmetrised as (A + A^dagger) / 2
    """
    entries = rng.uniform(-scale, scale, (dim, dim)) + 1j * rng.uniform(
        -scale, scale, (dim, dim)
    )
    return HermitianOperator((entries + entries.conj().T) / 2)


def random_pure_state(rng: np.random.Generator, dim: int):
    """Projector on a normalised complex Gaussian vector"""
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return projector(vector)


def random_separable_decomposition(
    rng: np.random.Generator, dims: tuple = (2, 2), n_components: int = None
) -> SeparableDecomposition:
    """
    Random pure product states with weights drawn uniformly from the simplex

    Args:
        rng (np.random.Generator): random number generator
        dims (tuple, optional): site dimensions. Defaults to two qubits
        n_components (int, optional): number of components. Defaults to a random
            number between 2 and 8

    Returns:
        SeparableDecomposition: the decomposition with atoms 0 .. n-1
    """
    if n_components is None:
        n_components = int(rng.integers(MIN_COMPONENTS, MAX_COMPONENTS + 1))
    weights = rng.dirichlet(np.ones(n_components))
    components = [
        (weight, random_pure_state(rng, dims[0]), random_pure_state(rng, dims[1]))
        for weight in weights
    ]
    _logger.debug(f"Drew a separable decomposition with {n_components} components")
    return SeparableDecomposition(components)


def random_probe_pairs(rng: np.random.Generator, dims: tuple, n_pairs: int) -> list:
    """n_pairs of random Hermitian (v1, v2) for the two sites"""
    return [
        (random_hermitian(rng, dims[0]), random_hermitian(rng, dims[1]))
        for _ in range(n_pairs)
    ]


def random_bloch_direction(rng: np.random.Generator) -> BlochDirection:
    """Direction drawn uniformly from the sphere"""
    vector = rng.normal(size=3)
    vector /= np.linalg.norm(vector)
    return BlochDirection(*vector)


def random_settings(rng: np.random.Generator) -> ChshSettings:
    return ChshSettings(*(random_bloch_direction(rng) for _ in range(4)))
