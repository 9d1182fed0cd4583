"""
CHSH experiments on two-qubit states: spin correlations, the CHSH combination,
its evaluation on LHV models and a deterministic search over measurement settings
"""

import dataclasses
import logging
import math
from typing import Optional

import numpy as np

from lhvlab.lhv_model import (
    KET_MINUS,
    KET_PLUS,
    LhvModel,
    SeparableDecomposition,
    u_decomposition,
)
from lhvlab.operators import (
    DensityOperator,
    DimensionError,
    HermitianOperator,
    expectation,
    hermitian_tensor_product,
    pauli,
    projector,
)
from lhvlab.probability import integrate_product
from lhvlab.settings import DEFAULT_TOLERANCES, Tolerances

_logger = logging.getLogger(__name__)

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2 * math.sqrt(2)
UNIT_NORM_TOLERANCE = 1e-12


class BlochDirectionError(ValueError):
    pass


class BlochDirection:
    """
    A unit vector selecting the spin observable n . sigma

    Args:
        x, y, z (float): components, the norm must be 1 within 1e-12

    Raises:
        BlochDirectionError: the vector is not a unit vector
    """

    __slots__ = ("x", "y", "z")

    def __init__(self, x: float, y: float, z: float):
        norm = math.sqrt(x * x + y * y + z * z)
        if abs(norm - 1) > UNIT_NORM_TOLERANCE:
            raise BlochDirectionError(f"Direction ({x}, {y}, {z}) has norm {norm}, not 1")
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "BlochDirection":
        """Polar angle theta from the z axis and azimuth phi from the x axis"""
        return cls(
            math.sin(theta) * math.cos(phi),
            math.sin(theta) * math.sin(phi),
            math.cos(theta),
        )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_list(self) -> list:
        return [self.x, self.y, self.z]

    def __eq__(self, other):
        if not isinstance(other, BlochDirection):
            return NotImplemented
        return self.as_list() == other.as_list()

    def __repr__(self):
        return f"BlochDirection({self.x}, {self.y}, {self.z})"


@dataclasses.dataclass(frozen=True)
class ChshSettings:
    """The two directions per site of a CHSH experiment"""

    a: BlochDirection
    a_prime: BlochDirection
    b: BlochDirection
    b_prime: BlochDirection

    @classmethod
    def from_angles(cls, thetas, phis=None) -> "ChshSettings":
        """
        Settings from the polar angles (a, a', b, b') and optional azimuths;
        without azimuths the directions lie in the x-z plane
        """
        if phis is None:
            phis = (0.0,) * 4
        return cls(*(BlochDirection.from_angles(t, p) for t, p in zip(thetas, phis)))

    def as_dict(self) -> dict:
        return {
            "a": self.a.as_list(),
            "a_prime": self.a_prime.as_list(),
            "b": self.b.as_list(),
            "b_prime": self.b_prime.as_list(),
        }


@dataclasses.dataclass(frozen=True)
class ChshOptimum:
    """
    Result of :func:`maximize_chsh`

    Attributes:
        settings (ChshSettings): best settings found
        value (float): |CHSH| at the best settings
        thetas (tuple): polar angles of a, a', b, b'
        phis (tuple): azimuths of a, a', b, b'
        grid_angles (np.ndarray): the grid of polar angles
        profile (np.ndarray): for each grid pair (theta_a, theta_a') the largest |CHSH|
        profile_arguments (np.ndarray): grid indices of the best (theta_b, theta_b') per pair
    """

    settings: ChshSettings
    value: float
    thetas: tuple
    phis: tuple
    grid_angles: np.ndarray
    profile: np.ndarray
    profile_arguments: np.ndarray


def spin_observable(n: BlochDirection) -> HermitianOperator:
    """The observable n_x sigma_x + n_y sigma_y + n_z sigma_z with spectrum {-1, +1}"""
    return HermitianOperator(
        n.x * pauli("x").matrix + n.y * pauli("y").matrix + n.z * pauli("z").matrix
    )


def correlation(
    rho: DensityOperator,
    a: BlochDirection,
    b: BlochDirection,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """The spin correlation E(a, b) = tr[rho (a . sigma) x (b . sigma)]"""
    _check_two_qubits(rho)
    observable = hermitian_tensor_product(
        spin_observable(a), spin_observable(b), tolerances=tolerances
    )
    return expectation(rho, observable, tolerances=tolerances)


def chsh_value(
    rho: DensityOperator, s: ChshSettings, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """E(a, b) + E(a, b') + E(a', b) - E(a', b')"""
    return (
        correlation(rho, s.a, s.b, tolerances)
        + correlation(rho, s.a, s.b_prime, tolerances)
        + correlation(rho, s.a_prime, s.b, tolerances)
        - correlation(rho, s.a_prime, s.b_prime, tolerances)
    )


def chsh_from_lhv(
    model: LhvModel, s: ChshSettings, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    The CHSH combination with every correlation computed as an LHV integral

    Raises:
        DimensionError: the model does not describe two qubits
        ResponseRangeError: the model has responses outside the spectrum hull
    """
    if model.dims != (2, 2):
        raise DimensionError(f"CHSH needs two qubits, the model has site dims {model.dims}")

    def lhv_correlation(first: BlochDirection, second: BlochDirection) -> float:
        return integrate_product(
            model.measure,
            model.f1,
            model.f2,
            spin_observable(first),
            spin_observable(second),
            tolerances=tolerances,
        )

    return (
        lhv_correlation(s.a, s.b)
        + lhv_correlation(s.a, s.b_prime)
        + lhv_correlation(s.a_prime, s.b)
        - lhv_correlation(s.a_prime, s.b_prime)
    )


def correlation_tensor(
    rho: DensityOperator, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """The real 3x3 matrix T_ij = tr[rho sigma_i x sigma_j], so that E(a, b) = a^T T b"""
    _check_two_qubits(rho)
    axes = ("x", "y", "z")
    return np.array(
        [
            [
                expectation(
                    rho,
                    hermitian_tensor_product(pauli(i), pauli(j), tolerances=tolerances),
                    tolerances=tolerances,
                )
                for j in axes
            ]
            for i in axes
        ]
    )


def maximize_chsh(
    rho: DensityOperator,
    grid_steps: int = 24,
    refine_iters: int = 50,
    planar: bool = True,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ChshOptimum:
    """
    Search the settings maximising |CHSH|.

    A grid of `grid_steps` polar angles in the x-z plane is scanned for all four
    directions, then the best grid point is refined coordinate by coordinate:
    each angle is moved by +-step while that improves |CHSH|, and the step is
    halved after a sweep without improvement. With `planar` False the azimuths
    are refined as well, starting both from the planar grid optimum and from the
    grid optimum in the planes of the two largest singular directions of the
    correlation tensor. The better of the two refined settings is returned.

    Args:
        rho (DensityOperator): two-qubit state
        grid_steps (int): number of grid angles in [0, 2 pi), at least 4
        refine_iters (int): number of refinement sweeps
        planar (bool): keep all directions in the x-z plane
        tolerances (Tolerances, optional): used for the correlation tensor

    Returns:
        ChshOptimum: the best settings and the scan profile
    """
    if grid_steps < 4:
        raise ValueError(f"grid_steps must be at least 4, got {grid_steps}")
    tensor = correlation_tensor(rho, tolerances=tolerances)

    grid_angles = 2 * np.pi * np.arange(grid_steps) / grid_steps
    profile, profile_arguments, thetas = _grid_scan(tensor, grid_angles)
    _logger.debug(f"Grid optimum {profile.max()} at angles {thetas}")

    starts = [(thetas, np.zeros(4))]
    if not planar:
        starts.append(_principal_plane_start(tensor, grid_angles))
    candidates = [
        _refine(tensor, start_thetas, start_phis, 2 * np.pi / grid_steps, refine_iters, planar)
        for start_thetas, start_phis in starts
    ]
    thetas, phis = max(
        candidates, key=lambda angles: abs(_chsh_from_tensor(tensor, *angles))
    )
    settings = ChshSettings.from_angles(thetas, phis)
    value = abs(chsh_value(rho, settings, tolerances=tolerances))
    _logger.debug(f"Refined optimum {value} at angles {thetas}, azimuths {phis}")
    return ChshOptimum(
        settings=settings,
        value=value,
        thetas=tuple(float(theta) for theta in thetas),
        phis=tuple(float(phi) for phi in phis),
        grid_angles=grid_angles,
        profile=profile,
        profile_arguments=profile_arguments,
    )


def singlet_state() -> DensityOperator:
    """The singlet (|+-> - |-+>) / sqrt(2), with E(a, b) = -a . b"""
    return projector(np.kron(KET_PLUS, KET_MINUS) - np.kron(KET_MINUS, KET_PLUS))


def maximally_mixed_state(dim: int = 4) -> DensityOperator:
    """The state I / dim"""
    return DensityOperator(np.eye(dim) / dim)


def werner_state(p: float) -> DensityOperator:
    """
    p |singlet><singlet| + (1 - p) I / 4, separable for p <= 1/3 and CHSH-violating
    for p > 1/sqrt(2)
    """
    if not 0 <= p <= 1:
        raise ValueError(f"Werner parameter must be in [0, 1], got {p}")
    return DensityOperator(
        p * singlet_state().matrix + (1 - p) * maximally_mixed_state().matrix
    )


def mixed_decomposition() -> SeparableDecomposition:
    """I / 4 as the uniform mixture of the four sigma_z product states"""
    kets = {"+": KET_PLUS, "-": KET_MINUS}
    components = []
    atoms = []
    for label1, ket1 in kets.items():
        for label2, ket2 in kets.items():
            components.append((0.25, projector(ket1), projector(ket2)))
            atoms.append(label1 + label2)
    return SeparableDecomposition(components, atoms=atoms)


def state_from_spec(
    spec: str, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> tuple:
    """
    The state named by a specification as produced by :func:`lhvlab.utils.check_state_spec`

    Returns:
        tuple: (DensityOperator, SeparableDecomposition or None when no decomposition is known)
    """
    name, _, parameter = spec.partition(":")
    decomposition: Optional[SeparableDecomposition] = None
    if name == "singlet":
        state = singlet_state()
    elif name == "mixed":
        decomposition = mixed_decomposition()
        state = decomposition.state(tolerances)
    elif name == "u":
        alpha = float(parameter)
        decomposition = u_decomposition(alpha, 1 - alpha, tolerances)
        state = decomposition.state(tolerances)
    elif name == "werner":
        state = werner_state(float(parameter))
    else:
        raise ValueError(f"Unknown state specification {spec}")
    return state, decomposition


def _directions(thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    return np.stack(
        [np.sin(thetas) * np.cos(phis), np.sin(thetas) * np.sin(phis), np.cos(thetas)],
        axis=-1,
    )


def _chsh_from_tensor(tensor: np.ndarray, thetas: np.ndarray, phis: np.ndarray) -> float:
    a, a_prime, b, b_prime = _directions(thetas, phis)
    return float(
        a @ tensor @ b + a @ tensor @ b_prime + a_prime @ tensor @ b - a_prime @ tensor @ b_prime
    )


def _grid_scan(tensor: np.ndarray, grid_angles: np.ndarray) -> tuple:
    """Best |CHSH| over x-z plane grid directions, per (theta_a, theta_a') pair"""
    grid_steps = len(grid_angles)
    directions = _directions(grid_angles, np.zeros(grid_steps))
    correlations = directions @ tensor @ directions.T

    profile = np.empty((grid_steps, grid_steps))
    profile_arguments = np.empty((grid_steps, grid_steps, 2), dtype=int)
    for index_a in range(grid_steps):
        # axes: (a', b, b')
        values = np.abs(
            correlations[index_a, :, None]
            + correlations[index_a, None, :]
            + correlations[:, :, None]
            - correlations[:, None, :]
        )
        flat = values.reshape(grid_steps, -1)
        best = np.argmax(flat, axis=1)
        profile[index_a] = flat[np.arange(grid_steps), best]
        profile_arguments[index_a] = np.stack(
            np.unravel_index(best, (grid_steps, grid_steps)), axis=-1
        )

    index_a, index_a_prime = np.unravel_index(np.argmax(profile), profile.shape)
    index_b, index_b_prime = profile_arguments[index_a, index_a_prime]
    thetas = grid_angles[[index_a, index_a_prime, index_b, index_b_prime]]
    return profile, profile_arguments, thetas


def _principal_plane_start(tensor: np.ndarray, grid_angles: np.ndarray) -> tuple:
    """
    Grid optimum with a, a' in the plane of the two largest left singular vectors of
    the tensor and b, b' in the plane of the matching right singular vectors, as
    polar angles and azimuths in the laboratory frame
    """
    left, _, right_transposed = np.linalg.svd(tensor)
    # local x and z axes are the two largest singular directions
    frame_a = left[:, [0, 2, 1]]
    frame_b = right_transposed.T[:, [0, 2, 1]]
    _, _, local_thetas = _grid_scan(frame_a.T @ tensor @ frame_b, grid_angles)
    local = _directions(local_thetas, np.zeros(4))
    vectors = np.stack(
        [frame_a @ local[0], frame_a @ local[1], frame_b @ local[2], frame_b @ local[3]]
    )
    thetas = np.arccos(np.clip(vectors[:, 2], -1, 1))
    phis = np.arctan2(vectors[:, 1], vectors[:, 0])
    return thetas, phis


def _refine(tensor, thetas, phis, step, refine_iters, planar) -> tuple:
    angles = np.concatenate([thetas, phis]).astype(float)
    n_free = 4 if planar else 8
    step = step / 2
    best = abs(_chsh_from_tensor(tensor, angles[:4], angles[4:]))
    for _ in range(refine_iters):
        improved = False
        for coordinate in range(n_free):
            for delta in (step, -step):
                candidate = angles.copy()
                candidate[coordinate] += delta
                value = abs(_chsh_from_tensor(tensor, candidate[:4], candidate[4:]))
                if value > best:
                    best = value
                    angles = candidate
                    improved = True
                    break
        if not improved:
            step /= 2
    return angles[:4], angles[4:]


def _check_two_qubits(rho: DensityOperator):
    if rho.dim != 4:
        raise DimensionError(f"Expected a two-qubit state of dimension 4, got {rho.dim}")
