"""
Dense complex-matrix kernel: Hermitian and density operators, tensor products,
commutators, spectra and expectation values
"""

import functools
import itertools
import logging

import numpy as np
import scipy.linalg

from lhvlab.settings import DEFAULT_TOLERANCES, Tolerances

_logger = logging.getLogger(__name__)

PAULI_AXES = ("x", "y", "z")

_PAULI_ENTRIES = {
    "i": [[1, 0], [0, 1]],
    "x": [[0, 1], [1, 0]],
    "y": [[0, -1j], [1j, 0]],
    "z": [[1, 0], [0, -1]],
}


class DimensionError(ValueError):
    """Raised on dimension mismatches or when a product exceeds the maximum dimension"""


class OperatorInvariantError(ValueError):
    """Raised when a matrix does not satisfy the invariants of its operator type"""


def as_complex_matrix(
    entries, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Convert entries into a read-only square complex matrix

    Args:
        entries (array_like): dim x dim entries
        tolerances (Tolerances, optional): used for the maximum dimension

    Returns:
        np.ndarray: complex128 copy of the entries

    Raises:
        OperatorInvariantError: the entries are not square or not finite
        DimensionError: the dimension exceeds `tolerances.max_dim`
    """
    matrix = np.array(entries, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise OperatorInvariantError(
            f"Expected a non-empty square matrix, got shape {matrix.shape}"
        )
    if matrix.shape[0] > tolerances.max_dim:
        raise DimensionError(
            f"Dimension {matrix.shape[0]} exceeds the maximum of {tolerances.max_dim}"
        )
    if not np.all(np.isfinite(matrix)):
        raise OperatorInvariantError("Matrix contains NaN or Inf entries")
    matrix.setflags(write=False)
    return matrix


def max_norm(a) -> float:
    """Largest absolute value of the entries of a"""
    return float(np.max(np.abs(_entries(a))))


def is_null(a, tol: float) -> bool:
    """True if every entry of a is at most tol in absolute value"""
    return max_norm(a) <= tol


class HermitianOperator:
    """
    A self-adjoint matrix acting on a finite-dimensional Hilbert space

    Args:
        entries (array_like): square matrix which equals its conjugate transpose
        tolerances (Tolerances, optional): tol_herm is used for the Hermiticity check

    Attributes:
        matrix (np.ndarray): read-only complex matrix
    """

    def __init__(self, entries, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.matrix = as_complex_matrix(_entries(entries), tolerances=tolerances)
        deviation = max_norm(self.matrix - self.matrix.conj().T)
        if deviation > tolerances.tol_herm:
            raise OperatorInvariantError(
                f"Matrix is not Hermitian: max |A - A^dagger| = {deviation:.3g}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __neg__(self):
        return HermitianOperator(-self.matrix)

    def __mul__(self, scalar: float):
        return HermitianOperator(scalar * self.matrix)

    __rmul__ = __mul__

    def __add__(self, other):
        return HermitianOperator(self.matrix + _entries(other))

    def __sub__(self, other):
        return HermitianOperator(self.matrix - _entries(other))

    def __eq__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class DensityOperator(HermitianOperator):
    """
    A positive, unit-trace Hermitian operator representing a quantum state

    Args:
        entries (array_like): the density matrix
        tolerances (Tolerances, optional): tol_herm, tol_trace and tol_psd are checked
    """

    def __init__(self, entries, tolerances: Tolerances = DEFAULT_TOLERANCES):
        super().__init__(entries, tolerances=tolerances)
        trace = np.trace(self.matrix).real
        if abs(trace - 1) > tolerances.tol_trace:
            raise OperatorInvariantError(f"Trace of a density operator is {trace}, not 1")
        lowest = float(np.linalg.eigvalsh(self.matrix)[0])
        if lowest < -tolerances.tol_psd:
            raise OperatorInvariantError(
                f"Density operator has a negative eigenvalue {lowest:.3g}"
            )


class SpectrumBounds:
    """
    Infimum I(v) and supremum S(v) of the spectrum of a Hermitian operator

    Args:
        infimum (float): smallest eigenvalue
        supremum (float): largest eigenvalue
    """

    __slots__ = ("infimum", "supremum")

    def __init__(self, infimum: float, supremum: float):
        if infimum > supremum:
            raise ValueError(f"Infimum {infimum} is larger than supremum {supremum}")
        self.infimum = float(infimum)
        self.supremum = float(supremum)

    def contains(self, value: float, tol: float = 0.0) -> bool:
        """True if value lies in [infimum - tol, supremum + tol]"""
        return self.infimum - tol <= value <= self.supremum + tol

    def as_tuple(self) -> tuple:
        return self.infimum, self.supremum

    def __iter__(self):
        return iter(self.as_tuple())

    def __eq__(self, other):
        if not isinstance(other, SpectrumBounds):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __repr__(self):
        return f"SpectrumBounds(infimum={self.infimum}, supremum={self.supremum})"


@functools.lru_cache(maxsize=None)
def pauli(axis: str) -> HermitianOperator:
    """
    The 2x2 Pauli matrix for axis x, y or z. Basis ordering is (|+>, |->) with
    sigma_z |+-> = +-|+->
    """
    try:
        entries = _PAULI_ENTRIES[axis.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"Pauli axis {axis} is not one of {PAULI_AXES}")
    return HermitianOperator(entries)


def identity(dim: int) -> HermitianOperator:
    """The identity operator of dimension dim"""
    return HermitianOperator(np.eye(dim))


def null_operator(dim: int) -> HermitianOperator:
    """The null operator of dimension dim"""
    return HermitianOperator(np.zeros((dim, dim)))


def projector(vector) -> DensityOperator:
    """
    The pure state |psi><psi| of a vector, which is normalised first

    Args:
        vector (array_like): state vector, must be non-zero

    Returns:
        DensityOperator: rank-one projector
    """
    psi = np.asarray(vector, dtype=np.complex128).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise OperatorInvariantError("Cannot build a projector from the zero vector")
    psi = psi / norm
    return DensityOperator(np.outer(psi, psi.conj()))


def tensor_product(
    a, b, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Kronecker product of two square matrices

    Args:
        a: square matrix or operator of dimension m
        b: square matrix or operator of dimension n
        tolerances (Tolerances, optional): max_dim guards the product size

    Returns:
        np.ndarray: matrix of dimension m * n

    Raises:
        DimensionError: m * n exceeds the maximum dimension
    """
    a_entries = _entries(a)
    b_entries = _entries(b)
    dim = a_entries.shape[0] * b_entries.shape[0]
    if dim > tolerances.max_dim:
        raise DimensionError(
            f"Tensor product of dimension {dim} exceeds the maximum of {tolerances.max_dim}"
        )
    return as_complex_matrix(np.kron(a_entries, b_entries), tolerances=tolerances)


def hermitian_tensor_product(
    a: HermitianOperator,
    b: HermitianOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> HermitianOperator:
    """The tensor product v_1 x v_2 as a Hermitian operator"""
    return HermitianOperator(tensor_product(a, b, tolerances=tolerances), tolerances)


def commutator(a: HermitianOperator, b: HermitianOperator) -> np.ndarray:
    """The commutator ab - ba, which is anti-Hermitian for Hermitian a and b"""
    a_entries, b_entries = _same_dimension(a, b)
    return a_entries @ b_entries - b_entries @ a_entries


def scaled_commutator(
    a: HermitianOperator,
    b: HermitianOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> HermitianOperator:
    """
    The Hermitian operator i[a, b]

    Example:
        scaled_commutator(pauli("x"), pauli("y")) equals -2 sigma_z exactly
    """
    return HermitianOperator(1j * commutator(a, b), tolerances=tolerances)


def spectrum_bounds(v: HermitianOperator) -> SpectrumBounds:
    """
    Smallest and largest eigenvalue of a Hermitian operator

    Raises:
        numpy.linalg.LinAlgError: the eigensolver did not converge
    """
    entries = _entries(v)
    try:
        eigenvalues = scipy.linalg.eigvalsh(entries)
    except np.linalg.LinAlgError as err:
        _logger.warning(
            f"Eigensolver failed for operator of dimension {entries.shape[0]}: {err}"
        )
        raise
    return SpectrumBounds(eigenvalues[0], eigenvalues[-1])


def expectation(
    rho: DensityOperator,
    v: HermitianOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """
    The expectation value tr[rho v]

    Args:
        rho (DensityOperator): the state
        v (HermitianOperator): the observable
        tolerances (Tolerances, optional): tol_herm bounds the imaginary residue

    Returns:
        float: real part of the trace

    Raises:
        DimensionError: rho and v differ in dimension
        OperatorInvariantError: the imaginary part exceeds tol_herm
    """
    rho_entries, v_entries = _same_dimension(rho, v)
    # tr[AB] without forming the product
    value = np.sum(rho_entries * v_entries.T)
    if abs(value.imag) > tolerances.tol_herm:
        raise OperatorInvariantError(
            f"Expectation value has an imaginary residue of {value.imag:.3g}"
        )
    return float(value.real)


def partial_trace(
    rho: DensityOperator, dims: tuple, keep: int
) -> DensityOperator:
    """
    Reduced state of one site of a bipartite state

    Args:
        rho (DensityOperator): state on H_1 x H_2
        dims (tuple): the site dimensions (d_1, d_2)
        keep (int): site to keep, 1 or 2

    Returns:
        DensityOperator: the reduced state of site `keep`
    """
    d1, d2 = dims
    if d1 * d2 != rho.dim:
        raise DimensionError(f"Site dimensions {dims} do not match state dimension {rho.dim}")
    tensor = rho.matrix.reshape(d1, d2, d1, d2)
    if keep == 1:
        reduced = np.einsum("ijkj->ik", tensor)
    elif keep == 2:
        reduced = np.einsum("ijil->jl", tensor)
    else:
        raise ValueError(f"Site must be 1 or 2, got {keep}")
    return DensityOperator(reduced)


def pauli_words(n_qubits: int) -> dict:
    """
    All 4^n Pauli words on n qubits

    Args:
        n_qubits (int): number of qubits

    Returns:
        dict: label (e.g. "IX", "ZZ") -> HermitianOperator
    """
    words = dict()
    for letters in itertools.product("IXYZ", repeat=n_qubits):
        matrix = np.array([[1]], dtype=np.complex128)
        for letter in letters:
            matrix = np.kron(matrix, _PAULI_ENTRIES[letter.lower()])
        words["".join(letters)] = HermitianOperator(matrix)
    return words


def gell_mann(dim: int) -> list:
    """
    The dim^2 - 1 generalized Gell-Mann matrices: symmetric, antisymmetric and
    diagonal families
    """
    matrices = []
    for j, k in itertools.combinations(range(dim), 2):
        symmetric = np.zeros((dim, dim), dtype=np.complex128)
        symmetric[j, k] = symmetric[k, j] = 1
        antisymmetric = np.zeros((dim, dim), dtype=np.complex128)
        antisymmetric[j, k] = -1j
        antisymmetric[k, j] = 1j
        matrices.extend([HermitianOperator(symmetric), HermitianOperator(antisymmetric)])
    for level in range(1, dim):
        diagonal = np.zeros(dim)
        diagonal[:level] = 1
        diagonal[level] = -level
        diagonal *= np.sqrt(2 / (level * (level + 1)))
        matrices.append(HermitianOperator(np.diag(diagonal)))
    return matrices


def _entries(a) -> np.ndarray:
    if isinstance(a, HermitianOperator):
        return a.matrix
    return np.asarray(a, dtype=np.complex128)


def _same_dimension(a, b) -> tuple:
    a_entries = _entries(a)
    b_entries = _entries(b)
    if a_entries.shape != b_entries.shape:
        raise DimensionError(
            f"Dimension mismatch: {a_entries.shape} versus {b_entries.shape}"
        )
    return a_entries, b_entries

