"""
Local hidden-variable models for separable two-site states.

A separable state sum_i p_i rho1_i x rho2_i admits the model with one atom per
component, weights p_i and responses f_k(v, i) = tr[rho_k_i v]. Integrating the
product of responses reproduces tr[rho v1 x v2] for every pair of observables.
"""

import dataclasses
import logging
from typing import Hashable, Iterable, Optional

import numpy as np

from lhvlab.operators import (
    DensityOperator,
    DimensionError,
    HermitianOperator,
    OperatorInvariantError,
    expectation,
    hermitian_tensor_product,
    is_null,
    max_norm,
    partial_trace,
    pauli,
    projector,
    scaled_commutator,
)
from lhvlab.probability import (
    ConditionalStateResponse,
    Event,
    FiniteSampleSpace,
    ProbabilityMeasure,
    ResponseFunction,
    Violation,
    integrate_product,
    measure_of,
    standard_probes,
    validate_model_measure,
    validate_response_range,
)
from lhvlab.settings import DEFAULT_TOLERANCES, Tolerances
from lhvlab.utils import matrix_from_json, matrix_to_json

_logger = logging.getLogger(__name__)

# sigma_z eigenvectors, sigma_z |+-> = +-|+->
KET_PLUS = np.array([1, 0])
KET_MINUS = np.array([0, 1])


class InvalidDecompositionError(ValueError):
    """
    Raised when a separable decomposition violates its invariants

    Attributes:
        violations (list): the Violations found
    """

    def __init__(self, violations: list):
        self.violations = violations
        messages = "\n  ".join(violation.message for violation in violations)
        super().__init__(f"Invalid separable decomposition:\n  {messages}")


@dataclasses.dataclass(frozen=True)
class ProductComponent:
    """One term p rho1 x rho2 of a separable decomposition"""

    weight: float
    site1_state: DensityOperator
    site2_state: DensityOperator


class SeparableDecomposition:
    """
    A convex mixture of product states

    Args:
        components (iterable): ProductComponents or (weight, rho1, rho2) tuples
        atoms (iterable, optional): label per component. Defaults to 0, 1, ...
    """

    def __init__(self, components: Iterable, atoms: Optional[Iterable[Hashable]] = None):
        self.components = tuple(
            component
            if isinstance(component, ProductComponent)
            else ProductComponent(*component)
            for component in components
        )
        if not self.components:
            raise ValueError("A separable decomposition needs at least one component")
        if atoms is None:
            atoms = range(len(self.components))
        self.atoms = tuple(atoms)
        if len(self.atoms) != len(self.components):
            raise ValueError(
                f"Got {len(self.atoms)} atom labels for {len(self.components)} components"
            )

    def __len__(self):
        return len(self.components)

    @property
    def weights(self) -> dict:
        return {
            atom: component.weight for atom, component in zip(self.atoms, self.components)
        }

    @property
    def dims(self) -> tuple:
        first = self.components[0]
        return first.site1_state.dim, first.site2_state.dim

    def state_matrix(self) -> np.ndarray:
        """The matrix sum_i p_i rho1_i x rho2_i, without checking its invariants"""
        return sum(
            component.weight
            * np.kron(component.site1_state.matrix, component.site2_state.matrix)
            for component in self.components
        )

    def state(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> DensityOperator:
        """The decomposed state as a density operator"""
        return DensityOperator(self.state_matrix(), tolerances=tolerances)

    def violations(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> list:
        """
        Check the weights, the site dimensions and the reconstructed state

        Returns:
            list: Violations, empty for a valid decomposition
        """
        measure = ProbabilityMeasure(FiniteSampleSpace(self.atoms), self.weights)
        violations = validate_model_measure(measure, tolerances=tolerances)
        d1, d2 = self.dims
        for atom, component in zip(self.atoms, self.components):
            if (component.site1_state.dim, component.site2_state.dim) != (d1, d2):
                violations.append(
                    Violation(
                        "dimension",
                        f"Component {atom} has site dimensions "
                        f"{(component.site1_state.dim, component.site2_state.dim)}, "
                        f"expected {(d1, d2)}",
                    )
                )
        if not violations:
            try:
                self.state(tolerances=tolerances)
            except OperatorInvariantError as err:
                violations.append(Violation("state", f"Reconstructed state: {err}"))
        return violations


class LhvModel:
    """
    A finite hidden-variable space with measure and local responses, built for a target state

    Args:
        measure (ProbabilityMeasure): distribution of the hidden variable
        f1 (ResponseFunction): response of site 1
        f2 (ResponseFunction): response of site 2
        target_state (DensityOperator): the state whose correlations are reproduced
        dims (tuple): site dimensions (d1, d2)
    """

    def __init__(
        self,
        measure: ProbabilityMeasure,
        f1: ResponseFunction,
        f2: ResponseFunction,
        target_state: DensityOperator,
        dims: tuple,
    ):
        if dims[0] * dims[1] != target_state.dim:
            raise DimensionError(
                f"Site dimensions {dims} do not match the target dimension {target_state.dim}"
            )
        self.measure = measure
        self.f1 = f1
        self.f2 = f2
        self.target_state = target_state
        self.dims = tuple(dims)

    @property
    def space(self) -> FiniteSampleSpace:
        return self.measure.space

    def responses(self, v1: HermitianOperator, v2: HermitianOperator) -> list:
        """Per-atom records (atom, weight, f1(v1), f2(v2))"""
        return [
            (atom, weight, self.f1(v1, atom), self.f2(v2, atom))
            for atom, weight in self.measure.weights.items()
        ]

    def violations(
        self, tolerances: Tolerances = DEFAULT_TOLERANCES, probes: Optional[tuple] = None
    ) -> list:
        """
        Measure and response-range violations; the standard probe family is used by default

        Args:
            tolerances (Tolerances, optional): tolerances of the checks
            probes (tuple, optional): (site 1 probes, site 2 probes)

        Returns:
            list: Violations, empty for a valid model
        """
        if probes is None:
            probes = (standard_probes(self.dims[0]), standard_probes(self.dims[1]))
        violations = validate_model_measure(self.measure, tolerances=tolerances)
        for response, site_probes in zip((self.f1, self.f2), probes):
            violations.extend(
                validate_response_range(
                    response, self.space, site_probes, tolerances=tolerances
                )
            )
        return violations

    def __repr__(self):
        return f"LhvModel(atoms={list(self.space.atoms)}, dims={self.dims})"


@dataclasses.dataclass(frozen=True)
class ReproductionReport:
    """Left and right-hand side of the reproduction condition for one observable pair"""

    lhs: float
    rhs: float
    passed: bool

    @property
    def error(self) -> float:
        return abs(self.lhs - self.rhs)

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


@dataclasses.dataclass(frozen=True)
class WitnessReport:
    """
    Outcome of the noncommutativity witness

    Attributes:
        event (Event): atoms at which both responses to the scaled commutators are nonzero
        measure (float): measure of the event
        commutators_nonnull (bool): both commutators differ from the null operator
        commutator_norms (tuple): entry max-norm of the scaled commutator per site
    """

    event: Event
    measure: float
    commutators_nonnull: bool
    commutator_norms: tuple

    @property
    def consistent(self) -> bool:
        """A positive measure can only occur when both commutators are non-null"""
        return self.measure <= 0 or self.commutators_nonnull


@dataclasses.dataclass(frozen=True)
class UFamilyState:
    """
    The separable state alpha |+,+><+,+| + beta |-,-><-,-|

    Raises:
        ValueError: alpha or beta is negative, or they do not sum to 1
    """

    alpha: float
    beta: float
    tolerances: Tolerances = dataclasses.field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(
                f"alpha and beta must be non-negative, got {self.alpha} and {self.beta}"
            )
        if abs(self.alpha + self.beta - 1) > self.tolerances.tol_measure:
            raise ValueError(
                f"alpha + beta must be 1, got {self.alpha} + {self.beta} = "
                f"{self.alpha + self.beta}"
            )

    def density_operator(self) -> DensityOperator:
        # basis ordering (++, +-, -+, --)
        return DensityOperator(np.diag([self.alpha, 0, 0, self.beta]), self.tolerances)

    def decomposition(self) -> SeparableDecomposition:
        plus = projector(KET_PLUS)
        minus = projector(KET_MINUS)
        return SeparableDecomposition(
            [(self.alpha, plus, plus), (self.beta, minus, minus)], atoms=("+", "-")
        )


def build_u_state(
    alpha: float, beta: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> DensityOperator:
    """The 4x4 density operator diag(alpha, 0, 0, beta) of the U family"""
    return UFamilyState(alpha, beta, tolerances).density_operator()


def u_decomposition(
    alpha: float, beta: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> SeparableDecomposition:
    """The two-component decomposition of U(alpha, beta) with atoms '+' and '-'"""
    return UFamilyState(alpha, beta, tolerances).decomposition()


def lhv_from_separable(
    decomp: SeparableDecomposition, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> LhvModel:
    """
    Build the LHV model of a separable decomposition.

    The atoms are the components, the measure their weights, and the response of
    site k at atom i is the expectation value in the conditional state rho_k_i.

    Args:
        decomp (SeparableDecomposition): the decomposition
        tolerances (Tolerances, optional): used to validate the decomposition

    Returns:
        LhvModel: model reproducing every correlation tr[rho v1 x v2]

    Raises:
        InvalidDecompositionError: the decomposition violates its invariants
    """
    if violations := decomp.violations(tolerances=tolerances):
        raise InvalidDecompositionError(violations)

    space = FiniteSampleSpace(decomp.atoms)
    measure = ProbabilityMeasure(space, decomp.weights)
    f1 = ConditionalStateResponse(
        site=1,
        states={a: c.site1_state for a, c in zip(decomp.atoms, decomp.components)},
        tolerances=tolerances,
    )
    f2 = ConditionalStateResponse(
        site=2,
        states={a: c.site2_state for a, c in zip(decomp.atoms, decomp.components)},
        tolerances=tolerances,
    )
    _logger.debug(f"Built LHV model with {len(space)} atoms and site dims {decomp.dims}")
    return LhvModel(
        measure=measure,
        f1=f1,
        f2=f2,
        target_state=decomp.state(tolerances=tolerances),
        dims=decomp.dims,
    )


def verify_reproduction(
    model: LhvModel,
    v1: HermitianOperator,
    v2: HermitianOperator,
    tol: float = DEFAULT_TOLERANCES.tol_repro,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ReproductionReport:
    """
    Compare the LHV integral with the quantum correlation tr[rho v1 x v2]

    Raises:
        DimensionError: v1 or v2 does not fit its site
    """
    _check_site_dims(model, v1, v2)
    lhs = integrate_product(
        model.measure, model.f1, model.f2, v1, v2, tolerances=tolerances
    )
    rhs = expectation(
        model.target_state,
        hermitian_tensor_product(v1, v2, tolerances=tolerances),
        tolerances=tolerances,
    )
    return ReproductionReport(lhs=lhs, rhs=rhs, passed=abs(lhs - rhs) <= tol)


def verify_batch(
    model: LhvModel,
    probe_pairs: Iterable,
    tol: float = DEFAULT_TOLERANCES.tol_repro,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list:
    """Run verify_reproduction for every (v1, v2) pair"""
    return [
        verify_reproduction(model, v1, v2, tol=tol, tolerances=tolerances)
        for v1, v2 in probe_pairs
    ]


def eq5_integral(
    alpha: float, beta: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    Integral of f1(i[sx, sy]) f2(i[sx, sy]) for the U(alpha, beta) model.

    Since i[sx, sy] = -2 sz, the responses are -2 at atom '+' and +2 at atom '-',
    and the integral equals 4 (alpha + beta) = 4 for every alpha and beta.
    """
    model = lhv_from_separable(u_decomposition(alpha, beta, tolerances), tolerances)
    witness_operator = scaled_commutator(pauli("x"), pauli("y"), tolerances=tolerances)
    return integrate_product(
        model.measure,
        model.f1,
        model.f2,
        witness_operator,
        witness_operator,
        tolerances=tolerances,
    )


def witness_noncommutativity(
    model: LhvModel,
    a1: HermitianOperator,
    b1: HermitianOperator,
    a2: HermitianOperator,
    b2: HermitianOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> WitnessReport:
    """
    Find the atoms at which both responses to the scaled commutators i[a_k, b_k] are nonzero.

    As the response to the null operator vanishes, a positive measure of this
    event means neither commutator is null.

    Args:
        model (LhvModel): the model
        a1, b1 (HermitianOperator): operators of site 1
        a2, b2 (HermitianOperator): operators of site 2
        tolerances (Tolerances, optional): tol_null separates zero from nonzero responses

    Returns:
        WitnessReport: event, its measure and the commutator checks
    """
    c1 = scaled_commutator(a1, b1, tolerances=tolerances)
    c2 = scaled_commutator(a2, b2, tolerances=tolerances)
    _check_site_dims(model, c1, c2)
    members = [
        atom
        for atom in model.space
        if abs(model.f1(c1, atom)) > tolerances.tol_null
        and abs(model.f2(c2, atom)) > tolerances.tol_null
    ]
    event = Event(model.space, members)
    report = WitnessReport(
        event=event,
        measure=measure_of(model.measure, event),
        commutators_nonnull=not is_null(c1, tolerances.tol_null)
        and not is_null(c2, tolerances.tol_null),
        commutator_norms=(max_norm(c1), max_norm(c2)),
    )
    if not report.consistent:
        _logger.warning(f"Witness event {event} has positive measure for a null commutator")
    return report


def check_locality(model: LhvModel, probes: Optional[tuple] = None) -> list:
    """
    Check that no response value changes when the other site evaluates other operators

    Every response value is evaluated once, then again after each evaluation of the
    other site, and all values must be identical.

    Args:
        model (LhvModel): the model
        probes (tuple, optional): (site 1 probes, site 2 probes), standard probes by default

    Returns:
        list: Violations of kind 'locality'
    """
    if probes is None:
        probes = (standard_probes(model.dims[0]), standard_probes(model.dims[1]))
    violations = []
    pairs = (
        (model.f1, model.f2, probes[0], probes[1]),
        (model.f2, model.f1, probes[1], probes[0]),
    )
    for response, other, own_probes, other_probes in pairs:
        for atom in model.space:
            for index, probe in enumerate(own_probes):
                reference = response(probe, atom)
                for other_probe in other_probes:
                    other(other_probe, atom)
                    value = response(probe, atom)
                    if value != reference:
                        violations.append(
                            Violation(
                                "locality",
                                f"Site {response.site} response to probe {index} at atom "
                                f"{atom} changed from {reference} to {value}",
                                abs(value - reference),
                            )
                        )
    return violations


def decomposition_from_dict(
    information: dict, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> SeparableDecomposition:
    """
    Read a decomposition from a dictionary like::

        components:
          - weight: 0.5
            atom: "+"              # optional
            site1: {bloch: [0, 0, 1]}
            site2: {matrix: [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}

    Matrices are row-major arrays of [re, im] pairs (plain reals are accepted too).
    Weights are not checked here; :func:`lhv_from_separable` does that.
    """
    try:
        components_info = information["components"]
    except KeyError as err:
        _logger.warning(err)
        raise KeyError("Entry 'components' not found in the decomposition file")
    components = []
    atoms = []
    for index, component_info in enumerate(components_info):
        components.append(
            ProductComponent(
                weight=float(component_info["weight"]),
                site1_state=_state_from_info(component_info["site1"], tolerances),
                site2_state=_state_from_info(component_info["site2"], tolerances),
            )
        )
        atoms.append(component_info.get("atom", index))
    return SeparableDecomposition(components, atoms=atoms)


def model_to_dict(model: LhvModel) -> dict:
    """
    Export a model built from conditional states

    Returns:
        dict: atoms, weights, per-atom conditional states, the target state and its
        reduced states per site
    """
    if not all(isinstance(f, ConditionalStateResponse) for f in (model.f1, model.f2)):
        raise TypeError("Only models with conditional-state responses can be exported")
    return {
        "atoms": list(model.space.atoms),
        "weights": [model.measure[atom] for atom in model.space],
        "dims": list(model.dims),
        "components": [
            {
                "atom": atom,
                "weight": model.measure[atom],
                "site1": {"matrix": matrix_to_json(model.f1.states[atom].matrix)},
                "site2": {"matrix": matrix_to_json(model.f2.states[atom].matrix)},
            }
            for atom in model.space
        ],
        "target_state": matrix_to_json(model.target_state.matrix),
        "marginals": [
            matrix_to_json(partial_trace(model.target_state, model.dims, keep=site).matrix)
            for site in (1, 2)
        ],
    }


def model_from_dict(information: dict, tolerances: Tolerances = DEFAULT_TOLERANCES) -> LhvModel:
    """Import a model written by :func:`model_to_dict`"""
    return lhv_from_separable(
        decomposition_from_dict(information, tolerances=tolerances), tolerances=tolerances
    )


def bloch_state(vector) -> DensityOperator:
    """The qubit state (I + r . sigma) / 2 of a Bloch vector with |r| <= 1"""
    x, y, z = (float(component) for component in vector)
    return DensityOperator(
        0.5 * (np.eye(2) + x * pauli("x").matrix + y * pauli("y").matrix + z * pauli("z").matrix)
    )


def _state_from_info(state_info, tolerances: Tolerances) -> DensityOperator:
    if isinstance(state_info, dict):
        if "bloch" in state_info:
            return bloch_state(state_info["bloch"])
        if "matrix" in state_info:
            return DensityOperator(matrix_from_json(state_info["matrix"]), tolerances)
        raise KeyError(f"State needs a 'bloch' or 'matrix' entry, got {list(state_info)}")
    return DensityOperator(matrix_from_json(state_info), tolerances)


def _check_site_dims(model: LhvModel, v1: HermitianOperator, v2: HermitianOperator):
    if (v1.dim, v2.dim) != model.dims:
        raise DimensionError(
            f"Operators of dimensions {(v1.dim, v2.dim)} do not fit sites {model.dims}"
        )
