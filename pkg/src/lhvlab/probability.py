"""
Finite classical probability spaces, response functions and the integral of
products of response values
"""

import dataclasses
import logging
import math
from typing import Callable, Hashable, Iterable, Optional

import numpy as np

from lhvlab.operators import (
    DensityOperator,
    HermitianOperator,
    expectation,
    gell_mann,
    identity,
    is_null,
    null_operator,
    pauli_words,
    scaled_commutator,
    spectrum_bounds,
)
from lhvlab.settings import DEFAULT_TOLERANCES, Tolerances

_logger = logging.getLogger(__name__)

SITES = (1, 2)


class SampleSpaceError(ValueError):
    """Raised when spaces, events, measures or response functions do not fit together"""


class ResponseRangeError(ValueError):
    """Raised when a response value falls outside the spectrum of its operator"""


@dataclasses.dataclass(frozen=True)
class Violation:
    """
    A violated invariant reported as data

    Attributes:
        kind (str): e.g. "negativity", "normalization", "range", "null-rule"
        message (str): human-readable description
        excess (float, optional): size of the violation
    """

    kind: str
    message: str
    excess: Optional[float] = None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class FiniteSampleSpace:
    """
    A nonempty finite space of atoms; every subset is an event

    Args:
        atoms (iterable): unique, hashable atom labels. The order is kept.
    """

    def __init__(self, atoms: Iterable[Hashable]):
        self.atoms = tuple(atoms)
        if not self.atoms:
            raise SampleSpaceError("A sample space needs at least one atom")
        if len(set(self.atoms)) != len(self.atoms):
            raise SampleSpaceError(f"Atoms are not unique: {self.atoms}")

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __contains__(self, atom):
        return atom in self.atoms

    def __eq__(self, other):
        if not isinstance(other, FiniteSampleSpace):
            return NotImplemented
        return set(self.atoms) == set(other.atoms)

    def __hash__(self):
        return hash(frozenset(self.atoms))

    def __repr__(self):
        return f"FiniteSampleSpace({list(self.atoms)})"

    def full_event(self) -> "Event":
        return Event(self, self.atoms)

    def empty_event(self) -> "Event":
        return Event(self, ())


class Event:
    """
    A subset of the atoms of a sample space

    Args:
        space (FiniteSampleSpace): the sample space
        members (iterable): atoms belonging to the event
    """

    def __init__(self, space: FiniteSampleSpace, members: Iterable[Hashable]):
        self.space = space
        members = set(members)
        if outside := members.difference(space.atoms):
            raise SampleSpaceError(f"Atoms {sorted(map(str, outside))} are not in {space}")
        # keep the ordering of the space
        self.members = tuple(atom for atom in space.atoms if atom in members)

    def __or__(self, other):
        _check_same_space(self.space, other.space)
        return Event(self.space, self.members + other.members)

    def __and__(self, other):
        _check_same_space(self.space, other.space)
        return Event(self.space, set(self.members).intersection(other.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return self.space == other.space and set(self.members) == set(other.members)

    __hash__ = None

    def __repr__(self):
        return f"Event({list(self.members)})"


class ProbabilityMeasure:
    """
    Weights on the atoms of a finite sample space.

    Construction only checks that the weights cover exactly the atoms; use
    :func:`validate_model_measure` for non-negativity and normalisation.

    Args:
        space (FiniteSampleSpace): the sample space
        weights (dict): atom -> weight
    """

    def __init__(self, space: FiniteSampleSpace, weights: dict):
        if set(weights.keys()) != set(space.atoms):
            raise SampleSpaceError(
                f"Measure domain {sorted(map(str, weights))} differs from the atoms {space}"
            )
        self.space = space
        self.weights = {atom: float(weights[atom]) for atom in space.atoms}

    @classmethod
    def from_weights(cls, weights: dict) -> "ProbabilityMeasure":
        """Measure on the space spanned by the keys of weights"""
        return cls(FiniteSampleSpace(weights.keys()), weights)

    def __getitem__(self, atom) -> float:
        return self.weights[atom]

    def mixture(self, other: "ProbabilityMeasure", weight: float) -> "ProbabilityMeasure":
        """The measure weight * self + (1 - weight) * other on the same space"""
        _check_same_space(self.space, other.space)
        return ProbabilityMeasure(
            self.space,
            {
                atom: weight * self.weights[atom] + (1 - weight) * other.weights[atom]
                for atom in self.space
            },
        )

    def __repr__(self):
        return f"ProbabilityMeasure({self.weights})"


class ResponseFunction:
    """
    Local response f_k(v, omega) of site k.

    The evaluate callable only receives the operator of its own site and the atom,
    so a response can never depend on the operator chosen at the other site.

    Args:
        site (int): 1 or 2
        evaluate (callable): (HermitianOperator, atom) -> float
        space (FiniteSampleSpace, optional): the atoms the response is defined on
    """

    def __init__(
        self,
        site: int,
        evaluate: Callable[[HermitianOperator, Hashable], float],
        space: Optional[FiniteSampleSpace] = None,
    ):
        if site not in SITES:
            raise ValueError(f"Site must be one of {SITES}, got {site}")
        self.site = site
        self._evaluate = evaluate
        self.space = space

    def __call__(self, v: HermitianOperator, atom: Hashable) -> float:
        return float(self._evaluate(v, atom))


class ConditionalStateResponse(ResponseFunction):
    """
    Response given by the expectation value of a conditional state per atom:
    f_k(v, omega) = tr[rho_omega v]

    Args:
        site (int): 1 or 2
        states (dict): atom -> DensityOperator of this site
        tolerances (Tolerances, optional): used for the expectation values
    """

    def __init__(
        self,
        site: int,
        states: dict,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ):
        dims = {state.dim for state in states.values()}
        if len(dims) > 1:
            raise SampleSpaceError(f"Conditional states of site {site} differ in dimension")
        self.states = dict(states)
        self.tolerances = tolerances
        super().__init__(
            site=site, evaluate=self._expectation, space=FiniteSampleSpace(states.keys())
        )

    @property
    def dim(self) -> int:
        return next(iter(self.states.values())).dim

    def _expectation(self, v: HermitianOperator, atom: Hashable) -> float:
        try:
            state: DensityOperator = self.states[atom]
        except KeyError:
            raise SampleSpaceError(f"Atom {atom} is not known to the response of site {self.site}")
        return expectation(state, v, tolerances=self.tolerances)


def measure_of(measure: ProbabilityMeasure, event: Event) -> float:
    """
    Measure of an event: the sum of the weights of its members

    Raises:
        SampleSpaceError: the event lives on another space
    """
    _check_same_space(measure.space, event.space)
    return math.fsum(measure.weights[atom] for atom in event.members)


def integrate_product(
    measure: ProbabilityMeasure,
    f1: ResponseFunction,
    f2: ResponseFunction,
    v1: HermitianOperator,
    v2: HermitianOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    check_range: bool = True,
) -> float:
    """
    Integral of f1(v1, omega) f2(v2, omega) over the measure, a finite sum for finite spaces

    Args:
        measure (ProbabilityMeasure): the hidden-variable distribution
        f1 (ResponseFunction): response of site 1
        f2 (ResponseFunction): response of site 2
        v1 (HermitianOperator): observable of site 1
        v2 (HermitianOperator): observable of site 2
        tolerances (Tolerances, optional): tol_range is used for the range check
        check_range (bool, optional): verify every response value lies in the spectrum hull

    Returns:
        float: sum over omega of M(omega) f1(v1, omega) f2(v2, omega)

    Raises:
        SampleSpaceError: wrong sites, or responses defined on another space
        ResponseRangeError: a response value lies outside [I(v), S(v)]
    """
    _check_site(f1, 1)
    _check_site(f2, 2)
    for response in (f1, f2):
        if response.space is not None:
            _check_same_space(measure.space, response.space)

    bounds = (spectrum_bounds(v1), spectrum_bounds(v2)) if check_range else None
    terms = []
    for atom, weight in measure.weights.items():
        value1 = f1(v1, atom)
        value2 = f2(v2, atom)
        if check_range:
            for site, value, bound in zip(SITES, (value1, value2), bounds):
                if not bound.contains(value, tolerances.tol_range):
                    raise ResponseRangeError(
                        f"Response of site {site} at atom {atom} is {value}, outside "
                        f"[{bound.infimum}, {bound.supremum}]"
                    )
        terms.append(weight * value1 * value2)
    return math.fsum(terms)


def validate_model_measure(
    measure: ProbabilityMeasure, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> list:
    """
    Check non-negativity and normalisation of a measure

    Returns:
        list: Violation per negative or non-finite weight, plus one for the normalisation
    """
    violations = []
    for atom, weight in measure.weights.items():
        if not math.isfinite(weight):
            violations.append(
                Violation("finiteness", f"Weight of atom {atom} is {weight}")
            )
        elif weight < -tolerances.tol_measure:
            violations.append(
                Violation(
                    "negativity", f"Weight of atom {atom} is negative: {weight}", -weight
                )
            )
    if all(violation.kind != "finiteness" for violation in violations):
        total = math.fsum(measure.weights.values())
        if abs(total - 1) > tolerances.tol_measure:
            violations.append(
                Violation(
                    "normalization", f"Weights sum to {total} instead of 1", total - 1
                )
            )
    return violations


def validate_response_range(
    f: ResponseFunction,
    space: FiniteSampleSpace,
    probes: list,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list:
    """
    Evaluate a response on every (probe, atom) pair and report values outside the
    spectrum hull of the probe, and nonzero values on the null operator

    Args:
        f (ResponseFunction): the response to check
        space (FiniteSampleSpace): atoms to evaluate
        probes (list): HermitianOperators of the response's site
        tolerances (Tolerances, optional): tol_range is the allowed slack

    Returns:
        list: Violations found, empty if none
    """
    if not probes:
        raise ValueError("At least one probe operator is needed")
    violations = []
    for probe_index, probe in enumerate(probes):
        bounds = spectrum_bounds(probe)
        probe_is_null = is_null(probe, 0.0)
        for atom in space:
            value = f(probe, atom)
            if probe_is_null and abs(value) > tolerances.tol_range:
                violations.append(
                    Violation(
                        "null-rule",
                        f"Site {f.site}: response to the null operator at atom {atom} is {value}",
                        abs(value),
                    )
                )
            elif not bounds.contains(value, tolerances.tol_range):
                excess = max(bounds.infimum - value, value - bounds.supremum)
                violations.append(
                    Violation(
                        "range",
                        f"Site {f.site}: response to probe {probe_index} at atom {atom} is "
                        f"{value}, outside [{bounds.infimum}, {bounds.supremum}]",
                        excess,
                    )
                )
    if violations:
        _logger.debug(f"Found {len(violations)} response violations at site {f.site}")
    return violations


def standard_probes(dim: int) -> list:
    """
    Probe family for a site of dimension dim: identity, null operator, the Pauli
    words (Gell-Mann matrices if dim is not a power of two) and the scaled
    commutators i[a, b] of every pair of them

    Args:
        dim (int): site dimension

    Returns:
        list: HermitianOperators
    """
    if dim >= 2 and dim & (dim - 1) == 0:
        n_qubits = int(np.log2(dim))
        basis = [
            word for label, word in pauli_words(n_qubits).items() if set(label) != {"I"}
        ]
    elif dim >= 2:
        basis = gell_mann(dim)
    else:
        basis = []
    probes = [identity(dim), null_operator(dim)] + basis
    for index, first in enumerate(basis):
        for second in basis[index + 1 :]:
            probes.append(scaled_commutator(first, second))
    return probes


def _check_site(f: ResponseFunction, site: int):
    if f.site != site:
        raise SampleSpaceError(f"Expected a response of site {site}, got site {f.site}")


def _check_same_space(first: FiniteSampleSpace, second: FiniteSampleSpace):
    if first != second:
        raise SampleSpaceError(f"Sample spaces differ: {first} versus {second}")
