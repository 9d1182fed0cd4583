import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lhvlab.operators import identity, null_operator, pauli, scaled_commutator
from lhvlab.probability import (
    Event,
    FiniteSampleSpace,
    ProbabilityMeasure,
    ResponseFunction,
    ResponseRangeError,
    SampleSpaceError,
    integrate_product,
    measure_of,
    standard_probes,
    validate_model_measure,
    validate_response_range,
)

positive_weights = st.lists(
    st.floats(min_value=0.01, max_value=10, allow_nan=False), min_size=1, max_size=8
)


def normalised(weights):
    total = math.fsum(weights)
    return {index: weight / total for index, weight in enumerate(weights)}


def test_sample_space_needs_unique_atoms():
    with pytest.raises(SampleSpaceError):
        FiniteSampleSpace([])
    with pytest.raises(SampleSpaceError):
        FiniteSampleSpace(["a", "b", "a"])


def test_event_must_be_subset_of_space():
    space = FiniteSampleSpace(["a", "b", "c"])
    with pytest.raises(SampleSpaceError):
        Event(space, ["d"])
    event = Event(space, ["c", "a"])
    assert event.members == ("a", "c")
    assert (event | Event(space, ["b"])) == space.full_event()
    assert (event & Event(space, ["b"])) == space.empty_event()


def test_measure_domain_must_equal_atoms():
    """
    Test that a measure whose weights do not cover exactly the atoms is rejected.
    """
    space = FiniteSampleSpace(["a", "b"])
    with pytest.raises(SampleSpaceError):
        ProbabilityMeasure(space, {"a": 1.0})
    with pytest.raises(SampleSpaceError):
        ProbabilityMeasure(space, {"a": 0.5, "b": 0.25, "c": 0.25})


@given(positive_weights)
def test_measure_of_full_event_is_one(weights):
    """
    Test that a normalised measure gives the full event measure 1 and the empty event 0.
    """
    measure = ProbabilityMeasure.from_weights(normalised(weights))
    assert validate_model_measure(measure) == []
    assert measure_of(measure, measure.space.full_event()) == pytest.approx(1, abs=1e-12)
    assert measure_of(measure, measure.space.empty_event()) == 0


@given(positive_weights, st.data())
def test_measure_is_additive(weights, data):
    """
    Test that the measure of a union of disjoint events is the sum of their measures.
    """
    measure = ProbabilityMeasure.from_weights(normalised(weights))
    atoms = list(measure.space)
    members = data.draw(st.sets(st.sampled_from(atoms)))
    event = Event(measure.space, members)
    complement = Event(measure.space, set(atoms).difference(members))
    assert measure_of(measure, event) + measure_of(measure, complement) == pytest.approx(
        1, abs=1e-12
    )


@given(positive_weights, st.floats(min_value=0, max_value=1))
def test_mixture_of_measures_is_normalised(weights, weight):
    first = ProbabilityMeasure.from_weights(normalised(weights))
    second = ProbabilityMeasure.from_weights(normalised(list(reversed(weights))))
    mixture = first.mixture(second, weight)
    assert validate_model_measure(mixture) == []


def test_validate_model_measure_reports_violations():
    """
    Test that negative weights and a wrong normalisation are reported as data.
    """
    measure = ProbabilityMeasure.from_weights({"a": -0.5, "b": 1.0})
    kinds = sorted(violation.kind for violation in validate_model_measure(measure))
    assert kinds == ["negativity", "normalization"]

    measure = ProbabilityMeasure.from_weights({"a": 0.5, "b": 0.6})
    (violation,) = validate_model_measure(measure)
    assert violation.kind == "normalization"
    assert violation.excess == pytest.approx(0.1)

    measure = ProbabilityMeasure.from_weights({"a": math.nan, "b": 1.0})
    assert [v.kind for v in validate_model_measure(measure)] == ["finiteness"]


def sign_response(site):
    """Deterministic response: the upper or lower spectrum edge depending on the atom"""

    def evaluate(v, atom):
        eigenvalues = np.linalg.eigvalsh(v.matrix)
        return float(eigenvalues[-1] if atom == "up" else eigenvalues[0])

    return ResponseFunction(site, evaluate)


def test_integrate_product_of_edge_responses():
    """
    Test the finite sum of the product of responses for a hand-made model.
    """
    measure = ProbabilityMeasure.from_weights({"up": 0.25, "down": 0.75})
    f1 = sign_response(1)
    f2 = sign_response(2)
    # responses are +1 at 'up' and -1 at 'down' for both sites
    value = integrate_product(measure, f1, f2, pauli("z"), pauli("x"))
    assert value == pytest.approx(0.25 + 0.75)


def test_integrate_product_checks_sites():
    measure = ProbabilityMeasure.from_weights({"up": 1.0})
    with pytest.raises(SampleSpaceError):
        integrate_product(
            measure, sign_response(2), sign_response(2), pauli("z"), pauli("z")
        )


def test_integrate_product_rejects_values_outside_spectrum():
    """
    Test that a response outside [I(v), S(v)] raises a ResponseRangeError.
    """
    measure = ProbabilityMeasure.from_weights({"up": 1.0})
    too_large = ResponseFunction(1, lambda v, atom: 3.0)
    with pytest.raises(ResponseRangeError):
        integrate_product(measure, too_large, sign_response(2), pauli("z"), pauli("z"))
    value = integrate_product(
        measure, too_large, sign_response(2), pauli("z"), pauli("z"), check_range=False
    )
    assert value == 3.0


def test_validate_response_range():
    """
    Test that range and null-rule violations are found and valid responses pass.
    """
    space = FiniteSampleSpace(["up", "down"])
    probes = standard_probes(2)
    assert validate_response_range(sign_response(1), space, probes) == []

    constant = ResponseFunction(1, lambda v, atom: 1.5)
    kinds = {violation.kind for violation in validate_response_range(constant, space, probes)}
    assert kinds == {"range", "null-rule"}

    with pytest.raises(ValueError):
        validate_response_range(sign_response(1), space, [])


def test_standard_probes_of_a_qubit():
    """
    Test the qubit probe family: identity, null, three Paulis and their three commutators.
    """
    probes = standard_probes(2)
    assert len(probes) == 8
    assert probes[0] == identity(2)
    assert probes[1] == null_operator(2)
    assert scaled_commutator(pauli("x"), pauli("y")) in probes


def test_standard_probes_of_a_qutrit():
    probes = standard_probes(3)
    assert len(probes) == 2 + 8 + 28
    assert all(probe.dim == 3 for probe in probes)


@settings(max_examples=25)
@given(st.integers(min_value=2, max_value=4))
def test_standard_probes_contain_identity_and_null(dim):
    probes = standard_probes(dim)
    assert identity(dim) in probes
    assert null_operator(dim) in probes
