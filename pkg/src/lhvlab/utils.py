"""
Some utility functions
"""

import logging
from argparse import ArgumentTypeError
from pathlib import Path
from typing import Union

import numpy as np

_logger = logging.getLogger(__name__)

STATE_NAMES = ("singlet", "mixed")
PARAMETRIZED_STATES = ("u", "werner")


def is_valid_number(label: str) -> bool:
    """
    Check is label is a valid number

    Args:
        label (str): label to validate

    Returns:
        bool: True if a valid number
    """

    is_number = True
    try:
        float(label)
    except ValueError:
        is_number = False

    return is_number


def check_unit_interval(value: str) -> float:
    """Argument type for a number in [0, 1]"""
    if not is_valid_number(value) or not 0 <= float(value) <= 1:
        raise ArgumentTypeError(f"{value} is not a number in [0, 1]")
    return float(value)


def check_state_spec(value: str) -> str:
    """
    Check if an argument is a valid state specification: 'singlet', 'mixed',
    'u:<alpha>' or 'werner:<p>' with the parameter in [0, 1]

    Returns:
        str: the specification, lower-cased

    Raises:
        ArgumentTypeError: the specification is not valid
    """
    spec = value.strip().lower()
    if spec in STATE_NAMES:
        return spec
    name, _, parameter = spec.partition(":")
    if name not in PARAMETRIZED_STATES or not parameter:
        raise ArgumentTypeError(
            f"State {value} is not one of {STATE_NAMES} or 'u:<alpha>', 'werner:<p>'"
        )
    check_unit_interval(parameter)
    _logger.debug(f"State {spec} is a valid state specification")
    return spec


def check_operator_axes(value: str) -> tuple:
    """
    Parse operator axes for the witness: 'x,y' uses the pair at both sites,
    'x,y:z,z' gives the pair per site

    Returns:
        tuple: ((a1, b1), (a2, b2))
    """
    sites = value.lower().split(":")
    if len(sites) == 1:
        sites = sites * 2
    pairs = []
    for site in sites:
        axes = tuple(axis.strip() for axis in site.split(","))
        if len(axes) != 2 or set(axes).difference("xyz"):
            raise ArgumentTypeError(f"Operators {value} are not of the form 'x,y' or 'x,y:z,z'")
        pairs.append(axes)
    if len(pairs) != 2:
        raise ArgumentTypeError(f"Operators {value} should describe at most two sites")
    return tuple(pairs)


def extend_suffix(output_filename: Path, extensions: Union[list, str]) -> Path:
    """
    Add an extra suffix to the base filename

    Args:
        output_filename (Path): base filename
        extensions (str or list): extra suffixes to add

    Returns:
        Path: new filename with extra suffix, e.g. scan.csv -> scan_summary.csv
    """
    suffix = output_filename.suffix
    if isinstance(extensions, str):
        extensions = [extensions]
    output_filename = Path(
        "_".join([output_filename.with_suffix("").as_posix()] + extensions)
    ).with_suffix(suffix)

    return output_filename


def matrix_to_json(matrix) -> list:
    """Row-major nested list of [re, im] pairs"""
    matrix = np.asarray(matrix, dtype=np.complex128)
    return [[[float(entry.real), float(entry.imag)] for entry in row] for row in matrix]


def matrix_from_json(rows) -> np.ndarray:
    """
    Inverse of :func:`matrix_to_json`; entries may also be plain real numbers

    Raises:
        ValueError: an entry is neither a number nor an [re, im] pair
    """
    matrix = []
    for row in rows:
        matrix_row = []
        for entry in row:
            if isinstance(entry, (list, tuple)):
                if len(entry) != 2:
                    raise ValueError(f"Matrix entry {entry} is not an [re, im] pair")
                matrix_row.append(complex(float(entry[0]), float(entry[1])))
            else:
                matrix_row.append(complex(float(entry)))
        matrix.append(matrix_row)
    return np.array(matrix, dtype=np.complex128)
