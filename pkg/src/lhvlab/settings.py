"""
Tolerances, run configuration and the YAML settings file
"""

import codecs
import dataclasses
import logging
from pathlib import Path
from typing import Optional

import yaml

_logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("json", "csv")
SEED_ENVIRONMENT_VARIABLE = "LHVLAB_SEED"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """
    Numerical tolerances used throughout the package

    Attributes:
        tol_herm (float): Hermiticity and imaginary residue of expectation values
        tol_trace (float): unit trace of density operators
        tol_psd (float): smallest admissible eigenvalue of a density operator is -tol_psd
        tol_measure (float): normalisation of probability measures and decompositions
        tol_range (float): response values must lie in [I(v) - tol_range, S(v) + tol_range]
        tol_null (float): a response value counts as nonzero above this threshold
        tol_repro (float): agreement between LHV integrals and quantum expectations
        max_dim (int): largest matrix dimension accepted
    """

    tol_herm: float = 1e-10
    tol_trace: float = 1e-10
    tol_psd: float = 1e-9
    tol_measure: float = 1e-10
    tol_range: float = 1e-10
    tol_null: float = 1e-12
    tol_repro: float = 1e-9
    max_dim: int = 64

    def problems(self) -> list:
        """Descriptions of every tolerance that is not strictly positive"""
        problems = []
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if not value > 0:
                problems.append(f"{field.name} must be positive, got {value}")
        return problems


DEFAULT_TOLERANCES = Tolerances()

TOLERANCE_KEYS = tuple(field.name for field in dataclasses.fields(Tolerances))


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """
    Everything a CLI run depends on. Identical configurations give identical artifacts.

    Attributes:
        tolerances (Tolerances): numerical tolerances
        alpha_steps (int): number of alpha values in [0, 1] for the alpha sweep
        rng_seed (int): seed of the random number generator
        grid_steps (int): angles per direction in the CHSH grid scan
        refine_iters (int): coordinate refinement sweeps after the grid scan
        planar (bool): restrict CHSH directions to the x-z plane
        output_path (Path, optional): artifact file, None writes to stdout
        output_format (str): json or csv
    """

    tolerances: Tolerances = DEFAULT_TOLERANCES
    alpha_steps: int = 101
    rng_seed: int = 7
    grid_steps: int = 24
    refine_iters: int = 50
    planar: bool = True
    output_path: Optional[Path] = None
    output_format: str = "json"

    def problems(self) -> list:
        """Descriptions of every violated configuration invariant"""
        problems = self.tolerances.problems()
        if self.alpha_steps < 2:
            problems.append(f"alpha_steps must be at least 2, got {self.alpha_steps}")
        if self.grid_steps < 4:
            problems.append(f"grid_steps must be at least 4, got {self.grid_steps}")
        if self.refine_iters < 0:
            problems.append(f"refine_iters must not be negative, got {self.refine_iters}")
        if self.output_format not in OUTPUT_FORMATS:
            problems.append(
                f"output_format must be one of {OUTPUT_FORMATS}, got {self.output_format}"
            )
        return problems

    def check(self):
        """
        Raises:
            ValueError: listing all problems of this configuration
        """
        if problems := self.problems():
            raise ValueError("Invalid configuration:\n  " + "\n  ".join(problems))
        return True


GENERAL_KEYS = (
    "tolerances",
    "alpha_steps",
    "seed",
    "grid_steps",
    "refine_iters",
    "planar",
    "output_format",
)


def check_if_items_are_available(
    requested_items: list, available_items, label: str = ""
):
    """
    Check if the requested items are all available

    Args:
        requested_items (list): all requested items
        available_items (iterable): the allowed items
        label (str, optional): used for information to the screen

    Raises:
        ValueError: some requested items are not available
    """
    unique_available_items = set(available_items)
    if missing_items := set(requested_items).difference(unique_available_items):
        raise ValueError(
            f"The {label} {sorted(missing_items)} are not known.\n"
            f"The following keys are available: {sorted(unique_available_items)}"
        )
    return True


def read_yaml(filename) -> dict:
    """Read a YAML (or JSON) file into a dictionary"""
    _logger.info(f"Reading {filename}")
    with codecs.open(str(filename), "r", encoding="UTF-8") as stream:
        information = yaml.load(stream=stream, Loader=yaml.SafeLoader)
    if not isinstance(information, dict):
        raise ValueError(f"File {filename} does not contain a mapping")
    return information


def read_general_settings(settings_filename) -> dict:
    """
    Read the 'general' section of a settings file

    A settings file looks like::

        general:
          seed: 7
          alpha_steps: 101
          tolerances:
            tol_repro: 1.0e-9

    Args:
        settings_filename (str or Path): the YAML settings file

    Returns:
        dict: the general settings, empty when the section is missing
    """
    settings = read_yaml(settings_filename)
    general_settings = settings.get("general") or dict()
    check_if_items_are_available(
        requested_items=general_settings.keys(),
        available_items=GENERAL_KEYS,
        label="general settings",
    )
    if tolerance_settings := general_settings.get("tolerances"):
        check_if_items_are_available(
            requested_items=tolerance_settings.keys(),
            available_items=TOLERANCE_KEYS,
            label="tolerances",
        )
    return general_settings


def tolerances_from_settings(tolerance_settings: Optional[dict]) -> Tolerances:
    """Build the tolerances from a settings dictionary, falling back on the defaults"""
    if not tolerance_settings:
        return DEFAULT_TOLERANCES
    values = dict()
    for key, value in tolerance_settings.items():
        values[key] = int(value) if key == "max_dim" else float(value)
    return dataclasses.replace(DEFAULT_TOLERANCES, **values)
