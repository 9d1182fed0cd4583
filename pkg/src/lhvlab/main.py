"""
This is the main start-up file of the LHV model laboratory
"""

import argparse
import dataclasses
import logging
import os
import sys
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from lhvlab import __version__
from lhvlab.chsh import (
    CLASSICAL_BOUND,
    chsh_from_lhv,
    chsh_value,
    maximize_chsh,
    state_from_spec,
)
from lhvlab.lhv_model import (
    InvalidDecompositionError,
    check_locality,
    decomposition_from_dict,
    eq5_integral,
    lhv_from_separable,
    model_to_dict,
    u_decomposition,
    verify_batch,
    witness_noncommutativity,
)
from lhvlab.operators import OperatorInvariantError, pauli, scaled_commutator
from lhvlab.probability import (
    standard_probes,
    validate_model_measure,
    validate_response_range,
)
from lhvlab.sampling import make_rng, random_probe_pairs, random_separable_decomposition
from lhvlab.settings import (
    OUTPUT_FORMATS,
    SEED_ENVIRONMENT_VARIABLE,
    RunConfig,
    read_general_settings,
    read_yaml,
    tolerances_from_settings,
)
from lhvlab.utils import (
    check_operator_axes,
    check_state_spec,
    check_unit_interval,
    extend_suffix,
)
from lhvlab.writers import write_csv, write_json, write_tables_to_excel

__author__ = "The lhvlab developers"
__copyright__ = "The lhvlab developers"
__license__ = "MIT"

_logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_VERIFICATION_FAILURE = 1
EXIT_USAGE_ERROR = 2

DEFAULT_OPERATORS = (("x", "y"), ("x", "y"))
MEASURE_VIOLATION_KINDS = ("finiteness", "negativity", "normalization")


############################################################################


def parse_args(args):
    """Parse command line parameters

    Args:
      args (List[str]): command line parameters as a list of strings
          (for example, ``["--help"]``).

    Returns:
      obj:`argparse.Namespace`: command line parameters namespace
    """

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--settings", help="YAML settings file with a 'general' section"
    )
    common.add_argument(
        "--seed",
        type=int,
        help=f"Seed of the random number generator. {SEED_ENVIRONMENT_VARIABLE} overrides it",
    )
    common.add_argument(
        "--tol", type=float, help="Tolerance of the reproduction checks (tol_repro)"
    )
    common.add_argument("--out", help="Output file. If not given, write to stdout")
    common.add_argument(
        "--format", dest="output_format", choices=OUTPUT_FORMATS, help="Output format"
    )
    common.add_argument(
        "--export-xlsx",
        help="Also export the tables to an Excel workbook next to the output file",
        action="store_true",
    )
    common.add_argument(
        "-v",
        "--verbose",
        dest="loglevel",
        help="set loglevel to INFO",
        action="store_const",
        const=logging.INFO,
        default=logging.INFO,
    )
    common.add_argument(
        "-vv",
        "--debug",
        dest="loglevel",
        help="set loglevel to DEBUG",
        action="store_const",
        const=logging.DEBUG,
    )
    common.add_argument(
        "-q",
        "--quiet",
        dest="loglevel",
        help="set loglevel to WARNING",
        action="store_const",
        const=logging.WARNING,
    )

    parser = argparse.ArgumentParser(
        description="Local hidden-variable models for separable two-qubit states"
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"lhvlab {__version__}",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    eq5_parser = subparsers.add_parser(
        "reproduce-eq5",
        parents=[common],
        help="Sweep alpha and integrate the responses to i[sx, sy] at both sites",
    )
    eq5_parser.add_argument(
        "--alpha-steps", type=int, help="Number of alpha values in [0, 1]"
    )

    verify_parser = subparsers.add_parser(
        "verify",
        parents=[common],
        help="Check that LHV models reproduce the quantum correlations",
    )
    verify_parser.add_argument(
        "--source",
        default="random",
        help="Decomposition file (YAML or JSON) or 'random' for seeded random decompositions",
    )
    verify_parser.add_argument(
        "--trials", type=int, default=100, help="Number of random decompositions"
    )
    verify_parser.add_argument(
        "--pairs", type=int, default=100, help="Random observable pairs per model"
    )

    witness_parser = subparsers.add_parser(
        "witness",
        parents=[common],
        help="Find the event certifying noncommuting observables in the U(alpha, 1-alpha) model",
    )
    witness_parser.add_argument(
        "--alpha", type=check_unit_interval, default=0.5, help="Weight of |+,+>"
    )
    witness_parser.add_argument(
        "--operators",
        type=check_operator_axes,
        default=DEFAULT_OPERATORS,
        help="Pauli axes of the commutator pair, 'x,y' for both sites or 'x,y:z,z' per site",
    )

    chsh_parser = subparsers.add_parser(
        "chsh",
        parents=[common],
        help="Maximise the CHSH value of a state over measurement settings",
    )
    chsh_parser.add_argument(
        "--state",
        type=check_state_spec,
        default="singlet",
        help="singlet, mixed, u:<alpha> or werner:<p>",
    )
    chsh_parser.add_argument("--grid-steps", type=int, help="Grid angles per direction")
    chsh_parser.add_argument("--refine-iters", type=int, help="Refinement sweeps")
    chsh_parser.add_argument(
        "--full-sphere",
        help="Also refine the azimuths instead of staying in the x-z plane",
        action="store_true",
    )

    return parser.parse_args(args)


def setup_logging(loglevel: int):
    """Setup basic logging

    Args:
      loglevel (int): minimum loglevel for emitting messages
    """
    if loglevel == logging.DEBUG:
        log_format = "[%(levelname)5s]:%(filename)s/%(lineno)d: %(message)s"
    else:
        log_format = "[%(levelname)s] %(message)s"
    logging.basicConfig(
        level=loglevel,
        stream=sys.stderr,
        format=log_format,
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def make_banner(width=80) -> None:
    """
    Make a banner with the start time
    Args:
        width (int, optional): Width of the banner.
        Defaults to 80
    """
    print("-" * width, file=sys.stderr)
    exe = Path(sys.argv[0]).stem
    now = datetime.now()
    print(
        f"Start '{exe} {' '.join(sys.argv[1:])}'\nat {now.date()} {now.time().strftime('%H:%M')} ",
        file=sys.stderr,
    )
    print("-" * width, file=sys.stderr)


def make_run_config(args) -> RunConfig:
    """
    Combine the defaults, the settings file, the command line and the environment

    Args:
        args (argparse.Namespace): parsed command line

    Returns:
        RunConfig: the configuration, not yet checked

    Raises:
        ValueError: the settings file or the seed environment variable is invalid
    """
    defaults = RunConfig()
    general_settings = dict()
    if args.settings is not None:
        general_settings = read_general_settings(args.settings)

    tolerances = tolerances_from_settings(general_settings.get("tolerances"))
    if args.tol is not None:
        tolerances = dataclasses.replace(tolerances, tol_repro=args.tol)

    if args.seed is None:
        seed = general_settings.get("seed", defaults.rng_seed)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ValueError(f"Seed {seed!r} in {args.settings} is not an integer")
    else:
        seed = args.seed
    if (seed_from_environment := os.environ.get(SEED_ENVIRONMENT_VARIABLE)) is not None:
        try:
            seed = int(seed_from_environment)
        except ValueError:
            raise ValueError(
                f"{SEED_ENVIRONMENT_VARIABLE}={seed_from_environment} is not an integer"
            )
        _logger.debug(f"Seed {seed} taken from {SEED_ENVIRONMENT_VARIABLE}")

    def from_args_or_settings(key):
        value = getattr(args, key, None)
        if value is None:
            value = general_settings.get(key, getattr(defaults, key))
        return value

    planar = bool(general_settings.get("planar", defaults.planar))
    if getattr(args, "full_sphere", False):
        planar = False

    return RunConfig(
        tolerances=tolerances,
        alpha_steps=int(from_args_or_settings("alpha_steps")),
        rng_seed=seed,
        grid_steps=int(from_args_or_settings("grid_steps")),
        refine_iters=int(from_args_or_settings("refine_iters")),
        planar=planar,
        output_path=Path(args.out) if args.out is not None else None,
        output_format=from_args_or_settings("output_format"),
    )


def emit(config: RunConfig, summary: dict, table: pd.DataFrame):
    """Write the summary as JSON or the table as CSV, depending on the output format"""
    if config.output_format == "csv":
        write_csv(table, config.output_path)
    else:
        write_json(summary, config.output_path)


def export_to_excel(config: RunConfig, command: str, tables: dict):
    """Write the tables to a workbook next to the output file"""
    if config.output_path is not None:
        excel_file_name = config.output_path.with_suffix(".xlsx")
    else:
        excel_file_name = Path(f"lhvlab_{command.replace('-', '_')}.xlsx")
    write_tables_to_excel(tables, excel_file_name)


def cmd_reproduce_eq5(config: RunConfig) -> tuple:
    """
    Sweep alpha over [0, 1] and integrate f1(i[sx, sy]) f2(i[sx, sy]) for U(alpha, 1 - alpha)

    Returns:
        tuple: (exit status, summary, tables)
    """
    tol = config.tolerances.tol_repro
    rows = []
    for alpha in np.linspace(0, 1, config.alpha_steps):
        alpha = float(alpha)
        beta = 1 - alpha
        integral = eq5_integral(alpha, beta, tolerances=config.tolerances)
        rows.append(
            dict(alpha=alpha, beta=beta, integral=integral, abs_error=abs(integral - 4))
        )
    table = pd.DataFrame(rows, columns=["alpha", "beta", "integral", "abs_error"])

    status = EXIT_SUCCESS
    failing = table[table["abs_error"] > tol]
    if not failing.empty:
        first = failing.iloc[0]
        _logger.error(
            f"Integral at alpha={first['alpha']} is {first['integral']}, "
            f"differing {first['abs_error']:.3g} from 4 (tolerance {tol})"
        )
        status = EXIT_VERIFICATION_FAILURE
    else:
        _logger.info(f"All {len(table)} integrals equal 4 within {tol}")

    summary = {
        "alpha_steps": config.alpha_steps,
        "tol_repro": tol,
        "max_abs_error": float(table["abs_error"].max()),
        "pass": status == EXIT_SUCCESS,
        "rows": rows,
    }
    return status, summary, {"reproduce_eq5": table}


def read_decompositions(source, config: RunConfig) -> list:
    """
    Read one decomposition ('components' at the top level) or several
    ('decompositions': list) from a YAML or JSON file
    """
    information = read_yaml(source)
    if "decompositions" in information:
        entries = information["decompositions"]
    else:
        entries = [information]
    return [decomposition_from_dict(entry, tolerances=config.tolerances) for entry in entries]


def cmd_verify(
    config: RunConfig, source: str = "random", trials: int = 100, pairs: int = 100
) -> tuple:
    """
    Build models and check reproduction, the measure, the response ranges and locality

    Args:
        config (RunConfig): run configuration
        source (str): decomposition file or 'random'
        trials (int): number of random decompositions
        pairs (int): random observable pairs per model

    Returns:
        tuple: (exit status, summary, tables)
    """
    tolerances = config.tolerances
    rng = make_rng(config.rng_seed)
    if source == "random":
        decompositions = [random_separable_decomposition(rng) for _ in range(trials)]
    else:
        decompositions = read_decompositions(source, config)
        _logger.info(f"Read {len(decompositions)} decompositions from {source}")

    rows = []
    violations = []
    for trial, decomposition in enumerate(decompositions):
        row = dict(
            trial=trial,
            components=len(decomposition),
            max_abs_error=None,
            measure_violations=0,
            decomposition_violations=0,
            range_violations=0,
            locality_violations=0,
            reproduction_failures=0,
        )
        try:
            model = lhv_from_separable(decomposition, tolerances=tolerances)
        except InvalidDecompositionError as err:
            _logger.warning(f"Trial {trial}: {err}")
            row["measure_violations"] = sum(
                violation.kind in MEASURE_VIOLATION_KINDS for violation in err.violations
            )
            row["decomposition_violations"] = (
                len(err.violations) - row["measure_violations"]
            )
            violations.extend(_describe(trial, err.violations))
            row["pass"] = False
            rows.append(row)
            continue

        probe_pairs = random_probe_pairs(rng, model.dims, pairs)
        reports = verify_batch(
            model, probe_pairs, tol=tolerances.tol_repro, tolerances=tolerances
        )
        measure_violations = validate_model_measure(model.measure, tolerances=tolerances)
        range_violations = []
        for response, site_index in ((model.f1, 0), (model.f2, 1)):
            probes = standard_probes(model.dims[site_index]) + [
                pair[site_index] for pair in probe_pairs
            ]
            range_violations.extend(
                validate_response_range(response, model.space, probes, tolerances=tolerances)
            )
        locality_violations = check_locality(model)

        row.update(
            max_abs_error=max(report.error for report in reports) if reports else 0.0,
            measure_violations=len(measure_violations),
            range_violations=len(range_violations),
            locality_violations=len(locality_violations),
            reproduction_failures=sum(not report.passed for report in reports),
        )
        row["pass"] = (
            row["reproduction_failures"] == 0
            and not measure_violations
            and not range_violations
            and not locality_violations
        )
        violations.extend(
            _describe(trial, measure_violations + range_violations + locality_violations)
        )
        rows.append(row)

    table = pd.DataFrame(rows)
    passed = all(row["pass"] for row in rows)
    if passed:
        _logger.info(f"All {len(rows)} models reproduce the quantum correlations")
    else:
        failures = sum(not row["pass"] for row in rows)
        _logger.error(f"{failures} of {len(rows)} models failed verification")
    summary = {
        "source": source,
        "seed": config.rng_seed,
        "models": len(rows),
        "pairs": pairs,
        "tol_repro": tolerances.tol_repro,
        "pass": passed,
        "violations": violations,
        "rows": rows,
    }
    status = EXIT_SUCCESS if passed else EXIT_VERIFICATION_FAILURE
    return status, summary, {"verify": table}


def cmd_witness(
    config: RunConfig, alpha: float = 0.5, operators: tuple = DEFAULT_OPERATORS
) -> tuple:
    """
    Build the U(alpha, 1 - alpha) model and find the event on which the responses to
    both scaled commutators are nonzero

    Returns:
        tuple: (exit status, summary, tables)
    """
    tolerances = config.tolerances
    model = lhv_from_separable(u_decomposition(alpha, 1 - alpha, tolerances), tolerances)
    (a1, b1), (a2, b2) = operators
    report = witness_noncommutativity(
        model, pauli(a1), pauli(b1), pauli(a2), pauli(b2), tolerances=tolerances
    )
    c1 = scaled_commutator(pauli(a1), pauli(b1))
    c2 = scaled_commutator(pauli(a2), pauli(b2))
    rows = [
        dict(atom=atom, weight=weight, f1=value1, f2=value2, in_event=atom in report.event.members)
        for atom, weight, value1, value2 in model.responses(c1, c2)
    ]

    status = EXIT_SUCCESS
    if report.commutators_nonnull:
        if report.measure > 0:
            _logger.info(
                f"Event {list(report.event.members)} has measure {report.measure}: "
                f"both commutators are non-null"
            )
        else:
            status = EXIT_VERIFICATION_FAILURE
    elif report.consistent:
        _logger.info("Null-commutator case: the witness event has measure 0")
    else:
        status = EXIT_VERIFICATION_FAILURE
    if status != EXIT_SUCCESS:
        _logger.error(
            f"Witness failed: measure {report.measure} with non-null commutators "
            f"{report.commutators_nonnull}. Model:\n{yaml.safe_dump(model_to_dict(model))}"
        )

    summary = dict(
        alpha=alpha,
        beta=1 - alpha,
        operators=dict(site1=list(operators[0]), site2=list(operators[1])),
        event=list(report.event.members),
        measure=report.measure,
        commutators_nonnull=report.commutators_nonnull,
        commutator_norms=list(report.commutator_norms),
        atoms=rows,
    )
    table = pd.DataFrame(rows, columns=["atom", "weight", "f1", "f2", "in_event"])
    return status, summary, {"witness": table}


def cmd_chsh(config: RunConfig, state_spec: str = "singlet") -> tuple:
    """
    Maximise |CHSH| for a state; for separable states also evaluate the CHSH value of
    the LHV model at the optimum and compare it with the quantum value

    Returns:
        tuple: (exit status, summary, tables)
    """
    tolerances = config.tolerances
    state, decomposition = state_from_spec(state_spec, tolerances=tolerances)
    optimum = maximize_chsh(
        state,
        grid_steps=config.grid_steps,
        refine_iters=config.refine_iters,
        planar=config.planar,
        tolerances=tolerances,
    )
    _logger.info(f"Largest |CHSH| for {state_spec}: {optimum.value}")

    angles = optimum.grid_angles
    rows = []
    for index_a, theta_a in enumerate(angles):
        for index_a_prime, theta_a_prime in enumerate(angles):
            index_b, index_b_prime = optimum.profile_arguments[index_a, index_a_prime]
            rows.append(
                dict(
                    theta_a=float(theta_a),
                    theta_a_prime=float(theta_a_prime),
                    theta_b=float(angles[index_b]),
                    theta_b_prime=float(angles[index_b_prime]),
                    chsh_value=float(optimum.profile[index_a, index_a_prime]),
                )
            )
    scan = pd.DataFrame(rows)

    status = EXIT_SUCCESS
    summary = dict(
        state=state_spec,
        grid_steps=config.grid_steps,
        refine_iters=config.refine_iters,
        planar=config.planar,
        value=optimum.value,
        settings=optimum.settings.as_dict(),
        thetas=list(optimum.thetas),
        phis=list(optimum.phis),
        classical_bound=CLASSICAL_BOUND,
        exceeds_classical_bound=optimum.value > CLASSICAL_BOUND + tolerances.tol_repro,
    )
    if decomposition is not None:
        model = lhv_from_separable(decomposition, tolerances=tolerances)
        lhv_value = chsh_from_lhv(model, optimum.settings, tolerances=tolerances)
        quantum_value = chsh_value(state, optimum.settings, tolerances=tolerances)
        consistent = abs(lhv_value - quantum_value) <= tolerances.tol_repro
        summary["lhv_consistency"] = dict(
            lhv_value=lhv_value, quantum_value=quantum_value, consistent=consistent
        )
        if not consistent or summary["exceeds_classical_bound"]:
            _logger.error(
                f"Separable state {state_spec}: LHV value {lhv_value}, quantum value "
                f"{quantum_value}, optimum {optimum.value}"
            )
            status = EXIT_VERIFICATION_FAILURE
    return status, summary, {"chsh_scan": scan}


def write_artifacts(config: RunConfig, command: str, summary: dict, tables: dict):
    """Write the artifacts of a command in the configured format"""
    table = next(iter(tables.values()))
    if command == "chsh" and config.output_path is not None:
        scan_file_name = extend_suffix(config.output_path, "scan").with_suffix(".csv")
        summary_file_name = extend_suffix(config.output_path, "summary").with_suffix(".json")
        write_csv(table, scan_file_name)
        write_json(summary, summary_file_name)
    else:
        emit(config, summary, table)


def main(args):
    """Wrapper allowing the subcommands to be called with string arguments in a CLI fashion

    Args:
      args (List[str]): command line parameters as a list of strings
          (for example, ``["reproduce-eq5", "--alpha-steps", "11"]``).

    Returns:
      int: exit status, 0 on success, 1 on a verification failure, 2 on a usage error
    """

    args = parse_args(args)

    if args.loglevel < logging.WARNING:
        make_banner()

    setup_logging(args.loglevel)

    try:
        config = make_run_config(args)
        problems = config.problems()
        if args.command == "verify":
            if args.trials < 1:
                problems.append(f"trials must be at least 1, got {args.trials}")
            if args.pairs < 1:
                problems.append(f"pairs must be at least 1, got {args.pairs}")
        if problems:
            raise ValueError("Invalid configuration:\n  " + "\n  ".join(problems))
    except (ValueError, OSError, yaml.YAMLError) as err:
        _logger.error(err)
        return EXIT_USAGE_ERROR

    _logger.debug(f"Running {args.command} with {config}")
    try:
        if args.command == "reproduce-eq5":
            status, summary, tables = cmd_reproduce_eq5(config)
        elif args.command == "verify":
            status, summary, tables = cmd_verify(
                config, source=args.source, trials=args.trials, pairs=args.pairs
            )
        elif args.command == "witness":
            status, summary, tables = cmd_witness(
                config, alpha=args.alpha, operators=args.operators
            )
        else:
            status, summary, tables = cmd_chsh(config, state_spec=args.state)
    except OperatorInvariantError as err:
        _logger.error(err)
        return EXIT_VERIFICATION_FAILURE
    except (ValueError, KeyError, TypeError, OSError, yaml.YAMLError) as err:
        _logger.error(f"Could not run {args.command}: {err}")
        return EXIT_USAGE_ERROR

    write_artifacts(config, args.command, summary, tables)
    if args.export_xlsx:
        export_to_excel(config, args.command, tables)

    return status


def run():
    """Calls: func:`main` passing the CLI arguments extracted from: obj:`sys.argv`

    This function can be used as an entry point to create console scripts with setuptools.
    """
    sys.exit(main(sys.argv[1:]))


def _describe(trial: int, violations: list) -> list:
    return [dict(trial=trial, **violation.as_dict()) for violation in violations]


if __name__ == "__main__":
    # ^ This is a guard statement that will prevent the following code from
    #    being executed in the case someone imports this file instead of
    #    executing it as a script.
    #    https://docs.python.org/3/library/__main__.html

    # After installing your project with pip, users can also run your Python
    # modules as scripts via the ``-m`` flag, as defined in PEP 338::
    #
    #     python -m lhvlab.main reproduce-eq5
    #
    run()
