import json

import pandas as pd
import pytest
import yaml

from lhvlab.main import (
    EXIT_SUCCESS,
    EXIT_USAGE_ERROR,
    EXIT_VERIFICATION_FAILURE,
    main,
    make_run_config,
    parse_args,
)
from lhvlab.settings import SEED_ENVIRONMENT_VARIABLE


@pytest.fixture(autouse=True)
def no_seed_from_environment(monkeypatch):
    monkeypatch.delenv(SEED_ENVIRONMENT_VARIABLE, raising=False)


def write_decomposition(path, weights):
    components = [
        {"weight": weights[0], "atom": "+", "site1": {"bloch": [0, 0, 1]}},
        {"weight": weights[1], "atom": "-", "site1": {"bloch": [0, 0, -1]}},
    ]
    for component in components:
        component["site2"] = component["site1"]
    path.write_text(yaml.safe_dump({"components": components}))
    return path


def test_reproduce_eq5_to_csv(tmp_path):
    """
    Test that the alpha sweep writes 101 rows with integral 4 and exits with 0.
    """
    output_file = tmp_path / "eq5.csv"
    status = main(["reproduce-eq5", "--format", "csv", "--out", str(output_file), "-q"])
    assert status == EXIT_SUCCESS
    table = pd.read_csv(output_file)
    assert list(table.columns) == ["alpha", "beta", "integral", "abs_error"]
    assert len(table) == 101
    assert (table["abs_error"] <= 1e-12).all()


def test_reproduce_eq5_to_stdout(capsys):
    status = main(["reproduce-eq5", "--alpha-steps", "11", "-q"])
    assert status == EXIT_SUCCESS
    summary = json.loads(capsys.readouterr().out)
    assert summary["pass"]
    assert len(summary["rows"]) == 11


def test_verify_random_models(capsys):
    status = main(["verify", "--trials", "5", "--pairs", "10", "--seed", "3", "-q"])
    assert status == EXIT_SUCCESS
    summary = json.loads(capsys.readouterr().out)
    assert summary["pass"]
    assert summary["models"] == 5
    assert summary["violations"] == []


def test_verify_is_reproducible(tmp_path):
    """
    Test that two runs with the same seed write identical artifacts.
    """
    outputs = []
    for name in ("first.json", "second.json"):
        output_file = tmp_path / name
        arguments = ["verify", "--trials", "3", "--pairs", "5", "--seed", "9"]
        main(arguments + ["--out", str(output_file), "-q"])
        outputs.append(output_file.read_bytes())
    assert outputs[0] == outputs[1]


def test_seed_from_environment_overrides_flag(monkeypatch, capsys):
    monkeypatch.setenv(SEED_ENVIRONMENT_VARIABLE, "42")
    main(["verify", "--trials", "2", "--pairs", "3", "--seed", "1", "-q"])
    first = capsys.readouterr().out
    main(["verify", "--trials", "2", "--pairs", "3", "--seed", "2", "-q"])
    second = capsys.readouterr().out
    assert first == second
    assert json.loads(first)["seed"] == 42


def test_verify_decomposition_file(tmp_path):
    source = write_decomposition(tmp_path / "u.yml", (0.3, 0.7))
    assert main(["verify", "--source", str(source), "--pairs", "10", "-q"]) == EXIT_SUCCESS


def test_verify_invalid_decomposition_file(tmp_path, capsys):
    """
    Test that weights summing to 1.1 are reported as violations with exit status 1.
    """
    source = write_decomposition(tmp_path / "bad.yml", (0.5, 0.6))
    status = main(["verify", "--source", str(source), "-q"])
    assert status == EXIT_VERIFICATION_FAILURE
    summary = json.loads(capsys.readouterr().out)
    assert not summary["pass"]
    assert summary["violations"][0]["kind"] == "normalization"
    assert summary["rows"][0]["measure_violations"] == 1
    assert summary["rows"][0]["decomposition_violations"] == 0


def test_verify_counts_violations_by_kind(tmp_path, capsys):
    """
    Test that a component with a qutrit site is counted as a decomposition violation,
    not as a measure violation.
    """
    qutrit = [[[0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [1, 0]]]
    components = [
        {"weight": 0.3, "site1": {"bloch": [0, 0, 1]}, "site2": {"bloch": [0, 0, 1]}},
        {"weight": 0.7, "site1": {"matrix": qutrit}, "site2": {"bloch": [0, 0, -1]}},
    ]
    source = tmp_path / "mixed_dimensions.yml"
    source.write_text(yaml.safe_dump({"components": components}))
    assert main(["verify", "--source", str(source), "-q"]) == EXIT_VERIFICATION_FAILURE
    (row,) = json.loads(capsys.readouterr().out)["rows"]
    assert row["measure_violations"] == 0
    assert row["decomposition_violations"] == 1


def test_witness_default_operators(capsys):
    status = main(["witness", "--alpha", "0.3", "-q"])
    assert status == EXIT_SUCCESS
    summary = json.loads(capsys.readouterr().out)
    assert summary["measure"] == pytest.approx(1)
    assert summary["event"] == ["+", "-"]
    assert summary["commutator_norms"] == [2, 2]
    assert [atom["f1"] for atom in summary["atoms"]] == [-2, 2]


def test_witness_null_commutator(capsys):
    """
    Test that commuting operators give an empty event, which is consistent.
    """
    status = main(["witness", "--operators", "z,z", "-q"])
    assert status == EXIT_SUCCESS
    summary = json.loads(capsys.readouterr().out)
    assert summary["measure"] == 0
    assert not summary["commutators_nonnull"]


def test_witness_with_empty_event_fails():
    """
    Test that i[sx, sz] = 2 sy has zero responses in the U model, so the witness fails.
    """
    assert main(["witness", "--operators", "x,z", "-q"]) == EXIT_VERIFICATION_FAILURE


def test_chsh_singlet(tmp_path):
    """
    Test that the singlet exceeds the classical bound and both artifacts are written.
    """
    output_file = tmp_path / "singlet.json"
    status = main(["chsh", "--state", "singlet", "--out", str(output_file), "-q"])
    assert status == EXIT_SUCCESS
    summary = json.loads((tmp_path / "singlet_summary.json").read_text())
    assert summary["value"] >= 2.82
    assert summary["exceeds_classical_bound"]
    scan = pd.read_csv(tmp_path / "singlet_scan.csv")
    assert len(scan) == 24 * 24
    assert scan["chsh_value"].max() == pytest.approx(summary["value"], abs=1e-9)


def test_chsh_separable_state(capsys):
    status = main(["chsh", "--state", "u:0.5", "--grid-steps", "12", "-q"])
    assert status == EXIT_SUCCESS
    summary = json.loads(capsys.readouterr().out)
    assert summary["value"] <= 2 + 1e-9
    assert summary["lhv_consistency"]["consistent"]


def test_export_to_excel(tmp_path):
    output_file = tmp_path / "eq5.csv"
    arguments = ["reproduce-eq5", "--alpha-steps", "5", "--format", "csv", "--export-xlsx"]
    main(arguments + ["--out", str(output_file), "-q"])
    assert (tmp_path / "eq5.xlsx").exists()


@pytest.mark.parametrize(
    "arguments",
    [
        ["reproduce-eq5", "--tol", "0"],
        ["reproduce-eq5", "--alpha-steps", "1"],
        ["verify", "--trials", "0"],
        ["chsh", "--grid-steps", "2"],
        ["reproduce-eq5", "--settings", "does_not_exist.yml"],
    ],
)
def test_invalid_configuration(arguments):
    assert main(arguments + ["-q"]) == EXIT_USAGE_ERROR


def test_invalid_seed_from_environment(monkeypatch):
    monkeypatch.setenv(SEED_ENVIRONMENT_VARIABLE, "abc")
    assert main(["verify", "--trials", "1", "-q"]) == EXIT_USAGE_ERROR


@pytest.mark.parametrize("seed", [3.7, "three", True])
def test_non_integer_seed_in_settings_file(tmp_path, seed):
    """
    Test that a seed in the settings file that is not an integer is a usage error.
    """
    settings_file = tmp_path / "settings.yml"
    settings_file.write_text(yaml.safe_dump({"general": {"seed": seed}}))
    with pytest.raises(ValueError):
        make_run_config(parse_args(["verify", "--settings", str(settings_file)]))
    assert main(["verify", "--trials", "1", "--settings", str(settings_file), "-q"]) == (
        EXIT_USAGE_ERROR
    )


@pytest.mark.parametrize(
    "arguments",
    [
        ["witness", "--alpha", "2"],
        ["chsh", "--state", "ghz"],
        ["witness", "--operators", "x,w"],
    ],
)
def test_invalid_arguments(arguments):
    with pytest.raises(SystemExit) as error:
        main(arguments)
    assert error.value.code == 2


def test_run_config_precedence(tmp_path, monkeypatch):
    """
    Test the order defaults, settings file, command line and environment.
    """
    settings_file = tmp_path / "settings.yml"
    settings_file.write_text(
        yaml.safe_dump(
            {"general": {"seed": 3, "alpha_steps": 21, "tolerances": {"tol_repro": 1e-8}}}
        )
    )
    config = make_run_config(parse_args(["reproduce-eq5", "--settings", str(settings_file)]))
    assert (config.rng_seed, config.alpha_steps, config.tolerances.tol_repro) == (3, 21, 1e-8)
    assert config.grid_steps == 24

    config = make_run_config(
        parse_args(
            ["reproduce-eq5", "--settings", str(settings_file), "--seed", "4", "--tol", "1e-7"]
        )
    )
    assert (config.rng_seed, config.tolerances.tol_repro) == (4, 1e-7)

    monkeypatch.setenv(SEED_ENVIRONMENT_VARIABLE, "5")
    config = make_run_config(parse_args(["reproduce-eq5", "--seed", "4"]))
    assert config.rng_seed == 5


def test_full_sphere_flag():
    config = make_run_config(parse_args(["chsh", "--full-sphere"]))
    assert not config.planar


def test_reproduce_eq5_with_two_steps(capsys):
    assert main(["reproduce-eq5", "--alpha-steps", "2", "-q"]) == EXIT_SUCCESS
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert [row["alpha"] for row in rows] == [0, 1]
    assert [row["integral"] for row in rows] == [4, 4]


def test_chsh_maximally_mixed_state(capsys):
    assert main(["chsh", "--state", "mixed", "--grid-steps", "8", "-q"]) == EXIT_SUCCESS
    summary = json.loads(capsys.readouterr().out)
    assert summary["value"] == pytest.approx(0, abs=1e-12)
    assert not summary["exceeds_classical_bound"]
