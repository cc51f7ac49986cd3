import io
import json
import math

import pytest

from distill.cli import (
    PRESETS,
    format_report,
    load_preset,
    main,
    parse_config,
    reproduce_all,
    run,
)
from distill.errors import ConfigError


def _run(text, **kw):
    out, err = io.StringIO(), io.StringIO()
    code = run(text, stdout=out, stderr=err, quiet=True, **kw)
    return code, out.getvalue(), err.getvalue()


def test_cat2d_preset_parses():
    cfg = parse_config(load_preset("cat2d"))
    assert cfg.scenario == "second_red_2d"
    assert cfg.resolve_gamma_tau() == pytest.approx(math.pi / math.sqrt(5), rel=1e-15)
    assert cfg.truncation == 4
    assert cfg.tolerance == 1e-9


def test_empty_config_lists_required_keys():
    with pytest.raises(ConfigError, match="scenario.*steps"):
        parse_config("")


@pytest.mark.parametrize(
    "text, key",
    [
        ("scenario = second_red_2d\nsteps = 0\ninitial_occupation = 4, 0\ngamma_tau = 1", "steps"),
        ("scenario = second_red_2d\nsteps = 3\ncolour = red", "colour"),
        ("scenario = second_red_2d\nsteps = three", "steps"),
        ("scenario = qnd\nsteps = 3\ninitial_occupation = 2\ngamma_tau = 1", "eta"),
        ("scenario = blue_sideband\nsteps = 3\ninitial_occupation = 2", "gamma_tau"),
        ("scenario = blue_sideband\nsteps = 3\ninitial_occupation = 2, 1\ngamma_tau = 1", "initial_occupation"),
        ("scenario = blue_sideband\nsteps = 3\ninitial_occupation = 5\ntruncation = 2\ngamma_tau = 1", "truncation"),
        ("scenario = blue_sideband\nsteps = 3\ninitial_occupation = 5\ngamma_tau = 1\nseed = 4", "seed"),
        ("scenario = warp_drive\nsteps = 3", "scenario"),
    ],
)
def test_validation_names_the_key(text, key):
    with pytest.raises(ConfigError, match=f"'{key}'"):
        parse_config(text)


def test_real_expressions():
    cfg = parse_config("scenario = blue_sideband\nsteps = 2\ninitial_occupation = 1\ngamma_tau = 2*pi/sqrt(4)")
    assert cfg.gamma_tau == pytest.approx(math.pi)
    with pytest.raises(ConfigError, match="gamma_tau"):
        parse_config("scenario = blue_sideband\nsteps = 2\ninitial_occupation = 1\ngamma_tau = __import__('os')")


@pytest.mark.parametrize("name", PRESETS)
def test_round_trip(name):
    cfg = parse_config(load_preset(name))
    assert parse_config(cfg.serialize()) == cfg


def test_results_are_byte_identical():
    text = load_preset("cat2d") + "\nmode = montecarlo\ntrials = 500\nseed = 9\n"
    a, b = _run(text), _run(text)
    assert a[0] == 0 and a[1] == b[1]
    result = json.loads(a[1])
    assert result["monte_carlo"]["trials"] == 500


def test_cat2d_results_file(tmp_path):
    path = tmp_path / "out.json"
    code, _, _ = _run(load_preset("cat2d"), output=str(path))
    assert code == 0
    result = json.loads(path.read_text())
    assert result["joint_prob"] == pytest.approx(0.125, abs=1e-3)
    assert result["fidelity_trace"][4] >= 0.95
    assert [m["l"] for m in result["resonant_set"]["members"]] == [2, 2]
    assert len(result["final_state"]) == result["basis_dimension"] == 15
    assert result["final_state"][0]["label"] and len(result["final_state"][0]["amplitude"]) == 2


def test_w3d_results():
    result = json.loads(_run(load_preset("w3d"))[1])
    assert result["fidelity_trace"][4] >= 0.96
    assert result["joint_prob"] == pytest.approx(1 / 3, abs=1e-3)


def test_squares_final_support():
    result = json.loads(_run(load_preset("squares"))[1])
    members = sorted(round(m["eigenvalue"]) for m in result["resonant_set"]["members"])
    assert members == [0, 1, 4, 9, 16]


def test_efficiency_mode():
    result = json.loads(_run(load_preset("cat2d") + "\nmode = efficiency\n")[1])
    eff = result["efficiency"]
    assert eff["gap"] <= eff["bound"]


def test_gamma_tau_flags():
    text = "scenario = blue_sideband\nsteps = 2\ninitial_occupation = 4\ngamma_tau = 1"
    result = json.loads(_run(text, gamma=4.0, tau=math.pi / 2)[1])
    assert result["gamma_tau"] == pytest.approx(2 * math.pi)
    assert _run(text, gamma=4.0)[0] == 1


def test_exit_codes():
    assert _run("")[0] == 1
    code, _, err = _run("scenario = blue_sideband\nsteps = 3\ninitial_occupation = 1\ngamma_tau = pi/2")
    assert code == 2
    assert "distillate absent" in err


def test_csv_output():
    code, out, _ = _run(load_preset("cat2d"), fmt="csv")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "step,probability,joint_probability,fidelity"
    assert len(lines) == 51
    assert lines[5].startswith("5,")


def test_main_run_preset(tmp_path, capsys):
    path = tmp_path / "r.csv"
    assert main(["run", "qnd", "--format", "csv", "--output", str(path), "--quiet"]) == 0
    assert path.read_text().startswith("step,")
    assert main(["run", "no-such-thing"]) == 1


def test_reproduce_report_and_sensitivity():
    checks = reproduce_all()
    report = format_report(checks)
    assert {c.preset for c in checks} == set(PRESETS)
    assert all(c.seconds >= 0 for c in checks)
    assert "time[s]" in report
    cat = [c for c in checks if c.preset == "cat2d"]
    assert all(c.passed for c in cat)

    perturbed = reproduce_all(gamma_tau_perturbation=1e-3)
    resonance = [c for c in perturbed if c.preset == "cat2d" and "resonant" in c.claim]
    assert resonance and not resonance[0].passed
