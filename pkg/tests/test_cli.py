import json
from fractions import Fraction

import pytest

from rwgroups import FreeGroup, Lattice, ParseError
from rwgroups.cli import COMMANDS, ExperimentConfig, build_parser, config_from_args, execute, main
from rwgroups.io import format_measure, format_value, parse_measure, to_csv, to_json
from rwgroups.measures import FiniteMeasure

F2 = FreeGroup(2)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_drift_csv_and_summary(capsys):
    code, out, err = run(capsys, "drift", "--group", "free:2", "--measure", "srw", "--N", "12")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,a_n,a_n_over_n,increment"
    assert lines[2] == "2,3/2,3/4,1/2"
    assert len(lines) == 13
    assert "drift increment ≈ 0.5000" in err


def test_besov_tau_summary(capsys):
    code, out, err = run(capsys, "besov-tau", "--eps", "0.25", "--n", "1")
    assert code == 0
    assert err.strip() == "tau = 0.866025404"
    assert out.splitlines()[1] == "1/4,1,0.866025404,a"


def test_recursion_exact(capsys):
    code, out, err = run(capsys, "productset-recursion", "--n", "3")
    assert code == 0 and "exact" in err


def test_inconclusive_exit_code(capsys):
    code, _, err = run(capsys, "productset-thick", "--set", "cone:a", "--k", "2", "--K", "5")
    assert code == 2 and "inconclusive" in err
    code, _, _ = run(capsys, "folner-z", "--set", "periodic:7:0", "--bound", "2")
    assert code == 2


def test_thick_default_certifies(capsys):
    code, out, err = run(capsys, "productset-thick")
    assert code == 0
    assert out.splitlines()[-1] == "6,e"


def test_json_output_and_out_file(tmp_path, capsys):
    path = tmp_path / "sat.json"
    code, out, _ = run(capsys, "boundary-sat", "--cylinder", "ab", "--n", "5", "--out", str(path))
    assert code == 0 and out == ""
    doc = json.loads(path.read_text())
    assert doc["report"]["measure"] == "971/972"
    assert doc["report"]["holds"] is True


def test_measure_file_ingestion(tmp_path, capsys):
    f = tmp_path / "mu.txt"
    f.write_text("# lazy walk\ne 1/2\na 1/8\nA 1/8\nb 1/8\nB 1/8\n")
    code, out, _ = run(capsys, "drift", "--measure", str(f), "--N", "3")
    assert code == 0
    assert out.splitlines()[1] == "1,1/2,1/2,1/2"


def test_lattice_group(capsys):
    code, out, _ = run(capsys, "drift", "--group", "lattice:2", "--N", "2")
    assert code == 0
    assert out.splitlines()[1] == "1,1,1,1"


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["quasiharmonic", "--element", "axz"], "malformed input"),
        (["productset-density", "--set", "random:0.3:1", "--m", "30"], "cap exceeded"),
        (["drift", "--measure", "/nonexistent/mu.txt"], "cannot read measure file"),
        (["boundary-rn", "--depth", "2", "--radius", "3"], "depth error"),
        (["drift", "--group", "heisenberg:3"], "unknown group descriptor"),
        (["productset-density", "--set", "blob:1"], "unknown set kind"),
    ],
)
def test_error_messages(argv, fragment, capsys):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert fragment in err
    assert out == ""


def test_malformed_measure_file(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("a 1/2\nb one-half\n")
    code, _, err = run(capsys, "drift", "--measure", str(f))
    assert code == 1
    assert "line 2" in err and "malformed weight" in err


def test_every_command_has_help(capsys):
    parser = build_parser()
    for name, (_, text) in COMMANDS.items():
        with pytest.raises(SystemExit) as info:
            parser.parse_args([name, "--help"])
        assert info.value.code == 0
        assert text[1:] in " ".join(capsys.readouterr().out.split())


def test_byte_identical_outputs(capsys):
    argv = ["clt", "--n", "40", "--samples", "300", "--seed", "5", "--format", "json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    _, c, _ = run(capsys, *argv[:-2], "--threads", "3", "--format", "json")
    assert json.loads(a)["report"] == json.loads(c)["report"]
    assert json.loads(a)["rows"] == json.loads(c)["rows"]


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("RWGROUPS_THREADS", "4")
    ns = build_parser().parse_args(["clt"])
    assert config_from_args(ns).threads == 4


def test_config_round_trip(capsys):
    ns = build_parser().parse_args(["productset-thick", "--k", "3", "--K", "5", "--seed", "9"])
    cfg = config_from_args(ns)
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg
    code, out, _ = run(capsys, "besov-tau", "--print-config")
    assert code == 0
    back = ExperimentConfig.from_text(out)
    assert back.command == "besov-tau" and back.params["eps"] == "1/4"
    assert execute(back)[0] == 0
    with pytest.raises(ParseError):
        ExperimentConfig.from_text("{not json")


@pytest.mark.parametrize("name", ["entropy", "growth", "neglect", "boundary-cocycle", "besov-current", "fixedvector",
                                  "affine-minimize", "productset-density", "quasiharmonic"])
def test_commands_run_quickly(name, capsys):
    extra = {"entropy": ["--N", "6"], "growth": ["--N", "6"], "neglect": ["--N", "20"],
             "boundary-cocycle": ["--n", "2", "--depth", "4"], "besov-current": ["--depth", "4"],
             "quasiharmonic": ["--N", "6"]}.get(name, [])
    code, out, err = run(capsys, name, *extra)
    assert code == 0
    assert out and err.count("\n") == 1


def test_fundamental_inconclusive_on_short_horizon(capsys):
    code, out, _ = run(capsys, "fundamental", "--N", "12")
    assert code == 2
    assert out.splitlines()[1].endswith("false")


def test_affine_action_file(tmp_path, capsys):
    f = tmp_path / "act.txt"
    f.write_text("# two rotations about the z axis\n3\na\n0 -1 0\n1 0 0\n0 0 1\n0 0 0\nb\n-1 0 0\n0 -1 0\n0 0 1\n0 0 0\n")
    code, out, err = run(capsys, "fixedvector", "--action", str(f), "--format", "json")
    assert code == 0
    assert json.loads(out)["report"]["dimension"] == 1
    f.write_text("3\n1 0\n")
    code, _, err = run(capsys, "fixedvector", "--action", str(f))
    assert code == 1 and "malformed input" in err


# --- io ---------------------------------------------------------------------------


def test_parse_measure_round_trip():
    mu = FiniteMeasure(F2, {"a": "1/3", "A": "1/3", "bA": "1/6", "aB": "1/6"})
    assert parse_measure(format_measure(mu), F2) == mu
    Z2 = Lattice(2)
    nu = parse_measure("(1,0) 1/2 # right\n(-1,0) 1/2\n", Z2)
    assert nu[(1, 0)] == Fraction(1, 2)


@pytest.mark.parametrize(
    "text, fragment",
    [("", "no atoms"), ("a 1/2\n", "sum to 1/2"), ("a 1/2\na 1/2\n", "twice"), ("a\n", "expected"),
     ("q 1\n", "unknown letter"), ("a -1/2\nb 3/2\n", "negative"), ("a 1/0\n", "malformed weight")],
)
def test_parse_measure_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_measure(text, F2)


def test_value_formatting():
    assert format_value(Fraction(3, 4)) == "3/4"
    assert format_value(Fraction(4, 2)) == "2"
    assert format_value(0.1 + 0.2) == "0.3"
    assert format_value(2 / 3) == "0.666666667"
    assert format_value(True) == "true"
    assert to_csv(["a", "b"], [(1, Fraction(1, 3))]) == "a,b\n1,1/3\n"
    assert json.loads(to_json({"x": Fraction(1, 2), "y": 1 / 3}))["y"] == 0.333333333
