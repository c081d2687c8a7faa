import os
import subprocess
import sys
from pathlib import Path

import pytest

from cohomolab import cli
from cohomolab.cli import EXIT_INPUT, EXIT_INTERNAL, EXIT_NEGATIVE, EXIT_OK, run
from cohomolab.model import ParseError, ValidationError, parse_model

from conftest import all_model_names, model_path

BASE = """[space]
points a b t
a < t
b < t
"""


# -- parsing -----------------------------------------------------------------

def test_all_shipped_models_load():
    names = all_model_names()
    assert {"point", "cone", "pseudocircle", "z2_regular", "two_sierpinski"} <= set(names)
    for name in names:
        m = parse_model(Path(model_path(name)).read_text(), name)
        assert m.space.point_count >= 1
        assert m.module.rank >= 1


def test_defaults_trivial_group_and_bounds():
    m = parse_model(BASE + "[module]\nfactors 0\n")
    assert m.action.order == 1
    assert m.N == 3


def test_bounds_and_named_covering():
    m = parse_model(BASE + "[module]\nfactors 0 2\n[covering halves]\nU = a t\nW = b t\n"
                    "[bounds]\nN = 2\nr_max = 4\nseed = 7\n")
    assert (m.N, m.r_max, m.seed) == (2, 4, 7)
    assert len(m.covering("halves").members) == 2
    assert m.covering("minimal") is None


@pytest.mark.parametrize("text,line", [
    ("[space]\npoints a\n[bogus]\n", 3),
    ("[space]\npoints a\nwibble a\n", 3),
    ("points a\n", 1),
    ("[space]\npoints a b\na <\n", 3),
    (BASE + "[module]\nfactors 0\naction s 1\n", 7),
    (BASE + "[bounds]\nN 3\n", 6),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_model(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


@pytest.mark.parametrize("text", [
    BASE + "[covering empty]\n",
    BASE + "[covering c]\nU = a\n",          # not an up-set
    BASE + "[module]\nfactors 1\n",
    BASE + "[group]\ncyclic s 2\nperm s = (a t)\n",  # not order preserving
    "[space]\npoints a a\n",
    BASE + "[module]\nfactors 0\n[bounds]\nN = -1\n",
])
def test_validation_errors(text):
    with pytest.raises(ValidationError):
        parse_model(text)


def test_group_from_table():
    m = parse_model(BASE + "[group]\nelements e s\ntable e = e s\ntable s = s e\n"
                    "perm s = (a b)\n[module]\nfactors 0\n")
    assert m.action.order == 2


# -- command line ------------------------------------------------------------

def _run(*args):
    return run([str(a) for a in args])


def _machine(out):
    return dict(line.split("=", 1) for line in out.strip().splitlines())


def test_cohomology_command():
    code, out = _run("cohomology", model_path("z2_regular"), "--equivariant", "--format", "machine")
    assert code == EXIT_OK
    kv = _machine(out)
    assert kv["verdict"] == "COMPUTED"
    assert [kv[f"continuous.H{n}"] for n in range(4)] == ["Z", "0", "Z/2", "0"]


def test_output_is_deterministic():
    args = ("spectral", model_path("cone"), "--equivariant", "--format", "machine")
    assert _run(*args) == _run(*args)


def test_spectral_command_matches():
    code, out = _run("spectral", model_path("pseudocircle"), "--bound", "2")
    assert code == EXIT_OK
    assert out.rstrip().endswith("verdict: MATCH")


@pytest.mark.parametrize("name,verdict,code", [
    ("cone", "THEOREM-CONFIRMED", EXIT_OK),
    ("pseudocircle", "NO-CERTIFICATE", EXIT_NEGATIVE),
])
def test_verify_theorem(name, verdict, code):
    got, out = _run("verify-theorem", model_path(name), "--bound", "2", "--format", "machine")
    assert got == code
    assert _machine(out)["verdict"] == verdict


def test_selftest_passes_on_regular_model():
    code, out = _run("selftest", model_path("z2_regular"), "--format", "machine")
    assert code == EXIT_OK
    assert _machine(out)["failures"] == "0"


@pytest.mark.parametrize("fault", ["sign", "differential"])
def test_selftest_catches_faults(fault):
    code, out = _run("selftest", model_path("z2_regular"), "--inject-fault", fault,
                     "--format", "machine")
    assert code == EXIT_NEGATIVE
    kv = _machine(out)
    assert int(kv["failures"]) > 0
    assert kv["psi_bridge"].startswith("FAIL")


def test_missing_file_is_input_error(tmp_path):
    code, out = _run("cohomology", tmp_path / "nope.model")
    assert code == EXIT_INPUT and out.startswith("error:")


def test_malformed_model_is_input_error(tmp_path):
    p = tmp_path / "bad.model"
    p.write_text("[space]\npoints a\n[module]\nfactors x\n")
    code, out = _run("cohomology", p)
    assert code == EXIT_INPUT and "line 4" in out


def test_unknown_covering_is_input_error():
    code, _ = _run("spectral", model_path("cone"), "--covering", "nosuch")
    assert code == EXIT_INPUT


def test_size_guard(monkeypatch):
    monkeypatch.setenv("COHOMOLAB_SIZE_LIMIT", "50")
    code, out = _run("spectral", model_path("pseudocircle"))
    assert code == EXIT_INPUT and "SizeOverflow" in out


def test_internal_error_exit_code(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("bug")
    monkeypatch.setattr(cli, "cmd_cohomology", boom)
    code, out = _run("cohomology", model_path("point"))
    assert code == EXIT_INTERNAL and out.startswith("internal error:")


def test_entry_point_exit_code():
    env = dict(os.environ, PYTHONPATH=str(Path(__file__).resolve().parents[1] / "src"))
    proc = subprocess.run([sys.executable, "-m", "cohomolab.cli", "verify-theorem",
                           model_path("pseudocircle"), "--bound", "1"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == EXIT_NEGATIVE
    assert "NO-CERTIFICATE" in proc.stdout
