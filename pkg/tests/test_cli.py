import json
import subprocess
import sys
from importlib.resources import files

import jsonschema
import pytest
from conftest import CORPUS

from smt.cli import main

CORPUS_DIR = files("smt") / "corpus"


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def goldens():
    out = []
    for name in CORPUS:
        cases = json.loads((CORPUS_DIR / f"{name}.golden.json").read_text(encoding="utf-8"))
        for i, case in enumerate(cases):
            out.append(pytest.param(case, id=f"{name}-{i}-{case['args'][0]}"))
    return out


@pytest.fixture(autouse=True)
def no_color(monkeypatch):
    monkeypatch.setenv("SMT_COLOR", "0")


@pytest.mark.parametrize("case", goldens())
def test_golden(case, capsys):
    code, out, _ = run(capsys, *case["args"])
    assert (out, code) == (case["stdout"], case["exit"])


def test_every_spec_has_goldens():
    for name in CORPUS:
        assert (CORPUS_DIR / f"{name}.smt").is_file()
        assert json.loads((CORPUS_DIR / f"{name}.golden.json").read_text(encoding="utf-8"))


def test_enumerate_json_matches_schema(capsys):
    schema = json.loads((CORPUS_DIR / "enumerate.schema.json").read_text(encoding="utf-8"))
    for name, s in (("lambda", "exp"), ("stlc", "T"), ("records", "label"), ("cbn", "sA")):
        code, out, _ = run(capsys, "enumerate", name, s, "--depth", "2", "--format", "json")
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        assert code == 0 and doc["count"] == len(doc["terms"])
        assert doc["terms"] == sorted(doc["terms"])


def test_output_is_deterministic(capsys):
    first = run(capsys, "enumerate", "stlc", "texp", "--depth", "2")
    second = run(capsys, "enumerate", "stlc", "texp", "--depth", "2")
    assert first == second


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "check", "lambda", "nope", "x0")[0] == 2
    assert run(capsys, "check", "no-such-spec", "exp", "x0")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "enumerate", "lambda", "exp", "--depth", "-1")[0] == 2
    code, _, err = run(capsys, "reduce", "lambda", "x0", "--rel", "nope")
    assert code == 2 and err.startswith("UnknownSet")


def test_spec_syntax_error_reports_a_span(tmp_path, capsys):
    bad = tmp_path / "bad.smt"
    bad.write_text("names x;\nset S ::= a |\n  ;", encoding="utf-8")
    code, _, err = run(capsys, "enumerate", str(bad), "S")
    assert code == 2 and "bad.smt:3:3" in err
    code, _, err = run(capsys, "enumerate", str(bad), "S", "--format", "json")
    diag = json.loads(err)
    assert code == 2 and (diag["line"], diag["col"], diag["code"]) == (3, 3, "SyntaxError")


def test_engine_errors_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, "fill", "[] []", "O")
    assert code == 3 and err.startswith("ArityMismatch")
    spec = tmp_path / "neg.smt"
    spec.write_text("names x; constructor [] [] prec 2;"
                    "set S (s) ::= x where x x notin S | x x where x notin S;", encoding="utf-8")
    code, _, err = run(capsys, "enumerate", str(spec), "S", "--depth", "2")
    assert code == 3 and err.startswith("NoLeastFixpoint")
    plain = tmp_path / "plain.smt"
    plain.write_text('names x; constructor "λ" [] "." [] prec 1; constructor [] [] prec 2;'
                     'binder "λ" [] "." [] binds 1 in {2};', encoding="utf-8")
    code, _, err = run(capsys, "subst", str(plain), r"\ x1 . x2", "x2", "x1")
    assert code == 3 and err.startswith("SubstUndefined")


def test_normalize_truncation_note(capsys):
    omega = r"(\ x0 . x0 x0 x0) (\ x0 . x0 x0 x0)"
    code, out, err = run(capsys, "normalize", "lambda", omega, "--steps", "3")
    assert code == 1 and out == "" and "stopped after 3 steps" in err


def test_color_switch(monkeypatch, capsys):
    monkeypatch.setenv("SMT_COLOR", "1")
    _, out, _ = run(capsys, "check", "lambda", "exp", "x0")
    assert out == "\x1b[32mYes\x1b[0m\n"
    monkeypatch.setenv("SMT_COLOR", "0")
    _, out, _ = run(capsys, "check", "lambda", "exp", "x0")
    assert out == "Yes\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "smt", "fv", "lambda", r"\ x1 . x1 x2"],
                          capture_output=True, text=True, env={"SMT_COLOR": "0"})
    assert proc.returncode == 0 and proc.stdout == "{x2}\n"
