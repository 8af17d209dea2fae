import io
import json

import pytest

from epimc.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"agents": 1, "base": {"state": ["p"], "bases": {"1": ["p"]}}, "context": []}))
    return str(path)


def test_check_pool(model_file):
    code, out, _ = call("check", "--model", model_file, "--alpha", "true", "--phi", "B[1] p",
                        "--engine", "pool", "--tri-depth", "1")
    assert code == 0
    assert "verdict=true" in out and "pool_size=4" in out and "atoms=p" in out and "tri_depth=1" in out


def test_check_false_verdict(model_file):
    code, out, _ = call("check", "--model", model_file, "--phi", "B[1] ~p")
    assert code == 1 and "verdict=false" in out


def test_validity_k_axiom():
    code, out, _ = call("validity", "--phi", "B[1](p->q) -> (B[1]p -> B[1]q)", "--engine", "structures")
    assert code == 0


def test_validity_counterexample_is_inline_json():
    code, out, _ = call("validity", "--phi", "B[1] p -> p", "--json")
    data = json.loads(out)
    assert code == 1 and data["verdict"] is False and data["counterexample"]["levels"]


@pytest.mark.parametrize("engine", ["structures", "kripke", "pool"])
def test_t_axiom_under_bc(engine):
    assert call("validity", "--phi", "B[1] p -> p", "--bc", "--engine", engine)[0] == 0
    assert call("validity", "--phi", "B[1] p -> p", "--engine", engine)[0] == 1


def test_qbf_sweep():
    code, out, _ = call("qbf", "--sweep", "2")
    assert code == 0 and "disagreements=0" in out


def test_qbf_single_and_translate():
    code, out, _ = call("qbf", "--qbf", "A p. E q. (p <-> q)", "--verbose")
    assert code == 0 and "oracle=true reduced=true" in out
    code, out, _ = call("translate", "qbf2mc", "--qbf", "A p. p")
    assert code == 0 and "query=B[1]" in out


def test_fuzz_requires_seed():
    assert call("fuzz", "--suite", "thm1")[0] == 2


def test_fuzz_is_byte_identical():
    a = call("fuzz", "--suite", "thm1", "--seed", "4", "--count", "5")
    b = call("fuzz", "--suite", "thm1", "--seed", "4", "--count", "5")
    assert a == b and a[0] == 0


def test_fuzz_mutation_fails_with_model():
    code, out, _ = call("fuzz", "--suite", "thm1", "--seed", "4", "--count", "5", "--mutate", "--json")
    data = json.loads(out)
    assert code == 1 and data["counterexample"]["model"]["agents"] == 2


def test_parse_error_exit_code():
    code, _, err = call("validity", "--phi", "B[1] (p")
    assert code == 2 and "pos=7" in err


def test_parse_error_in_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"agents": 1, "base": {"state": [], "bases": {"1": ["p &"]}}}))
    code, _, err = call("check", "--model", str(path), "--phi", "p")
    assert code == 2 and str(path) in err


def test_missing_file():
    assert call("kcheck", "--kripke", "/nonexistent.json", "--phi", "p")[0] == 2


def test_resource_cap(monkeypatch, model_file):
    monkeypatch.setenv("EPIMC_MAX_CONTEXT", "8")
    code, _, err = call("check", "--model", model_file, "--phi", "B[1] p", "--tri-depth", "1")
    assert code == 3 and "resource" in err


def test_structure_commands(tmp_path):
    code, out, _ = call("structure", "enum", "--atoms", "p", "--k", "1", "--coherent")
    assert code == 0 and "count=8" in out
    code, out, _ = call("structure", "enum", "--atoms", "p", "--k", "1", "--list", "--json")
    world = json.loads(out)["worlds"][3]
    path = tmp_path / "w.json"
    path.write_text(json.dumps(world))
    assert call("structure", "coherence", "--world", str(path))[0] == 0
    assert call("structure", "sat", "--world", str(path), "--phi", "B[1] p | ~B[1] p")[0] == 0
    code, out, _ = call("structure", "canon", "--world", str(path))
    assert code == 0 and "base=" in out


def test_translate_round_trip(tmp_path, model_file):
    code, out, _ = call("translate", "mbm2k", "--input", model_file, "--json")
    kripke = json.loads(out)["kripke"]
    path = tmp_path / "k.json"
    path.write_text(json.dumps(kripke))
    assert call("kcheck", "--kripke", str(path), "--phi", "B[1] false")[0] == 0
    code, out, _ = call("translate", "k2mbm", "--input", str(path), "--guard", "p")
    assert code == 0 and out.startswith("model=")
    code, out, _ = call("structure", "tau", "--kripke", str(path), "--k", "1")
    assert code == 0 and out.startswith("world=")


def test_shipped_counterexample():
    from importlib import resources
    path = str(resources.files("epimc").joinpath("data/chi_counterexample.json"))
    code, out, _ = call("check", "--model", path, "--phi", "E(p & ~q)", "--engine", "direct")
    assert code == 1
