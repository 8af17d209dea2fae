import json

import pytest

from epimc.beliefbase import model_from_dict, sat_epistemic
from epimc.formula import parse
from epimc.fuzz import SUITES, modal_pool, run_suite
from epimc.kripke import kripke_from_dict, sat_kripke


def test_suite_names():
    assert set(SUITES) == {"thm1", "thm2-pipeline", "prop-lemmuccio", "thm-teoremiccolo",
                           "prop-propone", "bc-variants"}


@pytest.mark.parametrize("name,count", [("thm1", 10), ("thm2-pipeline", 10), ("prop-propone", 0)])
def test_small_runs_pass(name, count):
    res = run_suite(name, 11, count)
    assert res.passed, res.counterexample


def test_reports_are_deterministic():
    a = run_suite("thm1", 5, 8).lines()
    b = run_suite("thm1", 5, 8).lines()
    assert a == b


def test_mutation_is_caught_and_replayable():
    res = run_suite("thm1", 2, 5, mutate=True)
    assert not res.passed
    cex = json.loads(json.dumps(res.counterexample))
    f = parse(cex["formula"])
    m = model_from_dict(cex["model"])
    pk = kripke_from_dict(cex["kripke_model"])
    assert sat_epistemic(m, f) != sat_kripke(pk, f)


def test_pipeline_mutation_is_caught():
    assert not run_suite("thm2-pipeline", 2, 10, mutate=True).passed


def test_mutation_needs_a_translation_suite():
    with pytest.raises(ValueError):
        run_suite("prop-propone", 1, mutate=True)
    with pytest.raises(ValueError):
        run_suite("nope", 1)


def test_modal_pool_shape():
    pool = modal_pool(["p"], 1, 2)
    assert len(pool) == len(set(pool))
    assert {f for f in pool if f.__class__.__name__ == "CBox"}
