import itertools
import random

import pytest
from hypothesis import given, strategies as st

from conftest import epistemic
from epimc.beliefbase import Context, PointedModel
from epimc.formula import BOT, Atom, Box, CBox, Neg, depth, parse, subformulas
from epimc.generators import random_kripke
from epimc.kripke import mbm_to_kripke, sat_kripke, single_world, world_name
from epimc.limits import ResourceCapExceeded
from epimc.structures import (
    MODES, KWorld, StructureEvaluator, canonical_base, coherence, coherent_count, depth_violation,
    enumerate_coherent_naive, enumerate_worlds, extend, find_counterexample, is_coherent,
    is_correct_world, restrict, sat_structure, space, tau, tau_all, valid_brute_force, valid_universal,
    world_from_dict, world_to_dict,
)

p = Atom("p")
W0 = KWorld(("p",), 1, set())
W1 = KWorld(("p",), 1, {"p"})


def lvl(*marks):
    return tuple(frozenset(m) for m in marks)


def test_enumeration_counts():
    assert len(enumerate_worlds(["p"], 1, 0)) == 2
    assert len(enumerate_worlds(["p"], 1, 1)) == 8
    assert len(enumerate_worlds(["p"], 1, 1, coherent_only=True)) == 8
    assert coherent_count(["p"], 1, 2) == 2 * 2 ** 8
    with pytest.raises(ResourceCapExceeded):
        enumerate_worlds(["p"], 2, 3)


def test_coherence_examples():
    assert coherence(W0).coherent and coherence(W0).correct
    one = KWorld(("p",), 1, set(), [lvl([W1])])
    bad = KWorld(("p",), 1, set(), [lvl([W1]), lvl([KWorld(("p",), 1, set(), [lvl([])])])])
    rep = coherence(bad)
    assert not rep.coherent and any(v.kind == "projection" for v in rep.violations)
    assert is_coherent(one)
    assert is_correct_world(KWorld(("p",), 1, set(), [lvl([W0])]))
    assert not is_correct_world(one)


def test_coherence_agrees_with_mask_engine():
    for n, k in [(1, 1), (1, 2), (2, 1)]:
        sp = space(["p"], n)
        mask = sp.coherent_mask(k)
        for idx in range(sp.size(k)):
            assert is_coherent(sp.world(k, idx)) == bool(mask >> idx & 1)


def test_coherent_enumeration_matches_filter():
    fast = set(enumerate_worlds(["p"], 1, 2, coherent_only=True))
    assert fast == set(enumerate_coherent_naive(["p"], 1, 2))


def test_correct_mask_agrees():
    sp = space(["p"], 1)
    mask = sp.correct_mask(2)
    for idx in range(sp.size(2)):
        assert is_correct_world(sp.world(2, idx)) == bool(mask >> idx & 1)


def test_sat_examples():
    assert sat_structure(W1, p)
    w = KWorld(("p",), 1, set(), [lvl([W1])])
    assert sat_structure(w, Box(1, p))
    assert sat_structure(w, CBox(1, Neg(p)))
    both = KWorld(("p",), 1, set(), [lvl([W0, W1])])
    assert sat_structure(both, CBox(1, BOT))
    with pytest.raises(ValueError):
        sat_structure(W0, Box(1, p))


def test_literal_and_mask_evaluation_agree():
    lit = StructureEvaluator("all", literal=True)
    for w in enumerate_worlds(["p"], 1, 2, coherent_only=True)[::7]:
        for text in ["C[1] B[1] p", "B[1] C[1] ~p", "C[1] C[1] p", "O[1] B[1] p"]:
            f = parse(text)
            assert lit.sat(w, f) == sat_structure(w, f)


def test_restrict_extend():
    sp = space(["p"], 1)
    for idx in range(0, sp.size(1)):
        w = sp.world(1, idx)
        e = extend(w, 3)
        assert is_coherent(e) and e.k == 3 and restrict(e, 1) == w
        if is_correct_world(w):
            assert is_correct_world(e)
    assert extend(W1, 0) == W1
    assert is_correct_world(extend(W1, 2))


def test_depth_violation_matches_brute_force():
    worlds = enumerate_worlds(["p"], 1, 2, coherent_only=True)
    for text in ["B[1] p", "C[1] p", "C[1] false", "O[1] p", "B[1] ~p & C[1] p"]:
        f = parse(text)
        for mode in MODES:
            ev = StructureEvaluator(mode)
            pool = worlds if mode != "hereditary" else [w for w in worlds if ev.in_domain(w)]
            brute = any(sat_structure(w, f, mode) != sat_structure(restrict(w, 1), f, mode) for w in pool)
            found = depth_violation(f, 2, mode, ["p"], 1)
            assert brute == (found is not None), (text, mode)


def test_depth_violation_on_box_formulas():
    for text in ["B[1] p", "B[1] ~p", "B[1] false", "~B[1] p"]:
        assert depth_violation(parse(text), 3, "all", ["p"], 1) is None


def test_tau_examples():
    w = tau(single_world(["p"]), 1, ["p"])
    assert w.top(1) == frozenset() and sat_structure(w, Box(1, BOT))
    w = tau(single_world(["p"], 1, True), 2, ["p"])
    assert all(w.prefix(h - 1) in w.marks(h, 1) for h in (1, 2))
    assert is_correct_world(w)


@given(epistemic(atoms=("p", "q"), agents=2, max_leaves=5), st.integers(0, 10_000))
def test_tau_transfer(f, seed):
    if depth(f) > 2:
        return
    pk = random_kripke(random.Random(seed), ["p", "q"], 2, 4)
    w = tau(pk, depth(f), ["p", "q"])
    assert is_coherent(w)
    if not any(isinstance(g, CBox) for g in subformulas(f)):
        assert sat_kripke(pk, f) == sat_structure(w, f)


def test_canonical_base_examples():
    w = KWorld(("p",), 1, set(), [lvl([W1])])
    assert p in canonical_base(w).base(1)
    w = KWorld(("p",), 1, set(), [lvl([])])
    assert BOT in canonical_base(w).base(1)


def _canonical_context(k):
    ws = enumerate_worlds(["p"], 1, k, coherent_only=True)
    return ws, Context(canonical_base(w) for w in ws)


@pytest.mark.parametrize("k", [1, 2])
def test_canonical_round_trip(k):
    ws, ctx = _canonical_context(k)
    hier = tau_all(mbm_to_kripke(PointedModel(ctx.members[0], ctx)).model, k, ["p"])
    for w in ws:
        assert hier[world_name(canonical_base(w))] == w
    assert tau(PointedModel(canonical_base(ws[-1]), ctx), k, ["p"]) == ws[-1]


def test_validity_examples():
    assert valid_universal(parse("B[1] p -> B[1] p"))
    assert valid_universal(parse("B[1](p -> q) -> (B[1] p -> B[1] q)"))
    assert not valid_universal(parse("B[1] p -> p"))
    assert valid_universal(parse("B[1] p -> p"), bc=True)
    assert valid_universal(parse("E(p & ~q)"))


SUITE = ["B[1] p -> p", "B[1] B[1] p -> B[1] p", "O[1] p -> B[1] p", "C[1] false", "U p -> B[1] p",
         "B[1] false -> C[1] B[1] false", "D[1] true -> B[1] D[1] true", "E(p & B[1] p)",
         "B[1](B[1] p -> p)", "~B[1] false"]


@pytest.mark.parametrize("text", SUITE)
@pytest.mark.parametrize("bc", [False, True])
@pytest.mark.parametrize("mode", MODES)
def test_search_agrees_with_brute_force(text, bc, mode):
    f = parse(text)
    assert valid_universal(f, bc, mode) == valid_brute_force(f, bc, mode)


def test_counterexample_is_a_real_witness():
    f = parse("B[1] B[1] p -> B[1] p")
    w = find_counterexample(f)
    assert is_coherent(w) and not sat_structure(w, f)


def test_world_file_round_trip():
    for w in enumerate_worlds(["p"], 1, 2, coherent_only=True)[::50]:
        assert world_from_dict(world_to_dict(w)) == w
    with pytest.raises(ValueError):
        world_from_dict({"atoms": ["p"], "agents": 1, "levels": [{"q": 1}]})


@given(st.integers(0, 2047))
def test_index_round_trip(idx):
    sp = space(["p"], 1)
    assert sp.index_of(sp.world(2, idx)) == idx


def test_mbm_route_into_structures():
    m = PointedModel(canonical_base(W0), Context())
    assert tau(m, 1, ["p"]) == tau(mbm_to_kripke(m), 1, ["p"])


def test_depth_bookkeeping_is_exhaustive_for_one_agent():
    """Every combination of marks at k=1 is a distinct world."""
    ws = enumerate_worlds(["p"], 1, 1)
    assert len({(w.valuation, w.top(1)) for w in ws}) == len(ws) == len(list(itertools.product(range(2), range(4))))
