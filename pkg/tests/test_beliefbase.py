import json
import random

import pytest
from hypothesis import given, strategies as st

from conftest import epistemic, explicit
from epimc.beliefbase import (
    BeliefBase, Context, Evaluator, PointedModel, alternatives, is_alternative, is_correct,
    load_model, model_from_dict, model_to_dict, sat_epistemic, sat_explicit, satisfies_bc,
)
from epimc.formula import BOT, TOP, Atom, Box, CBox, Conj, Neg, Top, Tri, parse
from epimc.generators import random_mbm

p, q = Atom("p"), Atom("q")


def mk(b1=(), b2=(), state=()):
    return BeliefBase((frozenset(b1), frozenset(b2)), frozenset(state))


def naive(b, ctx, f):
    """Reference semantics straight from the clauses."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Atom):
        return f.name in b.state
    if isinstance(f, Neg):
        return not naive(b, ctx, f.body)
    if isinstance(f, Conj):
        return naive(b, ctx, f.left) and naive(b, ctx, f.right)
    alts = [c for c in ctx if all(sat_explicit(c, a) for a in b.base(f.agent))]
    scope = alts if isinstance(f, Box) else [c for c in ctx if c not in alts]
    return all(naive(c, ctx, f.body) for c in scope)


def test_sat_explicit_examples():
    b = mk([p], [], ["q"])
    assert sat_explicit(b, Tri(1, p))
    assert not sat_explicit(b, Tri(1, Conj(p, p)))
    assert sat_explicit(b, Conj(q, Neg(p)))


def test_is_correct_examples():
    assert is_correct(mk([p], [], ["p"]))
    assert not is_correct(mk([p], [], []))
    assert is_correct(mk([Tri(1, p), p], [], ["p"]))


def test_is_alternative_examples():
    assert is_alternative(mk(), 1, mk([q], [p], ["p"]))
    assert is_alternative(mk([p]), 1, mk([], [], ["p"]))
    assert is_alternative(mk([Tri(2, q)]), 1, mk([], [q], []))


def test_alternatives_examples():
    ctx = Context([mk(state=["p"]), mk(), mk(state=["q"])])
    assert len(alternatives(mk(), 1, ctx)) == 3
    assert alternatives(mk([Conj(p, Neg(p))]), 1, ctx) == []
    a, b = mk(state=["p"]), mk()
    assert alternatives(mk([p]), 1, Context([a, b])) == [a]


def test_sat_epistemic_examples():
    assert sat_epistemic(PointedModel(mk(), Context()), Box(1, BOT))
    a, b = mk(state=["p"]), mk()
    m = PointedModel(mk([p]), Context([a, b]))
    assert sat_epistemic(m, Conj(Box(1, p), CBox(1, Neg(p))))
    assert sat_epistemic(m, parse("O[1] p"))


def test_satisfies_bc_examples():
    b = mk()
    assert satisfies_bc(PointedModel(b, Context([b])))
    b = mk([p], [], ["p"])
    assert satisfies_bc(PointedModel(b, Context([b])))
    b = mk([p], [], [])
    assert not satisfies_bc(PointedModel(b, Context([b])))
    assert not satisfies_bc(PointedModel(mk(), Context()))


def test_bc_characterisation_on_random_models():
    rng = random.Random(7)
    seen = {True: 0, False: 0}
    for _ in range(1000):
        m = random_mbm(rng, ["p", "q"], 2, 4, 1)
        if rng.random() < 0.5:
            ctx = Context([c for c in m.context if is_correct(c)] + ([m.base] if is_correct(m.base) else []))
            m = PointedModel(m.base, ctx)
        seen[satisfies_bc(m)] += 1
    assert seen[True] and seen[False]


@given(epistemic(atoms=("p", "q")), st.integers(0, 10_000))
def test_evaluator_matches_reference(f, seed):
    m = random_mbm(random.Random(seed), ["p", "q"], 2, 4, 1)
    assert sat_epistemic(m, f) == naive(m.base, list(m.context), f)


@given(explicit(atoms=("p", "q")), st.integers(1, 2))
def test_explicit_belief_is_syntactic(a, agent):
    b = mk().with_base(agent, [a])
    assert sat_explicit(b, Tri(agent, a))
    assert not sat_explicit(b, Tri(agent, Conj(a, a)))
    assert not sat_explicit(b, Tri(3 - agent, a))


def test_evaluator_masks_are_shared():
    ctx = Context([mk(state=["p"]), mk(), mk([p], [], ["p"])])
    ev = Evaluator(ctx)
    f = Box(1, p)
    assert ev.truth(f) == ev.truth(f)
    assert ev.members_of(ev.truth(TOP)) == list(ctx)


def test_model_round_trip(tmp_path):
    m = PointedModel(mk([p, Tri(2, q)], [Neg(q)], ["p"]), Context([mk(state=["q"]), mk([p])]))
    data = model_to_dict(m)
    again = model_from_dict(json.loads(json.dumps(data)))
    assert again.base == m.base and again.context == m.context
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    assert load_model(str(path)).base == m.base


def test_model_file_rejects_unknown_keys():
    with pytest.raises(ValueError):
        model_from_dict({"agents": 1, "base": {"state": []}, "extra": 1})
    with pytest.raises(ValueError):
        model_from_dict({"agents": 1, "base": {"state": [], "bases": {"2": ["p"]}}})
