import pytest
from hypothesis import given

from conftest import epistemic, explicit
from epimc.formula import (
    BOT, TOP, Atom, Box, CBox, Conj, Neg, ParseError, Tri, atoms, big_and, big_or, depth,
    is_el, is_explicit, mutual_belief, parse, parse_el, parse_epistemic, parse_explicit,
    render, size, subformulas, tri_depth,
)

p, q = Atom("p"), Atom("q")


def test_parse_explicit_examples():
    assert parse_explicit("X[1] p") == Tri(1, p)
    assert parse_explicit("p & ~q") == Conj(p, Neg(q))
    assert parse_explicit("X[1] p | X[1] ~p") == Neg(Conj(Neg(Tri(1, p)), Neg(Tri(1, Neg(p)))))


def test_parse_epistemic_examples():
    assert parse_epistemic("B[2] p") == Box(2, p)
    assert parse_epistemic("O[1] p") == Conj(Box(1, p), CBox(1, Neg(p)))
    assert parse_epistemic("D[1] p") == Neg(Box(1, Neg(p)))


def test_derived_connectives():
    assert parse("p -> q") == Neg(Conj(p, Neg(q)))
    assert parse("true") == TOP
    assert parse("false") == BOT
    assert parse("U p") == Conj(Box(1, p), CBox(1, p))
    assert parse("E p") == Neg(Conj(Box(1, Neg(p)), CBox(1, Neg(p))))


def test_precedence_and_associativity():
    assert parse("p & q | p") == parse("(p & q) | p")
    assert parse("p -> q -> p") == parse("p -> (q -> p)")
    assert parse("~B[1] p & q") == Conj(Neg(Box(1, p)), q)


@pytest.mark.parametrize("text,pos", [("B[1] (p", 7), ("p &", 3), ("X[0] p", 0), ("", 0)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert exc.value.pos == pos


def test_language_restrictions():
    with pytest.raises(ParseError):
        parse_explicit("B[1] p")
    with pytest.raises(ParseError):
        parse_el("C[1] p")
    with pytest.raises(ParseError):
        parse_epistemic("X[1] p")
    with pytest.raises(ParseError):
        parse("B[3] p", n_agents=2)


def test_metrics_examples():
    assert depth(p) == 0
    assert depth(Box(1, CBox(2, p))) == 2
    assert depth(Conj(Box(1, p), q)) == 1
    assert atoms(Box(1, p)) == {"p"}
    assert atoms(Conj(p, Neg(p))) == {"p"}
    assert atoms(Tri(1, Conj(p, q))) == {"p", "q"}
    assert tri_depth(p) == 0
    assert tri_depth(Tri(1, Tri(2, p))) == 2
    assert tri_depth(Conj(Tri(1, p), q)) == 1


def test_mutual_belief_examples():
    assert mutual_belief(0, p, {1, 2}) == p
    assert mutual_belief(1, p, {1}) == Conj(p, Tri(1, p))
    assert mutual_belief(1, p, {1, 2}) == Conj(p, Conj(Tri(1, p), Tri(2, p)))


def test_render_examples():
    assert render(Tri(1, p)) == "X[1] p"
    assert render(Neg(Conj(p, q))) == "~(p & q)"
    assert render(Box(2, Neg(p))) == "B[2] ~p"


def test_big_connectives():
    assert big_and([]) == TOP
    assert big_or([]) == BOT
    assert big_or([p]) == p


@given(epistemic())
def test_render_parse_round_trip(f):
    assert parse(render(f)) == f


@given(explicit())
def test_explicit_round_trip(f):
    assert is_explicit(f)
    assert parse_explicit(render(f)) == f


@given(epistemic(cbox=False))
def test_el_formulas_are_el(f):
    assert is_el(f)


@given(epistemic())
def test_subformulas_children_first(f):
    subs = subformulas(f)
    assert subs[-1] == f
    seen = set()
    for g in subs:
        for child in (getattr(g, "body", None), getattr(g, "left", None), getattr(g, "right", None)):
            if child is not None:
                assert child in seen
        seen.add(g)
    assert len(subs) <= size(f)
