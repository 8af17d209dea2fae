"""Seeded random instances for the fuzz suites."""

from __future__ import annotations

import random

from .beliefbase import BeliefBase, Context, PointedModel
from .formula import CBox, Box, Conj, Neg, Atom, Tri, literal
from .kripke import KripkeModel, PointedKripke


def atom_names(count: int) -> list:
    return ["p", "q", "r", "s", "t"][:count] if count <= 5 else [f"a{j}" for j in range(count)]


def random_epistemic(rng: random.Random, P, n: int, max_depth: int, cbox: bool = False,
                     size: int = 6):
    """Random formula over atoms P with modal depth at most ``max_depth``."""
    P = list(P)

    def go(budget, d):
        r = rng.random()
        if budget <= 1 or r < 0.2:
            return Atom(rng.choice(P))
        if r < 0.4:
            return Neg(go(budget - 1, d))
        if r < 0.65 or d == 0:
            left = rng.randint(1, budget - 1)
            return Conj(go(left, d), go(budget - left, d))
        ctor = CBox if cbox and rng.random() < 0.4 else Box
        return ctor(rng.randint(1, n), go(budget - 1, d - 1))

    return go(rng.randint(1, size), max_depth)


def random_explicit(rng: random.Random, P, n: int, max_tri: int, size: int = 4):
    P = list(P)

    def go(budget, d):
        r = rng.random()
        if budget <= 1 or r < 0.35:
            return literal(rng.choice(P), rng.random() < 0.5)
        if r < 0.7 and d > 0:
            return Tri(rng.randint(1, n), go(budget - 1, d - 1))
        if r < 0.85:
            return Neg(go(budget - 1, d))
        left = rng.randint(1, budget - 1)
        return Conj(go(left, d), go(budget - left, d))

    return go(rng.randint(1, size), max_tri)


def random_base(rng: random.Random, P, n: int, max_tri: int = 2, max_items: int = 2,
                pool: list | None = None) -> BeliefBase:
    """A base whose items come from ``pool`` when one is supplied, so that Tri tests can hit."""
    bases = []
    for _ in range(n):
        k = rng.randint(0, max_items)
        if pool:
            items = {rng.choice(pool) for _ in range(k)}
        else:
            items = {random_explicit(rng, P, n, max_tri) for _ in range(k)}
        bases.append(frozenset(items))
    state = frozenset(p for p in P if rng.random() < 0.5)
    return BeliefBase(tuple(bases), state)


def random_mbm(rng: random.Random, P, n: int = 2, max_ctx: int = 5, max_tri: int = 2,
               include_point: bool | None = None) -> PointedModel:
    """A random belief model; base items are shared across members so explicit tests matter."""
    shared = [random_explicit(rng, P, n, max_tri) for _ in range(6)]
    members = [random_base(rng, P, n, max_tri, pool=shared) for _ in range(rng.randint(0, max_ctx))]
    base = random_base(rng, P, n, max_tri, pool=shared)
    if include_point is None:
        include_point = rng.random() < 0.5
    if include_point:
        if members and rng.random() < 0.5:
            base = rng.choice(members)
        else:
            members.append(base)
    return PointedModel(base, Context(members))


def random_kripke(rng: random.Random, P, n: int = 2, max_worlds: int = 5, density: float = 0.35,
                  reflexive: bool = False) -> PointedKripke:
    size = rng.randint(1, max_worlds)
    worlds = tuple(f"v{j}" for j in range(size))
    rel = {}
    for i in range(1, n + 1):
        pairs = [(a, b) for a in worlds for b in worlds if rng.random() < density or (reflexive and a == b)]
        rel[i] = pairs
    val = {p: {w for w in worlds if rng.random() < 0.5} for p in P}
    return PointedKripke(KripkeModel(worlds, rel, val, n), rng.choice(worlds))
