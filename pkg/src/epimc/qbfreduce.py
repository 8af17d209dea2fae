"""Quantified boolean formulas and their reduction to single-agent model checking."""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .beliefbase import BeliefBase, Evaluator, sat_explicit
from .contextgen import AlphaContextSpec, UniversePool, all_literals, generate, tri_closure
from .formula import (
    TOP,
    Atom,
    Box,
    Conj,
    Formula,
    Neg,
    ParseError,
    Top,
    Tri,
    atoms,
    big_and,
    big_or,
    dia,
    disj,
    imp,
    is_propositional,
    literal,
    parse,
    render,
)

FORALL = "A"
EXISTS = "E"


class QBFError(ValueError):
    pass


@dataclass(frozen=True)
class QBF:
    prefix: tuple  # ((quantifier, atom), ...)
    matrix: Formula

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple((q, p) for q, p in self.prefix))
        names = [p for _, p in self.prefix]
        if len(set(names)) != len(names):
            raise QBFError("prefix atoms must be pairwise distinct")
        if any(q not in (FORALL, EXISTS) for q, _ in self.prefix):
            raise QBFError("quantifiers must be A or E")
        if not is_propositional(self.matrix):
            raise QBFError("the matrix must be propositional")
        missing = set(names) - atoms(self.matrix)
        if missing:
            raise QBFError(f"prefix atoms missing from the matrix: {sorted(missing)}")

    @property
    def variables(self) -> tuple:
        return tuple(p for _, p in self.prefix)

    @property
    def closed(self) -> bool:
        return set(self.variables) == atoms(self.matrix)

    @property
    def m(self) -> int:
        """Index of the last prefix variable (the prefix is Q_0 p_0 .. Q_m p_m)."""
        return len(self.prefix) - 1

    def rest(self) -> "QBF":
        return QBF(self.prefix[1:], self.matrix)

    def render(self) -> str:
        head = " ".join(f"{q} {p}." for q, p in self.prefix)
        body = render(self.matrix)
        return f"{head} {body}" if head else body


_QUANT = re.compile(r"\s*([AE])\s+([a-z][A-Za-z0-9_]*)\s*\.")


def parse_qbf(text: str) -> QBF:
    pos = 0
    prefix = []
    while True:
        m = _QUANT.match(text, pos)
        if not m:
            break
        prefix.append((m.group(1), m.group(2)))
        pos = m.end()
    rest = text[pos:]
    try:
        matrix = parse(rest, "el")
    except ParseError as exc:
        raise ParseError(str(exc), text, pos + exc.pos) from exc
    return QBF(tuple(prefix), matrix)


# ---------------------------------------------------------------------------
# oracle


def eval_prop(f: Formula, s) -> bool:
    return sat_explicit(BeliefBase((frozenset(),), frozenset(s)), f)


def eval_qbf(s: Iterable[str], chi: QBF) -> bool:
    s = frozenset(s)
    if not chi.prefix:
        return eval_prop(chi.matrix, s)
    q, p = chi.prefix[0]
    rest = chi.rest()
    branches = (eval_qbf(s | {p}, rest), eval_qbf(s - {p}, rest))
    return all(branches) if q == FORALL else any(branches)


def substitute(f: Formula, p: str, value: bool) -> Formula:
    if isinstance(f, Atom):
        return (TOP if value else Neg(TOP)) if f.name == p else f
    if isinstance(f, Top):
        return f
    if isinstance(f, Neg):
        return Neg(substitute(f.body, p, value))
    if isinstance(f, Conj):
        return Conj(substitute(f.left, p, value), substitute(f.right, p, value))
    raise TypeError("substitution only applies to propositional formulas")


def expand_qbf(chi: QBF) -> Formula:
    """Quantifier elimination into a propositional formula over the free atoms."""
    f = chi.matrix
    for q, p in reversed(chi.prefix):
        a, b = substitute(f, p, True), substitute(f, p, False)
        f = big_and([a, b]) if q == FORALL else disj(a, b)
    return f


# ---------------------------------------------------------------------------
# translation and instances


def uncertain(rest: QBF) -> Formula:
    """The guard for the remaining prefix: D[1] x & D[1] ~x, or true when nothing remains."""
    if not rest.prefix:
        return TOP
    x = Atom(rest.prefix[0][1])
    return big_and([dia(1, x), dia(1, Neg(x))])


def box_guarded(rest: QBF, psi: Formula) -> Formula:
    return Box(1, imp(uncertain(rest), psi))


def dia_guarded(rest: QBF, psi: Formula) -> Formula:
    return Neg(box_guarded(rest, Neg(psi)))


def translate(chi: QBF) -> Formula:
    if not chi.prefix:
        return chi.matrix
    q, _ = chi.prefix[0]
    rest = chi.rest()
    inner = translate(rest)
    return box_guarded(rest, inner) if q == FORALL else dia_guarded(rest, inner)


def tri_power(k: int, a: Formula) -> Formula:
    for _ in range(k):
        a = Tri(1, a)
    return a


def decided(q: str) -> Formula:
    return disj(Tri(1, Atom(q)), Tri(1, Neg(Atom(q))))


def build_sigma(chi: QBF, s: Iterable[str]) -> frozenset:
    if not chi.prefix:
        raise QBFError("the base for an empty prefix is empty; build_sigma needs a quantifier")
    s = frozenset(s)
    props = sorted(atoms(chi.matrix))
    lam = chi.variables
    others = [q for q in props if q != lam[0]]
    out = {literal(q, q in s) for q in others}
    for k in range(1, chi.m + 1):
        body = big_and(decided(q) for q in props if q != lam[k])
        out.add(tri_power(k - 1, body))
    return frozenset(out)


@dataclass(frozen=True)
class ReductionInstance:
    base: BeliefBase
    query: Formula
    valuation: frozenset


def build_instance(chi: QBF, s: Iterable[str]) -> ReductionInstance:
    s = frozenset(s)
    b1 = build_sigma(chi, s) if chi.prefix else frozenset()
    return ReductionInstance(BeliefBase((b1,), s), translate(chi), s)


# ---------------------------------------------------------------------------
# engines


def reduction_pool(chi: QBF, s: Iterable[str]) -> UniversePool:
    """Literals over the instance atoms plus every formula the base and its Tri-bodies need."""
    inst = build_instance(chi, s)
    P = sorted(atoms(chi.matrix) | set(inst.valuation))
    formulas = list(all_literals(P)) + list(inst.base.base(1))
    return UniversePool(tuple(P), tri_closure(formulas), 1)


@lru_cache(maxsize=64)
def _pool_evaluator(pool: UniversePool) -> Evaluator:
    return Evaluator(generate(AlphaContextSpec(pool)))


@dataclass(frozen=True)
class ReductionResult:
    qbf: str
    state: frozenset
    oracle: bool
    reduced: bool
    engine: str
    context_size: int

    @property
    def agree(self) -> bool:
        return self.oracle == self.reduced

    def line(self) -> str:
        st = "{" + ",".join(sorted(self.state)) + "}"
        return (f"{self.qbf} {st} oracle={str(self.oracle).lower()} "
                f"reduced={str(self.reduced).lower()}")


def reduction_check(chi: QBF, s: Iterable[str], engine: str = "pool") -> ReductionResult:
    s = frozenset(s)
    oracle = eval_qbf(s, chi)
    inst = build_instance(chi, s)
    pool = reduction_pool(chi, s)
    ev = _pool_evaluator(pool)
    if engine == "pool":
        reduced = ev.holds(inst.base, inst.query)
    elif engine == "structures":
        from .beliefbase import PointedModel
        from .formula import depth
        from .structures import sat_structure, tau

        w = tau(PointedModel(inst.base, ev.ctx), depth(inst.query), pool.atoms)
        reduced = sat_structure(w, inst.query)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return ReductionResult(chi.render(), s, oracle, reduced, engine, len(ev.ctx))


# ---------------------------------------------------------------------------
# instance families


def _states(P):
    P = sorted(P)
    for r in range(len(P) + 1):
        yield from (frozenset(c) for c in itertools.combinations(P, r))


def canonical_matrices(P: Iterable[str]) -> list:
    """One matrix per boolean function over P, each mentioning every atom of P."""
    P = sorted(set(P))
    states = list(_states(P))
    minterm = {st: big_and(literal(p, p in st) for p in P) for st in states}
    every = big_or([minterm[st] for st in states])
    out = []
    for r in range(len(states) + 1):
        for chosen in itertools.combinations(states, r):
            out.append(big_or([minterm[st] for st in chosen]) if chosen else Neg(every))
    return out


def closed_qbfs(max_vars: int = 2, names=("p", "q", "r")) -> list:
    out = []
    for v in range(1, max_vars + 1):
        P = names[:v]
        mats = canonical_matrices(P)
        if v == 1:
            x = Atom(P[0])
            mats = [x, Neg(x), disj(x, Neg(x)), big_and([x, Neg(x)])]
        for order in itertools.permutations(P):
            for qs in itertools.product((FORALL, EXISTS), repeat=v):
                for mat in mats:
                    out.append(QBF(tuple(zip(qs, order)), mat))
    return out


def random_qbf(rng: random.Random, nvars: int = 3, names=("p", "q", "r")) -> QBF:
    P = list(names[:nvars])
    rng.shuffle(P)
    qs = [rng.choice((FORALL, EXISTS)) for _ in P]
    states = list(_states(P))
    chosen = [st for st in states if rng.random() < 0.5]
    P_sorted = sorted(P)
    minterms = [big_and(literal(p, p in st) for p in P_sorted) for st in chosen]
    if chosen:
        mat = big_or(minterms)
    else:
        mat = Neg(big_or([big_and(literal(p, p in st) for p in P_sorted) for st in states]))
    return QBF(tuple(zip(qs, P)), mat)


def size_family(m: int) -> QBF:
    """Alternating prefix over p0..pm with a chain matrix of linear size."""
    names = [f"p{j}" for j in range(m + 1)]
    qs = [FORALL if j % 2 == 0 else EXISTS for j in range(m + 1)]
    if m == 0:
        mat = disj(Atom(names[0]), Neg(Atom(names[0])))
    else:
        mat = big_and(disj(Neg(Atom(a)), Atom(b)) for a, b in zip(names, names[1:]))
    return QBF(tuple(zip(qs, names)), mat)


def sizes(m: int) -> dict:
    chi = size_family(m)
    sigma = build_sigma(chi, frozenset())
    return {
        "m": m,
        "sigma_count": len(sigma),
        "sigma_chars": sum(len(render(a)) for a in sigma),
        "tr_chars": len(render(translate(chi))),
    }
