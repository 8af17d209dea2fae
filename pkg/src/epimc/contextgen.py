"""Finite alpha-contexts and the pool-bounded stand-in for the universal context.

The universal context contains every belief base over an infinite language, so
it cannot be enumerated.  A ``UniversePool`` fixes a finite atom set and a
finite set of permitted base formulas; ``generate`` then lists every base built
from those ingredients.  Every verdict from this module is exact for the pool
it was computed on and is reported together with the pool parameters.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable

from . import limits
from .beliefbase import BeliefBase, Context, Evaluator, PointedModel, is_correct, sat_explicit
from .formula import (
    TOP,
    Atom,
    Conj,
    Formula,
    Neg,
    Tri,
    atoms,
    dia,
    literal,
    parse_explicit,
    render,
    subformulas,
    tri_depth,
)
from .limits import ResourceCapExceeded


def _formula_key(f):
    return (tri_depth(f), render(f))


def tri_closure(formulas: Iterable[Formula]) -> tuple:
    """Add the body of every Tri subformula, in canonical order."""
    out = set(formulas)
    for f in list(out):
        for g in subformulas(f):
            if isinstance(g, Tri):
                out.add(g.body)
    return tuple(sorted(out, key=_formula_key))


@dataclass(frozen=True)
class UniversePool:
    atoms: tuple
    formulas: tuple
    agents: int
    max_state: bool = True
    tri_depth: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(set(self.atoms))))
        object.__setattr__(self, "formulas", tri_closure(self.formulas))
        if self.agents < 1:
            raise ValueError("a pool needs at least one agent")
        allowed = set(self.atoms)
        for f in self.formulas:
            stray = atoms(f) - allowed
            if stray:
                raise ValueError(f"pool formula {render(f)} mentions atoms outside the pool: {sorted(stray)}")
            for g in subformulas(f):
                if isinstance(g, Tri) and not 1 <= g.agent <= self.agents:
                    raise ValueError(f"pool formula {render(f)} uses agent {g.agent}")

    def states(self) -> list:
        if not self.max_state:
            return [frozenset()]
        out = []
        for r in range(len(self.atoms) + 1):
            out.extend(frozenset(c) for c in itertools.combinations(self.atoms, r))
        return out

    def candidate_count(self) -> int:
        return len(self.states()) * 2 ** (self.agents * len(self.formulas))

    def describe(self) -> dict:
        return {
            "atoms": list(self.atoms),
            "agents": self.agents,
            "tri_depth": self.tri_depth,
            "pool_formulas": len(self.formulas),
            "max_state": self.max_state,
        }


@dataclass(frozen=True)
class AlphaContextSpec:
    pool: UniversePool
    alpha: Formula = TOP
    bc: bool = False

    def __post_init__(self):
        stray = atoms(self.alpha) - set(self.pool.atoms)
        if stray:
            raise ValueError(f"alpha mentions atoms outside the pool: {sorted(stray)}")


def default_pool(P: Iterable[str], d: int, n: int, cap: int = limits.MAX_POOL_FORMULAS,
                 extra: Iterable[Formula] = ()) -> UniversePool:
    """Literals over P plus Tri-prefixed literals up to Tri-nesting ``d``."""
    P = sorted(set(P))
    layer = [literal(p, pos) for p in P for pos in (True, False)]
    formulas = list(layer)
    for _ in range(d):
        layer = [Tri(j, b) for j in range(1, n + 1) for b in layer]
        formulas.extend(layer)
    formulas.extend(extra)
    closed = tri_closure(formulas)
    if len(closed) > cap:
        raise ResourceCapExceeded(f"pool has {len(closed)} formulas, cap is {cap}")
    return UniversePool(tuple(P), closed, n, True, d)


def _subsets(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def generate(spec: AlphaContextSpec, cap: int | None = None) -> Context:
    pool = spec.pool
    cap = limits.max_context() if cap is None else cap
    total = pool.candidate_count()
    if total > cap:
        raise ResourceCapExceeded(f"context would have {total} candidate members, cap is {cap}")
    per_agent = [frozenset(s) for s in _subsets(pool.formulas)]
    members = []
    for state in pool.states():
        for combo in itertools.product(per_agent, repeat=pool.agents):
            b = BeliefBase(combo, state)
            if spec.bc and not is_correct(b):
                continue
            if spec.alpha is not TOP and not sat_explicit(b, spec.alpha):
                continue
            members.append(b)
    return Context(members, keep_order=True)


@dataclass
class CheckReport:
    verdict: bool
    pool: dict
    context_size: int
    alpha: str
    bc: bool
    extra: dict = field(default_factory=dict)

    def lines(self) -> list:
        out = [
            f"verdict={str(self.verdict).lower()}",
            "engine=pool",
            f"atoms={','.join(self.pool['atoms'])}",
            f"agents={self.pool['agents']}",
            f"tri_depth={self.pool['tri_depth']}",
            f"pool_size={self.pool['pool_formulas']}",
            f"context_size={self.context_size}",
            f"alpha={self.alpha}",
            f"bc={str(self.bc).lower()}",
        ]
        out.extend(f"{k}={v}" for k, v in self.extra.items())
        return out


def check(B: BeliefBase, spec: AlphaContextSpec, phi: Formula) -> bool:
    return check_report(B, spec, phi).verdict


def check_report(B: BeliefBase, spec: AlphaContextSpec, phi: Formula) -> CheckReport:
    stray = atoms(phi) - set(spec.pool.atoms)
    if stray:
        raise ValueError(f"query mentions atoms outside the pool: {sorted(stray)}")
    ctx = generate(spec)
    verdict = Evaluator(ctx).holds(B, phi)
    return CheckReport(verdict, spec.pool.describe(), len(ctx), render(spec.alpha), spec.bc)


def max_uncertainty_model(pool: UniversePool, bc: bool = False) -> PointedModel:
    base = BeliefBase(tuple(frozenset() for _ in range(pool.agents)), frozenset())
    return PointedModel(base, generate(AlphaContextSpec(pool, TOP, bc)))


class PoolEngine:
    """Validity and satisfiability over one generated context, with shared memo tables."""

    def __init__(self, pool: UniversePool, bc: bool = False, alpha: Formula = TOP, cap: int | None = None):
        self.pool = pool
        self.bc = bc
        self.context = generate(AlphaContextSpec(pool, alpha, bc), cap)
        self.evaluator = Evaluator(self.context)

    def valid(self, phi: Formula) -> bool:
        """True iff phi holds at every member pointed in the generated context."""
        return self.evaluator.truth(phi) == self.evaluator.full

    def satisfiable(self, phi: Formula) -> bool:
        return self.evaluator.truth(phi) != 0

    def witness(self, phi: Formula):
        mask = self.evaluator.truth(phi)
        if not mask:
            return None
        k = (mask & -mask).bit_length() - 1
        return self.context.members[k]

    def counterexample(self, phi: Formula):
        return self.witness(Neg(phi))


def satisfiable_in_class(phi: Formula, pool: UniversePool, bc: bool = False) -> bool:
    return PoolEngine(pool, bc).satisfiable(phi)


def satisfiable_in_subcontexts(phi: Formula, pool: UniversePool, bc: bool = False,
                               max_size: int = 3, cap: int = 200_000) -> bool:
    """Search pointed models (B, S) with S any sub-context of size <= max_size.

    Under bc the point must belong to S; otherwise every generated base may be
    the point.  ``cap`` bounds the number of (point, sub-context) pairs tried.
    """
    full = generate(AlphaContextSpec(pool, TOP, bc))
    members = full.members
    tried = 0
    for r in range(max_size + 1):
        for sub in itertools.combinations(members, r):
            ev = Evaluator(Context(sub, keep_order=True))
            points = sub if bc else members
            for b in points:
                tried += 1
                if tried > cap:
                    raise ResourceCapExceeded(f"sub-context search exceeded {cap} pointed models")
                if ev.holds(b, phi):
                    return True
    return False


def propone_law(phi: Formula, pool: UniversePool, bc: bool = False) -> tuple:
    """Both sides of the satisfiability / diamond characterisation."""
    left = satisfiable_in_class(phi, pool, bc)
    m = max_uncertainty_model(pool, bc)
    right = Evaluator(m.context).holds(m.base, dia(1, phi))
    return left, right


# ---------------------------------------------------------------------------
# pool descriptor files

_POOL_KEYS = {"atoms", "agents", "tri_depth", "extra_formulas", "max_state"}


def pool_from_dict(data: dict, cap: int = limits.MAX_POOL_FORMULAS) -> UniversePool:
    unknown = set(data) - _POOL_KEYS
    if unknown:
        raise ValueError(f"unknown pool keys: {sorted(unknown)}")
    n = int(data.get("agents", 1))
    extra = [parse_explicit(s, n) for s in data.get("extra_formulas", [])]
    pool = default_pool(data.get("atoms", []), int(data.get("tri_depth", 0)), n, cap, extra)
    if not data.get("max_state", True):
        pool = UniversePool(pool.atoms, pool.formulas, n, False, pool.tri_depth)
    return pool


def load_pool(path: str, cap: int = limits.MAX_POOL_FORMULAS) -> UniversePool:
    with open(path, encoding="utf-8") as fh:
        return pool_from_dict(json.load(fh), cap)


def all_literals(P: Iterable[str]) -> list:
    return [x for p in sorted(set(P)) for x in (Atom(p), Neg(Atom(p)))]


def conjoin_literals(state: frozenset, P: Iterable[str]) -> Formula:
    """The literal conjunction describing ``state`` over ``P``."""
    out = None
    for p in sorted(set(P)):
        lit = literal(p, p in state)
        out = lit if out is None else Conj(out, lit)
    return TOP if out is None else out
