"""Fagin-style belief hierarchies over a finite atom set.

A 0-world is a valuation.  An h-world (h >= 1) is an (h-1)-world together with
one mark set per agent, each a set of (h-1)-worlds.  ``Z_h`` is the set of all
h-worlds.  Because every ``|Z_h|`` is a power of two, a world of ``Z_h`` can be
packed into an integer: the prefix index in the high bits and the per-agent
mark bitmasks in the low bits.  The mask engine below works on those integers;
``KWorld`` objects are materialised only when a caller needs them.

Three quantification domains for the modal clauses are supported:

``all``        the literal clauses, quantifying over every (k-1)-world
``coherent``   only over (k-1)-worlds that are coherent themselves
``hereditary`` only over hereditarily coherent worlds, whose marks are
               hereditarily coherent at every level
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable

from . import limits
from .beliefbase import BeliefBase, InternalInconsistency, PointedModel
from .formula import (
    Atom,
    Box,
    CBox,
    Conj,
    Formula,
    Neg,
    Top,
    Tri,
    agents_of,
    atoms,
    big_and,
    big_or,
    depth,
    literal,
    mutual_belief,
    render,
    subformulas,
)
from .limits import ResourceCapExceeded

MODES = ("all", "coherent", "hereditary")


class KWorld:
    """A world ``(f_0, ..., f_k)``; ``levels[h - 1][i - 1]`` is agent i's mark set at level h."""

    __slots__ = ("atoms", "n", "valuation", "levels", "_hash")

    def __init__(self, atoms_, n, valuation, levels=()):
        self.atoms = tuple(atoms_)
        self.n = n
        self.valuation = frozenset(valuation)
        self.levels = tuple(tuple(frozenset(s) for s in lv) for lv in levels)
        self._hash = hash((self.atoms, self.n, self.valuation, self.levels))

    @property
    def k(self) -> int:
        return len(self.levels)

    def marks(self, h: int, agent: int) -> frozenset:
        return self.levels[h - 1][agent - 1]

    def top(self, agent: int) -> frozenset:
        return self.levels[-1][agent - 1]

    def prefix(self, h: int) -> "KWorld":
        if h == self.k:
            return self
        if not 0 <= h <= self.k:
            raise ValueError(f"prefix length {h} outside 0..{self.k}")
        return KWorld(self.atoms, self.n, self.valuation, self.levels[:h])

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, KWorld) or self._hash != other._hash:
            return False
        return (self.atoms, self.n, self.valuation, self.levels) == (
            other.atoms, other.n, other.valuation, other.levels)

    def __repr__(self):
        return f"KWorld(k={self.k}, {describe(self)})"


def describe(w: KWorld) -> str:
    val = "{" + ",".join(sorted(w.valuation)) + "}"
    if not w.levels:
        return val
    parts = []
    for i in range(1, w.n + 1):
        inner = "; ".join(sorted(describe(g) for g in w.top(i)))
        parts.append(f"{i}:[{inner}]")
    return f"({describe(w.prefix(w.k - 1))} | {' '.join(parts)})"


def validate(w: KWorld) -> None:
    """Check that every marked world is a well-formed world one level down."""
    for h, lv in enumerate(w.levels, 1):
        if len(lv) != w.n:
            raise ValueError(f"level {h} has {len(lv)} agent entries, expected {w.n}")
        for marks in lv:
            for g in marks:
                if not isinstance(g, KWorld) or g.k != h - 1 or g.atoms != w.atoms or g.n != w.n:
                    raise ValueError(f"level {h} marks a world of the wrong shape")
                validate(g)
    stray = w.valuation - set(w.atoms)
    if stray:
        raise ValueError(f"valuation mentions atoms outside the world: {sorted(stray)}")


# ---------------------------------------------------------------------------
# coherence and correctness


@dataclass(frozen=True)
class Violation:
    kind: str  # "projection" or "extension"
    level: int
    agent: int
    witness: KWorld


@dataclass
class CoherenceReport:
    coherent: bool
    correct: bool
    violations: list = field(default_factory=list)
    incorrect_levels: list = field(default_factory=list)


def coherence(w: KWorld) -> CoherenceReport:
    violations = []
    for i in range(1, w.n + 1):
        for h in range(2, w.k + 1):
            lower = w.marks(h - 1, i)
            for g in w.marks(h, i):
                if g.prefix(h - 2) not in lower:
                    violations.append(Violation("projection", h, i, g))
        for h in range(1, w.k):
            upper = {G.prefix(h - 1) for G in w.marks(h + 1, i)}
            for g in w.marks(h, i):
                if g not in upper:
                    violations.append(Violation("extension", h, i, g))
    incorrect = [(h, i) for h in range(1, w.k + 1) for i in range(1, w.n + 1)
                 if w.prefix(h - 1) not in w.marks(h, i)]
    return CoherenceReport(not violations, not incorrect, violations, incorrect)


def is_coherent(w: KWorld) -> bool:
    return coherence(w).coherent


def is_correct_world(w: KWorld) -> bool:
    return coherence(w).correct


def restrict(w: KWorld, k2: int) -> KWorld:
    if k2 > w.k:
        raise ValueError(f"cannot restrict a {w.k}-world to depth {k2}")
    return w.prefix(k2)


def extend(w: KWorld, k2: int) -> KWorld:
    """Minimal coherent completion: every mark gets one extension with empty marks.

    A correct input additionally marks its own prefix at each new level, so
    the completion stays correct.
    """
    if k2 < w.k:
        raise ValueError(f"cannot extend a {w.k}-world to depth {k2}")
    rep = coherence(w)
    if not rep.coherent:
        raise ValueError("extend needs a coherent world")
    cur = w
    if cur.k == 0 and k2 > 0:
        # a 0-world is vacuously correct, so its first level marks its own valuation
        cur = KWorld(w.atoms, w.n, w.valuation, ((frozenset({cur}),) * w.n,))

    def empty(g):
        return KWorld(g.atoms, g.n, g.valuation, g.levels + ((frozenset(),) * g.n,))

    while cur.k < k2:
        correct = coherence(cur).correct
        new = []
        for i in range(1, cur.n + 1):
            marks = {empty(g) for g in cur.top(i)}
            if correct:
                marks.add(cur)
            new.append(frozenset(marks))
        cur = KWorld(cur.atoms, cur.n, cur.valuation, cur.levels + (tuple(new),))
    final = coherence(cur)
    if not final.coherent or (rep.correct and not final.correct):
        raise InternalInconsistency("coherent completion failed")
    return cur


# ---------------------------------------------------------------------------
# the packed-index engine


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Space:
    """All worlds over (atoms, n) up to some depth, addressed by integer index."""

    def __init__(self, atoms_: Iterable[str], n: int):
        self.atoms = tuple(sorted(set(atoms_)))
        self.n = n
        self.sizes = [1 << len(self.atoms)]
        self._objs: dict = {}
        self._consts: dict = {}
        self._truth: dict = {}
        self._dom: dict = {}
        self._proj: dict = {}

    # sizes and layout ---------------------------------------------------

    def size(self, h: int) -> int:
        while len(self.sizes) <= h:
            prev = self.sizes[-1]
            if self.n * prev > 1 << 20:
                raise ResourceCapExceeded(f"Z_{len(self.sizes)} is astronomically large")
            self.sizes.append(prev << (self.n * prev))
        return self.sizes[h]

    def check_enumerable(self, h: int) -> int:
        cap = limits.max_worlds()
        size = self.size(h)
        if size > cap:
            raise ResourceCapExceeded(f"|Z_{h}| = {size} exceeds the world cap {cap}")
        return size

    def split(self, h: int, idx: int):
        """Prefix index and per-agent mark masks of an h-world, h >= 1."""
        N = self.size(h - 1)
        lowmask = (1 << N) - 1
        marks = tuple((idx >> (j * N)) & lowmask for j in range(self.n))
        return idx >> (self.n * N), marks

    def join(self, h: int, prefix: int, marks) -> int:
        N = self.size(h - 1)
        idx = prefix << (self.n * N)
        for j, m in enumerate(marks):
            idx |= m << (j * N)
        return idx

    def root(self, h: int, idx: int) -> int:
        while h:
            idx >>= self.n * self.size(h - 1)
            h -= 1
        return idx

    def block(self, h: int, prefix: int) -> int:
        """All h-worlds whose (h-1)-prefix has index ``prefix``."""
        S = self.n * self.size(h - 1)
        return ((1 << (1 << S)) - 1) << (prefix << S)

    def project(self, h: int, mask: int) -> int:
        """Prefixes of a set of h-worlds, as a mask over Z_{h-1}."""
        if h == 0:
            raise ValueError("0-worlds have no prefix")
        S = self.n * self.size(h - 1)
        out = 0
        for j in _bits(mask):
            out |= 1 << (j >> S)
        return out

    def valuation_of(self, idx0: int) -> frozenset:
        return frozenset(p for j, p in enumerate(self.atoms) if idx0 >> j & 1)

    def index0(self, valuation) -> int:
        return sum(1 << j for j, p in enumerate(self.atoms) if p in valuation)

    # objects ------------------------------------------------------------

    def world(self, h: int, idx: int) -> KWorld:
        key = (h, idx)
        w = self._objs.get(key)
        if w is None:
            if h == 0:
                w = KWorld(self.atoms, self.n, self.valuation_of(idx))
            else:
                pre, marks = self.split(h, idx)
                p = self.world(h - 1, pre)
                lv = tuple(frozenset(self.world(h - 1, j) for j in _bits(m)) for m in marks)
                w = KWorld(self.atoms, self.n, p.valuation, p.levels + (lv,))
            self._objs[key] = w
        return w

    def index_of(self, w: KWorld) -> int:
        if w.atoms != self.atoms or w.n != self.n:
            raise ValueError("world belongs to a different space")
        if w.k == 0:
            return self.index0(w.valuation)
        marks = [sum(1 << self.index_of(g) for g in w.top(i)) for i in range(1, self.n + 1)]
        return self.join(w.k, self.index_of(w.prefix(w.k - 1)), marks)

    def worlds(self, h: int) -> list:
        size = self.check_enumerable(h)
        return [self.world(h, j) for j in range(size)]

    def world_from_top(self, idx0: int, k: int, tops) -> KWorld:
        """The coherent k-world with valuation ``idx0`` and top mark masks ``tops``."""
        if k == 0:
            return self.world(0, idx0)
        per_level = [list(tops)]
        for h in range(k - 1, 0, -1):
            per_level.append([self.project(h, m) for m in per_level[-1]])
        per_level.reverse()
        levels = []
        for h, masks in enumerate(per_level, 1):
            levels.append(tuple(frozenset(self.world(h - 1, j) for j in _bits(m)) for m in masks))
        return KWorld(self.atoms, self.n, self.valuation_of(idx0), levels)

    # domains ------------------------------------------------------------

    def full(self, h: int) -> int:
        return (1 << self.check_enumerable(h)) - 1

    def coherent_mask(self, h: int) -> int:
        key = ("coh", h)
        if key not in self._dom:
            if h <= 1:
                m = self.full(h)
            else:
                below = self.coherent_mask(h - 1)
                m = 0
                for idx in range(self.check_enumerable(h)):
                    pre, marks = self.split(h, idx)
                    if not below >> pre & 1:
                        continue
                    _, pmarks = self.split(h - 1, pre)
                    if all(self.project(h - 1, marks[j]) == pmarks[j] for j in range(self.n)):
                        m |= 1 << idx
            self._dom[key] = m
        return self._dom[key]

    def hereditary_mask(self, h: int) -> int:
        key = ("her", h)
        if key not in self._dom:
            if h == 0:
                m = self.full(0)
            else:
                below = self.hereditary_mask(h - 1)
                coh = self.coherent_mask(h)
                m = 0
                for idx in _bits(coh):
                    pre, marks = self.split(h, idx)
                    if below >> pre & 1 and all(mk & ~below == 0 for mk in marks):
                        m |= 1 << idx
            self._dom[key] = m
        return self._dom[key]

    def correct_mask(self, h: int) -> int:
        """Worlds that mark their own prefix at every level 1..h."""
        key = ("cor", h)
        if key not in self._dom:
            if h == 0:
                m = self.full(0)
            else:
                below = self.correct_mask(h - 1)
                m = 0
                for idx in range(self.check_enumerable(h)):
                    pre, marks = self.split(h, idx)
                    if below >> pre & 1 and all(mk >> pre & 1 for mk in marks):
                        m |= 1 << idx
            self._dom[key] = m
        return self._dom[key]

    def domain(self, h: int, mode: str) -> int:
        if mode == "all":
            return self.full(h)
        if mode == "coherent":
            return self.coherent_mask(h)
        if mode == "hereditary":
            return self.hereditary_mask(h)
        raise ValueError(f"unknown quantification mode {mode!r}")

    # truth --------------------------------------------------------------

    def truth(self, h: int, f: Formula, mode: str = "all") -> int:
        """Mask over Z_h of the worlds where ``f`` holds."""
        if depth(f) > h:
            raise ValueError(f"formula of depth {depth(f)} evaluated on {h}-worlds")
        for g in subformulas(f):
            key = (h, g, mode)
            if key in self._truth:
                continue
            self._truth[key] = self._truth_node(h, g, mode)
        return self._truth[(h, f, mode)]

    def _truth_node(self, h, g, mode):
        if isinstance(g, Top):
            return self.full(h)
        if isinstance(g, Atom):
            return self._atom_mask(h, g.name)
        if isinstance(g, Neg):
            return self.full(h) & ~self._truth[(h, g.body, mode)]
        if isinstance(g, Conj):
            return self._truth[(h, g.left, mode)] & self._truth[(h, g.right, mode)]
        if isinstance(g, (Box, CBox)):
            bad = self.domain(h - 1, mode) & ~self.truth(h - 1, g.body, mode)
            j = g.agent - 1
            if j >= self.n:
                raise ValueError(f"agent {g.agent} outside 1..{self.n}")
            N = self.size(h - 1)
            lowmask = (1 << N) - 1
            out = 0
            for idx in range(self.check_enumerable(h)):
                m = (idx >> (j * N)) & lowmask
                ok = not (m & bad) if isinstance(g, Box) else not (bad & ~m)
                if ok:
                    out |= 1 << idx
            return out
        raise TypeError(f"not an epistemic formula: {render(g)}")

    def _atom_mask(self, h, p):
        if p not in self.atoms:
            raise ValueError(f"atom {p} outside the structure's atom set")
        key = ("atom", h, p)
        if key not in self._consts:
            if h == 0:
                j = self.atoms.index(p)
                m = sum(1 << idx for idx in range(self.size(0)) if idx >> j & 1)
            else:
                self.check_enumerable(h)
                m = 0
                for pre in _bits(self._atom_mask(h - 1, p)):
                    m |= self.block(h, pre)
            self._consts[key] = m
        return self._consts[key]

    def false_set(self, h: int, f: Formula, mode: str) -> int:
        return self.domain(h, mode) & ~self.truth(h, f, mode)


_SPACES: dict = {}


def space(atoms_: Iterable[str], n: int) -> Space:
    key = (tuple(sorted(set(atoms_))), n)
    sp = _SPACES.get(key)
    if sp is None:
        sp = _SPACES[key] = Space(*key)
    return sp


# ---------------------------------------------------------------------------
# enumeration


def enumerate_worlds(P: Iterable[str], n: int, k: int, coherent_only: bool = False,
                     correct_only: bool = False) -> list:
    sp = space(P, n)
    if not coherent_only:
        out = sp.worlds(k)
        if correct_only:
            out = [w for w in out if is_correct_world(w)]
        return out
    if k == 0:
        return sp.worlds(0)
    N = sp.check_enumerable(k - 1)
    count = sp.size(0) << (n * N)
    if count > limits.max_worlds():
        raise ResourceCapExceeded(f"{count} coherent {k}-worlds exceed the world cap")
    out = []
    for idx0 in range(sp.size(0)):
        for tops in itertools.product(range(1 << N), repeat=n):
            w = sp.world_from_top(idx0, k, tops)
            if correct_only and not is_correct_world(w):
                continue
            out.append(w)
    return out


def coherent_count(P: Iterable[str], n: int, k: int) -> int:
    sp = space(P, n)
    if k == 0:
        return sp.size(0)
    return sp.size(0) << (n * sp.size(k - 1))


def enumerate_coherent_naive(P, n, k) -> list:
    """Coherent k-worlds found by filtering all of Z_k with the Def.-12 check."""
    return [w for w in space(P, n).worlds(k) if is_coherent(w)]


# ---------------------------------------------------------------------------
# satisfaction on objects


class StructureEvaluator:
    """Clause-by-clause evaluation on ``KWorld`` objects.

    Box quantifies over the marked worlds.  CBox needs the whole domain one
    level down; with ``literal=True`` it walks the enumerated worlds, otherwise
    it reads the false set from the mask engine.
    """

    def __init__(self, mode: str = "all", literal: bool = False):
        if mode not in MODES:
            raise ValueError(f"unknown quantification mode {mode!r}")
        self.mode = mode
        self.literal = literal
        self._memo: dict = {}
        self._dom: dict = {}

    def in_domain(self, g: KWorld) -> bool:
        if self.mode == "all":
            return True
        key = (self.mode, g)
        r = self._dom.get(key)
        if r is None:
            if self.mode == "coherent":
                r = is_coherent(g)
            else:
                r = is_coherent(g) and all(
                    self.in_domain(x) for lv in g.levels for marks in lv for x in marks
                ) and (g.k == 0 or self.in_domain(g.prefix(g.k - 1)))
            self._dom[key] = r
        return r

    def sat(self, w: KWorld, f: Formula) -> bool:
        key = (w, f)
        r = self._memo.get(key)
        if r is None:
            r = self._sat(w, f)
            self._memo[key] = r
        return r

    def _sat(self, w, f):
        if isinstance(f, Top):
            return True
        if isinstance(f, Atom):
            if f.name not in w.atoms:
                raise ValueError(f"atom {f.name} outside the world's atom set")
            return f.name in w.valuation
        if isinstance(f, Neg):
            return not self.sat(w, f.body)
        if isinstance(f, Conj):
            return self.sat(w, f.left) and self.sat(w, f.right)
        if isinstance(f, (Box, CBox)):
            if w.k < 1:
                raise ValueError("modal formula evaluated on a 0-world")
            if f.agent > w.n:
                raise ValueError(f"agent {f.agent} outside 1..{w.n}")
            marks = w.top(f.agent)
            if isinstance(f, Box):
                return all(self.sat(g, f.body) for g in marks if self.in_domain(g))
            if self.literal:
                sp = space(w.atoms, w.n)
                return all(self.sat(g, f.body) for g in sp.worlds(w.k - 1)
                           if g not in marks and self.in_domain(g))
            sp = space(w.atoms, w.n)
            bad = sp.false_set(w.k - 1, f.body, self.mode)
            marked = 0
            for g in marks:
                marked |= 1 << sp.index_of(g)
            return not bad & ~marked
        raise TypeError(f"not an epistemic formula: {render(f)}")


_EVALUATORS: dict = {}


def sat_structure(w: KWorld, f: Formula, mode: str = "all", literal: bool = False) -> bool:
    if w.k < depth(f):
        raise ValueError(f"world depth {w.k} is below formula depth {depth(f)}")
    stray = atoms(f) - set(w.atoms)
    if stray:
        raise ValueError(f"formula atoms outside the world: {sorted(stray)}")
    key = (mode, literal)
    ev = _EVALUATORS.get(key)
    if ev is None:
        ev = _EVALUATORS[key] = StructureEvaluator(mode, literal)
    return ev.sat(w, f)


def clear_caches() -> None:
    _SPACES.clear()
    _EVALUATORS.clear()


# ---------------------------------------------------------------------------
# tau and canonical bases


def tau(model, k: int, P: Iterable[str] | None = None) -> KWorld:
    """Belief hierarchy of the point of a Kripke model (or belief model) up to depth k."""
    from .kripke import PointedKripke, mbm_to_kripke

    if isinstance(model, PointedModel):
        model = mbm_to_kripke(model)
    if not isinstance(model, PointedKripke):
        raise TypeError("tau expects a pointed Kripke model or a pointed belief model")
    return tau_all(model.model, k, P)[model.world]


def tau_all(M, k: int, P: Iterable[str] | None = None) -> dict:
    P = tuple(sorted(set(M.valuation) if P is None else set(P)))
    n = M.agents
    cur = {w: KWorld(P, n, M.true_atoms(w) & set(P)) for w in M.worlds}
    for _ in range(k):
        cur = {
            w: KWorld(P, n, cur[w].valuation, cur[w].levels + (
                tuple(frozenset(cur[v] for v in M.successors(i, w)) for i in range(1, n + 1)),))
            for w in M.worlds
        }
    return cur


def state_formula(valuation, P) -> Formula:
    return big_and(literal(p, p in valuation) for p in sorted(P))


def beta(agent: int, w: KWorld, memo: dict | None = None) -> Formula:
    """The explicit formula describing agent's top-level marks of ``w``."""
    memo = {} if memo is None else memo
    key = (agent, w)
    if key in memo:
        return memo[key]
    disjuncts = set()
    for g in w.top(agent):
        lit = state_formula(g.valuation, w.atoms)
        if w.k == 1:
            disjuncts.add(lit)
        else:
            inner = big_and(Tri(j, beta(j, g, memo)) for j in range(1, w.n + 1))
            disjuncts.add(Conj(lit, inner))
    out = big_or(sorted(disjuncts, key=render))
    memo[key] = out
    return out


def canonical_base(w: KWorld, guard_atoms: Iterable[str] = ()) -> BeliefBase:
    memo: dict = {}
    agents = range(1, w.n + 1)
    guards = [mutual_belief(h, Neg(Atom(q)), agents) for q in sorted(set(guard_atoms)) for h in range(w.k + 1)]
    bases = []
    for i in agents:
        items = {beta(i, w.prefix(h), memo) for h in range(1, w.k + 1)}
        items.update(guards)
        bases.append(frozenset(items))
    return BeliefBase(tuple(bases), w.valuation)


# ---------------------------------------------------------------------------
# validity over all coherent structures


def _top_modal(f: Formula) -> list:
    out = {}

    def walk(g):
        if isinstance(g, (Box, CBox)):
            out.setdefault(g, None)
        elif isinstance(g, Conj):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Neg):
            walk(g.body)
        elif isinstance(g, Tri):
            raise TypeError("explicit-belief operator in an epistemic formula")

    walk(f)
    return list(out)


def _skeleton(f, val, assign):
    if isinstance(f, Top):
        return True
    if isinstance(f, Atom):
        return f.name in val
    if isinstance(f, Neg):
        return not _skeleton(f.body, val, assign)
    if isinstance(f, Conj):
        return _skeleton(f.left, val, assign) and _skeleton(f.right, val, assign)
    return assign[f]


def _solve(L: int, U: int, hits: list, avoids: list):
    """Find T with L <= T <= U meeting every hit set and missing part of every avoid set."""
    if L & ~U:
        return None
    if any(a & ~L == 0 for a in avoids):
        return None
    hits = [h & U for h in hits]
    if any(h == 0 for h in hits):
        return None
    return _grow(L, hits, avoids)


def _grow(T, hits, avoids):
    rest = [h for h in hits if not h & T]
    if not rest:
        return T
    target = rest[0]
    seen = set()
    for x in _bits(target):
        sig = tuple(h >> x & 1 for h in rest) + tuple(a >> x & 1 for a in avoids)
        if sig in seen:
            continue
        seen.add(sig)
        T2 = T | (1 << x)
        if any(a & ~T2 == 0 for a in avoids):
            continue
        r = _grow(T2, hits, avoids)
        if r is not None:
            return r
    return None


def _bc_candidates(sp: Space, k: int, idx0: int, mode: str) -> list:
    """Indices of coherent, correct (k-1)-worlds with valuation idx0 that could be the self prefix."""
    h = k - 1
    if h == 0:
        return [idx0]
    ok = sp.coherent_mask(h) & sp.correct_mask(h)
    if mode == "hereditary":
        ok &= sp.hereditary_mask(h)
    return [s for s in _bits(ok) if sp.root(h, s) == idx0]


def find_counterexample(phi: Formula, bc: bool = False, mode: str = "all",
                        P: Iterable[str] | None = None, n: int | None = None):
    """A coherent (and, under bc, correct) depth(phi)-world falsifying phi, or None."""
    P = tuple(sorted(atoms(phi) if P is None else set(P) | atoms(phi)))
    n = max(agents_of(phi) | {1}) if n is None else n
    sp = space(P, n)
    k = depth(phi)
    if k == 0:
        t = sp.truth(0, phi, mode)
        for idx0 in range(sp.size(0)):
            if not t >> idx0 & 1:
                return sp.world(0, idx0)
        return None
    tops = _top_modal(phi)
    sp.check_enumerable(k - 1)
    F = {m: sp.false_set(k - 1, m.body, mode) for m in tops}
    markdom = sp.hereditary_mask(k - 1) if mode == "hereditary" else sp.full(k - 1)
    for idx0 in range(sp.size(0)):
        val = sp.valuation_of(idx0)
        for bits in itertools.product((False, True), repeat=len(tops)):
            assign = dict(zip(tops, bits))
            if _skeleton(phi, val, assign):
                continue
            base = []
            for i in range(1, n + 1):
                L, U, hits, avoids = 0, markdom, [], []
                for m, v in assign.items():
                    if m.agent != i:
                        continue
                    if isinstance(m, Box):
                        if v:
                            U &= ~F[m]
                        else:
                            hits.append(F[m])
                    elif v:
                        L |= F[m]
                    else:
                        avoids.append(F[m])
                base.append((L, U, hits, avoids))
            found = _solve_world(sp, k, idx0, base, bc, mode)
            if found is not None:
                w = sp.world_from_top(idx0, k, found)
                _confirm(w, phi, bc, mode)
                return w
    return None


def _solve_world(sp, k, idx0, base, bc, mode):
    if not bc:
        out = []
        for L, U, hits, avoids in base:
            T = _solve(L, U, hits, avoids)
            if T is None:
                return None
            out.append(T)
        return out
    for s in _bc_candidates(sp, k, idx0, mode):
        out = []
        if k >= 2:
            _, smarks = sp.split(k - 1, s)
        for j, (L, U, hits, avoids) in enumerate(base):
            L2, U2, hits2 = L | (1 << s), U, list(hits)
            if k >= 2:
                allowed = 0
                for y in _bits(smarks[j]):
                    b = sp.block(k - 1, y)
                    allowed |= b
                    hits2.append(b)
                U2 &= allowed
            T = _solve(L2, U2, hits2, avoids)
            if T is None:
                break
            out.append(T)
        else:
            return out
    return None


def _confirm(w, phi, bc, mode):
    rep = coherence(w)
    if not rep.coherent or (bc and not rep.correct) or sat_structure(w, phi, mode):
        raise InternalInconsistency(f"constraint search produced a bad witness for {render(phi)}")


def valid_universal(phi: Formula, bc: bool = False, mode: str = "all",
                    P: Iterable[str] | None = None, n: int | None = None) -> bool:
    return find_counterexample(phi, bc, mode, P, n) is None


def valid_brute_force(phi: Formula, bc: bool = False, mode: str = "all",
                      P: Iterable[str] | None = None, n: int | None = None) -> bool:
    """Reference validity by enumerating every coherent world; tiny cases only."""
    P = tuple(sorted(atoms(phi) if P is None else set(P) | atoms(phi)))
    n = max(agents_of(phi) | {1}) if n is None else n
    k = depth(phi)
    ev = StructureEvaluator(mode, literal=True)
    for w in enumerate_worlds(P, n, k, coherent_only=True, correct_only=bc):
        if not ev.sat(w, phi):
            return False
    return True


def lift(sp: Space, mask: int, h_from: int, h_to: int) -> int:
    """Worlds of Z_{h_to} whose h_from-prefix lies in ``mask``."""
    for h in range(h_from + 1, h_to + 1):
        out = 0
        for s in _bits(mask):
            out |= sp.block(h, s)
        mask = out
    return mask


def depth_violation(phi: Formula, k: int, mode: str = "all",
                    P: Iterable[str] | None = None, n: int | None = None):
    """A coherent k-world w with sat(w, phi) != sat(restrict(w, depth(phi)), phi), or None.

    Both evaluations are turned into constraints on the top mark sets of w:
    at level d a mark set acts through its projection, which is the same as
    acting on the lifted sets at level k-1.
    """
    P = tuple(sorted(atoms(phi) if P is None else set(P) | atoms(phi)))
    n = max(agents_of(phi) | {1}) if n is None else n
    d = depth(phi)
    if d == 0 or k <= d:
        return None
    sp = space(P, n)
    sp.check_enumerable(k - 1)
    tops = _top_modal(phi)
    Fk = {m: sp.false_set(k - 1, m.body, mode) for m in tops}
    Fd = {m: sp.false_set(d - 1, m.body, mode) for m in tops}
    up = {m: lift(sp, Fd[m], d - 1, k - 1) for m in tops}
    single = {m: [lift(sp, 1 << g, d - 1, k - 1) for g in _bits(Fd[m])] for m in tops}
    markdom = sp.hereditary_mask(k - 1) if mode == "hereditary" else sp.full(k - 1)
    for idx0 in range(sp.size(0)):
        val = sp.valuation_of(idx0)
        for bits_k in itertools.product((False, True), repeat=len(tops)):
            at_k = dict(zip(tops, bits_k))
            vk = _skeleton(phi, val, at_k)
            for bits_d in itertools.product((False, True), repeat=len(tops)):
                at_d = dict(zip(tops, bits_d))
                if _skeleton(phi, val, at_d) == vk:
                    continue
                found = _solve_split(sp, n, markdom, tops, at_k, at_d, Fk, up, single)
                if found is None:
                    continue
                w = sp.world_from_top(idx0, k, found)
                if sat_structure(w, phi, mode) == sat_structure(restrict(w, d), phi, mode):
                    raise InternalInconsistency(f"depth search produced a bad witness for {render(phi)}")
                return w
    return None


def _solve_split(sp, n, markdom, tops, at_k, at_d, Fk, up, single):
    out = []
    for i in range(1, n + 1):
        L, U, hits, avoids, choices = 0, markdom, [], [], []
        for m in tops:
            if m.agent != i:
                continue
            box = isinstance(m, Box)
            if box and at_k[m]:
                U &= ~Fk[m]
            elif box:
                hits.append(Fk[m])
            elif at_k[m]:
                L |= Fk[m]
            else:
                avoids.append(Fk[m])
            if box and at_d[m]:
                U &= ~up[m]
            elif box:
                hits.append(up[m])
            elif at_d[m]:
                hits.extend(single[m])
            else:
                choices.append(single[m])
        T = None
        for pick in itertools.product(*choices):
            U2 = U
            for blk in pick:
                U2 &= ~blk
            T = _solve(L, U2, hits, avoids)
            if T is not None:
                break
        if T is None:
            return None
        out.append(T)
    return out


# ---------------------------------------------------------------------------
# files


def world_to_levels(w: KWorld) -> list:
    out = [{p: int(p in w.valuation) for p in w.atoms}]
    for h in range(1, w.k + 1):
        out.append({
            str(i): sorted((world_to_levels(g) for g in w.marks(h, i)), key=json.dumps)
            for i in range(1, w.n + 1)
        })
    return out


def world_to_dict(w: KWorld) -> dict:
    return {"atoms": list(w.atoms), "agents": w.n, "levels": world_to_levels(w)}


def _levels_to_world(levels, P, n):
    if not levels:
        raise ValueError("a world needs at least its valuation level")
    val0 = levels[0]
    if set(val0) != set(P):
        raise ValueError(f"valuation keys {sorted(val0)} do not match atoms {list(P)}")
    valuation = {p for p, v in val0.items() if v}
    lv = []
    for h, entry in enumerate(levels[1:], 1):
        keys = {str(i) for i in range(1, n + 1)}
        if set(entry) - keys:
            raise ValueError(f"level {h} has unknown agent keys {sorted(set(entry) - keys)}")
        row = []
        for i in range(1, n + 1):
            ws = [_levels_to_world(x, P, n) for x in entry.get(str(i), [])]
            if any(g.k != h - 1 for g in ws):
                raise ValueError(f"level {h} marks must be {h - 1}-worlds")
            row.append(frozenset(ws))
        lv.append(tuple(row))
    return KWorld(P, n, valuation, lv)


def world_from_dict(data: dict) -> KWorld:
    unknown = set(data) - {"atoms", "agents", "levels"}
    if unknown:
        raise ValueError(f"unknown world keys: {sorted(unknown)}")
    P = tuple(sorted(data["atoms"]))
    w = _levels_to_world(data["levels"], P, int(data["agents"]))
    validate(w)
    return w


def load_world(path: str) -> KWorld:
    with open(path, encoding="utf-8") as fh:
        return world_from_dict(json.load(fh))
