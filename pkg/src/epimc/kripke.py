"""Multi-relational Kripke models and the translations to and from belief models."""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable

from .beliefbase import BeliefBase, Context, Evaluator, PointedModel
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
    literal,
    mutual_belief,
    everybody_believes,
    render,
    subformulas,
)


class NotATree(ValueError):
    pass


@dataclass(frozen=True)
class KripkeModel:
    worlds: tuple
    relations: dict
    valuation: dict
    agents: int = 1
    _succ: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        worlds = tuple(dict.fromkeys(self.worlds))
        object.__setattr__(self, "worlds", worlds)
        ws = set(worlds)
        rel = {}
        for i in range(1, self.agents + 1):
            pairs = frozenset(tuple(p) for p in self.relations.get(i, ()))
            for a, b in pairs:
                if a not in ws or b not in ws:
                    raise ValueError(f"relation {i} edge ({a}, {b}) leaves the world set")
            rel[i] = pairs
        extra = set(self.relations) - set(rel)
        if extra:
            raise ValueError(f"relations for unknown agents: {sorted(extra)}")
        object.__setattr__(self, "relations", rel)
        val = {}
        for p, s in self.valuation.items():
            s = frozenset(s)
            if not s <= ws:
                raise ValueError(f"valuation of {p} names unknown worlds")
            val[p] = s
        object.__setattr__(self, "valuation", val)
        succ = {i: {w: [] for w in worlds} for i in rel}
        order = {w: k for k, w in enumerate(worlds)}
        for i, pairs in rel.items():
            for a, b in sorted(pairs, key=lambda e: (order[e[0]], order[e[1]])):
                succ[i][a].append(b)
        object.__setattr__(self, "_succ", succ)

    def successors(self, agent: int, w) -> list:
        if agent not in self._succ:
            raise ValueError(f"agent {agent} outside 1..{self.agents}")
        return self._succ[agent][w]

    def true_atoms(self, w) -> frozenset:
        return frozenset(p for p, s in self.valuation.items() if w in s)


@dataclass(frozen=True)
class PointedKripke:
    model: KripkeModel
    world: str

    def __post_init__(self):
        if self.world not in set(self.model.worlds):
            raise ValueError(f"point {self.world!r} is not a world of the model")


# ---------------------------------------------------------------------------
# satisfaction


def truth_sets(M: KripkeModel, f: Formula, memo: dict | None = None) -> frozenset:
    """The set of worlds of ``M`` where ``f`` holds."""
    memo = {} if memo is None else memo
    W = frozenset(M.worlds)
    for g in subformulas(f):
        if g in memo:
            continue
        if isinstance(g, Top):
            memo[g] = W
        elif isinstance(g, Atom):
            memo[g] = M.valuation.get(g.name, frozenset())
        elif isinstance(g, Neg):
            memo[g] = W - memo[g.body]
        elif isinstance(g, Conj):
            memo[g] = memo[g.left] & memo[g.right]
        elif isinstance(g, Box):
            body = memo[g.body]
            memo[g] = frozenset(w for w in M.worlds if all(v in body for v in M.successors(g.agent, w)))
        elif isinstance(g, CBox):
            bad = W - memo[g.body]
            memo[g] = frozenset(w for w in M.worlds if bad <= set(M.successors(g.agent, w)))
        else:
            raise TypeError(f"not an epistemic formula: {render(g)}")
    return memo[f]


def sat_kripke(pk: PointedKripke, f: Formula, memo: dict | None = None) -> bool:
    return pk.world in truth_sets(pk.model, f, memo)


def is_reflexive(M: KripkeModel) -> bool:
    return all((w, w) in M.relations[i] for i in M.relations for w in M.worlds)


# ---------------------------------------------------------------------------
# belief model <-> Kripke


def world_name(b: BeliefBase) -> str:
    return "b" + hashlib.sha1(b.describe().encode("utf-8")).hexdigest()[:12]


def mbm_to_kripke(m: PointedModel) -> PointedKripke:
    """One world per context member plus the point; edges only enter context members."""
    members = list(m.context.members)
    sources = members if m.base in m.context else [m.base] + members
    names = {b: world_name(b) for b in sources}
    n = m.base.n
    ev = Evaluator(m.context)
    rel = {i: [(names[b], names[c]) for b in sources for c in ev.members_of(ev.alt_mask_of(b, i))]
           for i in range(1, n + 1)}
    val = {}
    for b in sources:
        for p in b.state:
            val.setdefault(p, set()).add(names[b])
    model = KripkeModel(tuple(names[b] for b in sources), rel, val, n)
    return PointedKripke(model, names[m.base])


def fresh_names(count: int, avoid: Iterable[str], prefix: str = "w") -> list:
    avoid = set(avoid)
    out = []
    k = 0
    while len(out) < count:
        cand = f"{prefix}{k}"
        if cand not in avoid:
            out.append(cand)
        k += 1
    return out


def kripke_to_mbm(pk: PointedKripke, guard_atoms: Iterable[str]) -> PointedModel:
    """Name every world with a fresh atom and let each base list its successors' names."""
    M = pk.model
    guard = frozenset(guard_atoms)
    name = dict(zip(M.worlds, fresh_names(len(M.worlds), guard | set(M.valuation))))
    bases = {}
    for v in M.worlds:
        per_agent = tuple(
            frozenset({big_or(Atom(name[u]) for u in M.successors(i, v))})
            for i in range(1, M.agents + 1)
        )
        state = (M.true_atoms(v) & guard) | {name[v]}
        bases[v] = BeliefBase(per_agent, state)
    ctx = Context(bases[v] for v in M.worlds)
    return PointedModel(bases[pk.world], ctx)


# ---------------------------------------------------------------------------
# filtration and unraveling


def filtration_classes(M: KripkeModel, sigma: Iterable[Formula]) -> dict:
    """Map every world to its representative under agreement on ``sigma``."""
    sigma = sorted(set(sigma), key=render)
    memo = {}
    sets = [truth_sets(M, f, memo) for f in sigma]
    rep = {}
    out = {}
    for w in M.worlds:
        key = tuple(w in s for s in sets)
        rep.setdefault(key, w)
        out[w] = rep[key]
    return out


def closure(fs: Iterable[Formula]) -> set:
    out = set()
    for f in fs:
        out.update(subformulas(f))
    return out


def filtrate(M: KripkeModel, sigma: Iterable[Formula]) -> KripkeModel:
    """Smallest filtration of M through a subformula-closed set."""
    sigma = set(sigma)
    if closure(sigma) != sigma:
        raise ValueError("filtration set must be closed under subformulas")
    cls = filtration_classes(M, sigma)
    cname = {w: f"[{cls[w]}]" for w in M.worlds}
    worlds = tuple(dict.fromkeys(cname[w] for w in M.worlds))
    rel = {i: {(cname[a], cname[b]) for a, b in M.relations[i]} for i in M.relations}
    val = {}
    for f in sigma:
        if isinstance(f, Atom):
            val[f.name] = {cname[w] for w in M.valuation.get(f.name, ())}
    return KripkeModel(worlds, rel, val, M.agents)


def filtrate_pointed(pk: PointedKripke, sigma: Iterable[Formula]) -> PointedKripke:
    sigma = set(sigma)
    cls = filtration_classes(pk.model, sigma)
    return PointedKripke(filtrate(pk.model, sigma), f"[{cls[pk.world]}]")


SEP = ">"


def unravel(pk: PointedKripke, k: int) -> PointedKripke:
    """Tree of paths from the point with at most ``k`` steps."""
    if k < 0:
        raise ValueError("unraveling depth must be non-negative")
    M = pk.model
    root = (pk.world,)
    nodes = [root]
    frontier = [root]
    rel = {i: [] for i in M.relations}
    for _ in range(k):
        nxt = []
        for seq in frontier:
            kids = {}
            for i in sorted(M.relations):
                for v in M.successors(i, seq[-1]):
                    child = seq + (v,)
                    if child not in kids:
                        kids[child] = None
                        nxt.append(child)
                    rel[i].append((SEP.join(seq), SEP.join(child)))
        nodes.extend(nxt)
        frontier = nxt
    ids = [SEP.join(s) for s in nodes]
    val = {}
    for p, ws in M.valuation.items():
        val[p] = {SEP.join(s) for s in nodes if s[-1] in ws}
    return PointedKripke(KripkeModel(tuple(ids), rel, val, M.agents), SEP.join(root))


def _tree_shape(pk: PointedKripke):
    """Parent map and node depth; raises NotATree for anything else."""
    M = pk.model
    parent = {}
    for i in M.relations:
        for a, b in M.relations[i]:
            if parent.setdefault(b, a) != a:
                raise NotATree(f"node {b} has two parents")
    if pk.world in parent:
        raise NotATree("root has a parent")
    depth = {pk.world: 0}
    order = [pk.world]
    for x in order:
        for i in sorted(M.relations):
            for c in M.successors(i, x):
                if c not in depth:
                    depth[c] = depth[x] + 1
                    order.append(c)
    if len(depth) != len(M.worlds):
        raise NotATree("some nodes are unreachable from the root")
    return depth, order


def label_tree(pk: PointedKripke, guard_atoms: Iterable[str]) -> dict:
    """Labelling formula of every node: its literals plus, per agent, Tri of the children's labels."""
    M = pk.model
    depth, order = _tree_shape(pk)
    guard = sorted(set(guard_atoms))
    labels = {}
    for x in reversed(order):
        true = M.true_atoms(x)
        parts = [literal(p, p in true) for p in guard]
        for i in range(1, M.agents + 1):
            kids = sorted({labels[c] for c in M.successors(i, x)}, key=render)
            parts.append(Tri(i, big_or(kids)))
        labels[x] = big_and(parts)
    return labels


def _guards(spare, k, agents):
    return [mutual_belief(k, Neg(Atom(q)), agents) for q in sorted(spare)]


def _node_base(M, x, labels, guard, extra, agents):
    per_agent = []
    for i in range(1, M.agents + 1):
        kids = sorted({labels[c] for c in M.successors(i, x)}, key=render)
        per_agent.append(frozenset([big_or(kids)] + extra))
    return BeliefBase(tuple(per_agent), M.true_atoms(x) & guard)


def tree_to_mbm(pk: PointedKripke, guard_atoms: Iterable[str], spare_atoms: Iterable[str],
                k: int | None = None) -> BeliefBase:
    """Root base: the children's label disjunction plus MB^k guards on the spare atoms."""
    M = pk.model
    depth, _ = _tree_shape(pk)
    k = max(depth.values()) if k is None else k
    guard = frozenset(guard_atoms)
    labels = label_tree(pk, guard)
    agents = range(1, M.agents + 1)
    return _node_base(M, pk.world, labels, guard, _guards(spare_atoms, k, agents), agents)


def tree_context(pk: PointedKripke, guard_atoms: Iterable[str], spare_atoms: Iterable[str],
                 k: int | None = None) -> Context:
    """One member per tree node, so the root base finds its alternatives in a finite context.

    A node at depth t carries the layers EB^0 .. EB^(k-t) of the spare-atom guards,
    which is exactly what the guards of its parent demand of it.
    """
    M = pk.model
    depth, order = _tree_shape(pk)
    k = max(depth.values()) if k is None else k
    guard = frozenset(guard_atoms)
    labels = label_tree(pk, guard)
    agents = list(range(1, M.agents + 1))
    spare = sorted(set(spare_atoms))
    members = [tree_to_mbm(pk, guard, spare, k)]
    for x in order[1:]:
        extra = [f for q in spare for f in _eb_layers(Neg(Atom(q)), k - depth[x], agents)]
        members.append(_node_base(M, x, labels, guard, extra, agents))
    return Context(members)


def _eb_layers(a, upto, agents):
    out = []
    cur = a
    for h in range(upto + 1):
        out.append(cur)
        cur = everybody_believes(cur, agents)
    return out


# ---------------------------------------------------------------------------
# bounded bisimulation


def k_bisimilar(p1: PointedKripke, p2: PointedKripke, k: int) -> bool:
    """Bounded bisimilarity by k rounds of signature refinement over both models."""
    M1, M2 = p1.model, p2.model
    if M1.agents != M2.agents:
        return False
    props = sorted(set(M1.valuation) | set(M2.valuation))
    models = ((0, M1), (1, M2))
    sig = {}
    for tag, M in models:
        for w in M.worlds:
            sig[(tag, w)] = tuple(w in M.valuation.get(p, ()) for p in props)
    intern = {}
    sig = {key: intern.setdefault(v, len(intern)) for key, v in sig.items()}
    for _ in range(k):
        new = {}
        for tag, M in models:
            for w in M.worlds:
                succ = tuple(
                    frozenset(sig[(tag, v)] for v in M.successors(i, w)) for i in range(1, M.agents + 1)
                )
                new[(tag, w)] = (sig[(tag, w)], succ)
        intern = {}
        sig = {key: intern.setdefault(v, len(intern)) for key, v in new.items()}
    return sig[(0, p1.world)] == sig[(1, p2.world)]


# ---------------------------------------------------------------------------
# small-model validity


def all_models(P: Iterable[str], agents: int, max_worlds: int, reflexive: bool = False):
    """Every Kripke model over P with 1..max_worlds worlds (not up to isomorphism)."""
    P = sorted(set(P))
    for size in range(1, max_worlds + 1):
        worlds = tuple(f"v{j}" for j in range(size))
        pairs = [(a, b) for a in worlds for b in worlds if not (reflexive and a == b)]
        loops = [(a, a) for a in worlds] if reflexive else []
        rels = list(itertools.product(range(1 << len(pairs)), repeat=agents))
        for vals in itertools.product(range(1 << size), repeat=len(P)):
            valuation = {p: {worlds[j] for j in range(size) if v >> j & 1} for p, v in zip(P, vals)}
            for masks in rels:
                rel = {i + 1: loops + [e for j, e in enumerate(pairs) if m >> j & 1]
                       for i, m in enumerate(masks)}
                yield KripkeModel(worlds, rel, valuation, agents)


def kripke_countermodel(phi: Formula, max_worlds: int = 3, reflexive: bool = False,
                        agents: int | None = None):
    """First pointed model with at most ``max_worlds`` worlds falsifying phi, or None."""
    n = max(agents_of(phi) | {1}) if agents is None else agents
    for M in all_models(atoms(phi), n, max_worlds, reflexive):
        true = truth_sets(M, phi)
        for w in M.worlds:
            if w not in true:
                return PointedKripke(M, w)
    return None


def kripke_valid(phi: Formula, max_worlds: int = 3, reflexive: bool = False) -> bool:
    return kripke_countermodel(phi, max_worlds, reflexive) is None


# ---------------------------------------------------------------------------
# files

_KRIPKE_KEYS = {"agents", "worlds", "relations", "valuation", "point"}


def kripke_from_dict(data: dict) -> PointedKripke:
    unknown = set(data) - _KRIPKE_KEYS
    if unknown:
        raise ValueError(f"unknown Kripke model keys: {sorted(unknown)}")
    n = int(data["agents"])
    rel = {}
    for key, pairs in data.get("relations", {}).items():
        i = int(key)
        if not 1 <= i <= n:
            raise ValueError(f"relation key {key} outside 1..{n}")
        rel[i] = [tuple(p) for p in pairs]
    model = KripkeModel(tuple(data["worlds"]), rel, data.get("valuation", {}), n)
    return PointedKripke(model, data["point"])


def kripke_to_dict(pk: PointedKripke) -> dict:
    M = pk.model
    order = {w: k for k, w in enumerate(M.worlds)}
    return {
        "agents": M.agents,
        "worlds": list(M.worlds),
        "relations": {
            str(i): [list(e) for e in sorted(M.relations[i], key=lambda e: (order[e[0]], order[e[1]]))]
            for i in sorted(M.relations)
        },
        "valuation": {p: sorted(ws, key=order.get) for p, ws in sorted(M.valuation.items())},
        "point": pk.world,
    }


def load_kripke(path: str) -> PointedKripke:
    with open(path, encoding="utf-8") as fh:
        return kripke_from_dict(json.load(fh))


def single_world(atoms_true: Iterable[str] = (), agents: int = 1, reflexive: bool = False) -> PointedKripke:
    rel = {i: [("w", "w")] if reflexive else [] for i in range(1, agents + 1)}
    val = {p: {"w"} for p in atoms_true}
    return PointedKripke(KripkeModel(("w",), rel, val, agents), "w")

