"""Seeded cross-semantics suites.

Every suite takes a seed and a case budget, runs one family of agreement
checks and returns a ``SuiteResult``.  The first disagreement is kept as a
self-contained JSON payload (model files inline) so it can be replayed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .beliefbase import BeliefBase, Context, PointedModel, model_to_dict, sat_epistemic
from .contextgen import PoolEngine, default_pool, propone_law
from .formula import (
    BOT,
    TOP,
    Atom,
    Box,
    CBox,
    Formula,
    Neg,
    atoms,
    big_and,
    depth,
    dia,
    exist,
    imp,
    only,
    render,
    subformulas,
    univ,
)
from .generators import atom_names, random_epistemic, random_kripke, random_mbm
from .kripke import (
    KripkeModel,
    PointedKripke,
    closure,
    filtrate_pointed,
    kripke_countermodel,
    kripke_to_dict,
    kripke_to_mbm,
    mbm_to_kripke,
    sat_kripke,
    tree_context,
    tree_to_mbm,
    unravel,
)
from .limits import ResourceCapExceeded
from .structures import depth_violation, find_counterexample, world_to_dict

SUITES = ("thm1", "thm2-pipeline", "prop-lemmuccio", "thm-teoremiccolo", "prop-propone", "bc-variants")
MUTABLE = ("thm1", "thm2-pipeline")


@dataclass
class SuiteResult:
    suite: str
    seed: int
    cases: int = 0
    failures: int = 0
    skipped: int = 0
    counterexample: dict | None = None
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.skipped == 0 and self.cases > 0

    def record(self, ok: bool, payload=None) -> None:
        self.cases += 1
        if not ok:
            self.failures += 1
            if self.counterexample is None and payload is not None:
                self.counterexample = payload() if callable(payload) else payload

    def lines(self) -> list:
        out = [
            f"suite={self.suite}",
            f"seed={self.seed}",
            f"result={'pass' if self.passed else 'fail'}",
            f"cases={self.cases}",
            f"failures={self.failures}",
            f"skipped={self.skipped}",
        ]
        out.extend(f"{k}={v}" for k, v in self.params.items())
        out.extend(f"note={n}" for n in self.notes)
        return out

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "result": "pass" if self.passed else "fail",
            "cases": self.cases,
            "failures": self.failures,
            "skipped": self.skipped,
            "params": self.params,
            "notes": self.notes,
            "counterexample": self.counterexample,
        }


# ---------------------------------------------------------------------------
# deliberate corruption for harness sanity checks


def _corrupt_kripke(pk: PointedKripke) -> PointedKripke:
    """Flip every atom at the point."""
    M = pk.model
    val = {}
    for p, ws in M.valuation.items():
        ws = set(ws)
        ws ^= {pk.world}
        val[p] = ws
    return PointedKripke(KripkeModel(M.worlds, M.relations, val, M.agents), pk.world)


def _corrupt_model(m: PointedModel, P) -> PointedModel:
    b = m.base
    flipped = BeliefBase(b.bases, b.state ^ frozenset(P))
    members = [flipped if c == b else c for c in m.context]
    return PointedModel(flipped, Context(members))


# ---------------------------------------------------------------------------
# thm1: belief models and Kripke models agree


THM1_PARTS = ("forward", "extended", "backward")


def thm1(seed: int, count: int = 500, formulas: int = 50, kripke_count: int | None = None,
         mutate: bool = False, parts=THM1_PARTS) -> SuiteResult:
    """Forward transfer for the basic and extended languages, then backward transfer.

    Each part draws from its own generator so that selecting parts does not
    change the instances a part sees.
    """
    kripke_count = max(1, count * 2 // 5) if kripke_count is None else kripke_count
    res = SuiteResult("thm1", seed, params={
        "agents": 2, "max_atoms": 3, "max_context": 5, "base_tri_depth": 2, "formula_depth": 3,
        "models": count, "kripke_models": kripke_count, "formulas_per_model": formulas,
        "mutate": str(mutate).lower(), "parts": ",".join(parts)})
    rng = random.Random(f"{seed}:forward")
    for _ in range(count if "forward" in parts else 0):
        P = atom_names(rng.randint(1, 3))
        m = random_mbm(rng, P, 2, 5, 2)
        pk = mbm_to_kripke(m)
        if mutate:
            pk = _corrupt_kripke(pk)
        for _ in range(formulas):
            f = random_epistemic(rng, P, 2, 3)
            a, b = sat_epistemic(m, f), sat_kripke(pk, f)
            res.record(a == b, lambda: {
                "property": "mbm_to_kripke", "formula": render(f), "belief_model": a, "kripke": b,
                "model": model_to_dict(m), "kripke_model": kripke_to_dict(pk)})
    # the extended language needs the point inside its own context
    rng = random.Random(f"{seed}:extended")
    for _ in range(count if "extended" in parts else 0):
        P = atom_names(rng.randint(1, 3))
        m = random_mbm(rng, P, 2, 5, 2, include_point=True)
        pk = mbm_to_kripke(m)
        if mutate:
            pk = _corrupt_kripke(pk)
        for _ in range(formulas):
            f = random_epistemic(rng, P, 2, 3, cbox=True)
            a, b = sat_epistemic(m, f), sat_kripke(pk, f)
            res.record(a == b, lambda: {
                "property": "mbm_to_kripke_eel", "formula": render(f), "belief_model": a, "kripke": b,
                "model": model_to_dict(m), "kripke_model": kripke_to_dict(pk)})
    rng = random.Random(f"{seed}:backward")
    for _ in range(kripke_count if "backward" in parts else 0):
        P = atom_names(rng.randint(1, 3))
        pk = random_kripke(rng, P, 2, 5)
        for _ in range(formulas):
            f = random_epistemic(rng, P, 2, 3)
            m = kripke_to_mbm(pk, atoms(f))
            if mutate:
                m = _corrupt_model(m, atoms(f))
            a, b = sat_kripke(pk, f), sat_epistemic(m, f)
            res.record(a == b, lambda: {
                "property": "kripke_to_mbm", "formula": render(f), "kripke": a, "belief_model": b,
                "kripke_model": kripke_to_dict(pk), "model": model_to_dict(m)})
    return res


# ---------------------------------------------------------------------------
# thm2-pipeline: filtrate, unravel, label, rebuild


def pipeline(m: PointedModel, f: Formula) -> PointedModel:
    """The finite tree-shaped belief model rebuilt from (m, f)."""
    d = depth(f)
    P = atoms(f)
    fp = filtrate_pointed(mbm_to_kripke(m), closure([f]))
    tree = unravel(fp, d)
    spare = {a for b in list(m.context) + [m.base] for a in b.state} - P
    root = tree_to_mbm(tree, P, spare, d)
    return PointedModel(root, tree_context(tree, P, spare, d))


def thm2_pipeline(seed: int, count: int = 100, formulas: int = 5, mutate: bool = False) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("thm2-pipeline", seed, params={
        "agents": 2, "max_atoms": 3, "max_context": 5, "formula_depth": 2, "models": count,
        "formulas_per_model": formulas, "mutate": str(mutate).lower()})
    for _ in range(count):
        P = atom_names(rng.randint(1, 3))
        m = random_mbm(rng, P, 2, 5, 2)
        for _ in range(formulas):
            f = random_epistemic(rng, P, 2, 2)
            rebuilt = pipeline(m, f)
            if mutate:
                rebuilt = _corrupt_model(rebuilt, atoms(f))
            a, b = sat_epistemic(m, f), sat_epistemic(rebuilt, f)
            res.record(a == b, lambda: {
                "property": "pipeline", "formula": render(f), "original": a, "rebuilt": b,
                "model": model_to_dict(m), "rebuilt_model": model_to_dict(rebuilt)})
    return res


# ---------------------------------------------------------------------------
# formula pools


def modal_pool(P, n: int, max_depth: int, cbox: bool = True) -> list:
    """Modal formulas of exact depth 1..max_depth built from literals and constants.

    Bodies range over every smaller formula and its negation, so the pool is
    closed under the operations the depth check cares about.
    """
    base = [TOP, BOT] + [x for p in sorted(P) for x in (Atom(p), Neg(Atom(p)))]
    ops = [Box, CBox] if cbox else [Box]
    by_depth = [base]
    for _ in range(max_depth):
        bodies = list(dict.fromkeys(x for layer in by_depth for g in layer for x in (g, _negate(g))))
        layer = [op(i, g) for op in ops for i in range(1, n + 1) for g in bodies]
        by_depth.append(list(dict.fromkeys(layer)))
    out = [g for layer in by_depth[1:] for g in layer]
    if cbox:
        out.extend(only(i, g) for i in range(1, n + 1) for g in base)
    return list(dict.fromkeys(out))


def _negate(g):
    return g.body if isinstance(g, Neg) else Neg(g)


def eel_pool(P, max_depth: int) -> list:
    """Single-agent micro-suite with the derived operators U, E and O."""
    P = sorted(P)
    lits = [x for p in P for x in (Atom(p), Neg(Atom(p)))]
    out = [TOP, BOT] + lits
    prop = list(lits)
    if len(P) > 1:
        prop.append(big_and(Atom(p) for p in P))
        prop.append(imp(Atom(P[0]), Atom(P[1])))
    for a in prop:
        out.extend([Box(1, a), CBox(1, a), univ(a), exist(a), only(1, a), imp(Box(1, a), a)])
    if max_depth >= 2:
        a = prop[0]
        out.extend([
            Box(1, Box(1, a)), imp(Box(1, a), Box(1, Box(1, a))), Box(1, imp(Box(1, a), a)),
            imp(dia(1, a), Box(1, dia(1, a))), CBox(1, Box(1, a)), Box(1, CBox(1, a)),
            only(1, Box(1, a)), univ(Box(1, a)), exist(Box(1, a)), exist(univ(a)),
            imp(univ(a), Box(1, a)), imp(univ(a), univ(univ(a))), Neg(Box(1, BOT)),
            imp(Box(1, BOT), CBox(1, Box(1, BOT))),
        ])
    return [f for f in dict.fromkeys(out) if depth(f) <= max_depth]


def _sample(rng, items, count):
    if count and count < len(items):
        keep = sorted(rng.sample(range(len(items)), count))
        return [items[j] for j in keep]
    return items


# ---------------------------------------------------------------------------
# structure-level suites


def prop_lemmuccio(seed: int, count: int = 0, agents=(1, 2), max_k: int = 3,
                   mode: str = "all") -> SuiteResult:
    """Depth invariance over every coherent k-world: exact, via depth_violation."""
    rng = random.Random(seed)
    res = SuiteResult("prop-lemmuccio", seed, params={
        "atoms": "p", "agents": ",".join(map(str, agents)), "max_k": max_k,
        "formula_depth": 2, "mode": mode})
    for n in agents:
        pool = _sample(rng, modal_pool(["p"], n, 2), count)
        for f in pool:
            for k in range(depth(f) + 1, max_k + 1):
                try:
                    w = depth_violation(f, k, mode, ["p"], n)
                except ResourceCapExceeded as exc:
                    res.skipped += 1
                    note = f"n={n},k={k}:{exc}"
                    if note not in res.notes:
                        res.notes.append(note)
                    continue
                res.record(w is None, lambda: {
                    "property": "depth_invariance", "formula": render(f), "agents": n, "k": k,
                    "world": world_to_dict(w)})
    return res


def thm_teoremiccolo(seed: int, count: int = 0, mode: str = "all") -> SuiteResult:
    """Structures-engine validity against the pool engine at tri-depth >= formula depth."""
    rng = random.Random(seed)
    configs = [(("p",), 2), (("p", "q"), 1), (("p", "q"), 2)]
    res = SuiteResult("thm-teoremiccolo", seed, params={
        "configs": ";".join(f"{','.join(P)}@{d}" for P, d in configs), "mode": mode})
    for P, d in configs:
        pool = default_pool(P, d, 1, cap=16)
        for bc in (False, True):
            try:
                eng = PoolEngine(pool, bc, cap=1 << 15)
            except ResourceCapExceeded as exc:
                res.skipped += 1
                res.notes.append(f"{','.join(P)}@{d}:{exc}")
                continue
            for f in _sample(rng, eel_pool(P, d), count):
                a = find_counterexample(f, bc, mode, P, 1)
                b = eng.valid(f)
                res.record((a is None) == b, lambda: {
                    "property": "structures_vs_pool", "formula": render(f), "bc": bc,
                    "structures_valid": a is None, "pool_valid": b,
                    "pool": pool.describe(), "context_size": len(eng.context),
                    "structure_counterexample": None if a is None else world_to_dict(a),
                    "pool_counterexample": _pool_cex(eng, f)})
    return res


def _pool_cex(eng, f):
    b = eng.counterexample(f)
    if b is None:
        return None
    return {"point": model_to_dict(PointedModel(b, Context()))["base"]}


def prop_propone(seed: int, count: int = 0) -> SuiteResult:
    rng = random.Random(seed)
    pool = default_pool(["p"], 2, 1)
    res = SuiteResult("prop-propone", seed, params={
        "atoms": "p", "agents": 1, "tri_depth": 2, "pool_size": len(pool.formulas)})
    phis = _sample(rng, modal_pool(["p"], 1, 2) + [TOP, BOT, Atom("p"), Neg(Atom("p"))], count)
    for bc in (False, True):
        for f in phis:
            left, right = propone_law(f, pool, bc)
            res.record(left == right, {"property": "propone", "formula": render(f), "bc": bc,
                                       "satisfiable": left, "diamond": right})
    return res


def bc_variants(seed: int, count: int = 0, max_worlds: int = 3) -> SuiteResult:
    """Structures validity against small-model Kripke validity, reflexive under bc."""
    rng = random.Random(seed)
    res = SuiteResult("bc-variants", seed, params={
        "atoms": "p", "agents": 1, "formula_depth": 1, "kripke_max_worlds": max_worlds})
    pool = [f for f in eel_pool(["p"], 1) if not _has_cbox(f)]
    base = [TOP, BOT, Atom("p"), Neg(Atom("p"))]
    for a, b in itertools.product(base, repeat=2):
        pool.append(imp(Box(1, a), Box(1, b)))
        pool.append(imp(Box(1, a), b))
        pool.append(imp(a, Box(1, b)))
    pool = list(dict.fromkeys(pool))
    for bc in (False, True):
        for f in _sample(rng, pool, count):
            s = find_counterexample(f, bc, "all", ["p"], 1)
            k = kripke_countermodel(f, max_worlds, bc, 1)
            res.record((s is None) == (k is None), lambda: {
                "property": "structures_vs_kripke", "formula": render(f), "bc": bc,
                "structures_valid": s is None, "kripke_valid": k is None,
                "structure_counterexample": None if s is None else world_to_dict(s),
                "kripke_counterexample": None if k is None else kripke_to_dict(k)})
    return res


def _has_cbox(f) -> bool:
    return any(isinstance(g, CBox) for g in subformulas(f))


RUNNERS = {
    "thm1": thm1,
    "thm2-pipeline": thm2_pipeline,
    "prop-lemmuccio": prop_lemmuccio,
    "thm-teoremiccolo": thm_teoremiccolo,
    "prop-propone": prop_propone,
    "bc-variants": bc_variants,
}


def run_suite(name: str, seed: int, count: int | None = None, mutate: bool = False) -> SuiteResult:
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if mutate and name not in MUTABLE:
        raise ValueError(f"mutation mode is only available for {', '.join(MUTABLE)}")
    kwargs = {}
    if count is not None:
        kwargs["count"] = count
    if mutate:
        kwargs["mutate"] = True
    return RUNNERS[name](seed, **kwargs)
