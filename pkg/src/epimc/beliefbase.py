"""Multi-agent belief bases, contexts and the two satisfaction relations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .formula import Atom, Box, CBox, Conj, Formula, Neg, Top, Tri, parse_explicit, render, subformulas


class InternalInconsistency(RuntimeError):
    """Two characterisations that must agree did not."""


@dataclass(frozen=True)
class BeliefBase:
    """Per-agent finite sets of explicit formulas plus the actual state.

    ``bases[i - 1]`` is agent ``i``'s base.
    """

    bases: tuple
    state: frozenset

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(frozenset(b) for b in self.bases))
        object.__setattr__(self, "state", frozenset(self.state))
        if not self.bases:
            raise ValueError("a belief base needs at least one agent")

    @classmethod
    def make(cls, n: int, state: Iterable[str] = (), bases: Mapping[int, Iterable[Formula]] | None = None):
        bases = bases or {}
        bad = [i for i in bases if not 1 <= i <= n]
        if bad:
            raise ValueError(f"agent index out of range: {bad}")
        return cls(tuple(frozenset(bases.get(i, ())) for i in range(1, n + 1)), frozenset(state))

    @property
    def n(self) -> int:
        return len(self.bases)

    def base(self, agent: int) -> frozenset:
        return self.bases[agent - 1]

    def with_base(self, agent: int, contents: Iterable[Formula]) -> "BeliefBase":
        bases = list(self.bases)
        bases[agent - 1] = frozenset(contents)
        return BeliefBase(tuple(bases), self.state)

    def sort_key(self):
        return (
            tuple(sorted(self.state)),
            tuple(tuple(sorted(render(f) for f in b)) for b in self.bases),
        )

    def describe(self) -> str:
        parts = [f"state={{{','.join(sorted(self.state))}}}"]
        for i, b in enumerate(self.bases, 1):
            parts.append(f"B{i}={{{'; '.join(sorted(render(f) for f in b))}}}")
        return " ".join(parts)


class Context:
    """A finite set of belief bases with a stable member order."""

    def __init__(self, members: Iterable[BeliefBase] = (), *, keep_order: bool = False):
        uniq = dict.fromkeys(members)
        ms = list(uniq) if keep_order else sorted(uniq, key=BeliefBase.sort_key)
        self.members: tuple = tuple(ms)
        self.index = {b: k for k, b in enumerate(self.members)}

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, b):
        return b in self.index

    def __eq__(self, other):
        return isinstance(other, Context) and set(self.members) == set(other.members)

    def __hash__(self):
        return hash(frozenset(self.members))

    def __repr__(self):
        return f"Context({len(self.members)} members)"


@dataclass(frozen=True)
class PointedModel:
    base: BeliefBase
    context: Context = field(default_factory=Context)


# ---------------------------------------------------------------------------
# explicit satisfaction


def sat_explicit(b: BeliefBase, a: Formula) -> bool:
    if isinstance(a, Top):
        return True
    if isinstance(a, Atom):
        return a.name in b.state
    if isinstance(a, Neg):
        return not sat_explicit(b, a.body)
    if isinstance(a, Conj):
        return sat_explicit(b, a.left) and sat_explicit(b, a.right)
    if isinstance(a, Tri):
        return a.body in b.bases[a.agent - 1]
    raise TypeError(f"not an explicit formula: {render(a)}")


def is_correct(b: BeliefBase) -> bool:
    return all(sat_explicit(b, a) for base in b.bases for a in base)


def is_alternative(b: BeliefBase, agent: int, b2: BeliefBase) -> bool:
    return all(sat_explicit(b2, a) for a in b.bases[agent - 1])


def alternatives(b: BeliefBase, agent: int, ctx: Context) -> list:
    return [c for c in ctx if is_alternative(b, agent, c)]


# ---------------------------------------------------------------------------
# epistemic satisfaction


class Evaluator:
    """Truth sets of epistemic formulas over a fixed context.

    Sets of members are Python ints used as bitmasks.  Every explicit formula
    and every subformula is evaluated once per context.
    """

    def __init__(self, ctx: Context):
        self.ctx = ctx
        self.full = (1 << len(ctx)) - 1
        self._explicit: dict = {}
        self._alt: dict = {}
        self._truth: dict = {}

    def explicit_mask(self, a: Formula) -> int:
        m = self._explicit.get(a)
        if m is None:
            m = 0
            for k, c in enumerate(self.ctx.members):
                if sat_explicit(c, a):
                    m |= 1 << k
            self._explicit[a] = m
        return m

    def alt_mask_of(self, b: BeliefBase, agent: int) -> int:
        m = self.full
        for a in b.bases[agent - 1]:
            m &= self.explicit_mask(a)
            if not m:
                break
        return m

    def alt_mask(self, k: int, agent: int) -> int:
        key = (k, agent)
        m = self._alt.get(key)
        if m is None:
            m = self.alt_mask_of(self.ctx.members[k], agent)
            self._alt[key] = m
        return m

    def truth(self, f: Formula) -> int:
        """Bitmask of the context members at which ``f`` holds."""
        for g in subformulas(f):
            if g not in self._truth:
                self._truth[g] = self._eval_all(g)
        return self._truth[f]

    def _eval_all(self, g) -> int:
        t = self._truth
        if isinstance(g, Top):
            return self.full
        if isinstance(g, Atom):
            return self.explicit_mask(g)
        if isinstance(g, Neg):
            return self.full & ~t[g.body]
        if isinstance(g, Conj):
            return t[g.left] & t[g.right]
        if isinstance(g, (Box, CBox)):
            bad = self.full & ~t[g.body]
            m = 0
            for k in range(len(self.ctx)):
                scope = self.alt_mask(k, g.agent)
                if isinstance(g, CBox):
                    scope = self.full & ~scope
                if not scope & bad:
                    m |= 1 << k
            return m
        raise TypeError(f"not an epistemic formula: {render(g)}")

    def holds(self, b: BeliefBase, f: Formula) -> bool:
        """Truth of ``f`` at ``(b, ctx)``; ``b`` need not be a member."""
        k = self.ctx.index.get(b)
        if k is not None:
            return bool(self.truth(f) >> k & 1)
        return self._holds_outside(b, f)

    def _holds_outside(self, b, f):
        if isinstance(f, Top):
            return True
        if isinstance(f, Atom):
            return f.name in b.state
        if isinstance(f, Neg):
            return not self._holds_outside(b, f.body)
        if isinstance(f, Conj):
            return self._holds_outside(b, f.left) and self._holds_outside(b, f.right)
        if isinstance(f, (Box, CBox)):
            scope = self.alt_mask_of(b, f.agent)
            if isinstance(f, CBox):
                scope = self.full & ~scope
            return not scope & ~self.truth(f.body)
        raise TypeError(f"not an epistemic formula: {render(f)}")

    def members_of(self, mask: int) -> list:
        return [c for k, c in enumerate(self.ctx.members) if mask >> k & 1]


def sat_epistemic(m: PointedModel, f: Formula, evaluator: Evaluator | None = None) -> bool:
    ev = evaluator if evaluator is not None and evaluator.ctx is m.context else Evaluator(m.context)
    return ev.holds(m.base, f)


def satisfies_bc(m: PointedModel) -> bool:
    """Belief correctness, checked literally and through the correctness characterisation."""
    inside = m.base in m.context
    literal = inside and all(is_alternative(c, i, c) for c in m.context for i in range(1, c.n + 1))
    via_correct = inside and all(is_correct(c) for c in m.context)
    if literal != via_correct:
        raise InternalInconsistency(
            f"belief correctness disagrees: reflexivity={literal} correctness={via_correct}"
        )
    return literal


# ---------------------------------------------------------------------------
# model files

_MODEL_KEYS = {"agents", "base", "context"}
_BASE_KEYS = {"state", "bases"}


def base_from_dict(data: dict, n: int) -> BeliefBase:
    unknown = set(data) - _BASE_KEYS
    if unknown:
        raise ValueError(f"unknown belief base keys: {sorted(unknown)}")
    raw = data.get("bases", {})
    keys = {str(i) for i in range(1, n + 1)}
    if set(raw) - keys:
        raise ValueError(f"agent keys outside 1..{n}: {sorted(set(raw) - keys)}")
    bases = tuple(frozenset(parse_explicit(s, n) for s in raw.get(str(i), [])) for i in range(1, n + 1))
    return BeliefBase(bases, frozenset(data.get("state", [])))


def base_to_dict(b: BeliefBase) -> dict:
    return {
        "state": sorted(b.state),
        "bases": {str(i): sorted(render(f) for f in b.base(i)) for i in range(1, b.n + 1)},
    }


def model_from_dict(data: dict) -> PointedModel:
    unknown = set(data) - _MODEL_KEYS
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    n = int(data["agents"])
    if n < 1:
        raise ValueError("a model needs at least one agent")
    base = base_from_dict(data["base"], n)
    ctx = Context(base_from_dict(c, n) for c in data.get("context", []))
    return PointedModel(base, ctx)


def model_to_dict(m: PointedModel) -> dict:
    return {
        "agents": m.base.n,
        "base": base_to_dict(m.base),
        "context": [base_to_dict(c) for c in m.context],
    }


def load_model(path: str) -> PointedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
