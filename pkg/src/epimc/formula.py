"""Formula syntax for the explicit-belief language and the epistemic languages.

One AST serves all three languages.  ``Tri`` is explicit belief (a base
membership test), ``Box`` is implicit belief and ``CBox`` is "believes at most".
Explicit formulas never contain ``Box``/``CBox``; epistemic formulas never
contain ``Tri``.  Derived connectives are expanded at parse time, so the tree
only ever holds the primitive constructors plus the constant ``Top``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union


class ParseError(ValueError):
    def __init__(self, message, text="", pos=0):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


def _cached_hash(self):
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
        object.__setattr__(self, "_hash", h)
        return h


def _fast_eq(self, other):
    if self is other:
        return True
    if type(self) is not type(other):
        return NotImplemented
    if hash(self) != hash(other):
        return False
    return all(getattr(self, f) == getattr(other, f) for f in self.__dataclass_fields__)


def _node(cls):
    """Frozen dataclass with a memoised hash; formula trees are hashed constantly."""
    cls.__hash__ = _cached_hash
    cls.__eq__ = _fast_eq
    return dataclass(frozen=True)(cls)


@_node
class Top:
    pass


@_node
class Atom:
    name: str


@_node
class Neg:
    body: "Formula"


@_node
class Conj:
    left: "Formula"
    right: "Formula"


@_node
class Tri:
    agent: int
    body: "Formula"


@_node
class Box:
    agent: int
    body: "Formula"


@_node
class CBox:
    agent: int
    body: "Formula"


Formula = Union[Top, Atom, Neg, Conj, Tri, Box, CBox]
MODAL = (Tri, Box, CBox)

TOP = Top()
BOT = Neg(TOP)


# ---------------------------------------------------------------------------
# derived connectives


def neg(a):
    return Neg(a)


def conj(a, b):
    return Conj(a, b)


def disj(a, b):
    return Neg(Conj(Neg(a), Neg(b)))


def imp(a, b):
    return Neg(Conj(a, Neg(b)))


def iff(a, b):
    return Conj(imp(a, b), imp(b, a))


def dia(agent, a):
    return Neg(Box(agent, Neg(a)))


def only(agent, a):
    return Conj(Box(agent, a), CBox(agent, Neg(a)))


def univ(a, agent=1):
    return Conj(Box(agent, a), CBox(agent, a))


def exist(a, agent=1):
    return Neg(univ(Neg(a), agent))


def big_and(items: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    out = None
    for it in items:
        out = it if out is None else Conj(out, it)
    return TOP if out is None else out


def big_or(items: Iterable[Formula]) -> Formula:
    """Disjunction; a single disjunct is returned as is, the empty one is ``false``."""
    items = list(items)
    if not items:
        return BOT
    if len(items) == 1:
        return items[0]
    return Neg(big_and(Neg(x) for x in items))


def literal(atom: str, positive: bool) -> Formula:
    return Atom(atom) if positive else Neg(Atom(atom))


# ---------------------------------------------------------------------------
# structural metrics


def depth(f: Formula) -> int:
    """Modal depth counting ``Box`` and ``CBox``."""
    if isinstance(f, (Top, Atom)):
        return 0
    if isinstance(f, Neg):
        return depth(f.body)
    if isinstance(f, Conj):
        return max(depth(f.left), depth(f.right))
    if isinstance(f, (Box, CBox)):
        return depth(f.body) + 1
    if isinstance(f, Tri):
        return depth(f.body)
    raise TypeError(f"not a formula: {f!r}")


def tri_depth(f: Formula) -> int:
    if isinstance(f, (Top, Atom)):
        return 0
    if isinstance(f, Neg):
        return tri_depth(f.body)
    if isinstance(f, Conj):
        return max(tri_depth(f.left), tri_depth(f.right))
    if isinstance(f, Tri):
        return tri_depth(f.body) + 1
    if isinstance(f, (Box, CBox)):
        return tri_depth(f.body)
    raise TypeError(f"not a formula: {f!r}")


def atoms(f: Formula) -> frozenset:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.add(g.name)
        elif isinstance(g, Conj):
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, (Neg, Tri, Box, CBox)):
            stack.append(g.body)
    return frozenset(out)


def agents_of(f: Formula) -> frozenset:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Conj):
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, Neg):
            stack.append(g.body)
        elif isinstance(g, MODAL):
            out.add(g.agent)
            stack.append(g.body)
    return frozenset(out)


def subformulas(f: Formula) -> list:
    """All subformulas, children before parents, without duplicates."""
    seen = {}

    def walk(g):
        if g in seen:
            return
        if isinstance(g, Conj):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (Neg, Tri, Box, CBox)):
            walk(g.body)
        seen[g] = None

    walk(f)
    return list(seen)


def size(f: Formula) -> int:
    return len(render(f))


def is_explicit(f: Formula) -> bool:
    return not any(isinstance(g, (Box, CBox)) for g in subformulas(f))


def is_epistemic(f: Formula) -> bool:
    return not any(isinstance(g, Tri) for g in subformulas(f))


def is_el(f: Formula) -> bool:
    return not any(isinstance(g, (Tri, CBox)) for g in subformulas(f))


def is_propositional(f: Formula) -> bool:
    return not any(isinstance(g, MODAL) for g in subformulas(f))


def mutual_belief(k: int, a: Formula, agents: Iterable[int]) -> Formula:
    """k-level explicit mutual belief: the conjunction of EB^0 a .. EB^k a."""
    agents = sorted(set(agents))
    if not agents:
        raise ValueError("mutual belief needs at least one agent")
    layers = [a]
    for _ in range(k):
        layers.append(big_and(Tri(i, layers[-1]) for i in agents))
    return big_and(layers)


def everybody_believes(a: Formula, agents: Iterable[int]) -> Formula:
    return big_and(Tri(i, a) for i in sorted(set(agents)))


# ---------------------------------------------------------------------------
# rendering

_MOD_LETTER = {Tri: "X", Box: "B", CBox: "C"}


def render(f: Formula) -> str:
    if isinstance(f, Conj):
        return _render_conj(f)
    return _render_prim(f)


def _render_conj(f):
    left = _render_conj(f.left) if isinstance(f.left, Conj) else _render_prim(f.left)
    right = f"({_render_conj(f.right)})" if isinstance(f.right, Conj) else _render_prim(f.right)
    return f"{left} & {right}"


def _render_prim(f):
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Neg):
        if isinstance(f.body, Top):
            return "false"
        return "~" + _render_prim(f.body)
    if isinstance(f, Conj):
        return f"({_render_conj(f)})"
    if isinstance(f, MODAL):
        return f"{_MOD_LETTER[type(f)]}[{f.agent}] " + _render_prim(f.body)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<mod>[XBCDO])\[\s*(?P<idx>-?\d+)\s*\]|(?P<uni>[UE])(?![A-Za-z0-9_])"
    r"|(?P<atom>[a-z][A-Za-z0-9_]*)|(?P<op><->|->|[~&|()]))"
)

EXPLICIT = "explicit"
EL = "el"
EEL = "eel"
_ALLOWED = {
    EXPLICIT: set("X"),
    EL: set("BD"),
    EEL: set("BCDOUE"),
}


def _tokenize(text):
    pos = 0
    out = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", text, pos)
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group("mod"):
            out.append(("mod", (m.group("mod"), int(m.group("idx"))), start))
        elif m.group("uni"):
            out.append(("mod", (m.group("uni"), None), start))
        elif m.group("atom"):
            out.append(("atom", m.group("atom"), start))
        else:
            out.append(("op", m.group("op"), start))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text, lang, n_agents):
        self.text = text
        self.lang = lang
        self.n = n_agents
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", self.text, pos)

    def error(self, msg, pos=None):
        return ParseError(msg, self.text, self.peek()[2] if pos is None else pos)

    def parse(self):
        f = self.form()
        kind, _, pos = self.peek()
        if kind != "end":
            raise self.error("trailing input", pos)
        return f

    # precedence: & > | > -> (right assoc) > <->
    def form(self):
        left = self.implication()
        while self.peek()[:2] == ("op", "<->"):
            self.take()
            left = iff(left, self.implication())
        return left

    def implication(self):
        left = self.disjunction()
        if self.peek()[:2] == ("op", "->"):
            self.take()
            return imp(left, self.implication())
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.peek()[:2] == ("op", "|"):
            self.take()
            left = disj(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.prim()
        while self.peek()[:2] == ("op", "&"):
            self.take()
            left = Conj(left, self.prim())
        return left

    def agent(self, idx, pos):
        if idx < 1:
            raise ParseError(f"agent index {idx} out of range", self.text, pos)
        if self.n is not None and idx > self.n:
            raise ParseError(f"agent index {idx} exceeds agent count {self.n}", self.text, pos)
        return idx

    def prim(self):
        kind, val, pos = self.take()
        if kind == "atom":
            if val == "true":
                return TOP
            if val == "false":
                return BOT
            return Atom(val)
        if kind == "op" and val == "~":
            return Neg(self.prim())
        if kind == "op" and val == "(":
            f = self.form()
            self.expect_op(")")
            return f
        if kind == "mod":
            letter, idx = val
            if letter not in _ALLOWED[self.lang]:
                raise ParseError(f"operator {letter} not allowed in {self.lang} formulas", self.text, pos)
            body = self.prim()
            if letter == "U":
                return univ(body)
            if letter == "E":
                return exist(body)
            i = self.agent(idx, pos)
            if letter == "X":
                return Tri(i, body)
            if letter == "B":
                return Box(i, body)
            if letter == "C":
                return CBox(i, body)
            if letter == "D":
                return dia(i, body)
            return only(i, body)
        raise ParseError("unexpected token", self.text, pos)


def parse(text: str, lang: str = EEL, n_agents: int | None = None) -> Formula:
    if lang not in _ALLOWED:
        raise ValueError(f"unknown language {lang!r}")
    return _Parser(text, lang, n_agents).parse()


def parse_explicit(text: str, n_agents: int | None = None) -> Formula:
    return parse(text, EXPLICIT, n_agents)


def parse_epistemic(text: str, n_agents: int | None = None, lang: str = EEL) -> Formula:
    return parse(text, lang, n_agents)


def parse_el(text: str, n_agents: int | None = None) -> Formula:
    return parse(text, EL, n_agents)
