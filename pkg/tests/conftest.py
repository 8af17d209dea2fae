import hypothesis.strategies as st
from hypothesis import settings

from epimc.formula import Atom, Box, CBox, Conj, Neg, TOP, Tri

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")

ATOMS = ("p", "q", "r")


def epistemic(atoms=ATOMS, agents=2, cbox=True, max_leaves=8):
    leaves = st.sampled_from([Atom(a) for a in atoms] + [TOP])
    ops = [Box, CBox] if cbox else [Box]

    def extend(children):
        agent = st.integers(1, agents)
        return st.one_of(
            st.builds(Neg, children),
            st.builds(Conj, children, children),
            *[st.builds(op, agent, children) for op in ops],
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def explicit(atoms=ATOMS, agents=2, max_leaves=6):
    leaves = st.sampled_from([Atom(a) for a in atoms] + [TOP])

    def extend(children):
        return st.one_of(
            st.builds(Neg, children),
            st.builds(Conj, children, children),
            st.builds(Tri, st.integers(1, agents), children),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
