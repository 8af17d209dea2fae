"""Command-line entry point.

Reports are ``key=value`` lines on stdout (or one JSON object with
``--json``).  Exit status: 0 verdict true or suite passed, 1 verdict false or
suite failed, 2 usage or parse error, 3 resource cap or timeout.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import random
import signal
import sys
import time

from . import limits
from .beliefbase import PointedModel, base_to_dict, load_model as _load_model, model_to_dict, sat_epistemic
from .contextgen import AlphaContextSpec, PoolEngine, check_report, default_pool
from .contextgen import load_pool as _load_pool
from .formula import ParseError, agents_of, atoms, depth, parse, parse_explicit, render
from .fuzz import SUITES, run_suite
from .kripke import kripke_countermodel, kripke_to_dict, kripke_to_mbm, mbm_to_kripke, sat_kripke
from .kripke import load_kripke as _load_kripke
from .limits import ResourceCapExceeded
from .qbfreduce import build_instance, closed_qbfs, parse_qbf, random_qbf, reduction_check
from .structures import (
    MODES,
    canonical_base,
    coherence,
    enumerate_worlds,
    find_counterexample,
    load_world as _load_world,
    sat_structure,
    tau,
    world_to_dict,
)

OK, FALSE, USAGE, CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Report:
    def __init__(self):
        self.fields: dict = {}
        self.rows: list = []

    def put(self, key, value):
        self.fields[key] = value

    def emit(self, as_json: bool, out=sys.stdout):
        if as_json:
            data = dict(self.fields)
            if self.rows:
                data["rows"] = self.rows
            out.write(json.dumps(data, sort_keys=True) + "\n")
            return
        for row in self.rows:
            out.write(row["line"] + "\n")
        for k, v in self.fields.items():
            out.write(f"{k}={_text(v)}\n")


def _text(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    if v is None:
        return "none"
    return str(v)


def _from_file(loader):
    def load(path, *rest):
        try:
            return loader(path, *rest)
        except ParseError as exc:
            exc.file = path
            raise
    return load


load_model = _from_file(_load_model)
load_kripke = _from_file(_load_kripke)
load_world = _from_file(_load_world)
load_pool = _from_file(_load_pool)


def _csv(text):
    return [x for x in (text or "").split(",") if x]


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args, rep: Report) -> int:
    m = load_model(args.model)
    n = m.base.n
    phi = parse(args.phi, n_agents=n)
    alpha = parse_explicit(args.alpha, n)
    if args.engine == "direct":
        verdict = sat_epistemic(m, phi)
        rep.put("verdict", verdict)
        rep.put("engine", "direct")
        rep.put("context_size", len(m.context))
        return OK if verdict else FALSE
    if args.pool:
        pool = load_pool(args.pool, args.max_pool)
    else:
        P = set(_csv(args.atoms)) or set(atoms(phi) | atoms(alpha) | m.base.state)
        d = depth(phi) if args.tri_depth is None else args.tri_depth
        pool = default_pool(P, d, n, args.max_pool)
    report = check_report(m.base, AlphaContextSpec(pool, alpha, args.bc), phi)
    for line in report.lines():
        k, v = line.split("=", 1)
        rep.put(k, v)
    return OK if report.verdict else FALSE


def cmd_kcheck(args, rep: Report) -> int:
    pk = load_kripke(args.kripke)
    phi = parse(args.phi, n_agents=pk.model.agents)
    verdict = sat_kripke(pk, phi)
    rep.put("verdict", verdict)
    rep.put("engine", "kripke")
    rep.put("worlds", len(pk.model.worlds))
    return OK if verdict else FALSE


def cmd_validity(args, rep: Report) -> int:
    phi = parse(args.phi)
    P = sorted(atoms(phi) | set(_csv(args.atoms)))
    n = max(agents_of(phi) | {1, args.agents or 1})
    rep.put("engine", args.engine)
    rep.put("atoms", ",".join(P))
    rep.put("agents", n)
    rep.put("bc", args.bc)
    if args.engine == "structures":
        w = find_counterexample(phi, args.bc, args.mode, P, n)
        rep.put("mode", args.mode)
        rep.put("depth", depth(phi))
        verdict = w is None
        cex = None if w is None else world_to_dict(w)
    elif args.engine == "pool":
        d = depth(phi) if args.tri_depth is None else args.tri_depth
        pool = default_pool(P, d, n, args.max_pool)
        eng = PoolEngine(pool, args.bc)
        rep.put("tri_depth", d)
        rep.put("pool_size", len(pool.formulas))
        rep.put("context_size", len(eng.context))
        b = eng.counterexample(phi)
        verdict = b is None
        cex = None if b is None else model_to_dict(PointedModel(b, eng.context))
    else:
        pk = kripke_countermodel(phi, args.max_worlds, args.bc, n)
        rep.put("max_worlds", args.max_worlds)
        rep.put("reflexive", args.bc)
        verdict = pk is None
        cex = None if pk is None else kripke_to_dict(pk)
    rep.fields = {"verdict": verdict, **rep.fields}
    if cex is not None:
        rep.put("counterexample", cex)
    return OK if verdict else FALSE


def cmd_translate(args, rep: Report) -> int:
    if args.direction == "mbm2k":
        pk = mbm_to_kripke(load_model(args.input))
        rep.put("kripke", kripke_to_dict(pk))
    elif args.direction == "k2mbm":
        pk = load_kripke(args.input)
        guard = _csv(args.guard) or sorted(pk.model.valuation)
        rep.put("model", model_to_dict(kripke_to_mbm(pk, guard)))
    else:
        chi = parse_qbf(args.qbf)
        state = frozenset(_csv(args.state))
        inst = build_instance(chi, state)
        rep.put("qbf", chi.render())
        rep.put("state", ",".join(sorted(state)))
        rep.put("base", base_to_dict(inst.base))
        rep.put("query", render(inst.query))
    return OK


def cmd_structure(args, rep: Report) -> int:
    sub = args.sub
    if sub == "enum":
        ws = enumerate_worlds(_csv(args.atoms), args.agents, args.k, args.coherent, args.correct)
        rep.put("atoms", args.atoms)
        rep.put("agents", args.agents)
        rep.put("k", args.k)
        rep.put("coherent_only", args.coherent)
        rep.put("correct_only", args.correct)
        rep.put("count", len(ws))
        if args.list:
            rep.put("worlds", [world_to_dict(w) for w in ws])
        return OK
    if sub in ("coherence", "sat", "canon"):
        w = load_world(args.world)
        if sub == "coherence":
            r = coherence(w)
            rep.put("coherent", r.coherent)
            rep.put("correct", r.correct)
            rep.put("violations", len(r.violations))
            for v in r.violations[:20]:
                rep.rows.append({"line": f"violation kind={v.kind} level={v.level} agent={v.agent}"})
            return OK if r.coherent else FALSE
        if sub == "sat":
            phi = parse(args.phi, n_agents=w.n)
            verdict = sat_structure(w, phi, args.mode)
            rep.put("verdict", verdict)
            rep.put("mode", args.mode)
            rep.put("k", w.k)
            return OK if verdict else FALSE
        rep.put("base", base_to_dict(canonical_base(w, _csv(args.guard))))
        return OK
    # tau
    if args.kripke:
        src = load_kripke(args.kripke)
    elif args.model:
        src = load_model(args.model)
    else:
        raise UsageError("structure tau needs --kripke or --model")
    P = _csv(args.atoms) or None
    rep.put("world", world_to_dict(tau(src, args.k, P)))
    return OK


def cmd_fuzz(args, rep: Report) -> int:
    try:
        res = run_suite(args.suite, args.seed, args.count, args.mutate)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for line in res.lines():
        k, v = line.split("=", 1)
        if k == "note":
            rep.rows.append({"line": line})
        else:
            rep.put(k, v)
    if res.counterexample is not None:
        rep.put("counterexample", res.counterexample)
    return OK if res.passed else FALSE


def cmd_qbf(args, rep: Report) -> int:
    cases = []
    if args.qbf:
        cases.append((parse_qbf(args.qbf), frozenset(_csv(args.state))))
    if args.sweep:
        for chi in closed_qbfs(args.sweep):
            P = sorted(chi.variables)
            for r in range(len(P) + 1):
                for j in range(1 << len(P)):
                    s = frozenset(p for b, p in enumerate(P) if j >> b & 1)
                    if len(s) == r:
                        cases.append((chi, s))
    if args.random:
        rng = random.Random(args.seed)
        cases.extend((random_qbf(rng, args.vars), frozenset()) for _ in range(args.random))
    if not cases:
        raise UsageError("qbf needs --qbf, --sweep or --random")
    bad = 0
    for chi, s in cases:
        r = reduction_check(chi, s, args.engine)
        bad += not r.agree
        if args.verbose or not r.agree:
            rep.rows.append({"line": r.line(), "agree": r.agree})
    rep.put("engine", args.engine)
    rep.put("cases", len(cases))
    rep.put("disagreements", bad)
    if args.random:
        rep.put("seed", args.seed)
    rep.put("result", "pass" if bad == 0 else "fail")
    return OK if bad == 0 else FALSE


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON object instead of key=value lines")
    common.add_argument("--timing", action="store_true", help="append elapsed_ms (breaks byte-identical reruns)")

    p = argparse.ArgumentParser(prog="epimc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="model check a belief model")
    c.add_argument("--model", required=True, help="belief model JSON file")
    c.add_argument("--phi", required=True, help="epistemic query")
    c.add_argument("--alpha", default="true", help="integrity constraint on generated members")
    c.add_argument("--engine", choices=("pool", "direct"), default="pool",
                   help="pool: generated alpha-context; direct: the model's own context")
    c.add_argument("--tri-depth", type=int, help="Tri nesting of the default pool (default: query depth)")
    c.add_argument("--atoms", help="comma-separated pool atoms")
    c.add_argument("--pool", help="pool descriptor JSON file")
    c.add_argument("--max-pool", type=int, default=limits.MAX_POOL_FORMULAS, help="cap on pool formulas")
    c.add_argument("--bc", action="store_true", help="keep only correct members")
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("kcheck", parents=[common], help="model check a pointed Kripke model")
    k.add_argument("--kripke", required=True, help="pointed Kripke model JSON file")
    k.add_argument("--phi", required=True, help="epistemic query")
    k.set_defaults(func=cmd_kcheck)

    v = sub.add_parser("validity", parents=[common], help="decide validity")
    v.add_argument("--phi", required=True, help="formula to decide")
    v.add_argument("--bc", action="store_true", help="restrict to correct models (reflexive for kripke)")
    v.add_argument("--engine", choices=("structures", "pool", "kripke"), default="structures",
                   help="structures is exact; pool and kripke are bounded")
    v.add_argument("--mode", choices=MODES, default="all", help="worlds that Box and CBox range over")
    v.add_argument("--atoms", help="extra comma-separated atoms")
    v.add_argument("--agents", type=int, help="agent count (default: largest index in phi)")
    v.add_argument("--tri-depth", type=int, help="pool Tri nesting (default: formula depth)")
    v.add_argument("--max-pool", type=int, default=limits.MAX_POOL_FORMULAS, help="cap on pool formulas")
    v.add_argument("--max-worlds", type=int, default=3, help="largest Kripke model tried")
    v.set_defaults(func=cmd_validity)

    t = sub.add_parser("translate", parents=[common], help="translate between model classes")
    t.add_argument("direction", choices=("mbm2k", "k2mbm", "qbf2mc"))
    t.add_argument("--input", help="model file for mbm2k or k2mbm")
    t.add_argument("--guard", help="comma-separated atoms kept by k2mbm")
    t.add_argument("--qbf", help="prenex QBF for qbf2mc, e.g. 'A p. E q. (p <-> q)'")
    t.add_argument("--state", default="", help="comma-separated true atoms for qbf2mc")
    t.set_defaults(func=cmd_translate)

    s = sub.add_parser("structure", parents=[common], help="belief structure tools")
    s.add_argument("sub", choices=("enum", "coherence", "sat", "tau", "canon"))
    s.add_argument("--atoms", default="p", help="comma-separated atoms")
    s.add_argument("--agents", type=int, default=1)
    s.add_argument("--k", type=int, default=1, help="world depth")
    s.add_argument("--coherent", action="store_true", help="enum: coherent worlds only")
    s.add_argument("--correct", action="store_true", help="enum: correct worlds only")
    s.add_argument("--list", action="store_true", help="enum: print the worlds")
    s.add_argument("--world", help="world JSON file for coherence, sat, canon")
    s.add_argument("--phi", help="formula for sat")
    s.add_argument("--mode", choices=MODES, default="all", help="sat: worlds that Box and CBox range over")
    s.add_argument("--kripke", help="tau: Kripke model file")
    s.add_argument("--model", help="tau: belief model file")
    s.add_argument("--guard", default="", help="canon: atoms commonly believed false")
    s.set_defaults(func=cmd_structure)

    f = sub.add_parser("fuzz", parents=[common], help="run a seeded cross-semantics suite")
    f.add_argument("--suite", required=True, choices=SUITES)
    f.add_argument("--seed", required=True, type=int)
    f.add_argument("--count", type=int, help="instance count (exhaustive suites: sample size, 0 = all)")
    f.add_argument("--mutate", action="store_true", help="corrupt the translation to check the harness")
    f.set_defaults(func=cmd_fuzz)

    q = sub.add_parser("qbf", parents=[common], help="check the QBF reduction against the oracle")
    q.add_argument("--sweep", type=int, default=0, help="all closed QBFs with up to N variables")
    q.add_argument("--random", type=int, default=0, help="number of random instances")
    q.add_argument("--vars", type=int, default=3, help="variables per random instance")
    q.add_argument("--seed", type=int, default=0, help="seed for --random")
    q.add_argument("--qbf", help="single prenex QBF")
    q.add_argument("--state", default="", help="comma-separated true atoms for --qbf")
    q.add_argument("--engine", choices=("pool", "structures"), default="pool")
    q.add_argument("--verbose", action="store_true", help="print every instance, not only disagreements")
    q.set_defaults(func=cmd_qbf)
    return p


class _Timeout(Exception):
    pass


@contextlib.contextmanager
def _deadline(ms: int):
    if not hasattr(signal, "setitimer"):
        yield
        return

    def fire(signum, frame):
        raise _Timeout()

    old = signal.signal(signal.SIGALRM, fire)
    signal.setitimer(signal.ITIMER_REAL, ms / 1000)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def run(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    rep = Report()
    start = time.perf_counter()
    try:
        with _deadline(limits.timeout_ms()):
            status = args.func(args, rep)
    except ParseError as exc:
        where = getattr(exc, "file", None) or "argv"
        err.write(f"error=parse file={where} pos={exc.pos} message={exc}\n")
        return USAGE
    except (ResourceCapExceeded, _Timeout) as exc:
        err.write(f"error=resource message={exc or 'timeout'}\n")
        return CAP
    except UsageError as exc:
        err.write(f"error=usage message={exc}\n")
        return USAGE
    except (OSError, ValueError, KeyError, TypeError) as exc:
        err.write(f"error=input message={type(exc).__name__}: {exc}\n")
        return USAGE
    if args.timing:
        rep.put("elapsed_ms", round((time.perf_counter() - start) * 1000))
    rep.emit(args.json, out)
    return status


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
