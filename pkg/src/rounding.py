"""
Iterative randomized rounding: solve the component LP, sample a component,
contract it into its sink, repeat until one terminal is left.
"""
import json
import logging
from collections import namedtuple

import numpy as np

from src.graphs import InfeasibleError, PreconditionError, UndirGraph, UnionFind, edge_key
from src.lp import CUT_TOL, MAX_CUTS, sample_component, solve_lp
from src.reductions import (CaInstance, LinkSet, lift_solution, reduce_one_node_cap, steiner_connects,
                            verify_augmentation)
from src.simplex import PIVOT_TOL
from src.steiner import BRUTE_CAP, ENUM_CAP, EXACT_CAP, brute_force_opt, exact_steiner

logger = logging.getLogger(__name__)

DEFAULT_K = 4

IterationRecord = namedtuple("IterationRecord", ["iter", "objective", "sum_x", "component_terminals",
                                                 "component_cost"])
PipelineResult = namedtuple("PipelineResult", ["links", "cost", "opt", "feasible", "iterations", "trivial"])


class RoundingState:
    def __init__(self, inst):
        self.original = inst
        self.instance = inst
        self.groups = UnionFind(inst.terminals)
        self.chosen = set()
        self.sampled = []
        self.log = []

    def record(self, lp, component):
        entry = IterationRecord(len(self.log), float(lp.objective), float(sum(float(v) for v in lp.x)),
                                sorted(self.groups.find(t) for t in component.terminals), component.cost)
        self.log.append(entry)
        return entry

    def log_lines(self):
        return "\n".join(json.dumps(entry._asdict(), sort_keys=True) for entry in self.log)


def _contract(inst, c):
    missing = [v for v in c.terminals | c.steiner if v not in inst.graph]
    if missing or c.sink not in inst.terminals:
        raise PreconditionError(f"component references nodes {missing} absent from the instance")
    sink = c.sink
    merged = set(c.terminals) | set(c.steiner)
    absorbed = set(c.terminals) - {sink}
    g = inst.graph
    while True:
        # terminals hanging off a merged Steiner node would touch the sink directly
        extra = {u for v in merged for u in g.neighbors(v) if u in inst.terminals and u not in merged}
        if not extra:
            break
        merged |= extra
        absorbed |= extra

    def image(v):
        return sink if v in merged else v

    edges = {edge_key(image(u), image(v)) for u, v in g.edges if image(u) != image(v)}
    around = sorted({v for e in edges for v in e if sink in e and v != sink})
    edges |= {(a, b) for i, a in enumerate(around) for b in around[i + 1:]}
    nodes = [v for v in g.nodes if v not in merged or v == sink]
    graph = UndirGraph(nodes, edges, {v: g.label(v) for v in nodes})
    back_map = None if inst.back_map is None else {s: l for s, l in inst.back_map.items() if s in graph}
    out = CaInstance(graph, [t for t in inst.terminals if t in graph], [s for s in inst.steiner if s in graph],
                     back_map)
    return out, absorbed


def contract_component(inst, c):
    return _contract(inst, c)[0]


def iterative_rounding(inst, k=DEFAULT_K, seed=0, root=None, tol=CUT_TOL, exact=False, pivot_tol=PIVOT_TOL,
                       max_cuts=MAX_CUTS, enum_cap=ENUM_CAP):
    """Returns (Steiner node set over the input ids, iteration log)."""
    rng = np.random.default_rng(seed)
    state = RoundingState(inst)
    while len(state.instance.terminals) > 1:
        current = state.instance
        here = root if root is not None and root in current.terminals else None
        lp, _ = solve_lp(current, k, here, tol=tol, pivot_tol=pivot_tol, max_cuts=max_cuts, exact=exact,
                         enum_cap=enum_cap)
        component = sample_component(lp, rng)
        entry = state.record(lp, component)
        logger.debug("iteration %d: objective %.4f, sampled %s into %d", entry.iter, entry.objective,
                     entry.component_terminals, component.sink)
        state.instance, absorbed = _contract(current, component)
        for t in absorbed:
            state.groups.union(component.sink, t, keep=component.sink)
        state.chosen |= set(component.steiner)
        state.sampled.append(component)
        if len(state.instance.terminals) >= len(current.terminals):
            raise InfeasibleError("contraction did not reduce the terminal count")
    if not steiner_connects(inst, state.chosen):
        raise InfeasibleError("sampled components do not connect the terminals")
    logger.info("rounding finished: %d Steiner nodes in %d iterations", len(state.chosen), len(state.log))
    return state.chosen, state.log


def reference_opt(inst, exact_cap=EXACT_CAP, brute_cap=BRUTE_CAP):
    """OPT by Dreyfus-Wagner when the terminals are few, by subset enumeration when the Steiner nodes are, else None."""
    if len(inst.terminals) <= exact_cap:
        return exact_steiner(inst, inst.terminals, exact_cap).cost
    if len(inst.steiner) <= brute_cap:
        return brute_force_opt(inst, brute_cap).cost
    return None


def solve_pipeline(g, links, k=DEFAULT_K, seed=0, exact_cap=EXACT_CAP, **lp_options):
    """1-Node-CAP end to end: reduce, round, lift, verify."""
    links = links if isinstance(links, LinkSet) else LinkSet(links)
    inst, trace = reduce_one_node_cap(g, links)
    if trace.trivial:
        return PipelineResult(LinkSet(()), 0, 0, True, 0, True)
    chosen, log = iterative_rounding(inst, k, seed, **lp_options)
    lifted = lift_solution(chosen, trace)
    opt = reference_opt(inst, exact_cap)
    feasible = verify_augmentation(g, lifted, "node")
    return PipelineResult(lifted, len(lifted), opt, feasible, len(log), False)
