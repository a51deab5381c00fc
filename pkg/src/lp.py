"""
The directed-component cut LP over k-restricted components: max-flow
separation, a cutting-plane loop on top of the dense simplex, and sampling of
components proportionally to the LP solution.
"""
import itertools
import json
import logging
from collections import namedtuple

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp

from src.graphs import CapExceededError, ConsistencyError, InfeasibleError, PreconditionError
from src.simplex import PIVOT_TOL, DenseSimplex
from src.steiner import ENUM_CAP, enumerate_components

logger = logging.getLogger(__name__)

CUT_TOL = 1e-7
MAX_CUTS = 10000
EXACT_MAX_COLUMNS = 200
RESIDUAL_EPS = 1e-12

CutViolation = namedtuple("CutViolation", ["cut", "lhs", "terminal"])


class DcrLp:
    def __init__(self, components, root, x, cuts, objective, history=()):
        self.components = tuple(components)
        self.root = root
        self.x = tuple(x)
        self.cuts = tuple(cuts)
        self.objective = objective
        self.history = tuple(history)

    def support(self, tol=CUT_TOL):
        return [i for i, v in enumerate(self.x) if v > tol]

    def to_dict(self):
        return {
            "root": self.root,
            "objective": float(self.objective),
            "components": [{"terminals": sorted(c.terminals), "sink": c.sink, "steiner": sorted(c.steiner),
                            "cost": c.cost, "x": float(v)} for c, v in zip(self.components, self.x)],
            "cuts": [sorted(u) for u in self.cuts],
            "history": [float(v) for v in self.history],
        }

    def dump(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)


def covers(component, cut):
    return component.sink not in cut and bool(component.sources & cut)


def cut_lhs(components, x, cut):
    return sum((v for c, v in zip(components, x) if covers(c, cut)), 0)


def _terminals_of(components, root, terminals):
    if terminals is not None:
        return sorted(terminals)
    found = {root}
    for c in components:
        found |= c.terminals
    return sorted(found)


def _flow_network(components, x, terminals):
    net = nx.DiGraph()
    net.add_nodes_from(("t", t) for t in terminals)
    big = float(sum(x)) + 1.0
    for i, (c, v) in enumerate(zip(components, x)):
        net.add_edge(("c", i), ("t", c.sink), capacity=float(v))
        for s in c.sources:
            net.add_edge(("t", s), ("c", i), capacity=big)
    return net


def _source_side(residual, source):
    """Nodes reachable from the source through unsaturated residual arcs: the smallest minimum-cut side."""
    seen, stack = {source}, [source]
    while stack:
        u = stack.pop()
        for v, arc in residual[u].items():
            if v not in seen and arc["capacity"] - arc["flow"] > RESIDUAL_EPS:
                seen.add(v)
                stack.append(v)
    return seen


def separate(components, x, root, terminals=None, tol=CUT_TOL):
    """First terminal t != root (ascending id) whose max-flow to the root is below 1 - tol, as a cut violation."""
    if any(v < -tol for v in x):
        raise PreconditionError("x must be nonnegative")
    terms = _terminals_of(components, root, terminals)
    net = _flow_network(components, x, terms)
    for t in terms:
        if t == root:
            continue
        residual = edmonds_karp(net, ("t", t), ("t", root))
        if residual.graph["flow_value"] < 1 - tol:
            cut = frozenset(v for kind, v in _source_side(residual, ("t", t)) if kind == "t")
            return CutViolation(cut, cut_lhs(components, x, cut), t)
    return None


def min_cut_values(components, x, root, terminals=None):
    """Max-flow value from every terminal to the root."""
    terms = _terminals_of(components, root, terminals)
    net = _flow_network(components, x, terms)
    return {t: nx.maximum_flow_value(net, ("t", t), ("t", root), flow_func=edmonds_karp)
            for t in terms if t != root}


def enumerate_cuts_oracle(components, x, root, terminals=None, tol=CUT_TOL):
    """Every violated cut by brute force over all nonempty U avoiding the root."""
    terms = [t for t in _terminals_of(components, root, terminals) if t != root]
    violated = []
    for size in range(1, len(terms) + 1):
        for cut in itertools.combinations(terms, size):
            lhs = cut_lhs(components, x, frozenset(cut))
            if lhs < 1 - tol:
                violated.append((frozenset(cut), lhs))
    return violated


def _restricted_optimum(components, cuts, exact, pivot_tol):
    rows = [[1 if covers(c, cut) else 0 for cut in cuts] for c in components]
    costs = [c.cost for c in components]
    result = DenseSimplex(rows, costs, [1] * len(cuts), exact=exact, tol=pivot_tol).solve()
    if result.status == "unbounded":
        raise InfeasibleError("some terminal cut is not covered by any component")
    return result.duals, result.objective


def _record_objective(history, objective, tol):
    if history and objective < history[-1] - tol:
        raise ConsistencyError(f"restricted optimum decreased from {history[-1]} to {objective}")
    history.append(objective)


def solve_lp(inst, k, root=None, tol=CUT_TOL, pivot_tol=PIVOT_TOL, max_cuts=MAX_CUTS, exact=False,
             components=None, enum_cap=ENUM_CAP):
    terms = inst.sorted_terminals()
    root = terms[0] if root is None else root
    if root not in inst.terminals:
        raise PreconditionError(f"root {root} is not a terminal")
    if len(terms) == 1:
        return DcrLp([], root, [], [], 0), 0
    if components is None:
        components = enumerate_components(inst, k, root, enum_cap)
    if exact and len(components) > EXACT_MAX_COLUMNS:
        logger.info("%d components exceed the exact-mode limit, solving in floats", len(components))
        exact = False
    cuts = [frozenset([t]) for t in terms if t != root]
    history = []
    while True:
        x, objective = _restricted_optimum(components, cuts, exact, pivot_tol)
        _record_objective(history, objective, tol)
        violation = separate(components, x, root, terms, tol)
        if violation is None:
            break
        if violation.cut in cuts:
            raise ConsistencyError(f"cut {sorted(violation.cut)} violated although active")
        cuts.append(violation.cut)
        if len(cuts) > max_cuts:
            raise CapExceededError(f"cutting-plane loop exceeded {max_cuts} cuts")
    logger.debug("LP solved: %d components, %d cuts, objective %.6f", len(components), len(cuts), float(objective))
    return DcrLp(components, root, x, cuts, objective, history), objective


def sample_component(lp, rng):
    weights = np.clip(np.array([float(v) for v in lp.x], dtype=float), 0.0, None)
    total = weights.sum()
    if total <= 0:
        raise PreconditionError("cannot sample from an all-zero LP solution")
    return lp.components[rng.choice(len(weights), p=weights / total)]
