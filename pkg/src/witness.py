"""
Witness trees for an optimal Steiner tree: the deterministic construction over
final-components, the tree-following witness for leaf-adjacent instances, the
w-vector and its harmonic average, the per-subtree invariant audit, and a
brute-force optimal witness over all spanning trees on the terminals.
"""
import csv
import itertools
import logging
import math
from collections import deque, namedtuple
from fractions import Fraction

import pyprind

from src.graphs import (CapExceededError, ConsistencyError, PreconditionError, Tree, UndirGraph, edge_key,
                        harmonic, prufer_edges, tree_path)
from src.steiner import SteinerTree

logger = logging.getLogger(__name__)

GAMMA_BOUND = Fraction(18917, 10000)
DELTA = Fraction(7, 120)
LEAF_WEIGHT = Fraction(1, 3)
PRUFER_CAP = 8

FinalComponent = namedtuple("FinalComponent", ["root", "nodes", "parent", "children", "leaves"])
FinalComponentSet = namedtuple("FinalComponentSet", ["components", "root", "finals"])
ComponentWitness = namedtuple("ComponentWitness", ["component", "edges", "leaf_of", "marked", "path"])
WitnessTree = namedtuple("WitnessTree", ["tree", "finals", "rep", "final_edges", "terminal_edges",
                                         "components", "fragments"])
WVector = namedtuple("WVector", ["values", "final_plus_one"])
InvariantAudit = namedtuple("InvariantAudit", ["checked", "failures", "increase_ok", "dominance_ok",
                                               "unchanged_ok", "worst_ratio"])


class GammaReport(namedtuple("GammaReport", ["mode", "h_average", "values", "bound", "strict", "passed",
                                             "audits", "prefix_ok", "witness_edges"])):
    __slots__ = ()

    def to_dict(self):
        return {
            "mode": self.mode,
            "h_average": f"{self.h_average.numerator}/{self.h_average.denominator}",
            "h_average_float": float(self.h_average),
            "bound": f"{self.bound.numerator}/{self.bound.denominator}",
            "bound_float": float(self.bound),
            "strict": self.strict,
            "passed": self.passed,
            "prefix_ok": self.prefix_ok,
            "audit_failures": sum(len(a.failures) for a in self.audits),
            "audited_subtrees": sum(a.checked for a in self.audits),
            "nodes": [{"node": v, "w": w, "H": float(_h(w))} for v, w in sorted(self.values.items())],
            "witness_edges": [list(e) for e in self.witness_edges],
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["node", "w", "H(w)"])
            for v, w in sorted(self.values.items()):
                writer.writerow([v, w, float(_h(w))])


def _h(w):
    return harmonic(w) if w > 0 else Fraction(0)


def strip_terminals(t):
    """Tree on the Steiner nodes of `t`, its final nodes and the representative terminal of each final node."""
    adj = t.adjacency()
    for r in t.terminals:
        if not adj[r] and len(t.terminals) > 1:
            raise PreconditionError(f"terminal {r} is isolated")
        if len(adj[r]) > 1:
            raise PreconditionError(f"terminal {r} is not a leaf")
    if not t.steiner:
        raise PreconditionError("Steiner tree without Steiner nodes")
    edges = [e for e in t.edges if e[0] in t.steiner and e[1] in t.steiner]
    tree = Tree(UndirGraph(t.steiner, edges))
    finals = frozenset(s for s in t.steiner if any(u in t.terminals for u in adj[s]))
    rep = {f: min(u for u in adj[f] if u in t.terminals) for f in finals}
    return tree, finals, rep


def decompose_final_components(tree, finals, root=None):
    if not finals:
        raise PreconditionError("no final Steiner nodes")
    if len(tree.nodes) == 1:
        return FinalComponentSet((), tree.nodes[0], frozenset(finals))
    leaves = tree.leaves()
    loose = [v for v in leaves if v not in finals]
    if loose:
        raise PreconditionError(f"leaves {loose} are not final")
    root = min(leaves) if root is None else root
    if root not in leaves:
        raise PreconditionError(f"root {root} is not a leaf")
    rooted = tree.rerooted(root)
    components = []
    pending = deque([root])
    while pending:
        f = pending.popleft()
        for x in sorted(rooted.children(f)):
            parent, children, nodes, ends = {f: None, x: f}, {f: (x,)}, [f], []
            queue = deque([x])
            while queue:
                y = queue.popleft()
                nodes.append(y)
                if y in finals:
                    children[y] = ()
                    ends.append(y)
                    pending.append(y)
                    continue
                kids = tuple(sorted(rooted.children(y)))
                children[y] = kids
                for kid in kids:
                    parent[kid] = y
                    queue.append(kid)
            components.append(FinalComponent(f, tuple(nodes), parent, children, tuple(ends)))
    return FinalComponentSet(tuple(components), root, frozenset(finals))


def build_witness_component(comp, order=None):
    rank = order or {}
    root = comp.root
    leaf_of, marked, path = {root: root}, {}, {}
    best = {}
    for u in reversed(comp.nodes[1:]):
        kids = comp.children[u]
        if not kids:
            best[u] = (LEAF_WEIGHT, rank.get(u, u))
            leaf_of[u] = u
            path[u] = (u,)
            continue
        top = min(kids, key=lambda c: best[c])
        best[u] = (Fraction(1, len(kids) + 1) + best[top][0], best[top][1])
        marked[u] = top
        leaf_of[u] = leaf_of[top]
        path[u] = (u,) + path[top]
    edges = {edge_key(leaf_of[u], leaf_of[comp.parent[u]])
             for u in comp.nodes[1:] if leaf_of[u] != leaf_of[comp.parent[u]]}
    if len(edges) != len(comp.leaves):
        raise ConsistencyError(f"witness of component rooted at {root} is not a tree on its final nodes")
    return ComponentWitness(comp, tuple(sorted(edges)), leaf_of, marked, path)


def build_witness(t, root=None, order=None):
    tree, finals, rep = strip_terminals(t)
    fcs = decompose_final_components(tree, finals, root)
    fragments = tuple(build_witness_component(c, order) for c in fcs.components)
    final_edges = tuple(sorted({e for frag in fragments for e in frag.edges}))
    terminal_edges = {edge_key(rep[a], rep[b]) for a, b in final_edges}
    adj = t.adjacency()
    for f in finals:
        terminal_edges |= {edge_key(rep[f], r) for r in adj[f] if r in t.terminals and r != rep[f]}
    if len(terminal_edges) != len(t.terminals) - 1:
        raise ConsistencyError("lifted witness does not span the terminals")
    return WitnessTree(tree, finals, rep, final_edges, tuple(sorted(terminal_edges)), fcs, fragments)


def full_tree(t):
    return Tree(UndirGraph(t.nodes, t.edges))


def w_vector(tree, finals, edges, final_plus_one=True, steiner=None):
    """
    final_plus_one: `edges` join final nodes of the Steiner-only tree; every
    node of a path counts, plus one on final nodes. Otherwise `edges` join
    terminals of the full tree and only internal path nodes count.
    """
    nodes = tree.nodes if steiner is None else sorted(steiner)
    values = {v: 0 for v in nodes}
    for p, q in edges:
        if p not in tree.graph or q not in tree.graph:
            raise PreconditionError(f"witness edge ({p}, {q}) leaves the tree")
        route = tree_path(tree, p, q)
        for v in (route if final_plus_one else route[1:-1]):
            if v in values:
                values[v] += 1
    if final_plus_one:
        for f in finals:
            values[f] += 1
    return WVector(values, final_plus_one)


def h_average(wv):
    if not wv.values:
        raise PreconditionError("empty w-vector")
    return sum((_h(w) for w in wv.values.values()), Fraction(0)) / len(wv.values)


def invariant_base_case(delta=DELTA, bound=GAMMA_BOUND):
    value = harmonic(2) + LEAF_WEIGHT + delta
    return value, value < bound


def psi(p, delta=DELTA):
    return 2 * harmonic(p + 1) - (p - 1) * (LEAF_WEIGHT + delta) - harmonic(2)


def psi_argmax(limit=50, delta=DELTA):
    return max(range(1, limit + 1), key=lambda p: (psi(p, delta), -p))


def check_invariant_lemma(comp, frag, bound=GAMMA_BOUND, delta=DELTA):
    children, parent = comp.children, comp.parent
    depth = {comp.root: 0}
    for v in comp.nodes[1:]:
        depth[v] = depth[parent[v]] + 1
    preorder, stack = [], [comp.root]
    while stack:
        v = stack.pop()
        preorder.append(v)
        stack.extend(reversed(children[v]))
    where = {v: i for i, v in enumerate(preorder)}
    size = {}
    for v in reversed(preorder):
        size[v] = 1 + sum(size[c] for c in children[v])

    # lca depth of every witness edge through each node
    through = {v: [] for v in comp.nodes}
    for p, q in frag.edges:
        a, b, left, right = p, q, [p], [q]
        while a != b:
            if depth[a] >= depth[b]:
                a = parent[a]
                left.append(a)
            else:
                b = parent[b]
                right.append(b)
        right.pop()
        for v in left + right:
            through[v].append(depth[a])

    def weight(v):
        return LEAF_WEIGHT if not children[v] else Fraction(1, len(children[v]) + 1)

    def w_local(u, v, on_path):
        return sum(1 for d in through[v] if d >= depth[u]) + (v in on_path) + (not children[v])

    path_sum = {u: sum((weight(v) for v in frag.path[u]), Fraction(0)) for u in comp.nodes[1:]}
    failures, worst = [], Fraction(0)
    increase_ok = dominance_ok = unchanged_ok = True
    checked = 0
    for u in comp.nodes[1:]:
        on_path = set(frag.path[u])
        subtree = preorder[where[u]:where[u] + size[u]]
        h = sum((_h(w_local(u, v, on_path)) for v in subtree), Fraction(0))
        lhs = h + path_sum[u] + delta
        ratio = lhs / len(subtree)
        worst = max(worst, ratio)
        checked += 1
        if not lhs < bound * len(subtree):
            failures.append(u)
        if not children[u]:
            continue
        if w_local(u, u, on_path) != len(children[u]):
            increase_ok = False
        top = frag.marked[u]
        for c in children[u]:
            if c == top:
                continue
            if path_sum[c] < path_sum[top]:
                dominance_ok = False
            below = set(frag.path[c])
            for v in preorder[where[c]:where[c] + size[c]]:
                if w_local(u, v, on_path) != w_local(c, v, below):
                    unchanged_ok = False
    if failures:
        logger.warning("invariant fails at %d subtrees of the component rooted at %d", len(failures), comp.root)
    return InvariantAudit(checked, failures, increase_ok, dominance_ok, unchanged_ok, worst)


def prefix_bound_audit(witness, bound=GAMMA_BOUND, strict=True):
    """
    Running H-average over the nodes seen so far, after merging each
    component's witness in decomposition order, and whether every prefix stays
    below `bound`.
    """
    finals = witness.finals
    if not witness.fragments:
        return True, []
    counts = {}
    total = Fraction(0)
    averages = []
    ok = True
    for frag in witness.fragments:
        comp = frag.component
        depth = _depths(comp)
        for v in comp.nodes:
            if v not in counts:
                counts[v] = 0
                total += _h(counts[v] + (v in finals))
        for p, q in frag.edges:
            a, b, route = p, q, {p, q}
            while a != b:
                if depth[a] >= depth[b]:
                    a = comp.parent[a]
                else:
                    b = comp.parent[b]
                route.update((a, b))
            for v in route:
                total -= _h(counts[v] + (v in finals))
                counts[v] += 1
                total += _h(counts[v] + (v in finals))
        average = total / len(counts)
        averages.append(average)
        if (average >= bound) if strict else (average > bound):
            ok = False
    return ok, averages


def _depths(comp):
    depth = {comp.root: 0}
    for v in comp.nodes[1:]:
        depth[v] = depth[comp.parent[v]] + 1
    return depth


def rehang_leaf_adjacent(t, inst):
    """Re-hangs every Steiner node without a tree-adjacent terminal onto one of its instance terminals."""
    adj = t.adjacency()
    edges = set(t.edges)
    for s in sorted(t.steiner):
        if any(u in t.terminals for u in adj[s]):
            continue
        hosts = sorted(inst.terminal_neighbors(s))
        if not hosts:
            raise PreconditionError(f"Steiner node {s} has no adjacent terminal in the instance")
        r = hosts[0]
        route = Tree(UndirGraph(t.nodes, edges)).path(s, r)
        cut = edge_key(route[0], route[1])
        edges.discard(cut)
        edges.add(edge_key(s, r))
        adj[route[0]].discard(route[1])
        adj[route[1]].discard(route[0])
        adj[s].add(r)
        adj[r].add(s)
    return SteinerTree(t.terminals, t.steiner, frozenset(edges))


def tree_following_witness(t):
    adj = t.adjacency()
    rep, terminal_edges = {}, set()
    for s in sorted(t.steiner):
        hosts = sorted(u for u in adj[s] if u in t.terminals)
        if not hosts:
            raise PreconditionError(f"Steiner node {s} has no adjacent terminal")
        rep[s] = hosts[0]
        terminal_edges |= {edge_key(hosts[0], r) for r in hosts[1:]}
    steiner_edges = tuple(sorted(e for e in t.edges if e[0] in t.steiner and e[1] in t.steiner))
    terminal_edges |= {edge_key(rep[a], rep[b]) for a, b in steiner_edges}
    return WitnessTree(full_tree(t), frozenset(t.steiner), rep, steiner_edges, tuple(sorted(terminal_edges)),
                       None, ())


def brute_force_gamma(t, cap=PRUFER_CAP, progress=False):
    terms = sorted(t.terminals)
    n = len(terms)
    if n > cap:
        raise CapExceededError(f"{n} terminals exceed the Prüfer enumeration cap of {cap}")
    if n < 2:
        raise PreconditionError("brute-force witness needs at least 2 terminals")
    tree = full_tree(t)
    steiner = sorted(t.steiner)
    slot = {s: i for i, s in enumerate(steiner)}
    inner = {(i, j): tuple(slot[v] for v in tree.path(terms[i], terms[j])[1:-1] if v in slot)
             for i in range(n) for j in range(i + 1, n)}
    scale = math.lcm(*range(1, n + 1))
    scaled = [0] + [int(harmonic(w) * scale) for w in range(1, n + 1)]
    best = None
    total_trees = n ** (n - 2)
    bar = pyprind.ProgBar(total_trees, stream=2, title="Prüfer enumeration") if progress else None
    for seq in itertools.product(range(n), repeat=n - 2):
        edges = prufer_edges(seq, n)
        counts = [0] * len(steiner)
        for e in edges:
            for s in inner[e]:
                counts[s] += 1
        value = sum(scaled[c] for c in counts)
        key = (value, tuple(sorted(edges)))
        if best is None or key < best:
            best = key
        if bar is not None:
            bar.update()
    value, edges = best
    terminal_edges = tuple(sorted(edge_key(terms[a], terms[b]) for a, b in edges))
    witness = WitnessTree(tree, frozenset(), {}, (), terminal_edges, None, ())
    return Fraction(value, scale * len(steiner)), witness


def terminal_form(t, witness):
    return w_vector(full_tree(t), (), witness.terminal_edges, final_plus_one=False, steiner=t.steiner)


def witness_report(t, mode="deterministic", root=None, order=None, bound=None, progress=False):
    if mode == "deterministic":
        witness = build_witness(t, root, order)
        if witness.fragments:
            wv = w_vector(witness.tree, witness.finals, witness.final_edges, final_plus_one=True)
        else:
            wv = terminal_form(t, witness)
        audits = [check_invariant_lemma(frag.component, frag) for frag in witness.fragments]
        prefix_ok, _ = prefix_bound_audit(witness)
        bound = GAMMA_BOUND if bound is None else bound
        strict = True
        edges = witness.terminal_edges
    elif mode == "tree-following":
        witness = tree_following_witness(t)
        wv = terminal_form(t, witness)
        audits, prefix_ok = [], True
        bound = harmonic(3) if bound is None else bound
        strict = False
        edges = witness.terminal_edges
    elif mode == "brute":
        _, witness = brute_force_gamma(t, progress=progress)
        wv = terminal_form(t, witness)
        audits, prefix_ok = [], True
        bound = GAMMA_BOUND if bound is None else bound
        strict = True
        edges = witness.terminal_edges
    else:
        raise PreconditionError(f"unknown witness mode {mode!r}")
    value = h_average(wv)
    passed = (value < bound if strict else value <= bound) and prefix_ok and not any(a.failures for a in audits)
    return GammaReport(mode, value, wv.values, bound, strict, passed, audits, prefix_ok, edges)
