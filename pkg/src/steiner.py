"""
Exact node-weighted Steiner trees for small terminal sets, directed component
enumeration, and the k-restricted decomposition of an optimal Steiner tree.
"""
import heapq
import itertools
import logging
import math
from collections import deque, namedtuple

from src.graphs import (CapExceededError, ConsistencyError, InfeasibleError, PreconditionError, UnionFind,
                        connects_all, edge_key)
from src.reductions import validate_ca_instance

logger = logging.getLogger(__name__)

EXACT_CAP = 10
ENUM_CAP = 12
BRUTE_CAP = 20


class SteinerTree(namedtuple("SteinerTree", ["terminals", "steiner", "edges"])):
    __slots__ = ()

    @property
    def cost(self):
        return len(self.steiner)

    @property
    def nodes(self):
        return self.terminals | self.steiner

    def adjacency(self):
        adj = {v: set() for v in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


class Component(namedtuple("Component", ["terminals", "sink", "steiner", "edges", "cost"])):
    __slots__ = ()

    @property
    def sources(self):
        return self.terminals - {self.sink}


RestrictedComponent = namedtuple("RestrictedComponent", [
    "root", "terminals", "steiner", "edges", "cost", "expanded_leaves", "intermediate_leaves"])
RestrictedDecomposition = namedtuple("RestrictedDecomposition", ["m", "trees", "costs", "best", "copies"])


def make_tree(terminals, nodes, edges, steiner_pool):
    nodes = set(nodes)
    return SteinerTree(frozenset(terminals), frozenset(v for v in nodes if v in steiner_pool),
                       frozenset(edge_key(u, v) for u, v in edges))


class _SubsetTable:
    """
    Dreyfus-Wagner table over subsets of `terms`, up to `max_size` terminals.
    Node weights sit on the nodes: a Steiner node costs `big`, a terminal 1, so
    the optimum minimises Steiner nodes first and never routes through
    avoidable terminals. All weights are positive, so optimal back-pointers
    reconstruct a tree.
    """
    def __init__(self, inst, terms, max_size):
        self.inst = inst
        self.terms = list(terms)
        self.big = len(inst.terminals) + 1
        self.nodes = list(inst.graph.nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        self.weight = [self.big if v in inst.steiner else 1 for v in self.nodes]
        self.nbrs = [[self.index[u] for u in inst.graph.neighbors(v)] for v in self.nodes]
        self.cost = {}
        self.back = {}
        masks = [m for m in range(1, 1 << len(self.terms)) if bin(m).count("1") <= max_size]
        masks.sort(key=lambda m: (bin(m).count("1"), m))
        for mask in masks:
            self._fill(mask)

    def _fill(self, mask):
        n = len(self.nodes)
        cost = [math.inf] * n
        back = [None] * n
        if mask & (mask - 1) == 0:
            i = self.index[self.terms[mask.bit_length() - 1]]
            cost[i] = self.weight[i]
            back[i] = ("leaf",)
        else:
            low = mask & -mask
            sub = (mask - 1) & mask
            while sub:
                if sub & low and sub != mask:
                    left, right = self.cost.get(sub), self.cost.get(mask ^ sub)
                    if left is not None and right is not None:
                        for v in range(n):
                            c = left[v] + right[v] - self.weight[v]
                            if c < cost[v]:
                                cost[v] = c
                                back[v] = ("merge", sub)
                sub = (sub - 1) & mask
        heap = [(c, v) for v, c in enumerate(cost) if c < math.inf]
        heapq.heapify(heap)
        while heap:
            c, u = heapq.heappop(heap)
            if c > cost[u]:
                continue
            for x in self.nbrs[u]:
                nc = c + self.weight[x]
                if nc < cost[x]:
                    cost[x] = nc
                    back[x] = ("step", u)
                    heapq.heappush(heap, (nc, x))
        self.cost[mask] = cost
        self.back[mask] = back

    def value(self, mask):
        first = self.terms[(mask & -mask).bit_length() - 1]
        return self.cost[mask][self.index[first]]

    def rebuild(self, mask):
        """(nodes, edges) of the optimal tree for `mask`, rooted at its first terminal."""
        first = self.terms[(mask & -mask).bit_length() - 1]
        nodes, edges = set(), set()
        stack = [(mask, self.index[first])]
        while stack:
            m, v = stack.pop()
            nodes.add(self.nodes[v])
            move = self.back[m][v]
            if move[0] == "step":
                edges.add(edge_key(self.nodes[move[1]], self.nodes[v]))
                stack.append((m, move[1]))
            elif move[0] == "merge":
                stack.append((move[1], v))
                stack.append((m ^ move[1], v))
        return nodes, edges


def exact_steiner(inst, terminals, cap=EXACT_CAP):
    terms = sorted(terminals)
    if not terms:
        raise PreconditionError("exact_steiner needs at least one terminal")
    if len(terms) > cap:
        raise CapExceededError(f"{len(terms)} terminals exceed the exact Steiner cap of {cap}")
    if any(t not in inst.terminals for t in terms):
        raise PreconditionError("exact_steiner terminals must be instance terminals")
    table = _SubsetTable(inst, terms, len(terms))
    full = (1 << len(terms)) - 1
    if table.value(full) == math.inf:
        raise InfeasibleError(f"terminals {terms} cannot be connected")
    nodes, edges = table.rebuild(full)
    return make_tree(terms, nodes, edges, inst.steiner)


def enumerate_components(inst, k, root, cap=ENUM_CAP):
    terms = inst.sorted_terminals()
    if len(terms) > cap:
        raise CapExceededError(f"{len(terms)} terminals exceed the component enumeration cap of {cap}")
    if root not in inst.terminals:
        raise PreconditionError(f"root {root} is not a terminal")
    if k < 2:
        raise PreconditionError("components need k >= 2")
    k = min(k, len(terms))
    table = _SubsetTable(inst, terms, k)
    out = []
    for mask in range(1, 1 << len(terms)):
        size = bin(mask).count("1")
        if size < 2 or size > k or table.value(mask) == math.inf:
            continue
        members = [t for i, t in enumerate(terms) if mask >> i & 1]
        nodes, edges = table.rebuild(mask)
        tree = make_tree(members, nodes, edges, inst.steiner)
        for sink in members:
            out.append(Component(tree.terminals, sink, tree.steiner, tree.edges, tree.cost))
    logger.debug("enumerated %d components over %d terminals with k=%d", len(out), len(terms), k)
    return out


def _spanning_tree(inst, terminals, chosen):
    g = inst.graph
    chosen = set(chosen)
    if chosen and connects_all(g, chosen, chosen) and all(
            any(u in chosen for u in g.neighbors(t)) for t in terminals):
        edges = _bfs_edges(g, min(chosen), chosen)
        edges += [edge_key(t, min(u for u in g.neighbors(t) if u in chosen)) for t in terminals]
        return edges
    keep = chosen | set(terminals)
    return _bfs_edges(g, min(terminals), keep)


def _bfs_edges(g, start, allowed):
    seen = {start}
    edges = []
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if v in allowed and v not in seen:
                seen.add(v)
                edges.append(edge_key(u, v))
                queue.append(v)
    return edges


def lower_bound_holds(inst, cost):
    """Every Steiner node touches at most two terminals, so OPT >= t/2."""
    return 2 * cost >= len(inst.terminals)


def brute_force_opt(inst, cap=BRUTE_CAP):
    pool = sorted(inst.steiner)
    terms = inst.terminals
    if len(pool) > cap:
        raise CapExceededError(f"{len(pool)} Steiner nodes exceed the brute-force cap of {cap}")
    if len(terms) <= 1:
        return SteinerTree(frozenset(terms), frozenset(), frozenset())
    for size in range(len(pool) + 1):
        for chosen in itertools.combinations(pool, size):
            if connects_all(inst.graph, terms | set(chosen), terms):
                tree = make_tree(terms, terms | set(chosen), _spanning_tree(inst, terms, chosen), inst.steiner)
                if validate_ca_instance(inst).ok and not lower_bound_holds(inst, tree.cost):
                    raise ConsistencyError(f"optimum {tree.cost} below t/2 for {len(terms)} terminals")
                return tree
    raise InfeasibleError("terminals cannot be connected")


def tree_optimum(inst):
    """The unique optimum of a tree-shaped instance: prune Steiner leaves until none is left."""
    if not inst.is_tree_shaped():
        raise PreconditionError("tree_optimum needs a tree-shaped instance")
    g = inst.graph
    degree = {v: g.degree(v) for v in g.nodes}
    alive = set(g.nodes)
    queue = deque(v for v in g.nodes if v in inst.steiner and degree[v] <= 1)
    while queue:
        v = queue.popleft()
        if v not in alive:
            continue
        alive.discard(v)
        for u in g.neighbors(v):
            if u in alive:
                degree[u] -= 1
                if u in inst.steiner and degree[u] <= 1:
                    queue.append(u)
    edges = [(u, v) for u, v in g.edges if u in alive and v in alive]
    return make_tree(inst.terminals, alive, edges, inst.steiner)


def normalize_terminal_leaves(tree, inst):
    """
    Re-hangs every terminal of degree > 1: it keeps its smallest neighbour s and
    the other neighbours are attached to s instead. Needs the clique property.
    """
    adj = tree.adjacency()
    edges = set(tree.edges)
    for t in sorted(tree.terminals):
        around = sorted(adj[t])
        if len(around) <= 1:
            continue
        anchor = around[0]
        for s in around[1:]:
            if not inst.graph.has_edge(anchor, s):
                raise PreconditionError(f"neighbourhood of terminal {t} is not a clique")
            edges.discard(edge_key(t, s))
            edges.add(edge_key(anchor, s))
            adj[t].discard(s)
            adj[s].discard(t)
            adj[s].add(anchor)
            adj[anchor].add(s)
    return SteinerTree(tree.terminals, tree.steiner, frozenset(edges))


def _leaf_map(root, children):
    spare, f = {}, {}
    order = [root]
    for v in order:
        order.extend(children[v])
    for v in reversed(order):
        kids = children[v]
        if not kids:
            spare[v] = v
        else:
            f[v] = spare[kids[0]]
            spare[v] = spare[kids[1]]
    return f


def leaf_map(t):
    """Internal node -> leaf of a rooted regular binary tree, with edge- and internally node-disjoint paths."""
    if t.root is None:
        raise PreconditionError("leaf_map needs a rooted tree")
    children = {v: tuple(sorted(t.children(v))) for v in t.nodes}
    bad = [v for v, kids in children.items() if len(kids) not in (0, 2)]
    if bad:
        raise PreconditionError(f"not a regular binary tree: nodes {bad} do not have 0 or 2 children")
    return _leaf_map(t.root, children)


def leaf_map_disjoint(t, f):
    """Checks injectivity, descent and pairwise disjointness of the u -> f(u) paths."""
    if len(set(f.values())) != len(f):
        return False
    parent = t.parent
    paths = {}
    for u, leaf in f.items():
        path = [leaf]
        while path[-1] != u:
            up = parent[path[-1]]
            if up is None:
                return False
            path.append(up)
        paths[u] = path[::-1]
    items = list(paths.values())
    for a, b in itertools.combinations(items, 2):
        if {edge_key(x, y) for x, y in zip(a, a[1:])} & {edge_key(x, y) for x, y in zip(b, b[1:])}:
            return False
        if set(a[1:-1]) & set(b[1:-1]):
            return False
    return True


class _Expanded:
    """The binary expansion of a Steiner tree, hung from a dummy root."""
    def __init__(self, opt):
        adj = opt.adjacency()
        first = min(opt.terminals)
        if len(adj[first]) != 1:
            raise PreconditionError("k-restricted decomposition needs terminals as leaves")
        anchor = next(iter(adj[first]))
        self.first, self.anchor = first, anchor
        self.orig, self.children = {}, {}
        self.root = self._new(None, "root")
        head = self._new(first, "terminal")
        self.children[self.root] = [head]
        stack = [(anchor, first, self.root)]
        while stack:
            v, up, at = stack.pop()
            kids = sorted(adj[v] - {up})
            if v in opt.terminals:
                if kids:
                    raise PreconditionError(f"terminal {v} is not a leaf")
                self.children[at].append(self._new(v, "terminal"))
                continue
            if not kids:
                raise PreconditionError(f"Steiner node {v} is a leaf, the tree is not optimal")
            node = self._new(v, "steiner")
            self.children[at].append(node)
            if len(kids) == 1:
                self.children[node].append(self._new(None, "dummy"))
            holder = node
            while len(kids) > 2:
                stack.append((kids.pop(0), v, holder))
                aux = self._new(v, "steiner")
                self.children[holder].append(aux)
                holder = aux
            for kid in kids:
                stack.append((kid, v, holder))
        # children were appended in stack order, fix a deterministic order
        for v in self.children:
            self.children[v].sort()
        self.parent = {c: v for v, kids in self.children.items() for c in kids}
        self.parent[self.root] = None
        self.depth = {self.root: 0}
        self.order = [self.root]
        for v in self.order:
            for c in self.children[v]:
                self.depth[c] = self.depth[v] + 1
                self.order.append(c)
        self.map = _leaf_map(self.root, self.children)

    def _new(self, orig, kind):
        node = len(self.orig)
        self.orig[node] = (orig, kind)
        self.children[node] = []
        return node

    def is_leaf(self, v):
        return not self.children[v]


def k_restricted_decompose(opt, m):
    if m < 1:
        raise PreconditionError("label count m must be at least 1")
    k = 2 ** m
    if len(opt.terminals) <= k:
        whole = RestrictedComponent(None, opt.terminals, opt.steiner, opt.edges, opt.cost, len(opt.terminals), ())
        return RestrictedDecomposition(m, tuple((whole,) for _ in range(m)), (opt.cost,) * m, 0, ())

    q = _Expanded(opt)
    internal = [v for v in q.order if not q.is_leaf(v)]
    trees, costs = [], []
    for j in range(m):
        roots = [q.root] + [v for v in internal if v != q.root and q.depth[v] % m == j]
        comps = []
        for top in roots:
            nodes, edges, middles, leaves = {top}, set(), [], 0
            stack = list(q.children[top])
            while stack:
                y = stack.pop()
                nodes.add(y)
                edges.add((q.parent[y], y))
                if q.is_leaf(y):
                    leaves += 1
                elif q.depth[y] % m == j:
                    middles.append(y)
                    z = q.map[y]
                    leaves += 1
                    while z != y:
                        nodes.add(z)
                        edges.add((q.parent[z], z))
                        z = q.parent[z]
                else:
                    stack.extend(q.children[y])
            comps.append(_contract_piece(q, top, nodes, edges, middles, leaves))
        trees.append(tuple(comps))
        costs.append(sum(c.cost for c in comps))
    best = min(range(m), key=lambda j: costs[j])
    copies = tuple(v for v in internal if v != q.root)
    logger.debug("k-restricted decomposition m=%d: costs %s", m, costs)
    return RestrictedDecomposition(m, tuple(trees), tuple(costs), best, copies)


def _contract_piece(q, top, nodes, edges, middles, leaves):
    terminals, steiner, out = set(), set(), set()
    for v in nodes:
        orig, kind = q.orig[v]
        if kind == "terminal":
            terminals.add(orig)
        elif kind == "steiner":
            steiner.add(orig)
    for a, b in edges:
        oa, ob = q.orig[a][0], q.orig[b][0]
        if a == q.root:
            continue
        if oa is not None and ob is not None and oa != ob:
            out.add(edge_key(oa, ob))
    if q.root in nodes:
        out.add(edge_key(q.first, q.anchor))
    return RestrictedComponent(q.orig[top][0], frozenset(terminals), frozenset(steiner), frozenset(out),
                               len(steiner), leaves, tuple(middles))


def _piece_ok(comp, k):
    members = comp.terminals | comp.steiner
    if k is not None and (len(comp.terminals) > k or comp.expanded_leaves > k):
        return False
    if any(u not in members or v not in members for u, v in comp.edges):
        return False
    if len(comp.edges) != len(members) - 1:
        return False
    uf = UnionFind(members)
    for u, v in comp.edges:
        uf.union(u, v)
    if len({uf.find(v) for v in members}) > 1:
        return False
    return all(sum(t in e for e in comp.edges) <= 1 for t in comp.terminals)


def restricted_tree_feasible(components, terminals, k=None):
    """
    Every component is a tree on its own nodes with terminals as leaves and, when k
    is given, at most k terminals and k expanded leaves. Glued at shared original
    nodes, the components connect all terminals.
    """
    if not all(_piece_ok(comp, k) for comp in components):
        return False
    uf = UnionFind(terminals)
    for comp in components:
        for u, v in comp.edges:
            uf.union(u, v)
        members = list(comp.terminals | comp.steiner)
        for v in members[1:]:
            uf.union(members[0], v)
    return len({uf.find(t) for t in terminals}) <= 1


def intermediate_leaf_counts(decomp):
    counts = {v: 0 for v in decomp.copies}
    for tree in decomp.trees:
        for comp in tree:
            for v in comp.intermediate_leaves:
                counts[v] += 1
    return counts
