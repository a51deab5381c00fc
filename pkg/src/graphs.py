"""
Graph and tree primitives shared by every stage of the pipeline: an immutable
simple graph type, rooted/unrooted trees, the block-cut tree, a disjoint-set
forest, and the harmonic numbers used by the witness analysis.
"""
import logging
import math
from collections import deque
from fractions import Fraction

import networkx as nx

logger = logging.getLogger(__name__)


class AugurError(Exception):
    pass


class PreconditionError(AugurError, ValueError):
    pass


class InfeasibleError(AugurError):
    pass


class CapExceededError(AugurError):
    pass


class ConsistencyError(AugurError, AssertionError):
    pass


def edge_key(u, v):
    return (u, v) if u <= v else (v, u)


class UndirGraph:
    """
    Simple undirected graph over integer node ids. Parallel edges collapse,
    self-loops are rejected. Never mutated after construction.
    """
    def __init__(self, nodes, edges=(), labels=None):
        adjacency = {v: set() for v in nodes}
        for u, v in edges:
            if u == v:
                raise PreconditionError(f"self-loop at node {u}")
            if u not in adjacency or v not in adjacency:
                raise PreconditionError(f"edge ({u}, {v}) references an unknown node")
            adjacency[u].add(v)
            adjacency[v].add(u)
        labels = labels or {}
        self._nodes = tuple(sorted(adjacency))
        self._adj = {v: tuple(sorted(ns)) for v, ns in adjacency.items()}
        self._edges = tuple(sorted({edge_key(u, v) for u in adjacency for v in adjacency[u]}))
        self._labels = {v: str(labels.get(v, v)) for v in self._nodes}
        self._nx = None

    @property
    def nodes(self):
        return self._nodes

    @property
    def edges(self):
        return self._edges

    @property
    def labels(self):
        return dict(self._labels)

    def label(self, v):
        return self._labels[v]

    def neighbors(self, v):
        if v not in self._adj:
            raise PreconditionError(f"node {v} not in graph")
        return self._adj[v]

    def degree(self, v):
        return len(self.neighbors(v))

    def has_edge(self, u, v):
        return u in self._adj and v in self._adj[u]

    def __contains__(self, v):
        return v in self._adj

    def __len__(self):
        return len(self._nodes)

    def __repr__(self):
        return f"UndirGraph(n={len(self._nodes)}, m={len(self._edges)})"

    def __eq__(self, other):
        return isinstance(other, UndirGraph) and self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self):
        return hash((self._nodes, self._edges))

    def to_networkx(self):
        if self._nx is None:
            graph = nx.Graph()
            graph.add_nodes_from(self._nodes)
            graph.add_edges_from(self._edges)
            self._nx = nx.freeze(graph)
        return self._nx

    def subgraph(self, keep):
        keep = set(keep)
        return UndirGraph(
            [v for v in self._nodes if v in keep],
            [(u, v) for u, v in self._edges if u in keep and v in keep],
            {v: self._labels[v] for v in self._nodes if v in keep},
        )

    def with_edges(self, extra):
        return UndirGraph(self._nodes, list(self._edges) + [e for e in extra if e[0] != e[1]], self._labels)

    def without_nodes(self, drop):
        drop = set(drop)
        return self.subgraph(v for v in self._nodes if v not in drop)

    def is_connected(self):
        if not self._nodes:
            return False
        return len(reachable(self, self._nodes[0])) == len(self._nodes)


def reachable(g, start, allowed=None):
    """Nodes reachable from `start` while staying inside `allowed` (all nodes if None)."""
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if v not in seen and (allowed is None or v in allowed):
                seen.add(v)
                queue.append(v)
    return seen


def connects_all(g, keep, targets):
    """True iff every node of `targets` lies in one component of g[keep]."""
    targets = list(targets)
    if len(targets) <= 1:
        return all(t in keep for t in targets)
    keep = set(keep)
    if any(t not in keep for t in targets):
        return False
    seen = reachable(g, targets[0], keep)
    return all(t in seen for t in targets)


class Tree:
    """
    A tree over an UndirGraph. When `root` is given, `parent`, `children` and
    `depth` describe the rooted orientation.
    """
    def __init__(self, graph, root=None):
        if len(graph) == 0:
            raise PreconditionError("empty tree")
        if len(graph.edges) != len(graph) - 1:
            raise PreconditionError(f"not a tree: {len(graph)} nodes, {len(graph.edges)} edges")
        if root is not None and root not in graph:
            raise PreconditionError(f"root {root} not in tree")
        self.graph = graph
        self.root = root
        anchor = graph.nodes[0] if root is None else root
        up = {anchor: None}
        depth = {anchor: 0}
        order = [anchor]
        queue = deque([anchor])
        while queue:
            u = queue.popleft()
            for v in graph.neighbors(u):
                if v not in up:
                    up[v] = u
                    depth[v] = depth[u] + 1
                    order.append(v)
                    queue.append(v)
        if len(order) != len(graph):
            raise PreconditionError("not a tree: disconnected")
        self._up = up
        self._depth = depth
        self._order = tuple(order)

    @classmethod
    def from_edges(cls, nodes, edges, root=None, labels=None):
        return cls(UndirGraph(nodes, edges, labels), root)

    @property
    def nodes(self):
        return self.graph.nodes

    @property
    def edges(self):
        return self.graph.edges

    @property
    def parent(self):
        if self.root is None:
            return None
        return dict(self._up)

    def children(self, v):
        if self.root is None:
            raise PreconditionError("children() needs a rooted tree")
        return tuple(u for u in self.graph.neighbors(v) if self._up.get(u) == v)

    def depth(self, v):
        if self.root is None:
            raise PreconditionError("depth() needs a rooted tree")
        return self._depth[v]

    def bfs_order(self):
        return self._order

    def leaves(self):
        if len(self.graph) == 1:
            return self.graph.nodes
        return tuple(v for v in self.graph.nodes if self.graph.degree(v) == 1)

    def rerooted(self, root):
        return Tree(self.graph, root)

    def path(self, u, v):
        if u not in self.graph or v not in self.graph:
            raise PreconditionError(f"path endpoints ({u}, {v}) not in tree")
        head, tail = [u], [v]
        a, b = u, v
        while self._depth[a] > self._depth[b]:
            a = self._up[a]
            head.append(a)
        while self._depth[b] > self._depth[a]:
            b = self._up[b]
            tail.append(b)
        while a != b:
            a = self._up[a]
            b = self._up[b]
            head.append(a)
            tail.append(b)
        tail.pop()
        return head + tail[::-1]


def tree_path(t, u, v):
    """Node sequence from u to v, both ends included."""
    return t.path(u, v)


def high_degree_excess(t):
    """Returns (sum of d(v) - 2 over nodes of degree at least 3, number of leaves)."""
    excess = sum(t.graph.degree(v) - 2 for v in t.nodes if t.graph.degree(v) >= 3)
    return excess, len(t.leaves())


class BlockCutTree:
    def __init__(self, tree, kinds, node_map):
        self.tree = tree
        self.kinds = kinds
        self.node_map = node_map

    @property
    def cut_ids(self):
        return tuple(i for i, (kind, _) in sorted(self.kinds.items()) if kind == "cut")

    @property
    def block_ids(self):
        return tuple(i for i, (kind, _) in sorted(self.kinds.items()) if kind == "block")

    def is_cut(self, i):
        return self.kinds[i][0] == "cut"

    def members(self, i):
        kind, payload = self.kinds[i]
        return frozenset([payload]) if kind == "cut" else payload

    def image(self, v):
        return self.node_map[v]


def block_cut_tree(g):
    if not g.is_connected():
        raise PreconditionError("block-cut tree needs a connected graph")
    graph = g.to_networkx()
    cuts = sorted(nx.articulation_points(graph))
    blocks = sorted(tuple(sorted(b)) for b in nx.biconnected_components(graph))
    if not blocks:
        blocks = [tuple(g.nodes)]
    kinds, labels, node_map = {}, {}, {}
    for i, c in enumerate(cuts):
        kinds[i] = ("cut", c)
        labels[i] = f"c:{g.label(c)}"
        node_map[c] = i
    edges = []
    cut_set = set(cuts)
    for j, block in enumerate(blocks, start=len(cuts)):
        kinds[j] = ("block", frozenset(block))
        labels[j] = "B:{" + ",".join(g.label(v) for v in block) + "}"
        for v in block:
            if v in cut_set:
                edges.append((node_map[v], j))
            else:
                node_map[v] = j
    tree = Tree(UndirGraph(kinds, edges, labels))
    logger.debug("block-cut tree: %d cut nodes, %d blocks", len(cuts), len(blocks))
    return BlockCutTree(tree, kinds, node_map)


def is_two_node_connected(g):
    if len(g) < 3 or not g.is_connected():
        return False
    return not any(True for _ in nx.articulation_points(g.to_networkx()))


def is_cactus(g):
    """Connected graph whose every block is a cycle. A lone node has no cycle and is not a cactus."""
    if len(g) < 3 or not g.is_connected():
        return False
    for block_edges in nx.biconnected_component_edges(g.to_networkx()):
        block_nodes = {v for e in block_edges for v in e}
        if len(block_nodes) < 3 or len(block_edges) != len(block_nodes):
            return False
    return True


class UnionFind:
    """Disjoint sets with path compression and union by size."""
    def __init__(self, items=()):
        self.parents = {}
        self.sizes = {}
        for item in items:
            self.add(item)

    def add(self, item):
        if item not in self.parents:
            self.parents[item] = item
            self.sizes[item] = 1

    def find(self, item):
        self.add(item)
        root = item
        while self.parents[root] != root:
            root = self.parents[root]
        while self.parents[item] != root:
            self.parents[item], item = root, self.parents[item]
        return root

    def union(self, a, b, keep=None):
        """Merges the sets of a and b. `keep` forces which root survives."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if keep is not None:
            rk = self.find(keep)
            winner, loser = (ra, rb) if rk == ra else (rb, ra)
        elif self.sizes[ra] >= self.sizes[rb]:
            winner, loser = ra, rb
        else:
            winner, loser = rb, ra
        self.parents[loser] = winner
        self.sizes[winner] += self.sizes[loser]
        return winner

    def connected(self, a, b):
        return self.find(a) == self.find(b)

    def groups(self):
        out = {}
        for item in self.parents:
            out.setdefault(self.find(item), set()).add(item)
        return out


def edge_connectivity_at_least(nodes, edges, k):
    """
    Exact test on a multigraph given as an edge list (parallel edges allowed):
    the graph stays connected after deleting any k - 1 edges. Parallel edges
    become one edge weighted by multiplicity and the global minimum cut is
    taken with Stoer-Wagner.
    """
    nodes = list(nodes)
    if len(nodes) <= 1:
        return True
    uf = UnionFind(nodes)
    multi = nx.Graph()
    multi.add_nodes_from(nodes)
    for u, v in edges:
        if u == v:
            continue
        uf.union(u, v)
        weight = multi.edges[u, v]["weight"] + 1 if multi.has_edge(u, v) else 1
        multi.add_edge(u, v, weight=weight)
    if len({uf.find(v) for v in nodes}) > 1:
        return k <= 0
    cut, _ = nx.stoer_wagner(multi)
    return cut >= k


def prufer_edges(seq, n):
    """Edges of the labelled tree on 0..n-1 with the given Prüfer sequence."""
    seq = list(seq)
    if n < 2 or len(seq) != n - 2:
        raise PreconditionError(f"a Prüfer sequence for {n} nodes has {max(n - 2, 0)} entries, got {len(seq)}")
    return sorted(edge_key(u, v) for u, v in nx.from_prufer_sequence(seq).edges())


_HARMONIC = [Fraction(0)]


def harmonic(n):
    if n < 1:
        raise PreconditionError(f"harmonic number needs n >= 1, got {n}")
    while len(_HARMONIC) <= n:
        _HARMONIC.append(_HARMONIC[-1] + Fraction(1, len(_HARMONIC)))
    return _HARMONIC[n]


def harmonic_concavity_holds(limit=50, weights=(0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1)):
    for x1 in range(1, limit + 1):
        for x2 in range(1, limit + 1):
            for lam in weights:
                lam = Fraction(lam)
                mixed = lam * harmonic(x1) + (1 - lam) * harmonic(x2)
                if mixed > harmonic(math.ceil(lam * x1 + (1 - lam) * x2)):
                    logger.warning("concavity fails at x1=%d x2=%d lambda=%s", x1, x2, lam)
                    return False
    return True
