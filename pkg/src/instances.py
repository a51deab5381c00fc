"""
Instance generators: the two lower-bound families (the Steiner path and the
five-layer tree) and seeded random trees, leaf-adjacent trees, Block-TAP,
1-Node-CAP and cactus inputs.
"""
import logging
import math
from collections import namedtuple
from fractions import Fraction

import numpy as np

from src.graphs import (InfeasibleError, PreconditionError, Tree, UndirGraph, edge_key, is_cactus,
                        is_two_node_connected, prufer_edges)
from src.reductions import CaInstance, LinkSet, verify_augmentation

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 50

TerminalProfile = namedtuple("TerminalProfile", ["leaf_two", "internal"])
DEFAULT_PROFILE = TerminalProfile(0.5, (0.6, 0.3, 0.1))
LEAF_ADJACENT_PROFILE = TerminalProfile(0.5, (0.0, 0.5, 0.5))

KINDS = ("path-family", "five-layer", "random-tree", "random-leaf-adjacent", "random-block-tap",
         "random-one-node-cap", "random-cacap")

GeneratorSpec = namedtuple("GeneratorSpec", ["kind", "t", "n", "link_count", "cycles", "seed", "leaf_adjacent"],
                           defaults=(None, None, None, None, 0, None))
Instance = namedtuple("Instance", ["kind", "graph", "links", "terminals", "metadata"])


def ca(instance):
    if instance.kind != "ca":
        raise PreconditionError(f"a {instance.kind} instance is not a CA instance")
    terminals = frozenset(instance.terminals)
    return CaInstance(instance.graph, terminals, [v for v in instance.graph.nodes if v not in terminals])


def _attach(n, edges, counts, labels):
    """Hangs counts[s] terminals off every Steiner node s, numbered after the Steiner ids."""
    edges = list(edges)
    terminals = []
    for s in range(n):
        for _ in range(counts[s]):
            r = n + len(terminals)
            labels[r] = f"r{len(terminals)}"
            terminals.append(r)
            edges.append((s, r))
    graph = UndirGraph(range(n + len(terminals)), edges, labels)
    return CaInstance(graph, terminals, range(n))


def gen_path_family(t):
    """t Steiner nodes on a path, each carrying two terminals."""
    if t < 2:
        raise PreconditionError(f"path family needs t >= 2, got {t}")
    labels = {s: f"s{s + 1}" for s in range(t)}
    return _attach(t, [(s, s + 1) for s in range(t - 1)], [2] * t, labels)


def path_family_size(eps):
    eps = Fraction(str(eps))
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    return math.ceil(Fraction(2) / (3 * eps)) + 1


FIVE_LAYER_FANOUT = (9, 5, 4)


def gen_five_layer():
    """
    Root r with 9 children, each with 5 children, each with 4 children; every
    node of the last layer carries 2 terminals. Ids follow the lexicographic
    order of the layer indices, layer by layer.
    """
    labels = {0: "r"}
    edges = []
    layer = [(0, ())]
    for depth, fanout in enumerate(FIVE_LAYER_FANOUT):
        name = "xyz"[depth]
        nxt = []
        for parent, index in layer:
            for i in range(1, fanout + 1):
                v = len(labels)
                labels[v] = name + ".".join(str(j) for j in index + (i,))
                edges.append((parent, v))
                nxt.append((v, index + (i,)))
        layer = nxt
    n = len(labels)
    counts = [0] * n
    for v, _ in layer:
        counts[v] = 2
    return _attach(n, edges, counts, labels)


def five_layer_node(*index):
    """Id of the five-layer node with the given 1-based layer indices, e.g. (2, 2, 2) for z2.2.2."""
    if len(index) > len(FIVE_LAYER_FANOUT):
        raise PreconditionError(f"index {index} is deeper than the five-layer tree")
    offset, width, position = 0, 1, 0
    for fanout, i in zip(FIVE_LAYER_FANOUT, index):
        if not 1 <= i <= fanout:
            raise PreconditionError(f"index {index} outside the five-layer tree")
        offset += width
        width *= fanout
        position = position * fanout + i - 1
    return offset + position if index else 0


def random_tree_edges(n, rng):
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return prufer_edges(rng.integers(0, n, size=n - 2).tolist(), n)


def gen_random_tree_instance(n_steiner, seed=0, profile=DEFAULT_PROFILE):
    """
    A uniformly random Steiner tree with terminals hung off it. Every Steiner
    leaf carries a terminal, so the whole tree is the unique optimum.
    """
    if n_steiner < 1:
        raise PreconditionError("need at least one Steiner node")
    rng = np.random.default_rng(seed)
    edges = random_tree_edges(n_steiner, rng)
    degree = [0] * n_steiner
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    counts = []
    for s in range(n_steiner):
        if n_steiner == 1:
            counts.append(2)
        elif degree[s] == 1:
            counts.append(2 if rng.random() < profile.leaf_two else 1)
        else:
            counts.append(int(rng.choice(3, p=profile.internal)))
    return _attach(n_steiner, edges, counts, {s: f"s{s}" for s in range(n_steiner)})


def gen_random_leaf_adjacent(n_steiner, seed=0):
    return gen_random_tree_instance(n_steiner, seed, LEAF_ADJACENT_PROFILE)


def gen_random_binary_tree(n_internal, seed=0):
    """Random rooted tree where every internal node has exactly two children, grown by splitting leaves."""
    rng = np.random.default_rng(seed)
    leaves, edges, size = [0], [], 1
    for _ in range(n_internal):
        v = leaves.pop(int(rng.integers(len(leaves))))
        edges += [(v, size), (v, size + 1)]
        leaves += [size, size + 1]
        size += 2
    return Tree.from_edges(range(size), edges, root=0)


def _random_links(nodes, link_count, rng, taken, accept=lambda u, v: True):
    pool = [(u, v) for i, u in enumerate(nodes) for v in nodes[i + 1:] if (u, v) not in taken and accept(u, v)]
    if not pool:
        return []
    picks = rng.choice(len(pool), size=min(link_count, len(pool)), replace=False)
    return [pool[i] for i in sorted(picks.tolist())]


def _close_and_thin(graph, links, closure, mode):
    """Adds the closure links the random ones lack, then drops closure links while feasibility holds."""
    if verify_augmentation(graph, links, mode):
        return links
    extra = [e for e in closure if e not in links]
    full = links + extra
    if not verify_augmentation(graph, full, mode):
        raise InfeasibleError("closure links do not make the instance feasible")
    for e in reversed(extra):
        trial = [f for f in full if f != e]
        if verify_augmentation(graph, trial, mode):
            full = trial
    return full


def _cycle_links(nodes):
    nodes = sorted(nodes)
    return list(dict.fromkeys(edge_key(a, b) for a, b in zip(nodes, nodes[1:] + nodes[:1])))


def gen_random_block_tap(n, link_count, seed=0, leaf_adjacent=False):
    """Random tree on n nodes with links; the closure is a link cycle through the leaves."""
    if n < 3:
        raise PreconditionError("Block-TAP needs at least 3 tree nodes")
    rng = np.random.default_rng(seed)
    tree = Tree.from_edges(range(n), random_tree_edges(n, rng), labels={v: f"v{v}" for v in range(n)})
    leaves = set(tree.leaves())
    accept = (lambda u, v: u in leaves or v in leaves) if leaf_adjacent else (lambda u, v: True)
    links = _random_links(list(range(n)), link_count, rng, set(tree.edges), accept)
    links = _close_and_thin(tree.graph, links, _cycle_links(leaves), "node")
    return tree, LinkSet(links)


def gen_random_one_node_cap(n, link_count, seed=0, max_links=None):
    """
    Connected graph that is not 2-node-connected (a random tree plus a few
    chords) with a feasible link set; the closure is a Hamiltonian link cycle.
    """
    if n < 3:
        raise PreconditionError("1-Node-CAP needs at least 3 nodes")
    rng = np.random.default_rng(seed)
    labels = {v: f"v{v}" for v in range(n)}
    for attempt in range(MAX_ATTEMPTS):
        edges = set(random_tree_edges(n, rng))
        chords = int(rng.integers(0, n // 3 + 1))
        edges |= set(_random_links(list(range(n)), chords, rng, edges))
        graph = UndirGraph(range(n), edges, labels)
        if is_two_node_connected(graph):
            continue
        links = _random_links(list(range(n)), link_count, rng, edges)
        links = _close_and_thin(graph, links, [e for e in _cycle_links(range(n)) if e not in edges], "node")
        if max_links is not None and len(links) > max_links:
            continue
        logger.debug("1-Node-CAP instance after %d attempts: %d edges, %d links", attempt + 1, len(edges), len(links))
        return graph, LinkSet(links)
    raise InfeasibleError(f"no 1-Node-CAP instance with n={n} found in {MAX_ATTEMPTS} attempts")


def gen_random_cactus(cycles, rng):
    if not cycles or any(c < 3 for c in cycles):
        raise PreconditionError("cycle lengths must be at least 3")
    edges, size = [], 0
    for length in cycles:
        anchor = int(rng.integers(size)) if size else None
        ring = ([anchor] if anchor is not None else []) + list(range(size, size + length - (anchor is not None)))
        size += length - (anchor is not None)
        edges += [edge_key(a, b) for a, b in zip(ring, ring[1:] + ring[:1])]
    graph = UndirGraph(range(size), edges, {v: f"v{v}" for v in range(size)})
    if not is_cactus(graph):
        raise InfeasibleError("glued cycles do not form a cactus")
    return graph


def gen_random_cacap(cycles, link_count, seed=0, max_links=None):
    """Cycles glued at random nodes, plus links making the cactus 3-edge-connected."""
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_ATTEMPTS):
        cactus = gen_random_cactus(cycles, rng)
        nodes = list(cactus.nodes)
        links = _random_links(nodes, link_count, rng, set(cactus.edges))
        links = _close_and_thin(cactus, links, _cycle_links(nodes), "edge")
        if max_links is not None and len(links) > max_links:
            continue
        return cactus, LinkSet(links)
    raise InfeasibleError(f"no CacAP instance with cycles {list(cycles)} found in {MAX_ATTEMPTS} attempts")


def random_cycle_spec(nodes, rng):
    """Cycle lengths (each >= 3) whose glued cactus has about `nodes` nodes."""
    spec, size = [], 0
    while size < nodes or not spec:
        length = int(rng.integers(3, 6))
        spec.append(length)
        size += length - (1 if size else 0)
    return spec


def _from_ca(inst, metadata):
    return Instance("ca", inst.graph, None, inst.sorted_terminals(), metadata)


def generate(spec):
    """Dispatches a GeneratorSpec to its generator. Equal specs give equal instances."""
    meta = {key: value for key, value in spec._asdict().items() if value is not None}
    if spec.kind == "path-family":
        return _from_ca(gen_path_family(spec.t), meta)
    if spec.kind == "five-layer":
        return _from_ca(gen_five_layer(), {**meta, "root": five_layer_node(2, 2, 2)})
    if spec.kind == "random-tree":
        return _from_ca(gen_random_tree_instance(spec.n, spec.seed), meta)
    if spec.kind == "random-leaf-adjacent":
        return _from_ca(gen_random_leaf_adjacent(spec.n, spec.seed), meta)
    if spec.kind == "random-block-tap":
        tree, links = gen_random_block_tap(spec.n, spec.link_count, spec.seed, bool(spec.leaf_adjacent))
        return Instance("block-tap", tree.graph, links, (), meta)
    if spec.kind == "random-one-node-cap":
        graph, links = gen_random_one_node_cap(spec.n, spec.link_count, spec.seed)
        return Instance("one-node-cap", graph, links, (), meta)
    if spec.kind == "random-cacap":
        cycles = spec.cycles or random_cycle_spec(spec.n or 6, np.random.default_rng(spec.seed))
        graph, links = gen_random_cacap(cycles, spec.link_count, spec.seed)
        return Instance("cacap", graph, links, (), {**meta, "cycles": list(cycles)})
    raise PreconditionError(f"unknown generator kind {spec.kind!r}")
