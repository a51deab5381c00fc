"""
Reductions from 1-Node-CAP (through {0,1}-weighted Block-TAP) and from CacAP
to CA-Node-Steiner-Tree, and the lifting of Steiner solutions back to links.
"""
import logging
from collections import deque, namedtuple

from src.graphs import (ConsistencyError, InfeasibleError, PreconditionError, UndirGraph,
                        block_cut_tree, connects_all, edge_connectivity_at_least, edge_key, is_cactus,
                        is_two_node_connected)

logger = logging.getLogger(__name__)


class LinkSet:
    """Candidate links over a base graph, each of weight class 0 or 1."""
    def __init__(self, links, weights=None):
        links = tuple(edge_key(int(u), int(v)) for u, v in links)
        if any(u == v for u, v in links):
            raise PreconditionError("a link needs two distinct endpoints")
        weights = tuple(int(w) for w in weights) if weights is not None else (1,) * len(links)
        if len(weights) != len(links) or any(w not in (0, 1) for w in weights):
            raise PreconditionError("link weights must be 0 or 1, one per link")
        self.links = links
        self.weights = weights

    def __len__(self):
        return len(self.links)

    def __iter__(self):
        return iter(self.links)

    def __getitem__(self, i):
        return self.links[i]

    def __eq__(self, other):
        return isinstance(other, LinkSet) and self.links == other.links and self.weights == other.weights

    def __repr__(self):
        return f"LinkSet({list(self.links)})"

    def subset(self, indices):
        indices = sorted(indices)
        return LinkSet([self.links[i] for i in indices], [self.weights[i] for i in indices])

    def weight_one(self):
        return tuple(i for i, w in enumerate(self.weights) if w == 1)


class CaInstance:
    """
    A CA-Node-Steiner-Tree instance. `back_map` sends each Steiner node to the
    link it stands for, or is None for synthetic instances.
    """
    def __init__(self, graph, terminals, steiner, back_map=None):
        terminals = frozenset(terminals)
        steiner = frozenset(steiner)
        if terminals & steiner or (terminals | steiner) != set(graph.nodes):
            raise PreconditionError("terminals and Steiner nodes must partition the node set")
        self.graph = graph
        self.terminals = terminals
        self.steiner = steiner
        self.back_map = dict(back_map) if back_map is not None else None

    def __repr__(self):
        return f"CaInstance(|R|={len(self.terminals)}, |S|={len(self.steiner)})"

    def sorted_terminals(self):
        return tuple(sorted(self.terminals))

    def terminal_neighbors(self, v):
        return tuple(u for u in self.graph.neighbors(v) if u in self.terminals)

    def steiner_neighbors(self, v):
        return tuple(u for u in self.graph.neighbors(v) if u in self.steiner)

    def is_tree_shaped(self):
        return self.graph.is_connected() and len(self.graph.edges) == len(self.graph) - 1


ValidationReport = namedtuple("ValidationReport", ["terminal_edges", "crowded_steiner", "open_neighborhoods"])
ValidationReport.ok = property(lambda self: not (self.terminal_edges or self.crowded_steiner or self.open_neighborhoods))


def validate_ca_instance(inst):
    g = inst.graph
    terminal_edges = [(u, v) for u, v in g.edges if u in inst.terminals and v in inst.terminals]
    crowded = []
    for s in sorted(inst.steiner):
        count = len(inst.terminal_neighbors(s))
        if count > 2:
            crowded.append((s, count))
    open_pairs = []
    for t in sorted(inst.terminals):
        around = g.neighbors(t)
        for i, a in enumerate(around):
            for b in around[i + 1:]:
                if not g.has_edge(a, b):
                    open_pairs.append((t, (a, b)))
    return ValidationReport(terminal_edges, crowded, open_pairs)


ReductionTrace = namedtuple("ReductionTrace", [
    "kind",            # "one-node-cap" | "block-tap" | "cacap"
    "trivial",         # input already has the target connectivity
    "block_cut",       # BlockCutTree of the 1-Node-CAP input, else None
    "tree",            # Block-TAP tree, else None
    "tap_links",       # weighted Block-TAP links, else None
    "base_links",      # the links as given by the caller
    "link_to_tap",     # base link index -> Block-TAP link index, or None for self-images
    "tap_to_link",     # weight-1 Block-TAP link index -> representative base link index
    "steiner_to_tap",  # Steiner id -> Block-TAP link index (CacAP: base link index)
    "back_map",        # Steiner id -> base link pair
    "metadata",
])


def _path_edges(t, u, v):
    nodes = t.path(u, v)
    return frozenset(edge_key(a, b) for a, b in zip(nodes, nodes[1:]))


def _as_pairs(links):
    return list(links.links) if isinstance(links, LinkSet) else [edge_key(u, v) for u, v in links]


def one_node_cap_to_block_tap(g, links):
    if not g.is_connected():
        raise PreconditionError("1-Node-CAP needs a connected graph")
    if len(g) < 3:
        raise PreconditionError("1-Node-CAP needs at least 3 nodes")
    for u, v in links:
        if u not in g or v not in g:
            raise PreconditionError(f"link ({u}, {v}) references an unknown node")
    if is_two_node_connected(g):
        logger.info("input graph already 2-node-connected, nothing to augment")
        trace = ReductionTrace("one-node-cap", True, None, None, LinkSet(()), links,
                               (None,) * len(links), {}, {}, {}, {})
        return None, LinkSet(()), trace

    bct = block_cut_tree(g)
    preimages = {}
    images = []
    for i, (u, v) in enumerate(links):
        a, b = bct.image(u), bct.image(v)
        if a == b:
            images.append(None)
            continue
        key = edge_key(a, b)
        images.append(key)
        preimages.setdefault(key, []).append(i)
    image_keys = sorted(preimages)
    tap_index = {key: j for j, key in enumerate(image_keys)}
    tap_to_link = {tap_index[key]: min(ids, key=lambda i: (links[i], i)) for key, ids in preimages.items()}

    zero_links = []
    for block in bct.block_ids:
        cuts = sorted(c for c in bct.tree.graph.neighbors(block))
        zero_links.extend((a, b) for j, a in enumerate(cuts) for b in cuts[j + 1:])
    tap_links = LinkSet(image_keys + zero_links, [1] * len(image_keys) + [0] * len(zero_links))
    link_to_tap = tuple(None if key is None else tap_index[key] for key in images)
    logger.debug("Block-TAP: %d weight-1 links, %d weight-0 links, %d self-images dropped",
                 len(image_keys), len(zero_links), sum(key is None for key in images))
    trace = ReductionTrace("one-node-cap", False, bct, bct.tree, tap_links, links,
                           link_to_tap, tap_to_link, {}, {}, {"self_images": images.count(None)})
    return bct.tree, tap_links, trace


def block_tap_to_ca_steiner(t, links):
    leaves = t.leaves()
    if len(leaves) < 2:
        raise PreconditionError("Block-TAP tree needs at least 2 leaves")
    g = t.graph
    leaf_edges = sorted({edge_key(leaf, g.neighbors(leaf)[0]) for leaf in leaves})
    terminal_of = {e: i for i, e in enumerate(leaf_edges)}
    ones = links.weight_one()
    steiner_of = {j: len(leaf_edges) + pos for pos, j in enumerate(ones)}
    paths = [_path_edges(t, u, v) for u, v in links]

    edges = set()
    for j in ones:
        for e in paths[j]:
            if e in terminal_of:
                edges.add((steiner_of[j], terminal_of[e]))

    # short-cut: links whose paths share a tree edge become adjacent
    on_edge = {}
    for j, path in enumerate(paths):
        for e in path:
            on_edge.setdefault(e, []).append(j)
    link_adj = {j: set() for j in range(len(links))}
    for members in on_edge.values():
        for a in members:
            link_adj[a].update(members)
    for j in link_adj:
        link_adj[j].discard(j)

    shortcut = 0
    for a in ones:
        for b in link_adj[a]:
            if links.weights[b] == 1 and a < b:
                edges.add((steiner_of[a], steiner_of[b]))
                shortcut += 1

    bridged = 0
    for a in ones:
        seen = set()
        queue = deque(b for b in link_adj[a] if links.weights[b] == 0)
        seen.update(queue)
        while queue:
            z = queue.popleft()
            for b in link_adj[z]:
                if links.weights[b] == 0 and b not in seen:
                    seen.add(b)
                    queue.append(b)
                elif links.weights[b] == 1 and b != a:
                    pair = edge_key(steiner_of[a], steiner_of[b])
                    if pair not in edges:
                        edges.add(pair)
                        bridged += 1

    labels = {i: f"e({g.label(a)},{g.label(b)})" for (a, b), i in terminal_of.items()}
    labels.update({steiner_of[j]: f"l({g.label(links[j][0])},{g.label(links[j][1])})" for j in ones})
    graph = UndirGraph(range(len(leaf_edges) + len(ones)), edges, labels)
    back_map = {steiner_of[j]: links[j] for j in ones}
    inst = CaInstance(graph, terminal_of.values(), steiner_of.values(), back_map)
    report = validate_ca_instance(inst)
    if not report.ok:
        raise ConsistencyError(f"Block-TAP reduction produced an invalid CA instance: {report}")
    steiner_to_tap = {s: j for j, s in steiner_of.items()}
    trace = ReductionTrace("block-tap", False, None, t, links, links, tuple(range(len(links))),
                           {j: j for j in ones}, steiner_to_tap, back_map,
                           {"shortcut_edges": shortcut, "bridged_edges": bridged})
    return inst, trace


def reduce_one_node_cap(g, links):
    """1-Node-CAP straight to CA-Node-Steiner-Tree. Returns (None, trace) when g is already 2NC."""
    links = links if isinstance(links, LinkSet) else LinkSet(links)
    tree, tap_links, first = one_node_cap_to_block_tap(g, links)
    if first.trivial:
        return None, first
    inst, second = block_tap_to_ca_steiner(tree, tap_links)
    back_map = {s: links[first.tap_to_link[j]] for s, j in second.steiner_to_tap.items()}
    inst = CaInstance(inst.graph, inst.terminals, inst.steiner, back_map)
    trace = first._replace(steiner_to_tap=second.steiner_to_tap, back_map=back_map,
                           metadata={**first.metadata, **second.metadata})
    return inst, trace


def _cycle_order(g, block):
    start = min(block)
    order = [start]
    prev, cur = None, start
    while True:
        step = [v for v in g.neighbors(cur) if v in block and v != prev]
        nxt = min(step)
        if nxt == start or len(order) == len(block):
            break
        order.append(nxt)
        prev, cur = cur, nxt
    return {v: i for i, v in enumerate(order)}


def _projections(bct, u, v):
    route = bct.tree.path(bct.image(u), bct.image(v))
    points = [u] + [next(iter(bct.members(x))) for x in route[1:-1] if bct.is_cut(x)] + [v]
    blocks = [x for x in route if not bct.is_cut(x)]
    return [(b, p, q) for b, p, q in zip(blocks, points, points[1:])]


def _cross(order, first, second):
    p, q = first
    a, b = second
    if {p, q} & {a, b}:
        return True
    lo, hi = sorted((order[p], order[q]))
    inside = [lo < order[x] < hi for x in (a, b)]
    return inside[0] != inside[1]


def cacap_to_ca_steiner(cactus, links):
    if not is_cactus(cactus):
        raise PreconditionError("CacAP needs a cactus")
    links = links if isinstance(links, LinkSet) else LinkSet(links)
    for u, v in links:
        if u not in cactus or v not in cactus:
            raise PreconditionError(f"link ({u}, {v}) references an unknown node")
    bct = block_cut_tree(cactus)
    orders = {b: _cycle_order(cactus, bct.members(b)) for b in bct.block_ids}
    terminals = [v for v in cactus.nodes if cactus.degree(v) == 2]
    terminal_of = {v: i for i, v in enumerate(terminals)}
    steiner_of = {j: len(terminals) + j for j in range(len(links))}

    edges = set()
    projections, touched = [], []
    for j, (u, v) in enumerate(links):
        for end in (u, v):
            if end in terminal_of:
                edges.add((steiner_of[j], terminal_of[end]))
        by_block = {}
        for b, p, q in _projections(bct, u, v):
            by_block.setdefault(b, []).append((p, q))
        projections.append(by_block)
        touched.append({x for pairs in by_block.values() for pair in pairs for x in pair})

    crossings = 0
    for a in range(len(links)):
        for b in range(a + 1, len(links)):
            shared = set(projections[a]) & set(projections[b])
            # projections meeting at a node cross, on one cycle or across glued cycles
            if touched[a] & touched[b] or any(_cross(orders[blk], x, y) for blk in shared
                   for x in projections[a][blk] for y in projections[b][blk]):
                edges.add((steiner_of[a], steiner_of[b]))
                crossings += 1

    labels = {i: cactus.label(v) for v, i in terminal_of.items()}
    labels.update({steiner_of[j]: f"l({cactus.label(u)},{cactus.label(v)})" for j, (u, v) in enumerate(links)})
    graph = UndirGraph(range(len(terminals) + len(links)), edges, labels)
    back_map = {s: links[j] for j, s in steiner_of.items()}
    inst = CaInstance(graph, terminal_of.values(), steiner_of.values(), back_map)
    report = validate_ca_instance(inst)
    if not report.ok:
        raise ConsistencyError(f"CacAP reduction produced an invalid CA instance: {report}")
    trace = ReductionTrace("cacap", False, bct, None, None, links, tuple(range(len(links))),
                           {j: j for j in range(len(links))}, {s: j for j, s in steiner_of.items()},
                           back_map, {"crossings": crossings})
    return inst, trace


def forward_image(link_indices, trace):
    """Steiner ids standing for the given base links; self-images have none."""
    tap_to_steiner = {j: s for s, j in trace.steiner_to_tap.items()}
    out = set()
    for i in link_indices:
        tap = trace.link_to_tap[i]
        if tap is not None and tap in tap_to_steiner:
            out.add(tap_to_steiner[tap])
    return out


def lift_solution(steiner_nodes, trace):
    picked = []
    for s in sorted(steiner_nodes):
        if s not in trace.back_map:
            raise PreconditionError(f"Steiner node {s} has no preimage link")
        picked.append(trace.back_map[s])
    return LinkSet(picked)


def verify_augmentation(g, links, mode="node"):
    """
    mode="node": g plus links is 2-node-connected.
    mode="edge": g plus links is 3-edge-connected, i.e. the cactus gained one
    unit of edge connectivity. Parallel links count separately.
    """
    pairs = _as_pairs(links)
    if mode == "node":
        return is_two_node_connected(g.with_edges(pairs))
    if mode == "edge":
        return g.is_connected() and edge_connectivity_at_least(g.nodes, list(g.edges) + pairs, 3)
    raise PreconditionError(f"unknown augmentation mode {mode!r}")


def prune_baseline(g, links, mode="node"):
    """Start from every link and drop links, last index first, while the augmentation stays feasible."""
    links = links if isinstance(links, LinkSet) else LinkSet(links)
    keep = list(range(len(links)))
    if not verify_augmentation(g, links, mode):
        raise InfeasibleError("even the full link set does not augment the graph")
    for i in reversed(range(len(links))):
        trial = [j for j in keep if j != i]
        if verify_augmentation(g, links.subset(trial), mode):
            keep = trial
    return links.subset(keep)


def steiner_connects(inst, steiner_nodes):
    return connects_all(inst.graph, set(inst.terminals) | set(steiner_nodes), inst.terminals)
