import pytest

from src.graphs import PreconditionError, Tree, UndirGraph
from src.reductions import (CaInstance, LinkSet, block_tap_to_ca_steiner, cacap_to_ca_steiner, forward_image,
                            lift_solution, prune_baseline, reduce_one_node_cap, steiner_connects,
                            validate_ca_instance, verify_augmentation)
from src.verify import trial_reductions

C4 = UndirGraph(range(4), [(0, 1), (1, 2), (2, 3), (3, 0)])
STAR = UndirGraph(range(4), [(0, 1), (0, 2), (0, 3)])
TRIANGLE_LINKS = LinkSet([(1, 2), (1, 3), (2, 3)])


def test_already_two_node_connected():
    k3 = UndirGraph(range(3), [(0, 1), (1, 2), (0, 2)])
    inst, trace = reduce_one_node_cap(k3, LinkSet([]))
    assert inst is None
    assert trace.trivial


def test_path_with_one_link():
    path = UndirGraph(range(3), [(0, 1), (1, 2)])
    inst, trace = reduce_one_node_cap(path, LinkSet([(0, 2)]))
    assert len(inst.terminals) == 2
    assert len(inst.steiner) == 1
    (s,) = inst.steiner
    assert set(inst.graph.neighbors(s)) == set(inst.terminals)
    assert lift_solution({s}, trace) == LinkSet([(0, 2)])
    assert verify_augmentation(path, lift_solution({s}, trace))


def test_star_gives_triangle_of_steiner_nodes():
    inst, trace = reduce_one_node_cap(STAR, TRIANGLE_LINKS)
    assert len(inst.terminals) == 3
    assert len(inst.steiner) == 3
    steiner = sorted(inst.steiner)
    for i, a in enumerate(steiner):
        for b in steiner[i + 1:]:
            assert inst.graph.has_edge(a, b)
    assert validate_ca_instance(inst).ok
    assert not trace.metadata["self_images"]


def test_block_tap_on_star_tree():
    tree = Tree.from_edges(range(4), [(0, 1), (0, 2), (0, 3)])
    inst, trace = block_tap_to_ca_steiner(tree, TRIANGLE_LINKS)
    assert sorted(trace.back_map.values()) == list(TRIANGLE_LINKS)
    for s in inst.steiner:
        assert len(inst.terminal_neighbors(s)) == 2


def test_links_inside_a_block_are_dropped():
    graph = UndirGraph(range(4), [(0, 1), (1, 2), (2, 0), (2, 3)])
    inst, trace = reduce_one_node_cap(graph, LinkSet([(0, 1), (0, 3)]))
    assert trace.link_to_tap[0] is None
    assert trace.metadata["self_images"] == 1
    assert forward_image([0], trace) == set()
    assert len(forward_image([1], trace)) == 1
    assert len(inst.steiner) == 1


def test_crossing_diagonals_of_a_square():
    inst, trace = cacap_to_ca_steiner(C4, LinkSet([(0, 2), (1, 3)]))
    assert len(inst.terminals) == 4
    a, b = sorted(inst.steiner)
    assert inst.graph.has_edge(a, b)
    assert steiner_connects(inst, {a, b})
    assert verify_augmentation(C4, LinkSet([(0, 2), (1, 3)]), "edge")


def test_parallel_chords_do_not_cross():
    inst, _ = cacap_to_ca_steiner(C4, LinkSet([(0, 1), (2, 3)]))
    a, b = sorted(inst.steiner)
    assert not inst.graph.has_edge(a, b)
    assert not steiner_connects(inst, {a, b})


TWO_SQUARES = UndirGraph(range(7), [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 5), (5, 6), (6, 0)])


def test_links_meeting_at_a_cut_node_cross():
    inst, trace = cacap_to_ca_steiner(TWO_SQUARES, LinkSet([(0, 2), (0, 5)]))
    steiner_of = {link: s for s, link in trace.back_map.items()}
    assert inst.graph.has_edge(steiner_of[(0, 2)], steiner_of[(0, 5)])


def test_projections_meeting_at_a_cut_node_cross():
    three_squares = UndirGraph(range(10), list(TWO_SQUARES.edges) + [(0, 7), (7, 8), (8, 9), (9, 0)])
    inst, trace = cacap_to_ca_steiner(three_squares, LinkSet([(1, 5), (0, 8)]))
    steiner_of = {link: s for s, link in trace.back_map.items()}
    assert inst.graph.has_edge(steiner_of[(1, 5)], steiner_of[(0, 8)])


def test_feasible_links_on_glued_cycles_connect_the_terminals():
    links = LinkSet([(0, 2), (1, 3), (0, 5), (4, 6)])
    assert verify_augmentation(TWO_SQUARES, links, "edge")
    inst, _ = cacap_to_ca_steiner(TWO_SQUARES, links)
    assert len(inst.terminals) == 6
    assert steiner_connects(inst, inst.steiner)


def test_cacap_needs_a_cactus():
    k4 = UndirGraph(range(4), [(a, b) for a in range(4) for b in range(a + 1, 4)])
    with pytest.raises(PreconditionError):
        cacap_to_ca_steiner(k4, LinkSet([]))


def test_validation_reports_each_violation():
    joined = CaInstance(UndirGraph(range(3), [(0, 1), (1, 2)]), [0, 1], [2])
    assert validate_ca_instance(joined).terminal_edges == [(0, 1)]

    crowded = CaInstance(UndirGraph(range(4), [(0, 3), (1, 3), (2, 3)]), [0, 1, 2], [3])
    assert validate_ca_instance(crowded).crowded_steiner == [(3, 3)]

    open_pair = CaInstance(UndirGraph(range(3), [(0, 1), (0, 2)]), [0], [1, 2])
    report = validate_ca_instance(open_pair)
    assert report.open_neighborhoods == [(0, (1, 2))]
    assert not report.ok


def test_augmentation_modes():
    assert not verify_augmentation(C4, LinkSet([(0, 2)]), "edge")
    assert verify_augmentation(C4, LinkSet([]), "node")
    with pytest.raises(PreconditionError):
        verify_augmentation(C4, LinkSet([]), "both")


def test_prune_baseline_drops_redundant_links():
    kept = prune_baseline(STAR, TRIANGLE_LINKS)
    assert list(kept) == [(1, 2), (1, 3)]
    assert verify_augmentation(STAR, kept)


def test_link_set_rejects_bad_weights():
    with pytest.raises(PreconditionError):
        LinkSet([(0, 1)], [2])
    with pytest.raises(PreconditionError):
        LinkSet([(3, 3)])


def test_lift_rejects_unknown_steiner_node():
    _, trace = reduce_one_node_cap(STAR, TRIANGLE_LINKS)
    with pytest.raises(PreconditionError):
        lift_solution({99}, trace)


@pytest.mark.parametrize("trial", range(4))
def test_reduction_equivalence_on_random_inputs(trial):
    assert all(check.passed for check in trial_reductions(trial, 11))


@pytest.mark.parametrize("trial", [149, 161, 183])
def test_reduction_equivalence_on_glued_cacap_inputs(trial):
    assert all(check.passed for check in trial_reductions(trial, 0))
