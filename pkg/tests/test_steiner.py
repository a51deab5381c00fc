from fractions import Fraction

import pytest

from src.graphs import CapExceededError, InfeasibleError, PreconditionError, Tree, UndirGraph
from src.instances import gen_path_family, gen_random_binary_tree, gen_random_tree_instance
from src.reductions import CaInstance, steiner_connects
from src.steiner import (RestrictedComponent, brute_force_opt, enumerate_components, exact_steiner,
                         intermediate_leaf_counts, k_restricted_decompose, leaf_map, leaf_map_disjoint,
                         lower_bound_holds, normalize_terminal_leaves, restricted_tree_feasible, tree_optimum)


def test_exact_steiner_on_path_family(path_family_3):
    tree = exact_steiner(path_family_3, path_family_3.terminals)
    assert tree.cost == 3
    assert steiner_connects(path_family_3, tree.steiner)
    assert len(tree.edges) == len(tree.nodes) - 1


def test_exact_steiner_caps_and_infeasibility(path_family_3):
    with pytest.raises(CapExceededError):
        exact_steiner(path_family_3, path_family_3.terminals, cap=2)
    apart = CaInstance(UndirGraph(range(4), [(0, 2), (1, 3)]), [0, 1], [2, 3])
    with pytest.raises(InfeasibleError):
        exact_steiner(apart, [0, 1])


@pytest.mark.parametrize("seed", range(5))
def test_solvers_agree_on_tree_instances(seed):
    inst = gen_random_tree_instance(4, seed)
    cost = tree_optimum(inst).cost
    assert exact_steiner(inst, inst.terminals).cost == cost
    assert brute_force_opt(inst).cost == cost
    assert lower_bound_holds(inst, cost)


def test_two_terminals_give_one_component_per_sink(single_node):
    components = enumerate_components(single_node, 2, 1)
    assert len(components) == 2
    assert {c.sink for c in components} == {1, 2}
    assert all(c.cost == 1 and c.steiner == frozenset({0}) for c in components)


def test_enumeration_respects_k(path_family_3):
    root = min(path_family_3.terminals)
    components = enumerate_components(path_family_3, 3, root)
    assert max(len(c.terminals) for c in components) == 3
    assert all(c.sink in c.terminals for c in components)
    with pytest.raises(PreconditionError):
        enumerate_components(path_family_3, 1, root)
    with pytest.raises(PreconditionError):
        enumerate_components(path_family_3, 3, 0)


def test_tree_optimum_prunes_bare_steiner_leaves():
    graph = UndirGraph(range(5), [(0, 1), (1, 2), (0, 3), (0, 4)])
    inst = CaInstance(graph, [3, 4], [0, 1, 2])
    assert tree_optimum(inst).steiner == frozenset({0})


def test_normalize_rehangs_terminal_neighbours():
    graph = UndirGraph(range(4), [(0, 1), (0, 2), (1, 2), (2, 3)])
    inst = CaInstance(graph, [0, 3], [1, 2])
    tree = brute_force_opt(inst)
    assert tree.cost == 1
    wide = tree._replace(steiner=frozenset({1, 2}), edges=frozenset({(0, 1), (0, 2), (2, 3)}))
    fixed = normalize_terminal_leaves(wide, inst)
    assert fixed.edges == frozenset({(0, 1), (1, 2), (2, 3)})


def test_leaf_map_on_three_nodes():
    t = Tree.from_edges(range(3), [(0, 1), (0, 2)], root=0)
    assert leaf_map(t) == {0: 1}
    assert leaf_map_disjoint(t, leaf_map(t))


def test_leaf_map_on_complete_binary_tree():
    t = Tree.from_edges(range(15), [((v - 1) // 2, v) for v in range(1, 15)], root=0)
    f = leaf_map(t)
    assert sorted(f) == list(range(7))
    assert len(set(f.values())) == 7
    assert all(leaf >= 7 for leaf in f.values())
    assert leaf_map_disjoint(t, f)


@pytest.mark.parametrize("seed", range(6))
def test_leaf_map_on_random_binary_trees(seed):
    t = gen_random_binary_tree(3 + 4 * seed, seed)
    assert leaf_map_disjoint(t, leaf_map(t))


def test_leaf_map_needs_binary_tree():
    with pytest.raises(PreconditionError):
        leaf_map(Tree.from_edges(range(3), [(0, 1), (1, 2)], root=0))


def test_small_trees_are_their_own_decomposition():
    opt = tree_optimum(gen_path_family(2))
    decomp = k_restricted_decompose(opt, 2)
    assert decomp.costs == (2, 2)
    assert all(restricted_tree_feasible(tree, opt.terminals) for tree in decomp.trees)


def test_restricted_feasibility_checks_each_piece():
    piece = RestrictedComponent(None, frozenset({0, 1}), frozenset({2}), frozenset({(0, 2), (1, 2)}), 1, 2, ())
    assert restricted_tree_feasible([piece], {0, 1}, k=2)
    assert not restricted_tree_feasible([piece], {0, 1}, k=1)
    assert not restricted_tree_feasible([piece._replace(edges=frozenset({(0, 2)}))], {0, 1})
    through = RestrictedComponent(None, frozenset({0, 1, 3}), frozenset({2}),
                                  frozenset({(0, 1), (1, 2), (2, 3)}), 1, 3, ())
    assert not restricted_tree_feasible([through], {0, 1, 3})


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("m", [1, 2, 3])
def test_restricted_decomposition_bounds(seed, m):
    opt = tree_optimum(gen_random_tree_instance(12 + seed, seed))
    decomp = k_restricted_decompose(opt, m)
    assert min(decomp.costs) <= (1 + Fraction(4, m)) * opt.cost
    assert sum(decomp.costs) <= (m + 4) * opt.cost
    for tree in decomp.trees:
        assert restricted_tree_feasible(tree, opt.terminals, 2 ** m)
        assert all(len(c.terminals) <= 2 ** m for c in tree)
    assert all(count == 1 for count in intermediate_leaf_counts(decomp).values())
