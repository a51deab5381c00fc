from fractions import Fraction

import pytest

from src.graphs import CapExceededError, PreconditionError, Tree, UndirGraph, harmonic
from src.instances import five_layer_node, gen_five_layer, gen_path_family, gen_random_leaf_adjacent
from src.reductions import CaInstance
from src.steiner import SteinerTree, tree_optimum
from src.verify import FIVE_LAYER_EXPECTED, FIVE_LAYER_FLOOR, leaf_adjacent_block_tap_report
from src.witness import (GAMMA_BOUND, brute_force_gamma, build_witness, decompose_final_components,
                         invariant_base_case, prefix_bound_audit, psi, psi_argmax, rehang_leaf_adjacent,
                         strip_terminals, tree_following_witness, w_vector, witness_report)


def test_path_family_deterministic(path_family_3):
    tree = tree_optimum(path_family_3)
    witness = build_witness(tree)
    assert witness.final_edges == ((0, 1), (1, 2))
    assert len(witness.terminal_edges) == 5
    wv = w_vector(witness.tree, witness.finals, witness.final_edges)
    assert wv.values == {0: 2, 1: 3, 2: 2}
    report = witness_report(tree)
    assert report.h_average == Fraction(29, 18)
    assert report.passed
    assert report.to_dict()["h_average"] == "29/18"


@pytest.mark.parametrize("t", [2, 3, 5, 9])
def test_path_family_closed_form(t):
    tree = tree_optimum(gen_path_family(t))
    expected = harmonic(3) - Fraction(2, 3 * t)
    assert witness_report(tree, mode="deterministic").h_average == expected
    assert witness_report(tree, mode="tree-following").h_average == expected


def test_brute_force_matches_path_family():
    value, witness = brute_force_gamma(tree_optimum(gen_path_family(2)))
    assert value == Fraction(3, 2)
    assert len(witness.terminal_edges) == 3


def test_brute_force_cap(path_family_3):
    with pytest.raises(CapExceededError):
        brute_force_gamma(tree_optimum(path_family_3), cap=4)


def test_single_steiner_node(single_node):
    tree = tree_optimum(single_node)
    witness = build_witness(tree)
    assert witness.terminal_edges == ((1, 2),)
    assert witness.fragments == ()
    for mode in ("deterministic", "tree-following", "brute"):
        report = witness_report(tree, mode=mode)
        assert report.values == {0: 1}
        assert report.h_average == 1


def test_star_component(star):
    tree = tree_optimum(star(4))
    witness = build_witness(tree)
    (fragment,) = witness.fragments
    assert fragment.edges == ((1, 2), (2, 3), (2, 4))
    assert len(witness.terminal_edges) == 7
    report = witness_report(tree)
    assert report.values == {0: 3, 1: 2, 2: 4, 3: 2, 4: 2}
    assert report.h_average == Fraction(101, 60)
    (audit,) = report.audits
    assert audit.checked == 4
    assert not audit.failures
    assert audit.increase_ok and audit.dominance_ok and audit.unchanged_ok


def test_decomposition_splits_at_final_nodes(path_family_3):
    stripped, finals, rep = strip_terminals(tree_optimum(path_family_3))
    fcs = decompose_final_components(stripped, finals)
    assert [(c.root, c.leaves) for c in fcs.components] == [(0, (1,)), (1, (2,))]
    assert rep == {0: 3, 1: 5, 2: 7}


def test_decomposition_rejects_bare_leaves():
    tree = Tree.from_edges(range(3), [(0, 1), (1, 2)])
    with pytest.raises(PreconditionError):
        decompose_final_components(tree, {0, 1})
    with pytest.raises(PreconditionError):
        decompose_final_components(tree, {0, 1, 2}, root=1)


def test_five_layer_golden_value():
    inst = gen_five_layer()
    report = witness_report(tree_optimum(inst), root=five_layer_node(2, 2, 2))
    assert report.h_average == FIVE_LAYER_EXPECTED
    assert FIVE_LAYER_FLOOR < report.h_average < GAMMA_BOUND
    assert sorted(report.values.values()).count(15) == 1
    assert report.passed


def test_prefix_averages_stay_below_bound(path_family_3):
    ok, averages = prefix_bound_audit(build_witness(tree_optimum(path_family_3)))
    assert ok
    assert averages == [Fraction(3, 2), Fraction(29, 18)]


def test_invariant_constants():
    value, ok = invariant_base_case()
    assert value == Fraction(227, 120)
    assert ok
    assert psi_argmax(50) == 4
    assert psi(4) == Fraction(227, 120)
    assert psi(3) < psi(4) and psi(5) < psi(4)


@pytest.mark.parametrize("seed", range(5))
def test_tree_following_on_leaf_adjacent(seed):
    tree = tree_optimum(gen_random_leaf_adjacent(25, seed))
    witness = tree_following_witness(tree)
    assert len(witness.terminal_edges) == len(tree.terminals) - 1
    assert witness_report(tree, mode="tree-following").h_average <= harmonic(3)


CHAIN = SteinerTree(frozenset({0, 1}), frozenset({2, 3, 4}), frozenset({(0, 2), (2, 3), (3, 4), (1, 4)}))


def test_rehang_attaches_bare_steiner_node_to_a_terminal():
    inst = CaInstance(UndirGraph(range(5), [(0, 2), (0, 3), (2, 3), (3, 4), (1, 4)]), [0, 1], [2, 3, 4])
    rehung = rehang_leaf_adjacent(CHAIN, inst)
    assert rehung.edges == frozenset({(0, 2), (0, 3), (3, 4), (1, 4)})
    assert rehung.steiner == CHAIN.steiner
    assert witness_report(rehung, mode="tree-following").h_average <= harmonic(3)


def test_rehang_needs_an_instance_terminal():
    inst = CaInstance(UndirGraph(range(5), [(0, 2), (2, 3), (3, 4), (1, 4)]), [0, 1], [2, 3, 4])
    with pytest.raises(PreconditionError):
        rehang_leaf_adjacent(CHAIN, inst)


@pytest.mark.parametrize("seed", range(6))
def test_tree_following_on_leaf_adjacent_block_tap(seed):
    assert leaf_adjacent_block_tap_report(8, 3, seed).h_average <= harmonic(3)


def test_unknown_mode(path_family_3):
    with pytest.raises(PreconditionError):
        witness_report(tree_optimum(path_family_3), mode="greedy")


def test_csv_table(tmp_path, path_family_3):
    path = tmp_path / "w.csv"
    witness_report(tree_optimum(path_family_3)).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "node,w,H(w)"
    assert len(lines) == 4
