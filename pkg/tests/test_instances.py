import pytest

from src.graphs import PreconditionError, is_cactus, is_two_node_connected
from src.instances import (GeneratorSpec, five_layer_node, gen_five_layer, gen_path_family, gen_random_binary_tree,
                           gen_random_block_tap, gen_random_cacap, gen_random_one_node_cap, gen_random_tree_instance,
                           generate, path_family_size)
from src.reductions import block_tap_to_ca_steiner, validate_ca_instance, verify_augmentation


def test_path_family_shape():
    inst = gen_path_family(3)
    assert len(inst.steiner) == 3
    assert len(inst.terminals) == 6
    assert inst.is_tree_shaped()
    assert inst.graph.label(0) == "s1"
    with pytest.raises(PreconditionError):
        gen_path_family(1)


def test_path_family_size():
    assert path_family_size(0.1) == 8
    with pytest.raises(PreconditionError):
        path_family_size(0)


def test_five_layer_shape():
    inst = gen_five_layer()
    assert len(inst.steiner) == 235
    assert len(inst.terminals) == 360
    assert five_layer_node(2, 2, 2) == 80
    assert five_layer_node() == 0
    assert inst.graph.label(80) == "z2.2.2"
    assert inst.graph.label(five_layer_node(9)) == "x9"
    assert len(inst.terminal_neighbors(80)) == 2
    with pytest.raises(PreconditionError):
        five_layer_node(10)


@pytest.mark.parametrize("seed", range(5))
def test_random_tree_instance(seed):
    inst = gen_random_tree_instance(15, seed)
    assert inst.is_tree_shaped()
    assert validate_ca_instance(inst).ok
    for s in inst.steiner:
        if len(inst.steiner_neighbors(s)) <= 1:
            assert inst.terminal_neighbors(s)


def test_single_steiner_tree_instance():
    inst = gen_random_tree_instance(1)
    assert len(inst.terminals) == 2


def test_binary_tree_is_regular():
    t = gen_random_binary_tree(6, 3)
    assert len(t.nodes) == 13
    assert all(len(t.children(v)) in (0, 2) for v in t.nodes)


@pytest.mark.parametrize("seed", range(3))
def test_random_augmentation_inputs_are_feasible(seed):
    tree, links = gen_random_block_tap(8, 3, seed)
    assert verify_augmentation(tree.graph, links, "node")

    graph, links = gen_random_one_node_cap(7, 3, seed)
    assert not is_two_node_connected(graph)
    assert verify_augmentation(graph, links, "node")

    cactus, links = gen_random_cacap([3, 4, 3], 2, seed)
    assert is_cactus(cactus)
    assert len(cactus) == 8
    assert verify_augmentation(cactus, links, "edge")


@pytest.mark.parametrize("seed", range(4))
def test_leaf_adjacent_block_tap_links_touch_leaves(seed):
    tree, links = gen_random_block_tap(9, 4, seed, leaf_adjacent=True)
    leaves = set(tree.leaves())
    assert all(u in leaves or v in leaves for u, v in links)
    inst, _ = block_tap_to_ca_steiner(tree, links)
    assert all(inst.terminal_neighbors(s) for s in inst.steiner)


def test_generate_passes_the_leaf_adjacent_flag():
    instance = generate(GeneratorSpec("random-block-tap", n=9, link_count=4, seed=2, leaf_adjacent=True))
    leaves = {v for v in instance.graph.nodes if instance.graph.degree(v) == 1}
    assert all(u in leaves or v in leaves for u, v in instance.links)
    assert instance.metadata["leaf_adjacent"] is True


def test_generate_is_deterministic():
    spec = GeneratorSpec("random-one-node-cap", n=7, link_count=3, seed=9)
    first, second = generate(spec), generate(spec)
    assert first.graph == second.graph
    assert first.links == second.links
    assert generate(GeneratorSpec("five-layer")).metadata["root"] == 80


def test_generate_unknown_kind():
    with pytest.raises(PreconditionError):
        generate(GeneratorSpec("grid"))
