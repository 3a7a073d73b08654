import numpy as np
import pytest

from symlat.builders import (
    c2xc2_lattice,
    cyclic_chain_lattice,
    d4_action,
    d4_lattice,
    d4_pixel_action,
    d4_table,
    full_subgroup_lattice,
    icosahedral_axes,
    sl3_extended_lattice,
    so3_axes_lattice,
)
from symlat.errors import LatticeError, NotASupergroupError
from symlat.groups import (
    FiniteElement,
    GroupDescriptor,
    SamplerSpec,
    act,
    cyclic_table,
    default_sl3_generators,
)
from symlat.lattice import Lattice, SubgroupNode, add_top


def brute_closure(table, seed):
    """Independent subgroup closure used as the meet/join oracle."""
    members = set(seed) | {table.identity}
    changed = True
    while changed:
        changed = False
        for a in list(members):
            for b in list(members):
                c = int(table.table[a, b])
                if c not in members:
                    members.add(c)
                    changed = True
    return frozenset(members)


# ---------------------------------------------------------------------------
# builders vs brute force
# ---------------------------------------------------------------------------

def test_d4_lattice_matches_brute_force():
    hand = d4_lattice()
    shared = d4_table()
    brute = full_subgroup_lattice(shared, d4_action(table=shared), top_label="D4")
    assert len(hand) == 10 and len(brute) == 10
    hand_sets = {n.group.members: n.node_id for n in hand.nodes}
    brute_sets = {n.group.members: n.node_id for n in brute.nodes}
    assert set(hand_sets) == set(brute_sets)
    # identical cover relation under the member-set matching
    for a in hand.nodes:
        for b in hand.nodes:
            ha, hb = a.node_id, b.node_id
            ba, bb = brute_sets[a.group.members], brute_sets[b.group.members]
            assert hand.leq[ha, hb] == brute.leq[ba, bb]
            assert hand.covers[ha, hb] == brute.covers[ba, bb]


@pytest.mark.parametrize("table_builder", [
    lambda: cyclic_table(12),
    lambda: d4_table(),
    lambda: cyclic_table(16),
])
def test_small_group_brute_force_lattices_validate(table_builder):
    # construction itself checks the partial order, meets/joins against
    # member intersections/closures, and the absorption laws
    table = table_builder()
    from symlat.groups import ACTION_PLANAR, GroupAction
    angles = 2.0 * np.pi * np.arange(table.size) / table.size
    if table is None:
        return
    if table.size in (12, 16):
        group = GroupDescriptor("finite", "C", table=table)
        action = GroupAction(group, 2, ACTION_PLANAR, angles=angles, plane=(0, 1))
    else:
        action = d4_action(table=table)
    lat = full_subgroup_lattice(table, action)
    assert lat.node(lat.bottom).group.order == 1
    assert lat.node(lat.top).group.order == table.size


def test_meet_join_against_element_set_oracle():
    for lat in (d4_lattice(), c2xc2_lattice(), cyclic_chain_lattice([1, 2, 4])):
        table = lat.nodes[0].group.table
        for a in lat.nodes:
            for b in lat.nodes:
                meet_members = lat.node(lat.meet(a.node_id, b.node_id)).group.members
                assert meet_members == (a.group.members & b.group.members)
                join_members = lat.node(lat.join(a.node_id, b.node_id)).group.members
                assert join_members == brute_closure(table, a.group.members | b.group.members)


def test_meet_examples():
    lat = d4_lattice()
    c4 = lat.node_by_label("<r90>").node_id
    klein = lat.node_by_label("<d,r180>").node_id
    assert lat.node(lat.meet(c4, klein)).label == "<r180>"
    for n in lat.nodes:
        assert lat.meet(n.node_id, n.node_id) == n.node_id
    h = lat.node_by_label("<h>").node_id
    v = lat.node_by_label("<v>").node_id
    assert lat.meet(h, v) == lat.bottom


def test_join_examples():
    lat = d4_lattice()
    h = lat.node_by_label("<h>").node_id
    v = lat.node_by_label("<v>").node_id
    join = lat.node(lat.join(h, v))
    labels = {lat.nodes[0].group.table.labels[i] for i in join.group.members}
    assert labels == {"e", "h", "v", "r180"}
    for n in lat.nodes:
        assert lat.join(n.node_id, lat.bottom) == n.node_id
    chain = cyclic_chain_lattice([1, 2, 4])
    c2 = chain.node_by_label("C2").node_id
    c4 = chain.node_by_label("C4").node_id
    assert chain.join(c2, c4) == c4


def test_enumerate_by_height_levels():
    assert [len(l) for l in d4_lattice().enumerate_by_height()] == [1, 5, 3, 1]
    assert [len(l) for l in cyclic_chain_lattice([1, 2, 4]).enumerate_by_height()] == [1, 1, 1]
    ico = so3_axes_lattice(icosahedral_axes())
    assert [len(l) for l in ico.enumerate_by_height()] == [1, 6, 1]


def test_heights_are_topological():
    for lat in (d4_lattice(), sl3_extended_lattice(), c2xc2_lattice()):
        rows, cols = np.nonzero(lat.covers)
        for lo, hi in zip(rows, cols):
            assert lat.node(hi).height >= lat.node(lo).height + 1
        assert lat.node(lat.bottom).height == 0
        assert lat.node(lat.bottom).group.order == 1


def test_sublattice_above():
    lat = d4_lattice()
    whole = lat.sublattice_above(lat.bottom)
    assert len(whole) == len(lat)
    r180 = lat.node_by_label("<r180>").node_id
    above = lat.sublattice_above(r180)
    labels = {n.label for n in above.nodes}
    assert labels == {"<r180>", "<h,r180>", "<r90>", "<d,r180>", "D4"}
    assert above.node(above.bottom).label == "<r180>"
    top_only = lat.sublattice_above(lat.top)
    assert len(top_only) == 1


def test_add_top():
    base = so3_axes_lattice(icosahedral_axes())
    sl3 = GroupDescriptor("sl3", "SL3", generator_elements=default_sl3_generators())
    extended = add_top(base, sl3)
    assert len(extended) == 9
    assert extended.node(extended.top).label == "SL3"
    levels_before = [len(l) for l in base.enumerate_by_height()]
    levels_after = [len(l) for l in extended.enumerate_by_height()]
    assert levels_after == levels_before + [1]

    # two-node chain from a singleton
    table = cyclic_table(1, ["e"])
    trivial = GroupDescriptor("finite", "I", table=table)
    from symlat.groups import ACTION_MATRIX, GroupAction
    action = GroupAction(GroupDescriptor("so3", "SO3"), 3, ACTION_MATRIX)
    single = Lattice([SubgroupNode(0, trivial, "I",
                                   sampler=SamplerSpec("point-mass",
                                                       element=trivial.identity_element()))],
                     np.eye(1, dtype=bool), action)
    two = add_top(single, GroupDescriptor("so3", "SO3"))
    assert len(two) == 2 and two.top != two.bottom


def test_add_top_rejects_non_supergroup():
    chain = cyclic_chain_lattice([1, 2, 4])
    table = chain.nodes[0].group.table
    c2 = GroupDescriptor("finite", "C2-again", table=table, members=frozenset({0, 2}))
    with pytest.raises(NotASupergroupError):
        add_top(chain, c2)


def test_frontier_examples():
    chain = cyclic_chain_lattice([1, 2, 4])
    c2 = chain.node_by_label("C2").node_id
    assert chain.frontier(c2) == {chain.node_by_label("C4").node_id}
    assert chain.frontier(chain.top) == set()
    lat = d4_lattice()
    r90 = lat.node_by_label("<r90>").node_id
    assert {lat.node(i).label for i in lat.frontier(r90)} == {"<h>", "<v>", "<d>", "<a>"}


def test_order_implies_member_inclusion():
    for lat in (d4_lattice(), c2xc2_lattice(), cyclic_chain_lattice([1, 2, 4, 8])):
        for a in lat.nodes:
            for b in lat.nodes:
                if lat.leq[a.node_id, b.node_id]:
                    assert a.group.members <= b.group.members


def test_absorption_laws_hold():
    for lat in (d4_lattice(), sl3_extended_lattice()):
        for a in lat.nodes:
            for b in lat.nodes:
                i, j = a.node_id, b.node_id
                assert lat.meet(i, lat.join(i, j)) == i
                assert lat.join(i, lat.meet(i, j)) == i


def test_invalid_orders_rejected():
    nodes_action = d4_lattice()
    # non-transitive relation
    leq = np.eye(3, dtype=bool)
    leq[0, 1] = leq[1, 2] = True
    table = cyclic_table(4)
    groups = [GroupDescriptor("finite", lbl, table=table, members=m)
              for lbl, m in (("I", frozenset({0})), ("C2", frozenset({0, 2})),
                             ("C4", frozenset(range(4))))]
    nodes = [SubgroupNode(i, g, g.label) for i, g in enumerate(groups)]
    with pytest.raises(LatticeError):
        Lattice(nodes, leq, nodes_action.action)
    # order contradicting member sets
    leq_full = np.array([[True, True, True], [False, True, False],
                         [False, True, True]])
    with pytest.raises(LatticeError):
        Lattice(nodes, leq_full, nodes_action.action)


def test_collinear_axes_rejected():
    axes = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    with pytest.raises(LatticeError):
        so3_axes_lattice(axes)


def test_so3_without_top_is_meet_semilattice():
    lat = so3_axes_lattice(icosahedral_axes(), include_top=False)
    assert len(lat) == 7
    with pytest.raises(LatticeError):
        lat.join(1, 2)
    assert lat.meet(1, 2) == lat.bottom


def test_cyclic_chain_validation():
    with pytest.raises(LatticeError):
        cyclic_chain_lattice([1, 2, 3])
    lat = cyclic_chain_lattice([2, 4])  # the trivial group is prepended
    assert [n.label for n in lat.nodes] == ["I", "C2", "C4"]


def test_d4_pixel_action_is_a_homomorphism():
    action = d4_pixel_action(5)
    table = action.group.table
    rng = np.random.default_rng(8)
    for _ in range(50):
        i, j = rng.integers(0, 8, size=2)
        x = rng.normal(size=25)
        g, h = FiniteElement(table, int(i)), FiniteElement(table, int(j))
        from symlat.groups import compose
        lhs = act(action, g, act(action, h, x))
        rhs = act(action, compose(g, h), x)
        assert np.array_equal(lhs, rhs)
