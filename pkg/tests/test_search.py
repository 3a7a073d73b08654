import math

import numpy as np
import pytest

from symlat.builders import (
    c2xc2_lattice,
    cyclic_chain_lattice,
    d4_lattice,
    sl3_extended_lattice,
    so3_axes_lattice,
    icosahedral_axes,
)
from symlat.errors import SymlatError
from symlat.invariance import gaussian_noise, known_bound, order_bound
from symlat.scenarios import make_scenario
from symlat.search import (
    ACCEPTED,
    PRUNED,
    REJECTED,
    SKIPPED_GREEDY,
    UNTESTED,
    ExceedanceTester,
    OracleTester,
    PermutationTester,
    SearchConfig,
    bound_diagnostics,
    breadth_first_estimate,
    breadth_first_greedy_estimate,
    depth_first_estimate,
    halving_alpha_schedule,
    resolve_tilde,
    run_search,
    write_hasse_annotation,
    write_result_csv,
)

ALL_LATTICES = [
    d4_lattice,
    lambda: cyclic_chain_lattice([1, 2, 4]),
    lambda: cyclic_chain_lattice([1, 2, 4, 8]),
    c2xc2_lattice,
    lambda: so3_axes_lattice(icosahedral_axes()),
    sl3_extended_lattice,
]

ALGORITHMS = [breadth_first_estimate, breadth_first_greedy_estimate,
              depth_first_estimate]


@pytest.mark.parametrize("lattice_fn", ALL_LATTICES)
def test_perfect_oracle_recovers_every_target(lattice_fn):
    lat = lattice_fn()
    for gmax in range(len(lat)):
        oracle = OracleTester.perfect(gmax)
        for algo in ALGORITHMS:
            result = algo(lat, oracle, SearchConfig(seed=3))
            assert result.estimate == gmax, (lat.node(gmax).label, algo.__name__)
            assert result.tilde_set == (gmax,)


def test_status_partition_and_pruning_soundness():
    lat = d4_lattice()
    rng = np.random.default_rng(9)
    for _ in range(50):
        accepted_ids = {lat.bottom}
        for node in lat.nodes:
            if node.node_id != lat.bottom and rng.random() < 0.6:
                accepted_ids.add(node.node_id)
        oracle = OracleTester(lambda l, n, ok=frozenset(accepted_ids):
                              n.node_id in ok)
        result = breadth_first_estimate(lat, oracle, SearchConfig(seed=1))
        statuses = result.statuses
        assert set(statuses) == {n.node_id for n in lat.nodes}
        for v, status in statuses.items():
            assert status in (ACCEPTED, REJECTED, PRUNED, SKIPPED_GREEDY, UNTESTED)
            if status == PRUNED:
                assert any(statuses[u] == REJECTED for u in lat.below(v) if u != v)
            if status in (ACCEPTED, REJECTED) and v != lat.bottom:
                # soundness: tested only when nothing strictly below was rejected
                assert not any(statuses[u] == REJECTED for u in lat.below(v) if u != v)
        alive = [v for v, s in statuses.items() if s == ACCEPTED]
        for a in result.tilde_set:
            assert statuses[a] == ACCEPTED
            assert not any(lat.leq[a, b] and a != b for b in alive)


def test_rejection_example_on_chain():
    chain = cyclic_chain_lattice([1, 2, 4])
    oracle = OracleTester.reject_labels(["C2"])
    result = breadth_first_estimate(chain, oracle, SearchConfig(seed=0))
    assert chain.node(result.estimate).label == "I"
    assert result.statuses[chain.node_by_label("C4").node_id] == PRUNED
    assert result.tests_performed == 1


def test_all_accept_reaches_top():
    for lattice_fn in ALL_LATTICES:
        lat = lattice_fn()
        result = breadth_first_estimate(lat, OracleTester.accept_all(),
                                        SearchConfig(seed=0))
        assert result.estimate == lat.top
        assert result.tilde_set == (lat.top,)


def test_d4_image_example_tilde_set():
    lat = d4_lattice()
    oracle = OracleTester.reject_labels(["<h>", "<v>"])
    result = breadth_first_estimate(lat, oracle, SearchConfig(seed=0))
    tilde_labels = {lat.node(i).label for i in result.tilde_set}
    assert tilde_labels == {"<r90>", "<d,r180>"}
    assert result.statuses[lat.node_by_label("<h,r180>").node_id] == PRUNED
    assert result.statuses[lat.node_by_label("D4").node_id] == PRUNED
    alt = resolve_tilde(result.tilde_set, lat, "meet-of-maxima",
                        np.random.default_rng(0))
    assert lat.node(alt).label == "<r180>"


def test_greedy_skips_generated_nodes():
    lat = d4_lattice()
    oracle = OracleTester.perfect(lat.node_by_label("<h,r180>").node_id)
    result = breadth_first_greedy_estimate(lat, oracle, SearchConfig(seed=0))
    # <h,r180> is the join of the accepted <h>, <v>, <r180>; <r90> is a pure
    # refinement of <r180> and must still be tested
    assert result.statuses[lat.node_by_label("<h,r180>").node_id] == SKIPPED_GREEDY
    assert result.statuses[lat.node_by_label("<r90>").node_id] == REJECTED
    assert result.estimate == lat.node_by_label("<h,r180>").node_id


def test_greedy_matches_plain_with_perfect_oracle():
    for lattice_fn in ALL_LATTICES:
        lat = lattice_fn()
        for gmax in range(len(lat)):
            oracle = OracleTester.perfect(gmax)
            plain = breadth_first_estimate(lat, oracle, SearchConfig(seed=5))
            greedy = breadth_first_greedy_estimate(lat, oracle, SearchConfig(seed=5))
            assert greedy.estimate == plain.estimate
            assert greedy.tests_performed <= plain.tests_performed


def test_greedy_on_chain_equals_plain():
    chain = cyclic_chain_lattice([1, 2, 4])
    oracle = OracleTester.accept_all()
    plain = breadth_first_estimate(chain, oracle, SearchConfig(seed=1))
    greedy = breadth_first_greedy_estimate(chain, oracle, SearchConfig(seed=1))
    assert plain.tests_performed == greedy.tests_performed == 2
    assert plain.estimate == greedy.estimate


def test_greedy_savings_on_klein_group():
    lat = c2xc2_lattice()
    oracle = OracleTester.accept_all()
    plain = breadth_first_estimate(lat, oracle, SearchConfig(seed=1))
    greedy = breadth_first_greedy_estimate(lat, oracle, SearchConfig(seed=1))
    assert greedy.statuses[lat.top] == SKIPPED_GREEDY
    assert plain.computation_units - greedy.computation_units >= 4


def test_greedy_savings_on_abelian_product():
    # C2 x C4: the two joins of single-factor subgroups (orders 4 and 8)
    # are skipped under all-accept, saving at least 4 + 8 = 12 units
    from symlat.groups import (ACTION_MATRIX, GroupAction, GroupDescriptor,
                               cyclic_table, direct_product_table)
    from symlat.builders import full_subgroup_lattice
    table = direct_product_table(cyclic_table(2), cyclic_table(4))
    flips = []
    for a in range(2):
        for b in range(4):
            c, s = np.cos(np.pi * b / 2), np.sin(np.pi * b / 2)
            m = np.eye(3)
            m[0, 0] = (-1.0) ** a
            m[1:, 1:] = [[c, -s], [s, c]]
            flips.append(m)
    group = GroupDescriptor("finite", "C2xC4", table=table)
    action = GroupAction(group, 3, ACTION_MATRIX, matrices=np.stack(flips))
    lat = full_subgroup_lattice(table, action, top_label="C2xC4")
    oracle = OracleTester.accept_all()
    plain = breadth_first_estimate(lat, oracle, SearchConfig(seed=3))
    greedy = breadth_first_greedy_estimate(lat, oracle, SearchConfig(seed=3))
    assert plain.computation_units - greedy.computation_units >= 12
    assert greedy.estimate == lat.top


def test_greedy_uses_declared_facts_for_continuous_joins():
    lat = so3_axes_lattice(icosahedral_axes())
    result = breadth_first_greedy_estimate(lat, OracleTester.accept_all(),
                                           SearchConfig(seed=2))
    assert result.statuses[lat.top] == SKIPPED_GREEDY
    assert result.estimate == lat.top


def test_depth_first_examples():
    chain = cyclic_chain_lattice([1, 2, 4])
    result = depth_first_estimate(chain, OracleTester.accept_all(), SearchConfig(seed=0))
    assert chain.node(result.estimate).label == "C4"
    assert result.tests_performed == 2

    result = depth_first_estimate(chain, OracleTester.reject_labels(["C2"]),
                                  SearchConfig(seed=0))
    assert chain.node(result.estimate).label == "I"

    # depth-first greediness: it follows the first acceptance and never sees
    # other invariant branches
    lat = d4_lattice()
    ok = {lat.bottom, lat.node_by_label("<h>").node_id,
          lat.node_by_label("<d>").node_id}
    oracle = OracleTester(lambda l, n: n.node_id in ok)
    result = depth_first_estimate(lat, oracle, SearchConfig(seed=0))
    assert lat.node(result.estimate).label == "<h>"
    assert result.statuses[lat.node_by_label("<d>").node_id] == UNTESTED
    assert result.tests_performed <= len(lat)
    # terminates within the lattice height: each recursion climbs one level
    assert result.tests_performed >= 2


def test_resolve_tilde_rules():
    lat = d4_lattice()
    tilde = (lat.node_by_label("<r90>").node_id,
             lat.node_by_label("<d,r180>").node_id)
    meet = resolve_tilde(tilde, lat, "meet-of-maxima", np.random.default_rng(0))
    assert lat.node(meet).label == "<r180>"
    assert resolve_tilde(tilde[::-1], lat, "meet-of-maxima",
                         np.random.default_rng(1)) == meet
    single = resolve_tilde((3,), lat, "uniform-random", np.random.default_rng(0))
    assert single == 3
    picks = {resolve_tilde(tilde, lat, "uniform-random", np.random.default_rng(s))
             for s in range(30)}
    assert picks <= set(tilde) and len(picks) == 2
    with pytest.raises(SymlatError):
        resolve_tilde((), lat, "uniform-random", np.random.default_rng(0))


def test_bound_diagnostics_worked_example():
    chain = cyclic_chain_lattice([1, 2, 4])
    c2 = chain.node_by_label("C2").node_id
    b = bound_diagnostics(chain, c2, power=0.9, alpha=0.05)
    assert b.frontier_size == 1
    assert b.subgroups_below == 2
    assert math.isclose(b.invariant_probability, 0.9)
    assert math.isclose(b.exact_recovery_probability, 0.8)
    perfect = bound_diagnostics(chain, c2, power=1.0, alpha=0.0)
    assert perfect.invariant_probability == 1.0
    assert perfect.exact_recovery_probability == 1.0
    top = bound_diagnostics(chain, chain.top, power=0.7, alpha=0.05)
    assert top.frontier_size == 0
    assert top.invariant_probability == 1.0


def _toy_tester(data, kind="exceedance"):
    if kind == "exceedance":
        return ExceedanceTester(data, known_bound(1.0 / math.e), gaussian_noise(0.05),
                                m=data.n, thresholds=[0.1])
    return PermutationTester(data, order_bound(), m=data.n, B=40)


def test_search_determinism_with_real_testers():
    scen = make_scenario("fd-rotation", 2)
    data = scen.sample_train(np.random.default_rng(6), 150)
    chain = cyclic_chain_lattice([1, 2, 4])
    for kind in ("exceedance", "permutation"):
        tester = _toy_tester(data, kind)
        a = breadth_first_estimate(chain, tester, SearchConfig(seed=99))
        b = breadth_first_estimate(chain, tester, SearchConfig(seed=99))
        assert a.estimate == b.estimate
        assert a.statuses == b.statuses
        assert all(a.outcomes[k].p_value == b.outcomes[k].p_value for k in a.outcomes)


def test_batch_mode_runs_and_is_deterministic():
    scen = make_scenario("fd-rotation", 2)
    data = scen.sample_train(np.random.default_rng(7), 200)
    chain = cyclic_chain_lattice([1, 2, 4])
    tester = _toy_tester(data)
    cfg = SearchConfig(seed=11, batch=True)
    a = breadth_first_estimate(chain, tester, cfg)
    b = breadth_first_estimate(chain, tester, cfg)
    assert a.estimate == b.estimate and a.statuses == b.statuses
    assert chain.node(a.estimate).label == "C2"


def test_alpha_schedule_applies():
    schedule = halving_alpha_schedule(0.2, start_level=1)
    assert schedule(1) == 0.1 and schedule(2) == 0.05
    chain = cyclic_chain_lattice([1, 2, 4])
    scen = make_scenario("fd-rotation", 2)
    data = scen.sample_train(np.random.default_rng(8), 120)
    tester = _toy_tester(data)
    result = breadth_first_estimate(chain, tester,
                                    SearchConfig(seed=4, alpha_schedule=schedule))
    c2 = chain.node_by_label("C2").node_id
    assert result.outcomes[c2].alpha == 0.1


def test_run_search_dispatch_and_config_validation():
    chain = cyclic_chain_lattice([1, 2, 4])
    oracle = OracleTester.accept_all()
    for algo in ("breadth", "breadth-greedy", "depth"):
        result = run_search(chain, oracle, SearchConfig(algorithm=algo, seed=0))
        assert result.estimate == chain.top
    with pytest.raises(SymlatError):
        SearchConfig(algorithm="sideways")
    with pytest.raises(SymlatError):
        SearchConfig(alpha=1.5)
    with pytest.raises(SymlatError):
        SearchConfig(tie_rule="coin-flip")


def test_d4_search_with_real_tester_runs():
    # node samplers, membership, and the matrix realisation must all share
    # one table instance; this exercises the whole chain on the D4 lattice
    lat = d4_lattice()
    scen = make_scenario("fd-rotation", 2)
    data = scen.sample_train(np.random.default_rng(12), 150)
    tester = ExceedanceTester(data, known_bound(1.0), gaussian_noise(0.05),
                              m=150, thresholds=[0.1])
    result = breadth_first_estimate(lat, tester, SearchConfig(seed=13))
    assert result.tests_performed >= 5
    X = data.X[:10]
    for node in lat.nodes:
        out, valid = node.projection.apply(X)
        assert valid.all() and out.shape == (10, 2)


def test_d4_pixel_lattice_search():
    from symlat.builders import d4_pixel_lattice
    lat = d4_pixel_lattice(4)
    assert lat.action.dim == 16
    # an oracle search over the pixel lattice behaves like the plane one
    result = breadth_first_estimate(lat, OracleTester.reject_labels(["<h>", "<v>"]),
                                    SearchConfig(seed=1))
    assert {lat.node(i).label for i in result.tilde_set} == {"<r90>", "<d,r180>"}
    # and node projections canonicalise images exactly
    rng = np.random.default_rng(3)
    X = rng.integers(0, 4, size=(5, 16)).astype(float)
    top = lat.node_by_label("D4")
    out, _ = top.projection.apply(X)
    from symlat.groups import FiniteElement, apply_to_rows
    for i in range(8):
        g = FiniteElement(top.group.table, i)
        moved = apply_to_rows(lat.action, g, X)
        out2, _ = top.projection.apply(moved)
        assert np.array_equal(out, out2)


def test_result_exports(tmp_path):
    lat = d4_lattice()
    result = breadth_first_estimate(lat, OracleTester.reject_labels(["<h>", "<v>"]),
                                    SearchConfig(seed=0))
    csv_path = tmp_path / "result.csv"
    write_result_csv(result, lat, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "node,label,status,p_value"
    assert len(lines) == 1 + len(lat)
    ann_path = tmp_path / "hasse.txt"
    write_hasse_annotation(result, lat, ann_path)
    text = ann_path.read_text()
    assert text.count("node\t") == len(lat)
    assert text.count("edge\t") == int(lat.covers.sum())
