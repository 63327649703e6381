from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from firetree.errors import AllZeroWeights, InstanceError, ZeroBudgetLevel
from firetree.oracles import brute_force_ff, brute_force_rmfc, rmfc_feasible_at
from firetree.transforms import (compress_ff, compress_rmfc, contract_zero_budget_levels,
                                 ff_level_set, general_to_unit_budget, greedy_picks, lift,
                                 pad_to_power_of_two, prune, rmfc_level_set, weighted_to_unit_weight)
from firetree.tree import (CUMULATIVE, Instance, build_tree, rmfc_feasible, saved_weight,
                           validate_protection)

from conftest import ff_instances, parent_lists

PATH3 = build_tree([None, 0, 1])


def path(n):
    return build_tree([None] + list(range(n - 1)))


def test_unit_budget_path():
    inst = Instance.ff(PATH3, [0, 1, 2], [2, 1])
    new, tr = general_to_unit_budget(inst)
    assert new.tree.L == 3 and new.tree.n == 4 and new.unit_budgets
    # the chain vertex lifts to the vertex below it
    assert tr.vertex_map[3] == 1
    assert lift(tr, [3]) == {1}
    assert tr.level_map == ((1, 2), (3, 3))


def test_unit_budget_star_and_identity():
    star = Instance.ff(build_tree([None, 0, 0]), [0, 1, 1], [3])
    new, _ = general_to_unit_budget(star)
    assert new.tree.L == 3 and new.tree.n == 7
    same, tr = general_to_unit_budget(Instance.ff(PATH3, [0, 1, 1]))
    assert same.tree == PATH3 and tr.vertex_map == (0, 1, 2)
    with pytest.raises(ZeroBudgetLevel):
        general_to_unit_budget(Instance.ff(PATH3, [0, 1, 1], [1, 0]))


def test_contract_zero_levels():
    new, tr = contract_zero_budget_levels(Instance.ff(PATH3, [0, 1, 2], [1, 0]))
    assert new.tree.n == 2 and new.weights == (0, 3) and new.budgets == (1,)
    p4 = Instance.ff(path(4), [0, 1, 2, 3], [1, 0, 0])
    new, _ = contract_zero_budget_levels(p4)
    assert new.tree.n == 2 and new.weights[1] == 6
    same, _ = contract_zero_budget_levels(Instance.ff(PATH3, [0, 1, 2], [1, 1]))
    assert same.tree == PATH3


def test_ff_level_set():
    assert ff_level_set(8, 1) == [1, 2, 4, 8]
    assert ff_level_set(1, Fraction(1, 2)) == [1]
    assert ff_level_set(10, Fraction(1, 2)) == [1, 2, 3, 4, 6, 8, 10]


def test_compress_ff_budgets():
    inst = Instance.ff(path(9), [0] + [1] * 8)
    new, tr = compress_ff(inst, 1)
    assert tr.params["levels"] == [1, 2, 4, 8]
    assert tr.params["pushed_budgets"] == [1, 1, 0, 2, 0, 0, 0, 4]
    assert new.budgets == (1, 1, 2, 4)
    assert new.total_weight() == inst.total_weight()
    star = Instance.ff(build_tree([None, 0, 0]), [0, 1, 1])
    same, _ = compress_ff(star, Fraction(1, 2))
    assert same.tree == star.tree and same.budgets == (1,)


def test_rmfc_level_set_and_padding():
    assert rmfc_level_set(8) == [1, 3, 7]
    assert rmfc_level_set(1) == [1]
    padded, extra = pad_to_power_of_two(path(6))
    assert padded.L == 8 and extra == 8
    same, extra = pad_to_power_of_two(path(5))
    assert extra == 0


def test_compress_rmfc_star():
    star = build_tree([None, 0, 0, 0])
    inst, tr = compress_rmfc(star)
    assert inst.tree == star and inst.is_pow2 and inst.level_budgets(1) == (2,)
    assert tr.budget_factor == 2


def test_compress_rmfc_deep_path():
    inst, tr = compress_rmfc(path(9))
    assert tr.params["levels"] == [1, 3, 7]
    # padding vertices never lift
    assert all(v is None or v < 9 for v in tr.vertex_map)


def test_prune_star():
    inst = Instance.ff(build_tree([None, 0, 0, 0]), [0, 5, 3, 1])
    new, tr = prune(inst, 1)
    assert new.tree.n == 2 and new.total_weight() == 5
    assert brute_force_ff(new).value == 5 == brute_force_ff(inst).value
    whole, _ = prune(inst, 3)
    assert whole.tree == inst.tree and whole.weights == inst.weights
    with pytest.raises(InstanceError):
        prune(inst, 0)


def test_greedy_picks_four_vertices():
    inst = Instance.ff(build_tree([None, 0, 0, 1]), [0, 1, 4, 2])
    # T_1 weighs 3, T_2 weighs 4: level 1 takes 2, level 2 then takes 3
    assert greedy_picks(inst, 1) == [[], [2], [3]]


def test_unit_weight_arithmetic():
    # one vertex of weight 10 on a 2-vertex tree: D = (1/2)*10/4, w' = 8
    inst = Instance.ff(build_tree([None, 0]), [0, 10])
    new, tr = weighted_to_unit_weight(inst, Fraction(1, 2))
    assert tr.params["D"] == Fraction(5, 4)
    assert tr.params["scaled_weights"] == [0, 8]
    assert tr.params["factor"] == 16
    assert new.tree.n == 2 + 128 and set(new.weights[1:]) == {1}
    assert new.budgets == (1, 1)
    assert lift(tr, [1]) == {1} and lift(tr, [5]) == frozenset()


def test_unit_weight_errors():
    with pytest.raises(AllZeroWeights):
        weighted_to_unit_weight(Instance.ff(PATH3, [0, 0, 0]), Fraction(1, 2))
    with pytest.raises(InstanceError):
        weighted_to_unit_weight(Instance.ff(PATH3, [0, 1, 0]), 1)


def test_lift_chain_order():
    inst = Instance.ff(path(5), [0, 1, 1, 1, 1], [1, 2, 1, 1])
    unit, t1 = general_to_unit_budget(inst)
    comp, t2 = compress_ff(unit, Fraction(1, 2))
    lifted = lift([t1, t2], range(1, comp.tree.n))
    assert lifted <= set(range(1, 5))


@settings(max_examples=40, deadline=None)
@given(ff_instances(max_n=8))
def test_unit_budget_preserves_optimum(inst):
    if any(b == 0 for b in inst.budgets):
        inst, _ = contract_zero_budget_levels(inst)
    new, tr = general_to_unit_budget(inst)
    best = brute_force_ff(new, cap=None)
    assert best.value == brute_force_ff(inst).value
    lifted = lift(tr, best.witness)
    assert validate_protection(inst, lifted) and saved_weight(inst, lifted) == best.value


@settings(max_examples=40, deadline=None)
@given(ff_instances(max_n=10), st.sampled_from([Fraction(1, 3), Fraction(1, 2), 1]))
def test_compress_ff_lift_roundtrip(inst, delta):
    unit = Instance.ff(inst.tree, inst.weights, 1)
    new, tr = compress_ff(unit, delta)
    best = brute_force_ff(new)
    lifted = lift(tr, best.witness)
    assert validate_protection(unit, lifted)
    assert saved_weight(unit, lifted) == best.value


@settings(max_examples=40, deadline=None)
@given(ff_instances(max_n=10), st.integers(1, 3))
def test_greedy_prefix_property(inst, lam):
    # picks at a larger lambda extend those at a smaller one on the first level
    unit = Instance.ff(inst.tree, inst.weights, 1)
    small, big = greedy_picks(unit, lam), greedy_picks(unit, lam + 1)
    if unit.tree.L:
        assert set(small[1]) <= set(big[1])
    for l, level in enumerate(small[1:], start=1):
        assert len(level) <= lam * unit.budgets[l - 1]


@settings(max_examples=30, deadline=None)
@given(parent_lists(max_n=10))
def test_compress_rmfc_lifts_feasible(parents):
    tree = build_tree(parents)
    comp, tr = compress_rmfc(tree)
    res = brute_force_rmfc(comp, "multipliers")
    lifted = lift(tr, res.witness)
    assert rmfc_feasible(tree, lifted)
    assert validate_protection(Instance.rmfc(tree), lifted, CUMULATIVE, 2 * res.value)
    assert rmfc_feasible_at(comp.tree, brute_force_rmfc(tree).value, "multipliers",
                            comp.multipliers)
