from __future__ import annotations

import pytest
from hypothesis import given, settings

from firetree.errors import InstanceTooLarge
from firetree.generate import random_ff_instance, random_tree
from firetree.oracles import (MULTIPLIERS, brute_force_ff, brute_force_rmfc, greedy_hartnell_li,
                              rmfc_feasible_at)
from firetree.tree import Instance, build_tree, rmfc_feasible, saved_weight, validate_protection

from conftest import ff_instances, subsets_optimum


def test_path_and_stars():
    res = brute_force_ff(Instance.ff(build_tree([None, 0, 1]), [0, 1, 1]))
    assert res.value == 2 and res.witness == frozenset({1})
    star = build_tree([None, 0, 0, 0])
    assert brute_force_ff(Instance.ff(star, [0, 1, 1, 1])).value == 1
    assert brute_force_ff(Instance.ff(star, [0, 5, 3, 1])).value == 5


def test_rmfc_known_values():
    assert brute_force_rmfc(build_tree([None, 0, 0, 0])).value == 3
    assert brute_force_rmfc(build_tree([None, 0, 1, 2])).value == 1
    assert brute_force_rmfc(build_tree([None, 0, 0, 1, 1, 2, 2])).value == 2
    star = Instance.rmfc_pow2(build_tree([None, 0, 0, 0]))
    assert brute_force_rmfc(star, MULTIPLIERS).value == 2


def test_feasible_at():
    binary = build_tree([None, 0, 0, 1, 1, 2, 2])
    assert not rmfc_feasible_at(binary, 1)
    assert rmfc_feasible_at(binary, 2)


def test_size_cap():
    big = random_tree(20, 0)
    with pytest.raises(InstanceTooLarge):
        brute_force_ff(Instance.ff(big, [0] + [1] * 19))
    assert brute_force_ff(Instance.ff(big, [0] + [1] * 19), cap=None).value > 0


# frozen values from the exact search
FF_FROZEN = {0: (38, 36), 1: (33, 27), 2: (46, 46), 3: (35, 31), 4: (30, 30), 5: (31, 31)}
RMFC_FROZEN = {0: (5, 1), 1: (4, 2), 2: (4, 1), 3: (5, 2), 4: (3, 3), 5: (5, 2)}


@pytest.mark.parametrize("seed", sorted(FF_FROZEN))
def test_frozen_ff(seed):
    inst = random_ff_instance(10, seed)
    opt, greedy = FF_FROZEN[seed]
    res = brute_force_ff(inst)
    assert res.value == opt
    assert validate_protection(inst, res.witness) and saved_weight(inst, res.witness) == opt
    assert greedy_hartnell_li(inst).value == greedy


@pytest.mark.parametrize("seed", sorted(RMFC_FROZEN))
def test_frozen_rmfc(seed):
    tree = random_tree(12, seed)
    L, b_opt = RMFC_FROZEN[seed]
    assert tree.L == L
    res = brute_force_rmfc(tree)
    assert res.value == b_opt
    assert rmfc_feasible(tree, res.witness)
    assert validate_protection(Instance.rmfc(tree), res.witness, budget=b_opt)
    assert not rmfc_feasible_at(tree, b_opt - 1) if b_opt > 1 else True


@pytest.mark.parametrize("shape,b_opt,ff_opt", [("spider", 1, 11), ("path", 1, 14), ("binary", 2, 11)])
def test_frozen_shapes(shape, b_opt, ff_opt):
    tree = random_tree(15, 0, shape)
    assert brute_force_rmfc(tree).value == b_opt
    assert brute_force_ff(Instance.ff(tree, [0] + [1] * 14)).value == ff_opt


def test_greedy_star():
    plan = greedy_hartnell_li(Instance.ff(build_tree([None, 0, 0, 0]), [0, 5, 3, 1]))
    assert plan.value == 5 and plan.vertices == {1}


@settings(max_examples=60, deadline=None)
@given(ff_instances(max_n=8))
def test_matches_subset_search(inst):
    assert brute_force_ff(inst).value == subsets_optimum(inst)


@settings(max_examples=60, deadline=None)
@given(ff_instances(max_n=9))
def test_greedy_half(inst):
    plan = greedy_hartnell_li(inst)
    assert validate_protection(inst, plan.vertices)
    assert 2 * plan.value >= brute_force_ff(inst).value
