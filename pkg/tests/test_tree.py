from __future__ import annotations

import pickle

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from firetree.errors import CycleDetected, DanglingParent, InstanceError, MultipleRoots, TreeError
from firetree.tree import (CUMULATIVE, PER_LEVEL, Instance, build_tree, level_usage,
                           min_uniform_budget, rmfc_feasible, saved_weight, schedule_protection,
                           subtree_weights, validate_protection)

from conftest import ff_instances, parent_lists


def small():
    #      0
    #    1   2
    #   3 4   5
    return build_tree([None, 0, 0, 1, 1, 2])


def test_structure():
    t = small()
    assert t.root == 0 and t.L == 2
    assert t.levels[1] == (1, 2) and t.levels[2] == (3, 4, 5)
    assert sorted(t.leaves) == [3, 4, 5]
    assert t.path(4) == (4, 1)
    assert sorted(t.subtree(1)) == [1, 3, 4]
    assert t.is_ancestor(1, 4) and t.is_ancestor(4, 4) and not t.is_ancestor(2, 4)
    assert t.ancestor_at(5, 1) == 2


def test_pickle_roundtrip():
    t = small()
    assert pickle.loads(pickle.dumps(t)) == t


@pytest.mark.parametrize("parents,exc", [
    ([None, 2, 1], CycleDetected),
    ([None, None, 0], MultipleRoots),
    ([None, 7], DanglingParent),
    ([1, 0], TreeError),
])
def test_malformed_trees(parents, exc):
    with pytest.raises(exc):
        build_tree(parents)


def test_tree_errors_are_value_errors():
    with pytest.raises(ValueError):
        build_tree([None, None])


def test_root_weight_ignored(caplog):
    inst = Instance.ff(small(), [5, 1, 1, 1, 1, 1])
    assert inst.weights[0] == 0
    assert "root weight" in caplog.text


def test_instance_validation():
    t = small()
    with pytest.raises(InstanceError):
        Instance.ff(t, [0, 1, 1])
    with pytest.raises(InstanceError):
        Instance.ff(t, [0, 1, 1, 1, 1, 1], [1])
    with pytest.raises(InstanceError):
        Instance.ff(t, [0, -1, 1, 1, 1, 1])
    with pytest.raises(InstanceError):
        Instance.rmfc(t, [0, 1])


def test_subtree_weights():
    inst = Instance.ff(small(), [0, 1, 2, 3, 4, 5])
    assert subtree_weights(inst) == [15, 8, 7, 3, 4, 5]


def test_saved_weight_union():
    inst = Instance.ff(small(), [0, 1, 2, 3, 4, 5])
    assert saved_weight(inst, [1, 3]) == 8
    assert saved_weight(inst, [3, 5]) == 8
    assert saved_weight(inst, []) == 0


def test_validate_cumulative_vs_per_level():
    inst = Instance.ff(small(), [0] * 6, [1, 1])
    # two vertices on level 2: cumulative budget 2 suffices, per-level budget 1 does not
    assert validate_protection(inst, [3, 5], CUMULATIVE)
    v = validate_protection(inst, [3, 5], PER_LEVEL)
    assert not v and v.violated_level == 2
    v = validate_protection(inst, [1, 2], CUMULATIVE)
    assert not v and v.violated_level == 1


def test_root_rejected():
    inst = Instance.ff(small(), [0] * 6)
    v = validate_protection(inst, [0])
    assert not v and v.violated_level == 0 and "root" in v.reason


def test_rmfc_feasibility_and_budget():
    t = small()
    inst = Instance.rmfc(t)
    assert rmfc_feasible(t, [1, 2])
    assert not rmfc_feasible(t, [1])
    assert min_uniform_budget(inst, [1, 2]) == 2
    assert min_uniform_budget(inst, [1, 5]) == 1
    assert validate_protection(inst, [1, 5], CUMULATIVE, 1)
    pow2 = Instance.rmfc_pow2(t)
    assert pow2.is_pow2 and pow2.level_budgets(1) == (2, 4)
    assert min_uniform_budget(pow2, [1, 2], PER_LEVEL) == 1


@settings(max_examples=80, deadline=None)
@given(ff_instances(), st.data())
def test_saved_weight_monotone(inst, data):
    S = data.draw(st.sets(st.sampled_from(inst.tree.non_root())))
    extra = data.draw(st.sampled_from(inst.tree.non_root()))
    assert saved_weight(inst, S) <= saved_weight(inst, S | {extra})


@settings(max_examples=80, deadline=None)
@given(ff_instances(), st.data())
def test_cumulative_check_matches_schedule(inst, data):
    S = data.draw(st.sets(st.sampled_from(inst.tree.non_root())))
    assert bool(validate_protection(inst, S, CUMULATIVE)) == (schedule_protection(inst, S) is not None)


@settings(max_examples=60, deadline=None)
@given(parent_lists(max_n=12))
def test_levels_partition(parents):
    t = build_tree(parents)
    assert sorted(v for l in t.levels for v in l) == list(range(t.n))
    assert sum(level_usage(t, t.non_root())) == t.n - 1
