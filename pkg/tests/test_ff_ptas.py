from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings

from firetree.errors import EnumerationBudgetExceeded, InstanceError
from firetree.ff_ptas import (check_decomposition, component_weights, compute_q, heavy_set,
                              heavy_threshold, ptas_core, ptas_pipeline, reoptimize_tight)
from firetree.generate import random_ff_instance
from firetree.oracles import brute_force_ff
from firetree.tree import Instance, build_tree, validate_protection

from conftest import ff_instances

HALF = Fraction(1, 2)


def test_heavy_set():
    inst = Instance.ff(build_tree([None, 0, 1]), [0, 1, 2])
    assert heavy_set(inst, 2) == {1, 2}
    assert heavy_set(inst, 0) == {1, 2}
    assert heavy_set(inst, 4) == frozenset()


def test_q_on_path():
    inst = Instance.ff(build_tree([None, 0, 1]), [0, 1, 2])
    dec = compute_q(inst, heavy_set(inst, 2), 2)
    assert dec.Q == (2,) and dec.q_paths == {2: (2, 1)}


def test_q_on_spider():
    inst = Instance.ff(build_tree([None, 0, 0, 0, 1, 2, 3]), [0, 1, 1, 1, 5, 5, 5])
    dec = compute_q(inst, heavy_set(inst, 5), 5)
    assert dec.Q == (4, 5, 6)
    assert dec.path_of()[1] == 4
    check_decomposition(inst, dec)


def test_q_empty_heavy_tree():
    inst = Instance.ff(build_tree([None, 0, 0]), [0, 1, 1])
    dec = compute_q(inst, heavy_set(inst, 5), 5)
    assert dec.Q == () and dec.q_paths == {}


def test_threshold():
    inst = Instance.ff(build_tree([None, 0, 0, 0, 1, 2, 3]), [0, 1, 1, 1, 5, 5, 5])
    assert heavy_threshold(inst, HALF) == Fraction(1, 4) * 18 / 24


def test_reoptimize_tight():
    inst = Instance.ff(build_tree([None, 0, 1]), [0, 1, 1])
    plan = reoptimize_tight(inst, {1})
    assert plan.vertices == {1} and plan.value == 2
    assert reoptimize_tight(inst, ()).value == 0


def test_core_star_is_optimal():
    star = Instance.ff(build_tree([None, 0, 0, 0, 0]), [0, 1, 1, 1, 1])
    out = ptas_core(star, HALF)
    assert out.plan.value == 1 and len(out.plan.vertices) == 1


def test_core_value_bound():
    inst = random_ff_instance(11, 4)
    out = ptas_core(inst, HALF)
    assert out.plan.value >= out.lp_value - inst.tree.L * out.eta
    assert all(c <= inst.tree.L for c in out.loose_counts)


def test_enum_cap():
    inst = Instance.ff(build_tree([None, 0, 0, 0, 1, 2, 3]), [0, 1, 1, 1, 5, 5, 5])
    with pytest.raises(EnumerationBudgetExceeded):
        ptas_core(inst, HALF, enum_cap=2)


def test_pipeline_path_and_params():
    inst = Instance.ff(build_tree([None, 0, 1]), [0, 1, 1])
    out = ptas_pipeline(inst, HALF)
    assert out.plan.vertices == {1} and out.plan.value == 2
    big = random_ff_instance(10, 2)
    p = ptas_pipeline(big, HALF).params
    assert p["delta"] == Fraction(1, 6) and p["lambda"] == 6


def test_pipeline_rejects_eps():
    inst = Instance.ff(build_tree([None, 0, 1]), [0, 1, 1])
    for eps in (0, 1, 2):
        with pytest.raises(InstanceError):
            ptas_pipeline(inst, eps)


def test_pipeline_general_budgets():
    inst = Instance.ff(build_tree([None, 0, 0, 0, 1, 2, 3]), [0, 1, 2, 3, 4, 5, 6], [2, 0])
    out = ptas_pipeline(inst, HALF)
    assert validate_protection(inst, out.plan.vertices)
    assert 2 * out.plan.value >= brute_force_ff(inst).value


def test_workers_agree():
    inst = random_ff_instance(12, 9)
    a = ptas_pipeline(inst, HALF, workers=1)
    b = ptas_pipeline(inst, HALF, workers=3)
    assert a.plan.vertices == b.plan.vertices and a.core.lp_value == b.core.lp_value


@settings(max_examples=40, deadline=None)
@given(ff_instances(max_n=10))
def test_decomposition_properties(inst):
    eta = heavy_threshold(inst, HALF)
    if eta == 0:
        return
    dec = compute_q(inst, heavy_set(inst, eta), eta)
    check_decomposition(inst, dec)
    parts = sorted(v for p in dec.q_paths.values() for v in p)
    assert parts == sorted(dec.heavy)
    assert all(w <= eta for w in component_weights(inst, dec.Q))


@settings(max_examples=40, deadline=None)
@given(ff_instances(max_n=10))
def test_pipeline_half_of_optimum(inst):
    out = ptas_pipeline(inst, HALF)
    assert validate_protection(inst, out.plan.vertices)
    assert 2 * out.plan.value >= brute_force_ff(inst).value
