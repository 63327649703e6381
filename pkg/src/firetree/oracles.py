"""Exact solvers for small instances and the classic greedy baseline.

Both exact searches walk the tree level by level.  The state after level
l is the multiset of subtrees still exposed to the fire at level l + 1
together with the unused budget, so vertices whose weighted subtrees are
isomorphic are interchangeable; the search memoises on isomorphism codes
instead of vertex ids and only ever picks the first k members of a class.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InstanceError, InstanceTooLarge
from .transforms import greedy_picks
from .tree import (FF, Instance, ProtectionPlan, RootedTree, make_plan, rmfc_feasible,
                   saved_weight, subtree_weights, validate_protection)

DEFAULT_CAP = 16

UNIFORM = "uniform"
MULTIPLIERS = "multipliers"


@dataclass(frozen=True)
class ExactResult:
    value: int
    witness: frozenset
    nodes: int

    def plan(self, inst: Instance) -> ProtectionPlan:
        if inst.kind == FF:
            return make_plan(inst, self.witness)
        return make_plan(inst, self.witness, budget=self.value)


def shape_codes(tree: RootedTree, weights: Optional[Sequence[int]] = None) -> list[int]:
    """Integer isomorphism class of every (weighted) subtree."""
    table: dict[tuple, int] = {}
    code = [0] * tree.n
    for v in reversed(tree.order):
        key = (weights[v] if weights is not None else 0,
               tuple(sorted(code[c] for c in tree.children[v])))
        code[v] = table.setdefault(key, len(table))
    return code


def _check_size(tree: RootedTree, cap: Optional[int]):
    if cap is not None and tree.n > cap:
        raise InstanceTooLarge(f"n={tree.n} exceeds the brute-force cap {cap}")


def _groups(frontier: Sequence[int], code: Sequence[int]) -> list[list[int]]:
    by: dict[int, list[int]] = {}
    for v in sorted(frontier):
        by.setdefault(code[v], []).append(v)
    return [by[c] for c in sorted(by)]


def _choices(sizes: Sequence[int], limit: int):
    """All count vectors c with c_i <= sizes[i] and sum(c) <= limit."""
    def rec(i, left):
        if i == len(sizes):
            yield ()
            return
        for c in range(min(sizes[i], left) + 1):
            for rest in rec(i + 1, left - c):
                yield (c,) + rest
    return rec(0, limit)


def brute_force_ff(inst: Instance, cap: Optional[int] = DEFAULT_CAP) -> ExactResult:
    """Maximum saved weight under cumulative budgets."""
    t = inst.tree
    _check_size(t, cap)
    if inst.kind != FF:
        raise InstanceError("brute_force_ff needs a firefighter instance")
    sw = subtree_weights(inst)
    code = shape_codes(t, inst.weights)
    rest_size = [0] * (t.L + 2)
    for l in range(t.L, 0, -1):
        rest_size[l] = rest_size[l + 1] + len(t.levels[l])
    memo: dict[tuple, int] = {}
    nodes = 0

    def best(level: int, frontier: list[int], spare: int) -> int:
        nonlocal nodes
        if level > t.L or not frontier:
            return 0
        spare += inst.budgets[level - 1]
        spare = min(spare, rest_size[level])
        key = (level, tuple(sorted(code[v] for v in frontier)), spare)
        hit = memo.get(key)
        if hit is not None:
            return hit
        nodes += 1
        groups = _groups(frontier, code)
        useful = [g if sw[g[0]] > 0 else [] for g in groups]
        top = 0
        for counts in _choices([len(g) for g in useful], spare):
            gain = 0
            nxt = []
            for g, c in zip(groups, counts):
                gain += c * sw[g[0]]
                for v in g[c:]:
                    nxt.extend(t.children[v])
            top = max(top, gain + best(level + 1, nxt, spare - sum(counts)))
        memo[key] = top
        return top

    def witness(level: int, frontier: list[int], spare: int, target: int) -> list[int]:
        if level > t.L or not frontier:
            return []
        spare += inst.budgets[level - 1]
        spare = min(spare, rest_size[level])
        groups = _groups(frontier, code)
        useful = [g if sw[g[0]] > 0 else [] for g in groups]
        for counts in _choices([len(g) for g in useful], spare):
            gain = 0
            nxt = []
            picked = []
            for g, c in zip(groups, counts):
                gain += c * sw[g[0]]
                picked.extend(g[:c])
                for v in g[c:]:
                    nxt.extend(t.children[v])
            if gain + best(level + 1, nxt, spare - sum(counts)) == target:
                return picked + witness(level + 1, nxt, spare - sum(counts), target - gain)
        raise AssertionError("witness reconstruction failed")

    start = list(t.children[t.root])
    value = best(1, start, 0)
    chosen = frozenset(witness(1, start, 0, value))
    assert saved_weight(inst, chosen) == value
    assert validate_protection(inst, chosen).feasible
    return ExactResult(value, chosen, nodes)


def _rmfc_search(tree: RootedTree, mult: Sequence[int], cumulative: bool, B: int):
    """Witness set separating every leaf at budget B, or None."""
    code = shape_codes(tree)
    memo: dict[tuple, bool] = {}
    counter = [0]
    rest_size = [0] * (tree.L + 2)
    for l in range(tree.L, 0, -1):
        rest_size[l] = rest_size[l + 1] + len(tree.levels[l])

    def options(level, frontier, spare):
        spare += B * mult[level - 1]
        spare = min(spare, rest_size[level])
        groups = _groups(frontier, code)
        forced = 0
        sizes = []
        for g in groups:
            if not tree.children[g[0]]:
                forced += len(g)
                sizes.append(0)
            else:
                sizes.append(len(g))
        if forced > spare:
            return
        leaf_groups = [not tree.children[g[0]] for g in groups]
        for counts in _choices(sizes, spare - forced):
            picked, nxt = [], []
            for g, c, is_leaf in zip(groups, counts, leaf_groups):
                c = len(g) if is_leaf else c
                picked.extend(g[:c])
                for v in g[c:]:
                    nxt.extend(tree.children[v])
            left = spare - len(picked)
            yield picked, nxt, (left if cumulative else 0)

    def ok(level, frontier, spare):
        if not frontier:
            return True
        if level > tree.L:
            return False
        key = (level, tuple(sorted(code[v] for v in frontier)), min(spare, rest_size[level]))
        hit = memo.get(key)
        if hit is not None:
            return hit
        counter[0] += 1
        res = any(ok(level + 1, nxt, left) for _, nxt, left in options(level, frontier, spare))
        memo[key] = res
        return res

    start = list(tree.children[tree.root])
    if not ok(1, start, 0):
        return None, counter[0]
    out = []
    level, frontier, spare = 1, start, 0
    while frontier:
        for picked, nxt, left in options(level, frontier, spare):
            if ok(level + 1, nxt, left):
                out.extend(picked)
                level, frontier, spare = level + 1, nxt, left
                break
        else:
            raise AssertionError("witness reconstruction failed")
    return frozenset(out), counter[0]


def brute_force_rmfc(target: RootedTree | Instance, model: str = UNIFORM,
                     multipliers: Optional[Sequence[int]] = None,
                     cap: Optional[int] = DEFAULT_CAP) -> ExactResult:
    """Smallest integer B >= 1 for which every leaf can be cut off.

    ``uniform``: cumulative budget B per time step on the tree.
    ``multipliers``: B * a_l vertices on level l, no carry-over; the
    multipliers come from the instance (or the ``multipliers`` argument).
    """
    if isinstance(target, Instance):
        tree = target.tree
        if model == MULTIPLIERS and multipliers is None:
            multipliers = target.multipliers
    else:
        tree = target
    _check_size(tree, cap)
    if not tree.leaves:
        raise InstanceError("tree has no leaves")
    if model == UNIFORM:
        mult, cumulative = (1,) * tree.L, True
    elif model == MULTIPLIERS:
        if multipliers is None or len(multipliers) != tree.L:
            raise InstanceError("multiplier model needs one multiplier per level")
        mult, cumulative = tuple(multipliers), False
    else:
        raise InstanceError(f"unknown budget model {model!r}")
    lo, hi = 1, max(1, len(tree.levels[1]))
    nodes = 0
    best_set, n_ = _rmfc_search(tree, mult, cumulative, hi)
    nodes += n_
    assert best_set is not None
    while lo < hi:
        mid = (lo + hi) // 2
        found, n_ = _rmfc_search(tree, mult, cumulative, mid)
        nodes += n_
        if found is not None:
            hi, best_set = mid, found
        else:
            lo = mid + 1
    assert rmfc_feasible(tree, best_set)
    return ExactResult(hi, best_set, nodes)


def rmfc_feasible_at(tree: RootedTree, B: int, model: str = UNIFORM,
                     multipliers: Optional[Sequence[int]] = None) -> Optional[frozenset]:
    """A separating set at budget B, or None."""
    if model == UNIFORM:
        found, _ = _rmfc_search(tree, (1,) * tree.L, True, B)
    else:
        found, _ = _rmfc_search(tree, tuple(multipliers), False, B)
    return found


def greedy_hartnell_li(inst: Instance) -> ProtectionPlan:
    """Level by level, protect the B_l exposed vertices with heaviest subtrees."""
    picks = list(itertools.chain.from_iterable(greedy_picks(inst, 1)))
    return make_plan(inst, picks, algorithm="greedy")
