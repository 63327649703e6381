"""Instance transformations that can be undone on solutions.

Each transform returns the new instance together with a
:class:`TransformTrace`.  The trace maps every new vertex to the original
vertex it stands for (or ``None`` for vertices with no counterpart), which
is all that is needed to carry a protection set back with :func:`lift`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import AllZeroWeights, InstanceError, ZeroBudgetLevel
from .tree import FF, Instance, RootedTree, build_tree, subtree_weights


@dataclass(frozen=True)
class TransformTrace:
    kind: str
    vertex_map: tuple[Optional[int], ...]
    level_map: tuple[tuple[int, int], ...] = ()
    params: dict = field(default_factory=dict, compare=False)
    budget_factor: int = 1

    def lift(self, vertices: Iterable[int]) -> frozenset:
        return lift(self, vertices)


def lift(trace: TransformTrace | Sequence[TransformTrace], vertices: Iterable[int]) -> frozenset:
    """Map a protection set back through one trace or a chain of them.

    A chain is given in the order the transforms were applied; lifting walks
    it backwards.  Vertices without a counterpart are dropped and duplicates
    collapse.
    """
    traces = [trace] if isinstance(trace, TransformTrace) else list(trace)
    out = set(vertices)
    for tr in reversed(traces):
        out = {tr.vertex_map[v] for v in out if tr.vertex_map[v] is not None}
    return frozenset(out)


def _relabel(tree: RootedTree, keep: Iterable[int], new_parent_of) -> tuple[list[Optional[int]], list[int]]:
    """Parent list over ``keep`` (sorted by original id) and the new->old map."""
    old = sorted(keep)
    new_id = {v: i for i, v in enumerate(old)}
    parents = [None if new_parent_of(v) is None else new_id[new_parent_of(v)] for v in old]
    return parents, old


def general_to_unit_budget(inst: Instance) -> tuple[Instance, TransformTrace]:
    """Subdivide each edge into a level-l vertex into B_l edges.

    Original vertices keep their ids; the inserted chain vertices get fresh
    ids after them, weigh nothing, and lift to the vertex below their chain.
    """
    t = inst.tree
    if any(b == 0 for b in inst.budgets):
        raise ZeroBudgetLevel("contract zero-budget levels before unifying budgets")
    parents: list[Optional[int]] = list(t.parent)
    vmap: list[Optional[int]] = list(range(t.n))
    weights = list(inst.weights)
    for u in t.order:
        if u == t.root:
            continue
        extra = inst.budgets[t.depth[u] - 1] - 1
        above = t.parent[u]
        for _ in range(extra):
            y = len(parents)
            parents.append(above)
            vmap.append(u)
            weights.append(0)
            above = y
        parents[u] = above
    new_tree = build_tree(parents)
    bounds = []
    acc = 0
    for b in inst.budgets:
        bounds.append((acc + 1, acc + b))
        acc += b
    new = Instance.ff(new_tree, weights, 1)
    return new, TransformTrace("unit-budget", tuple(vmap), tuple(bounds), {"budgets": list(inst.budgets)})


def scale_weights(inst: Instance, delta: Fraction) -> tuple[Instance, TransformTrace]:
    """Round weights down to multiples of D = delta * w_max / (2n)."""
    t = inst.tree
    w_max = max((w for v, w in enumerate(inst.weights) if v != t.root), default=0)
    if w_max == 0:
        raise AllZeroWeights("every vertex weight is zero")
    D = Fraction(delta) * w_max / (2 * t.n)
    weights = [0 if v == t.root else math.floor(w / D) for v, w in enumerate(inst.weights)]
    new = Instance(t, tuple(weights), FF, inst.budgets)
    return new, TransformTrace("scale-weights", tuple(range(t.n)), (), {"D": D, "delta": Fraction(delta)})


def attach_unit_leaves(inst: Instance, delta: Fraction, alpha: Fraction) -> tuple[Instance, TransformTrace]:
    """Give every vertex floor(4n/(alpha delta) w(u)) extra leaves; all weights become 1."""
    t = inst.tree
    factor = Fraction(4 * t.n) / (Fraction(alpha) * Fraction(delta))
    parents: list[Optional[int]] = list(t.parent)
    vmap: list[Optional[int]] = list(range(t.n))
    for u in range(t.n):
        if u == t.root:
            continue
        for _ in range(math.floor(factor * inst.weights[u])):
            parents.append(u)
            vmap.append(None)
    new_tree = build_tree(parents)
    budgets = list(inst.budgets) + [1] * (new_tree.L - t.L)
    weights = [0 if v == new_tree.root else 1 for v in range(new_tree.n)]
    new = Instance(new_tree, tuple(weights), FF, tuple(budgets))
    return new, TransformTrace("unit-leaves", tuple(vmap), (), {"factor": factor})


def weighted_to_unit_weight(inst: Instance, delta, alpha=1) -> tuple[Instance, TransformTrace]:
    """Scaling followed by leaf attachment; the lift keeps original vertices only."""
    delta, alpha = Fraction(delta), Fraction(alpha)
    if not 0 < delta < 1 or not 0 < alpha <= 1:
        raise InstanceError("need 0 < delta < 1 and 0 < alpha <= 1")
    scaled, tr1 = scale_weights(inst, delta)
    unit, tr2 = attach_unit_leaves(scaled, delta, alpha)
    params = {"D": tr1.params["D"], "factor": tr2.params["factor"], "delta": delta, "alpha": alpha,
              "scaled_weights": list(scaled.weights)}
    return unit, TransformTrace("unit-weight", tr2.vertex_map, (), params)


def _contract(tree: RootedTree, keep_level: Sequence[bool], weights: Sequence[int]):
    """Merge every vertex on a non-kept level into its parent's group.

    Returns (parents, vertex_map, group_weight, top_of) over the new tree.
    Group tops are ordered by original id.
    """
    top = list(range(tree.n))
    for v in tree.order:
        p = tree.parent[v]
        if p is not None and p != tree.root and not keep_level[tree.depth[v]]:
            top[v] = top[p]
    tops = sorted({top[v] for v in range(tree.n)})
    new_id = {v: i for i, v in enumerate(tops)}
    parents = [None if tree.parent[v] is None else new_id[top[tree.parent[v]]] for v in tops]
    gw = [0] * len(tops)
    for v in range(tree.n):
        gw[new_id[top[v]]] += weights[v]
    return parents, tops, gw, top


def contract_zero_budget_levels(inst: Instance) -> tuple[Instance, TransformTrace]:
    """Merge each zero-budget level l >= 2 into level l - 1, summing weights."""
    t = inst.tree
    keep = [True] * (t.L + 1)
    for l in range(2, t.L + 1):
        keep[l] = inst.budgets[l - 1] > 0
    parents, tops, gw, _ = _contract(t, keep, inst.weights)
    gw[tops.index(t.root)] = 0
    kept = [l for l in range(1, t.L + 1) if keep[l]]
    level_map = tuple((lo, (kept[i + 1] - 1) if i + 1 < len(kept) else t.L) for i, lo in enumerate(kept))
    new = Instance(build_tree(parents), tuple(gw), FF, tuple(inst.budgets[l - 1] for l in kept))
    return new, TransformTrace("contract", tuple(tops), level_map)


def ff_level_set(L: int, delta) -> list[int]:
    """Levels ceil((1+delta)^j) for (1+delta)^j <= L, plus L itself."""
    base = 1 + Fraction(delta)
    out = set()
    p = Fraction(1)
    while p <= L:
        out.add(math.ceil(p))
        p *= base
    out.add(L)
    return sorted(out)


def compress_ff(inst: Instance, delta) -> tuple[Instance, TransformTrace]:
    """Push unit budgets down onto a geometric level set, then contract."""
    t = inst.tree
    delta = Fraction(delta)
    if not 0 < delta:
        raise InstanceError("delta must be positive")
    if not inst.unit_budgets:
        raise InstanceError("compress_ff expects unit budgets")
    levels = ff_level_set(t.L, delta)
    budgets = [0] * t.L
    prev = 0
    for l in levels:
        budgets[l - 1] = l - prev
        prev = l
    pushed = Instance(t, inst.weights, FF, tuple(budgets))
    new, tr = contract_zero_budget_levels(pushed)
    params = {"delta": delta, "levels": levels, "pushed_budgets": budgets}
    return new, TransformTrace("compress-ff", tr.vertex_map, tr.level_map, params)


def pad_to_power_of_two(tree: RootedTree) -> tuple[RootedTree, int]:
    """Hang a path below the root so the depth becomes a power of two."""
    target = 1 << max(0, (tree.L - 1).bit_length())
    extra = target - tree.L if tree.L < target else 0
    if not extra:
        return tree, 0
    parents = list(tree.parent)
    above = tree.root
    for _ in range(target):
        parents.append(above)
        above = len(parents) - 1
    return build_tree(parents), target


def rmfc_level_set(L: int) -> list[int]:
    """Levels 2^j - 1 for j = 1..log L (at least level 1)."""
    k = max(1, (L - 1).bit_length()) if L > 1 else 1
    return [(1 << j) - 1 for j in range(1, k + 1)]


def compress_rmfc(tree: RootedTree) -> tuple[Instance, TransformTrace]:
    """Up-push budgets to levels 2^j - 1, contract, and cut below covered groups.

    The result is an RMFC instance with per-level multipliers 2^j: a plan
    using at most B 2^j vertices on each new level j lifts to a plan of the
    original tree that is cumulatively feasible at uniform budget 2B.
    """
    if not tree.leaves:
        raise InstanceError("tree has no leaves")
    padded, pad = pad_to_power_of_two(tree)
    levels = rmfc_level_set(padded.L)
    keep = [False] * (padded.L + 1)
    keep[0] = True
    for l in levels:
        keep[l] = True
    leaf_count = [0] * padded.n
    for u in padded.leaves:
        leaf_count[u] = 1
    parents, tops, gw, top = _contract(padded, keep, leaf_count)
    contracted = build_tree(parents)
    # drop everything strictly below a group that contains a leaf
    alive = [True] * contracted.n
    for v in contracted.order:
        p = contracted.parent[v]
        if p is not None and (not alive[p] or (p != contracted.root and gw[p] > 0)):
            alive[v] = False
    keep_ids = [v for v in range(contracted.n) if alive[v]]
    new_parents, old = _relabel(contracted, keep_ids, lambda v: contracted.parent[v])
    vmap = tuple(tops[v] if tops[v] < tree.n else None for v in old)
    new_tree = build_tree(new_parents)
    inst = Instance.rmfc_pow2(new_tree)
    level_map = tuple((lo, min(2 * lo, padded.L)) for lo in levels[: new_tree.L])
    params = {"padding": pad, "padded_depth": padded.L, "levels": levels,
              "n_original": tree.n, "n_compressed": new_tree.n}
    return inst, TransformTrace("compress-rmfc", vmap, level_map, params, budget_factor=2)


def greedy_picks(inst: Instance, lam: int = 1) -> list[list[int]]:
    """Per level, the lam * B_l uncovered vertices of largest subtree weight.

    Ties go to the smaller vertex id.  Returns the picks level by level
    (index 0 is the root level and always empty).
    """
    t = inst.tree
    sw = subtree_weights(inst)
    covered = [False] * t.n
    picks: list[list[int]] = [[]]
    for l in range(1, t.L + 1):
        for v in t.levels[l]:
            if covered[t.parent[v]]:
                covered[v] = True
        avail = [v for v in t.levels[l] if not covered[v]]
        avail.sort(key=lambda v: (-sw[v], v))
        chosen = sorted(avail[: lam * inst.budgets[l - 1]])
        for v in chosen:
            covered[v] = True
        picks.append(chosen)
    return picks


def prune(inst: Instance, lam: int) -> tuple[Instance, TransformTrace]:
    """Keep the greedy picks' subtrees and root paths; path interiors weigh 0."""
    if lam < 1:
        raise InstanceError("lambda must be a positive integer")
    t = inst.tree
    picks = greedy_picks(inst, lam)
    keep = {t.root}
    weights = [0] * t.n
    for level in picks:
        for u in level:
            for v in t.subtree(u):
                keep.add(v)
                weights[v] = inst.weights[v]
            keep.update(t.path(u))
    parents, old = _relabel(t, keep, lambda v: t.parent[v])
    new_tree = build_tree(parents)
    new = Instance(new_tree, tuple(weights[v] for v in old), FF, tuple(inst.budgets[: new_tree.L]))
    return new, TransformTrace("prune", tuple(old), (), {"lambda": lam, "picks": picks})
