"""Rooted trees, problem instances and fire-spread semantics.

Levels are 1-based: the root sits on level 0 and ``levels[l]`` holds the
vertices at distance ``l`` from it.  A protection set is scored with
union-of-subtrees semantics, so redundant sets (two protected vertices on
one leaf-root path) are still valued correctly.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import CycleDetected, DanglingParent, InstanceError, MultipleRoots

log = logging.getLogger(__name__)

FF = "ff"
RMFC = "rmfc"

CUMULATIVE = "cumulative"
PER_LEVEL = "per-level"


class RootedTree:
    """Immutable rooted tree over dense vertex ids ``0..n-1``."""

    __slots__ = ("n", "root", "parent", "children", "depth", "L", "levels",
                 "leaves", "order")

    def __init__(self, parents: Sequence[Optional[int]]):
        n = len(parents)
        roots = [v for v, p in enumerate(parents) if p is None]
        if not roots:
            raise CycleDetected("no vertex without a parent")
        if len(roots) > 1:
            raise MultipleRoots(f"several roots: {roots}")
        children: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parents):
            if p is None:
                continue
            if not isinstance(p, int) or not 0 <= p < n:
                raise DanglingParent(f"vertex {v} has parent {p!r} out of range")
            if p == v:
                raise CycleDetected(f"vertex {v} is its own parent")
            children[p].append(v)
        root = roots[0]
        depth = [-1] * n
        depth[root] = 0
        order = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for c in children[u]:
                depth[c] = depth[u] + 1
                order.append(c)
                queue.append(c)
        if len(order) != n:
            stuck = [v for v in range(n) if depth[v] < 0]
            raise CycleDetected(f"vertices not reachable from root: {stuck}")
        L = max(depth)
        levels: list[list[int]] = [[] for _ in range(L + 1)]
        for v in order:
            levels[depth[v]].append(v)

        self.n = n
        self.root = root
        self.parent = tuple(parents)
        self.children = tuple(tuple(c) for c in children)
        self.depth = tuple(depth)
        self.L = L
        self.levels = tuple(tuple(sorted(lv)) for lv in levels)
        self.leaves = tuple(v for v in range(n) if not children[v] and v != root)
        self.order = tuple(order)

    def __repr__(self):
        return f"RootedTree(n={self.n}, L={self.L})"

    def __eq__(self, other):
        return isinstance(other, RootedTree) and self.parent == other.parent

    def __hash__(self):
        return hash(self.parent)

    def __reduce__(self):
        return (RootedTree, (self.parent,))

    def vertices(self) -> range:
        return range(self.n)

    def non_root(self) -> list[int]:
        return [v for v in range(self.n) if v != self.root]

    def path(self, u: int) -> tuple[int, ...]:
        """P_u: vertices from ``u`` up to (excluding) the root."""
        out = []
        while u != self.root:
            out.append(u)
            u = self.parent[u]
        return tuple(out)

    def subtree(self, u: int) -> tuple[int, ...]:
        """T_u in BFS order, ``u`` first."""
        out = [u]
        i = 0
        while i < len(out):
            out.extend(self.children[out[i]])
            i += 1
        return tuple(out)

    def is_ancestor(self, a: int, b: int) -> bool:
        """True when ``a`` lies on the root path of ``b`` (``a == b`` counts)."""
        if self.depth[a] > self.depth[b]:
            return False
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        return a == b

    def ancestor_at(self, u: int, level: int) -> int:
        while self.depth[u] > level:
            u = self.parent[u]
        return u

    def leaves_below(self) -> list[list[int]]:
        """For every vertex the leaves of its subtree (bottom-up accumulation)."""
        below: list[list[int]] = [[] for _ in range(self.n)]
        for v in reversed(self.order):
            if not self.children[v] and v != self.root:
                below[v].append(v)
            p = self.parent[v]
            if p is not None:
                below[p].extend(below[v])
        return below


def build_tree(parents: Sequence[Optional[int]]) -> RootedTree:
    return RootedTree(parents)


@dataclass(frozen=True)
class Instance:
    """A tree plus weights and a budget schedule.

    ``kind == "ff"``: ``budgets[l-1]`` is B_l for every level l in [L].
    ``kind == "rmfc"``: the budget of level l is ``B * multipliers[l-1]``
    for the uniform budget B that is being minimised; ``multipliers`` is
    all ones for the plain problem and ``2**l`` after compression.
    """

    tree: RootedTree
    weights: tuple[int, ...]
    kind: str = FF
    budgets: Optional[tuple[int, ...]] = None
    multipliers: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        t = self.tree
        if len(self.weights) != t.n:
            raise InstanceError(f"expected {t.n} weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise InstanceError("weights must be nonnegative")
        if self.kind == FF:
            if self.budgets is None or len(self.budgets) != t.L:
                raise InstanceError(f"ff instance needs {t.L} per-level budgets")
            if any(b < 0 for b in self.budgets):
                raise InstanceError("budgets must be nonnegative")
        elif self.kind == RMFC:
            if self.multipliers is None or len(self.multipliers) != t.L:
                raise InstanceError(f"rmfc instance needs {t.L} multipliers")
            if any(a < 1 for a in self.multipliers):
                raise InstanceError("multipliers must be >= 1")
        else:
            raise InstanceError(f"unknown instance kind {self.kind!r}")

    @classmethod
    def ff(cls, tree: RootedTree, weights: Sequence[int], budgets: Sequence[int] | int = 1):
        if isinstance(budgets, int):
            budgets = [budgets] * tree.L
        weights = list(weights)
        if weights and weights[tree.root]:
            log.warning("root weight %s ignored", weights[tree.root])
            weights[tree.root] = 0
        return cls(tree, tuple(int(w) for w in weights), FF, tuple(int(b) for b in budgets))

    @classmethod
    def rmfc(cls, tree: RootedTree, multipliers: Sequence[int] | None = None):
        if multipliers is None:
            multipliers = [1] * tree.L
        weights = [0] * tree.n
        for u in tree.leaves:
            weights[u] = 1
        return cls(tree, tuple(weights), RMFC, None, tuple(int(a) for a in multipliers))

    @classmethod
    def rmfc_pow2(cls, tree: RootedTree):
        return cls.rmfc(tree, [2 ** l for l in range(1, tree.L + 1)])

    @property
    def is_pow2(self) -> bool:
        return self.multipliers == tuple(2 ** l for l in range(1, self.tree.L + 1))

    @property
    def unit_budgets(self) -> bool:
        return self.budgets is not None and all(b == 1 for b in self.budgets)

    def level_budgets(self, budget=None) -> tuple:
        """Per-level budgets b_1..b_L; ``budget`` scales the multipliers."""
        if budget is None:
            if self.budgets is None:
                raise InstanceError("rmfc instance needs an explicit budget")
            return self.budgets
        mult = self.multipliers or (1,) * self.tree.L
        return tuple(budget * a for a in mult)

    def total_weight(self) -> int:
        return sum(self.weights) - self.weights[self.tree.root]


@dataclass(frozen=True)
class ProtectionPlan:
    """A set of protected vertices with its score.

    ``value`` is the saved weight (Firefighter) and ``budget`` the uniform
    budget B certifying the set (RMFC); ``schedule`` pairs every vertex
    with the time step it is protected at, when one was computed.
    """

    vertices: frozenset
    value: Optional[int] = None
    budget: Optional[int] = None
    schedule: Optional[tuple[tuple[int, int], ...]] = None
    meta: dict = field(default_factory=dict, compare=False)

    def sorted(self) -> list[int]:
        return sorted(self.vertices)


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    violated_level: Optional[int] = None
    reason: Optional[str] = None
    usage: tuple[int, ...] = ()

    def __bool__(self):
        return self.feasible


def subtree_weights(inst: Instance) -> list[int]:
    """w(T_u) for every vertex, accumulated bottom-up."""
    t = inst.tree
    out = list(inst.weights)
    out[t.root] = 0
    for v in reversed(t.order):
        p = t.parent[v]
        if p is not None:
            out[p] += out[v]
    return out


def level_usage(tree: RootedTree, protected: Iterable[int]) -> list[int]:
    """Count of protected vertices per level; index 0 is unused."""
    usage = [0] * (tree.L + 1)
    for v in protected:
        usage[tree.depth[v]] += 1
    return usage


def validate_protection(inst: Instance, protected: Iterable[int],
                        mode: str = CUMULATIVE, budget=None) -> Verdict:
    """Check the budget constraints for a protection set.

    ``CUMULATIVE`` enforces |S ∩ V_{<=l}| <= b_1 + ... + b_l, ``PER_LEVEL``
    enforces |S ∩ V_l| <= b_l.  The per-level budgets b_l come from the
    instance, or from ``budget`` times the multipliers when given.
    """
    t = inst.tree
    protected = list(protected)
    for v in protected:
        if not isinstance(v, int) or not 0 <= v < t.n:
            return Verdict(False, None, f"unknown vertex {v!r}")
        if v == t.root:
            return Verdict(False, 0, "root cannot be protected")
    if len(set(protected)) != len(protected):
        return Verdict(False, None, "duplicate vertices")
    b = inst.level_budgets(budget)
    usage = level_usage(t, protected)
    if mode == CUMULATIVE:
        used = cap = 0
        for l in range(1, t.L + 1):
            used += usage[l]
            cap += b[l - 1]
            if used > cap:
                return Verdict(False, l, f"{used} protected in levels 1..{l}, budget {cap}",
                               tuple(usage[1:]))
    elif mode == PER_LEVEL:
        for l in range(1, t.L + 1):
            if usage[l] > b[l - 1]:
                return Verdict(False, l, f"{usage[l]} protected on level {l}, budget {b[l - 1]}",
                               tuple(usage[1:]))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Verdict(True, None, None, tuple(usage[1:]))


def schedule_protection(inst: Instance, protected: Iterable[int], budget=None):
    """Earliest-step assignment of vertices to time steps.

    Vertices are taken by increasing depth and each goes to the earliest
    step t <= depth with spare budget.  Returns ``None`` when some vertex
    cannot be placed.
    """
    t = inst.tree
    b = list(inst.level_budgets(budget))
    spare = [0] + b
    step = 1
    out = []
    for v in sorted(protected, key=lambda v: (t.depth[v], v)):
        while step <= t.depth[v] and spare[step] == 0:
            step += 1
        if step > t.depth[v]:
            return None
        spare[step] -= 1
        out.append((v, step))
    return tuple(out)


def saved_mask(tree: RootedTree, protected: Iterable[int]) -> list[bool]:
    mark = [False] * tree.n
    for v in protected:
        mark[v] = True
    for v in tree.order:
        p = tree.parent[v]
        if p is not None and mark[p]:
            mark[v] = True
    return mark


def saved_weight(inst: Instance, protected: Iterable[int]) -> int:
    """w(∪ T_u) over the protected vertices."""
    mark = saved_mask(inst.tree, protected)
    return sum(w for w, m in zip(inst.weights, mark) if m)


def rmfc_feasible(tree: RootedTree, protected: Iterable[int]) -> bool:
    """Every leaf has a protected vertex on its root path."""
    mark = saved_mask(tree, protected)
    return all(mark[u] for u in tree.leaves)


def min_uniform_budget(inst: Instance, protected: Iterable[int], mode: str = CUMULATIVE) -> int:
    """Smallest integer B >= 1 under which ``validate_protection`` accepts the set."""
    t = inst.tree
    usage = level_usage(t, protected)
    mult = inst.multipliers or (1,) * t.L
    need = 1
    used = cap = 0
    for l in range(1, t.L + 1):
        if mode == CUMULATIVE:
            used += usage[l]
            cap += mult[l - 1]
        else:
            used, cap = usage[l], mult[l - 1]
        need = max(need, -(-used // cap))
    return need


def make_plan(inst: Instance, protected: Iterable[int], budget=None, **meta) -> ProtectionPlan:
    protected = frozenset(protected)
    if inst.kind == FF:
        return ProtectionPlan(protected, value=saved_weight(inst, protected),
                              schedule=schedule_protection(inst, protected), meta=meta)
    sched = schedule_protection(inst, protected, budget) if budget is not None else None
    return ProtectionPlan(protected, budget=budget, schedule=sched, meta=meta)
