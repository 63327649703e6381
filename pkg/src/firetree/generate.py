"""Instance generators: seeded random shapes and exhaustive enumeration."""
from __future__ import annotations

import random
from typing import Iterator, Optional

from .errors import BadShape
from .tree import Instance, RootedTree, build_tree

SHAPES = ("random", "spider", "path", "binary")


def shape_parents(n: int, shape: str, rng: Optional[random.Random] = None) -> list[Optional[int]]:
    if n < 1:
        raise BadShape("need at least one vertex")
    if shape == "random":
        rng = rng or random.Random(0)
        return [None] + [rng.randrange(i) for i in range(1, n)]
    if shape == "spider":
        return [None] + [0 if i <= 3 else i - 3 for i in range(1, n)]
    if shape == "path":
        return [None] + list(range(n - 1))
    if shape == "binary":
        return [None] + [(i - 1) // 2 for i in range(1, n)]
    raise BadShape(f"unknown shape {shape!r}; expected one of {', '.join(SHAPES)}")


def random_tree(n: int, seed: int, shape: str = "random") -> RootedTree:
    return build_tree(shape_parents(n, shape, random.Random(seed)))


def random_ff_instance(n: int, seed: int, shape: str = "random", max_weight: int = 10,
                       budget: int = 1) -> Instance:
    """Tree plus uniform integer weights in [0, max_weight] and uniform budgets."""
    rng = random.Random(seed)
    tree = build_tree(shape_parents(n, shape, rng))
    weights = [0] + [rng.randint(0, max_weight) for _ in range(n - 1)]
    return Instance.ff(tree, weights, budget)


def level_sequences(n: int) -> Iterator[list[int]]:
    """Canonical preorder depth sequences of all rooted trees on n vertices."""
    if n < 1:
        return
    seq = list(range(n))
    while True:
        yield list(seq)
        p = n - 1
        while p > 0 and seq[p] == 1:
            p -= 1
        if p == 0:
            return
        q = p - 1
        while seq[q] != seq[p] - 1:
            q -= 1
        for i in range(p, n):
            seq[i] = seq[i - (p - q)]


def parents_from_levels(seq: list[int]) -> list[Optional[int]]:
    parents: list[Optional[int]] = []
    stack: list[int] = []
    for v, d in enumerate(seq):
        del stack[d:]
        parents.append(stack[-1] if stack else None)
        stack.append(v)
    return parents


def all_rooted_trees(n: int) -> Iterator[RootedTree]:
    """Every rooted tree on n vertices exactly once, up to isomorphism."""
    for seq in level_sequences(n):
        yield build_tree(parents_from_levels(seq))
