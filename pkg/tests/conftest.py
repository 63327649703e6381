from __future__ import annotations

import itertools

from hypothesis import strategies as st

from firetree.tree import Instance, build_tree, validate_protection, saved_weight


@st.composite
def parent_lists(draw, min_n=2, max_n=9):
    n = draw(st.integers(min_n, max_n))
    return [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]


@st.composite
def ff_instances(draw, min_n=2, max_n=9, max_weight=10):
    tree = build_tree(draw(parent_lists(min_n, max_n)))
    weights = [0] + [draw(st.integers(0, max_weight)) for _ in range(tree.n - 1)]
    budgets = [draw(st.integers(0, 2)) for _ in range(tree.L)]
    if budgets:
        budgets[0] = max(budgets[0], 1)
    return Instance.ff(tree, weights, budgets)


def subsets_optimum(inst: Instance) -> int:
    """Plain 2^n search; only for tiny trees, used to cross-check the oracles."""
    best = 0
    others = inst.tree.non_root()
    for k in range(len(others) + 1):
        for S in itertools.combinations(others, k):
            if validate_protection(inst, S):
                best = max(best, saved_weight(inst, S))
    return best


ACCEPTANCE: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
