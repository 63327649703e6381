"""Approximation scheme for the Firefighter problem.

The core works on a compressed and pruned instance.  Vertices whose
subtree weighs at least a threshold eta are heavy; a small set Q of heavy
vertices cuts the heavy tree into paths, and for every subset Z of Q the
LP is solved with "exactly one unit on each chosen path, nothing on the
others".  The best such LP optimum is rounded by dropping its loose
vertices and re-solving over its tight ones, which is integral.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import CertificateError, EnumerationBudgetExceeded, InstanceError, NonIntegralVertex
from .lp import (BasicSolution, build_lp_ff, classify_tight_loose, path_sums, solve_vertex,
                 vertex_values)
from .transforms import (TransformTrace, compress_ff, contract_zero_budget_levels,
                         general_to_unit_budget, lift, prune)
from .tree import (Instance, ProtectionPlan, make_plan,
                   subtree_weights, validate_protection)

log = logging.getLogger(__name__)

DEFAULT_ENUM_CAP = 20


@dataclass(frozen=True)
class HeavyDecomposition:
    eta: Fraction
    heavy: frozenset
    Q: tuple[int, ...]
    q_paths: dict = field(compare=False)

    def path_of(self) -> dict[int, int]:
        """Heavy vertex -> the q whose path contains it."""
        return {v: q for q, path in self.q_paths.items() for v in path}


def heavy_threshold(inst: Instance, eps) -> Fraction:
    """eta = eps^2 w(V) / (12 L)."""
    eps = Fraction(eps)
    L = max(inst.tree.L, 1)
    return eps * eps * inst.total_weight() / (12 * L)


def heavy_set(inst: Instance, eta) -> frozenset:
    sw = subtree_weights(inst)
    t = inst.tree
    return frozenset(u for u in range(t.n) if u != t.root and sw[u] >= eta)


def compute_q(inst: Instance, heavy: Iterable[int], eta) -> HeavyDecomposition:
    """Peel heavy leaves, then add branching vertices of the heavy tree.

    Peeling repeatedly takes the smallest-id leaf of the current heavy tree,
    records it, and deletes its subtree; subtree weights of the remaining
    tree are updated along the root path.
    """
    t = inst.tree
    eta = Fraction(eta)
    heavy = frozenset(heavy)
    sw = subtree_weights(inst)
    alive = [True] * t.n
    current = list(sw)
    peeled: list[int] = []

    def is_heavy(v):
        return alive[v] and v != t.root and current[v] >= eta

    while True:
        leaf = None
        for v in range(t.n):
            if is_heavy(v) and not any(is_heavy(c) for c in t.children[v]):
                leaf = v
                break
        if leaf is None:
            break
        peeled.append(leaf)
        gone = current[leaf]
        for v in t.subtree(leaf):
            alive[v] = False
        p = t.parent[leaf]
        while p is not None:
            current[p] -= gone
            p = t.parent[p]

    Q = set(peeled)
    for v in heavy:
        if sum(1 for c in t.children[v] if c in heavy) >= 2:
            Q.add(v)
    q_paths = {}
    for q in sorted(Q):
        path = [q]
        v = t.parent[q]
        while v is not None and v != t.root and v not in Q:
            path.append(v)
            v = t.parent[v]
        q_paths[q] = tuple(path)
    return HeavyDecomposition(eta, heavy, tuple(sorted(Q)), q_paths)


def component_weights(inst: Instance, removed: Iterable[int]) -> list[int]:
    """Weights of the connected components left after deleting ``removed`` and the root."""
    t = inst.tree
    cut = set(removed) | {t.root}
    comp = [-1] * t.n
    totals: list[int] = []
    for v in t.order:
        if v in cut:
            continue
        p = t.parent[v]
        if p is None or p in cut:
            comp[v] = len(totals)
            totals.append(0)
        else:
            comp[v] = comp[p]
        totals[comp[v]] += inst.weights[v]
    return totals


def check_decomposition(inst: Instance, dec: HeavyDecomposition) -> None:
    """Raise CertificateError unless Q has the properties the rounding relies on."""
    t = inst.tree
    heavy = dec.heavy
    Qs = set(dec.Q)
    if not Qs <= heavy:
        raise CertificateError("Q contains non-heavy vertices")
    for v in heavy:
        hc = sum(1 for c in t.children[v] if c in heavy)
        if (hc == 0 or hc >= 2) and v not in Qs:
            raise CertificateError(f"heavy-tree leaf or branching vertex {v} missing from Q")
    covered = [v for path in dec.q_paths.values() for v in path]
    if len(covered) != len(set(covered)) or set(covered) != set(heavy):
        raise CertificateError("Q-paths do not partition the heavy set")
    for q, path in dec.q_paths.items():
        if set(path) & Qs != {q}:
            raise CertificateError(f"Q-path of {q} meets Q elsewhere")
    if any(w > dec.eta for w in component_weights(inst, Qs)):
        raise CertificateError("a component outside Q weighs more than eta")


def reoptimize_tight(inst: Instance, tight: Iterable[int]) -> ProtectionPlan:
    """Integral optimum of the relaxation restricted to ``tight`` vertices."""
    tight = sorted(tight)
    if not tight:
        return make_plan(inst, ())
    lp = build_lp_ff(inst, restrict=tight)
    sol = solve_vertex(lp)
    if not isinstance(sol, BasicSolution):
        raise CertificateError(f"restricted LP not solvable: {sol}")
    chosen = []
    for u, v in vertex_values(sol).items():
        if v not in (0, 1):
            raise NonIntegralVertex(f"vertex {u} has value {v}")
        if v == 1:
            chosen.append(u)
    plan = make_plan(inst, chosen, lp_value=sol.objective)
    if plan.value != sol.objective:
        raise CertificateError("integral optimum does not score its LP value")
    return plan


def _feasible_zs(inst: Instance, dec: HeavyDecomposition):
    """Subsets Z of Q, in lexicographic order, that pass cheap necessary tests.

    A Z holding two vertices on one root path would put two units on a
    leaf path, and more than B_1 + ... + B_l members of depth <= l would
    overflow a budget row; neither can be feasible.
    """
    t = inst.tree
    Q = dec.Q
    cap = []
    acc = 0
    for b in inst.budgets:
        acc += b
        cap.append(acc)

    def fits(chosen):
        counts = [0] * (t.L + 1)
        for q in chosen:
            counts[t.depth[q]] += 1
        run = 0
        for l in range(1, t.L + 1):
            run += counts[l]
            if run > cap[l - 1]:
                return False
        return True

    def rec(i, chosen):
        yield tuple(chosen)
        for j in range(i, len(Q)):
            q = Q[j]
            if any(t.is_ancestor(q, c) or t.is_ancestor(c, q) for c in chosen):
                continue
            chosen.append(q)
            if fits(chosen):
                yield from rec(j + 1, chosen)
            chosen.pop()

    return rec(0, [])


@dataclass(frozen=True)
class ZResult:
    Z: tuple[int, ...]
    objective: Optional[Fraction]
    x: Optional[dict]
    loose: int = 0


_WORKER_STATE: dict = {}


def _worker_init(inst, q_paths):
    _WORKER_STATE["inst"] = inst
    _WORKER_STATE["q_paths"] = q_paths


def _solve_z(inst: Instance, q_paths: Mapping[int, Sequence[int]], Z: tuple[int, ...]) -> ZResult:
    sol = solve_vertex(build_lp_ff(inst, Z, q_paths))
    if not isinstance(sol, BasicSolution):
        return ZResult(Z, None, None)
    x = vertex_values(sol)
    split = classify_tight_loose(inst.tree, x)
    return ZResult(Z, sol.objective, x, len(split.loose))


def _solve_z_batch(zs):
    inst, q_paths = _WORKER_STATE["inst"], _WORKER_STATE["q_paths"]
    return [_solve_z(inst, q_paths, Z) for Z in zs]


@dataclass
class PtasOutcome:
    plan: ProtectionPlan
    lp_value: Fraction
    Z_star: tuple[int, ...]
    eta: Fraction
    Q: tuple[int, ...]
    lp_solves: int
    loose_counts: list[int]
    loose: frozenset
    tight: frozenset
    certificate: dict


def redistribute(inst: Instance, dec: HeavyDecomposition, x: Mapping[int, Fraction],
                 loose: Iterable[int]) -> dict[int, Fraction]:
    """Drop loose light vertices; move each loose heavy vertex's mass down its Q-path.

    The mass goes to the deepest support vertex of the Q-path, which lies
    below the loose vertex and is tight.
    """
    t = inst.tree
    y = {u: v for u, v in x.items() if v}
    owner = dec.path_of()
    for u in sorted(loose):
        if u not in dec.heavy:
            y.pop(u, None)
            continue
        path = dec.q_paths[owner[u]]
        support = [v for v in path if x.get(v, 0)]
        target = max(support, key=lambda v: t.depth[v])
        if target == u:
            raise CertificateError(f"loose vertex {u} is the deepest support of its Q-path")
        y[target] = y.get(target, 0) + y.pop(u)
    return y


def _lp_ff_z_feasible(inst: Instance, dec: HeavyDecomposition, Z, y: Mapping[int, Fraction]) -> bool:
    t = inst.tree
    if any(v < 0 for v in y.values()):
        return False
    sums = path_sums(t, y)
    if any(sums[leaf] > 1 for leaf in t.leaves):
        return False
    run = Fraction(0)
    cap = 0
    for l in range(1, t.L + 1):
        run += sum(y.get(v, 0) for v in t.levels[l])
        cap += inst.budgets[l - 1]
        if run > cap:
            return False
    for q, path in dec.q_paths.items():
        if sum(y.get(v, 0) for v in path) != (1 if q in Z else 0):
            return False
    return True


def ptas_core(inst: Instance, eps, enum_cap: int = DEFAULT_ENUM_CAP, workers: int = 1) -> PtasOutcome:
    """Enumerate Q-path guesses, pick the best LP, round over its tight vertices."""
    eps = Fraction(eps)
    t = inst.tree
    if inst.total_weight() == 0 or t.L == 0:
        plan = make_plan(inst, ())
        return PtasOutcome(plan, Fraction(0), (), Fraction(0), (), 0, [], frozenset(), frozenset(), {})
    eta = heavy_threshold(inst, eps)
    dec = compute_q(inst, heavy_set(inst, eta), eta)
    check_decomposition(inst, dec)
    if len(dec.Q) > enum_cap:
        raise EnumerationBudgetExceeded(
            f"|Q| = {len(dec.Q)} exceeds the enumeration cap {enum_cap} (2^{len(dec.Q)} subsets)")

    zs = list(_feasible_zs(inst, dec))
    if workers > 1 and len(zs) > 1:
        size = max(1, math.ceil(len(zs) / (4 * workers)))
        batches = [zs[i:i + size] for i in range(0, len(zs), size)]
        with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                                 initargs=(inst, dec.q_paths)) as pool:
            results = [r for batch in pool.map(_solve_z_batch, batches) for r in batch]
    else:
        results = [_solve_z(inst, dec.q_paths, Z) for Z in zs]

    solved = [r for r in results if r.objective is not None]
    loose_counts = [r.loose for r in solved]
    if any(c > t.L for c in loose_counts):
        raise CertificateError(f"a vertex solution has {max(loose_counts)} loose vertices, depth {t.L}")
    # largest LP value; among ties the lexicographically smallest Z
    best = min(solved, key=lambda r: (-r.objective, r.Z))
    x = best.x
    split = classify_tight_loose(t, x)
    plan = reoptimize_tight(inst, split.tight)

    y = redistribute(inst, dec, x, split.loose)
    if not _lp_ff_z_feasible(inst, dec, best.Z, y):
        raise CertificateError("redistributed vector is infeasible")
    sw = subtree_weights(inst)
    val_y = sum((v * sw[u] for u, v in y.items()), Fraction(0))
    if best.objective - val_y > len(split.loose) * eta:
        raise CertificateError("redistribution lost more than eta per loose vertex")
    if plan.value < val_y:
        raise CertificateError("rounded plan is worse than the redistributed vector")
    cert = {"val_x": best.objective, "val_y": val_y, "val_plan": plan.value,
            "loose_bound": len(split.loose) * eta}
    return PtasOutcome(plan, best.objective, best.Z, eta, dec.Q, len(solved), loose_counts,
                       split.loose, split.tight, cert)


@dataclass
class PipelineOutcome:
    plan: ProtectionPlan
    core: PtasOutcome
    traces: list[TransformTrace]
    reduced: Instance
    params: dict


def to_unit_budgets(inst: Instance) -> tuple[Instance, list[TransformTrace]]:
    """Contract zero-budget levels and subdivide edges until every budget is one."""
    traces = []
    if inst.unit_budgets:
        return inst, traces
    if any(b == 0 for b in inst.budgets[1:]):
        inst, tr = contract_zero_budget_levels(inst)
        traces.append(tr)
    if inst.budgets and inst.budgets[0] == 0:
        raise InstanceError("level 1 has zero budget; no vertex there can ever be protected")
    if not inst.unit_budgets:
        inst, tr = general_to_unit_budget(inst)
        traces.append(tr)
    return inst, traces


def ptas_pipeline(original: Instance, eps, enum_cap: int = DEFAULT_ENUM_CAP,
                  workers: int = 1) -> PipelineOutcome:
    """Compress with delta = eps/3, prune with lambda = ceil(3/eps), solve, lift."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise InstanceError("eps must lie strictly between 0 and 1")
    if original.tree.L == 0:
        plan = make_plan(original, ())
        return PipelineOutcome(plan, ptas_core(original, eps), [], original, {})
    delta = eps / 3
    lam = math.ceil(3 / eps)
    unit, traces = to_unit_budgets(original)
    compressed, t1 = compress_ff(unit, delta)
    pruned, t2 = prune(compressed, lam)
    traces += [t1, t2]
    core = ptas_core(pruned, eps, enum_cap=enum_cap, workers=workers)
    chosen = lift(traces, core.plan.vertices)
    verdict = validate_protection(original, chosen)
    if not verdict.feasible:
        raise CertificateError(f"lifted plan infeasible: {verdict.reason}")
    plan = make_plan(original, chosen, algorithm="ptas")
    if plan.value < core.plan.value:
        raise CertificateError("lifting lost value")
    params = {"eps": eps, "delta": delta, "lambda": lam, "eta": core.eta}
    return PipelineOutcome(plan, core, traces, pruned, params)
