"""Constant-factor approximation for RMFC on compressed instances.

Instances here carry per-level multipliers a_l (2^l after compression):
a set S is feasible at budget B when |S ∩ V_l| <= B a_l on every level.
Two solvers run side by side.  ``big_b_solve`` rounds the plain LP and is
good when the optimum is at least log L; ``enum_solve`` guesses the top
levels of an optimal solution with an LP-guided search and covers the
bottom levels by LP rounding.  ``rmfc_pipeline`` compresses a tree, keeps
the better of the two answers and lifts it back.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import CertificateError, EnumerationBudgetExceeded, InstanceError
from .lp import (BUDGET_VAR, GE, LE, BasicSolution, RationalLP, build_lp_rmfc_ad,
                 classify_tight_loose, path_sums, solve_vertex, vertex_values)
from .transforms import TransformTrace, compress_rmfc, lift
from .tree import (CUMULATIVE, Instance, ProtectionPlan, RootedTree, level_usage, make_plan,
                   min_uniform_budget, rmfc_feasible, validate_protection)

log = logging.getLogger(__name__)

ZERO = Fraction(0)
DEFAULT_NODE_CAP = 10 ** 6
ENUM_THRESHOLD = Fraction(2, 3)


# ---------------------------------------------------------------------------
# exact logarithm helpers


def _tower(t: int, q: int, limit: int) -> int:
    """2^2^...^t (q twos); returns limit + 1 as soon as the value exceeds limit."""
    for _ in range(q):
        if t > limit.bit_length():
            return limit + 1
        t = 1 << t
        if t > limit:
            return limit + 1
    return t


def floor_iter_log(L: int, q: int) -> int:
    """floor(log2^(q) L), clamped at 0 where the iterated log is negative or undefined."""
    if q == 0:
        return L
    if _tower(0, q, L) > L:
        return 0
    t = 0
    while _tower(t + 1, q, L) <= L:
        t += 1
    return t


def le_log2(r, L: int) -> bool:
    """r <= log2(L), decided exactly for rational r."""
    if L <= 0:
        return False
    r = Fraction(r)
    return Fraction(2) ** r.numerator <= Fraction(L) ** r.denominator


def log2f(L: int) -> float:
    return math.log2(L) if L > 0 else float("-inf")


def recursion_depth(L: int) -> int:
    """ceil(2 (log L)^2 log log L), at least 0."""
    lg = log2f(L)
    if lg <= 0:
        return 0
    llg = math.log2(lg)
    return max(0, math.ceil(2 * lg * lg * llg))


# ---------------------------------------------------------------------------
# rounding of bottom levels


def _multipliers(inst: Instance) -> tuple[int, ...]:
    return inst.multipliers or tuple(2 ** l for l in range(1, inst.tree.L + 1))


def integral_budget(inst: Instance, protected: Iterable[int]) -> int:
    """Smallest integer B >= 1 with |S ∩ V_l| <= B a_l on every level."""
    usage = level_usage(inst.tree, protected)
    mult = _multipliers(inst)
    return max([1] + [-(-usage[l] // mult[l - 1]) for l in range(1, inst.tree.L + 1)])


def fractional_budget(inst: Instance, protected: Iterable[int]) -> Fraction:
    """max_l |S ∩ V_l| / a_l."""
    usage = level_usage(inst.tree, protected)
    mult = _multipliers(inst)
    return max([ZERO] + [Fraction(usage[l], mult[l - 1]) for l in range(1, inst.tree.L + 1)])


def slice_levels(L: int, k: int) -> tuple[int, int]:
    return floor_iter_log(L, k), floor_iter_log(L, k - 1)


def slice_cover(inst: Instance, x: Mapping[int, Fraction], B, eta, k: int) -> frozenset:
    """Integral cover of the leaves that x cuts off by at least eta inside one slice.

    The slice is levels (floor log^(k) L, floor log^(k-1) L].  Returns R
    inside the slice that meets P_u for every leaf u with x(P_u) >= eta and
    uses at most (B/eta + 1) a_l vertices on each level l.
    """
    t = inst.tree
    B, eta = Fraction(B), Fraction(eta)
    if not 0 < eta <= 1:
        raise InstanceError("eta must lie in (0, 1]")
    lo, hi = slice_levels(t.L, k)
    hi = min(hi, t.L)
    x = {u: Fraction(v) for u, v in x.items() if v}
    if lo >= hi:
        if x:
            raise InstanceError("nonzero vector on an empty slice")
        return frozenset()
    for u in x:
        if not lo < t.depth[u] <= hi:
            raise InstanceError(f"vertex {u} at depth {t.depth[u]} lies outside slice ({lo}, {hi}]")
    sums = path_sums(t, x)
    Y = [u for u in t.leaves if sums[u] >= eta]
    if not Y:
        return frozenset()
    mult = _multipliers(inst)
    scaled = B / eta
    lp = RationalLP(maximize=False, name=f"slice_{k}")
    for u in range(t.n):
        if u != t.root and lo < t.depth[u] <= hi:
            lp.add_var(u, 1)
    for l in range(lo + 1, hi + 1):
        lp.add_constraint({v: 1 for v in t.levels[l]}, LE, scaled * mult[l - 1], f"budget_{l}")
    for u in Y:
        lp.add_constraint({v: 1 for v in t.path(u) if lo < t.depth[v] <= hi}, GE, 1, f"leaf_{u}")
    sol = solve_vertex(lp)
    if not isinstance(sol, BasicSolution):
        raise CertificateError(f"slice LP unsolvable although x/eta is feasible: {sol}")
    y = vertex_values(sol)
    split = classify_tight_loose(t, y, strict=False)
    R = frozenset(split.loose | {u for u, v in y.items() if v == 1})
    if len(split.loose) > hi - lo:
        raise CertificateError(f"slice solution has {len(split.loose)} loose vertices on {hi - lo} levels")
    mark = set(R)
    for u in Y:
        if not mark.intersection(t.path(u)):
            raise CertificateError(f"slice cover misses leaf {u}")
    usage = level_usage(t, R)
    for l in range(lo + 1, hi + 1):
        if usage[l] > (scaled + 1) * mult[l - 1]:
            raise CertificateError(f"slice cover overloads level {l}")
    return R


def bottom_cover(inst: Instance, x: Mapping[int, Fraction], B, mu, q: int) -> frozenset:
    """Round x (supported below level floor log^(q) L) slice by slice with eta = mu/q.

    The result meets P_u for every leaf with x(P_u) >= mu and uses at most
    ((q/mu) B + 1) a_l vertices on each level l.
    """
    t = inst.tree
    mu, B = Fraction(mu), Fraction(B)
    if not 0 < mu <= 1 or q < 1:
        raise InstanceError("need 0 < mu <= 1 and q >= 1")
    h = floor_iter_log(t.L, q)
    x = {u: Fraction(v) for u, v in x.items() if v}
    if any(t.depth[u] <= h for u in x):
        raise InstanceError(f"vector has support on top levels <= {h}")
    eta = mu / q
    R: set[int] = set()
    for k in range(1, q + 1):
        lo, hi = slice_levels(t.L, k)
        part = {u: v for u, v in x.items() if lo < t.depth[u] <= hi}
        R |= slice_cover(inst, part, B, eta, k)
    sums = path_sums(t, x)
    for u in t.leaves:
        if sums[u] >= mu and not R.intersection(t.path(u)):
            raise CertificateError(f"bottom cover misses leaf {u}")
    usage = level_usage(t, R)
    mult = _multipliers(inst)
    cap = q / mu * B + 1
    for l in range(1, t.L + 1):
        if usage[l] > cap * mult[l - 1]:
            raise CertificateError(f"bottom cover overloads level {l}")
    return frozenset(R)


# ---------------------------------------------------------------------------
# large-budget solver


@dataclass
class RmfcResult:
    vertices: frozenset
    budget: int
    fractional_budget: Fraction
    lp_budget: Optional[Fraction] = None
    details: dict = field(default_factory=dict)


def solve_lp_ad(inst: Instance, A=(), D=()):
    """(x, B) for LP(A, D), or None when infeasible."""
    sol = solve_vertex(build_lp_rmfc_ad(inst, A, D))
    if not isinstance(sol, BasicSolution):
        return None
    return vertex_values(sol), sol[BUDGET_VAR]


def saturation_sweep(tree: RootedTree, q: Mapping[int, Fraction], leaves: Iterable[int]) -> dict:
    """Lower entries deepest-first as far as every listed leaf keeps x(P_u) >= 1."""
    leaves = list(leaves)
    qq = {u: Fraction(v) for u, v in q.items() if v}
    sums = path_sums(tree, qq)
    slack = {u: sums[u] - 1 for u in leaves}
    below: dict[int, list[int]] = {}
    for u in leaves:
        for v in tree.path(u):
            below.setdefault(v, []).append(u)
    for v in sorted(qq, key=lambda v: (-tree.depth[v], v)):
        cut = qq[v]
        for u in below.get(v, ()):
            cut = min(cut, slack[u])
        if cut > 0:
            qq[v] -= cut
            for u in below.get(v, ()):
                slack[u] -= cut
    return {u: v for u, v in qq.items() if v}


def big_b_solve(inst: Instance) -> RmfcResult:
    """Budget at most 3 max{log L, B_OPT}: bottom rounding plus a top-level re-solve."""
    t = inst.tree
    if not t.leaves:
        raise InstanceError("tree has no leaves")
    x, B = solve_lp_ad(inst)
    h = floor_iter_log(t.L, 1)
    bottom = {u: v for u, v in x.items() if v and t.depth[u] > h}
    top = {u: v for u, v in x.items() if v and t.depth[u] <= h}
    bsum = path_sums(t, bottom)
    half = Fraction(1, 2)
    W = [u for u in t.leaves if bsum[u] >= half]
    rest = [u for u in t.leaves if bsum[u] < half]
    R1 = bottom_cover(inst, bottom, B, half, 1)

    R2: frozenset = frozenset()
    top_budget = ZERO
    if rest:
        doubled = {u: 2 * v for u, v in top.items()}
        dsum = path_sums(t, doubled)
        if any(dsum[u] <= 1 for u in rest):
            raise CertificateError("doubled top part fails to over-cover a top leaf")
        trimmed = saturation_sweep(t, doubled, rest)
        tsum = path_sums(t, trimmed)
        if any(tsum[u] != 1 for u in rest):
            raise CertificateError("saturation sweep did not reach exactly one")
        top_vertices = [u for u in range(t.n) if u != t.root and t.depth[u] <= h]
        lp = build_lp_rmfc_ad(inst, restrict=top_vertices, leaves=rest, equal_paths=True,
                              budget_floor=0)
        sol = solve_vertex(lp)
        if not isinstance(sol, BasicSolution):
            raise CertificateError(f"top-level LP unsolvable: {sol}")
        top_budget = sol[BUDGET_VAR]
        if top_budget > 2 * B:
            raise CertificateError("top-level LP exceeds twice the root LP budget")
        z = vertex_values(sol)
        split = classify_tight_loose(t, z, strict=False)
        if len(split.loose) > h:
            raise CertificateError(f"top-level solution has {len(split.loose)} loose vertices")
        R2 = frozenset(split.loose | {u for u, v in z.items() if v == 1})
    chosen = R1 | R2
    if not rmfc_feasible(t, chosen):
        raise CertificateError("large-budget solution leaves a leaf exposed")
    details = {"h": h, "W": len(W), "R1": sorted(R1), "R2": sorted(R2), "top_lp_budget": top_budget}
    return RmfcResult(chosen, integral_budget(inst, chosen), fractional_budget(inst, chosen), B, details)


# ---------------------------------------------------------------------------
# LP-guided enumeration


@dataclass(frozen=True)
class EnumState:
    A: frozenset
    D: frozenset
    x: dict = field(compare=False, hash=False)
    B: Fraction = ZERO

    def key(self):
        return (len(self.A), len(self.D), tuple(sorted(self.A)), tuple(sorted(self.D)))


def is_clean_pair(tree: RootedTree, A: Iterable[int], D: Iterable[int]) -> bool:
    """Disjoint, and every strict ancestor of a member of A ∪ D is in D."""
    A, D = set(A), set(D)
    if A & D:
        return False
    for u in A | D:
        if any(v not in D for v in tree.path(u)[1:]):
            return False
    return True


def top_level(L: int) -> int:
    return floor_iter_log(L, 2)


def frontier(tree: RootedTree, x: Mapping[int, Fraction], A, D, h: int) -> list[int]:
    """Topmost non-excluded top vertices above leaves not cut off by 2/3 below h."""
    bottom = {u: v for u, v in x.items() if v and tree.depth[u] > h}
    bsum = path_sums(tree, bottom)
    out = set()
    for u in tree.leaves:
        if bsum[u] >= ENUM_THRESHOLD:
            continue
        top = [v for v in reversed(tree.path(u)) if tree.depth[v] <= h and v not in D]
        if not top:
            raise CertificateError(f"leaf {u} has no free top vertex yet is not cut below")
        out.add(top[0])
    return sorted(out - set(A))


def enum(inst: Instance, A=(), D=(), gamma: Optional[int] = None,
         node_cap: int = DEFAULT_NODE_CAP, check_clean: bool = False) -> list[EnumState]:
    """All (A, D, x) triples met by the recursive search, sorted by (|A|, |D|, ids)."""
    t = inst.tree
    L = t.L
    h = top_level(L)
    if gamma is None:
        gamma = recursion_depth(L)
    seen: dict[tuple, int] = {}
    found: dict[tuple, EnumState] = {}
    nodes = 0
    stack = [(frozenset(A), frozenset(D), gamma)]
    while stack:
        A_, D_, g = stack.pop()
        key = (A_, D_)
        if key in seen and seen[key] >= g:
            continue
        seen[key] = g
        nodes += 1
        if nodes > node_cap:
            raise EnumerationBudgetExceeded(f"enumeration exceeded {node_cap} nodes")
        if check_clean and not is_clean_pair(t, A_, D_):
            raise CertificateError(f"unclean pair A={sorted(A_)} D={sorted(D_)}")
        res = solve_lp_ad(inst, A_, D_)
        if res is None:
            continue
        x, B = res
        if not le_log2(B, L):
            continue
        found.setdefault(key, EnumState(A_, D_, x, B))
        if g == 0:
            continue
        F = frontier(t, x, A_, D_, h)
        if F:
            top_mass = sum((v for u, v in x.items() if t.depth[u] <= h), ZERO)
            if not len(F) < 3 * top_mass:
                raise CertificateError(f"|F| = {len(F)} not below 3 x(V<=h) = {3 * top_mass}")
            if not len(F) < 6 * log2f(L) ** 2:
                raise CertificateError(f"|F| = {len(F)} not below 6 (log L)^2")
        children = []
        for u in F:
            children.append((A_ | {u}, D_, g - 1))
            children.append((A_, D_ | {u}, g - 1))
        stack.extend(reversed(children))
    return sorted(found.values(), key=EnumState.key)


def enum_solve(inst: Instance, gamma: Optional[int] = None,
               node_cap: int = DEFAULT_NODE_CAP) -> RmfcResult:
    """Best bottom-rounded completion over all enumerated top-level guesses."""
    t = inst.tree
    if not t.leaves:
        raise InstanceError("tree has no leaves")
    h = top_level(t.L)
    top_vertices = frozenset(u for u in range(t.n) if u != t.root and t.depth[u] <= h)
    triples = enum(inst, gamma=gamma, node_cap=node_cap)
    completions: dict[frozenset, Optional[tuple]] = {}
    best = None
    for st in triples:
        if st.A not in completions:
            res = solve_lp_ad(inst, st.A, top_vertices - st.A)
            if res is None:
                completions[st.A] = None
            else:
                y, B_bar = res
                bottom = {u: v for u, v in y.items() if v and t.depth[u] > h}
                R = bottom_cover(inst, bottom, B_bar, 1, 2)
                chosen = R | st.A
                if not rmfc_feasible(t, chosen):
                    raise CertificateError(f"completion of A={sorted(st.A)} leaves a leaf exposed")
                completions[st.A] = (chosen, B_bar)
        cand = completions[st.A]
        if cand is None:
            continue
        budget = integral_budget(inst, cand[0])
        if best is None or budget < best[0]:
            best = (budget, cand[0], cand[1], st)
    if best is None:
        chosen = frozenset(t.levels[1])
        return RmfcResult(chosen, integral_budget(inst, chosen), fractional_budget(inst, chosen), None,
                          {"fallback": True, "triples": 0})
    budget, chosen, B_bar, st = best
    details = {"fallback": False, "triples": len(triples), "A": sorted(st.A), "D": sorted(st.D)}
    return RmfcResult(chosen, budget, fractional_budget(inst, chosen), B_bar, details)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class RmfcOutcome:
    plan: ProtectionPlan
    budget: int
    compressed: Instance
    trace: TransformTrace
    compressed_budget: int
    chosen: str
    big_b: RmfcResult
    enumeration: RmfcResult


def rmfc_pipeline(tree: RootedTree, node_cap: int = DEFAULT_NODE_CAP) -> RmfcOutcome:
    """Compress, run both solvers, keep the smaller budget, lift at factor 2."""
    if not tree.leaves:
        raise InstanceError("tree has no leaves")
    compressed, trace = compress_rmfc(tree)
    big = big_b_solve(compressed)
    en = enum_solve(compressed, node_cap=node_cap)
    pick, name = (big, "big-b") if big.budget <= en.budget else (en, "enum")
    chosen = lift(trace, pick.vertices)
    original = Instance.rmfc(tree)
    if not rmfc_feasible(tree, chosen):
        raise CertificateError("lifted plan leaves a leaf exposed")
    budget = min_uniform_budget(original, chosen, CUMULATIVE)
    if budget > trace.budget_factor * pick.budget:
        raise CertificateError(f"lifted budget {budget} exceeds twice {pick.budget}")
    if not validate_protection(original, chosen, CUMULATIVE, budget).feasible:
        raise CertificateError("lifted plan fails the budget check")
    plan = make_plan(original, chosen, budget=budget, algorithm=name)
    return RmfcOutcome(plan, budget, compressed, trace, pick.budget, name, big, en)
