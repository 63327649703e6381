"""Exact rational linear programming.

A two-phase primal simplex over ``fractions.Fraction`` with Bland's rule.
Every optimum returned is a basic (vertex) solution, and carries the list
of constraints that are tight there and pin it down uniquely.

The module also builds the LPs used by the solvers: the Firefighter
relaxation (optionally with fixed Q-paths) and the RMFC relaxation with
forced-in / forced-out vertex sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional, Sequence, Union

from .errors import InvalidFixing, OverlappingFixings, PathOverloaded
from .tree import Instance, RootedTree, subtree_weights

LE, GE, EQ = "<=", ">=", "="

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, Fraction], ...]
    sense: str
    rhs: Fraction
    name: str = ""


class RationalLP:
    """A linear program with nonnegative variables and exact coefficients.

    Build it with :meth:`add_var` and :meth:`add_constraint`; it is not
    modified by solving.  Variables may be declared free, in which case the
    solver splits them into a difference of two nonnegative columns.
    """

    def __init__(self, maximize: bool = False, name: str = "lp"):
        self.maximize = maximize
        self.name = name
        self.names: list[Hashable] = []
        self.nonneg: list[bool] = []
        self.objective: list[Fraction] = []
        self.constraints: list[Constraint] = []
        self._index: dict[Hashable, int] = {}

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: Hashable, obj=0, nonneg: bool = True) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        self._index[name] = len(self.names)
        self.names.append(name)
        self.nonneg.append(nonneg)
        self.objective.append(Fraction(obj))
        return self._index[name]

    def index(self, name: Hashable) -> int:
        return self._index[name]

    def add_constraint(self, coeffs: Mapping[Hashable, object] | Iterable[tuple[Hashable, object]],
                       sense: str, rhs, name: str = "") -> int:
        if sense not in (LE, GE, EQ):
            raise ValueError(f"bad sense {sense!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[int, Fraction] = {}
        for var, c in items:
            j = self._index[var]
            acc[j] = acc.get(j, ZERO) + Fraction(c)
        row = tuple(sorted((j, c) for j, c in acc.items() if c))
        self.constraints.append(Constraint(row, sense, Fraction(rhs), name or f"c{len(self.constraints)}"))
        return len(self.constraints) - 1

    def to_lp_text(self) -> str:
        """CPLEX-LP style dump with rationals written as p/q."""

        def term_list(pairs):
            parts = []
            for j, c in pairs:
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                coef = "" if mag == 1 else f"{_fmt(mag)} "
                parts.append(f"{sign} {coef}{_var_label(self.names[j])}")
            text = " ".join(parts) or "0"
            return text[2:] if text.startswith("+ ") else text

        lines = ["\\ " + self.name, "Maximize" if self.maximize else "Minimize"]
        lines.append(" obj: " + term_list([(j, c) for j, c in enumerate(self.objective) if c]))
        lines.append("Subject To")
        for con in self.constraints:
            lines.append(f" {con.name}: {term_list(con.coeffs)} {con.sense} {_fmt(con.rhs)}")
        lines.append("Bounds")
        for j, name in enumerate(self.names):
            if self.nonneg[j]:
                lines.append(f" {_var_label(name)} >= 0")
            else:
                lines.append(f" {_var_label(name)} free")
        lines.append("End")
        return "\n".join(lines) + "\n"


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _var_label(name) -> str:
    if isinstance(name, int):
        return f"x{name}"
    if isinstance(name, tuple):
        return "_".join(str(p) for p in name)
    return str(name)


@dataclass(frozen=True)
class BasicSolution:
    values: tuple[Fraction, ...]
    objective: Fraction
    names: tuple
    certificate: tuple[tuple[str, int], ...]
    pivots: int = 0

    def __getitem__(self, name) -> Fraction:
        return self.values[self.names.index(name)]

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values))

    def support(self) -> list:
        return [n for n, v in zip(self.names, self.values) if v]


@dataclass(frozen=True)
class Infeasible:
    reason: str = "infeasible"

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Unbounded:
    reason: str = "unbounded"

    def __bool__(self):
        return False


LPResult = Union[BasicSolution, Infeasible, Unbounded]


class _Tableau:
    """Dense simplex tableau; the last entry of each row is the rhs."""

    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.rows = rows
        self.basis = basis
        self.obj: list[Fraction] = []
        self.pivots = 0

    def set_costs(self, costs: Sequence[Fraction]):
        obj = list(costs) + [ZERO]
        for i, b in enumerate(self.basis):
            cb = obj[b]
            if cb:
                row = self.rows[i]
                for j, a in enumerate(row):
                    if a:
                        obj[j] -= cb * a
        self.obj = obj

    def pivot(self, r: int, c: int):
        prow = self.rows[r]
        p = prow[c]
        if p != 1:
            inv = 1 / p
            for j, a in enumerate(prow):
                if a:
                    prow[j] = a * inv
        nz = [(j, a) for j, a in enumerate(prow) if a]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[c]
            if f:
                for j, a in nz:
                    row[j] -= f * a
        f = self.obj[c]
        if f:
            obj = self.obj
            for j, a in nz:
                obj[j] -= f * a
        self.basis[r] = c
        self.pivots += 1

    def run(self, allowed: int) -> bool:
        """Minimise with Bland's rule over columns ``< allowed``; False if unbounded."""
        while True:
            obj = self.obj
            enter = -1
            for j in range(allowed):
                if obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return True
            leave = -1
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best, leave = ratio, i
            if leave < 0:
                return False
            self.pivot(leave, enter)


def solve_vertex(lp: RationalLP) -> LPResult:
    """Optimal basic solution of ``lp``, or an Infeasible / Unbounded marker."""
    nv = lp.num_vars
    # column layout: structural columns (free variables get a negative twin),
    # then one slack per inequality row, then artificials
    col_of: list[int] = []
    neg_of: dict[int, int] = {}
    ncol = 0
    for j in range(nv):
        col_of.append(ncol)
        ncol += 1
    for j in range(nv):
        if not lp.nonneg[j]:
            neg_of[j] = ncol
            ncol += 1

    prepared = []  # (dense coefficient dict over columns, sense, rhs, constraint index)
    for k, con in enumerate(lp.constraints):
        if not con.coeffs:
            ok = ((con.sense == LE and con.rhs >= 0) or (con.sense == GE and con.rhs <= 0)
                  or (con.sense == EQ and con.rhs == 0))
            if not ok:
                return Infeasible(f"constraint {con.name} has no variables and cannot hold")
            continue
        coeffs = {}
        for j, c in con.coeffs:
            coeffs[col_of[j]] = c
            if j in neg_of:
                coeffs[neg_of[j]] = -c
        sense, rhs = con.sense, con.rhs
        if rhs < 0 or (rhs == 0 and sense == GE):
            coeffs = {j: -c for j, c in coeffs.items()}
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        prepared.append((coeffs, sense, rhs, k))

    slack_col: dict[int, int] = {}
    for coeffs, sense, rhs, k in prepared:
        if sense != EQ:
            slack_col[k] = ncol
            ncol += 1
    nreal = ncol
    art_rows = [i for i, (_, sense, _, _) in enumerate(prepared) if sense != LE]
    ntotal = nreal + len(art_rows)

    rows: list[list[Fraction]] = []
    basis: list[int] = []
    art = nreal
    for coeffs, sense, rhs, k in prepared:
        row = [ZERO] * (ntotal + 1)
        for j, c in coeffs.items():
            row[j] = c
        row[-1] = rhs
        if sense == LE:
            row[slack_col[k]] = ONE
            basis.append(slack_col[k])
        else:
            if sense == GE:
                row[slack_col[k]] = -ONE
            row[art] = ONE
            basis.append(art)
            art += 1
        rows.append(row)

    tab = _Tableau(rows, basis)
    if art_rows:
        tab.set_costs([ZERO] * nreal + [ONE] * len(art_rows))
        tab.run(ntotal)
        if tab.obj[-1] != 0:
            return Infeasible("phase one optimum is positive")
        # drive remaining artificials out of the basis, dropping redundant rows
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= nreal:
                row = tab.rows[i]
                col = next((j for j in range(nreal) if row[j]), None)
                if col is None:
                    del tab.rows[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, col)
            i += 1
        for row in tab.rows:
            del row[nreal:ntotal]

    sign = -1 if lp.maximize else 1
    costs = [ZERO] * nreal
    for j in range(nv):
        c = sign * lp.objective[j]
        costs[col_of[j]] = c
        if j in neg_of:
            costs[neg_of[j]] = -c
    tab.set_costs(costs)
    if not tab.run(nreal):
        return Unbounded()

    colval = [ZERO] * nreal
    for i, b in enumerate(tab.basis):
        colval[b] = tab.rows[i][-1]
    values = []
    for j in range(nv):
        v = colval[col_of[j]]
        if j in neg_of:
            v -= colval[neg_of[j]]
        values.append(v)
    objective = sum((c * v for c, v in zip(lp.objective, values)), ZERO)

    basic = set(tab.basis)
    cert: list[tuple[str, int]] = []
    for j in range(nv):
        if lp.nonneg[j] and col_of[j] not in basic:
            cert.append(("bound", j))
    for coeffs, sense, rhs, k in prepared:
        if sense == EQ or slack_col[k] not in basic:
            cert.append(("row", k))
    return BasicSolution(tuple(values), objective, tuple(lp.names), tuple(cert), tab.pivots)


def exact_rank(rows: Sequence[Sequence]) -> int:
    """Rank of a rational matrix by fraction-exact Gaussian elimination."""
    mat = [[Fraction(a) for a in r] for r in rows]
    if not mat:
        return 0
    rank = 0
    ncols = len(mat[0])
    for c in range(ncols):
        piv = next((i for i in range(rank, len(mat)) if mat[i][c]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        p = mat[rank]
        for i in range(len(mat)):
            if i != rank and mat[i][c]:
                f = mat[i][c] / p[c]
                mat[i] = [a - f * b for a, b in zip(mat[i], p)]
        rank += 1
    return rank


def certificate_matrix(lp: RationalLP, sol: BasicSolution) -> list[list[Fraction]]:
    """Rows of the tight constraints listed in the certificate."""
    out = []
    for kind, k in sol.certificate:
        row = [ZERO] * lp.num_vars
        if kind == "bound":
            row[k] = ONE
        else:
            for j, c in lp.constraints[k].coeffs:
                row[j] = c
        out.append(row)
    return out


def check_solution(lp: RationalLP, sol: BasicSolution) -> bool:
    """Feasibility, tightness of every certified constraint, and full rank."""
    vals = sol.values
    for j, v in enumerate(vals):
        if lp.nonneg[j] and v < 0:
            return False
    for con in lp.constraints:
        lhs = sum((c * vals[j] for j, c in con.coeffs), ZERO)
        if con.sense == LE and lhs > con.rhs:
            return False
        if con.sense == GE and lhs < con.rhs:
            return False
        if con.sense == EQ and lhs != con.rhs:
            return False
    for kind, k in sol.certificate:
        if kind == "bound":
            if vals[k] != 0:
                return False
        else:
            con = lp.constraints[k]
            if sum((c * vals[j] for j, c in con.coeffs), ZERO) != con.rhs:
                return False
    return exact_rank(certificate_matrix(lp, sol)) == lp.num_vars


# ---------------------------------------------------------------------------
# problem-specific LPs


def build_lp_ff(inst: Instance, Z: Optional[Iterable[int]] = None,
                q_paths: Optional[Mapping[int, Sequence[int]]] = None,
                restrict: Optional[Iterable[int]] = None) -> RationalLP:
    """Firefighter relaxation, optionally with Q-path fixings.

    With ``q_paths`` given, the path of every q in ``Z`` carries exactly one
    unit and every other Q-path carries none.  ``restrict`` limits the
    variables to a vertex subset (the others are fixed to zero by omission).
    """
    t = inst.tree
    sw = subtree_weights(inst)
    lp = RationalLP(maximize=True, name="firefighter")
    allowed = set(restrict) if restrict is not None else None
    for u in range(t.n):
        if u != t.root and (allowed is None or u in allowed):
            lp.add_var(u, sw[u])
    have = lp._index
    for leaf in t.leaves:
        path = [v for v in t.path(leaf) if v in have]
        if path:
            lp.add_constraint({v: 1 for v in path}, LE, 1, f"leaf_{leaf}")
    cap = 0
    upto: list[int] = []
    for l in range(1, t.L + 1):
        cap += inst.budgets[l - 1]
        upto.extend(v for v in t.levels[l] if v in have)
        if upto:
            lp.add_constraint({v: 1 for v in upto}, LE, cap, f"budget_{l}")
    if q_paths is not None:
        chosen = set(Z or ())
        if not chosen <= set(q_paths):
            raise InvalidFixing(f"Z contains non-Q vertices {sorted(chosen - set(q_paths))}")
        for q in sorted(q_paths):
            path = [v for v in q_paths[q] if v in have]
            rhs = 1 if q in chosen else 0
            if not path:
                if rhs:
                    lp.add_constraint({}, EQ, rhs, f"qpath_{q}")
                continue
            lp.add_constraint({v: 1 for v in path}, EQ, rhs, f"qpath_{q}")
    elif Z:
        raise InvalidFixing("Z given without Q-paths")
    return lp


BUDGET_VAR = "B"


def build_lp_rmfc_ad(inst: Instance, A: Iterable[int] = (), D: Iterable[int] = (),
                     restrict: Optional[Iterable[int]] = None,
                     leaves: Optional[Iterable[int]] = None,
                     equal_paths: bool = False, budget_floor=1) -> RationalLP:
    """RMFC relaxation min B with x(V_l) <= a_l B, x(P_u) >= 1, B >= 1.

    ``A`` is forced to one and ``D`` to zero.  ``restrict`` keeps only the
    given vertices as variables, ``leaves`` selects which leaf paths must
    be covered (default all) and ``equal_paths`` turns the covering rows into
    equalities.
    """
    A, D = set(A), set(D)
    if A & D:
        raise OverlappingFixings(f"vertices both forced in and out: {sorted(A & D)}")
    t = inst.tree
    mult = inst.multipliers or (1,) * t.L
    lp = RationalLP(maximize=False, name="rmfc")
    allowed = set(restrict) if restrict is not None else None
    for u in range(t.n):
        if u != t.root and (allowed is None or u in allowed):
            lp.add_var(u)
    lp.add_var(BUDGET_VAR, 1)
    have = lp._index
    for l in range(1, t.L + 1):
        level = [v for v in t.levels[l] if v in have]
        if level:
            coeffs = {v: 1 for v in level}
            coeffs[BUDGET_VAR] = -mult[l - 1]
            lp.add_constraint(coeffs, LE, 0, f"budget_{l}")
    targets = t.leaves if leaves is None else sorted(leaves)
    for leaf in targets:
        path = [v for v in t.path(leaf) if v in have]
        lp.add_constraint({v: 1 for v in path}, EQ if equal_paths else GE, 1, f"leaf_{leaf}")
    lp.add_constraint({BUDGET_VAR: 1}, GE, budget_floor, "budget_floor")
    for u in sorted(A):
        lp.add_constraint({u: 1} if u in have else {}, EQ, 1, f"force_in_{u}")
    for u in sorted(D):
        if u in have:
            lp.add_constraint({u: 1}, EQ, 0, f"force_out_{u}")
    return lp


def vertex_values(sol: BasicSolution) -> dict[int, Fraction]:
    """The vertex-indexed entries of a solution (drops the budget variable)."""
    return {n: v for n, v in zip(sol.names, sol.values) if isinstance(n, int)}


@dataclass(frozen=True)
class TightLooseSplit:
    loose: frozenset
    tight: frozenset
    path_sums: dict = field(compare=False, default_factory=dict)

    @property
    def support(self) -> frozenset:
        return self.loose | self.tight


def path_sums(tree: RootedTree, x: Mapping[int, Fraction]) -> list[Fraction]:
    """x(P_u) for every vertex (root gets 0)."""
    out = [ZERO] * tree.n
    for v in tree.order:
        p = tree.parent[v]
        if p is not None:
            out[v] = out[p] + x.get(v, ZERO)
    return out


def classify_tight_loose(tree: RootedTree, x: Union[BasicSolution, Mapping[int, Fraction]],
                         strict: bool = True) -> TightLooseSplit:
    """Split supp(x) into loose (x(P_u) < 1) and tight (x(P_u) = 1) vertices.

    With ``strict`` a vertex whose path carries more than one unit raises
    PathOverloaded; otherwise such vertices count as tight.
    """
    if isinstance(x, BasicSolution):
        x = vertex_values(x)
    sums = path_sums(tree, x)
    loose, tight = [], []
    for u, v in x.items():
        if not v:
            continue
        if v < 0:
            raise PathOverloaded(f"negative entry at vertex {u}")
        s = sums[u]
        if s < 1:
            loose.append(u)
        elif s == 1 or not strict:
            tight.append(u)
        else:
            raise PathOverloaded(f"x(P_{u}) = {s} exceeds one")
    if strict:
        for leaf in tree.leaves:
            if sums[leaf] > 1:
                raise PathOverloaded(f"x(P_{leaf}) = {sums[leaf]} exceeds one")
    return TightLooseSplit(frozenset(loose), frozenset(tight), {u: sums[u] for u in range(tree.n)})
