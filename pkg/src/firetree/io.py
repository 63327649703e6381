"""JSON reading and writing for instances, plans and transform traces."""
from __future__ import annotations

import json
import logging
from fractions import Fraction
from typing import Any, Optional

from .errors import InstanceError
from .transforms import TransformTrace
from .tree import FF, RMFC, Instance, build_tree

log = logging.getLogger(__name__)


def parse_rational(text) -> Fraction:
    """Accept ints, "p/q" strings and decimal strings such as "0.5"."""
    if isinstance(text, bool):
        raise InstanceError(f"not a number: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"not a rational number: {text!r}") from exc


def fmt_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _normalize_ids(parents: dict, weights: Optional[dict]):
    roots = [k for k, p in parents.items() if p is None]
    if len(roots) != 1:
        raise InstanceError(f"expected exactly one root, found {len(roots)}")
    others = sorted((k for k in parents if k != roots[0]), key=str)
    ids = {roots[0]: 0}
    for i, k in enumerate(others, start=1):
        ids[k] = i
    try:
        plist = [None] + [ids[parents[k]] for k in others]
    except KeyError as exc:
        raise InstanceError(f"parent {exc.args[0]!r} is not a vertex") from exc
    wlist = None
    if weights is not None:
        wlist = [0] * len(ids)
        for k, w in weights.items():
            if k not in ids:
                raise InstanceError(f"weight given for unknown vertex {k!r}")
            wlist[ids[k]] = w
    return plist, wlist, ids


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("instance must be a JSON object")
    kind = doc.get("kind")
    if kind not in (FF, RMFC):
        raise InstanceError(f"kind must be 'ff' or 'rmfc', got {kind!r}")
    parents = doc.get("parents")
    weights = doc.get("weights")
    if isinstance(parents, dict):
        parents, weights, _ = _normalize_ids(parents, weights if isinstance(weights, dict) else None)
    if not isinstance(parents, list) or not parents:
        raise InstanceError("parents must be a non-empty list")
    if "n" in doc and doc["n"] != len(parents):
        raise InstanceError(f"n={doc['n']} but {len(parents)} parents given")
    for p in parents:
        if p is not None and (not isinstance(p, int) or isinstance(p, bool)):
            raise InstanceError(f"bad parent entry {p!r}")
    tree = build_tree(parents)
    if kind == FF:
        if weights is None:
            weights = [0] + [1] * (tree.n - 1)
        if not isinstance(weights, list) or len(weights) != tree.n:
            raise InstanceError(f"weights must list {tree.n} integers")
        if any(not isinstance(w, int) or isinstance(w, bool) or w < 0 for w in weights):
            raise InstanceError("weights must be nonnegative integers")
        budgets = doc.get("budgets", 1)
        if isinstance(budgets, list):
            if len(budgets) != tree.L:
                raise InstanceError(f"budgets must list {tree.L} levels")
            if any(not isinstance(b, int) or isinstance(b, bool) or b < 0 for b in budgets):
                raise InstanceError("budgets must be nonnegative integers")
        elif not isinstance(budgets, int) or budgets < 0:
            raise InstanceError("budgets must be a list or a nonnegative integer")
        return Instance.ff(tree, weights, budgets)
    if not tree.leaves:
        raise InstanceError("rmfc instance needs at least one leaf")
    model = doc.get("budget_model", "uniform")
    if model == "uniform":
        return Instance.rmfc(tree)
    if model == "pow2":
        return Instance.rmfc_pow2(tree)
    raise InstanceError(f"budget_model must be 'uniform' or 'pow2', got {model!r}")


def instance_to_dict(inst: Instance) -> dict:
    doc: dict = {"kind": inst.kind, "n": inst.tree.n, "parents": list(inst.tree.parent)}
    if inst.kind == FF:
        doc["weights"] = list(inst.weights)
        doc["budgets"] = list(inst.budgets)
    else:
        doc["budget_model"] = "pow2" if inst.is_pow2 and inst.tree.L else "uniform"
    return doc


def load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise InstanceError(f"{path}: {exc.strerror}") from exc


def load_instance(path: str) -> Instance:
    return instance_from_dict(load_json(path))


def _jsonable(value):
    if isinstance(value, Fraction):
        return fmt_rational(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def trace_to_dict(trace: TransformTrace) -> dict:
    return {"kind": trace.kind, "vertex_map": list(trace.vertex_map),
            "level_map": [list(p) for p in trace.level_map],
            "params": _jsonable(trace.params), "budget_factor": trace.budget_factor}


def trace_from_dict(doc: dict) -> TransformTrace:
    try:
        return TransformTrace(doc["kind"], tuple(doc["vertex_map"]),
                              tuple(tuple(p) for p in doc.get("level_map", [])),
                              doc.get("params", {}), doc.get("budget_factor", 1))
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed trace: {exc}") from exc


def plan_from_doc(doc) -> tuple[list[int], Optional[int]]:
    """Vertex list and optional budget from a plan file (a list or {"plan": [...]})."""
    budget = None
    if isinstance(doc, dict):
        budget = doc.get("budget")
        doc = doc.get("plan", doc.get("vertices"))
    if not isinstance(doc, list) or any(not isinstance(v, int) or isinstance(v, bool) for v in doc):
        raise InstanceError("plan must be a list of vertex ids")
    if budget is not None and (not isinstance(budget, int) or budget < 0):
        raise InstanceError("budget must be a nonnegative integer")
    return doc, budget
