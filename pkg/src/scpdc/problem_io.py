"""JSON problem files.

A program is stored as::

    {
      "dim": n,
      "objective": {"f1": {"Q": [[...]], "q": [...], "r": x},
                    "f2": {...}},                 # f2 optional, zero if absent
      "constraints": [{"name": "...",             # name optional
                       "u": {"Q", "q", "r"},
                       "v": {"Q", "q", "r"}}, ...],
      "omega": {"lb": [...], "ub": [...],
                "A": [[...]], "b": [...],         # optional
                "E": [[...]], "d": [...]}         # optional
    }

Matrices are row-major nested arrays of IEEE doubles in decimal text.
Infinite box bounds are encoded as ``null`` (-inf in ``lb``, +inf in
``ub``); strict JSON has no infinity literal.

Serialization is canonical: keys sorted, floats printed with 17
significant digits, no whitespace.  Parsing a canonical file and
re-serializing it reproduces the bytes exactly, which is what makes the
generators' determinism testable.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .dc_model import (ConvexQuadratic, ConvexSetOmega, DCPair, DCProgram,
                       SymMatrix)

__all__ = [
    "ProblemFormatError",
    "program_to_dict",
    "program_from_dict",
    "canonical_json",
    "dump_program",
    "load_program",
    "load_json_file",
]


class ProblemFormatError(ValueError):
    """Malformed problem file; carries a human-readable position when known."""


def _fmt_number(x) -> str:
    if isinstance(x, bool):
        raise ProblemFormatError("booleans are not valid numbers here")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)
    if math.isnan(xf) or math.isinf(xf):
        raise ProblemFormatError("non-finite number %r cannot be serialized" % xf)
    s = format(xf, ".17g")
    return s


def canonical_json(obj) -> str:
    """Render ``obj`` (dicts/lists/numbers/strings/None) canonically."""
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = ",".join(
            "%s:%s" % (json.dumps(k), canonical_json(obj[k])) for k in sorted(obj)
        )
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    return _fmt_number(obj)


def _quad_to_dict(f: ConvexQuadratic) -> dict:
    return {"Q": f.Q.data.tolist(), "q": f.q.tolist(), "r": f.r}


def _bound_list(vec, sign: float) -> list:
    out = []
    for v in vec:
        if math.isinf(v) and (v > 0) == (sign > 0):
            out.append(None)
        else:
            out.append(float(v))
    return out


def program_to_dict(p: DCProgram) -> dict:
    doc = {
        "dim": p.dim,
        "objective": {"f1": _quad_to_dict(p.objective.u)},
        "constraints": [],
        "omega": {
            "lb": _bound_list(p.omega.lb, -1.0),
            "ub": _bound_list(p.omega.ub, +1.0),
        },
    }
    if not p.objective.v.is_zero:
        doc["objective"]["f2"] = _quad_to_dict(p.objective.v)
    for i, c in enumerate(p.constraints):
        entry = {"u": _quad_to_dict(c.u), "v": _quad_to_dict(c.v)}
        if p.labels is not None:
            entry["name"] = p.labels[i]
        doc["constraints"].append(entry)
    if p.omega.A is not None:
        doc["omega"]["A"] = p.omega.A.tolist()
        doc["omega"]["b"] = p.omega.b.tolist()
    if p.omega.E is not None:
        doc["omega"]["E"] = p.omega.E.tolist()
        doc["omega"]["d"] = p.omega.d.tolist()
    return doc


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ProblemFormatError("missing %r in %s" % (key, where))
    return doc[key]


def _as_matrix(obj, where: str) -> np.ndarray:
    try:
        m = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError("%s: not a numeric matrix (%s)" % (where, exc))
    if m.ndim == 1 and m.size == 0:
        m = m.reshape(0, 0)
    if m.ndim != 2:
        raise ProblemFormatError("%s: expected a nested (row-major) array" % where)
    return m


def _as_vector(obj, where: str) -> np.ndarray:
    try:
        v = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError("%s: not a numeric vector (%s)" % (where, exc))
    if v.ndim != 1:
        raise ProblemFormatError("%s: expected a flat array" % where)
    return v


def _quad_from_dict(doc, dim: int, where: str) -> ConvexQuadratic:
    if not isinstance(doc, dict):
        raise ProblemFormatError("%s: expected an object with Q/q/r" % where)
    Q = _as_matrix(_require(doc, "Q", where), where + ".Q")
    if Q.shape != (dim, dim):
        raise ProblemFormatError("%s.Q: shape %r, expected (%d, %d)"
                                 % (where, Q.shape, dim, dim))
    q = _as_vector(_require(doc, "q", where), where + ".q")
    if q.shape != (dim,):
        raise ProblemFormatError("%s.q: length %d, expected %d"
                                 % (where, q.shape[0], dim))
    r = _require(doc, "r", where)
    try:
        return ConvexQuadratic(SymMatrix.symmetrize(Q), q, float(r))
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError("%s: %s" % (where, exc))


def _bounds_from_list(obj, dim: int, sign: float, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != dim:
        raise ProblemFormatError("%s: expected a list of length %d" % (where, dim))
    out = np.empty(dim)
    for i, v in enumerate(obj):
        if v is None:
            out[i] = sign * np.inf
        else:
            out[i] = float(v)
    return out


def program_from_dict(doc) -> DCProgram:
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level: expected an object")
    dim = _require(doc, "dim", "top level")
    if not isinstance(dim, int) or dim <= 0:
        raise ProblemFormatError("dim: expected a positive integer")

    obj_doc = _require(doc, "objective", "top level")
    f1 = _quad_from_dict(_require(obj_doc, "f1", "objective"), dim, "objective.f1")
    if "f2" in obj_doc:
        f2 = _quad_from_dict(obj_doc["f2"], dim, "objective.f2")
    else:
        f2 = ConvexQuadratic.zero(dim)
    objective = DCPair(f1, f2)

    cons = []
    labels = []
    any_label = False
    for i, centry in enumerate(doc.get("constraints", [])):
        where = "constraints[%d]" % i
        u = _quad_from_dict(_require(centry, "u", where), dim, where + ".u")
        v = _quad_from_dict(_require(centry, "v", where), dim, where + ".v")
        cons.append(DCPair(u, v))
        name = centry.get("name")
        if name is not None:
            any_label = True
        labels.append(name if name is not None else "g[%d]" % i)

    om_doc = _require(doc, "omega", "top level")
    lb = _bounds_from_list(_require(om_doc, "lb", "omega"), dim, -1.0, "omega.lb")
    ub = _bounds_from_list(_require(om_doc, "ub", "omega"), dim, +1.0, "omega.ub")
    kw = {}
    if "A" in om_doc or "b" in om_doc:
        A = _as_matrix(_require(om_doc, "A", "omega"), "omega.A")
        b = _as_vector(_require(om_doc, "b", "omega"), "omega.b")
        if A.size == 0:
            A = A.reshape(0, dim)
        kw["A"] = A
        kw["b"] = b
    if "E" in om_doc or "d" in om_doc:
        E = _as_matrix(_require(om_doc, "E", "omega"), "omega.E")
        d = _as_vector(_require(om_doc, "d", "omega"), "omega.d")
        if E.size == 0:
            E = E.reshape(0, dim)
        kw["E"] = E
        kw["d"] = d
    try:
        omega = ConvexSetOmega(lb=lb, ub=ub, **kw)
        return DCProgram(dim=dim, objective=objective, constraints=tuple(cons),
                         omega=omega, labels=tuple(labels) if any_label else None)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(str(exc))


def dump_program(p: DCProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(program_to_dict(p)))
        fh.write("\n")


def load_json_file(path):
    """Parse a JSON file, annotating syntax errors with their position."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            "%s: line %d column %d: %s" % (path, exc.lineno, exc.colno, exc.msg)
        )


def load_program(path) -> DCProgram:
    return program_from_dict(load_json_file(path))
