"""JSON model and result files.

A model file is ``{"mode", "labels", "factors"}``; each factor carries
``vars``, ``kind`` and the kind's fields.  :func:`dumps_model` writes the
canonical compact form so that canonical files survive a load/save cycle
byte for byte.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .model import HOPotts, LPI, Factor, FactorGraph, Junction, ModelError, Potts, Table

_FIELDS = {
    "table": ("values",),
    "potts": ("equal", "unequal"),
    "hopotts": ("equal", "unequal"),
    "lpi": ("weights",),
    "junction": ("lambda",),
}


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _numbers(v, where):
    if not isinstance(v, list):
        raise ModelError(f"{where}: expected a list of numbers")
    return [_number(a, where) for a in v]


def factor_from_dict(d: dict, k: int) -> Factor:
    where = f"factor {k}"
    if not isinstance(d, dict):
        raise ModelError(f"{where}: expected an object")
    kind = d.get("kind")
    if kind not in _FIELDS:
        raise ModelError(f"{where}: unknown kind {kind!r}")
    allowed = {"vars", "kind", *_FIELDS[kind]}
    extra = set(d) - allowed
    if extra:
        raise ModelError(f"{where}: unknown fields {sorted(extra)}")
    missing = allowed - set(d)
    if missing:
        raise ModelError(f"{where}: missing fields {sorted(missing)}")
    vs = d["vars"]
    if not isinstance(vs, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in vs):
        raise ModelError(f"{where}: vars must be a list of integers")
    if kind == "table":
        fn = Table(_numbers(d["values"], where))
    elif kind == "potts":
        fn = Potts(_number(d["equal"], where), _number(d["unequal"], where))
    elif kind == "hopotts":
        fn = HOPotts(_number(d["equal"], where), _number(d["unequal"], where))
    elif kind == "lpi":
        fn = LPI(_numbers(d["weights"], where))
    else:
        fn = Junction(_number(d["lambda"], where))
    return Factor(tuple(vs), fn)


def model_from_dict(obj: Any) -> FactorGraph:
    if not isinstance(obj, dict):
        raise ModelError("model file must hold a JSON object")
    extra = set(obj) - {"mode", "labels", "factors"}
    if extra:
        raise ModelError(f"unknown top-level fields {sorted(extra)}")
    for key in ("mode", "labels", "factors"):
        if key not in obj:
            raise ModelError(f"missing field {key!r}")
    labels = obj["labels"]
    factors = obj["factors"]
    if not isinstance(factors, list):
        raise ModelError("factors must be a list")
    fs = [factor_from_dict(d, k) for k, d in enumerate(factors)]
    if isinstance(labels, int) and not isinstance(labels, bool):
        mode = obj["mode"]
        # variable count: one past the largest index, or the label count in unsupervised mode
        n = labels if mode == "unsupervised" else 1 + max((max(f.vars) for f in fs if f.vars), default=-1)
        if n < 1:
            raise ModelError("cannot infer the number of variables; give labels as an array")
        return FactorGraph(n, labels, fs, mode)
    if isinstance(labels, list) and all(isinstance(c, int) and not isinstance(c, bool) for c in labels):
        return FactorGraph(len(labels), labels, fs, obj["mode"])
    raise ModelError("labels must be an integer or a list of integers")


def model_to_dict(fg: FactorGraph) -> dict:
    factors = []
    for f in fg.factors:
        k = f.kind
        d: dict = {"vars": list(f.vars)}
        if isinstance(k, Table):
            d.update(kind="table", values=list(k.values))
        elif isinstance(k, Potts):
            d.update(kind="potts", equal=k.equal, unequal=k.unequal)
        elif isinstance(k, HOPotts):
            d.update(kind="hopotts", equal=k.equal, unequal=k.unequal)
        elif isinstance(k, LPI):
            d.update(kind="lpi", weights=list(k.weights))
        else:
            d.update(kind="junction", **{"lambda": k.lam})
        factors.append(d)
    return {"mode": fg.mode, "labels": list(fg.label_counts), "factors": factors}


def loads_model(text: str) -> FactorGraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from None
    return model_from_dict(obj)


def dumps_model(fg: FactorGraph) -> str:
    return json.dumps(model_to_dict(fg), separators=(",", ":"), allow_nan=False) + "\n"


def load_model(path: str) -> FactorGraph:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


def save_model(fg: FactorGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(fg))


def _finite(v: float):
    return v if math.isfinite(v) else None


def result_to_dict(result) -> dict:
    return {
        "value": _finite(result.value),
        "bound": _finite(result.bound),
        "status": result.status,
        "runtime_ms": result.runtime_ms,
        "labeling": [int(v) for v in result.labeling],
        "stages": [
            {"token": s.token, "rows_added": dict(sorted(s.rows_added.items())), "lp_solves": s.lp_solves}
            for s in result.stage_stats
        ],
        "constant_offset": result.constant_offset,
    }


def dumps_result(result) -> str:
    return json.dumps(result_to_dict(result), indent=2) + "\n"
