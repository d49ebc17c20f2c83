"""JSON formats for instances, allocations, solutions and traces.

Files use 1-based agent and good indices; the library is 0-based.
Rationals travel as ``{"num": "<int>", "den": "<int>"}`` so big values survive
JSON readers that coerce numbers to doubles.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from .instance import Instance, make_allocation

__all__ = [
    "FormatError",
    "parse_instance",
    "serialize_instance",
    "parse_allocation",
    "serialize_allocation",
    "parse_prices",
    "rational_to_json",
    "rational_from_json",
    "solution_to_dict",
    "serialize_solution",
    "trace_lines",
]


class FormatError(ValueError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, separators=(", ", ": ")) + "\n"


def _load(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc}") from None


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def rational_to_json(q) -> dict:
    q = Fraction(q)
    return {"num": str(q.numerator), "den": str(q.denominator)}


def rational_from_json(obj) -> Fraction:
    if isinstance(obj, str):
        try:
            return Fraction(obj)
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"not a rational: {obj!r}") from None
    if _is_int(obj):
        return Fraction(obj)
    if not isinstance(obj, dict) or set(obj) != {"num", "den"}:
        raise FormatError(f"expected a {{num, den}} object, got {obj!r}")
    try:
        num, den = int(str(obj["num"])), int(str(obj["den"]))
    except ValueError:
        raise FormatError(f"non-integer rational parts in {obj!r}") from None
    if den == 0:
        raise FormatError("zero denominator")
    return Fraction(num, den)


def parse_instance(text: str) -> Instance:
    data = _load(text)
    if not isinstance(data, dict):
        raise FormatError("instance must be a JSON object")
    missing = {"agents", "goods", "valuations"} - set(data)
    if missing:
        raise FormatError(f"instance is missing keys: {', '.join(sorted(missing))}")
    n, m, rows = data["agents"], data["goods"], data["valuations"]
    if not (_is_int(n) and _is_int(m)):
        raise FormatError("agents and goods must be integers")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise FormatError("valuations must be a list of lists")
    if len(rows) != n or any(len(r) != m for r in rows):
        raise FormatError(f"declared {n} agents x {m} goods but the matrix shape differs")
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if not _is_int(v):
                raise FormatError(f"valuation at ({i + 1},{j + 1}) is not an integer: {v!r}")
    name = data.get("name")
    if name is not None and not isinstance(name, str):
        raise FormatError("name must be a string")
    return Instance(rows, name=name)


def serialize_instance(inst: Instance) -> str:
    out = {}
    if inst.name is not None:
        out["name"] = inst.name
    out["agents"] = inst.n
    out["goods"] = inst.m
    out["valuations"] = [list(row) for row in inst.valuations]
    return _dump(out)


def parse_allocation(text: str, n: int, m: int):
    """Accepts a bare list of bundles or an object with an ``allocation`` key."""
    data = _load(text)
    if isinstance(data, dict):
        data = data.get("allocation")
    if not isinstance(data, list) or len(data) != n:
        raise FormatError(f"allocation must list exactly {n} bundles")
    bundles = []
    for bundle in data:
        if not isinstance(bundle, list) or not all(_is_int(g) and 1 <= g <= m for g in bundle):
            raise FormatError(f"bundle {bundle!r} must list goods in 1..{m}")
        bundles.append({g - 1 for g in bundle})
    return make_allocation(bundles)


def serialize_allocation(x) -> str:
    return _dump({"allocation": [sorted(j + 1 for j in b) for b in x]})


def parse_prices(text: str) -> tuple:
    data = _load(text)
    if isinstance(data, dict):
        data = data.get("prices")
    if not isinstance(data, list):
        raise FormatError("prices must be a list")
    return tuple(rational_from_json(p) for p in data)


def solution_to_dict(sol) -> dict:
    certs = sol.certificates
    slack = certs.eps_ef1_rounded
    value = sol.nsw
    return {
        "epsilon": rational_to_json(sol.epsilon_used),
        "matched_agents": sorted(i + 1 for i in sol.matched_agents),
        "allocation": [sorted(j + 1 for j in b) for b in sol.allocation],
        "prices": [rational_to_json(p) for p in sol.prices],
        "certificates": {
            "ef1_exact": certs.ef1_exact,
            # None means no finite factor works (some agent has value 0 and envies)
            "eps_ef1_rounded": None if slack is None else rational_to_json(slack),
            "fpo_certificate_rounded": certs.fpo_certificate_rounded,
            "po_brute_force": certs.po_brute_force,
        },
        "nsw": {"product": str(value.product), "approx": round(value.approx, 12)},
        "events": sol.events,
        "epsilon_attempts": [rational_to_json(e) for e in sol.attempts],
    }


def serialize_solution(sol) -> str:
    return _dump(solution_to_dict(sol))


def _event_json(event) -> dict:
    d = event.data
    out = {"kind": event.kind}
    if event.kind == "swap":
        out.update({"from": d["source"] + 1, "to": d["target"] + 1, "good": d["good"] + 1, "level": d["level"]})
    elif event.kind == "identity_change":
        out.update({"old": d["old"] + 1, "new": d["new"] + 1})
    elif event.kind == "price_rise":
        alpha = d["alpha"]
        out.update({
            "alpha": rational_to_json(alpha) if alpha != math.inf else "inf",
            "rule": d["rule"],
            "goods": [j + 1 for j in d["goods"]],
        })
    elif event.kind == "terminate":
        out["reason"] = d["reason"]
    out["least_spender_spending_after"] = rational_to_json(event.least_spender_spending)
    return out


def trace_lines(trace, agents=None) -> str:
    """JSONL text, one event per line.

    ``agents`` maps market positions back to original agent indices when the
    dynamics ran on a Hall-restricted instance.
    """
    lines = []
    for event in trace.events:
        if agents is not None:
            event = _remap(event, agents)
        lines.append(json.dumps(_event_json(event), separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def _remap(event, agents):
    d = dict(event.data)
    for key in ("source", "target", "old", "new"):
        if key in d:
            d[key] = agents[d[key]]
    return type(event)(event.kind, d, event.least_spender_spending)
