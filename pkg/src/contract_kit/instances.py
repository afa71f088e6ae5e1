"""Instance files, bundled examples and seeded random generators.

An instance file is a JSON object with keys in this order::

    {
      "model": "single_agent" | "binary_team" | "multi_team",
      "function": {"kind": ..., <kind-specific fields>},
      "costs": ["1/10", ...],
      "partition": [[0, 1], [2]]        # multi_team only
    }

Rationals are strings (``"p/q"`` or decimal), never JSON numbers.
Function kinds and their fields:

- ``explicit``: ``values``, one per bitmask in increasing order
- ``additive``: ``weights``
- ``coverage``: ``item_weights`` and ``covers`` (item indices per element)
- ``xos``: ``clauses`` (list of weight lists)
- ``supermodular_square``: ``weights``
"""

from __future__ import annotations

import hashlib
import json
import random
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .errors import InvalidArgument
from .rational import fmt, to_rational
from .setfn import XOS, Additive, Coverage, Explicit, SetFunction, SupermodularSquare
from .single_agent import SingleAgentInstance
from .team_binary import BinaryTeamInstance
from .team_multi import MultiTeamInstance

Instance = Union[SingleAgentInstance, BinaryTeamInstance, MultiTeamInstance]

MODELS = {
    "single_agent": SingleAgentInstance,
    "binary_team": BinaryTeamInstance,
    "multi_team": MultiTeamInstance,
}
FUNCTION_KINDS = ("explicit", "additive", "coverage", "xos", "supermodular_square")
GENERATOR_KINDS = ("additive", "coverage", "xos", "supermodular_square", "binary_team", "multi_team")


def model_name(inst: Instance) -> str:
    for name, cls in MODELS.items():
        if type(inst) is cls:
            return name
    raise InvalidArgument(f"not an instance: {type(inst).__name__}")


# --- (de)serialization --------------------------------------------------------


def _rationals(raw, field: str) -> tuple[Fraction, ...]:
    if not isinstance(raw, list):
        raise InvalidArgument(f"{field}: expected a list")
    out = []
    for i, x in enumerate(raw):
        if isinstance(x, bool) or not isinstance(x, (str, int)):
            raise InvalidArgument(f"{field}[{i}]: expected a rational string, got {x!r}")
        try:
            out.append(to_rational(x))
        except InvalidArgument as exc:
            raise InvalidArgument(f"{field}[{i}]: {exc}") from None
    return tuple(out)


def _int_lists(raw, field: str) -> tuple[tuple[int, ...], ...]:
    if not isinstance(raw, list) or not all(isinstance(g, list) for g in raw):
        raise InvalidArgument(f"{field}: expected a list of integer lists")
    for k, g in enumerate(raw):
        for x in g:
            if isinstance(x, bool) or not isinstance(x, int):
                raise InvalidArgument(f"{field}[{k}]: expected integers, got {x!r}")
    return tuple(tuple(g) for g in raw)


def _check_keys(doc: Mapping, allowed: tuple[str, ...], where: str):
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise InvalidArgument(f"{where}: unexpected field(s) {', '.join(extra)}")
    for key in allowed:
        if key not in doc:
            raise InvalidArgument(f"{where}: missing field {key!r}")


def function_from_dict(doc: Any) -> SetFunction:
    if not isinstance(doc, dict):
        raise InvalidArgument("function: expected an object")
    kind = doc.get("kind")
    fields = {
        "explicit": ("values",),
        "additive": ("weights",),
        "coverage": ("item_weights", "covers"),
        "xos": ("clauses",),
        "supermodular_square": ("weights",),
    }
    if kind not in fields:
        raise InvalidArgument(f"function.kind: unknown kind {kind!r}; expected one of {', '.join(FUNCTION_KINDS)}")
    _check_keys(doc, ("kind",) + fields[kind], "function")
    try:
        if kind == "explicit":
            return Explicit(_rationals(doc["values"], "function.values"))
        if kind == "additive":
            return Additive(_rationals(doc["weights"], "function.weights"))
        if kind == "coverage":
            return Coverage(_rationals(doc["item_weights"], "function.item_weights"), _int_lists(doc["covers"], "function.covers"))
        if kind == "xos":
            clauses = doc["clauses"]
            if not isinstance(clauses, list):
                raise InvalidArgument("function.clauses: expected a list")
            return XOS(tuple(_rationals(c, f"function.clauses[{k}]") for k, c in enumerate(clauses)))
        return SupermodularSquare(_rationals(doc["weights"], "function.weights"))
    except InvalidArgument as exc:
        msg = str(exc)
        raise InvalidArgument(msg if msg.startswith("function") else f"function: {msg}") from None


def function_to_dict(f: SetFunction) -> dict:
    if isinstance(f, Explicit):
        return {"kind": "explicit", "values": [fmt(v) for v in f.values]}
    if isinstance(f, Additive):
        return {"kind": "additive", "weights": [fmt(v) for v in f.weights]}
    if isinstance(f, Coverage):
        return {
            "kind": "coverage",
            "item_weights": [fmt(v) for v in f.item_weights],
            "covers": [list(c) for c in f.covers],
        }
    if isinstance(f, XOS):
        return {"kind": "xos", "clauses": [[fmt(v) for v in c] for c in f.clauses]}
    if isinstance(f, SupermodularSquare):
        return {"kind": "supermodular_square", "weights": [fmt(v) for v in f.weights]}
    raise InvalidArgument(f"cannot serialize {type(f).__name__}")


def from_dict(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InvalidArgument("instance: expected a JSON object")
    model = doc.get("model")
    if model not in MODELS:
        raise InvalidArgument(f"model: unknown model {model!r}; expected one of {', '.join(MODELS)}")
    keys = ("model", "function", "costs") + (("partition",) if model == "multi_team" else ())
    _check_keys(doc, keys, "instance")
    f = function_from_dict(doc["function"])
    costs = _rationals(doc["costs"], "costs")
    if model == "multi_team":
        return MultiTeamInstance(f, costs, _int_lists(doc["partition"], "partition"))
    return MODELS[model](f, costs)


def to_dict(inst: Instance) -> dict:
    doc = {
        "model": model_name(inst),
        "function": function_to_dict(inst.f),
        "costs": [fmt(c) for c in inst.c],
    }
    if isinstance(inst, MultiTeamInstance):
        doc["partition"] = [list(g) for g in inst.partition]
    return doc


def dumps(inst: Instance) -> str:
    """Canonical text: fixed key order, two-space indent, trailing newline."""
    return json.dumps(to_dict(inst), indent=2) + "\n"


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"not valid JSON: {exc}") from None
    return from_dict(doc)


def load(path) -> Instance:
    return loads(Path(path).read_text())


def save(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst))


def digest(inst: Instance) -> str:
    return "sha256:" + hashlib.sha256(dumps(inst).encode()).hexdigest()


# --- bundled examples ---------------------------------------------------------


def _q(*xs) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


EXAMPLES = ("ex3_1", "ex3_2", "ex4_1")


def builtin_example(name: str) -> Instance:
    """Small worked examples: two single-agent instances and a two-agent team."""
    if name == "ex3_1":
        return SingleAgentInstance(Additive(_q("3/10", "1/5", "1/2")), _q("1/10", "1/10", "2/5"))
    if name == "ex3_2":
        table = Explicit(_q(0, "1/4", "1/2", "11/20", "1/4", "1/2", "3/4", "4/5"))
        return SingleAgentInstance(table, _q("1/80", "3/80", "1/8"))
    if name == "ex4_1":
        return BinaryTeamInstance(Explicit(_q(0, "1/2", "1/2", "3/4")), _q("1/4", "1/4"))
    raise InvalidArgument(f"unknown example {name!r}; expected one of {', '.join(EXAMPLES)}")


# --- generators ---------------------------------------------------------------

_FUNCTION_PARAMS = {
    "additive": {},
    "coverage": {"items": None, "items_per_element": 3},
    "xos": {"clauses": 3},
    "supermodular_square": {},
}


def _params(kind: str, params: Optional[Mapping]) -> dict:
    params = dict(params or {})
    merged: dict = {"cost_scale": "1"}
    if kind in ("binary_team", "multi_team"):
        merged["function"] = params.get("function", "coverage")
        if merged["function"] not in _FUNCTION_PARAMS:
            raise InvalidArgument(f"params: function must be one of {', '.join(_FUNCTION_PARAMS)}, got {merged['function']!r}")
        if kind == "multi_team":
            merged["agents"] = None
        merged.update(_FUNCTION_PARAMS[merged["function"]])
    else:
        merged.update(_FUNCTION_PARAMS[kind])
    for key, value in params.items():
        if key not in merged:
            raise InvalidArgument(f"params: {key!r} is not a parameter of {kind!r}")
        merged[key] = value
    return merged


def _function(kind: str, n: int, rng: random.Random, params: dict) -> SetFunction:
    if kind == "additive":
        w = [rng.randint(1, 20) for _ in range(n)]
        return Additive(tuple(Fraction(x, sum(w)) for x in w))
    if kind == "supermodular_square":
        return SupermodularSquare(tuple(Fraction(rng.randint(1, 10)) for _ in range(n)))
    if kind == "xos":
        k = int(params["clauses"])
        if k < 1:
            raise InvalidArgument("params: clauses must be at least 1")
        raw = [[rng.randint(0, 10) for _ in range(n)] for _ in range(k)]
        top = max(max(sum(c) for c in raw), 1)
        return XOS(tuple(tuple(Fraction(x, top) for x in c) for c in raw))
    if kind == "coverage":
        items = int(params["items"] or n + 2)
        per = int(params["items_per_element"])
        if items < 1 or per < 1:
            raise InvalidArgument("params: items and items_per_element must be positive")
        weights = [rng.randint(1, 10) for _ in range(items)]
        total = sum(weights)
        covers = tuple(tuple(sorted(rng.sample(range(items), rng.randint(1, min(per, items))))) for _ in range(n))
        return Coverage(tuple(Fraction(w, total) for w in weights), covers)
    raise InvalidArgument(f"params: function kind {kind!r} cannot be generated")


def _costs(f: SetFunction, rng: random.Random, scale: Fraction) -> tuple[Fraction, ...]:
    out = []
    for i in range(f.n):
        top = int(100 * f.singleton(i))
        k = rng.randint(1, top) if top >= 1 else 1
        out.append(Fraction(k, 100) * scale)
    return tuple(out)


def generate(kind: str, n: int, seed: int, params: Optional[Mapping] = None) -> Instance:
    """Deterministic random instance for ``(kind, n, seed, params)``.

    Function kinds give single-agent instances; ``binary_team`` and
    ``multi_team`` wrap a generated function (``params["function"]``).
    Each cost is a random multiple of 1/100 up to its element's own value,
    times ``params["cost_scale"]``.
    """
    if kind not in GENERATOR_KINDS:
        raise InvalidArgument(f"kind: unknown kind {kind!r}; expected one of {', '.join(GENERATOR_KINDS)}")
    if not isinstance(n, int) or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    merged = _params(kind, params)
    scale = to_rational(merged["cost_scale"])
    if scale < 0:
        raise InvalidArgument("params: cost_scale must be nonnegative")
    rng = random.Random(f"{kind}|{n}|{seed}|{json.dumps(merged, sort_keys=True, default=str)}")
    if kind in ("binary_team", "multi_team"):
        f = _function(merged["function"], n, rng, merged)
        costs = _costs(f, rng, scale)
        if kind == "binary_team":
            return BinaryTeamInstance(f, costs)
        agents = merged["agents"] or max(1, (n + 1) // 2)
        agents = int(agents)
        if not 1 <= agents <= n:
            raise InvalidArgument(f"params: agents must lie in 1..{n}")
        order = list(range(n))
        rng.shuffle(order)
        owner = list(range(agents)) + [rng.randrange(agents) for _ in range(n - agents)]
        groups = [sorted(j for j, o in zip(order, owner) if o == i) for i in range(agents)]
        return MultiTeamInstance(f, costs, tuple(tuple(g) for g in groups))
    f = _function(kind, n, rng, merged)
    return SingleAgentInstance(f, _costs(f, rng, scale))
