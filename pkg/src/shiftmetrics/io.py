"""Spec-file parsing and report writers.

Spec files are JSON objects with a ``type`` field:

``iid``          ``alphabet``, ``probs``
``markov``       ``alphabet``, ``kernel`` (rows indexed by blocks), optional ``order``
                 and ``block_dist``; without ``block_dist`` the stationary law of
                 the kernel is used
``separability`` ``x`` = ``{"prefix": [...], "period": [...]}``, optional ``alpha``
``induced``      ``alphabet``, ``projection`` (list, or object label -> 0/1),
                 ``base`` (a separability spec)
``table``        ``alphabet`` (default ``["0", "1"]``), ``range``, ``values``
                 (``g_table`` is accepted as an alias)
``long_range``   ``beta``, optional ``range`` (absent or ``"inf"`` means infinite)
``hulse``        ``alphabet``, ``projection``, ``beta``, ``J``, ``h``, ``h_prime``,
                 ``Lambda``, ``level``, optional ``primed``
``matrix``       ``matrix`` (column stochastic)
``tables``       ``tables``: list of ``table`` specs

Numbers in reports are printed with 17 significant digits.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DomainError
from .gfun import HulseG, LocallyConstantG, LongRangeIsingG, g_to_markov, hulse_g, long_range_g
from .measures import BINARY, InducedMeasure, MarkovMeasure, SeparabilityMeasure, SequenceRule, SEPARATION_ALPHA
from .symbolic import Alphabet

__all__ = ["SpecError", "load_spec", "parse_spec", "as_measure", "as_gfunction", "fmt", "dumps_json", "dumps_csv"]


class SpecError(DomainError):
    """Malformed spec file."""


def load_spec(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict) or "type" not in data:
        raise SpecError(f"{path}: a spec must be a JSON object with a 'type' field")
    return data


def _get(spec, key):
    try:
        return spec[key]
    except KeyError:
        raise SpecError(f"{spec.get('type', '?')} spec is missing '{key}'") from None


def _alphabet(spec, default=None) -> Alphabet:
    if "alphabet" not in spec and default is not None:
        return default
    return Alphabet([str(s) for s in _get(spec, "alphabet")])


def parse_spec(spec: dict):
    """Build the object described by ``spec``."""
    kind = spec.get("type")
    try:
        if kind == "iid":
            return MarkovMeasure.iid(_alphabet(spec), _get(spec, "probs"))
        if kind == "markov":
            alph = _alphabet(spec)
            kernel = np.asarray(_get(spec, "kernel"), dtype=float)
            block = spec.get("block_dist", spec.get("block"))
            if block is not None:
                m = MarkovMeasure.from_probs(alph, block, kernel)
            else:
                m = MarkovMeasure.stationary_from_kernel(alph, kernel)
            if "order" in spec and int(spec["order"]) != m.order:
                raise SpecError(f"declared order {spec['order']} does not match the table sizes (order {m.order})")
            return m
        if kind == "separability":
            x = _get(spec, "x")
            rule = SequenceRule(tuple(x.get("prefix", ())), tuple(_get(x, "period")))
            return SeparabilityMeasure(rule, float(spec.get("alpha", SEPARATION_ALPHA)))
        if kind == "induced":
            base = parse_spec(_get(spec, "base"))
            if not isinstance(base, SeparabilityMeasure):
                raise SpecError("the base of an induced measure must be a separability spec")
            alph = _alphabet(spec)
            proj = _get(spec, "projection")
            if isinstance(proj, dict):
                missing = [s for s in alph.symbols if s not in proj]
                if missing:
                    raise SpecError(f"projection misses symbols {missing}")
                proj = [proj[s] for s in alph.symbols]
            return InducedMeasure(base, alph, proj)
        if kind in ("g_table", "table"):
            return LocallyConstantG(_alphabet(spec, BINARY), int(_get(spec, "range")), _get(spec, "values"))
        if kind == "long_range":
            r = spec.get("range")
            infinite = r is None or (isinstance(r, str) and r.lower() in ("inf", "infinity"))
            return long_range_g(float(_get(spec, "beta")), None if infinite else int(r))
        if kind == "hulse":
            return HulseG(
                _alphabet(spec, BINARY),
                tuple(spec.get("projection", (-1, 1))),
                float(_get(spec, "beta")),
                tuple(_get(spec, "J")),
                tuple(_get(spec, "h")),
                tuple(_get(spec, "h_prime")),
                tuple(int(v) for v in _get(spec, "Lambda")),
                int(_get(spec, "level")),
                bool(spec.get("primed", False)),
            )
        if kind == "matrix":
            return np.asarray(_get(spec, "matrix"), dtype=float)
        if kind == "tables":
            tables = [parse_spec(t) for t in _get(spec, "tables")]
            if not all(isinstance(t, LocallyConstantG) for t in tables):
                raise SpecError("a tables spec lists table specs")
            return tables
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise SpecError(f"{kind} spec: {exc}") from exc
    raise SpecError(f"unknown spec type {kind!r}")


def as_gfunction(obj):
    if isinstance(obj, HulseG):
        return hulse_g(obj)
    if isinstance(obj, (LocallyConstantG, LongRangeIsingG)):
        return obj
    if isinstance(obj, MarkovMeasure):
        from .gfun import markov_to_g

        return markov_to_g(obj)
    raise SpecError(f"{type(obj).__name__} does not describe a g-function")


def as_measure(obj):
    """Measures pass through; locally constant g-functions become their Markov measure."""
    if isinstance(obj, (MarkovMeasure, SeparabilityMeasure, InducedMeasure)):
        return obj
    if isinstance(obj, HulseG):
        obj = hulse_g(obj)
    if isinstance(obj, LocallyConstantG):
        return g_to_markov(obj)
    raise SpecError(f"{type(obj).__name__} does not describe a measure with computable cylinders")


# ---------------------------------------------------------------------------
# writers


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Num(float(obj))
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__ if not k.startswith("_")})
    return str(obj)


class _Num(float):
    pass


def _encode(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, _Num):
        x = float(obj)
        return json.dumps(fmt(x)) if not math.isfinite(x) else fmt(x)
    if obj is None:
        return "null"
    return json.dumps(obj)


def dumps_json(data: Any) -> str:
    """JSON text with every float at 17 significant digits; non-finite floats become strings."""
    return _encode(_jsonable(data)) + "\n"


def dumps_csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()
