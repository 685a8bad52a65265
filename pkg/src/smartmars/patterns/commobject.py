"""Communication objects: typed payloads carried by every pattern."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping

from ..errors import TypeMismatch
from ..model.core import CommObjectType, list_item_type

INT64_MIN, INT64_MAX = -(2 ** 63), 2 ** 63 - 1


@dataclass(frozen=True, eq=True)
class CommObject:
    type_name: str
    values: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def replace(self, **changes):
        v = dict(self.values)
        v.update(changes)
        return CommObject(self.type_name, v)

    __hash__ = None


def make(type_name: str, **values) -> CommObject:
    return CommObject(type_name, dict(values))


def _check(type_expr, value, types, path):
    item = list_item_type(type_expr)
    if item is not None:
        if not isinstance(value, (list, tuple)):
            raise TypeMismatch(f"{path}: expected list, got {type(value).__name__}")
        for i, v in enumerate(value):
            _check(item, v, types, f"{path}[{i}]")
        return
    if type_expr == "bool":
        ok = isinstance(value, bool)
    elif type_expr == "int64":
        ok = isinstance(value, int) and not isinstance(value, bool) and INT64_MIN <= value <= INT64_MAX
    elif type_expr == "float64":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if ok and isinstance(value, int):
            ok = math.isfinite(float(value))
    elif type_expr == "string":
        ok = isinstance(value, str)
    elif type_expr == "bytes":
        ok = isinstance(value, (bytes, bytearray))
    else:
        if not isinstance(value, CommObject):
            raise TypeMismatch(f"{path}: expected {type_expr}, got {type(value).__name__}")
        conform(value, types, type_expr, path)
        return
    if not ok:
        raise TypeMismatch(f"{path}: expected {type_expr}, got {value!r}")


def conform(obj: CommObject, types: Mapping[str, CommObjectType], expected: str, path=None):
    """Raise TypeMismatch unless ``obj`` is a well-formed ``expected`` object."""
    path = path or expected
    if not isinstance(obj, CommObject):
        raise TypeMismatch(f"{path}: expected communication object {expected}, got {type(obj).__name__}")
    if obj.type_name != expected:
        raise TypeMismatch(f"{path}: expected {expected}, got {obj.type_name}")
    t = types.get(expected)
    if t is None:
        raise TypeMismatch(f"{path}: type {expected} is not declared")
    names = t.field_names()
    if set(obj.values) != set(names):
        missing = sorted(set(names) - set(obj.values))
        extra = sorted(set(obj.values) - set(names))
        raise TypeMismatch(f"{path}: field mismatch (missing {missing}, unexpected {extra})")
    for fname, ftype in t.fields:
        _check(ftype, obj.values[fname], types, f"{path}.{fname}")


def default_value(type_expr, types):
    """Zero value of a field type, handy for building placeholder objects."""
    if list_item_type(type_expr) is not None:
        return []
    zero = {"bool": False, "int64": 0, "float64": 0.0, "string": "", "bytes": b""}
    if type_expr in zero:
        return zero[type_expr]
    t = types[type_expr]
    return CommObject(t.name, {f: default_value(ft, types) for f, ft in t.fields})
