"""Function spec files: a small YAML schema describing cone members.

Example::

    name: x-plus-resolvent
    kind: sum
    children:
      - {kind: linear, p: 0, q: 1}
      - {kind: extreme, alpha: inf, lambda: 1}

Infinity is spelled ``inf``.  Errors name the offending field and line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import yaml

from .interval import OcFunctionI, make_extreme_i
from .measure import INF, FiniteMeasure, as_param
from .ocfun import NotInConeError, OcFunction, make_extreme

Function = Union[OcFunction, OcFunctionI]

FIELDS = {
    "canonical": ({"f1", "d1"}, {"atoms", "segments"}),
    "extreme": ({"alpha", "lambda"}, {"factor"}),
    "linear": ({"p", "q"}, set()),
    "sum": ({"children"}, set()),
    "scale": ({"factor", "child"}, set()),
    "interval-canonical": ({"f0", "d0"}, {"atoms", "segments"}),
    "interval-extreme": ({"alpha", "lambda"}, {"factor"}),
}


class SpecError(ValueError):
    """Malformed or non-constructible spec, with the line of the offending field."""

    def __init__(self, message: str, node=None, field_name: str | None = None):
        where = []
        if node is not None:
            where.append(f"line {node.start_mark.line + 1}")
        if field_name:
            where.append(f"field '{field_name}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    kind: str
    function: Function

    @property
    def is_interval(self) -> bool:
        return isinstance(self.function, OcFunctionI)


def _scalar(node, name: str, lo: float = -INF, hi: float = INF) -> float:
    if not isinstance(node, yaml.ScalarNode):
        raise SpecError("expected a number", node, name)
    text = node.value.strip()
    if text.lower() in (".inf", "+.inf", "-.inf"):
        text = text.replace(".", "")
    try:
        return as_param(text, lo, hi)
    except ValueError as exc:
        raise SpecError(str(exc), node, name) from None


def _rows(node, name: str, width: int) -> list:
    if not isinstance(node, yaml.SequenceNode):
        raise SpecError("expected a list", node, name)
    rows = []
    for item in node.value:
        if not isinstance(item, yaml.SequenceNode) or len(item.value) != width:
            raise SpecError(f"each entry needs {width} numbers", item, name)
        rows.append((item, [_scalar(v, name) for v in item.value]))
    return rows


def _mapping(node) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise SpecError("expected a mapping", node)
    out = {}
    for key, value in node.value:
        if not isinstance(key, yaml.ScalarNode):
            raise SpecError("keys must be plain names", key)
        if key.value in out:
            raise SpecError("duplicate field", key, key.value)
        out[key.value] = (key, value)
    return out


def _measure(fields: dict, name_lo: float, name_hi: float) -> FiniteMeasure:
    atoms, segments = [], []
    if "atoms" in fields:
        for item, (pos, mass) in _rows(fields["atoms"][1], "atoms", 2):
            if not name_lo <= pos <= name_hi:
                raise SpecError(f"atom position {pos} outside [{name_lo}, {name_hi}]", item, "atoms")
            if not (mass >= 0 and math.isfinite(mass)):
                raise SpecError(f"atom mass must be finite and >= 0, got {mass}", item, "atoms")
            atoms.append((pos, mass))
    if "segments" in fields:
        for item, (lo, hi, dens) in _rows(fields["segments"][1], "segments", 3):
            if not (name_lo <= lo < hi <= name_hi and math.isfinite(hi)):
                raise SpecError("segment needs finite lo < hi inside the parameter range", item, "segments")
            if not (dens >= 0 and math.isfinite(dens)):
                raise SpecError(f"segment density must be finite and >= 0, got {dens}", item, "segments")
            segments.append((lo, hi, dens))
    return FiniteMeasure(tuple(atoms), tuple(segments))


def _build(node) -> FunctionSpec:
    fields = _mapping(node)
    if "kind" not in fields:
        raise SpecError("missing field", node, "kind")
    kind_node = fields["kind"][1]
    kind = kind_node.value if isinstance(kind_node, yaml.ScalarNode) else None
    if kind not in FIELDS:
        raise SpecError(f"unknown kind {kind!r}; expected one of {sorted(FIELDS)}", kind_node, "kind")
    required, optional = FIELDS[kind]
    allowed = required | optional | {"kind", "name"}
    for key, (key_node, _) in fields.items():
        if key not in allowed:
            raise SpecError(f"unknown field for kind '{kind}'", key_node, key)
    for key in sorted(required - fields.keys()):
        raise SpecError(f"missing field for kind '{kind}'", node, key)
    name = fields["name"][1].value if "name" in fields else ""

    def num(key, lo=-INF, hi=INF):
        return _scalar(fields[key][1], key, lo, hi)

    try:
        if kind == "canonical":
            nu = _measure(fields, 0.0, INF)
            f: Function = OcFunction(num("f1"), num("d1"), nu)
        elif kind == "extreme":
            f = make_extreme(num("alpha", 0.0), num("lambda", 0.0))
            if "factor" in fields:
                f = num("factor", 0.0) * f
        elif kind == "linear":
            p, q = num("p"), num("q")
            f = OcFunction(p + q, q, FiniteMeasure())
        elif kind == "interval-canonical":
            f = OcFunctionI(num("f0"), num("d0"), _measure(fields, -1.0, 1.0))
        elif kind == "interval-extreme":
            f = make_extreme_i(num("alpha", -1.0, 1.0), num("lambda", -1.0, 1.0))
            if "factor" in fields:
                f = num("factor", 0.0) * f
        elif kind == "scale":
            child = _build(fields["child"][1])
            f = num("factor", 0.0) * child.function
        else:
            seq = fields["children"][1]
            if not isinstance(seq, yaml.SequenceNode) or not seq.value:
                raise SpecError("expected a nonempty list", seq, "children")
            parts = [_build(item) for item in seq.value]
            kinds = {p.is_interval for p in parts}
            if len(kinds) > 1:
                raise SpecError("cannot mix (0, inf) and (-1, 1) functions", seq, "children")
            f = parts[0].function
            for p in parts[1:]:
                f = f + p.function
            f = type(f)(*_fields_of(f))
    except NotInConeError as exc:
        raise SpecError(f"not a cone member: {exc}", node, kind) from None
    return FunctionSpec(name, kind, f)


def _fields_of(f: Function) -> tuple:
    if isinstance(f, OcFunctionI):
        return f.f0, f.d0, f.mu
    return f.f1, f.d1, f.nu


def parse_spec_text(text: str) -> FunctionSpec:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"line {mark.line + 1}: " if mark is not None else ""
        raise SpecError(f"{line}malformed text: {getattr(exc, 'problem', exc)}") from None
    if root is None:
        raise SpecError("empty spec")
    return _build(root)


def parse_spec(path) -> FunctionSpec:
    """Read and validate a spec file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SpecError(f"{path}: not UTF-8 ({exc.reason})") from None
    try:
        return parse_spec_text(text)
    except SpecError as exc:
        raise SpecError(f"{path}: {exc}") from None


def _num(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return repr(float(v))


def dump_spec(f: Function, name: str = "") -> str:
    """Serialize ``f`` as canonical data; re-parsing reproduces ``f`` exactly."""
    if isinstance(f, OcFunctionI):
        head = ["kind: interval-canonical", f"f0: {_num(f.f0)}", f"d0: {_num(f.d0)}"]
        m = f.mu
    else:
        head = ["kind: canonical", f"f1: {_num(f.f1)}", f"d1: {_num(f.d1)}"]
        m = f.nu
    lines = ([f"name: {yaml.safe_dump(name, default_style=None).splitlines()[0]}"] if name else []) + head
    if m.atoms:
        lines.append("atoms:")
        lines += [f"  - [{_num(p)}, {_num(w)}]" for p, w in m.atoms]
    if m.segments:
        lines.append("segments:")
        lines += [f"  - [{_num(lo)}, {_num(hi)}, {_num(d)}]" for lo, hi, d in m.segments]
    return "\n".join(lines) + "\n"
