"""Line-oriented manifests: one chart, named objects, an ordered check list.

Example::

    # odd Laplacian on R^{1|1}
    [chart]
    x
    xi : odd

    [objects]
    operator delta : odd = d[x]*d[xi]
    scalar A = x^2
    data D : odd
        S[x, xi] = 1
        gamma[xi] = -2*x
    change C to u, th : odd
        u = x + 1
        th = xi
        x = u - 1
        xi = th
    operator delta2 on C = d[u]*d[th]

    [checks]
    jacobi delta
    selfadjoint D weights=0,1/2,2

Block lines are indented under their header.  ``on C`` places an object on
the target chart of the change ``C``.  Comments start with ``#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from densalg.densities import ExtendedBracketData
from densalg.diffop import DiffOperator
from densalg.errors import DensalgError
from densalg.expr import (
    ParseError,
    format_value,
    parse_density,
    parse_momentum,
    parse_operator,
    parse_scalar,
)
from densalg.graded import Chart, CoordinateChange, Parity
from densalg.symbols import Bracket

SECTIONS = ("chart", "objects", "checks")
VALUE_KINDS = ("scalar", "operator", "momentum", "density")
CHECK_KINDS = (
    "selfadjoint",
    "recover",
    "connection",
    "pullback",
    "jacobi",
    "flatness",
    "theorem3",
    "modular",
    "reduce",
    "master",
)
NAME = r"[A-Za-z_][A-Za-z0-9_]*"


class ManifestError(DensalgError):
    """A positioned diagnostic: ``line:col: message``."""

    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = f"{line}:{col or 1}: " if line is not None else ""
        super().__init__(where + message)
        self.message = message


@dataclass
class Entry:
    """A resolved named object together with its declaration line."""

    kind: str
    name: str
    value: object
    line: int
    chart_ref: str | None = None


@dataclass
class Check:
    kind: str
    target: str
    params: dict
    line: int


@dataclass
class Manifest:
    chart: Chart
    objects: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def get(self, name, kinds=None, line=None):
        entry = self.objects.get(name)
        if entry is None:
            raise ManifestError(f"unknown name {name!r}", line)
        if kinds is not None and entry.kind not in kinds:
            raise ManifestError(f"{name!r} is a {entry.kind}, expected {' or '.join(kinds)}", line)
        return entry

    def __eq__(self, other):
        if not isinstance(other, Manifest):
            return NotImplemented
        return print_manifest(self) == print_manifest(other)


# lexical helpers ---------------------------------------------------------------------


def _strip_comment(line):
    i = line.find("#")
    return line if i < 0 else line[:i]


def _coord_specs(text, line_no, col0=1):
    coords = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        m = re.fullmatch(rf"({NAME})\s*(?::\s*(even|odd))?", piece)
        if not m:
            raise ManifestError(f"bad coordinate declaration {piece!r}", line_no, col0)
        coords.append((m.group(1), Parity.parse(m.group(2) or "even")))
    return coords


def _make_chart(coords, line_no):
    names = [n for n, _ in coords]
    if len(set(names)) != len(names):
        raise ManifestError("duplicate coordinate", line_no)
    try:
        return Chart(tuple(coords))
    except DensalgError as exc:
        raise ManifestError(str(exc), line_no) from None


def _expr(parser, text, chart, line_no, col):
    try:
        return parser(text, chart)
    except ParseError as exc:
        raise ManifestError(str(exc.args[0]).split(" at column")[0], line_no, col + (exc.col or 1) - 1) from None
    except DensalgError as exc:
        raise ManifestError(str(exc), line_no, col) from None


# parsing --------------------------------------------------------------------------------


def _logical_lines(text):
    """Yield ``(line_no, indent, content, col)`` for non-blank lines."""
    for i, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        content = line.lstrip()
        indent = len(line) - len(content)
        yield i, indent, content, indent + 1


def parse_manifest(text):
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestError(f"manifest is not UTF-8: {exc}") from None
    section = None
    chart_coords = []
    chart_line = None
    object_blocks = []
    check_lines = []
    for line_no, indent, content, col in _logical_lines(text):
        m = re.fullmatch(r"\[\s*(\w+)\s*\]", content)
        if m:
            if m.group(1) not in SECTIONS:
                raise ManifestError(f"unknown section [{m.group(1)}]", line_no, col)
            section = m.group(1)
            if section == "chart":
                chart_line = line_no
            continue
        if section is None:
            raise ManifestError("content outside of a section", line_no, col)
        if section == "chart":
            chart_coords.extend(_coord_specs(content, line_no, col))
        elif section == "objects":
            if indent:
                if not object_blocks:
                    raise ManifestError("indented line without a block header", line_no, col)
                object_blocks[-1][1].append((line_no, content, col))
            else:
                object_blocks.append(((line_no, content, col), []))
        else:
            check_lines.append((line_no, content, col))
    if chart_line is None:
        raise ManifestError("missing [chart] section")
    chart = _make_chart(chart_coords, chart_line)
    manifest = Manifest(chart)
    for header, body in object_blocks:
        entry = _parse_object(manifest, header, body)
        if entry.name in manifest.objects or entry.name in chart.names:
            raise ManifestError(f"duplicate name {entry.name!r}", header[0], header[2])
        manifest.objects[entry.name] = entry
    for line_no, content, col in check_lines:
        manifest.checks.append(_parse_check(manifest, line_no, content, col))
    return manifest


def _chart_for(manifest, ref, line_no):
    if ref is None:
        return manifest.chart
    entry = manifest.get(ref, ("change",), line_no)
    return entry.value.target


_VALUE_HEADER = re.compile(
    rf"(scalar|operator|momentum|density)\s+({NAME})\s*(?::\s*(even|odd))?\s*(?:on\s+({NAME}))?\s*=\s*(.*)"
)
_DATA_HEADER = re.compile(rf"data\s+({NAME})\s*(?::\s*(even|odd))?\s*(?:on\s+({NAME}))?")
_CHANGE_HEADER = re.compile(rf"change\s+({NAME})\s+to\s+(.+)")


def _parse_object(manifest, header, body):
    line_no, content, col = header
    m = _VALUE_HEADER.fullmatch(content)
    if m:
        if body:
            raise ManifestError("value declarations take no block", body[0][0], body[0][2])
        kind, name, par, ref, text = m.groups()
        chart = _chart_for(manifest, ref, line_no)
        parser = {
            "scalar": parse_scalar,
            "operator": parse_operator,
            "momentum": parse_momentum,
            "density": parse_density,
        }[kind]
        value = _expr(parser, text, chart, line_no, col + m.start(5))
        if par is not None:
            want = Parity.parse(par)
            got = _value_parity(value, line_no)
            if got is not None and got != want and not _is_zero(value):
                raise ManifestError(f"{name} declared {par} but is {got.name.lower()}", line_no, col)
            if kind == "operator":
                value = DiffOperator(value.chart, value.terms, parity=want)
        elif kind == "operator":
            _value_parity(value, line_no)
        return Entry(kind, name, value, line_no, ref)
    m = _DATA_HEADER.fullmatch(content)
    if m:
        name, par, ref = m.groups()
        chart = _chart_for(manifest, ref, line_no)
        return Entry("data", name, _parse_data(chart, Parity.parse(par or "odd"), body, line_no), line_no, ref)
    m = _CHANGE_HEADER.fullmatch(content)
    if m:
        name, spec = m.groups()
        target = _make_chart(_coord_specs(spec, line_no, col + m.start(2)), line_no)
        return Entry("change", name, _parse_change(manifest.chart, target, body, line_no), line_no)
    word = content.split()[0]
    raise ManifestError(f"unknown object kind {word!r}", line_no, col)


def _is_zero(value):
    return value.is_zero if isinstance(value, DiffOperator) else not value


def _value_parity(value, line_no):
    try:
        if isinstance(value, DiffOperator):
            return value.parity
        return value.parity()
    except DensalgError as exc:
        raise ManifestError(str(exc), line_no) from None


_S_LINE = re.compile(rf"S\[\s*({NAME})\s*,\s*({NAME})\s*\]\s*=\s*(.*)")
_G_LINE = re.compile(rf"gamma\[\s*({NAME})\s*\]\s*=\s*(.*)")
_T_LINE = re.compile(r"theta\s*=\s*(.*)")


def _slot_parity(value, want, label, line_no, col):
    if not value:
        return
    if not value.is_homogeneous:
        raise ManifestError(f"{label} is not homogeneous", line_no, col)
    if value.parity() != Parity(want % 2):
        raise ManifestError(f"{label} must be {Parity(want % 2).name.lower()}", line_no, col)


def _parse_data(chart, parity, body, header_line):
    comps, gamma, theta = {}, {}, None
    for line_no, content, col in body:
        m = _S_LINE.fullmatch(content)
        if m:
            a, b, text = m.groups()
            for n in (a, b):
                if n not in chart.names:
                    raise ManifestError(f"unknown coordinate {n!r}", line_no, col + content.index(n))
            value = _expr(parse_scalar, text, chart, line_no, col + m.start(3))
            _slot_parity(value, parity + chart.parity(a) + chart.parity(b), f"S[{a},{b}]", line_no, col + m.start(3))
            mirror = value if not (chart.parity(a) and chart.parity(b)) else -value
            for key, v in (((a, b), value), ((b, a), mirror)):
                if key in comps and comps[key] != v:
                    raise ManifestError(f"S[{key[0]}, {key[1]}] contradicts graded symmetry", line_no, col)
                comps[key] = v
            continue
        m = _G_LINE.fullmatch(content)
        if m:
            a, text = m.groups()
            if a not in chart.names:
                raise ManifestError(f"unknown coordinate {a!r}", line_no, col + content.index(a))
            gamma[a] = _expr(parse_scalar, text, chart, line_no, col + m.start(2))
            _slot_parity(gamma[a], parity + chart.parity(a), f"gamma[{a}]", line_no, col + m.start(2))
            continue
        m = _T_LINE.fullmatch(content)
        if m:
            theta = _expr(parse_scalar, m.group(1), chart, line_no, col + m.start(1))
            _slot_parity(theta, parity, "theta", line_no, col + m.start(1))
            continue
        raise ManifestError(f"unrecognized data line {content!r}", line_no, col)
    comps = {k: v for k, v in comps.items() if v}
    try:
        return ExtendedBracketData(chart, parity, Bracket(chart, parity, comps), gamma, theta)
    except DensalgError as exc:
        raise ManifestError(str(exc), header_line) from None


def _parse_change(source, target, body, header_line):
    if set(source.names) & set(target.names):
        raise ManifestError("source and target coordinate names must be distinct", header_line)
    forward, inverse = {}, {}
    for line_no, content, col in body:
        m = re.fullmatch(rf"({NAME})\s*=\s*(.*)", content)
        if not m:
            raise ManifestError(f"unrecognized change line {content!r}", line_no, col)
        name, text = m.groups()
        if name in target.names:
            forward[name] = _expr(parse_scalar, text, source, line_no, col + m.start(2))
        elif name in source.names:
            inverse[name] = _expr(parse_scalar, text, target, line_no, col + m.start(2))
        else:
            raise ManifestError(f"unknown coordinate {name!r}", line_no, col)
    missing = [n for n in target.names if n not in forward]
    if inverse:
        missing += [n for n in source.names if n not in inverse]
    if missing:
        raise ManifestError(f"change lacks images for {', '.join(missing)}", header_line)
    try:
        return CoordinateChange(source, target, forward, inverse or None)
    except DensalgError as exc:
        raise ManifestError(str(exc), header_line) from None


def _parse_param(key, raw, line_no, col):
    try:
        if key == "weights":
            return tuple(Fraction(p.strip()) for p in raw.split(",") if p.strip())
        if key in ("weight",):
            return Fraction(raw)
        if key in ("seed",):
            return int(raw)
    except ValueError:
        raise ManifestError(f"bad value for {key}: {raw!r}", line_no, col) from None
    return raw


CHECK_TARGETS = {
    "selfadjoint": ("data",),
    "recover": ("operator",),
    "connection": ("operator",),
    "pullback": ("data",),
    "jacobi": ("operator",),
    "flatness": ("operator",),
    "theorem3": ("data",),
    "modular": ("data",),
    "reduce": ("data",),
    "master": ("operator", "data"),
}
_CHECK_PARAMS = {
    "selfadjoint": {"weights": False},
    "recover": {"weight": True},
    "connection": {"change": True},
    "pullback": {"change": True, "weights": False},
    "jacobi": {},
    "flatness": {"seed": False},
    "theorem3": {"seed": False},
    "modular": {"weights": False},
    "reduce": {},
    "master": {"action": True, "weight": False},
}
_REF_PARAMS = {"change": ("change",), "action": ("scalar",)}


def _parse_check(manifest, line_no, content, col):
    tokens = content.split()
    kind = tokens[0]
    if kind not in CHECK_KINDS:
        raise ManifestError(f"unknown check {kind!r}", line_no, col)
    if len(tokens) < 2:
        raise ManifestError(f"check {kind} needs a target", line_no, col)
    target = tokens[1]
    manifest.get(target, CHECK_TARGETS[kind], line_no)
    allowed = _CHECK_PARAMS[kind]
    params = {}
    for tok in tokens[2:]:
        pos = col + content.index(tok)
        if "=" not in tok:
            raise ManifestError(f"expected key=value, got {tok!r}", line_no, pos)
        key, raw = tok.split("=", 1)
        if key not in allowed:
            raise ManifestError(f"check {kind} takes no parameter {key!r}", line_no, pos)
        value = _parse_param(key, raw, line_no, pos)
        if key in _REF_PARAMS:
            manifest.get(value, _REF_PARAMS[key], line_no)
        params[key] = value
    for key, required in allowed.items():
        if required and key not in params:
            raise ManifestError(f"check {kind} requires {key}=", line_no, col)
    return Check(kind, target, params, line_no)


# printing -------------------------------------------------------------------------------


def _fmt_coords(chart):
    return ", ".join(n + (" : odd" if p else "") for n, p in chart.coords)


def _fmt_param(value):
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def print_manifest(m):
    """Canonical text of a manifest; parsing it back gives an equal manifest."""
    out = ["[chart]"]
    out.extend(n + (" : odd" if p else "") for n, p in m.chart.coords)
    out.append("")
    out.append("[objects]")
    for entry in m.objects.values():
        on = f" on {entry.chart_ref}" if entry.chart_ref else ""
        if entry.kind in VALUE_KINDS:
            par = ""
            if entry.kind == "operator":
                par = f" : {(entry.value.parity or Parity.EVEN).name.lower()}"
            out.append(f"{entry.kind} {entry.name}{par}{on} = {format_value(entry.value) or '0'}")
        elif entry.kind == "data":
            out.extend(_print_data(entry, on))
        else:
            out.extend(_print_change(entry))
    out.append("")
    out.append("[checks]")
    for check in m.checks:
        parts = [check.kind, check.target]
        parts.extend(f"{k}={_fmt_param(v)}" for k, v in sorted(check.params.items()))
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def _print_data(entry, on):
    data = entry.value
    chart = data.chart
    lines = [f"data {entry.name} : {data.parity.name.lower()}{on}"]
    names = chart.names
    for i, a in enumerate(names):
        for b in names[i:]:
            s = data.S.component(a, b)
            if s:
                lines.append(f"    S[{a}, {b}] = {format_value(s)}")
    for a in names:
        if data.gamma[a]:
            lines.append(f"    gamma[{a}] = {format_value(data.gamma[a])}")
    if data.theta:
        lines.append(f"    theta = {format_value(data.theta)}")
    return lines


def _print_change(entry):
    ch = entry.value
    lines = [f"change {entry.name} to {_fmt_coords(ch.target)}"]
    for n in ch.target.names:
        lines.append(f"    {n} = {format_value(ch.forward[n]) or '0'}")
    for n in ch.source.names if ch.inverse is not None else ():
        lines.append(f"    {n} = {format_value(ch.inverse[n]) or '0'}")
    return lines


# AST dump ---------------------------------------------------------------------------------


def manifest_ast(m):
    """JSON-ready structural view of a manifest (used by ``parse --ast``)."""
    from densalg.expr import ast_to_sexpr, parse

    def sexpr(value):
        return ast_to_sexpr(parse(format_value(value) or "0"))

    objects = []
    for entry in m.objects.values():
        node = {"kind": entry.kind, "name": entry.name, "line": entry.line}
        if entry.chart_ref:
            node["on"] = entry.chart_ref
        if entry.kind in VALUE_KINDS:
            node["ast"] = sexpr(entry.value)
        elif entry.kind == "data":
            data = entry.value
            node["parity"] = data.parity.name.lower()
            node["S"] = {f"{a},{b}": sexpr(v) for (a, b), v in sorted(data.S.components.items())}
            node["gamma"] = {a: sexpr(v) for a, v in data.gamma.items() if v}
            node["theta"] = sexpr(data.theta)
        else:
            ch = entry.value
            node["target"] = [[n, p.name.lower()] for n, p in ch.target.coords]
            node["forward"] = {n: sexpr(v) for n, v in ch.forward.items()}
            if ch.inverse is not None:
                node["inverse"] = {n: sexpr(v) for n, v in ch.inverse.items()}
        objects.append(node)
    return {
        "chart": [[n, p.name.lower()] for n, p in m.chart.coords],
        "objects": objects,
        "checks": [
            {"kind": c.kind, "target": c.target, "line": c.line, "params": {k: _fmt_param(v) for k, v in sorted(c.params.items())}}
            for c in m.checks
        ],
    }


__all__ = [
    "Check",
    "Entry",
    "Manifest",
    "ManifestError",
    "manifest_ast",
    "parse_manifest",
    "print_manifest",
]
