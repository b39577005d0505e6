"""Expression grammar: tokenizer, parser, evaluator and printers.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" exponent)?
    atom   := NUMBER | NAME | "d[" NAME "]" | "p[" NAME "]" | "t" | "(" expr ")"
    exponent := INT | "(" signed rational ")" | "{" signed rational "}"

Rational exponents are only allowed on ``t``.  Evaluation is typed: scalars,
operators (``d[..]``), momentum polynomials (``p[..]``) and densities
(``t^w``).  Printing any canonical value and parsing it back is the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from densalg.errors import DensalgError, UnknownCoordinate
from densalg.graded import GradedScalar

RESERVED = {"d", "p", "t"}


class ParseError(DensalgError):
    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        self.text = text
        if pos is not None and text is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            self.line, self.col = line, col
            message = f"{message} at column {col}"
        else:
            self.line = self.col = None
        super().__init__(message)


# AST ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class Deriv:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class Mom:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class TPow:
    weight: Fraction


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


def ast_to_sexpr(node):
    """Compact s-expression dump used by ``densalg parse --ast``."""
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Deriv):
        return f"(d {node.name})"
    if isinstance(node, Mom):
        return f"(p {node.name})"
    if isinstance(node, TPow):
        return f"(t {node.weight})"
    if isinstance(node, Neg):
        return f"(neg {ast_to_sexpr(node.operand)})"
    if isinstance(node, Pow):
        return f"(^ {ast_to_sexpr(node.base)} {node.exponent})"
    return f"({node.op} {ast_to_sexpr(node.left)} {ast_to_sexpr(node.right)})"


# tokenizer ------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^()[]{}":
                raise ParseError(f"unexpected character {ch!r}", m.start(3), text)
            tokens.append(("op", ch, m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2], self.text)
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.text)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2], self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def rational(self, closing):
        negative = False
        if self.peek()[1] == "-":
            self.take()
            negative = True
        tok = self.take()
        if tok[0] != "num":
            raise ParseError("expected a number in exponent", tok[2], self.text)
        value = Fraction(int(tok[1]))
        if self.peek()[1] == "/":
            self.take()
            tok = self.take()
            if tok[0] != "num" or int(tok[1]) == 0:
                raise ParseError("expected a nonzero denominator", tok[2], self.text)
            value /= int(tok[1])
        self.expect(closing)
        return -value if negative else value

    def exponent(self, allow_rational):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return Fraction(int(tok[1]))
        if tok[1] in "({" and tok[0] == "op":
            self.take()
            value = self.rational(")" if tok[1] == "(" else "}")
            if not allow_rational and value.denominator != 1:
                raise ParseError("only t accepts rational exponents", tok[2], self.text)
            return value
        if tok[1] == "-" and tok[0] == "op":
            self.take()
            nxt = self.take()
            if nxt[0] != "num":
                raise ParseError("expected exponent", nxt[2], self.text)
            return -Fraction(int(nxt[1]))
        raise ParseError("expected exponent", tok[2], self.text)

    def power(self):
        start = self.peek()
        node = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            if isinstance(node, TPow) and start[1] == "t":
                return TPow(self.exponent(allow_rational=True))
            e = self.exponent(allow_rational=False)
            return Pow(node, int(e))
        return node

    def atom(self):
        tok = self.take()
        kind, value, pos = tok
        if kind == "num":
            return Num(Fraction(int(value)))
        if kind == "name":
            if value in ("d", "p") and self.peek()[1] == "[":
                self.take()
                name = self.take()
                if name[0] != "name":
                    raise ParseError("expected a coordinate name", name[2], self.text)
                self.expect("]")
                return (Deriv if value == "d" else Mom)(name[1], name[2])
            if value == "t":
                return TPow(Fraction(1))
            if value in RESERVED:
                raise ParseError(f"{value!r} is reserved", pos, self.text)
            return Var(value, pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {value or 'end of input'!r}", pos, self.text)


def parse(text):
    return _Parser(text).parse()


# evaluation -----------------------------------------------------------------------


def _kind(v):
    from densalg.densities import DensityElement
    from densalg.diffop import DiffOperator
    from densalg.symbols import MomentumPolynomial

    if isinstance(v, GradedScalar):
        return "scalar"
    if isinstance(v, DiffOperator):
        return "operator"
    if isinstance(v, MomentumPolynomial):
        return "momentum"
    if isinstance(v, DensityElement):
        return "density"
    raise TypeError(type(v))


def _promote(v, kind):
    from densalg.densities import DensityElement
    from densalg.diffop import DiffOperator
    from densalg.symbols import MomentumPolynomial

    k = _kind(v)
    if k == kind:
        return v
    if k != "scalar":
        raise DensalgError(f"cannot combine {k} with {kind}")
    if kind == "operator":
        return DiffOperator.scalar(v)
    if kind == "momentum":
        return MomentumPolynomial.scalar(v)
    return DensityElement.from_scalar(v)


def _joint(a, b):
    ka, kb = _kind(a), _kind(b)
    if ka == kb:
        return a, b
    if ka == "scalar":
        return _promote(a, kb), b
    if kb == "scalar":
        return a, _promote(b, ka)
    raise DensalgError(f"cannot combine {ka} with {kb}")


def evaluate(node, chart, text=None):
    from densalg.densities import DensityElement
    from densalg.diffop import DiffOperator
    from densalg.symbols import MomentumPolynomial

    def ev(n):
        if isinstance(n, Num):
            return GradedScalar.const(chart, n.value)
        if isinstance(n, Var):
            try:
                return GradedScalar.coord(chart, n.name)
            except UnknownCoordinate:
                raise ParseError(f"unknown name {n.name!r}", n.pos, text) from None
        if isinstance(n, (Deriv, Mom)):
            try:
                chart.locate(n.name)
            except UnknownCoordinate:
                raise ParseError(f"unknown coordinate {n.name!r}", n.pos, text) from None
            if isinstance(n, Deriv):
                return DiffOperator.partial(chart, n.name)
            return MomentumPolynomial.momentum(chart, n.name)
        if isinstance(n, TPow):
            return DensityElement(chart, {n.weight: GradedScalar.one(chart)})
        if isinstance(n, Neg):
            return -ev(n.operand)
        if isinstance(n, Pow):
            base = ev(n.base)
            if n.exponent < 0 and _kind(base) != "scalar":
                raise DensalgError("negative powers only for scalars")
            return base**n.exponent
        a, b = ev(n.left), ev(n.right)
        if n.op == "/":
            if _kind(b) != "scalar":
                raise DensalgError("can only divide by a scalar")
            inv = b.inverse()
            a, inv = _joint(a, inv)
            return a * inv
        a, b = _joint(a, b)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        return a * b

    return ev(node)


def parse_value(text, chart):
    return evaluate(parse(text), chart, text)


def parse_scalar(text, chart):
    v = parse_value(text, chart)
    if not isinstance(v, GradedScalar):
        raise DensalgError(f"expected a scalar expression: {text!r}")
    return v


def parse_operator(text, chart):
    from densalg.diffop import DiffOperator

    v = parse_value(text, chart)
    return v if isinstance(v, DiffOperator) else DiffOperator.scalar(v)


def parse_momentum(text, chart):
    from densalg.symbols import MomentumPolynomial

    v = parse_value(text, chart)
    return v if isinstance(v, MomentumPolynomial) else MomentumPolynomial.scalar(v)


def parse_density(text, chart):
    from densalg.densities import DensityElement

    v = parse_value(text, chart)
    return v if isinstance(v, DensityElement) else DensityElement.from_scalar(v)


# printing ------------------------------------------------------------------------


def _fmt_rational(q):
    q = Fraction(int(q.numerator), int(q.denominator))
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _fmt_monomial(names, expv, coeff):
    """Monomial with its sign; returns (negative, body) where body has no sign."""
    q = Fraction(int(coeff.numerator), int(coeff.denominator))
    neg = q < 0
    q = abs(q)
    factors = []
    for n, e in zip(names, expv):
        if e == 1:
            factors.append(n)
        elif e:
            factors.append(f"{n}^{e}")
    if not factors:
        return neg, _fmt_rational(q)
    if q != 1:
        factors.insert(0, _fmt_rational(q))
    return neg, "*".join(factors)


def _join(signed_parts):
    if not signed_parts:
        return "0"
    out = []
    for i, (neg, body) in enumerate(signed_parts):
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def _poly_parts(poly, names):
    return [_fmt_monomial(names, expv, c) for expv, c in poly.terms()]


def _fmt_poly(poly, names):
    return _join(_poly_parts(poly, names))


def _is_single_factor(poly, names):
    """A bare power of one variable with coefficient 1."""
    terms = poly.terms()
    if len(terms) != 1:
        return False
    expv, c = terms[0]
    return c == 1 and sum(1 for e in expv if e) == 1


def _fmt_ratfunc_signed(rf, names):
    """Signed rendering of a rational function as a product-like factor.

    Returns (negative, body, atomic) where ``atomic`` says whether ``body``
    can be followed by ``*factor`` without parentheses.
    """
    num_parts = _poly_parts(rf.num, names)
    if rf.is_polynomial:
        if len(num_parts) == 1:
            neg, body = num_parts[0]
            return neg, body, True
        return False, f"({_join(num_parts)})", True
    if len(num_parts) == 1:
        neg, nbody = num_parts[0]
    else:
        neg, nbody = False, f"({_join(num_parts)})"
    den = _fmt_poly(rf.den, names)
    if not _is_single_factor(rf.den, names):
        den = f"({den})"
    return neg, f"{nbody}/{den}", True


def _term_with_factors(coeff_rf, names, factors):
    """Render ``coeff * f1 * f2 ...`` as (negative, body)."""
    if not factors:
        if coeff_rf.is_polynomial:
            return None, _poly_parts(coeff_rf.num, names)
        neg, body, _ = _fmt_ratfunc_signed(coeff_rf, names)
        return None, [(neg, body)]
    tail = "*".join(factors)
    if coeff_rf.is_constant:
        q = coeff_rf.constant_value()
        neg = q < 0
        q = abs(q)
        return None, [(neg, tail if q == 1 else f"{_fmt_rational(q)}*{tail}")]
    neg, body, _ = _fmt_ratfunc_signed(coeff_rf, names)
    if not coeff_rf.is_polynomial:
        body = f"({body})"
    return None, [(neg, f"{body}*{tail}")]


def _scalar_parts(f):
    chart = f.chart
    names = chart.even_names
    parts = []
    for mask in sorted(f.terms, key=lambda m: (bin(m).count("1"), [-(m >> j & 1) for j in range(chart.n_odd)])):
        odd = [chart.odd_names[j] for j in range(chart.n_odd) if mask >> j & 1]
        parts.extend(_term_with_factors(f.terms[mask], names, odd)[1])
    return parts


def format_scalar(f):
    return _join(_scalar_parts(f))


def _key_factors(chart, key, symbol):
    expv, mask = key
    factors = []
    for n, e in zip(chart.even_names, expv):
        if e:
            factors.append(f"{symbol}[{n}]" + (f"^{e}" if e > 1 else ""))
    for j, n in enumerate(chart.odd_names):
        if mask >> j & 1:
            factors.append(f"{symbol}[{n}]")
    return factors


def _key_sort(chart, key):
    from densalg.diffop import key_degree

    expv, mask = key
    return (-key_degree(key), [-e for e in expv], [-(mask >> j & 1) for j in range(chart.n_odd)])


def _coefficient_parts(coeff, factors):
    """Parts for ``coeff * factors`` where coeff is a GradedScalar."""
    if not factors:
        return _scalar_parts(coeff)
    tail = "*".join(factors)
    inner = _scalar_parts(coeff)
    if len(inner) == 1:
        neg, body = inner[0]
        if body == "1":
            return [(neg, tail)]
        if "+" in body or " - " in body:
            return [(neg, f"({body})*{tail}")]
        return [(neg, f"{body}*{tail}")]
    return [(False, f"({_join(inner)})*{tail}")]


def _format_keyed(chart, terms, symbol):
    parts = []
    for key in sorted(terms, key=lambda k: _key_sort(chart, k)):
        parts.extend(_coefficient_parts(terms[key], _key_factors(chart, key, symbol)))
    return _join(parts)


def format_operator(d):
    return _format_keyed(d.chart, d.terms, "d")


def format_momentum(h):
    return _format_keyed(h.chart, h.terms, "p")


def format_weight(w):
    w = Fraction(w)
    return f"t^{{{_fmt_rational(w)}}}"


def format_density(a):
    parts = []
    for w, f in a.weight_decompose():
        if w == 0:
            parts.extend(_scalar_parts(f))
        else:
            parts.extend(_coefficient_parts(f, [format_weight(w)]))
    return _join(parts)


def format_value(v):
    k = _kind(v)
    if k == "scalar":
        return format_scalar(v)
    if k == "operator":
        return format_operator(v)
    if k == "momentum":
        return format_momentum(v)
    return format_density(v)
