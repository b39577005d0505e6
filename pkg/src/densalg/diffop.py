"""Normal-ordered differential operators with graded coefficients.

A term is ``f * d[x1]^e1 ... d[xn]^en * d[xi_i1] ... d[xi_ik]`` with the
coefficient on the left, even derivatives first and odd derivatives in
increasing chart order.  Keys are ``(even_exponents, odd_mask)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from densalg import kernels
from densalg.errors import ChartMismatch, ParityError
from densalg.graded import GradedScalar, Parity, sign

def key_degree(key):
    expv, mask = key
    return sum(expv) + kernels.popcount(mask)


def key_parity(key):
    return Parity(kernels.popcount(key[1]) & 1)


@lru_cache(maxsize=None)
def key_word(chart, key):
    """Coordinate names of ∂^α in left-to-right order."""
    expv, mask = key
    word = []
    for name, e in zip(chart.even_names, expv):
        word.extend([name] * e)
    for j, name in enumerate(chart.odd_names):
        if mask >> j & 1:
            word.append(name)
    return tuple(word)


class DiffOperator:
    """Immutable ``sum f_α ∂^α``; ``declared_order`` is an upper bound."""

    __slots__ = ("chart", "terms", "declared_order", "_parity")

    def __init__(self, chart, terms=None, parity=None, declared_order=None):
        self.chart = chart
        self.terms = {k: c for k, c in (terms or {}).items() if c}
        actual = self.order()
        self.declared_order = actual if declared_order is None else max(declared_order, actual)
        found = set()
        for k, c in self.terms.items():
            for p in c.parity_parts():
                found.add(p + key_parity(k))
        if parity is not None:
            parity = Parity(parity)
            if found - {parity}:
                raise ParityError(f"operator terms do not all have parity {parity.name.lower()}")
        elif len(found) == 1:
            parity = found.pop()
        elif not found:
            parity = Parity.EVEN
        self._parity = parity

    # construction ---------------------------------------------------------

    @classmethod
    def zero(cls, chart, parity=Parity.EVEN):
        return cls(chart, {}, parity=parity)

    @classmethod
    def scalar(cls, f):
        return cls(f.chart, {(_zero_expv(f.chart), 0): f})

    @classmethod
    def identity(cls, chart):
        return cls.scalar(GradedScalar.one(chart))

    @classmethod
    def partial(cls, chart, name):
        return cls(chart, {_single_key(chart, name): GradedScalar.one(chart)})

    # structure -------------------------------------------------------------

    @property
    def parity(self):
        """Parity ε; None for an inhomogeneous operator."""
        return self._parity

    def order(self):
        return max((key_degree(k) for k in self.terms), default=0)

    @property
    def is_zero(self):
        return not self.terms

    def coefficient(self, key):
        return self.terms.get(key, GradedScalar.zero(self.chart))

    def part(self, degree):
        """The terms of exactly the given total derivative degree."""
        return DiffOperator(
            self.chart, {k: c for k, c in self.terms.items() if key_degree(k) == degree}
        )

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # linear structure ---------------------------------------------------------

    def _check(self, other):
        if other.chart != self.chart:
            raise ChartMismatch(f"{self.chart} vs {other.chart}")

    def __add__(self, other):
        if isinstance(other, GradedScalar):
            other = DiffOperator.scalar(other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return DiffOperator(
            self.chart, out, declared_order=max(self.declared_order, other.declared_order)
        )

    __radd__ = __add__

    def __neg__(self):
        return DiffOperator(
            self.chart,
            {k: -c for k, c in self.terms.items()},
            parity=self._parity,
            declared_order=self.declared_order,
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return DiffOperator(
            self.chart,
            {k: v.scale(c) for k, v in self.terms.items()},
            parity=self._parity if c else None,
            declared_order=self.declared_order,
        )

    def left_multiply(self, f):
        """The operator ``f ∘ self``."""
        return DiffOperator(
            self.chart,
            {k: f * c for k, c in self.terms.items()},
            declared_order=self.declared_order,
        )

    # action and composition -------------------------------------------------------

    def apply(self, f):
        """Apply to a scalar with left derivatives."""
        self._check(f)
        chart = self.chart
        result = GradedScalar.zero(chart)
        for key, c in self.terms.items():
            g = f
            for name in reversed(key_word(chart, key)):
                g = g.partial(name)
                if not g:
                    break
            if g:
                result = result + c * g
        return result

    def __call__(self, f):
        return self.apply(f)

    def compose(self, other):
        """Normal-ordered ``self ∘ other``."""
        if isinstance(other, GradedScalar):
            other = DiffOperator.scalar(other)
        self._check(other)
        chart = self.chart
        out = {}
        for key, c in self.terms.items():
            op = other.terms
            for name in reversed(key_word(chart, key)):
                op = _partial_then(chart, name, op)
            for k, v in op.items():
                v = c * v
                out[k] = out[k] + v if k in out else v
        parity = None
        if self.parity is not None and other.parity is not None:
            parity = self.parity + other.parity
        return DiffOperator(
            chart, out, parity=parity, declared_order=self.declared_order + other.declared_order
        )

    def __mul__(self, other):
        if isinstance(other, (DiffOperator, GradedScalar)):
            return self.compose(other)
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, GradedScalar):
            return DiffOperator.scalar(other).compose(self)
        return self.scale(other)

    def __pow__(self, n):
        result = DiffOperator.identity(self.chart)
        for _ in range(n):
            result = result.compose(self)
        return result

    def __repr__(self):
        from densalg.expr import format_operator

        return f"DiffOperator({format_operator(self)})"

    def __str__(self):
        from densalg.expr import format_operator

        return format_operator(self)


def _zero_expv(chart):
    return (0,) * chart.n_even


def _single_key(chart, name):
    par, i = chart.locate(name)
    if par:
        return (_zero_expv(chart), 1 << i)
    expv = [0] * chart.n_even
    expv[i] = 1
    return (tuple(expv), 0)


def _partial_then(chart, name, terms):
    """Term map of ``∂_name ∘ (sum g_β ∂^β)`` via the graded Leibniz rule."""
    par, i = chart.locate(name)
    out = {}

    def add(k, v):
        if v:
            if k in out:
                v = out[k] + v
                if v:
                    out[k] = v
                else:
                    del out[k]
            else:
                out[k] = v

    for (expv, mask), g in terms.items():
        add((expv, mask), g.partial(name))
        if par:
            s = kernels.insert_sign(i, mask)
            if not s:
                continue
            for gp, part in g.parity_parts().items():
                add((expv, mask | (1 << i)), part if s * sign(gp) > 0 else -part)
        else:
            e = list(expv)
            e[i] += 1
            add((tuple(e), mask), g)
    return out


# adjoints ----------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedOperator:
    """An operator read as acting on densities of the given weight."""

    op: DiffOperator
    weight: Fraction

    def __post_init__(self):
        object.__setattr__(self, "weight", Fraction(self.weight))


def _generators(chart, key, coeff):
    """Split one term into homogeneous generator words.

    Each word is a list of ``("mul", f)`` / ``("d", name)`` entries.
    """
    words = []
    for _, part in coeff.parity_parts().items():
        words.append([("mul", part)] + [("d", n) for n in key_word(chart, key)])
    return words


def _gen_parity(chart, g):
    kind, val = g
    return val.parity() if kind == "mul" else chart.parity(val)


def _gen_op(chart, g):
    kind, val = g
    return DiffOperator.scalar(val) if kind == "mul" else DiffOperator.partial(chart, val)


def _gen_adjoint(chart, g):
    kind, val = g
    if kind == "mul":
        return DiffOperator.scalar(val)
    return -DiffOperator.partial(chart, val)


def _word_adjoint(chart, word):
    """Adjoint of a word, using (AB)* = (-1)^{ε_A ε_B} B* A*."""
    adj = _gen_adjoint(chart, word[-1])
    eps = _gen_parity(chart, word[-1])
    for g in reversed(word[:-1]):
        pg = _gen_parity(chart, g)
        adj = adj.compose(_gen_adjoint(chart, g)).scale(sign(pg * eps))
        eps = eps + pg
    return adj, eps


def formal_adjoint(d):
    """Formal adjoint of a weighted operator: acts on weight ``1 - w``.

    Generators transform as ``f* = f`` and ``(∂_a)* = -∂_a``.
    """
    if isinstance(d, DiffOperator):
        d = WeightedOperator(d, Fraction(0))
    op = d.op
    chart = op.chart
    total = DiffOperator.zero(chart)
    for key, coeff in op.terms.items():
        for word in _generators(chart, key, coeff):
            total = total + _word_adjoint(chart, word)[0]
    result = DiffOperator(chart, total.terms, parity=op.parity, declared_order=op.declared_order)
    return WeightedOperator(result, 1 - d.weight)


def _word_apply(chart, word, f):
    for g in reversed(word):
        f = _gen_op(chart, g).apply(f)
    return f


def _word_certificate(chart, word, psi, psi_parity, chi):
    """K with (Wψ)χ - (-1)^{ε_W ψ̃} ψ (W*χ) = Σ_a ∂_a K^a."""
    zero = GradedScalar.zero(chart)
    g = word[0]
    if len(word) == 1:
        k = {n: zero for n in chart.names}
        if g[0] == "d":
            k[g[1]] = psi * chi
        return k
    rest = word[1:]
    pg = _gen_parity(chart, g)
    _, eps_rest = _word_adjoint(chart, rest)
    head = _word_certificate(chart, [g], _word_apply(chart, rest, psi), eps_rest + psi_parity, chi)
    tail = _word_certificate(
        chart, rest, psi, psi_parity, _gen_adjoint(chart, g).apply(chi)
    )
    s = sign(pg * (eps_rest + psi_parity))
    return {n: head[n] + (tail[n] if s > 0 else -tail[n]) for n in chart.names}


def adjoint_certificate(d, psi, chi):
    """Divergence witness for the pairing identity of ``d`` and its adjoint.

    Returns ``(lhs, flux)`` where ``lhs = (dψ)χ - Σ_t (-1)^{ε_t ψ̃} ψ (t*χ)``
    summed over homogeneous terms ``t`` and ``flux`` maps each coordinate
    to ``K^a`` so that ``lhs == Σ_a ∂_a K^a``.  ``psi`` must be homogeneous.
    """
    op = d.op if isinstance(d, WeightedOperator) else d
    chart = op.chart
    pp = psi.parity()
    lhs = op.apply(psi) * chi
    flux = {n: GradedScalar.zero(chart) for n in chart.names}
    for key, coeff in op.terms.items():
        for word in _generators(chart, key, coeff):
            adj, eps = _word_adjoint(chart, word)
            rhs = psi * adj.apply(chi)
            lhs = lhs - rhs if sign(eps * pp) > 0 else lhs + rhs
            k = _word_certificate(chart, word, psi, pp, chi)
            for n in chart.names:
                flux[n] = flux[n] + k[n]
    return lhs, flux


def divergence(flux):
    names = list(flux)
    total = None
    for n in names:
        term = flux[n].partial(n)
        total = term if total is None else total + term
    return total


# pullback ------------------------------------------------------------------------


def pullback(d, change):
    """Express ``d`` (on ``change.target``) in source coordinates.

    Satisfies ``change.pull(d(f)) == pullback(d, change)(change.pull(f))``.
    """
    if d.chart != change.target:
        raise ChartMismatch("pullback expects an operator on the target chart")
    src = change.source
    njac = change.inverse_jacobian_pulled
    partials = {}
    for ti, t in enumerate(change.target.names):
        op = DiffOperator.zero(src)
        for si, s in enumerate(src.names):
            if njac[ti][si]:
                op = op + DiffOperator.partial(src, s).left_multiply(njac[ti][si])
        partials[t] = op
    total = DiffOperator.zero(src)
    for key, coeff in d.terms.items():
        op = DiffOperator.scalar(change.pull(coeff))
        for name in key_word(d.chart, key):
            op = op.compose(partials[name])
        total = total + op
    return DiffOperator(src, total.terms, parity=d.parity, declared_order=d.declared_order)
