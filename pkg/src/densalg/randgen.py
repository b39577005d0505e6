"""Seeded generators of random polynomial test objects."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from densalg.densities import ExtendedBracketData
from densalg.diffop import DiffOperator, key_degree, key_parity
from densalg.graded import GradedScalar, Parity
from densalg.ratfunc import RationalFunction
from densalg.symbols import Bracket

COEFFS = (-2, -1, -1, 1, 1, 2, 3, Fraction(1, 2), Fraction(-3, 2))


def rng_from(seed):
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def random_scalar(chart, rng, degree=2, parity=None, density=0.5, max_terms=4):
    """Random polynomial element; ``parity`` restricts to one parity."""
    ring = chart.ring
    masks = [
        m for m in range(1 << chart.n_odd) if parity is None or bin(m).count("1") % 2 == parity
    ]
    terms = {}
    for m in masks:
        if rng.random() > density:
            continue
        budget = degree - bin(m).count("1")
        if budget < 0:
            continue
        poly = ring.zero
        for _ in range(rng.randint(1, max_terms)):
            expv = [0] * chart.n_even
            for _ in range(rng.randint(0, budget)):
                if chart.n_even:
                    expv[rng.randrange(chart.n_even)] += 1
            c = rng.choice(COEFFS)
            poly += ring.from_dict({tuple(expv): ring.domain.convert(c)})
        if poly:
            terms[m] = RationalFunction(ring, poly)
    return GradedScalar(chart, terms)


def derivative_keys(chart, max_order):
    keys = []
    for mask in range(1 << chart.n_odd):
        for expv in itertools.product(range(max_order + 1), repeat=chart.n_even):
            k = (tuple(expv), mask)
            if key_degree(k) <= max_order:
                keys.append(k)
    return keys


def random_operator(chart, rng, order=2, parity=Parity.EVEN, degree=2, density=0.4):
    terms = {}
    for k in derivative_keys(chart, order):
        if rng.random() > density:
            continue
        want = Parity(parity) + key_parity(k)
        c = random_scalar(chart, rng, degree, want)
        if c:
            terms[k] = c
    return DiffOperator(chart, terms, parity=parity)


def random_bracket(chart, rng, parity=Parity.EVEN, degree=2, density=0.6):
    names = chart.names
    comps = {}
    for i, a in enumerate(names):
        for b in names[i:]:
            pa, pb = chart.parity(a), chart.parity(b)
            if a == b and pa:
                continue
            if rng.random() > density:
                continue
            s = random_scalar(chart, rng, degree, Parity(parity) + pa + pb)
            if not s:
                continue
            comps[(a, b)] = s
            comps[(b, a)] = s if not (pa and pb) else -s
    return Bracket(chart, Parity(parity), comps)


def random_data(chart, rng, parity=Parity.EVEN, degree=2):
    S = random_bracket(chart, rng, parity, degree)
    gamma = {a: random_scalar(chart, rng, degree, Parity(parity) + chart.parity(a)) for a in chart.names}
    theta = random_scalar(chart, rng, degree, Parity(parity))
    return ExtendedBracketData(chart, Parity(parity), S, gamma, theta)
