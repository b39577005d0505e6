"""Pure-Python Grassmann kernels.

Odd monomials are bitmasks over the odd coordinates of a chart, bit ``i``
standing for the ``i``-th odd coordinate in chart order.  A term map is a
dict ``{mask: coefficient}`` where coefficients support ``*``, ``+``, unary
``-`` and truthiness (zero is falsy).
"""


def popcount(n):
    return bin(n).count("1")


def koszul_sign(a, b):
    """Sign of reordering the product of monomials ``a`` and ``b``.

    Returns 0 when the monomials share a generator.
    """
    if a & b:
        return 0
    inversions = 0
    while b:
        low = b & -b
        inversions += popcount(a & ~((low << 1) - 1))
        b ^= low
    return -1 if inversions & 1 else 1


def grassmann_product(left, right):
    out = {}
    for ma, ca in left.items():
        for mb, cb in right.items():
            if ma & mb:
                continue
            c = ca * cb
            if koszul_sign(ma, mb) < 0:
                c = -c
            m = ma | mb
            if m in out:
                c = out[m] + c
                if c:
                    out[m] = c
                else:
                    del out[m]
            elif c:
                out[m] = c
    return out


def odd_derivative(terms, index):
    """Left derivative with respect to odd generator ``index``."""
    bit = 1 << index
    below = bit - 1
    out = {}
    for m, c in terms.items():
        if m & bit:
            out[m ^ bit] = -c if popcount(m & below) & 1 else c
    return out


def insert_sign(index, mask):
    """Sign of moving generator ``index`` from the far left into ``mask``.

    Returns 0 if the generator is already present.
    """
    bit = 1 << index
    if mask & bit:
        return 0
    return -1 if popcount(mask & (bit - 1)) & 1 else 1
