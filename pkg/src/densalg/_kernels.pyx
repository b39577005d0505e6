# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Grassmann kernels; same contract as ``_kernels_py``."""

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int _inversions(unsigned long long a, unsigned long long b) nogil:
    cdef int inv = 0
    cdef unsigned long long low
    while b:
        low = b & (~b + 1)
        inv += __builtin_popcountll(a & ~((low << 1) - 1))
        b ^= low
    return inv


def popcount(unsigned long long n):
    return __builtin_popcountll(n)


def koszul_sign(unsigned long long a, unsigned long long b):
    if a & b:
        return 0
    return -1 if _inversions(a, b) & 1 else 1


def grassmann_product(dict left, dict right):
    cdef dict out = {}
    cdef unsigned long long ma, mb, m
    cdef object ca, cb, c
    for ka, ca in left.items():
        ma = ka
        for kb, cb in right.items():
            mb = kb
            if ma & mb:
                continue
            c = ca * cb
            if _inversions(ma, mb) & 1:
                c = -c
            m = ma | mb
            prev = out.get(m)
            if prev is not None:
                c = prev + c
                if c:
                    out[m] = c
                else:
                    del out[m]
            elif c:
                out[m] = c
    return out


def odd_derivative(dict terms, int index):
    cdef unsigned long long bit = 1ULL << index
    cdef unsigned long long below = bit - 1
    cdef unsigned long long m
    cdef dict out = {}
    for k, c in terms.items():
        m = k
        if m & bit:
            out[m ^ bit] = -c if __builtin_popcountll(m & below) & 1 else c
    return out


def insert_sign(int index, unsigned long long mask):
    cdef unsigned long long bit = 1ULL << index
    if mask & bit:
        return 0
    return -1 if __builtin_popcountll(mask & (bit - 1)) & 1 else 1
