"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own search machinery:
continued fractions come from the classical floor/invert recursion at
high precision, and shortest vectors from plain box enumeration.
"""

import itertools

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr
from hypothesis import settings

from latflow.scalars import ScalarContext

settings.register_profile("stable", derandomize=True)
settings.load_profile("stable")


@pytest.fixture(scope="session")
def ctx():
    return ScalarContext()


@pytest.fixture(scope="session")
def ctx256():
    return ScalarContext(precision_bits=256)


def cf_convergent_denominators(value_expr: str, q_cap: int, precision=256):
    """Denominators of continued-fraction convergents of a scalar literal."""
    from latflow.scalars import parse_value

    with gmpy2.context(precision=precision):
        x = parse_value(value_expr, ScalarContext(precision_bits=precision))
        qs = []
        q_prev, q_cur = 1, 0  # q_{-2} = 1, q_{-1} = 0
        for _ in range(200):
            a = int(gmpy2.floor(x))
            q_prev, q_cur = q_cur, a * q_cur + q_prev
            if q_cur > q_cap:
                break
            qs.append(q_cur)
            frac = x - a
            if frac == 0:
                break
            x = 1 / frac
        # first convergent denominator can repeat (a_1 = 1); records dedupe
        out = []
        for q in qs:
            if not out or q > out[-1]:
                out.append(q)
        return out


def brute_shortest_sq(basis, ctx, box):
    """Min squared norm over nonzero integer vectors with |w_i| <= box."""
    k = basis.shape[1]
    best = None
    with ctx.active():
        for w in itertools.product(range(-box, box + 1), repeat=k):
            if not any(w):
                continue
            v = basis @ np.array(w, dtype=object)
            nsq = sum(c * c for c in v)
            if best is None or nsq < best:
                best = nsq
    return best


def random_unimodular(k, rng, shears=6, bound=3):
    """Product of random integer shear matrices; det = +-1 exactly."""
    mat = np.eye(k, dtype=object)
    for _ in range(shears):
        i, j = rng.integers(0, k, size=2)
        if i == j:
            continue
        shear = np.eye(k, dtype=object)
        shear[i, j] = int(rng.integers(-bound, bound + 1))
        mat = mat @ shear
    return mat


def random_mpfr(rng, ctx, lo=0.0, hi=1.0):
    """Uniform scalar with entropy matching the context precision.

    float64 draws carry only 53 bits: as stored values they are rationals
    of height ~2^53, which deep scans can detect.  Chunked draws avoid it.
    """
    with ctx.active():
        acc = mpfr(0)
        chunks = ctx.precision_bits // 53 + 2
        for i in range(1, chunks + 1):
            acc += mpfr(float(rng.random())) * mpfr(2) ** (-53 * (i - 1))
        frac = acc - gmpy2.floor(acc)
        return mpfr(lo) + (mpfr(hi) - mpfr(lo)) * frac


def random_balanced_weights(m, n, rng, scale=1.0):
    """Random point of the weight cone; block sums agree exactly.

    ``scale`` sets the approximate ray parameter (each block sums to it).
    """
    from fractions import Fraction

    from gmpy2 import mpq

    from latflow.flows import Weights

    left = [1 + int(rng.integers(0, 3)) for _ in range(m)]
    right = [1 + int(rng.integers(0, 3)) for _ in range(n)]
    ls, rs = sum(left), sum(right)
    # cross-scaling balances exactly; the rational factor sets the size
    factor = mpq(Fraction(scale / (ls * rs)).limit_denominator(10**6))
    lv = [mpq(v * rs) * factor for v in left]
    rv = [mpq(v * ls) * factor for v in right]
    return Weights(m=m, n=n, t=tuple(lv + rv))
