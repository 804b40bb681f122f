"""Independent reference computations used to freeze expected values.

Nothing here calls into the package's lattice or lcm code paths.
"""
import itertools
import math
from fractions import Fraction

import numpy as np


def brute_lcm(a: Fraction, b: Fraction, max_multiple: int = 10_000) -> Fraction:
    """Smallest positive integer multiple of ``a`` that is also a multiple of ``b``."""
    nz = [x for x in (a, b) if x != 0]
    base = nz[0]
    for k in range(1, max_multiple):
        c = k * base
        if all((c / x).denominator == 1 for x in nz):
            return c
    raise AssertionError("no common multiple found")


def covolume_from_minors(rows) -> Fraction:
    """Covolume of ``{w : R w in Z^N}`` as 1 / gcd of the 3x3 minors of ``R``.

    The rows of ``R`` generate a lattice whose determinant is the gcd of the
    maximal minors (over a common denominator); the solution set is its dual.
    """
    R = [[Fraction(x) for x in r] for r in rows]
    den = math.lcm(*(x.denominator for r in R for x in r))
    Ri = [[int(x * den) for x in r] for r in R]
    g = 0
    for idx in itertools.combinations(range(len(Ri)), 3):
        m = [Ri[i] for i in idx]
        det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
               - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
               + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
        g = math.gcd(g, abs(det))
    return Fraction(den ** 3, g)


def grid_lattice_points(rows, half_extents, step: Fraction):
    """All ``w`` on the ``step`` grid inside the box with ``R w`` integral."""
    R = [[Fraction(x) for x in r] for r in rows]
    axes = [
        [k * step for k in range(-int(h / step), int(h / step) + 1)]
        for h in half_extents
    ]
    out = []
    for w in itertools.product(*axes):
        if all(sum(a * b for a, b in zip(r, w)).denominator == 1 for r in R):
            out.append(w)
    return out


def incidence(L: int) -> np.ndarray:
    """Signed pair-incidence matrix built from the explicit pair rule."""
    rows = []
    for j in range(L):
        for i in range(j + 1, L):
            r = np.zeros(L)
            r[i], r[j] = 1, -1
            rows.append(r)
    return np.array(rows)
