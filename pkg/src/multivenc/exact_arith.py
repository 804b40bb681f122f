"""Exact rational scalars and small dense rational matrices.

Scalars are :class:`fractions.Fraction` (always in lowest terms with a
positive denominator), so arithmetic never rounds and integer parts grow
without overflow.  :class:`RationalMatrix` is a thin immutable row-major
container with the handful of operations the lattice code needs.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, IrrationalEntryError, RankDeficiencyError, UndefinedLcmError

Rational = Fraction

__all__ = [
    "Rational",
    "RationalMatrix",
    "as_rational",
    "parse_rational",
    "format_rational",
    "rational_lcm",
    "rational_gcd",
    "modified_divide",
    "generalized_lcm",
]


def as_rational(x) -> Fraction:
    """Coerce ``x`` to a Fraction without any floating-point rounding.

    Floats are accepted only through their shortest decimal repr, so
    ``-0.5`` becomes ``-1/2`` and ``0.4`` becomes ``2/5``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise IrrationalEntryError(f"not a rational number: {x!r}")
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, numbers.Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, numbers.Real):
        if not math.isfinite(x):
            raise IrrationalEntryError(f"not a finite number: {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        return parse_rational(x)
    raise IrrationalEntryError(f"not a rational number: {x!r}")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or a finite decimal literal."""
    s = text.strip()
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise IrrationalEntryError(f"cannot parse {text!r} as an exact rational") from None


def format_rational(x: Fraction) -> str:
    """Inverse of :func:`parse_rational`: ``"p/q"`` or ``"p"``."""
    x = as_rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def rational_gcd(a: Fraction, b: Fraction) -> Fraction:
    a, b = abs(as_rational(a)), abs(as_rational(b))
    return Fraction(math.gcd(a.numerator, b.numerator), math.lcm(a.denominator, b.denominator))


def rational_lcm(a: Fraction, b: Fraction) -> Fraction:
    """Smallest positive rational that is an integer multiple of ``a`` and ``b``.

    A zero argument is absorbed: ``rational_lcm(0, b) == b``.  For reduced
    ``p/q`` and ``r/s`` the result is ``lcm(p, r) / gcd(q, s)``.
    """
    a, b = as_rational(a), as_rational(b)
    if a < 0 or b < 0:
        raise ValueError("rational_lcm expects nonnegative arguments")
    if a == 0 and b == 0:
        raise UndefinedLcmError("undefined lcm: both arguments are zero")
    if a == 0:
        return b
    if b == 0:
        return a
    return Fraction(math.lcm(a.numerator, b.numerator), math.gcd(a.denominator, b.denominator))


def modified_divide(a, b: Iterable) -> list[Fraction]:
    """Element-wise ``a / b_i``, with 0 wherever ``b_i`` is 0."""
    a = as_rational(a)
    return [a / bi if bi != 0 else Fraction(0) for bi in map(as_rational, b)]


def generalized_lcm(b: Iterable) -> Fraction:
    """lcm of ``|b_i|`` over the nonzero entries of ``b``.

    Signs are dropped: a period and its negative generate the same
    one-dimensional sublattice.
    """
    nonzero = [abs(x) for x in map(as_rational, b) if x != 0]
    if not nonzero:
        raise UndefinedLcmError("degenerate column: every entry is zero")
    out = nonzero[0]
    for x in nonzero[1:]:
        out = rational_lcm(out, x)
    return out


@dataclass(frozen=True)
class RationalMatrix:
    """Dense ``rows x cols`` matrix of Fractions stored row-major."""

    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix"
            )

    # construction -------------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RationalMatrix":
        rows = [list(r) for r in rows]
        if not rows:
            raise DimensionError("matrix needs at least one row")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise DimensionError("ragged rows")
        return cls(len(rows), ncols, tuple(as_rational(x) for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols, (Fraction(0),) * (rows * cols))

    # access -------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple[Fraction, ...]:
        return self.entries[j::self.cols]

    def tolist(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def to_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.entries], dtype=float).reshape(self.rows, self.cols)

    def select_rows(self, idx: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix.from_rows([self.row(i) for i in idx])

    # arithmetic ---------------------------------------------------------
    def transpose(self) -> "RationalMatrix":
        return RationalMatrix.from_rows([list(self.col(j)) for j in range(self.cols)])

    T = property(transpose)

    def __matmul__(self, other):
        if isinstance(other, RationalMatrix):
            if self.cols != other.rows:
                raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
            ocols = [other.col(j) for j in range(other.cols)]
            return RationalMatrix.from_rows(
                [[sum(a * b for a, b in zip(self.row(i), c)) for c in ocols] for i in range(self.rows)]
            )
        vec = [as_rational(x) for x in other]
        if len(vec) != self.cols:
            raise DimensionError(f"cannot multiply {self.shape} by vector of length {len(vec)}")
        return [sum((a * b for a, b in zip(self.row(i), vec)), Fraction(0)) for i in range(self.rows)]

    def scale(self, c) -> "RationalMatrix":
        c = as_rational(c)
        return RationalMatrix(self.rows, self.cols, tuple(c * x for x in self.entries))

    def __neg__(self) -> "RationalMatrix":
        return self.scale(-1)

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return RationalMatrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    # linear algebra -----------------------------------------------------
    def _echelon(self) -> tuple[list[list[Fraction]], list[int]]:
        m = self.tolist()
        pivots = []
        r = 0
        for c in range(self.cols):
            p = next((i for i in range(r, self.rows) if m[i][c] != 0), None)
            if p is None:
                continue
            m[r], m[p] = m[p], m[r]
            for i in range(r + 1, self.rows):
                f = m[i][c] / m[r][c]
                if f:
                    m[i] = [x - f * y for x, y in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == self.rows:
                break
        return m, pivots

    def rank(self) -> int:
        return len(self._echelon()[1])

    def det(self) -> Fraction:
        if self.rows != self.cols:
            raise DimensionError("determinant of a non-square matrix")
        m = self.tolist()
        n = self.rows
        sign = 1
        out = Fraction(1)
        for c in range(n):
            p = next((i for i in range(c, n) if m[i][c] != 0), None)
            if p is None:
                return Fraction(0)
            if p != c:
                m[c], m[p] = m[p], m[c]
                sign = -sign
            out *= m[c][c]
            for i in range(c + 1, n):
                f = m[i][c] / m[c][c]
                if f:
                    m[i] = [x - f * y for x, y in zip(m[i], m[c])]
        return sign * out

    def inverse(self) -> "RationalMatrix":
        n = self.rows
        if self.rows != self.cols:
            raise DimensionError("inverse of a non-square matrix")
        m = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(self.tolist())]
        for c in range(n):
            p = next((i for i in range(c, n) if m[i][c] != 0), None)
            if p is None:
                raise RankDeficiencyError("singular matrix")
            m[c], m[p] = m[p], m[c]
            piv = m[c][c]
            m[c] = [x / piv for x in m[c]]
            for i in range(n):
                if i != c and m[i][c] != 0:
                    f = m[i][c]
                    m[i] = [x - f * y for x, y in zip(m[i], m[c])]
        return RationalMatrix.from_rows([row[n:] for row in m])

    def solve(self, b: Sequence) -> list[Fraction]:
        return self.inverse() @ b

    def is_integer(self) -> bool:
        return all(x.denominator == 1 for x in self.entries)

    def common_denominator(self) -> int:
        return math.lcm(*(x.denominator for x in self.entries))

    def __str__(self) -> str:
        cells = [[format_rational(x) for x in r] for r in self.tolist()]
        width = max(len(c) for r in cells for c in r)
        return "\n".join("[" + " ".join(c.rjust(width) for c in r) + "]" for r in cells)
