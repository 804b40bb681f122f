"""Velocity-encoding schemes, phase-difference systems and pre-processors.

An encoding is ``L`` first-moment rows ``m_l`` (exact rationals, in units of
a base moment ``m``) plus the physical scale ``gamma_m`` in rad per velocity
unit.  Conjugate-multiplying every pair of points gives ``N = L(L-1)/2``
phase differences with sensitivity matrix ``A = gamma_m * (B @ M)``, where
``B`` is the signed pair-incidence matrix.  Pairs are ordered

    (2,1), (3,1), ..., (L,1), (3,2), ..., (L,L-1)

which is the row order of the printed 4- and 5-point matrices; the built-in
pre-processors select rows by position and depend on it.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DimensionError, RankDeficiencyError
from .exact_arith import RationalMatrix, as_rational

__all__ = [
    "EncodingScheme",
    "CongruenceSystem",
    "DifferenceSystem",
    "ReducedSystem",
    "Preprocessor",
    "pair_order",
    "pair_incidence",
    "build_difference_system",
    "builtin_scheme",
    "builtin_preprocessor",
    "apply_preprocessor",
    "with_snr",
    "random_preprocessor",
    "BUILTIN_SCHEMES",
    "BUILTIN_PREPROCESSORS",
]

DEFAULT_GAMMA_M_OVER_PI = Fraction(1, 100)
DEFAULT_NOISE_STD = 0.2  # SNR 5 at unit magnitude


@dataclass(frozen=True)
class EncodingScheme:
    """``L`` encodings with first moments ``moments`` (``L x 3``).

    ``gamma_m_over_pi`` optionally records ``gamma_m / pi`` as an exact
    rational; when present, lattice volumes are also reported exactly.
    """

    moments: RationalMatrix
    gamma_m: float
    magnitudes: tuple[float, ...] = ()
    noise_std: float = DEFAULT_NOISE_STD
    gamma_m_over_pi: Optional[Fraction] = None
    name: str = "custom"

    def __post_init__(self):
        if not isinstance(self.moments, RationalMatrix):
            object.__setattr__(self, "moments", RationalMatrix.from_rows(self.moments))
        if self.moments.cols != 3:
            raise DimensionError(f"moments must have 3 columns, got {self.moments.cols}")
        if self.L < 2:
            raise DimensionError("an encoding needs at least two points")
        if self.gamma_m_over_pi is not None:
            gop = as_rational(self.gamma_m_over_pi)
            object.__setattr__(self, "gamma_m_over_pi", gop)
            if self.gamma_m is None:
                object.__setattr__(self, "gamma_m", math.pi * float(gop))
            elif not math.isclose(self.gamma_m, math.pi * float(gop), rel_tol=1e-12):
                raise ValueError("gamma_m disagrees with gamma_m_over_pi")
        if not (self.gamma_m > 0 and math.isfinite(self.gamma_m)):
            raise ValueError(f"gamma_m must be positive, got {self.gamma_m}")
        mags = tuple(float(a) for a in self.magnitudes) or (1.0,) * self.L
        if len(mags) != self.L:
            raise DimensionError(f"{len(mags)} magnitudes for {self.L} points")
        if any(not a > 0 for a in mags):
            raise ValueError("magnitudes must be positive")
        object.__setattr__(self, "magnitudes", mags)
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")

    @property
    def L(self) -> int:
        return self.moments.rows

    @property
    def N(self) -> int:
        return self.L * (self.L - 1) // 2


def with_snr(scheme: EncodingScheme, snr: float) -> EncodingScheme:
    """Copy of ``scheme`` whose noise level gives ``max(a_l) / sigma == snr``."""
    if not snr > 0:
        raise ValueError("snr must be positive")
    return dataclasses.replace(scheme, noise_std=max(scheme.magnitudes) / snr)


def pair_order(L: int) -> list[tuple[int, int]]:
    """1-based index pairs ``(i, j)``, ``i > j``: outer loop on ``j``."""
    return [(i, j) for j in range(1, L) for i in range(j + 1, L + 1)]


def pair_incidence(L: int) -> np.ndarray:
    """``N x L`` integer matrix with +1 at ``i`` and -1 at ``j`` per pair."""
    pairs = pair_order(L)
    B = np.zeros((len(pairs), L), dtype=int)
    for r, (i, j) in enumerate(pairs):
        B[r, i - 1] = 1
        B[r, j - 1] = -1
    return B


@dataclass(frozen=True)
class CongruenceSystem:
    """``A v = phi + 2 pi k`` with ``A = gamma_m * rational``."""

    rational: RationalMatrix
    gamma_m: float
    gamma_m_over_pi: Optional[Fraction] = None

    @property
    def A(self) -> np.ndarray:
        return self.gamma_m * self.rational.to_array()

    @property
    def n_equations(self) -> int:
        return self.rational.rows

    @property
    def period(self) -> float:
        """Velocity per unit of normalized coordinate, ``2 pi / gamma_m``."""
        if self.gamma_m_over_pi is not None:
            return float(self.exact_period)
        return 2 * math.pi / self.gamma_m

    @property
    def exact_period(self) -> Optional[Fraction]:
        if self.gamma_m_over_pi is None:
            return None
        return 2 / self.gamma_m_over_pi


@dataclass(frozen=True)
class DifferenceSystem(CongruenceSystem):
    pair_order: tuple[tuple[int, int], ...] = ()
    scheme: Optional[EncodingScheme] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Preprocessor:
    """``D x N`` matrix combining phase differences.

    ``range_definition`` states how the unambiguous range of the reduced
    system is measured: ``"lattice"`` (fundamental cell of ``P A``) or
    ``"slab"`` (the set ``-pi <= P A v <= pi``).
    """

    P: RationalMatrix
    name: str = "custom"
    range_definition: str = "slab"

    def __post_init__(self):
        if not isinstance(self.P, RationalMatrix):
            object.__setattr__(self, "P", RationalMatrix.from_rows(self.P))
        if self.range_definition not in ("lattice", "slab"):
            raise ValueError(f"unknown range definition {self.range_definition!r}")
        if self.P.rows < 3:
            raise DimensionError("a pre-processor needs at least 3 output rows")

    @property
    def D(self) -> int:
        return self.P.rows


@dataclass(frozen=True)
class ReducedSystem(CongruenceSystem):
    preprocessor: Optional[Preprocessor] = None
    source: Optional[DifferenceSystem] = field(default=None, compare=False, repr=False)


def build_difference_system(s: EncodingScheme) -> DifferenceSystem:
    B = pair_incidence(s.L)
    R = RationalMatrix.from_rows(B.tolist()) @ s.moments
    if R.rank() < 3:
        raise RankDeficiencyError("direction invisible to acquisition: rank(A) < 3")
    return DifferenceSystem(
        rational=R,
        gamma_m=s.gamma_m,
        gamma_m_over_pi=s.gamma_m_over_pi,
        pair_order=tuple(pair_order(s.L)),
        scheme=s,
    )


_TETRA = [[-1, -1, -1], [1, 1, -1], [1, -1, 1], [-1, 1, 1]]

BUILTIN_SCHEMES = {
    "balanced4": _TETRA,
    "balanced5": [[0, 0, 0]] + _TETRA,
    "perturbed4": [[-1, Fraction(-1, 2), -1]] + _TETRA[1:],
    "perturbed5": [[0, 0, Fraction(2, 5)]] + _TETRA,
}

BUILTIN_PREPROCESSORS = {
    "p91": (
        [[1, 0, 0, 0, 0, -1],
         [1, 0, 0, 0, 0, 1],
         [0, 0, 1, 1, 0, 0]],
        "lattice",
    ),
    "p10": ([[int(i == j) for j in range(6)] for i in range(3)], "slab"),
    "p5": ([[int(i == j) for j in range(10)] for i in range(4)], "slab"),
}


def builtin_scheme(
    name: str,
    gamma_m_over_pi: Fraction = DEFAULT_GAMMA_M_OVER_PI,
    noise_std: float = DEFAULT_NOISE_STD,
) -> EncodingScheme:
    """One of ``balanced4``, ``balanced5``, ``perturbed4``, ``perturbed5``."""
    try:
        rows = BUILTIN_SCHEMES[name]
    except KeyError:
        raise KeyError(f"unknown scheme {name!r}; choose from {sorted(BUILTIN_SCHEMES)}") from None
    gop = as_rational(gamma_m_over_pi)
    return EncodingScheme(
        moments=RationalMatrix.from_rows(rows),
        gamma_m=math.pi * float(gop),
        gamma_m_over_pi=gop,
        noise_std=noise_std,
        name=name,
    )


def builtin_preprocessor(name: str, system: Optional[DifferenceSystem] = None) -> Preprocessor:
    try:
        rows, range_def = BUILTIN_PREPROCESSORS[name]
    except KeyError:
        raise KeyError(f"unknown preprocessor {name!r}; choose from {sorted(BUILTIN_PREPROCESSORS)}") from None
    p = Preprocessor(RationalMatrix.from_rows(rows), name=name, range_definition=range_def)
    if system is not None and p.P.cols != system.n_equations:
        raise DimensionError(
            f"preprocessor {name} expects {p.P.cols} phase differences, system has {system.n_equations}"
        )
    return p


def apply_preprocessor(p: Preprocessor, d: DifferenceSystem) -> ReducedSystem:
    """Reduced system with rational part ``P @ R``.

    Wrapped residuals of the reduced system live on the image of
    ``2 pi P``, not on ``2 pi Z^D``; range comparisons therefore go through
    :attr:`Preprocessor.range_definition`.
    """
    if p.P.cols != d.n_equations:
        raise DimensionError(f"P is {p.P.rows}x{p.P.cols} but the system has {d.n_equations} rows")
    PR = p.P @ d.rational
    if PR.rank() < 3:
        raise RankDeficiencyError(f"rank(P A) < 3 for preprocessor {p.name}")
    return ReducedSystem(
        rational=PR,
        gamma_m=d.gamma_m,
        gamma_m_over_pi=d.gamma_m_over_pi,
        preprocessor=p,
        source=d,
    )


def random_preprocessor(n: int, rng: np.random.Generator, d: Optional[int] = None, span: int = 3) -> Preprocessor:
    """Random integer ``D x n`` pre-processor with full row rank."""
    while True:
        rows = d if d is not None else int(rng.integers(3, n + 1))
        m = rng.integers(-span, span + 1, size=(rows, n))
        P = RationalMatrix.from_rows(m.tolist())
        if P.rank() == rows:
            return Preprocessor(P, name="random")

