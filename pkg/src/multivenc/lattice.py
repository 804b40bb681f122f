"""Ambiguity lattice of ``A v = 0 (mod 2 pi)`` and its fundamental cells.

All exact work happens in normalized coordinates ``w = v / period`` with
``period = 2 pi / gamma_m``; there the congruence reads ``R w in Z^N`` for
the rational part ``R`` of ``A``.  Lattice points are carried as integer
vectors over a common denominator so determinants and membership tests are
exact integer arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .encoding import CongruenceSystem, DifferenceSystem, Preprocessor, apply_preprocessor
from .errors import RankDeficiencyError
from .exact_arith import RationalMatrix, as_rational, generalized_lcm, modified_divide

__all__ = [
    "SearchBox",
    "LatticePoints",
    "AmbiguityLattice",
    "Parallelepiped",
    "SlabVolume",
    "RangeVolume",
    "compute_search_box",
    "enumerate_lattice_points",
    "extract_basis",
    "ambiguity_lattice",
    "reduce_to_fundamental",
    "reduce_normalized",
    "centered_parallelepiped",
    "slab_region_volume",
    "preprocessed_range_volume",
]

_INT64_SAFE = 2**62


@dataclass(frozen=True)
class SearchBox:
    """Half-extents of the hyper-rectangle ``[-h_i, h_i]`` per axis."""

    normalized: tuple[Fraction, Fraction, Fraction]
    period: float

    @property
    def half_extents(self) -> np.ndarray:
        return np.array([float(h) for h in self.normalized]) * self.period


def compute_search_box(d: CongruenceSystem) -> SearchBox:
    """Per-axis ``lcm-bar(2 pi (/) A[:, i])``.

    Since ``2 pi (/) A[:, i] = period * (1 (/) R[:, i])`` the lcm is taken
    over rationals and scaled back to velocity units by ``period``.
    """
    R = d.rational
    h = tuple(generalized_lcm(modified_divide(1, R.col(i))) for i in range(3))
    return SearchBox(normalized=h, period=d.period)


@dataclass(frozen=True)
class LatticePoints:
    """Lattice points as ``coords / denominator`` in normalized units."""

    coords: np.ndarray
    denominator: int
    system: CongruenceSystem = field(repr=False)

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def velocities(self) -> np.ndarray:
        return self.coords.astype(float) / self.denominator * self.system.period

    def normalized(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        q = self.denominator
        return [tuple(Fraction(int(c), q) for c in row) for row in self.coords]


def _checked_int64(values, bound: int = 2**31) -> np.ndarray:
    """int64 array, refusing entries large enough to overflow later products."""
    ints = [[int(x) for x in row] for row in values]
    if any(abs(x) >= bound for row in ints for x in row):
        raise OverflowError("lattice coordinates exceed the checked int64 range")
    return np.array(ints, dtype=np.int64)


def _check_product(*mags: int) -> None:
    if math.prod(int(m) for m in mags) >= _INT64_SAFE:
        raise OverflowError("integer products would exceed int64")


def _integer_rows(R: RationalMatrix) -> tuple[np.ndarray, int]:
    den = R.common_denominator()
    return _checked_int64([[x * den for x in R.row(i)] for i in range(R.rows)]), den


def _pick_rows(R: RationalMatrix, bounds: Sequence[Fraction]) -> tuple[int, int, int]:
    """Independent row triple with the fewest integer k-combinations."""
    best = None
    for idx in itertools.combinations(range(R.rows), 3):
        sub = R.select_rows(idx)
        if sub.det() == 0:
            continue
        work = math.prod(2 * math.floor(bounds[i]) + 1 for i in idx)
        if best is None or work < best[0]:
            best = (work, idx)
    if best is None:
        raise RankDeficiencyError("direction invisible to acquisition: rank(A) < 3")
    return best[1]


def enumerate_lattice_points(d: CongruenceSystem, box: Optional[SearchBox] = None) -> LatticePoints:
    """Every ``v`` in the search box with ``A v = 0 (mod 2 pi)``, exactly.

    Three independent rows fix ``w = R3^{-1} k`` for integer ``k``; each
    ``k_r`` is confined by the row's extent over the box (floor of
    ``A_r Delta / 2 pi``), and the remaining rows filter candidates by exact
    integrality.
    """
    if box is None:
        box = compute_search_box(d)
    R = d.rational
    h = box.normalized
    bounds = [sum(abs(R[r, j]) * h[j] for j in range(3)) for r in range(R.rows)]
    rows = _pick_rows(R, bounds)
    inv = R.select_rows(rows).inverse()

    q = math.lcm(inv.common_denominator(), *(x.denominator for x in h))
    inv_int = _checked_int64([[x * q for x in inv.row(i)] for i in range(3)])
    limits = _checked_int64([[x * q for x in h]])[0]

    axes = [np.arange(-math.floor(bounds[r]), math.floor(bounds[r]) + 1) for r in rows]
    K = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    _check_product(3, np.abs(inv_int).max(), np.abs(K).max(initial=1))
    Z = K @ inv_int.T
    Z = Z[np.all(np.abs(Z) <= limits, axis=1)]

    R_int, r_den = _integer_rows(R)
    _check_product(3, np.abs(R_int).max(), np.abs(Z).max(initial=1))
    Z = Z[np.all((Z @ R_int.T) % (r_den * q) == 0, axis=1)]

    order = np.lexsort(Z.T[::-1])
    return LatticePoints(coords=Z[order], denominator=q, system=d)


@dataclass(frozen=True)
class AmbiguityLattice:
    """A basis of the ambiguity lattice, columns ``v_1, v_2, v_3``."""

    basis: np.ndarray
    rational_basis: RationalMatrix
    normalized_volume: Fraction
    condition_number: float
    system: CongruenceSystem = field(repr=False)

    @property
    def volume(self) -> float:
        return float(self.normalized_volume) * self.system.period ** 3

    @property
    def exact_volume(self) -> Optional[Fraction]:
        """``|det V|`` as a Fraction when ``gamma_m / pi`` is rational."""
        p = self.system.exact_period
        return None if p is None else self.normalized_volume * p ** 3

    @property
    def wrap_shifts(self) -> np.ndarray:
        """Integer ``N x 3`` matrix ``A V / 2 pi``: wrap change per basis step."""
        M = self.system.rational @ self.rational_basis
        return np.array([[int(x) for x in M.row(i)] for i in range(M.rows)], dtype=np.int64)


def _dets_with_prefix(Z: np.ndarray, i: int, jj: np.ndarray, kk: np.ndarray, C: np.ndarray):
    sel = jj > i
    return C[sel] @ Z[i], jj[sel], kk[sel]


def extract_basis(points: LatticePoints) -> AmbiguityLattice:
    """Minimum-volume basis with the smallest spectral condition number.

    Brute force over all triples of nonzero enumerated points; remaining
    ties are broken lexicographically on the (exact) flattened basis.
    """
    Z = points.coords
    Z = Z[np.any(Z != 0, axis=1)]
    n = len(Z)
    if n < 3 or np.linalg.matrix_rank(Z.astype(float)) < 3:
        raise RankDeficiencyError("lattice points do not span three dimensions")
    _check_product(6, int(np.abs(Z).max()) ** 3)
    jj, kk = np.triu_indices(n, 1)
    C = np.cross(Z[jj], Z[kk])

    dmin = None
    for i in range(n - 2):
        dets, _, _ = _dets_with_prefix(Z, i, jj, kk, C)
        nz = np.abs(dets[dets != 0])
        if nz.size:
            m = nz.min()
            dmin = m if dmin is None else min(dmin, m)
    if dmin is None:
        raise RankDeficiencyError("lattice points do not span three dimensions")

    triples = []
    for i in range(n - 2):
        dets, j, k = _dets_with_prefix(Z, i, jj, kk, C)
        hit = np.abs(dets) == dmin
        triples.extend((i, int(a), int(b)) for a, b in zip(j[hit], k[hit]))
    idx = np.array(triples)
    bases = np.stack([Z[idx[:, 0]], Z[idx[:, 1]], Z[idx[:, 2]]], axis=-1).astype(float)
    sv = np.linalg.svd(bases, compute_uv=False)
    kappa = sv[:, 0] / sv[:, -1]
    kmin = kappa.min()
    tied = np.flatnonzero(kappa <= kmin * (1 + 1e-12))
    flat = [tuple(bases[t].astype(np.int64).ravel().tolist()) for t in tied]
    best = tied[min(range(len(tied)), key=lambda r: flat[r])]
    cols = [Z[c] for c in idx[best]]

    q = points.denominator
    W = RationalMatrix.from_rows([[Fraction(int(cols[c][r]), q) for c in range(3)] for r in range(3)])
    lat = AmbiguityLattice(
        basis=W.to_array() * points.system.period,
        rational_basis=W,
        normalized_volume=abs(W.det()),
        condition_number=float(kappa[best]),
        system=points.system,
    )
    _check_generates(lat, points)
    return lat


def _check_generates(lat: AmbiguityLattice, points: LatticePoints) -> None:
    inv = lat.rational_basis.inverse()
    q = points.denominator
    for row in points.coords:
        coeff = inv @ [Fraction(int(c), q) for c in row]
        if any(c.denominator != 1 for c in coeff):
            raise RankDeficiencyError("extracted triple does not generate the enumerated points")


def ambiguity_lattice(d: CongruenceSystem) -> AmbiguityLattice:
    """Enumerate the search box and extract the preferred basis."""
    return extract_basis(enumerate_lattice_points(d))


@dataclass(frozen=True)
class Parallelepiped:
    """``{origin + V alpha : alpha in [0, 1)^3}`` with edges as columns of V."""

    origin: np.ndarray
    edges: np.ndarray

    @property
    def volume(self) -> float:
        return abs(float(np.linalg.det(self.edges)))

    @property
    def center(self) -> np.ndarray:
        return self.origin + self.edges.sum(axis=1) / 2

    def coefficients(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.linalg.solve(self.edges, (v - self.origin).T).T

    def contains(self, v) -> np.ndarray:
        a = self.coefficients(v)
        return np.all((a >= 0) & (a < 1), axis=-1)

    def vertices(self) -> np.ndarray:
        corners = np.array(list(itertools.product((0, 1), repeat=3)), dtype=float)
        return self.origin + corners @ self.edges.T


def centered_parallelepiped(lat: AmbiguityLattice) -> Parallelepiped:
    """Fundamental cell of ``lat`` centred on the origin."""
    return Parallelepiped(origin=-lat.basis.sum(axis=1) / 2, edges=lat.basis.copy())


def reduce_to_fundamental(v, lat: AmbiguityLattice, origin=None) -> np.ndarray:
    """Representative of ``v`` modulo the lattice inside the cell at ``origin``.

    ``v - V floor(V^{-1} (v - origin))``; works on ``(..., 3)`` batches.
    """
    v = np.asarray(v, dtype=float)
    o = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    V = lat.basis
    alpha = np.linalg.solve(V, (v - o).reshape(-1, 3).T).T
    out = v.reshape(-1, 3) - np.floor(alpha) @ V.T
    return out.reshape(v.shape)


def reduce_normalized(w: Sequence, lat: AmbiguityLattice) -> list[Fraction]:
    """Exact reduction of a normalized rational vector into ``[0, 1)`` coefficients."""
    w = [as_rational(x) for x in w]
    alpha = lat.rational_basis.inverse() @ w
    shift = lat.rational_basis @ [math.floor(a) for a in alpha]
    return [a - b for a, b in zip(w, shift)]


@dataclass(frozen=True)
class SlabVolume:
    estimate: float
    stderr: float
    lower: np.ndarray
    upper: np.ndarray
    samples: int


def _slab_vertices(PA: np.ndarray) -> np.ndarray:
    verts = []
    for idx in itertools.combinations(range(len(PA)), 3):
        sub = PA[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-12 * np.abs(sub).max() ** 3:
            continue
        for signs in itertools.product((-np.pi, np.pi), repeat=3):
            x = np.linalg.solve(sub, signs)
            if np.all(np.abs(PA @ x) <= np.pi * (1 + 1e-9)):
                verts.append(x)
    return np.array(verts)


def slab_region_volume(
    p: Preprocessor,
    d: DifferenceSystem,
    samples: int = 1_000_000,
    seed: int = 0,
    chunk: int = 1_000_000,
) -> SlabVolume:
    """Monte Carlo volume of ``{v : -pi <= (P A v)_i <= pi for all i}``.

    Samples are uniform over the region's bounding box, found from the
    vertices of the slab intersection.
    """
    reduced = apply_preprocessor(p, d)
    PA = reduced.A
    verts = _slab_vertices(PA)
    if len(verts) == 0:
        raise RankDeficiencyError("slab normals do not bound a region")
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    box_volume = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u = lo + (hi - lo) * rng.random((m, 3))
        hits += int(np.count_nonzero(np.all(np.abs(u @ PA.T) <= np.pi, axis=1)))
        done += m
    frac = hits / samples
    return SlabVolume(
        estimate=frac * box_volume,
        stderr=box_volume * math.sqrt(frac * (1 - frac) / samples),
        lower=lo,
        upper=hi,
        samples=samples,
    )


@dataclass(frozen=True)
class RangeVolume:
    """Unambiguous-range volume of a pre-processed system."""

    volume: float
    stderr: float
    method: str
    exact: Optional[Fraction] = None


def preprocessed_range_volume(
    p: Preprocessor, d: DifferenceSystem, samples: int = 1_000_000, seed: int = 0
) -> RangeVolume:
    """Range volume under the pre-processor's own definition."""
    if p.range_definition == "lattice":
        lat = ambiguity_lattice(apply_preprocessor(p, d))
        return RangeVolume(volume=lat.volume, stderr=0.0, method="lattice", exact=lat.exact_volume)
    sv = slab_region_volume(p, d, samples=samples, seed=seed)
    return RangeVolume(volume=sv.estimate, stderr=sv.stderr, method="slab")
