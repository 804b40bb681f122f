import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multivenc.encoding import (
    CongruenceSystem,
    apply_preprocessor,
    build_difference_system,
    builtin_preprocessor,
    builtin_scheme,
)
from multivenc.exact_arith import RationalMatrix
from multivenc.lattice import (
    Parallelepiped,
    ambiguity_lattice,
    centered_parallelepiped,
    compute_search_box,
    enumerate_lattice_points,
    extract_basis,
    preprocessed_range_volume,
    reduce_normalized,
    reduce_to_fundamental,
    slab_region_volume,
)
from oracles import covolume_from_minors, grid_lattice_points

SCHEMES = ["balanced4", "balanced5", "perturbed4", "perturbed5"]
# 1 / gcd of 3x3 minors of R, from the independent oracle
FROZEN_COVOLUME = {"balanced4": F(1, 16), "balanced5": F(1, 4), "perturbed4": F(1, 14), "perturbed5": F(5, 4)}
FROZEN_POINTS = {"balanced4": 35, "balanced5": 63, "perturbed4": 75, "perturbed5": 63}


def diag_system():
    R = RationalMatrix.from_rows([[1, 0, 0], [0, F(1, 2), 0], [0, 0, F(1, 3)]])
    return CongruenceSystem(rational=R, gamma_m=2 * math.pi, gamma_m_over_pi=F(2))


@pytest.fixture(scope="module")
def lattices():
    return {name: ambiguity_lattice(build_difference_system(builtin_scheme(name))) for name in SCHEMES}


def test_diag_search_box():
    box = compute_search_box(diag_system())
    assert box.normalized == (1, 2, 3)
    assert np.allclose(box.half_extents, [1, 2, 3])


def test_diag_points_match_grid_oracle():
    d = diag_system()
    pts = enumerate_lattice_points(d)
    assert len(pts) == 27
    oracle = grid_lattice_points(d.rational.tolist(), (1, 2, 3), F(1))
    assert sorted(pts.normalized()) == sorted(oracle)


def test_diag_basis():
    lat = ambiguity_lattice(diag_system())
    assert lat.exact_volume == 6
    assert lat.condition_number == pytest.approx(3.0)
    assert sorted(np.abs(lat.basis).max(axis=0).round(12)) == [1, 2, 3]
    assert np.count_nonzero(np.round(lat.basis, 12)) == 3


def test_balanced4_points_match_grid_oracle():
    d = build_difference_system(builtin_scheme("balanced4"))
    box = compute_search_box(d)
    assert box.normalized == (F(1, 2),) * 3
    assert np.allclose(box.half_extents, 100)
    pts = enumerate_lattice_points(d, box)
    oracle = grid_lattice_points(d.rational.tolist(), box.normalized, F(1, 4))
    assert sorted(pts.normalized()) == sorted(oracle)
    assert set(np.abs(np.round(pts.velocities, 9)).ravel()) == {0, 50, 100}


@pytest.mark.parametrize("name", SCHEMES)
def test_covolume_matches_minors_oracle(name, lattices):
    lat = lattices[name]
    assert lat.normalized_volume == FROZEN_COVOLUME[name]
    assert covolume_from_minors(lat.system.rational.tolist()) == FROZEN_COVOLUME[name]
    assert lat.exact_volume == FROZEN_COVOLUME[name] * 200**3


@pytest.mark.parametrize("name", SCHEMES)
def test_point_counts(name):
    d = build_difference_system(builtin_scheme(name))
    assert len(enumerate_lattice_points(d)) == FROZEN_POINTS[name]


@pytest.mark.parametrize("name", SCHEMES)
def test_basis_invariants(name, lattices):
    lat = lattices[name]
    assert lat.condition_number >= 1
    assert lat.volume == pytest.approx(abs(np.linalg.det(lat.basis)), rel=1e-12)
    # every basis vector satisfies the congruence exactly
    assert lat.system.rational.__matmul__(lat.rational_basis).is_integer()
    assert lat.wrap_shifts.dtype == np.int64


def test_balanced_volumes(lattices):
    assert lattices["balanced4"].exact_volume == 500_000
    assert lattices["balanced5"].exact_volume == 2_000_000
    assert lattices["balanced4"].condition_number == pytest.approx(2.0)


def test_doubling_gamma_divides_volume_by_eight():
    a = ambiguity_lattice(build_difference_system(builtin_scheme("balanced4")))
    b = ambiguity_lattice(build_difference_system(builtin_scheme("balanced4", gamma_m_over_pi=F(2, 100))))
    assert a.exact_volume == 8 * b.exact_volume
    assert a.normalized_volume == b.normalized_volume


def test_extract_basis_from_enumeration():
    pts = enumerate_lattice_points(diag_system())
    lat = extract_basis(pts)
    assert lat.exact_volume == 6
    # every enumerated point has integer coordinates in the basis
    inv = lat.rational_basis.inverse()
    assert all(all(c.denominator == 1 for c in inv @ list(w)) for w in pts.normalized())


def test_condition_number_one_for_cubic_lattice():
    R = RationalMatrix.identity(3).scale(F(1, 2))
    lat = ambiguity_lattice(CongruenceSystem(rational=R, gamma_m=2 * math.pi, gamma_m_over_pi=F(2)))
    assert lat.condition_number == pytest.approx(1.0)
    assert lat.exact_volume == 8


def test_reduce_exact_examples():
    lat = ambiguity_lattice(diag_system())
    w = reduce_normalized([F(7, 2), F(-5, 3), 10], lat)
    coeffs = lat.rational_basis.inverse() @ w
    assert all(0 <= c < 1 for c in coeffs)
    diff = [a - b for a, b in zip([F(7, 2), F(-5, 3), 10], w)]
    assert all(x.denominator == 1 for x in lat.system.rational @ diff)


def test_reduce_float_batch(lattices):
    lat = lattices["balanced4"]
    cell = centered_parallelepiped(lat)
    rng = np.random.default_rng(3)
    v = rng.uniform(-1000, 1000, size=(500, 3))
    r = reduce_to_fundamental(v, lat, cell.origin)
    assert cell.contains(r).all()
    shifts = np.linalg.solve(lat.basis, (v - r).T)
    assert np.allclose(shifts, np.round(shifts), atol=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.fractions(min_value=-50, max_value=50, max_denominator=60), min_size=3, max_size=3))
def test_reduce_preserves_congruence(w):
    lat = ambiguity_lattice(build_difference_system(builtin_scheme("perturbed4")))
    r = reduce_normalized(w, lat)
    assert all(0 <= c < 1 for c in lat.rational_basis.inverse() @ r)
    R = lat.system.rational
    assert all(x.denominator == 1 for x in R @ [a - b for a, b in zip(w, r)])


def test_tiling_no_overlap(lattices):
    lat = lattices["perturbed5"]
    rng = np.random.default_rng(0)
    probe = rng.uniform(-1.5, 1.5, size=(2000, 3)) @ lat.basis.T
    hits = np.zeros(len(probe), dtype=int)
    for n in itertools.product((-1, 0, 1), repeat=3):
        cell = Parallelepiped(origin=lat.basis @ np.array(n, float), edges=lat.basis)
        hits += cell.contains(probe)
    coeffs = np.linalg.solve(lat.basis, probe.T).T
    inside_block = np.all((coeffs >= -1) & (coeffs < 2), axis=1)
    assert np.all(hits[inside_block] == 1)
    assert np.all(hits[~inside_block] == 0)


def test_parallelepiped_geometry():
    cell = Parallelepiped(origin=np.zeros(3), edges=np.diag([1.0, 2.0, 3.0]))
    assert cell.volume == pytest.approx(6)
    assert np.allclose(cell.center, [0.5, 1, 1.5])
    assert len(cell.vertices()) == 8
    assert cell.contains([0, 0, 0]) and not cell.contains([1, 0, 0])


def test_p91_lattice_range():
    d = build_difference_system(builtin_scheme("balanced4"))
    rv = preprocessed_range_volume(builtin_preprocessor("p91"), d)
    assert rv.method == "lattice"
    assert rv.exact == 125_000


def test_p10_slab_volume_analytic():
    # |x+y|, |x+z|, |y+z| <= 50 is the image of a cube of side 100 under a det-2 map
    d = build_difference_system(builtin_scheme("balanced4"))
    sv = slab_region_volume(builtin_preprocessor("p10"), d, samples=400_000, seed=1)
    assert abs(sv.estimate - 500_000) < 4 * sv.stderr
    assert np.allclose(sv.upper, 75) and np.allclose(sv.lower, -75)  # x = (a + b - c) / 2


def test_p5_slab_is_octahedron():
    # four tetrahedral slabs intersect in |x| + |y| + |z| <= 100
    d = build_difference_system(builtin_scheme("balanced5"))
    sv = slab_region_volume(builtin_preprocessor("p5", d), d, samples=400_000, seed=2)
    assert abs(sv.estimate - 4e6 / 3) < 4 * sv.stderr
    assert np.allclose(sv.upper, 100)


def test_slab_reproducible():
    d = build_difference_system(builtin_scheme("balanced4"))
    p = builtin_preprocessor("p10")
    a = slab_region_volume(p, d, samples=10_000, seed=9)
    b = slab_region_volume(p, d, samples=10_000, seed=9, chunk=777)
    assert a.estimate == b.estimate


def test_reduced_lattice_of_p10():
    d = build_difference_system(builtin_scheme("balanced4"))
    lat = ambiguity_lattice(apply_preprocessor(builtin_preprocessor("p10"), d))
    # P10 A is a subset of the rows of A with the same lattice
    assert lat.exact_volume == 500_000


def test_overflow_is_reported():
    R = RationalMatrix.from_rows([[F(1, 10**7), 0, 0], [0, F(1, 10**7 + 1), 0], [0, 0, F(1, 10**7 + 3)]])
    d = CongruenceSystem(rational=R, gamma_m=1.0)
    with pytest.raises(OverflowError):
        enumerate_lattice_points(d)
