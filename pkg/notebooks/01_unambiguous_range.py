"""
Unambiguous velocity ranges of multipoint encodings
===================================================

Walks through the ambiguity lattice of a few encodings: the search box,
the enumerated lattice points, the reduced basis and its volume.
"""
# %%
from fractions import Fraction
import math

import numpy as np

from multivenc.encoding import CongruenceSystem, build_difference_system, builtin_scheme
from multivenc.exact_arith import RationalMatrix
from multivenc.lattice import ambiguity_lattice, centered_parallelepiped, compute_search_box, enumerate_lattice_points

# %%
# A toy system first: three congruences with periods 1, 2 and 3 along each
# axis.  With gamma_m = 2 pi the normalized and velocity coordinates agree.
R = RationalMatrix.from_rows([[1, 0, 0], [0, Fraction(1, 2), 0], [0, 0, Fraction(1, 3)]])
toy = CongruenceSystem(rational=R, gamma_m=2 * math.pi, gamma_m_over_pi=Fraction(2))
print("search box half extents:", compute_search_box(toy).half_extents)
pts = enumerate_lattice_points(toy)
print(len(pts), "lattice points in the box")
lat = ambiguity_lattice(toy)
print("basis (columns):\n", lat.basis)
print("volume", lat.exact_volume, "condition number", lat.condition_number)

# %%
# The balanced 4-point encoding puts the first moments on a regular
# tetrahedron.  Processing all six phase differences jointly gives a cubic
# search box of half width 100 and a body-centred lattice.
d4 = build_difference_system(builtin_scheme("balanced4"))
print(d4.rational)
lat4 = ambiguity_lattice(d4)
print("balanced4 volume:", lat4.exact_volume)
print("basis vectors:", [tuple(lat4.basis[:, i]) for i in range(3)])

# %%
# Adding the origin as a fifth point adds four more equations and enlarges
# the range.
lat5 = ambiguity_lattice(build_difference_system(builtin_scheme("balanced5")))
print("balanced5 volume:", lat5.exact_volume, "= %s x balanced4" % (lat5.exact_volume / lat4.exact_volume))

# %%
# Moving a single moment off the tetrahedron changes the lattice.  The
# volumes are exact rationals, so the gains here are exact too.
for name, ref in (("perturbed4", lat4), ("perturbed5", lat5)):
    lp = ambiguity_lattice(build_difference_system(builtin_scheme(name)))
    print(f"{name}: volume {lp.exact_volume} ({float(lp.exact_volume):.1f}), gain {lp.exact_volume / ref.exact_volume}")

# %%
# The origin-centred cell is the region the estimator reports into.  Its
# eight corners:
cell = centered_parallelepiped(lat4)
print(np.round(cell.vertices(), 6))

# %%
# Scaling the moments: doubling gamma_m halves every basis vector, so the
# volume drops by a factor of eight.
lat4x2 = ambiguity_lattice(build_difference_system(builtin_scheme("balanced4", gamma_m_over_pi=Fraction(2, 100))))
print(lat4.exact_volume / lat4x2.exact_volume)
