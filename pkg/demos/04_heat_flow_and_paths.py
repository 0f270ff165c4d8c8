"""
Heat flow, Green kernels, and the jump process
==============================================

The operator generates a Feller semigroup; its kernel has an explicit
spectral synthesis.  This script compares the kernel conventions, checks
the semigroup laws, and matches the kernel row against a direct
continuous-time simulation of the jump process.
"""

import numpy as np

from padic_spectra import (
    CurveSpec,
    build_elliptic_model,
    green_function,
    heat_kernel,
    sample_paths,
    semigroup_apply,
)

model = build_elliptic_model(CurveSpec(13, -1, 0), 2)
mu = float(model.cell_measure)
print(model.name, "-", model.num_cells, "cells")

# Three conventions for the constant/top-ball part of the kernel:
#   default        exact cross-fiber evolution, rows integrate to 1
#   wavelet-only   constant 1/mu(X) + wavelets, unit mass, no mixing
#   bare constant  the un-normalized closed form, rows integrate to mu(X)
t = 0.5
K_full = heat_kernel(model, 2, t)
K_wav = heat_kernel(model, 2, t, complement=False)
K_bare = heat_kernel(model, 2, t, paper_constant_term=True)
for name, K in (("default", K_full), ("wavelet-only", K_wav), ("bare 1", K_bare)):
    mass = (K * mu).sum(axis=1)
    print(f"  {name:13s} row mass in [{mass.min():.6f}, {mass.max():.6f}]")

# Semigroup composition: K(0.3) then K(0.4) equals K(0.7).
K3, K4, K7 = (heat_kernel(model, 2, u) for u in (0.3, 0.4, 0.7))
print("semigroup defect:", np.abs((K3 * mu) @ K4 - K7).max())

# semigroup_apply evolves a function without forming the kernel; the total
# mass of a point mass is conserved while its profile spreads out.
h = np.zeros(model.num_cells)
h[0] = 1.0
evolved = semigroup_apply(model, 2, t, h)
print("point-mass integral before and after:", h.sum() * mu, evolved.sum() * mu)

# The Green kernel inverts the operator off constants; cross-fiber values
# are finite sums and do not move when the level is refined.
G = green_function(model, 2)
print("Green row integral (should vanish):", np.abs((G * mu).sum(axis=1)).max())
G3 = green_function(build_elliptic_model(CurveSpec(13, -1, 0), 3), 2)
print("cross-fiber Green drift level 2 -> 3:",
      abs(G[0, 13] - G3[0, 13 * 13]))

# Finally the probabilistic picture: 20000 paths of the jump chain from
# cell 0, compared with the heat-kernel row as a law on cells.
res = sample_paths(model, 2, t, 20_000, seed=7, start=0)
law = K_full[0] * mu
tv = 0.5 * np.abs(res.empirical_law - law).sum()
print()
print("paths sampled:", res.num_paths, " mean jumps:", np.mean(res.jump_counts))
print("total variation empirical vs kernel row:", round(tv, 4))
print("mass retained in the starting fiber:",
      round(res.empirical_law[:13].sum(), 4),
      " kernel predicts:", round(law[:13].sum(), 4))
assert tv < 0.05
