"""Tour of the Sobolev eigenbases and hyperbolic crosses.

Prints the first beam-equation roots, shows that the naive H2 formula breaks
down in double precision while the stable one does not, and builds the two
254-index crosses in three dimensions.

    python demos/eigenbasis_tour.py
"""

import numpy as np

from wlsq import H2, build_cross, eval_h2_exact, eval_h2_stable, solve_tk

print("roots of cos t = sech t")
for k in range(2, 8):
    t = solve_tk(k)
    print(f"  k={k}  t_k={t:.15f}  t_k - (2k-1)pi/2 = {t - (2 * k - 1) * np.pi / 2:+.3e}")

x = np.linspace(0.0, 1.0, 2001)
print("\nH2 basis: exact closed form versus stable form (max abs difference)")
for k in (5, 10, 15, 20, 25):
    diff = np.max(np.abs(eval_h2_exact(k, x) - eval_h2_stable(k, x)))
    print(f"  k={k:2d}  {diff:.2e}")
print(f"  the library switches to the stable form at k = {H2.h2_switch_index}")

for s, R in ((1, 5.3e-5), (2, 8.3e-8)):
    cross = build_cross(s, 3, R)
    print(f"\ncross s={s}, d=3, R={R:g}: {len(cross)} indices, kmax per coordinate {cross.kmax.tolist()}")
    print("  first entries:", [tuple(int(v) for v in row) for row in cross.indices[:6]])
