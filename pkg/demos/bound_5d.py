"""Five-dimensional H2 approximation against the high-probability bound.

Draws a few independent sample sets (n = 10^5 by default) and reports the
squared L2 error next to the evaluated bound, for noiseless data and for
truncated Gaussian noise with variance 0.01 M.

    python demos/bound_5d.py [--seeds 3] [--n 100000]
"""

import argparse

from wlsq import build_cross, coefficient_table
from wlsq.bounds import max_admissible_m
from wlsq.experiments import five_d_trial

M = 5 / 8

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--seeds", type=int, default=3)
parser.add_argument("--n", type=int, default=100_000)
parser.add_argument("--t", type=float, default=6.0)
args = parser.parse_args()

m_grid = (64, 256, 1024)
cross = build_cross(2, 5, m=m_grid[-1])
table = coefficient_table("h2", int(cross.kmax.max()) + 1, with_tail=False)
print(f"largest m meeting the sampling condition at n={args.n}, t={args.t}: "
      f"{max_admissible_m(args.n, args.t, lambda m: 6 * m)}")
print(f"{'seed':>4} {'sigma2':>8} {'m':>5} {'error^2':>10} {'bound':>10} {'cond ok':>7}")
for seed in range(args.seeds):
    for r in five_d_trial(seed, n=args.n, m_grid=m_grid, noise_vars=(0.0, 0.01 * M), t=args.t,
                          cross=cross, table=table):
        print(f"{seed:4d} {r['sigma2']:8.4f} {r['m']:5d} {r['err_total']:10.3e} {r['bound']:10.3e} "
              f"{str(r['condition_ok']):>7}")
