"""One-dimensional comparison of the four bases on the B2-spline cut.

For each family the desk-scale experiment (n = 10^4, 20 CG iterations) is
run once.  The table shows the noiseless error, the noise contribution and
the conditioning of the weighted design matrix; the fitted log-log slopes
come last.

    python demos/compare_1d.py [--n 10000] [--seed 0]
"""

import argparse

import numpy as np

from wlsq.experiments import desk_1d, loglog_slope, run_experiment_1d

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--n", type=int, default=10_000)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

for family in ("h1", "h2", "legendre", "chebyshev"):
    cfg = desk_1d(family, n=args.n, seed=args.seed)
    rows = run_experiment_1d(cfg, with_sup_error=False)
    print(f"\n{family}  (n={cfg.n}, noise variance {cfg.noise_var:.3g})")
    print(f"  {'m':>5} {'clean err^2':>12} {'noise err^2':>12} {'condition':>10}")
    for r in rows:
        print(f"  {r['m']:5d} {r['err_clean']:12.3e} {r['err_noise']:12.3e} {r['s_max'] / r['s_min']:10.3g}")
    m = [r["m"] for r in rows]
    print(f"  slope of ||f - S_m f||: {loglog_slope(m, np.sqrt([r['err_clean'] for r in rows])):+.2f}"
          f"   slope of ||S_m eps||^2: {loglog_slope(m, [r['err_noise'] for r in rows]):+.2f}")
