"""Exit criteria, each run at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line through the ``record`` fixture;
the lines are repeated in the terminal summary.  Criteria that cannot be
met are marked ``xfail(strict=True)`` so they still execute and must keep
failing; the analysis lives in the decisions ledger next to the package.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from test_basis1d import gauss_gram
from wlsq.basis1d import (
    CHEBYSHEV, H1, H2, LEGENDRE, Basis1D, christoffel, eval_basis, eval_h2_stable, shifted_legendre,
)
from wlsq.basis1d import _solve_roots
from wlsq.bounds import (
    BoundInputs,
    bernstein_tail,
    bound_l2_noisy,
    bound_linf,
    hanson_wright_level,
    sampling_condition,
)
from wlsq.experiments import desk_1d, five_d_trial, loglog_slope, run_experiment_1d
from wlsq.lsq import DesignOperator, extreme_singular_values, solve_weighted_lsq
from wlsq.sampling import STREAM_NOISE, draw_samples, measure_for, uniforms
from wlsq.tensor import build_cross
from wlsq.testfn import B2CUT_RANGE, coefficient_table

pytestmark = pytest.mark.acceptance

M = float(B2CUT_RANGE)
POLY_RATE = pytest.mark.xfail(strict=True, reason="polynomial fits lose stability for m >= 256 at n = 1e4")
POLY_NOISE = pytest.mark.xfail(strict=True, reason="unstable polynomial fits amplify noise superlinearly for m >= 256")


def test_c01_root_solver(record):
    ks = np.arange(2, 201)
    t0 = time.perf_counter()
    t = np.array([float(_solve_roots([k], 1e-12)[0]) for k in ks])
    elapsed = time.perf_counter() - t0
    residual = np.abs(np.cos(t) - 1 / np.cosh(t))
    asym = np.array([float((2 * k - 1) * oracles.mp.pi / 2) for k in ks])
    # the envelope drops below one ulp from k = 13 on; the computed root can
    # only be the nearest double to the true one
    env = np.pi * np.exp(-(ks - 1) * np.pi) + np.spacing(t)
    ok = residual.max() <= 1e-12 and np.all(np.abs(t - asym) <= env) and elapsed < 1.0
    record("C1 root solver", ok,
           f"max residual {residual.max():.1e}, envelope ok {np.all(np.abs(t - asym) <= env)}, {elapsed:.2f}s")
    assert ok


def test_c02_h2_stable_evaluation(record):
    x = np.linspace(0, 1, 1001)
    worst_ratio, worst_rel, elapsed = 0.0, 0.0, 0.0
    for k in range(10, 26):
        ref = np.array(oracles.h2_values(k, x))
        t0 = time.perf_counter()
        val = eval_basis(H2, k, x) if k >= H2.h2_switch_index else eval_h2_stable(k, x)
        elapsed += time.perf_counter() - t0
        worst_ratio = max(worst_ratio, np.max(np.abs(val - ref)) / (16 * math.exp(-math.pi * (k - 1) / 2)))
    for k in (27, 28, 31, 40, 64, 100, 150, 200):
        ref = np.array(oracles.h2_values(k, x))
        t0 = time.perf_counter()
        val = eval_basis(H2, k, x)
        elapsed += time.perf_counter() - t0
        worst_rel = max(worst_rel, np.max(np.abs(val - ref)) / np.max(np.abs(ref)))
    ok = worst_ratio <= 1 and worst_rel <= 1e-15 and elapsed < 10
    record("C2 H2 stable evaluation", ok,
           f"max err/envelope {worst_ratio:.2e} (k=10..25), max rel err {worst_rel:.1e} (k>=27), {elapsed:.2f}s")
    assert ok


def test_c03_orthonormality(record):
    t0 = time.perf_counter()
    devs = {f.name: float(np.max(np.abs(gauss_gram(f, 64) - np.eye(64)))) for f in (LEGENDRE, CHEBYSHEV, H1, H2)}
    elapsed = time.perf_counter() - t0
    ok = max(devs.values()) <= 1e-8 and elapsed < 30
    record("C3 orthonormality m=64", ok, ", ".join(f"{k} {v:.1e}" for k, v in devs.items()) + f", {elapsed:.2f}s")
    assert ok


def test_c04_christoffel_identity(record):
    exact = all(
        np.sum(shifted_legendre(np.array([Fraction(0)], dtype=object), m)[0] ** 2
               * np.array([2 * k + 1 for k in range(m)], dtype=object)) == m * m
        and oracles.christoffel_legendre_exact(m, Fraction(0)) == m * m
        for m in range(1, 21)
    )
    rel = max(abs(christoffel(LEGENDRE, m, 0.0) / (m * m) - 1) for m in range(1, 201))
    ok = exact and rel <= 1e-9
    record("C4 Christoffel identity", ok, f"exact m<=20 {exact}, float rel err {rel:.1e} (m<=200)")
    assert ok


def test_c05_cross_counts(record):
    t0 = time.perf_counter()
    c1, c2 = build_cross(1, 3, 5.3e-5), build_cross(2, 3, 8.3e-8)
    elapsed = time.perf_counter() - t0
    same = c1.as_set() == oracles.brute_force_cross(1, 3, 5.3e-5) and c2.as_set() == oracles.brute_force_cross(2, 3, 8.3e-8)
    ok = abs(len(c1) - 254) <= 2 and abs(len(c2) - 254) <= 2 and same and elapsed < 5
    record("C5 hyperbolic cross counts", ok, f"{len(c1)} and {len(c2)}, brute force equal {same}, {elapsed:.2f}s")
    assert ok


def test_c06_mz_stability(record):
    m, t = 16, 2.0
    sup_ratio = Basis1D(H1, m).christoffel_sup()
    n = math.ceil(10 * sup_ratio * (math.log(m) + t))
    assert sampling_condition(m, n, t, sup_ratio)
    t0 = time.perf_counter()
    bad = 0
    for seed in range(500):
        s = draw_samples("uniform", n, 1, seed)
        sv = extreme_singular_values(DesignOperator(Basis1D(H1, m), s.points), "svd")
        bad += sv.s_min**2 < 0.5 or sv.s_max**2 > 1.5
    elapsed = time.perf_counter() - t0
    frac = bad / 500
    ok = frac <= 2 * math.exp(-2) and elapsed < 120
    record("C6 MZ stability", ok, f"n={n}, violation fraction {frac:.3f} <= {2 * math.exp(-2):.3f}, {elapsed:.1f}s")
    assert ok


def test_c07_conditioning_contrast(record):
    t0 = time.perf_counter()
    cond = {}
    for fam in (H1, H2, LEGENDRE, CHEBYSHEV):
        s = draw_samples(measure_for(fam), 10_000, 1, 0)
        op = DesignOperator(Basis1D(fam, 1000), s.points, s.weights)
        cond[fam.name] = extreme_singular_values(op, "svd").condition
    elapsed = time.perf_counter() - t0
    ok = (cond["h1"] <= 14 and cond["h2"] <= 14 and cond["legendre"] >= 1e10
          and cond["chebyshev"] >= 1e10 and elapsed < 300)
    record("C7 conditioning contrast", ok, ", ".join(f"{k} {v:.3g}" for k, v in cond.items()) + f", {elapsed:.0f}s")
    assert ok


# -- criteria 8 and 9 share one desk-scale run per family -----------------------

_RUNS: dict = {}
NOISE_SEEDS = range(10)


def _desk_run(family):
    if family not in _RUNS:
        t0 = time.perf_counter()
        cfg = desk_1d(family)
        rows = run_experiment_1d(cfg)
        noise = np.array([[r["err_noise"] for r in rows]])
        # mean noise curve over further seeds; only the noise fit is needed
        fam = cfg.family
        extra = []
        for seed in NOISE_SEEDS[1:]:
            s = draw_samples(measure_for(fam), cfg.n, 1, seed)
            eps = cfg.noise_model.sample(uniforms(seed, STREAM_NOISE, cfg.n, 1)[:, 0])
            full = DesignOperator(Basis1D(fam, cfg.m_grid[-1]), s.points, s.weights)
            extra.append([float(np.sum(solve_weighted_lsq(full.leading(m), eps, cfg.iters).coefficients ** 2))
                          for m in cfg.m_grid])
        _RUNS[family] = (cfg, rows, np.vstack([noise] + extra), time.perf_counter() - t0)
    return _RUNS[family]


RATE_WINDOWS = {"h1": (-1.8, -1.2), "h2": (-2.8, -2.2), "legendre": (-2.8, -2.2), "chebyshev": (-2.8, -2.2)}


@pytest.mark.parametrize("family", ["h1", "h2", pytest.param("legendre", marks=POLY_RATE),
                                    pytest.param("chebyshev", marks=POLY_RATE)])
def test_c08_rate_reproduction(record, family):
    cfg, rows, _, elapsed = _desk_run(family)
    m = [r["m"] for r in rows]
    err = [r["err_clean"] for r in rows]
    slope = loglog_slope(m, np.sqrt(err))
    slope_sq = loglog_slope(m, err)
    lo, hi = RATE_WINDOWS[family]
    ok = lo <= slope <= hi and elapsed < 600
    record(f"C8 rate [{family}]", ok,
           f"slope of norm {slope:.2f} in [{lo}, {hi}], slope of square {slope_sq:.2f}, {elapsed:.0f}s")
    assert ok


@pytest.mark.parametrize("family", ["h1", "h2", pytest.param("legendre", marks=POLY_NOISE),
                                    pytest.param("chebyshev", marks=POLY_NOISE)])
def test_c09_noise_growth(record, family):
    cfg, rows, noise, _ = _desk_run(family)
    m = [r["m"] for r in rows]
    slope_mean = loglog_slope(m, noise.mean(axis=0))
    slope_seed0 = loglog_slope(m, noise[0])
    ok = 0.8 <= slope_mean <= 1.2
    record(f"C9 noise growth [{family}]", ok,
           f"slope of seed-mean {slope_mean:.2f} in [0.8, 1.2] ({len(noise)} seeds), seed 0 alone {slope_seed0:.2f}")
    assert ok


@pytest.mark.slow
def test_c10_bound_validity(record):
    t0 = time.perf_counter()
    sig = (0.0, 0.01 * M)
    cross = build_cross(2, 5, m=1024)
    table = coefficient_table("h2", int(cross.kmax.max()) + 1, with_tail=False)
    exceed = {s: 0 for s in sig}
    for seed in range(100):
        rows = five_d_trial(seed, n=100_000, m_grid=(64, 256, 1024), noise_vars=sig, t=6.0,
                            cross=cross, table=table)
        for s in sig:
            exceed[s] += any(r["err_total"] > r["bound"] for r in rows if r["sigma2"] == s)
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1 for v in exceed.values()) and elapsed < 1800
    record("C10 bound validity", ok,
           f"runs exceeding bound: sigma2=0 {exceed[0.0]}/100, sigma2=0.01M {exceed[sig[1]]}/100, {elapsed:.0f}s")
    assert ok


def test_c11_formula_evaluators(record):
    rng = np.random.default_rng(2024)
    worst = 0.0
    spent = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 5000))
        n = int(rng.integers(1, 10**7))
        t, e2, einf = rng.uniform(0, 20), rng.uniform(0, 1), rng.uniform(0, 5)
        sigma2, B, inv = rng.uniform(0, 1), rng.uniform(0, 3), rng.uniform(1, 50)
        N = rng.uniform(1, 1e5)
        op_norm, frob = rng.uniform(0, 10), rng.uniform(0, 100)
        p = BoundInputs(m=m, n=n, t=t, sup_ratio=N, sup_inv_density=inv, e2=e2, e_inf=einf,
                        sigma2=sigma2, B=B, N_sup=N)
        t0 = time.perf_counter()
        got = (bound_l2_noisy(p), bound_linf(p), bernstein_tail(n, t, sigma2, B),
               hanson_wright_level(op_norm, frob, t, sigma2, B))
        spent += time.perf_counter() - t0
        ref = (oracles.l2_noisy(m, n, t, e2, einf, sigma2, B, inv),
               oracles.linf(m, n, t, e2, einf, sigma2, B, inv, N),
               oracles.bernstein(n, t, sigma2, B),
               oracles.hanson_wright(op_norm, frob, t, sigma2, B))
        for a, b in zip(got, ref):
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    ok = worst <= 1e-12 and spent < 1.0
    record("C11 formula evaluators", ok, f"max rel diff {worst:.1e} over 1000 tuples, {spent:.3f}s")
    assert ok
