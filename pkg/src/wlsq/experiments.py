"""End-to-end experiments on the unit interval and the unit cube.

The 1D experiment fits the cut-out B-spline with the first ``m`` functions
of a family from ``n`` uniform samples and reports singular values, the
exact L2 error (via Parseval) split into its clean and noise parts, and the
noisy L2 bound.  The 5D experiment does the same for the H2 tensor basis on
a hyperbolic cross and checks the observed error against the bound.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .basis1d import Basis1D, get_family
from .bounds import BoundInputs, bound_l2_noisy, bound_l2_tensor, sampling_condition
from .lsq import DesignOperator, extreme_singular_values, solve_weighted_lsq
from .sampling import (
    STREAM_NOISE,
    NoiseModel,
    add_noise,
    draw_samples,
    measure_for,
    uniforms,
)
from .tensor import TensorBasis, build_cross
from .testfn import (
    B2CUT_RANGE,
    b2cut,
    b2cut_tensor,
    coefficient_table,
    parseval_error,
    tail_norm_sq,
    tensor_coefficients,
)

__all__ = [
    "NOISE_REFERENCE_M",
    "ExperimentConfig",
    "noise_variance",
    "desk_1d",
    "paper_1d",
    "desk_5d",
    "paper_5d",
    "run_experiment_1d",
    "five_d_trial",
    "run_experiment_5d",
    "loglog_slope",
    "rows_to_csv",
]

#: Range ``max f - min f`` used to scale noise; 5/8 in one and five dimensions.
NOISE_REFERENCE_M = float(B2CUT_RANGE)

DESK_MATERIALIZED_CAP = 2 * 10**8


def noise_variance(level: float, reading: str = "std", M: float = NOISE_REFERENCE_M) -> float:
    """Variance for noise quoted as a fraction of the range ``M``.

    ``reading="std"`` treats ``level * M`` as the standard deviation,
    ``reading="variance"`` as the variance.
    """
    if reading == "std":
        return (level * M) ** 2
    if reading == "variance":
        return level * M
    raise ValueError("reading must be 'std' or 'variance'")


@dataclass
class ExperimentConfig:
    """Settings for :func:`run_experiment_1d` and :func:`run_experiment_5d`.

    ``noise_bound`` defaults to ``6 sigma`` for truncated Gaussian noise.
    ``christoffel`` selects ``N(V_m)`` in the 5D bound: ``"paper"`` uses
    ``6 m``, ``"sup"`` the product of 1D sup-norm bounds.
    """

    family: str = "h2"
    d: int = 1
    n: int = 10_000
    m_grid: tuple = (16, 32, 64, 128, 256, 512)
    noise_var: float = 0.0
    noise_bound: float | None = None
    seed: int = 0
    t: float = 1.0
    iters: int = 20
    preset: str = "desk"
    out: str | None = None
    threads: int = 1
    sv_method: str = "auto"
    christoffel: str = "paper"
    chunk_size: int = 4096

    def __post_init__(self):
        self.family = get_family(self.family).name
        self.m_grid = tuple(sorted(int(m) for m in self.m_grid))
        if self.d < 1 or self.n < 1 or not self.m_grid or self.m_grid[0] < 1:
            raise ValueError("d, n and all m must be >= 1")
        if self.noise_var < 0 or (self.noise_bound is not None and self.noise_bound < 0):
            raise ValueError("noise parameters must be non-negative")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.christoffel not in ("paper", "sup"):
            raise ValueError("christoffel must be 'paper' or 'sup'")
        entries = self.n * self.m_grid[-1]
        if self.preset == "desk" and entries > DESK_MATERIALIZED_CAP:
            if self.d == 1:
                raise ValueError("desk preset caps n * m at 2e8 stored entries")
            warnings.warn(f"matrix-free run over {entries:.2e} entries; expect a long wall-clock time",
                          RuntimeWarning, stacklevel=3)

    @property
    def noise_model(self) -> NoiseModel:
        return NoiseModel.truncated_gaussian(self.noise_var, self.noise_bound)

    def to_dict(self) -> dict:
        return asdict(self)


def desk_1d(family: str = "h2", **kw) -> ExperimentConfig:
    """n = 1e4, m from 16 to 512, noise with standard deviation 0.1% of M."""
    base = dict(family=family, n=10_000, m_grid=(16, 32, 64, 128, 256, 512),
                noise_var=noise_variance(0.001), t=1.0, preset="desk")
    base.update(kw)
    return ExperimentConfig(**base)


def paper_1d(family: str = "h2", **kw) -> ExperimentConfig:
    """n = 1e4 with m up to 1000."""
    base = dict(family=family, n=10_000, m_grid=(10, 20, 50, 100, 200, 500, 1000),
                noise_var=noise_variance(0.001), t=1.0, preset="paper")
    base.update(kw)
    return ExperimentConfig(**base)


def desk_5d(**kw) -> ExperimentConfig:
    """H2 tensor basis, d = 5, n = 1e5, m in {64, 256, 1024}, t = 6."""
    base = dict(family="h2", d=5, n=100_000, m_grid=(64, 256, 1024),
                noise_var=0.0, t=6.0, preset="desk")
    base.update(kw)
    return ExperimentConfig(**base)


def paper_5d(**kw) -> ExperimentConfig:
    """d = 5, n = 1e6, m up to 1e4.  Far beyond desk runtime."""
    base = dict(family="h2", d=5, n=1_000_000, m_grid=(100, 300, 1000, 3000, 10_000),
                noise_var=0.0, t=6.0, preset="paper")
    base.update(kw)
    return ExperimentConfig(**base)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def _sup_error(family, coef, grid: int = 20001) -> float:
    """``max |f - P_m f|`` on a uniform grid (a lower estimate of the sup)."""
    x = np.linspace(0.0, 1.0, grid)
    fam = get_family(family)
    m = len(coef)
    worst = 0.0
    for a in range(0, grid, 4096):
        xs = x[a:a + 4096]
        r = b2cut(xs) - Basis1D(fam, m).evaluate(xs) @ coef
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def run_experiment_1d(config: ExperimentConfig, *, with_sup_error: bool = True) -> list[dict]:
    """One row per ``m``: singular values, split errors and the L2 bound.

    Columns: ``m, s_min, s_max, err_total, err_clean, err_noise, bound``
    plus ``condition, condition_ok, iterations``.  ``err_noise`` is
    ``||S_m eps||^2``, ``err_clean`` is ``||f - S_m f||^2``.
    """
    if config.d != 1:
        raise ValueError("run_experiment_1d needs d = 1")
    fam = get_family(config.family)
    measure = measure_for(fam)
    m_max = config.m_grid[-1]
    samples = draw_samples(measure, config.n, 1, config.seed).with_values(lambda p: b2cut(p[:, 0]))
    model = config.noise_model
    samples = add_noise(samples, model)
    table = coefficient_table(fam, m_max, with_tail=False)
    full = DesignOperator(Basis1D(fam, m_max), samples.points, samples.weights,
                          threads=config.threads, chunk_size=config.chunk_size)
    rows = []
    for m in config.m_grid:
        op = full.leading(m)
        sv = extreme_singular_values(op, config.sv_method, seed=config.seed)
        coef = table.coefficients[:m]
        tail = tail_norm_sq(fam, coef)
        fit_y = solve_weighted_lsq(op, samples.y, config.iters)
        fit_f = solve_weighted_lsq(op, samples.clean_values, config.iters)
        noise = samples.noise
        if np.any(noise):
            fit_e = solve_weighted_lsq(op, noise, config.iters).coefficients
        else:
            fit_e = np.zeros(m)
        err_total = parseval_error(fit_y, table.leading(m), tail).total
        err_clean = parseval_error(fit_f, table.leading(m), tail).total
        err_noise = float(np.sum(fit_e**2))
        basis = op.basis
        sup_ratio = basis.christoffel_sup() * measure.sup_inv_density
        e_inf = _sup_error(fam, coef) if with_sup_error else math.sqrt(sup_ratio * tail)
        inputs = BoundInputs(
            m=m, n=config.n, t=config.t, sup_ratio=sup_ratio,
            sup_inv_density=measure.sup_inv_density, e2=math.sqrt(max(tail, 0.0)),
            e_inf=e_inf, sigma2=model.variance, B=model.bound,
        )
        rows.append({
            "m": m,
            "s_min": sv.s_min,
            "s_max": sv.s_max,
            "err_total": err_total,
            "err_clean": err_clean,
            "err_noise": err_noise,
            "bound": bound_l2_noisy(inputs),
            "condition": sv.condition,
            "condition_ok": sampling_condition(m, config.n, config.t, sup_ratio),
            "iterations": fit_y.iterations,
        })
    return rows


def five_d_trial(seed: int, *, n: int = 100_000, m_grid=(64, 256, 1024), noise_vars=(0.0,),
                 t: float = 6.0, iters: int = 20, christoffel: str = "paper",
                 chunk_size: int = 4096, threads: int = 1, cross=None, table=None) -> list[dict]:
    """One seed of the 5D H2 experiment for several noise variances.

    The Gram matrix and all right-hand sides come from a single pass over
    the samples; smaller crosses are prefixes of the largest, so their
    systems are leading blocks.  Noise for every variance is generated from
    the same uniforms.
    """
    m_grid = tuple(sorted(int(m) for m in m_grid))
    d = 5
    if cross is None:
        cross = build_cross(2, d, m=m_grid[-1])
    if table is None:
        table = coefficient_table("h2", int(cross.kmax.max()) + 1, with_tail=False)
    basis = TensorBasis("h2", cross)
    samples = draw_samples("uniform", n, d, seed)
    clean = b2cut_tensor(samples.points)
    u = uniforms(seed, STREAM_NOISE, n, 1)[:, 0]
    models = [NoiseModel.truncated_gaussian(v) for v in noise_vars]
    noises = [mdl.sample(u) for mdl in models]
    Y = np.column_stack([clean] + noises)
    op = DesignOperator(basis, samples.points, samples.weights, mode="matrix_free",
                        chunk_size=chunk_size, threads=threads)
    _, rhs_all = op.normal_system(Y)
    coefs = tensor_coefficients(table, cross.indices)
    rows = []
    for m in m_grid:
        sub = op.leading(m)
        tab = coefs.leading(m)
        e2_sq = tab.truncation_sq()
        n_sup = 6.0 * m if christoffel == "paper" else sub.basis.christoffel_sup()
        for mdl, k in zip(models, range(1, len(models) + 1)):
            rhs = rhs_all[:m, 0] + rhs_all[:m, k]
            fit = solve_weighted_lsq(sub, clean + noises[k - 1], iters, rhs=rhs)
            err = parseval_error(fit, tab).total
            bound = bound_l2_tensor(math.sqrt(max(e2_sq, 0.0)), m, n, n_sup, mdl.variance, mdl.bound, t)
            rows.append({
                "seed": seed,
                "sigma2": mdl.variance,
                "m": m,
                "err_total": err,
                "truncation": e2_sq,
                "bound": bound,
                "condition_ok": sampling_condition(m, n, t, n_sup),
                "iterations": fit.iterations,
            })
    return rows


def run_experiment_5d(config: ExperimentConfig, seeds=None) -> list[dict]:
    """Rows ``{seed, sigma2, m, err_total, bound, ...}`` for each seed."""
    if config.d != 5 or get_family(config.family).name != "h2":
        raise ValueError("the 5D experiment uses the H2 tensor basis with d = 5")
    if config.preset == "paper":
        warnings.warn("paper-scale 5D run: expect hours of runtime", RuntimeWarning, stacklevel=2)
    seeds = [config.seed] if seeds is None else list(seeds)
    cross = build_cross(2, 5, m=config.m_grid[-1])
    table = coefficient_table("h2", int(cross.kmax.max()) + 1, with_tail=False)
    rows = []
    for s in seeds:
        rows += five_d_trial(
            s, n=config.n, m_grid=config.m_grid, noise_vars=(config.noise_var,), t=config.t,
            iters=config.iters, christoffel=config.christoffel, chunk_size=config.chunk_size,
            threads=config.threads, cross=cross, table=table,
        )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
