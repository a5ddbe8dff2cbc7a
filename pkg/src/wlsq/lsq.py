"""Weighted least squares through the normal equations.

The design matrix ``L[i, k] = eta_k(x_i)`` is either stored or evaluated on
demand in row blocks.  Reductions over rows always add block contributions
in block order, so results do not depend on the thread count.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import blas

from .basis1d import Basis1D
from .errors import BreakdownError

__all__ = [
    "MATERIALIZE_LIMIT",
    "DesignOperator",
    "LeastSquaresFit",
    "conjugate_gradient",
    "solve_weighted_lsq",
    "apply_Sm",
    "SingularValues",
    "extreme_singular_values",
]

#: Above this many entries the design matrix is not stored.
MATERIALIZE_LIMIT = 10**8


class DesignOperator:
    """The weighted design matrix of a basis at given sample points.

    Parameters
    ----------
    basis : Basis1D or TensorBasis
        Anything with ``evaluate(points) -> (n, m)``, ``size`` and
        ``leading(m)``.
    points : array_like, shape (n,) or (n, d)
    weights : array_like, shape (n,), optional
        ``omega_i = 1 / rho(x_i)``; ones if omitted.
    mode : {"auto", "materialized", "matrix_free"}
        ``auto`` stores ``L`` when ``n * m <= MATERIALIZE_LIMIT``.
    chunk_size : int
        Rows per block in matrix-free mode.
    threads : int
        Worker threads for block evaluation.  Does not change results.
    """

    def __init__(self, basis, points, weights=None, *, mode="auto", chunk_size=4096, threads=1):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.basis = basis
        self.points = pts
        self.n = pts.shape[0]
        self.m = int(basis.size)
        if weights is None:
            weights = np.ones(self.n)
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        if self.weights.shape[0] != self.n:
            raise ValueError("weights and points differ in length")
        if chunk_size < 1 or threads < 1:
            raise ValueError("chunk_size and threads must be >= 1")
        self.chunk_size = int(chunk_size)
        self.threads = int(threads)
        if mode == "auto":
            mode = "materialized" if self.n * self.m <= MATERIALIZE_LIMIT else "matrix_free"
        if mode not in ("materialized", "matrix_free"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self._matrix = None
        self._gram = None

    @classmethod
    def from_samples(cls, basis, samples, **kwargs):
        return cls(basis, samples.points, samples.weights, **kwargs)

    # -- row access ---------------------------------------------------------

    def _blocks(self):
        return [(a, min(a + self.chunk_size, self.n)) for a in range(0, self.n, self.chunk_size)]

    def rows(self, start: int, stop: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[start:stop]
        return self.basis.evaluate(self.points[start:stop])

    def materialize(self) -> np.ndarray:
        """The full ``(n, m)`` matrix ``L`` (cached in materialized mode)."""
        if self._matrix is not None:
            return self._matrix
        mat = np.vstack(self._map(lambda a, b: self.basis.evaluate(self.points[a:b])))
        if self.mode == "materialized":
            self._matrix = mat
        return mat

    def _map(self, fn):
        blocks = self._blocks()
        if self.threads == 1 or len(blocks) == 1:
            return [fn(a, b) for a, b in blocks]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(lambda ab: fn(*ab), blocks))

    def _reduce(self, fn):
        total = None
        for part in self._map(fn):
            total = part if total is None else total + part
        return total

    # -- products ----------------------------------------------------------

    def matvec(self, u):
        """``L u``."""
        u = np.asarray(u, dtype=float)
        if self.mode == "materialized":
            return self.materialize() @ u
        return np.concatenate(self._map(lambda a, b: self.rows(a, b) @ u))

    def rmatvec(self, v):
        """``L^* v``."""
        v = np.asarray(v, dtype=float)
        if self.mode == "materialized":
            return self.materialize().T @ v
        return self._reduce(lambda a, b: self.rows(a, b).T @ v[a:b])

    def weighted_rhs(self, y):
        """``L^* W y``."""
        return self.rmatvec(self.weights * np.asarray(y, dtype=float))

    def normal_matvec(self, u):
        """``L^* W L u``, from the cached Gram matrix when available."""
        u = np.asarray(u, dtype=float)
        if self._gram is not None:
            return self._gram @ u
        if self.mode == "materialized":
            mat = self.materialize()
            return mat.T @ (self.weights * (mat @ u))

        def part(a, b):
            block = self.rows(a, b)
            return block.T @ (self.weights[a:b] * (block @ u))

        return self._reduce(part)

    def normal_system(self, Y=None):
        """Gram matrix ``L^* W L`` and ``L^* W Y`` in a single pass over rows.

        The Gram matrix is cached and reused by :meth:`normal_matvec`.
        ``Y`` may be a vector or an ``(n, k)`` array.
        """
        Ymat = None if Y is None else np.asarray(Y, dtype=float).reshape(self.n, -1)
        need_gram = self._gram is None

        def part(a, b):
            block = self.rows(a, b)
            g = r = None
            if need_gram:
                # symmetric rank-k update fills the upper triangle only
                scaled = block * np.sqrt(self.weights[a:b])[:, None]
                g = blas.dsyrk(1.0, scaled, trans=1)
            if Ymat is not None:
                r = block.T @ (self.weights[a:b, None] * Ymat[a:b])
            return g, r

        parts = self._map(part)
        if need_gram:
            gram = parts[0][0].copy()
            for g, _ in parts[1:]:
                gram += g
            self._gram = np.triu(gram) + np.triu(gram, 1).T
        rhs = None
        if Ymat is not None:
            rhs = parts[0][1].copy()
            for _, r in parts[1:]:
                rhs += r
            if np.ndim(Y) == 1:
                rhs = rhs[:, 0]
        return self._gram, rhs

    def gram(self):
        """Cached ``L^* W L``."""
        return self.normal_system()[0]

    def leading(self, m: int) -> "DesignOperator":
        """Operator for the first ``m`` basis functions, sharing cached data."""
        op = DesignOperator(
            self.basis.leading(m), self.points, self.weights,
            mode=self.mode, chunk_size=self.chunk_size, threads=self.threads,
        )
        if self._matrix is not None:
            op._matrix = self._matrix[:, :m]
        if self._gram is not None:
            op._gram = self._gram[:m, :m]
        return op


@dataclass
class LeastSquaresFit:
    """Result of :func:`solve_weighted_lsq`."""

    coefficients: np.ndarray
    iterations: int
    residual: float
    basis: str = ""
    n: int = 0
    seed: int | None = None
    s_min: float | None = None
    s_max: float | None = None
    converged: bool = False
    history: list = field(default_factory=list, repr=False)

    @property
    def m(self) -> int:
        return len(self.coefficients)

    def to_dict(self) -> dict:
        return {
            "basis": self.basis,
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "coefficients": [float(c) for c in self.coefficients],
            "iterations": self.iterations,
            "residual": self.residual,
            "s_min": self.s_min,
            "s_max": self.s_max,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "LeastSquaresFit":
        coef = np.asarray(data["coefficients"], dtype=float)
        if "m" in data and int(data["m"]) != len(coef):
            raise ValueError("coefficient count does not match m")
        return cls(
            coef, int(data["iterations"]), float(data["residual"]), data.get("basis", ""),
            int(data.get("n", 0)), data.get("seed"), data.get("s_min"), data.get("s_max"),
        )

    @classmethod
    def from_json(cls, text: str) -> "LeastSquaresFit":
        return cls.from_dict(json.loads(text))


def conjugate_gradient(apply, b, iters: int, tol: float = 1e-12, x0=None):
    """Conjugate gradients for a symmetric positive semidefinite system.

    Stops after ``iters`` steps or once ``||r|| <= tol ||b||``.

    Returns
    -------
    x : ndarray
    iterations : int
    residual : float
        Norm of the recursively updated residual.
    history : list of float
        Relative residual after each step.

    Raises
    ------
    BreakdownError
        If a search direction has non-positive curvature.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x) if x0 is not None else b.copy()
    bnorm = float(np.linalg.norm(b))
    rr = float(r @ r)
    history = []
    if bnorm == 0.0 or math.sqrt(rr) <= tol * bnorm:
        return x, 0, math.sqrt(rr), history
    p = r.copy()
    it = 0
    for it in range(1, iters + 1):
        q = apply(p)
        curv = float(p @ q)
        if not curv > 0.0:
            raise BreakdownError(it)
        alpha = rr / curv
        x += alpha * p
        r -= alpha * q
        rr_new = float(r @ r)
        history.append(math.sqrt(rr_new) / bnorm)
        if math.sqrt(rr_new) <= tol * bnorm:
            rr = rr_new
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, it, math.sqrt(rr), history


def solve_weighted_lsq(op: DesignOperator, y, iters: int = 20, *, tol: float = 1e-12,
                       rhs=None, seed=None) -> LeastSquaresFit:
    """Minimise ``sum_i omega_i |(L a)_i - y_i|^2`` by CG on the normal equations.

    Parameters
    ----------
    op : DesignOperator
    y : array_like, shape (n,)
    iters : int
        Iteration budget (20 in the reference experiments).
    tol : float
        Relative residual at which to stop early.
    rhs : array_like, optional
        Precomputed ``L^* W y``.

    Raises
    ------
    ValueError
        If ``y`` has non-finite entries.
    BreakdownError
        On zero curvature.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != op.n:
        raise ValueError("y length does not match the number of samples")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if op.n < op.m:
        warnings.warn(f"underdetermined system: n={op.n} < m={op.m}", RuntimeWarning, stacklevel=2)
    b = op.weighted_rhs(y) if rhs is None else np.asarray(rhs, dtype=float)
    x, it, res, hist = conjugate_gradient(op.normal_matvec, b, iters, tol)
    bnorm = float(np.linalg.norm(b))
    return LeastSquaresFit(
        coefficients=x, iterations=it, residual=res,
        basis=getattr(op.basis, "name", ""), n=op.n, seed=seed,
        converged=bnorm == 0.0 or res <= tol * bnorm, history=hist,
    )


def apply_Sm(fit, basis, x):
    """Evaluate ``sum_k g_k eta_k(x)``; ``fit`` may be a fit or a coefficient vector."""
    coef = fit.coefficients if isinstance(fit, LeastSquaresFit) else np.asarray(fit, dtype=float)
    if isinstance(basis, Basis1D) or getattr(basis, "dimension", 1) == 1:
        x_arr = np.asarray(x, dtype=float)
        vals = basis.evaluate(x_arr.reshape(-1)) @ coef
        return vals.reshape(x_arr.shape) if x_arr.ndim else float(vals[0])
    x_arr = np.asarray(x, dtype=float)
    vals = basis.evaluate(x_arr.reshape(-1, basis.dimension)) @ coef
    return float(vals[0]) if x_arr.ndim == 1 else vals


@dataclass
class SingularValues:
    """Extreme singular values of ``n^{-1/2} W^{1/2} L``; unpacks as a pair."""

    s_min: float
    s_max: float
    converged: bool = True
    method: str = "svd"
    iterations: int = 0

    def __iter__(self):
        yield self.s_min
        yield self.s_max

    @property
    def condition(self) -> float:
        return self.s_max / self.s_min if self.s_min > 0 else math.inf


def _power(apply, m, tol, cap, rng):
    """Largest eigenvalue of a PSD operator; restarts once from a new vector."""
    lam, total = 0.0, 0
    for _attempt in range(2):
        v = rng.standard_normal(m)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(cap):
            total += 1
            w = apply(v)
            lam_new = float(v @ w)
            norm = float(np.linalg.norm(w))
            if norm == 0.0:
                return 0.0, True, total
            v = w / norm
            if abs(lam_new - lam) <= tol * abs(lam_new):
                return lam_new, True, total
            lam = lam_new
    return lam, False, total


def extreme_singular_values(op: DesignOperator, method: str = "auto", *, tol: float = 1e-6,
                            seed: int = 0, max_iter: int | None = None) -> SingularValues:
    """Extreme singular values of ``(1/sqrt(n)) W^{1/2} L``.

    ``method="power"`` runs power iteration on ``G = L^* W L / n`` for the
    largest eigenvalue and on ``lambda_max I - G`` for the smallest, with an
    iteration cap of ``10 m`` and one restart; unconverged results are
    flagged.  This cannot resolve ``s_min`` below about ``1e-8 s_max``.
    ``method="svd"`` computes all singular values densely, which resolves
    condition numbers up to about ``1e16``.  ``auto`` picks ``svd`` when the
    matrix can be stored.
    """
    if op.n < op.m:
        raise ValueError("need n >= m")
    if method == "auto":
        method = "svd" if op.n * op.m <= MATERIALIZE_LIMIT else "power"
    if method == "svd":
        a = op.materialize() * np.sqrt(op.weights / op.n)[:, None]
        if a.shape[0] > 2 * a.shape[1]:
            a = scipy.linalg.qr(a, mode="r", overwrite_a=True, check_finite=False)[0][: a.shape[1]]
        s = scipy.linalg.svdvals(a, overwrite_a=True, check_finite=False)
        return SingularValues(float(s.min()), float(s.max()), True, "svd", 0)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    cap = 10 * op.m if max_iter is None else int(max_iter)
    rng = np.random.default_rng(seed)

    def g(u):
        return op.normal_matvec(u) / op.n

    lam_max, ok_max, it_max = _power(g, op.m, tol, cap, rng)
    shift = lam_max

    def shifted(u):
        return shift * u - g(u)

    mu, ok_min, it_min = _power(shifted, op.m, tol, cap, rng)
    lam_min = max(lam_max - mu, 0.0)
    return SingularValues(
        math.sqrt(lam_min), math.sqrt(max(lam_max, 0.0)), ok_max and ok_min, "power", it_max + it_min
    )
