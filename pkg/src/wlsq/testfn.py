"""Test functions, their expansion coefficients and exact L2 errors.

The reference function is the cut-out quadratic B-spline

    f(x) = -x^2 + 3/4              on [0, 1/2],
    f(x) = x^2/2 - 3x/2 + 9/8      on [1/2, 1],

which is C^1 with a jump in the second derivative at 1/2, so it lies in
H^{5/2 - eps}.  Its d-variate version is the tensor product.

Because the bases are orthonormal, the L2 error of a fitted expansion
``g = sum_k g_k eta_k`` follows from coefficients alone::

    ||f - g||^2 = ||f - P_m f||^2 + sum_{k<m} (f_k - g_k)^2 .
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .basis1d import FamilyId, eval_all, get_family
from .errors import QuadratureError

__all__ = [
    "B2CUT_INTEGRAL",
    "B2CUT_NORM_SQ",
    "B2CUT_RANGE",
    "b2cut",
    "b2cut_tensor",
    "TestFunction",
    "CoefficientTable",
    "coefficient_table",
    "tensor_coefficients",
    "integrate",
    "tail_norm_sq",
    "norm_sq",
    "ParsevalError",
    "parseval_error",
    "save_coefficients",
]

B2CUT_INTEGRAL = Fraction(23, 48)
B2CUT_NORM_SQ = Fraction(35, 128)
B2CUT_RANGE = Fraction(5, 8)


def b2cut(x):
    """Cut-out quadratic B-spline on ``[0, 1]``; vectorised."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("b2cut is defined on [0, 1]")
    left = -x * x + 0.75
    right = 0.5 * x * x - 1.5 * x + 1.125
    out = np.where(x <= 0.5, left, right)
    return out[()] if out.ndim == 0 else out


def b2cut_tensor(points):
    """``prod_j b2cut(x_j)`` for points of shape ``(n, d)`` or ``(d,)``."""
    pts = np.asarray(points, dtype=float)
    return np.prod(b2cut(pts), axis=-1)


@dataclass(frozen=True)
class TestFunction:
    """A test function on ``[0, 1]^d``.

    Attributes
    ----------
    kind : {"b2cut", "b2cut_tensor", "custom"}
    d : int
    func : callable
        Maps points ``(n, d)`` to values ``(n,)``.
    factor : callable or None
        The 1D factor of a tensor-product function, used for coefficients.
    """

    __test__ = False

    kind: str
    d: int = 1
    func: Callable = field(default=None, repr=False)
    factor: Callable | None = field(default=None, repr=False)

    @classmethod
    def b2cut(cls, d: int = 1) -> "TestFunction":
        if d < 1:
            raise ValueError("d must be >= 1")
        kind = "b2cut" if d == 1 else "b2cut_tensor"
        return cls(kind, d, b2cut_tensor, b2cut)

    @classmethod
    def from_callable(cls, func, d: int = 1) -> "TestFunction":
        """Wrap an arbitrary function; no coefficient pipeline is attached."""
        return cls("custom", d, func, None)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1 and self.d == 1:
            pts = pts[:, None]
        return self.func(pts)

    @property
    def norm_sq(self) -> float:
        """``||f||^2`` in ``L2([0,1]^d, dx)``."""
        if self.kind == "custom":
            raise NotImplementedError("no closed-form norm for custom functions")
        return float(B2CUT_NORM_SQ) ** self.d

    @property
    def range(self) -> float:
        """``max f - min f`` over the cube; ``5/8`` for ``d = 1``."""
        if self.kind == "custom":
            raise NotImplementedError
        return 0.75**self.d - 0.125**self.d


# ---------------------------------------------------------------------------
# quadrature


def _halves(family):
    """Integration pieces as (a, b, x_of_u, jacobian) split at x = 1/2."""
    if get_family(family).id is FamilyId.CHEBYSHEV:
        # x = (1 - cos th) / 2 turns dmu into dth / 2; x = 1/2 at th = pi/2
        def x_of(th):
            return 0.5 * (1.0 - np.cos(th))

        return [(0.0, math.pi / 2, x_of, 0.5), (math.pi / 2, math.pi, x_of, 0.5)]

    def ident(x):
        return x

    return [(0.0, 0.5, ident, 1.0), (0.5, 1.0, ident, 1.0)]


def _gauss_rule(a, b, panels, order):
    u, w = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * u[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _apply_rule(func, x_of, jac, nodes, weights, block):
    total = None
    for s in range(0, len(nodes), block):
        x = np.clip(x_of(nodes[s:s + block]), 0.0, 1.0)
        part = (jac * weights[s:s + block]) @ np.asarray(func(x), dtype=float).reshape(len(x), -1)
        total = part if total is None else total + part
    return total


def integrate(family, func, *, epsabs: float = 1e-13, panels: int = 8, order: int = 20,
              max_panels: int = 1 << 15, block: int = 4096):
    """``int func(x) dmu(x)`` over ``[0, 1]`` for the family's measure.

    ``func`` maps an array of ``N`` points to an ``(N, K)`` array.  Each side
    of the kink at ``x = 1/2`` gets a composite Gauss-Legendre rule whose
    panel count doubles until two successive results agree to ``epsabs``.
    The integrand is smooth on each side, so convergence is spectral and the
    difference is a conservative error estimate.

    Returns
    -------
    value : ndarray, shape (K,)
    error : float
        Estimated absolute error (max over components).

    Raises
    ------
    QuadratureError
        If ``max_panels`` is reached first.
    """
    total, err = 0.0, 0.0
    for a, b, x_of, jac in _halves(family):
        p = max(1, int(panels))
        prev = _apply_rule(func, x_of, jac, *_gauss_rule(a, b, p, order), block)
        while True:
            p *= 2
            cur = _apply_rule(func, x_of, jac, *_gauss_rule(a, b, p, order), block)
            e = float(np.max(np.abs(cur - prev)))
            if e <= epsabs / 2:
                break
            if p >= max_panels:
                raise QuadratureError(err + e, epsabs)
            prev = cur
        total = total + cur
        err += e
    return total, err


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Coefficients ``f_k = <f, eta_k>`` in a basis' canonical order.

    For tensor tables ``indices`` holds multi-indices and the coefficients
    are products of 1D coefficients.
    """

    family: str
    indices: np.ndarray
    coefficients: np.ndarray
    errors: np.ndarray
    norm_sq: float
    tail_sq: float | None = None

    def __len__(self):
        return len(self.coefficients)

    def leading(self, m: int) -> "CoefficientTable":
        if m > len(self):
            raise ValueError("table does not cover the requested size")
        return CoefficientTable(self.family, self.indices[:m], self.coefficients[:m],
                                self.errors[:m], self.norm_sq, None)

    def truncation_sq(self) -> float:
        """``||f - P_m f||^2``; the stored tail if computed, else by subtraction."""
        if self.tail_sq is not None:
            return self.tail_sq
        return self.norm_sq - float(np.sum(self.coefficients**2))


def norm_sq(family, f=b2cut) -> float:
    """``||f||^2`` in ``L2(mu)`` for the family's measure."""
    fam = get_family(family)
    if f is b2cut and fam.id is not FamilyId.CHEBYSHEV:
        return float(B2CUT_NORM_SQ)
    val, _ = integrate(fam, lambda x: f(x) ** 2)
    return float(val[0])


def _composite_nodes(family, panels: int, order: int = 16):
    nodes, weights = [], []
    for a, b, x_of, jac in _halves(family):
        pts, w = _gauss_rule(a, b, panels, order)
        nodes.append(np.clip(x_of(pts), 0.0, 1.0))
        weights.append(jac * w)
    return np.concatenate(nodes), np.concatenate(weights)


def tail_norm_sq(family, coefficients, f=b2cut, panels: int | None = None, block: int = 8192) -> float:
    """``int (f - sum_k c_k eta_k)^2 dmu`` by a composite Gauss rule.

    Computing the tail directly avoids the cancellation in
    ``||f||^2 - sum c_k^2`` once the tail drops near machine precision.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    m = len(coefficients)
    if panels is None:
        # about one oscillation of the squared residual per 20-node panel
        panels = max(32, m // 2)
    x, w = _composite_nodes(family, panels, order=20)
    total = 0.0
    for a in range(0, len(x), block):
        xs = x[a:a + block]
        r = f(xs) - eval_all(family, m, xs) @ coefficients
        total += float(np.dot(w[a:a + block], r * r))
    return total


def coefficient_table(family, m: int, f=b2cut, *, epsabs: float = 1e-13,
                      with_tail: bool = True) -> CoefficientTable:
    """1D coefficients ``<f, eta_k>`` for ``k < m``.

    Raises
    ------
    QuadratureError
        If the adaptive quadrature cannot reach ``epsabs``.
    """
    fam = get_family(family)
    if m < 1:
        raise ValueError("m must be >= 1")

    def integrand(x):
        return eval_all(fam, m, x) * f(x)[:, None]

    coef, err = integrate(fam, integrand, epsabs=epsabs, panels=max(4, m // 8))
    coef = np.asarray(coef, dtype=float)
    tail = tail_norm_sq(fam, coef, f) if with_tail else None
    return CoefficientTable(
        fam.name, np.arange(m)[:, None], coef, np.full(m, err), norm_sq(fam, f), tail
    )


def tensor_coefficients(table_1d: CoefficientTable, indices) -> CoefficientTable:
    """Coefficients of a tensor-product function over multi-indices.

    ``f_k = prod_j c[k_j]``; the norm is ``||f_1||^(2d)`` and the tail is
    obtained by subtraction.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 2:
        raise ValueError("indices must be an (m, d) array")
    if idx.max() >= len(table_1d):
        raise ValueError("1D table does not cover the multi-indices")
    c = table_1d.coefficients
    coef = np.prod(c[idx], axis=1)
    d = idx.shape[1]
    # relative quadrature errors add across factors
    rel = table_1d.errors[idx] / np.maximum(np.abs(c[idx]), 1e-300)
    err = np.abs(coef) * rel.sum(axis=1)
    return CoefficientTable(f"{table_1d.family}-tensor", idx, coef, err, table_1d.norm_sq**d, None)


@dataclass(frozen=True)
class ParsevalError:
    """``total = truncation + coefficient_error``."""

    total: float
    truncation: float
    coefficient_error: float


def parseval_error(coefficients, table: CoefficientTable, tail_sq: float | None = None) -> ParsevalError:
    """Exact squared L2 error of ``sum_k g_k eta_k`` against the tabulated ``f``.

    Parameters
    ----------
    coefficients : array_like or LeastSquaresFit
        Fitted ``g_k`` in the table's order.
    table : CoefficientTable
        Must have at least as many entries as ``coefficients``.
    tail_sq : float, optional
        ``||f - P_m f||^2``; defaults to the table's value for the fitted size.
    """
    g = getattr(coefficients, "coefficients", coefficients)
    g = np.asarray(g, dtype=float)
    m = len(g)
    if m > len(table):
        raise ValueError(f"table covers {len(table)} indices, fit has {m}")
    sub = table if m == len(table) else table.leading(m)
    trunc = sub.truncation_sq() if tail_sq is None else float(tail_sq)
    diff = float(np.sum((sub.coefficients - g) ** 2))
    return ParsevalError(trunc + diff, trunc, diff)


def save_coefficients(table: CoefficientTable, path) -> None:
    """CSV with columns ``index`` (space-separated), ``coefficient``, ``quadrature_error``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "coefficient", "quadrature_error"])
        for idx, c, e in zip(table.indices, table.coefficients, table.errors):
            writer.writerow([" ".join(str(int(v)) for v in np.atleast_1d(idx)), repr(float(c)), repr(float(e))])
