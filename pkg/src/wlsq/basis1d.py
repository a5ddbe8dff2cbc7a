"""One-dimensional orthonormal systems on the unit interval.

Four families are provided:

``legendre``
    Shifted Legendre polynomials, orthonormal in L2([0, 1], dx).
``chebyshev``
    Shifted Chebyshev polynomials, orthonormal in L2([0, 1], mu) with
    ``dmu = (1 - (2x - 1)^2)^(-1/2) dx``.  This measure has total mass
    pi/2, hence ``eta_0 = sqrt(2/pi)`` and ``eta_k = (2/sqrt(pi)) T_k(2x - 1)``.
``h1``
    Half-period cosines, the eigenfunctions of the embedding H^1 -> L2.
``h2``
    Eigenfunctions of the embedding H^2 -> L2.  For ``k >= 2`` they are
    built from the roots ``t_k`` of ``cosh(t) cos(t) = 1``.  Low indices use
    the closed form, indices from ``h2_switch_index`` on use the stable
    cosine-plus-boundary-layer approximation.

All evaluators are vectorised over ``x``; :func:`eval_all` returns the full
``(n, m)`` matrix of the first ``m`` functions and is what the solvers use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import RootFindingError

__all__ = [
    "H2_SWITCH_INDEX",
    "FamilyId",
    "BasisFamily",
    "LEGENDRE",
    "CHEBYSHEV",
    "H1",
    "H2",
    "get_family",
    "EigenRootTable",
    "solve_tk",
    "root_table",
    "tk_values",
    "singular_value_sq",
    "shifted_legendre",
    "eval_h2_exact",
    "eval_h2_stable",
    "eval_all",
    "eval_basis",
    "christoffel",
    "sup_norm_bound",
    "Basis1D",
]

#: First index evaluated with the stable approximation.  At 10 the Gram
#: matrix of the first 64 functions deviates from identity by 3e-8; from 12
#: on it stays below 2e-9.
H2_SWITCH_INDEX = 12

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)


class FamilyId(str, Enum):
    LEGENDRE = "legendre"
    CHEBYSHEV = "chebyshev"
    H1 = "h1"
    H2 = "h2"


@dataclass(frozen=True)
class BasisFamily:
    """Descriptor of a 1D orthonormal system and its error measure."""

    id: FamilyId
    h2_switch_index: int = H2_SWITCH_INDEX

    def __post_init__(self):
        object.__setattr__(self, "id", FamilyId(self.id))
        if self.h2_switch_index < 2:
            raise ValueError("h2_switch_index must be >= 2")

    @property
    def name(self) -> str:
        return self.id.value

    @property
    def measure(self) -> str:
        return "chebyshev" if self.id is FamilyId.CHEBYSHEV else "lebesgue"

    @property
    def smoothness(self) -> int | None:
        return {FamilyId.H1: 1, FamilyId.H2: 2}.get(self.id)

    def __str__(self):
        return self.name


LEGENDRE = BasisFamily(FamilyId.LEGENDRE)
CHEBYSHEV = BasisFamily(FamilyId.CHEBYSHEV)
H1 = BasisFamily(FamilyId.H1)
H2 = BasisFamily(FamilyId.H2)


def get_family(family) -> BasisFamily:
    """Coerce a name (``"h2"``), a :class:`FamilyId` or a family to a family."""
    if isinstance(family, BasisFamily):
        return family
    return BasisFamily(FamilyId(str(family).lower()))


# ---------------------------------------------------------------------------
# roots of cosh(t) cos(t) = 1


def _sech(t):
    e = np.exp(-t)
    return 2.0 * e / (1.0 + e * e)


def _g(t):
    # cos(t) - 1/cosh(t); never forms cosh(t), which overflows past t ~ 710
    return np.cos(t) - _sech(t)


def _dg(t):
    s = _sech(t)
    return -np.sin(t) + s * np.tanh(t)


def _brackets(ks):
    ks = np.asarray(ks, dtype=float)
    tilde = (2.0 * ks - 1.0) * np.pi / 2.0
    pad = 4.0 * np.spacing(tilde)
    even = np.mod(ks, 2) == 0
    lo = np.where(even, tilde - pad, (ks - 1.0) * np.pi)
    hi = np.where(even, ks * np.pi, tilde + pad)
    return lo, hi


def _solve_roots(ks, tol):
    ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
    if np.any(ks < 2):
        raise ValueError("roots t_k exist for k >= 2 only")
    lo, hi = _brackets(ks)
    g_lo = _g(lo)
    bad = np.sign(g_lo) == np.sign(_g(hi))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise RootFindingError(int(ks[i]), (lo[i], hi[i]), float(abs(g_lo[i])))

    # bisection to width 1e-14 (or until the bracket cannot shrink further)
    s_lo = np.sign(g_lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > 1e-14) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        left = np.sign(_g(mid)) == s_lo
        lo = np.where(active & left, mid, lo)
        hi = np.where(active & ~left, mid, hi)
    t = 0.5 * (lo + hi)

    # two Newton steps, kept inside the bracket
    for _ in range(2):
        step = _g(t) / _dg(t)
        cand = t - step
        better = (cand >= lo) & (cand <= hi) & (np.abs(_g(cand)) <= np.abs(_g(t)))
        t = np.where(better, cand, t)

    res = np.abs(_g(t))
    # a double cannot resolve the root better than its own spacing
    limit = np.maximum(tol, 2.0 * np.spacing(t))
    failed = res > limit
    if np.any(failed):
        i = int(np.flatnonzero(failed)[0])
        raise RootFindingError(int(ks[i]), (lo[i], hi[i]), float(res[i]))
    return t


def solve_tk(k: int, tol: float = 1e-12) -> float:
    """Return the root ``t_k`` of ``cosh(t) cos(t) = 1``, ``k >= 2``.

    The root is bracketed by ``((2k-1)pi/2, k pi)`` for even ``k`` and
    ``((k-1) pi, (2k-1)pi/2)`` for odd ``k`` (the interior endpoint padded by
    a few ulps), bisected to width 1e-14 and polished by two Newton steps.
    The residual is evaluated as ``cos(t) - sech(t)``.

    Raises
    ------
    RootFindingError
        If the residual exceeds ``max(tol, 2 ulp(t))``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return float(_solve_roots([k], tol)[0])


@dataclass(frozen=True)
class EigenRootTable:
    """Roots ``t_2 < t_3 < ... < t_kmax``; ``table[k]`` returns ``t_k``."""

    roots: np.ndarray
    tolerance: float

    @property
    def kmax(self) -> int:
        return len(self.roots) + 1

    def __getitem__(self, k):
        k = np.asarray(k)
        if np.any(k < 2) or np.any(k > self.kmax):
            raise IndexError(f"table holds t_k for 2 <= k <= {self.kmax}")
        return self.roots[k - 2]


@lru_cache(maxsize=None)
def _table(kmax: int) -> EigenRootTable:
    roots = _solve_roots(np.arange(2, kmax + 1), 1e-12)
    roots.setflags(write=False)
    return EigenRootTable(roots, 1e-12)


def root_table(kmax: int) -> EigenRootTable:
    """Cached root table covering at least ``2 <= k <= kmax``."""
    size = 64
    while size < kmax:
        size *= 2
    return _table(size)


def tk_values(k):
    """Vectorised ``t_k`` lookup for ``k >= 2``."""
    k = np.asarray(k, dtype=np.int64)
    if k.size == 0:
        return np.zeros(k.shape)
    return root_table(int(k.max()))[k]


def singular_value_sq(s: int, k):
    """Squared singular values of the embedding H^s -> L2, s in {1, 2}.

    ``s = 1``: ``1 / (1 + pi^2 k^2)``.  ``s = 2``: 1 for ``k = 0, 1`` and
    ``1 / (1 + t_k^4)`` for ``k >= 2``.  Vectorised over ``k``.
    """
    k = np.asarray(k, dtype=np.int64)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    if s == 1:
        out = 1.0 / (1.0 + (np.pi * k) ** 2)
    elif s == 2:
        out = np.ones(k.shape)
        hi = k >= 2
        if np.any(hi):
            out[hi] = 1.0 / (1.0 + tk_values(k[hi]) ** 4)
    else:
        raise ValueError("smoothness s must be 1 or 2")
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# argument reduction for cos(pi c x) with integer c


def _two_product(c, x):
    # Dekker: p + e == c * x exactly, valid for integer |c| < 2**26
    p = c * x
    s = 134217729.0 * x
    xh = s - (s - x)
    xl = x - xh
    e = (c * xh - p) + c * xl
    return p, e


def _sincos_pi(c, x, half=False):
    """``sin`` and ``cos`` of ``pi c x`` (``pi c x / 2`` if ``half``).

    The product ``c x`` is formed exactly and reduced modulo 2 before
    multiplying by pi, so the result does not degrade as ``c`` grows.
    """
    p, e = _two_product(np.asarray(c, dtype=float), np.asarray(x, dtype=float))
    if half:
        p, e = 0.5 * p, 0.5 * e
    a = np.fmod(p, 2.0)
    nq = np.rint(2.0 * a)
    r = (a - 0.5 * nq) + e
    q = np.mod(nq, 4).astype(np.int64)
    sr = np.sin(np.pi * r)
    cr = np.cos(np.pi * r)
    sin = np.choose(q, [sr, cr, -sr, -cr])
    cos = np.choose(q, [cr, -sr, -cr, sr])
    return sin, cos


# ---------------------------------------------------------------------------
# evaluators


def _as_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise ValueError("points must lie in [0, 1]")
    return x


def shifted_legendre(x, m: int):
    """Unnormalised ``P_k(2x - 1)`` for ``k < m`` via the three-term recurrence.

    Works on float arrays and on object arrays (e.g. of ``Fraction``), the
    latter giving exact rational values.  Returns shape ``(len(x), m)``.
    """
    x = np.asarray(x)
    x = x.reshape(-1)
    dtype = object if x.dtype == object else float
    out = np.empty((x.shape[0], m), dtype=dtype)
    if m == 0:
        return out
    u = 2 * x - 1
    out[:, 0] = 1
    if m > 1:
        out[:, 1] = u
    for k in range(2, m):
        out[:, k] = ((2 * k - 1) * u * out[:, k - 1] - (k - 1) * out[:, k - 2]) / k
    return out


def eval_h2_exact(k: int, x, t_k: float | None = None):
    """Closed-form H^2 eigenfunction ``eta_k``, ``k >= 2``.

    Evaluates
    ``cosh(tx) + cos(tx) - B (sinh(tx) + sin(tx))`` with
    ``B = (cosh t - cos t) / (sinh t - sin t)``, rearranged without
    cancellation: ``cosh(tx) - B sinh(tx) = exp(-tx) + (1 - B) sinh(tx)`` and
    ``1 - B = (cos t - sin t - exp(-t)) / (sinh t - sin t)``.  The
    rearrangement is algebraically identical to the closed form.
    """
    if k < 2:
        raise ValueError("eval_h2_exact is defined for k >= 2")
    t = float(tk_values(k)) if t_k is None else float(t_k)
    x = np.asarray(x, dtype=float)
    em = math.exp(-t)
    sin_t, cos_t = math.sin(t), math.cos(t)
    denom = 1.0 - em * em - 2.0 * sin_t * em  # (sinh t - sin t) * 2 exp(-t)
    delta_num = cos_t - sin_t - em  # (1 - B) * (sinh t - sin t)
    # sinh(tx) / (sinh t - sin t) = exp(t(x-1)) (1 - exp(-2tx)) / denom
    ratio = np.exp(t * (x - 1.0)) * (-np.expm1(-2.0 * t * x)) / denom
    b = 1.0 - delta_num * 2.0 * em / denom
    part_one = np.exp(-t * x) + delta_num * ratio
    part_two = np.cos(t * x) - b * np.sin(t * x)
    return part_one + part_two


def _h2_stable_block(ks, x):
    # x: (n, 1), ks: (1, K)
    c = 2.0 * ks - 1.0
    sin, cos = _sincos_pi(c, x, half=True)
    wave = cos - sin  # sqrt(2) cos(t~ x + pi/4)
    p, e = _two_product(c, x)
    y_left = 0.5 * np.pi * (p + e)
    y_right = 0.5 * np.pi * (c * (1.0 - x))
    sign = np.where(np.mod(ks, 2) == 0, 1.0, -1.0)
    left = np.where(x <= 0.5, np.exp(-np.where(x <= 0.5, y_left, 0.0)), 0.0)
    right = np.where(x >= 0.5, sign * np.exp(-np.where(x >= 0.5, y_right, 0.0)), 0.0)
    return wave + left + right


def eval_h2_stable(k: int, x):
    """Stable approximation of the H^2 eigenfunction ``eta_k``, ``k >= 2``.

    ``sqrt(2) cos(t~ x + pi/4) + 1[0,1/2](x) exp(-t~ x)
    + 1[1/2,1](x) (-1)^k exp(-t~ (1 - x))`` with ``t~ = pi (2k - 1) / 2``.
    Both indicator terms are active at ``x = 1/2``.  The deviation from the
    exact eigenfunction is at most ``16 exp(-pi (k - 1) / 2)``.
    """
    if k < 2:
        raise ValueError("eval_h2_stable is defined for k >= 2")
    x = np.asarray(x, dtype=float)
    out = _h2_stable_block(np.array([[k]], dtype=float), x.reshape(-1, 1))
    return out.reshape(x.shape)


def eval_all(family, m: int, x):
    """Matrix ``[eta_k(x_i)]`` of shape ``(len(x), m)``."""
    family = get_family(family)
    x = _as_unit(x).reshape(-1)
    if m < 0:
        raise ValueError("m must be non-negative")
    ks = np.arange(m, dtype=float)
    fid = family.id
    if fid is FamilyId.LEGENDRE:
        return shifted_legendre(x, m) * np.sqrt(2.0 * ks + 1.0)
    if fid is FamilyId.CHEBYSHEV:
        # theta = arccos(2x - 1), computed without the endpoint sensitivity
        theta = 2.0 * np.arctan2(np.sqrt(1.0 - x), np.sqrt(x))
        scale = np.full(m, 2.0 / math.sqrt(math.pi))
        if m:
            scale[0] = math.sqrt(2.0 / math.pi)
        return np.cos(np.outer(theta, ks)) * scale
    if fid is FamilyId.H1:
        _, cos = _sincos_pi(ks[None, :], x[:, None])
        scale = np.full(m, _SQRT2)
        if m:
            scale[0] = 1.0
        return cos * scale
    # H2
    out = np.empty((x.shape[0], m))
    if m > 0:
        out[:, 0] = 1.0
    if m > 1:
        out[:, 1] = 2.0 * _SQRT3 * x - _SQRT3
    switch = min(family.h2_switch_index, m)
    if switch > 2:
        roots = tk_values(np.arange(2, switch))
        for k in range(2, switch):
            out[:, k] = eval_h2_exact(k, x, roots[k - 2])
    lo = max(switch, 2)
    if lo < m:
        out[:, lo:] = _h2_stable_block(ks[None, lo:], x[:, None])
    return out


def eval_basis(family, k: int, x):
    """``eta_k(x)`` for a single index, vectorised over ``x``."""
    family = get_family(family)
    if k < 0:
        raise ValueError("k must be non-negative")
    x = np.asarray(x, dtype=float)
    fid = family.id
    if fid is FamilyId.H2 and k >= 2:
        _as_unit(x)
        if k < family.h2_switch_index:
            return eval_h2_exact(k, x)
        return eval_h2_stable(k, x)
    if fid is FamilyId.LEGENDRE:
        # the recurrence needs all lower degrees anyway
        return eval_all(family, k + 1, x)[:, k].reshape(x.shape)
    flat = _as_unit(x).reshape(-1)
    if fid is FamilyId.CHEBYSHEV:
        theta = 2.0 * np.arctan2(np.sqrt(1.0 - flat), np.sqrt(flat))
        scale = math.sqrt(2.0 / math.pi) if k == 0 else 2.0 / math.sqrt(math.pi)
        return (scale * np.cos(k * theta)).reshape(x.shape)
    if fid is FamilyId.H1:
        if k == 0:
            return np.ones(x.shape)
        _, cos = _sincos_pi(float(k), flat)
        return (_SQRT2 * cos).reshape(x.shape)
    # H2, k in {0, 1}
    if k == 0:
        return np.ones(x.shape)
    return 2.0 * _SQRT3 * x - _SQRT3


def christoffel(family, m: int, x):
    """Christoffel function ``N(V_m, x) = sum_{k<m} eta_k(x)^2``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x = np.asarray(x, dtype=float)
    vals = eval_all(family, m, x.reshape(-1))
    return np.einsum("ij,ij->i", vals, vals).reshape(x.shape)


def sup_norm_bound(family, k: int) -> float:
    """Proven bound on ``||eta_k||_inf``.

    H2: 1, sqrt(3), sqrt(6) for k = 0, 1, >= 2.  H1: 1 then sqrt(2).
    Chebyshev: the normalisation constants sqrt(2/pi), 2/sqrt(pi).
    Legendre: sqrt(2k + 1), attained at the endpoints.
    """
    fid = get_family(family).id
    if k < 0:
        raise ValueError("k must be non-negative")
    if fid is FamilyId.H2:
        return (1.0, _SQRT3)[k] if k < 2 else math.sqrt(6.0)
    if fid is FamilyId.H1:
        return 1.0 if k == 0 else _SQRT2
    if fid is FamilyId.CHEBYSHEV:
        return math.sqrt(2.0 / math.pi) if k == 0 else 2.0 / math.sqrt(math.pi)
    return math.sqrt(2.0 * k + 1.0)


class Basis1D:
    """The first ``m`` functions of a family, as used by the design operator."""

    def __init__(self, family, m: int):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.family = get_family(family)
        self.m = int(m)

    @property
    def size(self) -> int:
        return self.m

    @property
    def dimension(self) -> int:
        return 1

    @property
    def name(self) -> str:
        return self.family.name

    def evaluate(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 2:
            if points.shape[1] != 1:
                raise ValueError("Basis1D expects one coordinate per point")
            points = points[:, 0]
        return eval_all(self.family, self.m, points)

    def leading(self, m: int) -> "Basis1D":
        if not 1 <= m <= self.m:
            raise ValueError("leading size out of range")
        return Basis1D(self.family, m)

    def christoffel_sup(self) -> float:
        """``sup_x N(V_m, x)`` from the family's sup-norm bounds."""
        return float(sum(sup_norm_bound(self.family, k) ** 2 for k in range(self.m)))

    def __repr__(self):
        return f"Basis1D({self.family.name!r}, m={self.m})"
