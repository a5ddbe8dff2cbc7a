"""Hyperbolic crosses and tensor-product bases on the unit cube.

A hyperbolic cross collects the multi-indices whose product of 1D squared
singular values reaches a threshold ``R``::

    I_R = { k in N^d : prod_j sigma_{k_j}^2 >= R }.

Indices are kept in a canonical order (descending weight, ties broken
lexicographically), so a cross built to size ``m`` is a prefix of any larger
size-mode cross and coefficient vectors are reproducible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis1d import eval_all, get_family, singular_value_sq
from .errors import ResourceError

__all__ = [
    "DEFAULT_ENUMERATION_CAP",
    "HyperbolicCross",
    "build_cross",
    "eval_tensor",
    "christoffel_tensor",
    "TensorBasis",
    "cross_to_text",
    "cross_from_text",
    "save_cross",
    "load_cross",
]

DEFAULT_ENUMERATION_CAP = 2_000_000


class _SigmaTable:
    """Growing cache of 1D squared singular values for one smoothness."""

    def __init__(self, s: int):
        if s not in (1, 2):
            raise ValueError("smoothness s must be 1 or 2")
        self.s = s
        self.values = np.asarray(singular_value_sq(s, np.arange(64)), dtype=float)

    def __getitem__(self, k: int) -> float:
        while k >= len(self.values):
            size = 2 * len(self.values)
            self.values = np.asarray(singular_value_sq(self.s, np.arange(size)), dtype=float)
        return float(self.values[k])

    def weight(self, index) -> float:
        # sorted factors make the product permutation invariant
        return math.prod(sorted(self[k] for k in index))


@dataclass(frozen=True, eq=False)
class HyperbolicCross:
    """An ordered hyperbolic-cross index set.

    Attributes
    ----------
    smoothness : int
        Mixed Sobolev smoothness ``s`` (1 or 2).
    dimension : int
        Number of coordinates ``d``.
    threshold : float
        ``R``.  For size-mode crosses this is the implied threshold, the
        weight of the last index.
    indices : ndarray of int, shape (m, d)
        Multi-indices in canonical order.
    weights : ndarray, shape (m,)
        ``prod_j sigma_{k_j}^2`` for each index.
    """

    smoothness: int
    dimension: int
    threshold: float
    indices: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).reshape(-1, self.dimension)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if idx.shape[0] != w.shape[0]:
            raise ValueError("indices and weights differ in length")
        if np.any(idx < 0):
            raise ValueError("multi-indices must be non-negative")
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.indices.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    @property
    def kmax(self) -> np.ndarray:
        """Largest component used in each coordinate."""
        return self.indices.max(axis=0)

    def prefix(self, m: int) -> "HyperbolicCross":
        """The first ``m`` indices, with the implied threshold."""
        if not 1 <= m <= len(self):
            raise ValueError("prefix size out of range")
        return HyperbolicCross(
            self.smoothness, self.dimension, float(self.weights[m - 1]),
            self.indices[:m], self.weights[:m],
        )

    def as_set(self) -> set:
        return {tuple(int(v) for v in row) for row in self.indices}

    def __eq__(self, other):
        if not isinstance(other, HyperbolicCross):
            return NotImplemented
        return (
            self.smoothness == other.smoothness
            and self.dimension == other.dimension
            and self.threshold == other.threshold
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.smoothness, self.dimension, self.threshold, self.indices.tobytes()))


def _best_first(s, d, stop, cap):
    """Yield ``(weight, index)`` in canonical order until ``stop`` says so.

    The cross is downward closed and weights are non-increasing along each
    coordinate, so a best-first walk from the origin visits indices exactly
    in (descending weight, lexicographic) order.
    """
    table = _SigmaTable(s)
    origin = (0,) * d
    heap = [(-table.weight(origin), origin)]
    seen = {origin}
    count = 0
    while heap:
        neg_w, idx = heapq.heappop(heap)
        if stop(count, -neg_w):
            return
        if count >= cap:
            raise ResourceError(f"hyperbolic cross exceeds enumeration cap {cap}")
        count += 1
        yield -neg_w, idx
        for j in range(d):
            nxt = idx[:j] + (idx[j] + 1,) + idx[j + 1:]
            if nxt not in seen:
                seen.add(nxt)
                heapq.heappush(heap, (-table.weight(nxt), nxt))


def build_cross(
    s: int,
    d: int,
    R: float | None = None,
    *,
    m: int | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> HyperbolicCross:
    """Build a hyperbolic cross by threshold ``R`` or by size ``m``.

    Parameters
    ----------
    s : {1, 2}
        Mixed smoothness.
    d : int
        Dimension, ``d >= 1``.
    R : float, optional
        Threshold in ``(0, 1]``; every index with weight ``>= R`` is kept.
    m : int, optional
        Number of indices; the ``m`` largest weights are kept and the
        implied threshold is reported.
    cap : int
        Enumeration cap.

    Raises
    ------
    ResourceError
        If more than ``cap`` indices would be enumerated.

    Examples
    --------
    >>> len(build_cross(1, 3, 5.3e-5))
    254
    """
    if s not in (1, 2):
        raise ValueError("smoothness s must be 1 or 2")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if (R is None) == (m is None):
        raise ValueError("give exactly one of R (threshold) or m (size)")
    if R is not None:
        R = float(R)
        if not 0.0 < R <= 1.0:
            raise ValueError("R must lie in (0, 1]")
        items = list(_best_first(s, d, lambda count, w: w < R, cap))
        threshold = R
    else:
        m = int(m)
        if m < 1:
            raise ValueError("m must be >= 1")
        if m > cap:
            raise ResourceError(f"requested size {m} exceeds enumeration cap {cap}")
        items = list(_best_first(s, d, lambda count, w: count >= m, cap))
        threshold = items[-1][0]
    weights = np.array([w for w, _ in items])
    indices = np.array([i for _, i in items], dtype=np.int64).reshape(-1, d)
    return HyperbolicCross(s, d, threshold, indices, weights)


def _points(x, d):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {x.shape}")
    return pts, single


def _tensor_matrix(indices, family, pts):
    # gather rows of the transposed 1D tables; row copies are contiguous
    m = indices.shape[0]
    out = np.empty((m, pts.shape[0]))
    buf = np.empty_like(out)
    for j in range(indices.shape[1]):
        col = indices[:, j]
        table = np.ascontiguousarray(eval_all(family, int(col.max()) + 1, pts[:, j]).T)
        if j == 0:
            np.take(table, col, axis=0, out=out, mode="clip")
        else:
            np.take(table, col, axis=0, out=buf, mode="clip")
            out *= buf
    return out.T


def eval_tensor(cross: HyperbolicCross, family, x):
    """Tensor-product basis ``eta_k(x) = prod_j eta_{k_j}(x_j)`` over a cross.

    Parameters
    ----------
    cross : HyperbolicCross
    family : BasisFamily or str
        Must be H1 for ``s = 1`` crosses and H2 for ``s = 2``.
    x : array_like, shape (d,) or (n, d)

    Returns
    -------
    ndarray, shape (m,) or (n, m)
        Entries in the cross's canonical order.
    """
    family = get_family(family)
    if family.smoothness != cross.smoothness:
        raise ValueError(
            f"family {family.name} does not match cross smoothness {cross.smoothness}"
        )
    pts, single = _points(x, cross.dimension)
    out = _tensor_matrix(cross.indices, family, pts)
    return out[0] if single else out


def christoffel_tensor(cross: HyperbolicCross, family, x):
    """``sum_k eta_k(x)^2`` over the cross; scalar for one point."""
    vals = eval_tensor(cross, family, x)
    return np.einsum("...i,...i->...", vals, vals)


class TensorBasis:
    """Tensor-product basis over a hyperbolic cross, for the design operator.

    Per-coordinate 1D tables are evaluated once per point block and
    multiplied through the cross, so the cost per point is
    ``O(d (m + kmax))``.
    """

    def __init__(self, family, cross: HyperbolicCross):
        family = get_family(family)
        if family.smoothness != cross.smoothness:
            raise ValueError("family does not match cross smoothness")
        self.family = family
        self.cross = cross

    @property
    def size(self) -> int:
        return len(self.cross)

    @property
    def m(self) -> int:
        return len(self.cross)

    @property
    def dimension(self) -> int:
        return self.cross.dimension

    @property
    def name(self) -> str:
        return f"{self.family.name}-cross-d{self.dimension}"

    def evaluate(self, points):
        pts, _ = _points(points, self.dimension)
        return _tensor_matrix(self.cross.indices, self.family, pts)

    def leading(self, m: int) -> "TensorBasis":
        return TensorBasis(self.family, self.cross.prefix(m))

    def christoffel_sup(self) -> float:
        """Upper bound on ``sup_x N(V_m, x)`` from 1D sup norms."""
        from .basis1d import sup_norm_bound

        total = 0.0
        for row in self.cross.indices:
            total += math.prod(sup_norm_bound(self.family, int(k)) ** 2 for k in row)
        return total

    def __repr__(self):
        return f"TensorBasis({self.family.name!r}, m={self.m}, d={self.dimension})"


def cross_to_text(cross: HyperbolicCross) -> str:
    """Header ``# s=<s> d=<d> R=<R>`` then one index per line."""
    lines = [f"# s={cross.smoothness} d={cross.dimension} R={cross.threshold!r}"]
    lines += [" ".join(str(int(v)) for v in row) for row in cross.indices]
    return "\n".join(lines) + "\n"


def cross_from_text(text: str) -> HyperbolicCross:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing '# s=<s> d=<d> R=<R>' header")
    header = dict(tok.split("=", 1) for tok in lines[0].lstrip("#").split())
    s, d, R = int(header["s"]), int(header["d"]), float(header["R"])
    table = _SigmaTable(s)
    rows = [tuple(int(v) for v in ln.split()) for ln in lines[1:]]
    if any(len(r) != d for r in rows):
        raise ValueError("index length does not match header dimension")
    weights = np.array([table.weight(r) for r in rows])
    return HyperbolicCross(s, d, R, np.array(rows, dtype=np.int64).reshape(-1, d), weights)


def save_cross(cross: HyperbolicCross, path) -> None:
    Path(path).write_text(cross_to_text(cross))


def load_cross(path) -> HyperbolicCross:
    return cross_from_text(Path(path).read_text())
