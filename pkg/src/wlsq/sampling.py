"""Random sample points, importance weights and noise.

Points are drawn from ``dnu = rho dmu`` and weighted by ``1 / rho``.  All
randomness comes from a counter-based Philox generator keyed by
``(seed, stream)``; rows are produced in fixed blocks whose counters depend
only on the block number, so row ``i`` is a pure function of its index and
chunked or parallel generation gives identical results.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .basis1d import FamilyId, get_family
from .errors import SamplingError

__all__ = [
    "MeasurePair",
    "UNIFORM",
    "CHEBYSHEV_UNIFORM",
    "CHEBYSHEV_ARCSINE",
    "measure_for",
    "uniforms",
    "draw_samples",
    "NoiseKind",
    "NoiseModel",
    "add_noise",
    "SampleSet",
    "samples_to_csv",
    "save_samples",
    "load_samples",
]

BLOCK_ROWS = 1 << 14
STREAM_POINTS = 1
STREAM_NOISE = 2
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class MeasurePair:
    """Error measure ``mu`` together with a sampling density ``rho``.

    Attributes
    ----------
    name : str
    error_measure : {"lebesgue", "chebyshev"}
    density : callable
        ``rho`` on ``[0, 1]``, vectorised.
    sup_inv_density : float
        ``||1 / rho||_inf``, possibly ``inf``.
    sampler : {"uniform", "arcsine"}
        How points of ``nu`` are generated from uniforms.
    """

    name: str
    error_measure: str
    density: Callable = field(repr=False)
    sup_inv_density: float
    sampler: str

    def transform(self, u):
        if self.sampler == "uniform":
            return u
        # inverse CDF of the arcsine law on [0, 1]
        return 0.5 * (1.0 - np.cos(np.pi * u))

    def mu_weight(self, x):
        """Density of ``mu`` with respect to ``dx``."""
        if self.error_measure == "lebesgue":
            return np.ones_like(x)
        return 1.0 / (2.0 * np.sqrt(x * (1.0 - x)))


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _cheb_uniform_density(x):
    # rho = dx / dmu = sqrt(1 - (2x - 1)^2)
    x = np.asarray(x, dtype=float)
    return 2.0 * np.sqrt(x * (1.0 - x))


def _arcsine_density(x):
    return np.full_like(np.asarray(x, dtype=float), 2.0 / math.pi)


UNIFORM = MeasurePair("uniform", "lebesgue", _one, 1.0, "uniform")
CHEBYSHEV_UNIFORM = MeasurePair(
    "chebyshev-uniform", "chebyshev", _cheb_uniform_density, math.inf, "uniform"
)
CHEBYSHEV_ARCSINE = MeasurePair(
    "chebyshev-arcsine", "chebyshev", _arcsine_density, math.pi / 2.0, "arcsine"
)

_MEASURES = {mp.name: mp for mp in (UNIFORM, CHEBYSHEV_UNIFORM, CHEBYSHEV_ARCSINE)}


def measure_for(family, sampler: str = "uniform") -> MeasurePair:
    """Measure pair used with ``family``.

    Uniform points are the default for every family.  For Chebyshev,
    ``sampler="arcsine"`` draws from the Chebyshev distribution instead.
    """
    if isinstance(family, MeasurePair):
        return family
    if isinstance(family, str) and family in _MEASURES:
        return _MEASURES[family]
    fam = get_family(family)
    if fam.id is FamilyId.CHEBYSHEV:
        return CHEBYSHEV_ARCSINE if sampler == "arcsine" else CHEBYSHEV_UNIFORM
    if sampler != "uniform":
        raise ValueError(f"sampler {sampler!r} not available for {fam.name}")
    return UNIFORM


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _U64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def _block_generator(seed, stream, block):
    key = np.array([seed, stream], dtype=np.uint64)
    counter = np.array([0, block, 0, 0], dtype=np.uint64)
    bitgen = np.random.Philox(key=key, counter=counter)
    return np.random.Generator(bitgen)


def uniforms(seed, stream: int, n: int, d: int = 1, start: int = 0):
    """Rows ``start .. start + n - 1`` of the uniform stream, shape ``(n, d)``.

    Row ``i`` depends only on ``(seed, stream, d, i)``.
    """
    seed = _check_seed(seed)
    out = np.empty((n, d))
    i = start
    stop = start + n
    while i < stop:
        block, offset = divmod(i, BLOCK_ROWS)
        rows = min(BLOCK_ROWS - offset, stop - i)
        gen = _block_generator(seed, stream, block)
        if offset:
            gen.random(offset * d)
        out[i - start:i - start + rows] = gen.random(rows * d).reshape(rows, d)
        i += rows
    return out


class NoiseKind(str, Enum):
    NONE = "none"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    BOUNDED_UNIFORM = "bounded_uniform"


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise with ``E eps^2 <= variance`` and ``|eps| <= bound``.

    Untruncated Gaussian noise is deliberately not offered: every model has
    a finite bound so the error bounds stay evaluable.
    """

    kind: NoiseKind = NoiseKind.NONE
    variance: float = 0.0
    bound: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.variance < 0 or self.bound < 0:
            raise ValueError("variance and bound must be non-negative")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def truncated_gaussian(cls, variance: float, bound: float | None = None, width: float = 6.0):
        """Gaussian with variance ``variance`` truncated to ``[-B, B]``,
        ``B = width * sigma`` unless given."""
        if variance == 0:
            return cls()
        if bound is None:
            bound = width * math.sqrt(variance)
        return cls(NoiseKind.TRUNCATED_GAUSSIAN, float(variance), float(bound))

    @classmethod
    def bounded_uniform(cls, bound: float):
        """Uniform on ``[-B, B]``; variance ``B^2 / 3``."""
        return cls(NoiseKind.BOUNDED_UNIFORM, bound * bound / 3.0, float(bound))

    def sample(self, u):
        """Map uniforms in ``[0, 1)`` to noise values."""
        u = np.asarray(u, dtype=float)
        if self.kind is NoiseKind.NONE:
            return np.zeros_like(u)
        if self.kind is NoiseKind.BOUNDED_UNIFORM:
            return self.bound * (2.0 * u - 1.0)
        sigma = math.sqrt(self.variance)
        c = self.bound / sigma
        lo = ndtr(-c)
        eps = sigma * ndtri(lo + u * (1.0 - 2.0 * lo))
        return np.clip(eps, -self.bound, self.bound)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "variance": self.variance, "bound": self.bound}


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Sample points with weights, clean values and noise.

    ``y = clean_values + noise``.  ``clean_values`` is ``None`` until
    function values are attached.
    """

    points: np.ndarray
    weights: np.ndarray
    clean_values: np.ndarray | None = None
    noise: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("weights and points differ in length")
        if not np.all(np.isfinite(w) & (w > 0)):
            raise ValueError("weights must be positive and finite")
        arrays = {"points": pts, "weights": w}
        for name in ("clean_values", "noise"):
            val = getattr(self, name)
            if val is not None:
                val = np.array(val, dtype=float).reshape(-1)
                if val.shape[0] != pts.shape[0]:
                    raise ValueError(f"{name} length does not match points")
                arrays[name] = val
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def y(self) -> np.ndarray:
        if self.clean_values is None:
            raise ValueError("no function values attached")
        if self.noise is None:
            return self.clean_values
        return self.clean_values + self.noise

    def with_values(self, f) -> "SampleSet":
        """Attach clean values ``f(points)``; ``f`` takes an ``(n, d)`` array."""
        vals = f(self.points) if callable(f) else f
        return replace(self, clean_values=np.asarray(vals, dtype=float), noise=None)


def draw_samples(measure, n: int, d: int = 1, seed: int = 0) -> SampleSet:
    """Draw ``n`` i.i.d. points from ``nu`` on ``[0, 1]^d`` with weights ``1/rho``.

    Raises
    ------
    SamplingError
        If ``rho`` vanishes at a drawn point.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    measure = measure_for(measure)
    seed = _check_seed(seed)
    pts = measure.transform(uniforms(seed, STREAM_POINTS, n, d))
    rho = np.prod(measure.density(pts), axis=1)
    bad = ~(rho > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SamplingError(
            f"sampling density vanishes at drawn point {i}: x={pts[i].tolist()}"
        )
    return SampleSet(pts, 1.0 / rho, seed=seed)


def add_noise(samples: SampleSet, model: NoiseModel, seed: int | None = None) -> SampleSet:
    """Return a copy with ``noise`` drawn from ``model``.

    The noise stream is independent of the point stream; ``seed`` defaults
    to the sample set's seed.
    """
    if samples.clean_values is None:
        raise ValueError("attach clean values before adding noise")
    seed = samples.seed if seed is None else _check_seed(seed)
    u = uniforms(seed, STREAM_NOISE, samples.n, 1)[:, 0]
    return replace(samples, noise=model.sample(u))


def samples_to_csv(samples: SampleSet) -> str:
    """CSV text with header ``x_1..x_d, weight, y, epsilon``."""
    noise = samples.noise if samples.noise is not None else np.zeros(samples.n)
    y = samples.y if samples.clean_values is not None else np.full(samples.n, np.nan)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x_{j + 1}" for j in range(samples.d)] + ["weight", "y", "epsilon"])
    for i in range(samples.n):
        row = list(samples.points[i]) + [samples.weights[i], y[i], noise[i]]
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def save_samples(samples: SampleSet, path) -> None:
    Path(path).write_text(samples_to_csv(samples))


def load_samples(path, seed: int = 0) -> SampleSet:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-3:] != ["weight", "y", "epsilon"]:
            raise ValueError("sample CSV needs header x_1..x_d,weight,y,epsilon")
        d = len(header) - 3
        if d < 1 or header[:d] != [f"x_{j + 1}" for j in range(d)]:
            raise ValueError("sample CSV needs header x_1..x_d,weight,y,epsilon")
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    data = data.reshape(-1, d + 3)
    y, eps = data[:, d + 1], data[:, d + 2]
    return SampleSet(data[:, :d], data[:, d], y - eps, eps, seed=seed)
