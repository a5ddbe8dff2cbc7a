"""Closed-form error bounds, sampling conditions and tail levels.

Every function evaluates a printed expression literally.  Bound values are
never clamped; probabilities are reported as ``max(0, 1 - c exp(-t))``.

Notation: ``e2`` and ``e_inf`` are the L2 and L-infinity norms of
``f - P_m f`` (``P_m`` the L2 projection), ``sup_ratio`` is
``||N(V_m, .) / rho||_inf``, ``sup_inv_density`` is ``||1/rho||_inf`` and
``N_sup`` is ``sup_x N(V_m, x)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

from scipy.special import xlogy

__all__ = [
    "BoundInputs",
    "BoundReport",
    "sampling_condition",
    "max_admissible_m",
    "bound_l2_noiseless",
    "bound_l2_noisy",
    "bound_linf",
    "bound_l2_tensor",
    "bernstein_tail",
    "hanson_wright_level",
    "chernoff_tail_probs",
    "probability",
    "evaluate_bounds",
]


@dataclass(frozen=True)
class BoundInputs:
    """Parameters shared by the bound evaluators.

    ``N_sup`` defaults to ``sup_ratio``, which is exact for ``rho = 1``.
    """

    m: int
    n: int
    t: float
    sup_ratio: float
    sup_inv_density: float = 1.0
    e2: float = 0.0
    e_inf: float = 0.0
    sigma2: float = 0.0
    B: float = 0.0
    N_sup: float | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        for f in fields(self):
            val = getattr(self, f.name)
            if val is not None and not val >= 0:
                raise ValueError(f"{f.name} must be non-negative, got {val}")

    @property
    def N(self) -> float:
        return self.sup_ratio if self.N_sup is None else self.N_sup

    @property
    def t_le_n(self) -> bool:
        """Whether ``t <= n``, used in the proof of the noisy bound."""
        return self.t <= self.n

    @classmethod
    def from_dict(cls, data: dict) -> "BoundInputs":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundReport:
    condition_ok: bool
    rhs_l2_noiseless: float
    rhs_l2_noisy: float
    rhs_linf: float
    failure_probability: float
    probability_l2_noiseless: float
    probability_l2_noisy: float
    probability_linf: float
    t_le_n: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def probability(t: float, c: float) -> float:
    """``max(0, 1 - c exp(-t))``."""
    return max(0.0, 1.0 - c * math.exp(-t))


def sampling_condition(m: int, n: int, t: float, sup_ratio: float) -> bool:
    """``10 sup_ratio (log m + t) <= n`` with the natural logarithm."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return 10.0 * sup_ratio * (math.log(m) + t) <= n


def max_admissible_m(n: int, t: float, sup_ratio_of_m, m_max: int = 10**7) -> int:
    """Largest ``m`` such that the sampling condition holds for all ``m' <= m``.

    ``sup_ratio_of_m`` maps ``m`` to ``||N(V_m)/rho||_inf``, e.g.
    ``lambda m: m**2`` for Legendre.  Returns 0 if even ``m = 1`` fails.
    """
    m = 0
    while m < m_max and sampling_condition(m + 1, n, t, sup_ratio_of_m(m + 1)):
        m += 1
    return m


def _noise_radicand(p: BoundInputs) -> float:
    return (p.m / p.n) * (14.0 * p.B * math.sqrt(p.t * p.sigma2) + p.sigma2) + 128.0 * p.B**2 * p.t / p.n


def bound_l2_noiseless(p: BoundInputs) -> float:
    """``8 (e2 + sqrt(t/n) e_inf)^2``; holds with probability ``1 - 2 exp(-t)``."""
    return 8.0 * (p.e2 + math.sqrt(p.t / p.n) * p.e_inf) ** 2


def bound_l2_noisy(p: BoundInputs) -> float:
    """Squared L2 error bound with bounded noise.

    ``14 (e2 + sqrt(t/n) e_inf)^2 + ||4/rho||_inf ((m/n)(14 B sqrt(t sigma^2)
    + sigma^2) + 128 B^2 t / n)``; probability ``1 - 3 exp(-t)``.
    """
    trunc = 14.0 * (p.e2 + math.sqrt(p.t / p.n) * p.e_inf) ** 2
    return trunc + 4.0 * p.sup_inv_density * _noise_radicand(p)


def bound_linf(p: BoundInputs) -> float:
    """L-infinity error bound with bounded noise.

    ``(1 + sqrt(5 N)) (e_inf + sqrt(t/n) e2) + sqrt(||2/rho||_inf N)
    sqrt((m/n)(14 B sqrt(t sigma^2) + sigma^2) + 128 B^2 t / n)``.  Here
    ``e2`` and ``e_inf`` should be errors of the best L-infinity
    approximation; passing the L2-projection errors is an upper surrogate for
    the ``e_inf`` term only.
    """
    N = p.N
    approx = (1.0 + math.sqrt(5.0 * N)) * (p.e_inf + math.sqrt(p.t / p.n) * p.e2)
    noise = math.sqrt(2.0 * p.sup_inv_density * N) * math.sqrt(_noise_radicand(p))
    return approx + noise


def bound_l2_tensor(e2: float, m: int, n: int, N_sup: float, sigma2: float, B: float,
                    t: float = 6.0) -> float:
    """Noisy L2 bound with ``rho = 1`` and ``e_inf <= sqrt(N) e2``.

    ``14 (1 + sqrt(t N / n))^2 e2^2 + 4 ((m/n)(14 B sqrt(t sigma^2) + sigma^2)
    + 128 B^2 t / n)``.  For ``t = 6`` and ``n = 10^6`` this is bounded by
    ``14 (1 + sqrt(6N/n))^2 e2^2 + (m/n)(138 B sigma + 4 sigma^2) + 0.0031 B^2``.
    """
    p = BoundInputs(m=m, n=n, t=t, sup_ratio=N_sup, e2=e2, e_inf=math.sqrt(N_sup) * e2,
                    sigma2=sigma2, B=B)
    return bound_l2_noisy(p)


def bernstein_tail(n: int, t: float, sigma2: float, B: float) -> float:
    """``2 B t / (3 n) + sqrt(2 sigma^2 t / n)``, exceeded with probability
    at most ``exp(-t)`` by the mean of ``n`` centred bounded variables."""
    return 2.0 * B * t / (3.0 * n) + math.sqrt(2.0 * sigma2 * t / n)


def hanson_wright_level(A_spec: float, A_frob: float, t: float, sigma2: float, B: float) -> float:
    """``128 B^2 ||A||^2 t + (8 sqrt(3) B sqrt(t sigma^2) + sigma^2) ||A||_F^2``.

    Bounds ``||A xi||^2`` with probability ``1 - exp(-t)``.
    """
    return 128.0 * B**2 * A_spec**2 * t + (8.0 * math.sqrt(3.0) * B * math.sqrt(t * sigma2) + sigma2) * A_frob**2


def chernoff_tail_probs(m: int, n: int, sup_ratio: float, t: float, sharp: bool = False):
    """Matrix Chernoff tails for the Gram matrix with ``mu_min = mu_max = 1``.

    ``R = sup_ratio / n``.  Returns ``(p_min, p_max)``, the bounds on
    ``P(lambda_min <= 1 - t)`` and ``P(lambda_max >= 1 + t)``, capped at 1.
    The default uses the quadratic exponents ``t^2/(2R)`` and ``t^2/(3R)``;
    ``sharp=True`` uses ``(t + (1-t) log(1-t))/R`` and
    ``(-t + (1+t) log(1+t))/R``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("deviation t must lie in [0, 1]")
    R = sup_ratio / n
    if sharp:
        a = t + xlogy(1.0 - t, 1.0 - t)
        b = -t + xlogy(1.0 + t, 1.0 + t)
    else:
        a, b = t * t / 2.0, t * t / 3.0
    if R == 0.0:
        return (0.0 if a > 0 else min(1.0, m), 0.0 if b > 0 else min(1.0, m))
    p_min = min(1.0, m * math.exp(-a / R))
    p_max = min(1.0, m * math.exp(-b / R))
    return p_min, p_max


def evaluate_bounds(p: BoundInputs) -> BoundReport:
    """All bounds for one parameter set, with the sampling-condition flag."""
    return BoundReport(
        condition_ok=sampling_condition(p.m, p.n, p.t, p.sup_ratio),
        rhs_l2_noiseless=bound_l2_noiseless(p),
        rhs_l2_noisy=bound_l2_noisy(p),
        rhs_linf=bound_linf(p),
        failure_probability=min(1.0, 3.0 * math.exp(-p.t)),
        probability_l2_noiseless=probability(p.t, 2.0),
        probability_l2_noisy=probability(p.t, 3.0),
        probability_linf=probability(p.t, 3.0),
        t_le_n=p.t_le_n,
    )
