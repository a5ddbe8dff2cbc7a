import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from wlsq.bounds import (
    BoundInputs,
    bernstein_tail,
    bound_l2_noiseless,
    bound_l2_noisy,
    bound_l2_tensor,
    bound_linf,
    chernoff_tail_probs,
    evaluate_bounds,
    hanson_wright_level,
    max_admissible_m,
    probability,
    sampling_condition,
)


def inputs(**kw):
    base = dict(m=10, n=1000, t=1.0, sup_ratio=20.0)
    base.update(kw)
    return BoundInputs(**base)


# -- sampling condition ---------------------------------------------------------


def test_sampling_condition_trivial():
    assert sampling_condition(1, 10, 0.0, 1.0)


def test_legendre_admissible_size():
    # 10 m^2 (log m + 1) <= 1e4 holds up to m = 16; m = 17 gives 11 070
    m = max_admissible_m(10_000, 1.0, lambda m: m * m)
    assert m == 16
    assert abs(m - 17) <= 1


def test_h2_5d_admissible_size_from_printed_condition():
    # with sup_ratio = 6m, t = 6, n = 1e6 the inequality stops at m = 1267
    assert max_admissible_m(10**6, 6.0, lambda m: 6 * m) == 1267
    assert not sampling_condition(12_250, 10**6, 6.0, 6 * 12_250)


@pytest.mark.xfail(strict=True, reason="the printed condition admits m <= 1267, not 12 250; see decisions ledger")
def test_h2_5d_admissible_size_claimed():
    assert max_admissible_m(10**6, 6.0, lambda m: 6 * m) == 12_250


# -- L2 bounds --------------------------------------------------------------------


def test_l2_noiseless_examples():
    assert bound_l2_noiseless(inputs()) == 0.0
    assert bound_l2_noiseless(inputs(e2=1.0, n=37, t=3.3)) == pytest.approx(8.0)
    assert bound_l2_noiseless(inputs(e2=0.1, e_inf=0.5, t=4.0, n=10**4)) == pytest.approx(0.0968)


def test_l2_noisy_without_noise():
    p = inputs(e2=0.2, e_inf=0.9, t=3.0)
    assert bound_l2_noisy(p) == pytest.approx(14 * (0.2 + math.sqrt(3.0 / 1000) * 0.9) ** 2)


def test_l2_noisy_dual_evaluation():
    p = inputs(e2=0.01, e_inf=0.05, m=100, n=10**5, t=5.0, sigma2=1e-4, B=0.06, sup_inv_density=1.0)
    ref = oracles.l2_noisy(100, 10**5, 5.0, 0.01, 0.05, 1e-4, 0.06, 1.0)
    assert bound_l2_noisy(p) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("m, e2, sigma2", [(100, 1e-2, 0.0), (1000, 3e-3, 0.00625), (10_000, 1e-4, 0.01875)])
def test_tensor_instantiation(m, e2, sigma2):
    n, N = 10**6, 6 * m
    B = 6 * math.sqrt(sigma2)
    printed = 14 * (1 + math.sqrt(6 * N / n)) ** 2 * e2**2 + (m / n) * (138 * B * math.sqrt(sigma2) + 4 * sigma2) + 0.0031 * B**2
    val = bound_l2_tensor(e2, m, n, N, sigma2, B, t=6.0)
    assert val <= printed
    assert val == pytest.approx(printed, rel=1e-2)


# -- L-infinity bound ----------------------------------------------------------------


def test_linf_examples():
    assert bound_linf(inputs()) == 0.0
    assert bound_linf(inputs(N_sup=1.0, e_inf=1.0)) == pytest.approx(1 + math.sqrt(5))


def test_linf_scales_like_sqrt_m():
    vals = [bound_linf(inputs(m=m, n=10**6, sup_ratio=6 * m, e_inf=1.0)) for m in (10, 100, 1000)]
    ratios = np.array(vals[1:]) / np.array(vals[:-1])
    assert np.all(ratios > 1)
    np.testing.assert_allclose(ratios, math.sqrt(10), rtol=0.15)


# -- concentration levels ------------------------------------------------------------


def test_bernstein_examples():
    assert bernstein_tail(50, 0.0, 1.0, 1.0) == 0.0
    assert bernstein_tail(100, 2.0, 1.0, 0.0) == pytest.approx(0.2)


def test_bernstein_monte_carlo():
    rng = np.random.default_rng(0)
    n, t, B = 50, 2.0, 1.0
    xi = rng.uniform(-B, B, size=(10_000, n))
    level = bernstein_tail(n, t, B * B / 3, B)
    assert np.mean(xi.mean(axis=1) > level) <= math.exp(-t)


def test_hanson_wright_examples():
    assert hanson_wright_level(2.0, 3.0, 0.0, 0.0, 1.0) == 0.0
    m, n, t, s2, B = 20, 500, 1.5, 0.3, 1.2
    got = hanson_wright_level(1 / math.sqrt(n), math.sqrt(m / n), t, s2, B)
    assert got == pytest.approx(128 * B**2 * t / n + (8 * math.sqrt(3) * B * math.sqrt(t * s2) + s2) * m / n)


def test_hanson_wright_monte_carlo():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 20))
    B, t = 1.0, 1.0
    s = np.linalg.svd(A, compute_uv=False)
    level = hanson_wright_level(s[0], np.linalg.norm(A), t, B * B / 3, B)
    xi = rng.uniform(-B, B, size=(10_000, 20))
    assert np.mean(np.sum((xi @ A.T) ** 2, axis=1) > level) <= math.exp(-t)


# -- matrix Chernoff ------------------------------------------------------------------


def test_chernoff_edge_cases():
    assert chernoff_tail_probs(7, 100, 3.0, 0.0) == (1.0, 1.0)
    assert chernoff_tail_probs(1, 100, 0.0, 0.5) == (0.0, 0.0)
    assert chernoff_tail_probs(1, 10**12, 1e-6, 0.5) == (0.0, 0.0)
    with pytest.raises(ValueError):
        chernoff_tail_probs(1, 10, 1.0, 1.5)


@settings(max_examples=200, deadline=None)
@given(m=st.integers(1, 5000), N=st.floats(1, 1e4), t=st.floats(0, 30), slack=st.floats(1, 10))
def test_condition_implies_small_tails(m, N, t, slack):
    n = slack * 10 * N * (math.log(m) + t)
    assume(n >= 1)
    assert sampling_condition(m, n, t, N)
    p_min, p_max = chernoff_tail_probs(m, n, N, 0.5, sharp=True)
    bound = math.exp(-t) * (1 + 1e-12)
    assert p_min <= bound and p_max <= bound
    assert chernoff_tail_probs(m, n, N, 0.5)[0] <= bound


def test_quadratic_upper_tail_needs_more_samples():
    # the quadratic exponent t^2/(3R) is weaker than the sharp one
    m, t, N = 100, 1.0, 50.0
    n = 10 * N * (math.log(m) + t)
    assert chernoff_tail_probs(m, n, N, 0.5)[1] > math.exp(-t)
    assert chernoff_tail_probs(m, n, N, 0.5, sharp=True)[1] <= math.exp(-t)


# -- invariants ----------------------------------------------------------------------

_pos = st.floats(0, 10, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(e2=_pos, e_inf=_pos, sigma2=_pos, B=_pos, t=_pos, inv=st.floats(0.1, 10), bump=st.floats(0.01, 5),
       which=st.sampled_from(["e2", "e_inf", "sigma2", "B", "t", "sup_inv_density"]))
def test_bounds_monotone(e2, e_inf, sigma2, B, t, inv, bump, which):
    p = dict(m=30, n=5000, t=t, sup_ratio=60.0, sup_inv_density=inv, e2=e2, e_inf=e_inf, sigma2=sigma2, B=B)
    q = dict(p)
    q[which] += bump
    for f in (bound_l2_noiseless, bound_l2_noisy, bound_linf):
        assert f(BoundInputs(**q)) >= f(BoundInputs(**p)) * (1 - 1e-14)


@settings(max_examples=100, deadline=None)
@given(e2=_pos, e_inf=_pos, t=_pos)
def test_noisy_dominates_noiseless(e2, e_inf, t):
    p = inputs(e2=e2, e_inf=e_inf, t=t)
    assert bound_l2_noisy(p) >= 14 / 8 * bound_l2_noiseless(p) * (1 - 1e-14)


# -- inputs and report ------------------------------------------------------------------


def test_input_validation():
    with pytest.raises(ValueError):
        inputs(m=0)
    with pytest.raises(ValueError):
        inputs(sigma2=-1.0)
    with pytest.raises(ValueError):
        inputs(e2=float("nan"))
    with pytest.raises(ValueError):
        BoundInputs.from_dict({"m": 1, "n": 1, "t": 0, "sup_ratio": 1, "colour": 3})


def test_report():
    r = evaluate_bounds(inputs(t=2.0, e2=0.1, sigma2=0.01, B=0.6))
    assert r.probability_l2_noiseless == pytest.approx(1 - 2 * math.exp(-2))
    assert r.probability_l2_noisy == pytest.approx(1 - 3 * math.exp(-2))
    assert r.failure_probability == pytest.approx(3 * math.exp(-2))
    assert r.t_le_n and r.condition_ok
    assert probability(0.0, 3.0) == 0.0
    assert set(r.to_dict()) >= {"rhs_l2_noisy", "rhs_linf", "condition_ok"}
    assert BoundInputs.from_dict(inputs().to_dict()) == inputs()
