import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

import oracles
from wlsq.basis1d import H1, H2, eval_basis
from wlsq.errors import ResourceError
from wlsq.tensor import (
    HyperbolicCross,
    TensorBasis,
    build_cross,
    christoffel_tensor,
    cross_from_text,
    cross_to_text,
    eval_tensor,
    load_cross,
    save_cross,
)


def test_trivial_cross():
    c = build_cross(1, 1, 1.0)
    assert c.as_set() == {(0,)}
    assert eval_tensor(c, H1, [0.3]).tolist() == [1.0]
    assert christoffel_tensor(c, H1, [0.9]) == 1.0


@pytest.mark.parametrize("s, R", [(1, 5.3e-5), (2, 8.3e-8)])
def test_254_frequencies(s, R):
    c = build_cross(s, 3, R)
    assert abs(len(c) - 254) <= 2
    assert c.as_set() == oracles.brute_force_cross(s, 3, R)


@pytest.mark.parametrize("s, d, R", [(1, 1, 1e-3), (1, 2, 1e-4), (2, 2, 1e-6), (1, 3, 1e-5), (2, 3, 1e-6)])
def test_brute_force_equivalence(s, d, R):
    assert build_cross(s, d, R).as_set() == oracles.brute_force_cross(s, d, R)


@pytest.mark.parametrize("s, d, m", [(1, 3, 100), (2, 5, 300), (2, 2, 77)])
def test_downward_closed(s, d, m):
    idx = build_cross(s, d, m=m).as_set()
    for k in idx:
        for j in range(d):
            if k[j] > 0:
                assert k[:j] + (k[j] - 1,) + k[j + 1:] in idx


@pytest.mark.parametrize("s, d, m", [(1, 3, 100), (2, 4, 257), (2, 5, 64)])
def test_canonical_order(s, d, m):
    c = build_cross(s, d, m=m)
    w = c.weights
    assert np.all(np.diff(w) <= 0)
    for a in range(len(c) - 1):
        if w[a] == w[a + 1]:
            assert tuple(c.indices[a]) < tuple(c.indices[a + 1])


@settings(max_examples=25, deadline=None)
@given(s=st.sampled_from([1, 2]), d=st.integers(1, 4), m=st.integers(1, 200))
def test_size_threshold_duality(s, d, m):
    c = build_cross(s, d, m=m)
    again = build_cross(s, d, c.threshold)
    assert len(c) == m
    assert c.as_set() <= again.as_set()


def test_size_mode_prefix_property():
    big = build_cross(2, 5, m=500)
    small = build_cross(2, 5, m=120)
    assert np.array_equal(big.prefix(120).indices, small.indices)
    assert big.prefix(120) == small


def test_enumeration_cap():
    with pytest.raises(ResourceError):
        build_cross(1, 4, 1e-9, cap=1000)
    with pytest.raises(ResourceError):
        build_cross(1, 4, m=5000, cap=1000)


@pytest.mark.parametrize("kwargs", [dict(R=None), dict(R=0.0), dict(R=2.0), dict(R=0.1, m=3)])
def test_invalid_cross_arguments(kwargs):
    R = kwargs.pop("R")
    with pytest.raises(ValueError):
        build_cross(1, 2, R, **kwargs)


def test_tensor_value_examples():
    c = HyperbolicCross(1, 2, 0.1, [[0, 1]], [1.0])
    assert eval_tensor(c, H1, [0.7, 0.0])[0] == pytest.approx(math.sqrt(2))


def test_tensor_entries_bounded_at_centre():
    c = build_cross(2, 3, 8.3e-8)
    vals = eval_tensor(c, H2, [0.5, 0.5, 0.5])
    assert np.all(np.abs(vals) <= 6**1.5 + 1e-9)


def test_tensor_product_structure():
    c = build_cross(2, 3, m=60)
    x = np.array([[0.1, 0.55, 0.93], [0.0, 1.0, 0.5]])
    V = eval_tensor(c, H2, x)
    for i in range(2):
        for a, k in enumerate(c.indices):
            ref = math.prod(float(eval_basis(H2, int(k[j]), x[i, j])) for j in range(3))
            assert V[i, a] == pytest.approx(ref, abs=1e-13)


def test_tensor_family_must_match_smoothness():
    c = build_cross(1, 2, m=5)
    with pytest.raises(ValueError):
        eval_tensor(c, H2, [0.1, 0.2])
    with pytest.raises(ValueError):
        TensorBasis("legendre", c)


def test_christoffel_h1_bound():
    c = build_cross(1, 3, m=150)
    x = np.random.default_rng(1).random((200, 3))
    assert np.all(christoffel_tensor(c, H1, x) <= 2.0 ** 3 * len(c))


def test_christoffel_h2_bounds():
    # per-factor bound 6 per coordinate gives 6^d m; 6 m alone fails at the corner
    c = build_cross(2, 3, 8.3e-8)
    corner = christoffel_tensor(c, H2, [0.0, 0.0, 0.0])
    assert corner <= 6**3 * len(c)
    x = np.random.default_rng(2).random((300, 3))
    assert np.all(christoffel_tensor(c, H2, x) <= 6**3 * len(c))
    assert TensorBasis(H2, c).christoffel_sup() >= corner


def test_h2_corner_exceeds_six_m():
    # documents that N(V_m)/m <= 6 does not hold pointwise for tensor H2
    c = build_cross(2, 3, 8.3e-8)
    assert christoffel_tensor(c, H2, [0.0, 0.0, 0.0]) > 6 * len(c)


def _tensor_gram(family, cross, nodes=256):
    z, w = leggauss(nodes)
    x = np.concatenate([(z + 1) / 4, (z + 3) / 4])
    wt = np.concatenate([w, w]) / 4
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(wt, wt).ravel()
    V = eval_tensor(cross, family, np.column_stack([X.ravel(), Y.ravel()]))
    return V.T @ (W[:, None] * V)


@pytest.mark.parametrize("family, s", [(H1, 1), (H2, 2)], ids=["h1", "h2"])
def test_tensor_orthonormality(family, s):
    c = build_cross(s, 2, m=40)
    assert np.max(np.abs(_tensor_gram(family, c) - np.eye(40))) <= 1e-7


def test_tensor_basis_object():
    c = build_cross(2, 5, m=100)
    b = TensorBasis("h2", c)
    assert b.size == b.m == 100 and b.dimension == 5
    V = b.evaluate(np.random.default_rng(0).random((7, 5)))
    assert V.shape == (7, 100)
    assert b.leading(10).cross == c.prefix(10)
    with pytest.raises(ValueError):
        b.evaluate(np.zeros((3, 4)))


def test_serialisation_roundtrip(tmp_path):
    c = build_cross(1, 3, 5.3e-5)
    text = cross_to_text(c)
    lines = text.strip().splitlines()
    assert lines[0].startswith("# s=1 d=3 R=")
    assert len(lines) == len(c) + 1
    back = cross_from_text(text)
    assert back == c
    np.testing.assert_array_equal(back.weights, c.weights)
    save_cross(c, tmp_path / "c.txt")
    assert load_cross(tmp_path / "c.txt") == c


def test_serialisation_rejects_bad_header():
    with pytest.raises(ValueError):
        cross_from_text("0 0\n1 0\n")
    with pytest.raises(ValueError):
        cross_from_text("# s=1 d=2 R=0.1\n0 0 0\n")


def test_five_d_build_is_fast():
    import time

    t0 = time.perf_counter()
    c = build_cross(2, 5, m=1024)
    assert time.perf_counter() - t0 < 2.0
    assert len(c) == 1024 and c.indices.shape == (1024, 5)


def test_kmax_and_hash():
    c = build_cross(1, 2, m=20)
    assert c.kmax.shape == (2,)
    assert hash(c) == hash(build_cross(1, 2, m=20))
    assert len({c, build_cross(1, 2, m=20)}) == 1
