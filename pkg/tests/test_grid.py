import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circular_convolution, naive_dft2, spatial_correlation
from strcf.errors import DimMismatch, SymmetryViolation
from strcf.grid import as_multichannel, correlate, dft2, hadamard, idft2


def test_dft2_constant_grid():
    X = dft2(np.ones((2, 2)))
    expected = np.zeros((2, 2), dtype=complex)
    expected[0, 0] = 4
    np.testing.assert_array_equal(X, expected)


def test_dft2_delta_is_flat():
    x = np.zeros((4, 4))
    x[0, 0] = 1
    np.testing.assert_allclose(dft2(x), np.ones((4, 4)), atol=0)


def test_dft2_matches_naive_sum(rng):
    x = rng.standard_normal((8, 8))
    ref = naive_dft2(x)
    assert np.max(np.abs(dft2(x) - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_dft2_dc_is_sum(rng):
    x = rng.standard_normal((5, 7))
    assert dft2(x)[0, 0] == pytest.approx(x.sum(), rel=1e-12)


def test_round_trip(rng):
    x = rng.standard_normal((8, 8))
    np.testing.assert_allclose(idft2(dft2(x)), x, rtol=0, atol=1e-12 * np.max(np.abs(x)))


def test_idft2_zero():
    np.testing.assert_array_equal(idft2(np.zeros((3, 4), dtype=complex)), np.zeros((3, 4)))


def test_shift_round_trip():
    x = np.zeros((6, 5))
    x[2, 3] = 1
    back = idft2(dft2(x))
    assert np.unravel_index(np.argmax(back), back.shape) == (2, 3)
    np.testing.assert_allclose(back, x, atol=1e-14)


def test_idft2_rejects_non_hermitian():
    G = np.zeros((4, 4), dtype=complex)
    G[0, 1] = 1.0  # no conjugate partner at (0, 3)
    with pytest.raises(SymmetryViolation):
        idft2(G)


def test_hadamard_examples():
    a = np.array([[1 + 1j, 2 - 3j]])
    np.testing.assert_array_equal(hadamard(a, np.ones_like(a)), a)
    np.testing.assert_array_equal(
        hadamard(np.full((2, 2), 1 + 1j), np.full((2, 2), 1 - 1j)), np.full((2, 2), 2 + 0j)
    )
    with pytest.raises(DimMismatch):
        hadamard(np.ones((2, 2)), np.ones((2, 3)))


def test_hadamard_is_convolution_theorem(rng):
    x = rng.standard_normal((6, 5))
    k = rng.standard_normal((6, 5))
    ref = dft2(circular_convolution(x, k))
    np.testing.assert_allclose(hadamard(dft2(x), dft2(k)), ref, atol=1e-10 * np.max(np.abs(ref)))


def test_correlate_delta_filter(rng):
    x = rng.standard_normal((3, 5, 4))
    f = np.zeros_like(x)
    f[:, 0, 0] = 1
    # conj(xhat) * fhat reverses the sample index: r[n] = sum_d x_d[-n]
    reversed_sum = np.roll(x.sum(axis=0)[::-1, ::-1], (1, 1), axis=(0, 1))
    np.testing.assert_allclose(correlate(x, f), reversed_sum, atol=1e-12)
    assert correlate(x, f)[0, 0] == pytest.approx(x.sum(axis=0)[0, 0])


def test_correlate_delta_with_itself():
    d = np.zeros((5, 5))
    d[0, 0] = 1
    np.testing.assert_allclose(correlate(d, d), d, atol=1e-15)


def test_correlate_matches_spatial_oracle(rng):
    x = rng.standard_normal((2, 6, 6))
    f = rng.standard_normal((2, 6, 6))
    ref = spatial_correlation(x, f)
    assert np.max(np.abs(correlate(x, f) - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


def test_correlate_peak_convention():
    # a sample shifted by +s relative to the filter peaks at -s
    rng = np.random.default_rng(3)
    f = rng.standard_normal((1, 8, 8))
    x = np.roll(f, (2, 1), axis=(1, 2))
    r = correlate(x, f)
    assert np.unravel_index(np.argmax(r), r.shape) == ((-2) % 8, (-1) % 8)


def test_correlate_dim_mismatch():
    with pytest.raises(DimMismatch):
        correlate(np.ones((2, 4, 4)), np.ones((1, 4, 4)))
    with pytest.raises(DimMismatch):
        as_multichannel(np.ones(4))


@settings(max_examples=40, deadline=None)
@given(
    M=st.integers(1, 8),
    N=st.integers(1, 8),
    D=st.integers(1, 4),
    seed=st.integers(0, 2**32 - 1),
)
def test_correlate_agrees_on_all_small_dims(M, N, D, seed):
    g = np.random.default_rng(seed)
    x = g.standard_normal((D, M, N))
    f = g.standard_normal((D, M, N))
    ref = spatial_correlation(x, f)
    assert np.max(np.abs(correlate(x, f) - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


@settings(max_examples=40, deadline=None)
@given(M=st.integers(1, 16), N=st.integers(1, 16), seed=st.integers(0, 2**32 - 1))
def test_parseval(M, N, seed):
    x = np.random.default_rng(seed).standard_normal((M, N))
    lhs = np.sum(x ** 2) * M * N
    rhs = np.sum(np.abs(dft2(x)) ** 2)
    assert abs(lhs - rhs) <= 1e-10 * lhs


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.floats(-10, 10),
    beta=st.floats(-10, 10),
)
def test_dft2_linearity(seed, alpha, beta):
    g = np.random.default_rng(seed)
    a = g.standard_normal((6, 7))
    b = g.standard_normal((6, 7))
    lhs = dft2(alpha * a + beta * b)
    rhs = alpha * dft2(a) + beta * dft2(b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))
