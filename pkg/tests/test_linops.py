import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpcontinuation.errors import ConfigurationError, NonConvergenceError
from fpcontinuation.linops import (DB3_HIGHPASS, DB3_LOWPASS, LinearOperator, compose,
                                   conv2d_periodic, conv2d_periodic_adjoint,
                                   convolution_operator, diagonal, dwt_forward, dwt_inverse,
                                   gaussian_kernel, identity, operator_norm_sq,
                                   power_iteration, wavelet_operator)

from conftest import filter_bank_1level, naive_conv2d_periodic


def adjoint_error(op, rng, pairs=100):
    worst = 0.0
    for _ in range(pairs):
        x = rng.standard_normal(op.in_dim)
        y = rng.standard_normal(op.out_dim)
        lhs = op(x) @ y
        rhs = x @ op.adjoint(y)
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)))
    return worst


def circulant_norm_sq(kernel, shape):
    # eigenvalues of periodic convolution are the DFT of the wrapped kernel
    k = kernel.shape[0]
    c = k // 2
    emb = np.zeros(shape)
    for a in range(k):
        for b in range(k):
            emb[(a - c) % shape[0], (b - c) % shape[1]] += kernel[a, b]
    return float(np.max(np.abs(np.fft.fft2(emb)) ** 2))


# ---------------------------------------------------------------- filters

def test_db3_filters_orthonormal():
    h, g = DB3_LOWPASS, DB3_HIGHPASS
    assert h @ h == pytest.approx(1.0, abs=1e-15)
    assert g @ g == pytest.approx(1.0, abs=1e-15)
    assert h.sum() == pytest.approx(np.sqrt(2.0), abs=1e-15)
    # orthogonality to even shifts
    for s in (2, 4):
        assert h[s:] @ h[:-s] == pytest.approx(0.0, abs=1e-15)
        assert g[s:] @ g[:-s] == pytest.approx(0.0, abs=1e-15)
    for s in (0, 2, 4):
        assert h[s:] @ g[:len(g) - s] == pytest.approx(0.0, abs=1e-15)
        assert g[s:] @ h[:len(h) - s] == pytest.approx(0.0, abs=1e-15)


def test_db3_highpass_vanishing_moments():
    m = np.arange(6.0)
    for p in range(3):
        assert DB3_HIGHPASS @ m ** p == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------- convolution

def test_conv_delta_kernel_is_identity():
    x = np.random.default_rng(0).standard_normal((8, 8))
    k = np.zeros((3, 3))
    k[1, 1] = 1.0
    np.testing.assert_array_equal(conv2d_periodic(x, k), x)


def test_conv_constant_image_scales_by_tap_sum():
    k = np.random.default_rng(1).uniform(size=(5, 5))
    out = conv2d_periodic(np.full((8, 8), 0.7), k)
    np.testing.assert_allclose(out, 0.7 * k.sum(), rtol=1e-14)


def test_conv_single_pixel_wraps():
    x = np.zeros((4, 4))
    x[0, 0] = 1.0
    k = np.full((3, 3), 1.0 / 9.0)
    out = conv2d_periodic(x, k)
    expected = naive_conv2d_periodic(x, k)
    np.testing.assert_allclose(out, expected, atol=1e-15)
    patch = {(i % 4, j % 4) for i in (-1, 0, 1) for j in (-1, 0, 1)}
    for i in range(4):
        for j in range(4):
            assert out[i, j] == pytest.approx(1 / 9 if (i, j) in patch else 0.0, abs=1e-15)


@pytest.mark.parametrize("n,k", [(5, 3), (8, 5), (12, 5), (16, 5), (16, 7)])
def test_conv_matches_naive_oracle(n, k):
    rng = np.random.default_rng(n * 10 + k)
    x = rng.standard_normal((n, n))
    ker = rng.standard_normal((k, k))
    np.testing.assert_allclose(conv2d_periodic(x, ker), naive_conv2d_periodic(x, ker), atol=1e-12)
    # operator form, general (non-separable) path
    op = convolution_operator(ker, (n, n))
    np.testing.assert_allclose(op(x.ravel()).reshape(n, n), naive_conv2d_periodic(x, ker),
                               atol=1e-12)


@pytest.mark.parametrize("n", [8, 16])
def test_separable_conv_operator_matches_naive_oracle(n):
    x = np.random.default_rng(n).standard_normal((n, n))
    ker = gaussian_kernel(5, 1.0)
    op = convolution_operator(ker, (n, n))
    np.testing.assert_allclose(op(x.ravel()).reshape(n, n), naive_conv2d_periodic(x, ker),
                               atol=1e-12)


def test_conv_adjoint_is_flipped_kernel():
    rng = np.random.default_rng(3)
    ker = rng.standard_normal((5, 5))
    x, y = rng.standard_normal((2, 9, 9))
    assert np.sum(conv2d_periodic(x, ker) * y) == pytest.approx(
        np.sum(x * conv2d_periodic_adjoint(y, ker)), rel=1e-12)


@pytest.mark.parametrize("kernel", [gaussian_kernel(5, 1.0),
                                    np.random.default_rng(9).standard_normal((5, 5))],
                         ids=["separable", "general"])
def test_conv_operator_adjoint(kernel):
    op = convolution_operator(kernel, (16, 12))
    assert adjoint_error(op, np.random.default_rng(0)) <= 1e-10


def test_conv_rejects_bad_kernels():
    with pytest.raises(ConfigurationError):
        conv2d_periodic(np.zeros((8, 8)), np.ones((4, 4)))
    with pytest.raises(ConfigurationError):
        conv2d_periodic(np.zeros((4, 4)), np.ones((5, 5)))
    with pytest.raises(ConfigurationError):
        convolution_operator(np.ones((3, 3)), (8, 8))(np.zeros(10))


def test_gaussian_kernel_normalised():
    k = gaussian_kernel(5, 1.0)
    assert k.shape == (5, 5)
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(k, k[::-1, ::-1])


# ---------------------------------------------------------------- wavelets

def test_dwt_zero():
    np.testing.assert_array_equal(dwt_forward(np.zeros((16, 16)), 3), 0.0)
    np.testing.assert_array_equal(dwt_inverse(np.zeros(64), 2), 0.0)


@pytest.mark.parametrize("shape,levels", [((64,), 1), ((64,), 4), ((16, 16), 1),
                                          ((16, 16), 3), ((32, 32), 3), ((16, 32), 2),
                                          ((8, 8), 3)])
def test_dwt_orthogonal_and_invertible(shape, levels):
    rng = np.random.default_rng(sum(shape) + levels)
    for _ in range(5):
        v = rng.standard_normal(shape)
        c = dwt_forward(v, levels)
        assert c.shape == v.shape
        assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(v), rel=1e-10)
        back = dwt_inverse(c, levels)
        assert np.linalg.norm(back - v) / np.linalg.norm(v) <= 1e-10


def test_dwt_one_level_matches_filter_bank_oracle():
    x = np.random.default_rng(5).standard_normal(32)
    a, d = filter_bank_1level(x, DB3_LOWPASS, DB3_HIGHPASS)
    np.testing.assert_allclose(dwt_forward(x, 1), np.concatenate([a, d]), atol=1e-14)


def test_dwt_2d_is_rows_then_columns():
    x = np.random.default_rng(6).standard_normal((8, 16))
    rows = np.array([np.concatenate(filter_bank_1level(r, DB3_LOWPASS, DB3_HIGHPASS)) for r in x])
    both = np.array([np.concatenate(filter_bank_1level(c, DB3_LOWPASS, DB3_HIGHPASS))
                     for c in rows.T]).T
    np.testing.assert_allclose(dwt_forward(x, 1), both, atol=1e-14)


def test_dwt_constant_signal_has_no_detail():
    c = dwt_forward(np.full(16, 3.0), 1)
    a, d = filter_bank_1level(np.full(16, 3.0), DB3_LOWPASS, DB3_HIGHPASS)
    np.testing.assert_allclose(c[8:], 0.0, atol=1e-14)
    np.testing.assert_allclose(d, 0.0, atol=1e-14)
    np.testing.assert_allclose(c[:8], a, atol=1e-14)


def test_dwt_flat_vector_with_shape():
    v = np.random.default_rng(2).standard_normal(256)
    np.testing.assert_allclose(dwt_forward(v, 3, shape=(16, 16)),
                               dwt_forward(v.reshape(16, 16), 3).ravel())


def test_dwt_rejects_non_divisible():
    with pytest.raises(ConfigurationError):
        dwt_forward(np.zeros((12, 12)), 3)
    with pytest.raises(ConfigurationError):
        dwt_inverse(np.zeros(20), 3)
    with pytest.raises(ConfigurationError):
        wavelet_operator((24, 20), 3)


def test_wavelet_operator_adjoint_equals_inverse():
    W = wavelet_operator((16, 16), 3)
    rng = np.random.default_rng(8)
    assert adjoint_error(W, rng) <= 1e-10
    y = rng.standard_normal(256)
    np.testing.assert_allclose(W.adjoint(y), dwt_inverse(y, 3, shape=(16, 16)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_wavelet_roundtrip_property(levels, seed):
    v = np.random.default_rng(seed).standard_normal((32, 16))
    assert np.abs(dwt_inverse(dwt_forward(v, levels), levels) - v).max() <= 1e-10


# ---------------------------------------------------------------- composition

def test_compose_identity():
    v = np.arange(5.0)
    np.testing.assert_array_equal(compose(identity(5), identity(5))(v), v)


def test_compose_diagonals():
    op = compose(diagonal([2.0]), diagonal([3.0]))
    np.testing.assert_array_equal(op(np.array([1.0])), [6.0])
    assert (diagonal([2.0]) @ diagonal([3.0]))(np.array([1.0]))[0] == 6.0


def test_compose_blur_synthesis_adjoint():
    A = convolution_operator(gaussian_kernel(), (16, 16))
    W = wavelet_operator((16, 16), 3)
    assert adjoint_error(A @ W.H, np.random.default_rng(4)) <= 1e-10


def test_compose_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        compose(identity(3), identity(4))


def test_operator_is_immutable():
    op = identity(3)
    with pytest.raises(AttributeError):
        op.in_dim = 4


def test_to_dense_and_adjoint_transpose():
    M = np.random.default_rng(0).standard_normal((4, 3))
    op = LinearOperator(lambda x: M @ x, lambda y: M.T @ y, 3, 4)
    np.testing.assert_allclose(op.to_dense(), M)
    np.testing.assert_allclose(op.H.to_dense(), M.T)


# ---------------------------------------------------------------- norms

def test_norm_identity():
    assert operator_norm_sq(identity(10)) == pytest.approx(1.0, rel=1e-12)


def test_norm_diagonal():
    assert operator_norm_sq(diagonal([1.0, 2.0, 3.0])) == pytest.approx(9.0, rel=1e-8)


@pytest.mark.parametrize("kernel", [gaussian_kernel(5, 1.0),
                                    np.random.default_rng(11).uniform(size=(5, 5))],
                         ids=["gaussian", "random-nonneg"])
def test_norm_matches_circulant_spectrum(kernel):
    kernel = kernel / kernel.sum()
    op = convolution_operator(kernel, (16, 16))
    exact = circulant_norm_sq(kernel, (16, 16))
    assert exact == pytest.approx(1.0, rel=1e-12)
    assert operator_norm_sq(op) == pytest.approx(exact, rel=1e-6)


def test_norm_signed_kernel_matches_circulant_spectrum():
    kernel = np.random.default_rng(12).standard_normal((5, 5))
    op = convolution_operator(kernel, (16, 16))
    assert operator_norm_sq(op, max_iter=100_000) == pytest.approx(
        circulant_norm_sq(kernel, (16, 16)), rel=1e-6)


def test_power_iteration_monotone():
    kernel = np.random.default_rng(13).standard_normal((5, 5))
    _, hist = power_iteration(convolution_operator(kernel, (16, 16)), max_iter=100_000)
    assert np.all(np.diff(hist) >= -1e-12 * max(hist))


def test_power_iteration_reports_last_estimate():
    with pytest.raises(NonConvergenceError) as info:
        power_iteration(diagonal([1.0, 0.999, 0.5]), tol=1e-15, max_iter=3)
    assert info.value.estimate is not None and info.value.estimate > 0
