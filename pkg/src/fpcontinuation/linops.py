"""Linear operators on flat real vectors.

Everything here works on 1-D float arrays; image-shaped operators carry the
2-D shape they reshape to internally. Boundary handling is periodic for both
the blur and the wavelet transform so that adjoints are exact.
"""

import logging

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, NonConvergenceError

logger = logging.getLogger(__name__)

__all__ = [
    "LinearOperator",
    "identity",
    "diagonal",
    "matrix_operator",
    "compose",
    "conv2d_periodic",
    "conv2d_periodic_adjoint",
    "convolution_operator",
    "gaussian_kernel",
    "DB3_LOWPASS",
    "DB3_HIGHPASS",
    "dwt_forward",
    "dwt_inverse",
    "wavelet_operator",
    "power_iteration",
    "operator_norm_sq",
    "LIPSCHITZ_SAFETY",
]

# Multiplier applied to power-iteration estimates of ||A||^2 before they are
# turned into a step size.
LIPSCHITZ_SAFETY = 1.01


class LinearOperator:
    """A linear map ``R^in_dim -> R^out_dim`` given by an apply/adjoint pair.

    Instances are immutable. ``op(x)`` applies the operator, ``op.H`` is the
    adjoint operator and ``outer @ inner`` composes.
    """

    __slots__ = ("_apply", "_adjoint", "in_dim", "out_dim", "name")

    def __init__(self, apply, adjoint, in_dim, out_dim, name="op"):
        if int(in_dim) <= 0 or int(out_dim) <= 0:
            raise ConfigurationError("operator dimensions must be positive")
        object.__setattr__(self, "_apply", apply)
        object.__setattr__(self, "_adjoint", adjoint)
        object.__setattr__(self, "in_dim", int(in_dim))
        object.__setattr__(self, "out_dim", int(out_dim))
        object.__setattr__(self, "name", name)

    def __setattr__(self, key, value):
        raise AttributeError("LinearOperator is immutable")

    def __repr__(self):
        return f"LinearOperator({self.name}, {self.out_dim}x{self.in_dim})"

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.in_dim,):
            raise ConfigurationError(
                f"{self.name}: expected vector of length {self.in_dim}, got shape {x.shape}")
        return self._apply(x)

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.out_dim,):
            raise ConfigurationError(
                f"{self.name}*: expected vector of length {self.out_dim}, got shape {y.shape}")
        return self._adjoint(y)

    __call__ = apply

    @property
    def H(self):
        return LinearOperator(self._adjoint, self._apply, self.out_dim, self.in_dim,
                              name=f"{self.name}*")

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            return compose(self, other)
        return NotImplemented

    def to_dense(self):
        """Dense matrix of the operator (small sizes only)."""
        eye = np.eye(self.in_dim)
        return np.column_stack([self.apply(e) for e in eye])


def identity(dim):
    return LinearOperator(lambda x: x.copy(), lambda y: y.copy(), dim, dim, name="I")


def diagonal(d):
    d = np.asarray(d, dtype=float).ravel()
    return LinearOperator(lambda x: d * x, lambda y: d * y, d.size, d.size, name="diag")


def matrix_operator(M):
    M = np.array(M, dtype=float)
    return LinearOperator(lambda x: M @ x, lambda y: M.T @ y, M.shape[1], M.shape[0],
                          name="M")


def compose(outer, inner):
    """Return ``outer o inner``, whose adjoint is ``inner* o outer*``."""
    if inner.out_dim != outer.in_dim:
        raise ConfigurationError(
            f"cannot compose {outer!r} after {inner!r}: "
            f"{inner.out_dim} != {outer.in_dim}")
    return LinearOperator(
        lambda x: outer._apply(inner._apply(x)),
        lambda y: inner._adjoint(outer._adjoint(y)),
        inner.in_dim, outer.out_dim,
        name=f"{outer.name}.{inner.name}",
    )


# --------------------------------------------------------------------------
# Periodic convolution
# --------------------------------------------------------------------------

def _check_kernel(image_shape, kernel):
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ConfigurationError(f"kernel must be square 2-D, got shape {kernel.shape}")
    if kernel.shape[0] % 2 == 0:
        raise ConfigurationError("kernel side must be odd")
    if len(image_shape) != 2:
        raise ConfigurationError(f"image must be 2-D, got shape {image_shape}")
    if kernel.shape[0] > min(image_shape):
        raise ConfigurationError(
            f"kernel {kernel.shape} does not fit image {image_shape}")
    return kernel


def conv2d_periodic(image, kernel):
    """Circular 2-D convolution with a centred odd-sized kernel.

    ``out[i, j] = sum_{a,b} kernel[a, b] * image[(i - a + c) % H, (j - b + c) % W]``
    with ``c = k // 2``.
    """
    image = np.asarray(image, dtype=float)
    kernel = _check_kernel(image.shape, kernel)
    return ndimage.convolve(image, kernel, mode="wrap")


def conv2d_periodic_adjoint(image, kernel):
    """Adjoint of :func:`conv2d_periodic`: convolution with the point-reflected kernel."""
    image = np.asarray(image, dtype=float)
    kernel = _check_kernel(image.shape, kernel)
    return ndimage.convolve(image, kernel[::-1, ::-1], mode="wrap")


def convolution_operator(kernel, shape):
    """Periodic blur on images of ``shape`` as a :class:`LinearOperator`."""
    shape = tuple(int(s) for s in shape)
    kernel = _check_kernel(shape, kernel).copy()
    n = shape[0] * shape[1]
    terms = _separable_terms(kernel)
    if terms is None:
        flipped = kernel[::-1, ::-1].copy()

        def apply(x):
            return ndimage.convolve(x.reshape(shape), kernel, mode="wrap").ravel()

        def adjoint(y):
            return ndimage.convolve(y.reshape(shape), flipped, mode="wrap").ravel()
    else:
        # low-rank kernel: sum_r C(u_r) X C(v_r)^T with circulant C
        mats = [(_circulant(u, shape[0]), _circulant(v, shape[1])) for u, v in terms]

        def apply(x):
            X = x.reshape(shape)
            out = sum(Cu @ X @ Cv.T for Cu, Cv in mats)
            return out.ravel()

        def adjoint(y):
            Y = y.reshape(shape)
            out = sum(Cu.T @ Y @ Cv for Cu, Cv in mats)
            return out.ravel()

    return LinearOperator(apply, adjoint, n, n, name="A")


def _separable_terms(kernel, max_rank=2):
    """Rank-split ``kernel = sum_r outer(u_r, v_r)``, or None if the rank exceeds ``max_rank``."""
    U, s, Vt = np.linalg.svd(kernel)
    rank = int(np.sum(s > 1e-13 * s[0])) if s[0] > 0 else 0
    if rank == 0 or rank > max_rank:
        return None
    return [(U[:, r] * np.sqrt(s[r]), Vt[r] * np.sqrt(s[r])) for r in range(rank)]


def _circulant(taps, n):
    """Matrix of 1-D periodic convolution with centred ``taps`` on length ``n``."""
    k = taps.size
    c = k // 2
    C = np.zeros((n, n))
    rows = np.arange(n)
    for a in range(k):
        np.add.at(C, (rows, (rows - a + c) % n), taps[a])
    return C


def gaussian_kernel(size=5, sigma=1.0):
    """Normalised ``size x size`` Gaussian taps (sum 1)."""
    if size % 2 == 0 or size < 1:
        raise ConfigurationError("kernel size must be a positive odd integer")
    r = np.arange(size) - size // 2
    g = np.exp(-0.5 * (r / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


# --------------------------------------------------------------------------
# Orthogonal Daubechies-3 wavelet transform, periodic boundary
# --------------------------------------------------------------------------

# Scaling (low-pass) analysis filter, 6 taps, sum sqrt(2).
DB3_LOWPASS = np.array([
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
])
# Quadrature mirror: g[m] = (-1)^m h[5 - m].
DB3_HIGHPASS = DB3_LOWPASS[::-1] * np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])

_TAPS = DB3_LOWPASS.size
_matrix_cache = {}


def _analysis_matrix(n):
    """One-level periodic analysis as an ``n x n`` orthogonal matrix.

    Row ``k`` (``k < n/2``) holds the low-pass taps at columns ``2k .. 2k+5``
    (mod n); row ``n/2 + k`` the high-pass taps.
    """
    M = _matrix_cache.get(n)
    if M is None:
        M = np.zeros((n, n))
        rows = np.arange(n // 2)
        for m in range(_TAPS):
            cols = (2 * rows + m) % n
            np.add.at(M, (rows, cols), DB3_LOWPASS[m])
            np.add.at(M, (rows + n // 2, cols), DB3_HIGHPASS[m])
        M.setflags(write=False)
        _matrix_cache[n] = M
    return M


def _check_levels(shape, levels):
    if levels < 0:
        raise ConfigurationError("levels must be non-negative")
    for s in shape:
        if s % (2 ** levels) != 0 or s == 0:
            raise ConfigurationError(
                f"dimension {s} is not divisible by 2**{levels}")


def _as_grid(v, shape):
    v = np.asarray(v, dtype=float)
    if shape is None:
        if v.ndim not in (1, 2):
            raise ConfigurationError("wavelet transform supports 1-D or 2-D data")
        return v, v.shape
    shape = tuple(int(s) for s in shape)
    if v.size != int(np.prod(shape)):
        raise ConfigurationError(f"vector of length {v.size} does not match shape {shape}")
    return v.reshape(shape), v.shape


def dwt_forward(v, levels=3, shape=None):
    """Forward orthogonal db3 transform with periodic extension.

    Parameters
    ----------
    v : array
        1-D signal, 2-D image, or flat vector together with ``shape``.
    levels : int
        Number of decomposition levels; every dimension must be divisible
        by ``2**levels``.
    shape : tuple, optional
        Grid shape used to interpret a flat ``v``.

    Returns
    -------
    array
        Coefficients in the same layout as ``v`` (Mallat ordering: the
        approximation band sits in the leading corner).

    Notes
    -----
    2-D data are transformed separably, rows first and then columns, and
    only the approximation block is split again at the next level.
    """
    grid, out_shape = _as_grid(v, shape)
    _check_levels(grid.shape, levels)
    c = grid.copy()
    if c.ndim == 1:
        n = c.shape[0]
        for _ in range(levels):
            c[:n] = _analysis_matrix(n) @ c[:n]
            n //= 2
    else:
        h, w = c.shape
        for _ in range(levels):
            # rows first, then columns
            c[:h, :w] = _analysis_matrix(h) @ (c[:h, :w] @ _analysis_matrix(w).T)
            h //= 2
            w //= 2
    return c.reshape(out_shape)


def dwt_inverse(coeffs, levels=3, shape=None):
    """Inverse of :func:`dwt_forward`; equal to its adjoint."""
    grid, out_shape = _as_grid(coeffs, shape)
    _check_levels(grid.shape, levels)
    c = grid.copy()
    if c.ndim == 1:
        n = c.shape[0] // 2 ** (levels - 1) if levels else c.shape[0]
        for _ in range(levels):
            c[:n] = _analysis_matrix(n).T @ c[:n]
            n *= 2
    else:
        h, w = (s // 2 ** (levels - 1) if levels else s for s in c.shape)
        for _ in range(levels):
            c[:h, :w] = _analysis_matrix(h).T @ c[:h, :w] @ _analysis_matrix(w)
            h *= 2
            w *= 2
    return c.reshape(out_shape)


def wavelet_operator(shape, levels=3):
    """W (analysis) as a :class:`LinearOperator` on flattened images; ``W.H`` synthesises."""
    shape = tuple(int(s) for s in shape)
    _check_levels(shape, levels)
    n = int(np.prod(shape))
    return LinearOperator(
        lambda x: dwt_forward(x, levels, shape),
        lambda y: dwt_inverse(y, levels, shape),
        n, n, name="W",
    )


# --------------------------------------------------------------------------
# Spectral norm
# --------------------------------------------------------------------------

def power_iteration(op, tol=1e-9, max_iter=10_000, seed=0):
    """Power iteration on ``op* op``.

    Returns the final Rayleigh quotient ``||op x||^2 / ||x||^2`` and the list
    of all intermediate quotients. Raises :class:`NonConvergenceError`
    (carrying the last estimate) if the relative change never drops below
    ``tol``.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.in_dim)
    x /= np.linalg.norm(x)
    history = []
    prev = None
    for _ in range(max_iter):
        y = op.apply(x)
        est = float(y @ y)
        history.append(est)
        if prev is not None and abs(est - prev) <= tol * abs(est):
            return est, history
        prev = est
        z = op.adjoint(y)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0, history
        x = z / nz
    raise NonConvergenceError(
        f"power iteration did not reach tol={tol} in {max_iter} iterations",
        estimate=prev)


def operator_norm_sq(op, tol=1e-9, max_iter=10_000, seed=0):
    """Estimate ``||op||_2^2`` by power iteration."""
    est, history = power_iteration(op, tol=tol, max_iter=max_iter, seed=seed)
    logger.debug("||%s||^2 ~ %.12g after %d iterations", op.name, est, len(history))
    return est
