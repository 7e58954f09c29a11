"""Blur and wavelet operators used by the deblurring problem.

Checks the properties the solver relies on: the wavelet transform is
orthogonal, the periodic blur has the adjoint we claim, and the power
iteration recovers ||A||^2, which for a circulant operator is the peak of
the squared kernel spectrum.
"""

import numpy as np

from fpcontinuation.linops import (convolution_operator, dwt_forward, dwt_inverse,
                                   gaussian_kernel, operator_norm_sq, wavelet_operator)

rng = np.random.default_rng(0)
shape = (32, 32)

W = wavelet_operator(shape, levels=3)
x = rng.standard_normal(shape)
c = dwt_forward(x, 3)
print("wavelet energy ratio", np.linalg.norm(c) / np.linalg.norm(x))
print("roundtrip error     ", np.abs(dwt_inverse(c, 3) - x).max())

k = rng.standard_normal((5, 5))
A = convolution_operator(k, shape)
u, v = rng.standard_normal((2, A.in_dim))
print("adjoint defect      ", abs(A(u) @ v - u @ A.adjoint(v)))

padded = np.zeros(shape)
for a in range(5):
    for b in range(5):
        padded[(a - 2) % 32, (b - 2) % 32] = k[a, b]
print("||A||^2 power iter  ", operator_norm_sq(A, tol=1e-12))
print("||A||^2 spectrum    ", np.abs(np.fft.fft2(padded)).max() ** 2)

# a normalised Gaussian keeps the DC gain, so ||A|| = 1
print("gaussian ||A||^2    ", operator_norm_sq(convolution_operator(gaussian_kernel(), shape)))
