"""divshift: exact combinatorics and desk-scale numerics for smoothed
shifted convolutions of generalised divisor functions.

Subpackages are organised by subject matter:

- ``arith``       sieves, factorization, Ramanujan sums
- ``weights``     smooth compactly supported weights and quadrature
- ``sl2``         projective lines, congruence-coset enumeration, K-sums
- ``detmat``      determinant-equation solution counting
- ``mainterm``    singular series, Dirichlet series, main-term evaluation
- ``sums``        convolution sums, dyadic covers, the case classifier
- ``experiments`` end-to-end error-exponent experiments and the CLI backend
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
