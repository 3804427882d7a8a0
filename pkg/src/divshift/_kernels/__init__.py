"""Kernel dispatch: compiled Cython sieves when built, numpy fallback otherwise.

Set DIVSHIFT_PURE=1 in the environment to force the fallback (used by the
benchmark and by tests that exercise both code paths).
"""

import os

if os.environ.get("DIVSHIFT_PURE"):
    from . import pysieve as _impl

    BACKEND = "python"
else:
    try:
        from . import _csieve as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import pysieve as _impl

        BACKEND = "python"

dirichlet_pass_int64 = _impl.dirichlet_pass_int64
dirichlet_pass_float64 = _impl.dirichlet_pass_float64
spf_sieve = _impl.spf_sieve
mobius_sieve = _impl.mobius_sieve
phi_sieve = _impl.phi_sieve
