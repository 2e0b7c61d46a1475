"""Chain-product kernel backend selection.

The compiled extension is preferred when present; setting ``DIFFQC_PURE=1``
in the environment forces the NumPy fallback (useful for benchmarking and
debugging). ``BACKEND`` names the active implementation.
"""

import os

from . import pure

BACKEND = "pure"

if os.environ.get("DIFFQC_PURE", "") != "1":
    try:
        from . import _fast as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = pure
else:
    _impl = pure

ordered_product = _impl.ordered_product
prefix_suffix = _impl.prefix_suffix
chain_states = _impl.chain_states
adjoint_states = _impl.adjoint_states

__all__ = [
    "BACKEND",
    "ordered_product",
    "prefix_suffix",
    "chain_states",
    "adjoint_states",
    "pure",
]
