"""DP kernels: compiled core when built, numpy fallback otherwise.

Set ``MALIGN_KERNELS=python`` to force the fallback.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("MALIGN_KERNELS", "").lower() in ("python", "py", "fallback"):
    compiled = None
else:
    try:
        from . import _dpcore as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else _fallback
BACKEND = "cython" if compiled is not None else "python"

align_dp = _impl.align_dp
chain_dp = _impl.chain_dp

__all__ = ["BACKEND", "align_dp", "chain_dp", "compiled", "fallback"]
