"""Hot-path kernels with backend selection at import time.

Prefers the compiled Cython extension; falls back to the pure
Python/numpy implementation when the extension is unavailable or when
ONTORAG_PURE_KERNELS=1 is set. ``BACKEND`` reports which one is active.
"""

import os

if os.environ.get("ONTORAG_PURE_KERNELS") == "1":
    from ontorag._kernels.fallback import rowwise_dot, trigram_bucket_counts

    BACKEND = "fallback"
else:
    try:
        from ontorag._kernels._ckern import rowwise_dot, trigram_bucket_counts

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build environment
        from ontorag._kernels.fallback import rowwise_dot, trigram_bucket_counts

        BACKEND = "fallback"

__all__ = ["BACKEND", "rowwise_dot", "trigram_bucket_counts"]
