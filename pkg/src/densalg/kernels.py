"""Kernel selection: compiled extension when importable, else pure Python.

Set ``DENSALG_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"

if not os.environ.get("DENSALG_PURE_PYTHON"):
    try:
        from densalg._kernels import (  # noqa: F401
            grassmann_product,
            insert_sign,
            koszul_sign,
            odd_derivative,
            popcount,
        )

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from densalg._kernels_py import (  # noqa: F401
        grassmann_product,
        insert_sign,
        koszul_sign,
        odd_derivative,
        popcount,
    )
