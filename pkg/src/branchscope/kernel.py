"""Backend selection for the simulation kernel.

The compiled ``_ckernel`` is used when it imports; ``BRANCHSCOPE_PURE=1``
forces the pure-Python fallback.  Both expose ``simulate`` and
``sample_pairs`` with identical, bitwise-reproducible output.
"""

import os

from . import _pykernel

python_kernel = _pykernel

compiled_kernel = None
if not os.environ.get("BRANCHSCOPE_PURE"):
    try:
        from . import _ckernel as compiled_kernel
    except ImportError:  # extension not built
        compiled_kernel = None

active = compiled_kernel if compiled_kernel is not None else python_kernel
BACKEND = active.BACKEND

STATUS_SURVIVED = _pykernel.STATUS_SURVIVED
STATUS_EXTINCT = _pykernel.STATUS_EXTINCT
STATUS_CAPPED = _pykernel.STATUS_CAPPED
ORDERS = {"event": _pykernel.ORDER_EVENT, "depth": _pykernel.ORDER_DEPTH}


def get(name=None):
    """Return a kernel module by backend name (``"cython"``/``"python"``)."""
    if name is None:
        return active
    if name == "python":
        return python_kernel
    if name == "cython":
        if compiled_kernel is None:
            raise ImportError("compiled kernel is not available")
        return compiled_kernel
    raise ValueError(f"unknown backend {name!r}")
