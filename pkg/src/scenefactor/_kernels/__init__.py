"""Hot-loop kernels with a compiled core and a NumPy fallback.

The spiking simulator's binding stage steps every neuron through
``n_cycles * n_steps`` integer timesteps; that loop dominates simulation
time and is the one piece worth compiling.  At import we pick the native
extension if it was built, unless ``SCENEFACTOR_FORCE_FALLBACK=1`` is set
(used by tests and the kernel benchmark to compare both paths).  Both
implementations are step-for-step identical, so the choice never changes
results, only speed.
"""

import os

from . import fallback


def _load_native():
    if os.environ.get("SCENEFACTOR_FORCE_FALLBACK") == "1":
        return None
    try:
        from . import _native
    except ImportError:
        return None
    return _native


_native_module = _load_native()

if _native_module is not None:
    BACKEND = "native"
    bind_cycle_loop = _native_module.bind_cycle_loop
else:
    BACKEND = "python"
    bind_cycle_loop = fallback.bind_cycle_loop


def available_backends() -> dict:
    """Importable implementations, keyed by name (for benchmarks/tests)."""
    out = {"python": fallback}
    try:
        from . import _native
        out["native"] = _native
    except ImportError:
        pass
    return out
