"""Pure-NumPy reference implementations of the compiled kernels.

These define the behavior; the native module must match them exactly
(same spike times, same event counts), which the test suite asserts
whenever the extension is available.
"""

import numpy as np


def bind_cycle_loop(
    t0: np.ndarray,
    t1: np.ndarray,
    n_steps: int,
    n_cycles: int,
    bind_mode: bool,
) -> tuple:
    """Run a population of binding neurons for ``n_cycles`` input cycles.

    ``t0``/``t1`` are per-neuron input spike times (-1 = silent) repeating
    every cycle.  The membrane follows v' = v + 1 - v*s0 - clock*s1 and a
    threshold crossing at ``n_steps`` emits the overshoot-corrected stamp
    (tau + 1 - (v' - n_steps)) mod n_steps, then resets.  Returns the
    last-cycle stamps for neurons with both inputs (-1 otherwise) and the
    total number of threshold crossings among those neurons.
    """
    t0 = np.asarray(t0, dtype=np.int64)
    t1 = np.asarray(t1, dtype=np.int64)
    T = int(n_steps)
    live = (t0 >= 0) & (t1 >= 0)
    v = np.zeros(t0.shape[0], dtype=np.int64)
    out = np.full(t0.shape[0], -1, dtype=np.int64)
    n_fired = 0
    for tau in range(n_cycles * T):
        phase = tau % T
        clock = (phase - T) if bind_mode else -phase
        s0 = t0 == phase
        s1 = t1 == phase
        v_new = v + 1 - np.where(s0, v, 0) - np.where(s1, clock, 0)
        fired = v_new >= T
        if fired.any():
            stamp = (tau + 1 - (v_new - T)) % T
            if tau >= (n_cycles - 1) * T:
                out[fired & live] = stamp[fired & live]
            n_fired += int(np.count_nonzero(fired & live))
            v_new[fired] = 0
        v = v_new
    return out, n_fired
