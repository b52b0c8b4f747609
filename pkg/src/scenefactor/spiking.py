"""Discrete-time spiking phasor network.

Each complex vector element becomes one neuron whose single spike time
within a cycle of ``T`` timesteps encodes the element's phase.  Binding is
then integer arithmetic on spike times, cleanup is a synaptic memory whose
delayed sine-shaped potentials implement a complex matrix product, and a
gate stage enforces the one-spike-per-cycle discipline between modules.
Everything runs on an integer clock with no hidden randomness, so a
simulation is reproducible timestep by timestep.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fhrr import Codebook, Hypervector, phasor_project

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseCode:
    """Phase quantization contract: one cycle lasts ``n_steps`` timesteps."""

    n_steps: int = 16

    def __post_init__(self):
        if self.n_steps < 4:
            raise ValueError("cycle length must be at least 4 timesteps")

    @property
    def quantum(self) -> float:
        return TWO_PI / self.n_steps

    def quantize(self, z: np.ndarray) -> np.ndarray:
        """Snap phases to the code lattice, keeping unit magnitude."""
        steps = np.rint(self.n_steps * np.angle(z) / TWO_PI) % self.n_steps
        return np.exp(1j * TWO_PI * steps / self.n_steps)


@dataclass
class SpikeFrame:
    """Spike times for one population during one cycle; -1 marks silence."""

    times: np.ndarray
    cycle: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)

    @property
    def n_spikes(self) -> int:
        return int(np.count_nonzero(self.times >= 0))

    def events(self, module: str = "") -> list:
        return [
            (self.cycle, int(t), int(j), module)
            for j, t in enumerate(self.times)
            if t >= 0
        ]


def phase_to_spike(x: Hypervector, code: PhaseCode, cycle: int = 0) -> SpikeFrame:
    """Convert unit phasors to spike times: t_j = round(T * arg(x_j) / 2pi)."""
    times = np.rint(code.n_steps * np.angle(x) / TWO_PI).astype(np.int64)
    return SpikeFrame(times % code.n_steps, cycle)


def spike_to_phase(frame: SpikeFrame, code: PhaseCode) -> Hypervector:
    """Inverse map; silent neurons decode to 0 (no phase information)."""
    out = np.exp(1j * TWO_PI * frame.times / code.n_steps)
    out[frame.times < 0] = 0.0
    return out


# ---------------------------------------------------------------------------
# binding neurons


@dataclass
class BindingNeuron:
    """Integrate-and-fire neuron computing a phase sum or difference.

    The membrane follows

        v(t+1) = v(t) + 1 - v(t) s0(t) - c(t) s1(t)

    where ``s0`` re-references the neuron's phase (membrane reset to 1) and
    ``s1`` adds the cyclic clock value ``c(t)`` so the threshold crossing
    lands at the bound phase.  ``c`` counts through a cycle of negative
    values: over one period the bind clock runs -T..-1 and the unbind clock
    0..-(T-1), which makes the settled output spike time equal
    (t0 + t1) mod T respectively (t0 - t1) mod T under this module's
    phase-to-time convention.  A threshold crossing can overshoot when the
    clock kick arrives on the crossing step; the emitted timestamp backs
    the overshoot out so the modular arithmetic stays exact.
    """

    code: PhaseCode
    mode: str = "bind"
    v: int = 0
    t: int = 0

    def __post_init__(self):
        if self.mode not in ("bind", "unbind"):
            raise ValueError(f"unknown binding mode: {self.mode!r}")

    def clock(self) -> int:
        phase = self.t % self.code.n_steps
        if self.mode == "bind":
            return phase - self.code.n_steps
        return -phase


def binding_neuron_step(
    neuron: BindingNeuron, s0: bool = False, s1: bool = False
) -> tuple:
    """Advance one timestep; returns (neuron', output spike time or None)."""
    T = neuron.code.n_steps
    v_new = neuron.v + 1
    if s0:
        v_new -= neuron.v
    if s1:
        v_new -= neuron.clock()
    out = None
    if v_new >= T:
        overshoot = v_new - T
        out = (neuron.t + 1 - overshoot) % T
        v_new = 0
    return dataclasses.replace(neuron, v=v_new, t=neuron.t + 1), out


def bind_frames(
    frame0: SpikeFrame,
    frame1: SpikeFrame,
    code: PhaseCode,
    mode: str = "bind",
    n_cycles: int = 3,
    counter: "EventCounter | None" = None,
) -> SpikeFrame:
    """Run a population of binding neurons to settlement.

    Inputs repeat every cycle; the returned frame holds the last cycle's
    output spikes.  Neurons missing either input stay silent.  The
    timestep loop itself lives in :mod:`scenefactor._kernels` (compiled
    when available).
    """
    out, n_fired = _kernels.bind_cycle_loop(
        frame0.times, frame1.times, code.n_steps, n_cycles, mode == "bind"
    )
    if counter is not None:
        counter.add("binding", n_fired)
    return SpikeFrame(out, frame0.cycle + n_cycles)


# ---------------------------------------------------------------------------
# cleanup memory


def _biphasic_kernel(n_steps: int) -> np.ndarray:
    """Current kernel whose running sum reproduces one sine cycle exactly."""
    grid = TWO_PI * np.arange(n_steps + 1) / n_steps
    return np.diff(np.sin(grid))


@dataclass
class CleanupSynapseBank:
    """Complex matrix mapped to per-synapse (delay, amplitude) pairs.

    A spike arriving through synapse (j, k) at time t injects a biphasic
    current into neuron j starting ``delay[j, k]`` steps later; the
    membrane (the current's running sum) then traces
    amplitude * sin(2pi (t' - t - delay) / T).  Summed over synapses this
    realizes the complex product with the original matrix, with weight
    phases quantized to the delay grid.
    """

    delays: np.ndarray
    amplitudes: np.ndarray
    code: PhaseCode
    kernel: np.ndarray
    recurrent: bool = False

    @classmethod
    def from_matrix(
        cls,
        weights: np.ndarray,
        code: PhaseCode,
        prune_fraction: float = 0.0,
        recurrent: bool = False,
    ) -> "CleanupSynapseBank":
        if not 0.0 <= prune_fraction < 1.0:
            raise ValueError("prune_fraction must be in [0, 1)")
        amps = np.abs(weights).astype(np.float64)
        if prune_fraction > 0.0:
            cutoff = np.quantile(amps, prune_fraction)
            amps = np.where(amps >= cutoff, amps, 0.0)
        delays = np.rint(code.n_steps * np.angle(weights) / TWO_PI).astype(np.int64)
        delays %= code.n_steps
        return cls(delays, amps, code, _biphasic_kernel(code.n_steps), recurrent)

    @property
    def n_out(self) -> int:
        return self.delays.shape[0]


def membrane_trace(bank: CleanupSynapseBank, frame: SpikeFrame) -> np.ndarray:
    """Explicit two-cycle current simulation; returns (n_out, T) membranes.

    Used by tests to confirm the closed-form evaluation in
    ``cleanup_layer_step`` equals the stepped dynamics: currents injected
    at t_k + delay, each lasting one full cycle, membranes accumulated by
    running sum, steady-state window = second cycle.
    """
    T = bank.code.n_steps
    window = 4 * T
    current = np.zeros((bank.n_out, window))
    for k, t_k in enumerate(frame.times):
        if t_k < 0:
            continue
        col_amp = bank.amplitudes[:, k]
        col_delay = bank.delays[:, k]
        for rep in range(3):  # spikes repeat each cycle in steady input
            start = int(t_k) + rep * T
            for j in np.nonzero(col_amp)[0]:
                s = start + int(col_delay[j])
                end = min(s + T, window)
                current[j, s:end] += col_amp[j] * bank.kernel[: end - s]
    membrane = np.cumsum(current, axis=1)
    # spike time + delay reaches into the second cycle, so the first fully
    # steady window is the third
    return membrane[:, 2 * T : 3 * T]


def _steady_membrane(bank: CleanupSynapseBank, frame: SpikeFrame) -> np.ndarray:
    """Steady-state membranes over one cycle, via the phasor identity.

    Because the kernel's running sum is exactly the sampled sine, neuron
    j's steady membrane at cycle phase p is

        m_j(p) = sum_k amp_jk * sin(2pi (p + 1 - t_k - delay_jk) / T)
               = Im( e^{i 2pi (p+1)/T} * sum_k amp_jk e^{-i 2pi (t_k + delay_jk)/T} )

    so one complex reduction per neuron gives all T phases at once.
    """
    T = bank.code.n_steps
    live = frame.times >= 0
    in_phase = np.exp(-1j * TWO_PI * frame.times[live] / T)
    phased = (bank.amplitudes[:, live] * np.exp(-1j * TWO_PI * bank.delays[:, live] / T)) @ in_phase
    p = np.arange(T)
    return np.imag(np.exp(1j * TWO_PI * (p[None, :] + 1) / T) * phased[:, None])


def cleanup_layer_step(
    bank: CleanupSynapseBank,
    frame: SpikeFrame,
    prev_out: SpikeFrame | None = None,
    counter: "EventCounter | None" = None,
) -> SpikeFrame:
    """One cleanup cycle: membranes rise and each neuron spikes at its peak.

    Thresholds are adaptive (argmax via second differencing of the
    membrane): only the spike's timing carries information downstream, so
    any crossing level that selects the peak is equivalent.  A recurrent
    bank feeds each neuron's previous-cycle output back through a unit
    one-cycle-delay synapse, slowing the state evolution.  Output phases
    carry a constant T/4 lag from the sine peak; the gate's configured
    delay re-aligns it.
    """
    m = _steady_membrane(bank, frame)
    if bank.recurrent and prev_out is not None:
        live = prev_out.times >= 0
        T = bank.code.n_steps
        p = np.arange(T)
        # the self-synapse (one-cycle latency) also carries the same
        # re-alignment delay the gate applies downstream, so the fed-back
        # peak lands in the same phase frame as the feedforward term
        # instead of accruing the T/4 - 1 peak lag twice
        realigned = (prev_out.times[live, None] + (1 - T // 4)) % T
        m[live] += np.sin(TWO_PI * (p[None, :] + 1 - realigned) / T)
    peak = np.argmax(m, axis=1).astype(np.int64)
    # silent when the membrane never rises above rest (no live input synapse)
    flat = np.ptp(m, axis=1) <= 1e-12
    peak[flat] = -1
    if counter is not None:
        counter.add("cleanup", int(np.count_nonzero(~flat)))
    return SpikeFrame(peak, frame.cycle + 1)


# ---------------------------------------------------------------------------
# gate


@dataclass
class GateModule:
    """Spike relay: control-gated, one spike per neuron, fixed re-alignment.

    ``delay`` is added to relayed spike times (mod T) to cancel upstream
    phase offsets -- the cleanup peak lag in this network.  ``hold_cycles``
    is how many cycles the cleanup iterates before the gate opens.
    """

    code: PhaseCode
    delay: int = 0
    hold_cycles: int = 3


def gate_step(
    gate: GateModule,
    frame: SpikeFrame,
    control: bool,
    counter: "EventCounter | None" = None,
) -> SpikeFrame:
    """Relay a frame through the gate; closed control yields silence."""
    T = gate.code.n_steps
    if not control:
        return SpikeFrame(np.full_like(frame.times, -1), frame.cycle)
    times = frame.times.copy()
    live = times >= 0
    times[live] = (times[live] + gate.delay) % T
    if counter is not None:
        counter.add("gate", int(np.count_nonzero(live)))
    return SpikeFrame(times, frame.cycle + gate.hold_cycles)


def merge_first_wins(frames: list) -> SpikeFrame:
    """Collapse duplicate spikes across frames: earliest time per neuron."""
    times = np.full_like(frames[0].times, -1)
    for fr in frames:
        live = fr.times >= 0
        take = live & ((times < 0) | (fr.times < times))
        times[take] = fr.times[take]
    return SpikeFrame(times, frames[0].cycle)


# ---------------------------------------------------------------------------
# bookkeeping


@dataclass
class EventCounter:
    """Spike-event tally per module; the software stand-in for energy."""

    counts: dict = field(default_factory=dict)

    def add(self, module: str, n: int) -> None:
        self.counts[module] = self.counts.get(module, 0) + n

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def write_raster(path, rows) -> None:
    """Spike raster CSV: one row per event (cycle, timestep, neuron, module)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle", "timestep", "neuron", "module"])
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# the spiking resonator


def _cleanup_weights(book, ridge: float | None = None) -> np.ndarray:
    """Associative cleanup matrix for a codebook.

    With ``ridge`` unset this is plain auto-association B B^dagger / N.
    Correlated codebooks (letters share ink) need decorrelation, but the
    exact decorrelating inverse amplifies the small Gram eigenvalues and
    its delicate phase cancellations do not survive the synapse delay
    grid.  The ridge-smoothed projector

        B (G + ridge I)^-1 B^dagger / N,   G = B^dagger B / N

    keeps crosstalk bounded while leaving the weight phases coarse enough
    to quantize; every stored atom stays a fixed point of the quantized
    cleanup where raw auto-association lets ink-rich letters capture
    their overlapping lookalikes.
    """
    cols = book.columns
    if ridge is None:
        return (cols @ cols.conj().T) / book.n_dims
    gram = (cols.conj().T @ cols) / book.n_dims
    smoothed = np.linalg.inv(gram + ridge * np.eye(book.size))
    return (cols @ smoothed @ cols.conj().T) / book.n_dims


@dataclass
class SpikingResonator:
    """Three-factor resonator (shape, hpos, vpos) built from spiking parts.

    Cleanup banks hold a ridge-smoothed projector onto each codebook's
    span (see ``_cleanup_weights``), which keeps every stored atom a fixed
    point of the quantized dynamics.

    Inference runs search-then-settle.  The search sweep iterates the
    resonator from a random state; it localizes position reliably but the
    shape factor often parks on an overlapping lookalike.  A matched-filter
    saccade then scores every (letter, offset) hypothesis in a small window
    around the positional fix -- the same readout arithmetic used for the
    final labels, applied to unbound copies of the input -- and a settling
    sweep restarts the dynamics from the winning cell with the cleanup hold
    accumulator seeded, so the proposal is anchored while the network
    verifies it.  The answer is always read from the settled state.

    Each sweep iteration unbinds the other two factor estimates from the
    input with binding neurons, runs the factor's cleanup for
    ``hold_cycles`` cycles (recurrent self-connection active), then gates
    the result back as the new factor state.
    """

    books: dict
    code: PhaseCode = field(default_factory=PhaseCode)
    prune_fraction: float = 0.0
    hold_cycles: int = 3
    analysis: dict | None = None
    ridge: float | None = 1.0

    def __post_init__(self):
        if set(self.books) != {"shape", "hpos", "vpos"}:
            raise ValueError("expected factor roles 'shape', 'hpos', 'vpos'")
        self.banks = {}
        for role, book in self.books.items():
            self.banks[role] = CleanupSynapseBank.from_matrix(
                _cleanup_weights(book, self.ridge),
                self.code,
                self.prune_fraction,
                recurrent=True,
            )
        T = self.code.n_steps
        # cleanup peaks lag the encoded phase by T/4 - 1 steps
        self.gate = GateModule(self.code, delay=(1 - T // 4) % T, hold_cycles=self.hold_cycles)

    def _sweep(
        self,
        input_frame: SpikeFrame,
        states: dict,
        n_iterations: int,
        counter: "EventCounter",
        raster: list | None,
        anchor: bool,
        start_cycle: int,
    ) -> dict:
        """Iterate the resonator loop from the given factor states.

        A plain sweep starts each iteration's cleanup cold, like the
        continuous engines.  An anchored sweep seeds the hold accumulator
        with the incoming states and carries it across iterations, so the
        recurrent self-synapse keeps pulling toward the initial hypothesis.
        """
        roles = list(self.books)
        T = self.code.n_steps
        prev_clean: dict = {role: None for role in roles}
        if anchor:
            for role in roles:
                # the accumulator lives in the cleanup's internal frame,
                # one gate delay behind the state frame
                times = states[role].times.copy()
                live = times >= 0
                times[live] = (times[live] - self.gate.delay) % T
                prev_clean[role] = SpikeFrame(times, states[role].cycle)
        for it in range(n_iterations):
            new_states = {}
            for role in roles:
                others = [r for r in roles if r != role]
                ctx = bind_frames(
                    input_frame, states[others[0]], self.code, "unbind",
                    counter=counter,
                )
                ctx = bind_frames(
                    ctx, states[others[1]], self.code, "unbind", counter=counter
                )
                clean = prev_clean[role]
                for _ in range(self.hold_cycles):
                    clean = cleanup_layer_step(
                        self.banks[role], ctx, prev_out=clean, counter=counter
                    )
                if anchor:
                    prev_clean[role] = clean
                gated = gate_step(self.gate, clean, control=True, counter=counter)
                gated.cycle = start_cycle + it
                new_states[role] = gated
                if raster is not None:
                    raster.extend(gated.events(role))
            states = new_states
        return states

    def _read(self, states: dict) -> tuple:
        """Label each factor state against its book (analysis book if given)."""
        phasors = {r: spike_to_phase(states[r], self.code) for r in states}
        labels, poses = {}, {}
        for role, book in self.books.items():
            reader = (self.analysis or {}).get(role, book)
            coeff = np.abs(reader.columns.conj().T @ phasors[role]) / book.n_dims
            idx = int(np.argmax(coeff))
            labels[role] = book.labels[idx]
            if isinstance(book.labels[idx], (int, np.integer)):
                poses[role] = int(book.labels[idx])
        return labels, poses, phasors

    def _window_scan(self, x: Hypervector, h0: int, v0: int, window: int) -> tuple:
        """Saccade step: best (letter, dx, dy) cell near the positional fix.

        Every offset hypothesis in the window unbinds the input and reads
        the remainder against the shape book; the strongest single response
        wins.  Returns (coefficient, shape index, dx, dy).
        """
        shape_book = self.books["shape"]
        reader = (self.analysis or {}).get("shape", shape_book).columns
        H = self.books["hpos"].columns
        V = self.books["vpos"].columns
        n = shape_book.n_dims
        best = None
        for ddx in range(-window, window + 1):
            for ddy in range(-window, window + 1):
                dx = (h0 + ddx) % H.shape[1]
                dy = (v0 + ddy) % V.shape[1]
                pattern = x * np.conj(H[:, dx]) * np.conj(V[:, dy])
                coeff = np.abs(reader.conj().T @ pattern) / n
                j = int(np.argmax(coeff))
                if best is None or coeff[j] > best[0]:
                    best = (float(coeff[j]), j, dx, dy)
        return best

    def run(
        self,
        s: Hypervector,
        n_iterations: int = 20,
        seed: int = 0,
        record_raster: bool = False,
        settle_iterations: int = 5,
        scan_window: int = 4,
    ) -> tuple:
        """Factorize ``s``; returns (labels, poses, states, counter, raster).

        The input is phasor-projected before spike conversion: a spike time
        can carry phase but not magnitude, so input amplitude information
        is deliberately dropped at this boundary.  ``n_iterations`` is the
        search sweep length, ``settle_iterations`` the anchored sweep run
        after the saccade.
        """
        roles = list(self.books)
        counter = EventCounter()
        raster: list = []
        rec = raster if record_raster else None
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5F1C)))
        n = s.shape[0]
        input_frame = phase_to_spike(phasor_project(s), self.code)
        counter.add("generator", input_frame.n_spikes)
        states = {
            role: phase_to_spike(
                np.exp(1j * rng.uniform(0, TWO_PI, n)), self.code
            )
            for role in roles
        }
        states = self._sweep(
            input_frame, states, n_iterations, counter, rec,
            anchor=False, start_cycle=0,
        )
        _, coarse, _ = self._read(states)
        _, j, dx, dy = self._window_scan(
            spike_to_phase(input_frame, self.code),
            coarse["hpos"], coarse["vpos"], scan_window,
        )
        proposal = {
            "shape": self.books["shape"].columns[:, j],
            "hpos": self.books["hpos"].columns[:, dx],
            "vpos": self.books["vpos"].columns[:, dy],
        }
        states = self._sweep(
            input_frame,
            {r: phase_to_spike(self.code.quantize(v), self.code) for r, v in proposal.items()},
            settle_iterations, counter, rec,
            anchor=True, start_cycle=n_iterations,
        )
        labels, poses, phasors = self._read(states)
        return labels, poses, phasors, counter, raster


def run_quantized_reference(
    books: dict,
    s: Hypervector,
    n_iterations: int = 20,
    seed: int = 0,
    prune_fraction: float = 0.0,
    hold_cycles: int = 3,
    code: PhaseCode | None = None,
    analysis: dict | None = None,
    ridge: float | None = 1.0,
    settle_iterations: int = 5,
    scan_window: int = 4,
) -> tuple:
    """Complex-arithmetic twin of the spiking engine, phases 4-bit quantized.

    Runs the same search/saccade/settle schedule -- unbind, associative
    cleanup iterated ``hold_cycles`` times with a unit self-connection,
    phase-only states -- in exact complex arithmetic, quantizing every
    phasor state to the 2pi/T lattice.  Weights are reconstructed from the
    same synapse banks the spiking engine builds (delay-quantized phases,
    pruned amplitudes), so the only thing left to differ between the two
    paths is the spike-domain arithmetic itself.
    """
    code = code or PhaseCode()
    roles = list(books)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5F1C)))
    n = s.shape[0]
    x_in = code.quantize(phasor_project(s))
    states = {
        role: code.quantize(np.exp(1j * rng.uniform(0, TWO_PI, n)))
        for role in roles
    }
    autos = {}
    for role, book in books.items():
        bank = CleanupSynapseBank.from_matrix(
            _cleanup_weights(book, ridge), code, prune_fraction, recurrent=True
        )
        autos[role] = bank.amplitudes * np.exp(2j * np.pi * bank.delays / code.n_steps)

    def sweep(states, length, anchor):
        prev_clean = {r: (states[r].copy() if anchor else None) for r in roles}
        for _ in range(length):
            new_states = {}
            for role in roles:
                others = [r for r in roles if r != role]
                ctx = x_in * np.conj(states[others[0]]) * np.conj(states[others[1]])
                ctx = code.quantize(ctx)
                clean = prev_clean[role]
                for _ in range(hold_cycles):
                    drive = autos[role] @ ctx
                    if clean is not None:
                        drive = drive + clean
                    live = np.abs(drive) > 1e-12
                    step = np.zeros_like(drive)
                    step[live] = code.quantize(drive[live])
                    clean = step
                if anchor:
                    prev_clean[role] = clean
                new_states[role] = clean
            states = new_states
        return states

    def read(states):
        labels, poses = {}, {}
        for role in roles:
            book = books[role]
            reader = (analysis or {}).get(role, book)
            coeff = np.abs(reader.columns.conj().T @ states[role]) / book.n_dims
            idx = int(np.argmax(coeff))
            labels[role] = book.labels[idx]
            if isinstance(book.labels[idx], (int, np.integer)):
                poses[role] = int(book.labels[idx])
        return labels, poses

    states = sweep(states, n_iterations, anchor=False)
    _, coarse = read(states)
    shape_reader = (analysis or {}).get("shape", books["shape"]).columns
    H = books["hpos"].columns
    V = books["vpos"].columns
    best = None
    for ddx in range(-scan_window, scan_window + 1):
        for ddy in range(-scan_window, scan_window + 1):
            dx = (coarse["hpos"] + ddx) % H.shape[1]
            dy = (coarse["vpos"] + ddy) % V.shape[1]
            pattern = x_in * np.conj(H[:, dx]) * np.conj(V[:, dy])
            coeff = np.abs(shape_reader.conj().T @ pattern) / n
            j = int(np.argmax(coeff))
            if best is None or coeff[j] > best[0]:
                best = (float(coeff[j]), j, dx, dy)
    _, j, dx, dy = best
    proposal = {
        "shape": code.quantize(books["shape"].columns[:, j]),
        "hpos": code.quantize(H[:, dx]),
        "vpos": code.quantize(V[:, dy]),
    }
    states = sweep(proposal, settle_iterations, anchor=True)
    labels, poses = read(states)
    return labels, poses, states
