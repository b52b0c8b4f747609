"""Resonator networks: iterative factorization of encoded scenes.

A resonator holds one estimate per generative factor (letter shape, color,
horizontal/vertical position, rotation, scale...).  Each iteration, every
factor unbinds the other factors' current estimates from the input, cleans
the result up against its codebook, and replaces its estimate -- a Jacobi
sweep where all updates read the previous iteration's states.  Superposed
inputs search in parallel: cross terms act like noise that dies out as
factors lock in.

Three engines share this machinery:

* :class:`TranslationResonator` -- color (x) shape (x) h-position (x)
  v-position.
* :class:`LogPolarResonator` -- shape (x) rotation (x) scale on a log-polar
  encoding of a centered object.
* :class:`HierarchicalResonator` -- both of the above coupled through the
  bridge transforms: the Cartesian partition sees the log-polar partition's
  product through the backward bridge (``local pattern``), and vice versa
  through the forward bridge.

Update modifications that make the search robust at benchmark sizes: a
hysteresis blend with the previous state, a ReLU-power coefficient
nonlinearity, and additive complex noise that is switched off for the last
iterations before readout.  The shape state is deliberately *not* phasor
projected, so coefficient sign information survives (whitened patterns
have signed pixel overlaps).
"""

from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .fhrr import Codebook, CleanupNonlinearity, Hypervector, phasor_project
from .imagecodec import COLOR_MIXING, COLOR_NAMES, encode_image, ImageTensor
from .logpolar import LambdaTransform
from .scenes import transform_template

# factor roles whose codebooks index a circular axis (readout wraps)
_PERIODIC_ROLES = frozenset({"hpos", "vpos", "rot"})


@dataclass
class ResonatorConfig:
    """Tuning knobs for the resonator engines.

    ``gamma`` / ``k`` / ``sigma`` accept either a scalar for all factors or
    a ``{role: value}`` mapping (missing roles fall back to ``"default"``
    or the scalar default).  ``sigma`` is the standard deviation of the
    complex noise per element (``E|eta|^2 = sigma^2``), added after the
    hysteresis blend and before the transfer function.
    """

    max_iterations: int = 100
    gamma: float | dict = 0.7
    k: float | dict = 3.0
    sigma: float | dict = 0.05
    nonlinearity: str = "relu_power"  # relu_power | power | identity
    noise_off_tail: int = 2
    init: str = "random"  # random | codebook_mean
    transfer: str = "phasor_projection"  # phasor_projection | l2_normalization
    epsilon: float = 1e-3
    converge_patience: int = 3
    n_passes: int = 1
    explain_mode: str = "image"  # image | vsa
    n_heads: int = 1
    lock_threshold: float = 0.5
    seed: int = 0

    def _per_factor(self, value, role: str) -> float:
        if isinstance(value, dict):
            return float(value.get(role, value.get("default", 1.0)))
        return float(value)

    def gamma_for(self, role: str) -> float:
        return self._per_factor(self.gamma, role)

    def k_for(self, role: str) -> float:
        return self._per_factor(self.k, role)

    def sigma_for(self, role: str) -> float:
        return self._per_factor(self.sigma, role)

    def replace(self, **kwargs) -> "ResonatorConfig":
        return dataclasses.replace(self, **kwargs)


@dataclass
class FactorModule:
    """One factor: a codebook, a role tag, and whether its state is projected.

    ``book`` is the synthesis codebook — its columns are what scenes are
    actually built from, so state updates reconstruct with it.  ``analysis``,
    when given, is a decorrelated variant of the same columns used only for
    the coefficient (cleanup) step; leaving it unset reuses ``book`` for
    both directions, which is fine for codebooks that are already near
    orthogonal.
    """

    role: str
    book: Codebook
    project: bool = True
    analysis: Codebook | None = None

    @property
    def analysis_book(self) -> Codebook:
        return self.book if self.analysis is None else self.analysis


@dataclass
class RunTrace:
    """Outcome of one resonator run."""

    labels: dict
    poses: dict
    coefficients: dict
    converged_at: int | None
    n_iterations: int
    similarity: float
    state_changes: list = field(default_factory=list)
    coefficient_history: list | None = None

    def to_json(self) -> str:
        payload = {
            "labels": {k: _as_plain(v) for k, v in self.labels.items()},
            "poses": {k: float(v) for k, v in self.poses.items()},
            "coefficients": {k: np.asarray(v).tolist() for k, v in self.coefficients.items()},
            "converged_at": self.converged_at,
            "n_iterations": self.n_iterations,
            "similarity": self.similarity,
            "state_changes": self.state_changes,
        }
        if self.coefficient_history is not None:
            payload["coefficient_history"] = [
                {k: np.asarray(v).tolist() for k, v in step.items()}
                for step in self.coefficient_history
            ]
        return json.dumps(payload)

    def csv_row(self) -> str:
        cells = [str(self.converged_at), str(self.n_iterations), f"{self.similarity:.4f}"]
        for role in sorted(self.labels):
            cells.append(f"{role}={self.labels[role]}")
        for role in sorted(self.poses):
            cells.append(f"{role}_pose={self.poses[role]:.3f}")
        return ",".join(cells)


def _as_plain(v):
    return v.item() if isinstance(v, np.generic) else v


def _cosine_abs(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.abs(np.vdot(a, b)) / (na * nb))


def peak_interpolate(values: np.ndarray, periodic: bool) -> tuple[int, float]:
    """Argmax with a quadratic-fit sub-bin offset.

    Returns (peak index, real-valued offset in [-0.5, 0.5]).  Periodic axes
    use wrapped neighbors; linear axes return offset 0 at the edges.
    """
    idx = int(np.argmax(values))
    n = len(values)
    if periodic:
        left, right = values[(idx - 1) % n], values[(idx + 1) % n]
    elif 0 < idx < n - 1:
        left, right = values[idx - 1], values[idx + 1]
    else:
        return idx, 0.0
    denom = left - 2.0 * values[idx] + right
    if denom >= -1e-12:
        return idx, 0.0
    offset = 0.5 * (left - right) / denom
    return idx, float(np.clip(offset, -0.5, 0.5))


class ResonatorBase:
    """Shared state init, factor update, convergence loop, and readout."""

    def __init__(self, modules: list[FactorModule], cfg: ResonatorConfig):
        self.modules = {m.role: m for m in modules}
        self.cfg = cfg
        self._nl = {
            m.role: CleanupNonlinearity(cfg.nonlinearity, max(cfg.k_for(m.role), 1e-12))
            if cfg.nonlinearity != "identity"
            else CleanupNonlinearity("identity")
            for m in modules
        }

    # -- subclass hooks ----------------------------------------------------
    def contexts(self, state: dict, s: Hypervector) -> dict:
        """Map role -> cleanup input (input with other factors unbound)."""
        raise NotImplementedError

    def reconstruction(self, state: dict) -> Hypervector:
        """Bound product of all states (the engine's explanation of s)."""
        raise NotImplementedError

    # -- core machinery ----------------------------------------------------
    def _transfer(self, x: np.ndarray) -> np.ndarray:
        if self.cfg.transfer == "l2_normalization":
            norm = np.linalg.norm(x)
            return x if norm == 0 else x * (np.sqrt(x.shape[0]) / norm)
        return phasor_project(x)

    def init_state(self, seed: int, overrides: dict | None = None) -> dict:
        """Fresh start state; ``overrides`` pins chosen factors to vectors.

        Pinning is how seeded restarts steer the search (e.g. start the
        rotation factor in a chosen part of its range) and how stability
        diagnostics drop the engine directly onto a candidate fixed point.
        """
        state = {}
        rng = np.random.default_rng(np.random.SeedSequence((self.cfg.seed, seed, 0xA11)))
        for role, mod in self.modules.items():
            if overrides is not None and role in overrides:
                state[role] = np.asarray(overrides[role], dtype=np.complex128)
            elif self.cfg.init == "random":
                phases = rng.uniform(0, 2 * np.pi, mod.book.n_dims)
                state[role] = np.exp(1j * phases)
            else:
                state[role] = self._transfer(mod.book.columns.mean(axis=1))
        return state

    def _noise_streams(self, seed: int) -> dict:
        # one independent stream per factor so the sweep's update order
        # cannot change which noise a factor sees (zlib.crc32 is stable
        # across processes, unlike hash())
        return {
            role: np.random.default_rng(
                np.random.SeedSequence((self.cfg.seed, seed, zlib.crc32(role.encode())))
            )
            for role in self.modules
        }

    def update_factor(
        self,
        role: str,
        x: Hypervector,
        prev: Hypervector,
        rng,
        noise_on: bool,
    ) -> tuple[Hypervector, np.ndarray]:
        mod = self.modules[role]
        ana = mod.analysis_book.columns
        coeff = (ana.conj().T @ x) / ana.shape[0]
        shaped = self._nl[role].apply(coeff)
        update = mod.book.columns @ shaped
        # normalize the update to unit RMS element magnitude before blending:
        # the hysteresis ratio then mixes comparable quantities and sigma is
        # a calibrated per-element perturbation, independent of codebook
        # norms and input scale (the transfer function would erase a global
        # scale anyway for projected factors)
        norm = np.linalg.norm(update)
        if norm > 0:
            update = update * (np.sqrt(update.shape[0]) / norm)
        gamma = self.cfg.gamma_for(role)
        blended = gamma * update + (1.0 - gamma) * prev
        sigma = self.cfg.sigma_for(role)
        if noise_on and sigma > 0:
            noise = rng.standard_normal(2 * blended.shape[0])
            blended = blended + (sigma / np.sqrt(2.0)) * (
                noise[: blended.shape[0]] + 1j * noise[blended.shape[0] :]
            )
        return (self._transfer(blended) if mod.project else blended), coeff

    def step(
        self, state: dict, s: Hypervector, rngs: dict, noise_on: bool
    ) -> tuple[dict, dict]:
        """One Jacobi sweep: all contexts from iteration-t states."""
        ctx = self.contexts(state, s)
        new_state, coeffs = {}, {}
        for role in self.modules:
            new_state[role], coeffs[role] = self.update_factor(
                role, ctx[role], state[role], rngs[role], noise_on
            )
        return new_state, coeffs

    def run(
        self,
        s: Hypervector,
        seed: int = 0,
        keep_history: bool = False,
        init_overrides: dict | None = None,
    ) -> RunTrace:
        cfg = self.cfg
        state = self.init_state(seed, init_overrides)
        rngs = self._noise_streams(seed)
        changes_log, history = [], [] if keep_history else None
        # zero-iteration readout (the chance-level baseline) reads the
        # initial states straight against the codebooks
        coeffs = {
            role: (mod.analysis_book.columns.conj().T @ state[role])
            / mod.analysis_book.n_dims
            for role, mod in self.modules.items()
        }
        consecutive = 0
        converged_at = None
        tail_left = None  # noise-free iterations still to run after convergence
        t = 0
        while t < cfg.max_iterations:
            noise_on = tail_left is None and (
                t < cfg.max_iterations - cfg.noise_off_tail
            )
            new_state, coeffs = self.step(state, s, rngs, noise_on)
            change = max(
                1.0 - _cosine_abs(new_state[r], state[r]) for r in self.modules
            )
            changes_log.append(change)
            if keep_history:
                history.append({r: np.abs(c) for r, c in coeffs.items()})
            state = new_state
            t += 1
            if tail_left is not None:
                tail_left -= 1
                if tail_left <= 0:
                    break
            else:
                consecutive = consecutive + 1 if change < cfg.epsilon else 0
                if consecutive >= cfg.converge_patience:
                    converged_at = t
                    tail_left = cfg.noise_off_tail
                    if tail_left == 0:
                        break
        labels, poses, final_coeffs = self.readout(coeffs)
        recon = self.reconstruction(state)
        trace = RunTrace(
            labels=labels,
            poses=poses,
            coefficients=final_coeffs,
            converged_at=converged_at,
            n_iterations=t,
            similarity=_cosine_abs(recon, s),
            state_changes=changes_log,
            coefficient_history=history,
        )
        trace.final_state = state  # stashed for explaining-away
        return trace

    def readout(self, coeffs: dict) -> tuple[dict, dict, dict]:
        """Argmax labels plus interpolated real poses per factor.

        Works on the cleanup coefficients of the final sweep -- the match
        between each codebook and the input with all other factors divided
        out.  Reading the reconstructed states back through the codebooks
        instead would go through the raw letter Gram, which is correlated
        enough that a mixture state can score a lookalike letter above the
        true one even when the per-iteration evidence always favored the
        truth.  Coefficient magnitudes are used throughout: converged factor
        pairs can settle on sign-flipped states, which magnitudes
        neutralize.  Peak interpolation over the unsharpened coefficients
        also recovers fractional poses that the bin-resolution states
        cannot represent.
        """
        labels, poses, out = {}, {}, {}
        for role, mod in self.modules.items():
            c = np.abs(np.asarray(coeffs[role]))
            out[role] = c
            periodic = mod.book.topology == "periodic" and role in _PERIODIC_ROLES
            idx, offset = peak_interpolate(c, periodic)
            labels[role] = mod.book.labels[idx]
            if isinstance(mod.book.labels[idx], (int, np.integer, float)):
                pose = float(mod.book.labels[idx]) + offset
                if periodic:
                    period = mod.book.period or mod.book.size
                    pose = (pose + period / 2.0) % period - period / 2.0
                poses[role] = pose
        return labels, poses, out


def _product_except(state: dict, roles: list, skip: str) -> np.ndarray:
    out = None
    for role in roles:
        if role == skip:
            continue
        out = state[role].copy() if out is None else out * state[role]
    return out


class TranslationResonator(ResonatorBase):
    """Four-factor engine for colored letters at arbitrary positions."""

    ROLES = ("color", "shape", "hpos", "vpos")

    def __init__(
        self,
        color_book: Codebook,
        letter_book: Codebook,
        hpos_book: Codebook,
        vpos_book: Codebook,
        cfg: ResonatorConfig,
        *,
        color_analysis: Codebook | None = None,
        letter_analysis: Codebook | None = None,
    ):
        super().__init__(
            [
                FactorModule("color", color_book, analysis=color_analysis),
                FactorModule("shape", letter_book, project=False, analysis=letter_analysis),
                FactorModule("hpos", hpos_book),
                FactorModule("vpos", vpos_book),
            ],
            cfg,
        )

    def contexts(self, state, s):
        roles = list(self.ROLES)
        return {
            role: s * np.conj(_product_except(state, roles, role)) for role in roles
        }

    def reconstruction(self, state):
        out = state["color"] * state["shape"] * state["hpos"] * state["vpos"]
        return out


class LogPolarResonator(ResonatorBase):
    """Three-factor engine over a log-polar encoding: shape, rotation, scale."""

    ROLES = ("shape", "rot", "scale")

    def __init__(
        self,
        letter_book: Codebook,
        rot_book: Codebook,
        scale_book: Codebook,
        cfg: ResonatorConfig,
        *,
        letter_analysis: Codebook | None = None,
    ):
        super().__init__(
            [
                FactorModule("shape", letter_book, project=False, analysis=letter_analysis),
                FactorModule("rot", rot_book),
                FactorModule("scale", scale_book),
            ],
            cfg,
        )

    def contexts(self, state, s):
        roles = list(self.ROLES)
        return {
            role: s * np.conj(_product_except(state, roles, role)) for role in roles
        }

    def reconstruction(self, state):
        return state["shape"] * state["rot"] * state["scale"]


class HierarchicalResonator(ResonatorBase):
    """Six factors in two partitions coupled by the bridge transforms.

    Cartesian factors (color, hpos, vpos) unbind each other and the
    *local pattern* ``l = bridge_inverse(rot (x) scale (x) shape)`` from the
    input.  Log-polar factors (shape, rot, scale) work on
    ``p = bridge(input with color and position unbound)``.  Both bridge
    terms are computed once per iteration from iteration-t states, keeping
    the sweep Jacobi-consistent.
    """

    CART_ROLES = ("color", "hpos", "vpos")
    LP_ROLES = ("shape", "rot", "scale")

    def __init__(
        self,
        color_book: Codebook,
        hpos_book: Codebook,
        vpos_book: Codebook,
        letter_book_lp: Codebook,
        rot_book: Codebook,
        scale_book: Codebook,
        bridge: LambdaTransform,
        cfg: ResonatorConfig,
        *,
        color_analysis: Codebook | None = None,
        letter_analysis: Codebook | None = None,
    ):
        super().__init__(
            [
                FactorModule("color", color_book, analysis=color_analysis),
                FactorModule("hpos", hpos_book),
                FactorModule("vpos", vpos_book),
                FactorModule("shape", letter_book_lp, project=False, analysis=letter_analysis),
                FactorModule("rot", rot_book),
                FactorModule("scale", scale_book),
            ],
            cfg,
        )
        self.bridge = bridge

    def contexts(self, state, s):
        local = self.bridge.apply_inverse(
            state["rot"] * state["scale"] * state["shape"]
        )
        cart = {
            role: s
            * np.conj(_product_except(state, list(self.CART_ROLES), role))
            * np.conj(local)
            for role in self.CART_ROLES
        }
        stripped = s * np.conj(
            state["color"] * state["hpos"] * state["vpos"]
        )
        pattern = self.bridge.apply(stripped)
        lp = {
            role: pattern * np.conj(_product_except(state, list(self.LP_ROLES), role))
            for role in self.LP_ROLES
        }
        cart.update(lp)
        return cart

    def reconstruction(self, state):
        local = self.bridge.apply_inverse(
            state["rot"] * state["scale"] * state["shape"]
        )
        return state["color"] * state["hpos"] * state["vpos"] * local


# ---------------------------------------------------------------------------
# explaining away and multi-object orchestration
# ---------------------------------------------------------------------------


@dataclass
class SceneReader:
    """Everything needed to turn readouts back into images and encodings.

    Used by image-mode explaining away and by reconstruction scoring;
    bundles the Cartesian encoder, the raw (unwhitened) templates, and
    (for rigid tasks) the log-polar grid that converts rotation/scale bins
    to degrees and factors.
    """

    enc: object
    templates: object
    grid: object = None

    def render_readout(self, labels: dict, poses: dict) -> np.ndarray:
        """Render the object a readout describes (RGB, full canvas)."""
        t = self.templates
        raster = t.image(t.labels.index(labels["shape"]))
        rotation, scale = 0.0, 1.0
        if self.grid is not None:
            if "rot" in poses:
                rotation = poses["rot"] * 360.0 / self.grid.n_rot
            if "scale" in poses:
                scale = float(np.exp(poses["scale"] * self.grid.rho_step))
        gray = transform_template(
            raster, poses.get("hpos", 0.0), poses.get("vpos", 0.0), rotation, scale
        )
        rgb = COLOR_MIXING[:, COLOR_NAMES.index(labels["color"])]
        return gray[:, :, None] * rgb[None, None, :]


def explain_away_image(
    residual_pixels: np.ndarray, reader: SceneReader, trace: RunTrace
) -> np.ndarray:
    """Subtract a rendered explanation from an image, conservatively.

    The readout's object is rendered, max-normalized, small values zeroed
    (below 0.1), rescaled to the least-squares best match against the
    residual, subtracted, and negatives clipped to zero.
    """
    recon = reader.render_readout(trace.labels, trace.poses)
    peak = recon.max()
    if peak <= 0:
        return residual_pixels
    recon = recon / peak
    recon[recon < 0.1] = 0.0
    denom = float(np.sum(recon * recon))
    if denom <= 0:
        return residual_pixels
    alpha = max(float(np.sum(recon * residual_pixels)) / denom, 0.0)
    return np.clip(residual_pixels - alpha * recon, 0.0, None)


def explain_away_vsa(s: Hypervector, trace: RunTrace) -> Hypervector:
    """Subtract the bound product of final states from the encoding."""
    state = getattr(trace, "final_state", None)
    if state is None:
        return s
    recon = trace._engine.reconstruction(state)
    denom = np.vdot(recon, recon)
    if denom == 0:
        return s
    alpha = max(float(np.real(np.vdot(recon, s) / denom)), 0.0)
    return s - alpha * recon


def run_multipass(
    engine: ResonatorBase,
    scene_pixels: np.ndarray,
    reader: SceneReader,
    n_passes: int,
    seed: int = 0,
) -> list:
    """Sequential inference of several objects by explaining away.

    Image mode: after each pass the explained object is removed from the
    residual image, which is re-encoded for the next pass.  VSA mode
    subtracts the bound state product from the encoding directly.
    """
    traces = []
    if engine.cfg.explain_mode == "vsa":
        s = encode_image(reader.enc, ImageTensor(scene_pixels))
        for p in range(n_passes):
            trace = engine.run(s, seed=(seed << 4) + p)
            trace._engine = engine
            traces.append(trace)
            s = explain_away_vsa(s, trace)
        return traces
    residual = np.asarray(scene_pixels, dtype=np.float64).copy()
    for p in range(n_passes):
        s = encode_image(reader.enc, ImageTensor(residual))
        trace = engine.run(s, seed=(seed << 4) + p)
        trace._engine = engine
        trace.residual_energy = float(np.sum(residual**2))
        traces.append(trace)
        residual = explain_away_image(residual, reader, trace)
    return traces


def run_multihead(
    engine: ResonatorBase,
    s: Hypervector,
    n_heads: int,
    seed: int = 0,
) -> list:
    """Parallel inference: n_heads engines iterate in lockstep on one input.

    After every iteration (the barrier), any head whose explanation is
    sufficiently present in its input -- projection coefficient of the
    reconstruction against the input at least ``lock_threshold`` -- has
    that explanation subtracted from all *other* heads' inputs, steering
    heads toward different objects.
    """
    cfg = engine.cfg
    states = [engine.init_state((seed << 4) + h) for h in range(n_heads)]
    rng_sets = [engine._noise_streams((seed << 4) + h) for h in range(n_heads)]
    recons = [None] * n_heads
    locked = [False] * n_heads
    coeffs = [None] * n_heads
    for t in range(cfg.max_iterations):
        noise_on = t < cfg.max_iterations - cfg.noise_off_tail
        # barrier: explanations from iteration-t states
        inputs = []
        for h in range(n_heads):
            x = s.astype(np.complex128, copy=True)
            for other in range(n_heads):
                if other != h and locked[other]:
                    x -= recons[other]
            inputs.append(x)
        new_states = []
        for h in range(n_heads):
            ns, cf = engine.step(states[h], inputs[h], rng_sets[h], noise_on)
            new_states.append(ns)
            coeffs[h] = cf
        states = new_states
        for h in range(n_heads):
            recon = engine.reconstruction(states[h])
            denom = np.vdot(recon, recon)
            if denom == 0:
                locked[h] = False
                continue
            alpha = float(np.real(np.vdot(recon, inputs[h]) / denom))
            locked[h] = alpha >= cfg.lock_threshold
            recons[h] = alpha * recon if locked[h] else recon
    traces = []
    for h in range(n_heads):
        labels, poses, final_coeffs = engine.readout(coeffs[h])
        recon = engine.reconstruction(states[h])
        trace = RunTrace(
            labels=labels,
            poses=poses,
            coefficients=final_coeffs,
            converged_at=None,
            n_iterations=cfg.max_iterations,
            similarity=_cosine_abs(recon, s),
        )
        trace.final_state = states[h]
        trace.locked = locked[h]
        traces.append(trace)
    return traces


def run_with_restarts(
    engine: ResonatorBase,
    s: Hypervector,
    n_restarts: int = 3,
    seed: int = 0,
    accept_score: float | None = None,
    scorer=None,
) -> RunTrace:
    """Re-run from fresh random initializations and keep the best explanation.

    Correct factorizations reconstruct the input far better than the
    spurious joint attractors (wrong letter at a compensating rotation, for
    example), so a reconstruction score picks the right basin whenever any
    restart finds it.  ``scorer(trace) -> float`` defaults to the VSA-domain
    reconstruction similarity; image pipelines pass a pixel-domain renderer
    score, which separates basins better than similarity measured through a
    lossy coordinate bridge.  ``accept_score`` short-circuits the retries
    once a run scores well enough; the returned trace carries its score in
    ``score`` and the number of runs spent in ``n_restarts_used``.
    """
    if scorer is None:
        scorer = lambda trace: trace.similarity  # noqa: E731
    best = best_score = None
    for attempt in range(max(n_restarts, 1)):
        trace = engine.run(s, seed=(seed << 8) + attempt)
        score = scorer(trace)
        if best is None or score > best_score:
            best, best_score = trace, score
        if accept_score is not None and score >= accept_score:
            break
    best.score = best_score
    best.n_restarts_used = attempt + 1
    return best
