"""Complex phasor hypervector algebra.

Vectors live in C^N with every element a unit-magnitude phasor e^{i*phi}.
Binding is the Hadamard product (phases add), unbinding multiplies by the
complex conjugate (phases subtract), and superposition is the plain sum.
Fractional powers spin each element's phase by a real-valued exponent,
which is what turns a single random vector into a smooth encoding of a
continuous quantity such as image position.

Key pieces:

* :func:`random_phasor` / :func:`random_phasor_periodic` -- seeded phasor
  construction (continuous or lattice-quantized phases).
* :func:`bind`, :func:`unbind`, :func:`fractional_power`,
  :func:`similarity` -- the core algebra.
* :func:`phasor_project`, :func:`normalize_l2` -- resonator transfer
  functions.
* :class:`Codebook` + :func:`cleanup` -- associative memory over a set of
  labelled columns.

All randomness goes through ``numpy.random.Generator`` seeded with PCG64,
so every construction replays bit-exactly from a 64-bit seed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

# A hypervector is a 1-D complex ndarray; functions below accept anything
# np.asarray can turn into one.  We keep plain arrays rather than a wrapper
# class so the algebra composes with numpy directly.
Hypervector = np.ndarray

_MAGIC = b"FHRR1"
_TOPOLOGY_TAGS = {"linear": 0, "periodic": 1}
_TAG_TOPOLOGIES = {v: k for k, v in _TOPOLOGY_TAGS.items()}


def _as_complex(x) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1:
        raise ValueError(f"hypervector must be 1-D, got shape {a.shape}")
    return a.astype(np.complex128, copy=False) if not np.iscomplexobj(a) else a


def _check_same_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


def is_unit_phasor(x, tol: float = 1e-9) -> bool:
    """True if every element has magnitude 1 within ``tol``."""
    a = np.asarray(x)
    return bool(np.all(np.abs(np.abs(a) - 1.0) <= tol))


def random_phasor(seed: int, n_dims: int) -> Hypervector:
    """Draw a unit phasor vector with i.i.d. uniform phases.

    Args:
        seed: 64-bit seed; identical seeds give bit-identical vectors.
        n_dims: number of elements N (>= 1).

    Returns:
        complex128 array of shape (n_dims,) with all magnitudes exactly 1.
    """
    if n_dims < 1:
        raise ValueError("n_dims must be >= 1")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_dims)
    return np.exp(1j * phases)

def random_phasor_periodic(seed: int, n_dims: int, period: int) -> Hypervector:
    """Draw a phasor vector whose phases sit on the 2*pi/period lattice.

    Fractional powers of such a vector are themselves periodic with the
    given period (v**period == v**0 exactly), which is what makes encoded
    translations wrap around toroidally instead of drifting off the edge.
    """
    if n_dims < 1:
        raise ValueError("n_dims must be >= 1")
    if period < 1:
        raise ValueError("period must be >= 1")
    rng = np.random.default_rng(seed)
    ticks = rng.integers(0, period, size=n_dims)
    return np.exp(2j * np.pi * ticks / period)


def bind(a, b) -> Hypervector:
    """Element-wise product; phases add.  Commutative and associative."""
    a, b = _as_complex(a), _as_complex(b)
    _check_same_dims(a, b)
    return a * b


def unbind(a, b) -> Hypervector:
    """Element-wise product with the conjugate of ``b``; phases subtract.

    Exact inverse of :func:`bind` when ``b`` is a unit phasor:
    ``unbind(bind(a, b), b) == a``.
    """
    a, b = _as_complex(a), _as_complex(b)
    _check_same_dims(a, b)
    return a * np.conj(b)


def fractional_power(base, x: float) -> Hypervector:
    """Raise a unit phasor vector to a real-valued exponent.

    Each element's phase is multiplied by ``x`` on the principal branch
    (phases taken in (-pi, pi], numpy's ``angle`` convention), so the
    result interpolates smoothly between integer powers.

    Args:
        base: unit phasor vector.
        x: real exponent; may be fractional or negative.

    Returns:
        ``exp(i * x * angle(base))`` element-wise.
    """
    base = _as_complex(base)
    if not is_unit_phasor(base, tol=1e-6):
        raise ValueError("fractional_power requires a unit phasor base")
    return np.exp(1j * float(x) * np.angle(base))


def similarity(a, b) -> float:
    """Normalized real inner product ``(1/N) * Re(a^dagger b)``.

    Conjugation is on the first argument.  Two identical unit phasors give
    1.0; independent random ones concentrate near 0 with std 1/sqrt(2N).
    """
    a, b = _as_complex(a), _as_complex(b)
    _check_same_dims(a, b)
    return float(np.real(np.vdot(a, b)) / a.shape[-1])


def phasor_project(x) -> Hypervector:
    """Map every nonzero element to unit magnitude, keeping its phase.

    Zero elements stay zero: a resonator state can transiently contain
    exact zeros, and inventing a phase for them would inject noise.
    """
    x = _as_complex(x)
    mag = np.abs(x)
    out = np.zeros_like(x)
    nz = mag > 0
    out[nz] = x[nz] / mag[nz]
    return out


def normalize_l2(x) -> Hypervector:
    """Scale a vector to unit L2 norm.  Raises on the zero vector."""
    x = _as_complex(x)
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return x / norm


@dataclass(frozen=True)
class CleanupNonlinearity:
    """Coefficient shaping applied inside :func:`cleanup`.

    kind:
        ``relu_power`` -- ReLU on the real part, then raised to ``k``.
        ``power``      -- signed power of the real part (no threshold).
        ``identity``   -- complex coefficients passed through untouched.
    k:
        exponent, > 0.  Ignored for ``identity``.
    """

    kind: str = "relu_power"
    k: float = 1.0

    def __post_init__(self):
        if self.kind not in ("relu_power", "power", "identity"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.k <= 0:
            raise ValueError("exponent k must be positive")

    def apply(self, coefficients: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return coefficients
        re = np.real(coefficients)
        if self.kind == "relu_power":
            re = np.maximum(re, 0.0)
            return re if self.k == 1.0 else re**self.k
        # signed power: keep the sign, raise the magnitude
        if self.k == 1.0:
            return re
        return np.sign(re) * np.abs(re) ** self.k


@dataclass
class Codebook:
    """A labelled set of hypervectors stored as columns of an N x K matrix.

    Attributes:
        columns: complex array of shape (N, K).
        labels: K human-readable identifiers (letters, angles, offsets...).
        topology: 'linear' for unconstrained phases, 'periodic' when phases
            are multiples of 2*pi/period so that powers wrap around.
        period: lattice period for 'periodic' topology, else None.
    """

    columns: np.ndarray
    labels: list = field(default_factory=list)
    topology: str = "linear"
    period: int | None = None

    def __post_init__(self):
        self.columns = np.asarray(self.columns)
        if self.columns.ndim != 2:
            raise ValueError("codebook columns must be an N x K matrix")
        if len(self.labels) != self.columns.shape[1]:
            raise ValueError("need one label per column")
        if self.topology not in _TOPOLOGY_TAGS:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.topology == "periodic" and not self.period:
            self.period = self.columns.shape[1]

    @property
    def n_dims(self) -> int:
        return self.columns.shape[0]

    @property
    def size(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def from_base_powers(
        cls,
        base,
        exponents: Sequence[float],
        labels: Sequence | None = None,
        topology: str = "linear",
        period: int | None = None,
    ) -> "Codebook":
        """Build columns ``base**e`` for each exponent ``e``."""
        base = _as_complex(base)
        phi = np.angle(base)
        exps = np.asarray(list(exponents), dtype=np.float64)
        cols = np.exp(1j * np.outer(phi, exps))
        if labels is None:
            labels = [e for e in exps.tolist()]
        return cls(cols, list(labels), topology=topology, period=period)

    def index_of(self, label) -> int:
        return self.labels.index(label)

    def save(self, path) -> None:
        """Write the binary container plus a JSON label sidecar.

        Layout: magic ``FHRR1``, uint32 N, uint32 K, uint8 topology tag
        (0=linear, 1=periodic), then the K columns in order as N complex64
        (real, imag) float32 pairs, all little-endian.  Labels go to
        ``<path>.json``.
        """
        path = Path(path)
        n, k = self.columns.shape
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IIB", n, k, _TOPOLOGY_TAGS[self.topology]))
            data = np.asfortranarray(self.columns.astype(np.complex64))
            fh.write(data.tobytes(order="F"))
        sidecar = {"labels": self.labels}
        if self.period is not None:
            sidecar["period"] = int(self.period)
        with open(str(path) + ".json", "w") as fh:
            json.dump(sidecar, fh)

    @classmethod
    def load(cls, path) -> "Codebook":
        path = Path(path)
        with open(path, "rb") as fh:
            magic = fh.read(5)
            if magic != _MAGIC:
                raise ValueError(f"not a codebook container: bad magic {magic!r}")
            n, k, tag = struct.unpack("<IIB", fh.read(9))
            raw = np.frombuffer(fh.read(n * k * 8), dtype="<c8")
        columns = raw.reshape((n, k), order="F").astype(np.complex128)
        sidecar_path = Path(str(path) + ".json")
        labels = list(range(k))
        period = None
        if sidecar_path.exists():
            with open(sidecar_path) as fh:
                sidecar = json.load(fh)
            labels = sidecar.get("labels", labels)
            period = sidecar.get("period")
        return cls(columns, labels, topology=_TAG_TOPOLOGIES[tag], period=period)


def cleanup(
    book: Codebook, x, nl: CleanupNonlinearity | None = None
) -> tuple[Hypervector, np.ndarray]:
    """Project a vector onto a codebook and re-synthesize from it.

    Coefficients are ``(1/N) * columns^dagger x`` so a perfect match with a
    unit-phasor column reads out as roughly 1.  The nonlinearity shapes the
    coefficients before the weighted sum of columns is formed; identity
    keeps the whole operation linear.

    Args:
        book: codebook to clean up against.
        x: input vector of matching dimensionality.
        nl: coefficient nonlinearity; defaults to identity.

    Returns:
        (output vector, raw complex coefficients of length K).
    """
    x = _as_complex(x)
    if book.n_dims != x.shape[-1]:
        raise ValueError(
            f"dimension mismatch: codebook N={book.n_dims}, vector N={x.shape[-1]}"
        )
    if nl is None:
        nl = CleanupNonlinearity("identity")
    coefficients = (book.columns.conj().T @ x) / book.n_dims
    out = book.columns @ nl.apply(coefficients)
    return out, coefficients
