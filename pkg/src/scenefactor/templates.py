"""Letter templates: loading, alignment, whitening, and codebook encoding.

Raw letter rasters are far from orthogonal (c/o correlate strongly), which
makes linear cleanup memories misfire.  Whitening fixes that by flattening
the singular-value spectrum of the template matrix: with P = U S V^T, the
whitened set is U V^T, whose columns are exactly orthonormal in pixel
space.  Two variants are provided:

* :func:`whiten_plain` -- one joint SVD over the set, used where templates
  appear in a canonical pose (the pattern factor of rotation/scale models).
* :func:`whiten_aligned` -- the per-letter procedure for translation
  factorization: for each letter, every *other* letter is first registered
  onto it by phase correlation, the stack is whitened, and only that
  letter's whitened column is kept.  This suppresses the near-duplicates
  that integer shifts would otherwise create.

Encoded codebooks are cached on disk keyed by encoder seed, dimensionality,
and a hash of the template assets.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import netpbm
from .fhrr import Codebook
from .imagecodec import encode_plane

ASSET_DIR = Path(__file__).parent / "assets" / "templates"


@dataclass
class TemplateSet:
    """Letter rasters as columns of a (P_x * P_y) x D matrix, values in [0, 1].

    Columns are flattened from (x, y) arrays in row-major (x-major) order.
    """

    columns: np.ndarray
    labels: list
    width: int
    height: int

    def __post_init__(self):
        if self.columns.ndim != 2 or self.columns.shape[1] != len(self.labels):
            raise ValueError("columns/labels mismatch")
        if self.columns.shape[0] != self.width * self.height:
            raise ValueError("column length does not match raster size")
        if np.min(self.columns) < 0 or np.max(self.columns) > 1:
            raise ValueError("template values must lie in [0, 1]")

    @property
    def count(self) -> int:
        return self.columns.shape[1]

    def image(self, index: int) -> np.ndarray:
        return self.columns[:, index].reshape(self.width, self.height)


@dataclass
class WhitenedSet:
    """Whitened template columns plus the domain they live in."""

    columns: np.ndarray
    labels: list
    width: int
    height: int
    domain: str = "cartesian"

    def image(self, index: int) -> np.ndarray:
        return self.columns[:, index].reshape(self.width, self.height)


def load_templates(path=ASSET_DIR, width: int = 64, height: int = 64) -> TemplateSet:
    """Load every ``<label>.pgm`` in a directory, sorted by label.

    Raises on missing directory, wrong raster size, or a blank template
    (whitening would be undefined for a zero column).
    """
    path = Path(path)
    files = sorted(path.glob("*.pgm"))
    if not files:
        raise FileNotFoundError(f"no .pgm templates found in {path}")
    labels, columns = [], []
    for fname in files:
        raster = netpbm.read_netpbm(fname)
        if raster.shape != (width, height):
            raise ValueError(
                f"{fname.name}: expected {width}x{height}, got {raster.shape}"
            )
        if raster.max() <= 0:
            raise ValueError(f"{fname.name}: blank (all-zero) template")
        labels.append(fname.stem)
        columns.append(raster.reshape(-1))
    return TemplateSet(np.stack(columns, axis=1), labels, width, height)


def align_pair(fixed: np.ndarray, moving: np.ndarray) -> tuple[int, int, np.ndarray]:
    """Register ``moving`` onto ``fixed`` by FFT phase correlation.

    The normalized cross-power spectrum ``F G* / |F G*|`` is inverse
    transformed; its peak gives the integer toroidal shift that best
    aligns the pair.  Exact ties are broken by smallest ``|dx| + |dy|``,
    then smallest dx, then smallest dy, with peak coordinates read as
    signed offsets in ``[-P/2, P/2)``.

    Returns:
        (dx, dy, aligned) where ``aligned = roll(moving, (dx, dy))``.
    """
    fixed = np.asarray(fixed, dtype=np.float64)
    moving = np.asarray(moving, dtype=np.float64)
    if fixed.shape != moving.shape:
        raise ValueError("shape mismatch")
    if fixed.max() <= 0 or moving.max() <= 0:
        raise ValueError("cannot align an all-zero raster")
    f = np.fft.fft2(fixed)
    g = np.fft.fft2(moving)
    cross = f * np.conj(g)
    mag = np.abs(cross)
    cross /= np.maximum(mag, 1e-30)
    surface = np.real(np.fft.ifft2(cross))
    peak = surface.max()
    ties = np.argwhere(surface >= peak - 1e-9 * max(1.0, abs(peak)))
    nx, ny = fixed.shape
    candidates = []
    for px, py in ties:
        dx = int(px) - nx if px >= nx // 2 else int(px)
        dy = int(py) - ny if py >= ny // 2 else int(py)
        candidates.append((abs(dx) + abs(dy), dx, dy))
    _, dx, dy = min(candidates)
    aligned = np.roll(moving, (dx, dy), axis=(0, 1))
    return dx, dy, aligned


def svd_orthonormalize(matrix: np.ndarray) -> np.ndarray:
    """Replace a matrix by U V^T from its thin SVD (all singular values -> 1).

    Signs of the singular vector pairs are fixed so each left vector's
    largest-magnitude entry is positive, making the decomposition (not just
    the product, which is sign-invariant) deterministic.
    """
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s[-1] < 1e-10 * s[0]:
        raise np.linalg.LinAlgError(
            f"rank-deficient template stack (sigma_min/sigma_max = {s[-1] / s[0]:.2e})"
        )
    flips = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])])
    return (u * flips) @ (flips[:, None] * vt)


def dual_basis(columns: np.ndarray) -> np.ndarray:
    """Dual frame of a column stack: A = P (P†P)^-1, so that A†P = I.

    Inner products against the dual columns read out exact mixture
    coefficients of the raw columns even when those are strongly
    correlated -- orthonormalization only takes the Gram matrix to its
    square root, which still leaks badly for near-duplicate pairs.  The
    caller may append transformed copies of the dictionary (e.g. rotations)
    to decorrelate against those too, then keep only the leading duals.
    """
    P = np.asarray(columns)
    gram = P.conj().T @ P
    sv = np.linalg.svd(gram, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise np.linalg.LinAlgError(
            f"dictionary is rank deficient (cond = {sv[0] / sv[-1]:.2e})"
        )
    return np.linalg.solve(gram, P.conj().T).conj().T


def whiten_plain(tset: TemplateSet) -> WhitenedSet:
    """Joint SVD whitening: output columns are orthonormal in pixel space."""
    if tset.count < 2:
        raise ValueError("need at least two templates to whiten")
    try:
        whitened = svd_orthonormalize(tset.columns)
    except np.linalg.LinAlgError as err:
        raise ValueError(f"whitening failed: {err}") from err
    return WhitenedSet(whitened, list(tset.labels), tset.width, tset.height)


def whiten_aligned(tset: TemplateSet) -> WhitenedSet:
    """Per-letter whitening with phase-correlation pre-alignment.

    For each letter, all other letters are registered onto it, the aligned
    stack is whitened jointly, and only the target letter's whitened column
    is retained.  Columns from different whitenings are not exactly
    orthogonal, but residual correlations are an order of magnitude below
    the raw templates'.
    """
    if tset.count < 2:
        raise ValueError("need at least two templates to whiten")
    out = np.empty_like(tset.columns)
    for i in range(tset.count):
        target = tset.image(i)
        stack = np.empty_like(tset.columns)
        for j in range(tset.count):
            if j == i:
                stack[:, j] = tset.columns[:, i]
            else:
                _, _, aligned = align_pair(target, tset.image(j))
                stack[:, j] = aligned.reshape(-1)
        try:
            whitened = svd_orthonormalize(stack)
        except np.linalg.LinAlgError as err:
            raise ValueError(
                f"whitening failed for letter {tset.labels[i]!r}: {err}"
            ) from err
        out[:, i] = whitened[:, i]
    return WhitenedSet(out, list(tset.labels), tset.width, tset.height)


def encode_templates(wset: WhitenedSet, enc, resample=None) -> Codebook:
    """Encode whitened pixel columns into a hypervector codebook.

    With ``resample`` given (a sparse pixel-space resampling matrix), each
    column is mapped to the resampled grid first and ``enc`` must be the
    encoder of that grid -- this is how the log-polar letter codebook
    is built from Cartesian whitened templates.
    """
    cols = []
    for j in range(wset.columns.shape[1]):
        col = wset.columns[:, j]
        if resample is not None:
            col = resample @ col
            plane = col.reshape(
                enc.position_h.columns.shape[1], enc.position_v.columns.shape[1]
            )
        else:
            plane = col.reshape(wset.width, wset.height)
        cols.append(encode_plane(enc, plane))
    return Codebook(np.stack(cols, axis=1), list(wset.labels))


def asset_hash(path=ASSET_DIR) -> str:
    """SHA-256 over the sorted template files (names and bytes)."""
    digest = hashlib.sha256()
    for fname in sorted(Path(path).glob("*.pgm")):
        digest.update(fname.name.encode())
        digest.update(fname.read_bytes())
    return digest.hexdigest()


def cached_codebook(cache_dir, key_parts, builder) -> Codebook:
    """Load a codebook from ``cache_dir`` or build and store it.

    ``key_parts`` is any tuple of hashable values identifying the build
    inputs (encoder seed, N, asset hash, variant...).
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = hashlib.sha256(repr(tuple(key_parts)).encode()).hexdigest()[:20]
    path = cache_dir / f"codebook_{key}.fhrr"
    if path.exists():
        return Codebook.load(path)
    book = builder()
    book.save(path)
    return book
