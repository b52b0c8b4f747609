"""Log-polar resampling and its lift into hypervector space.

In log-polar coordinates (theta = angle around a center, rho = log radius),
image rotation becomes a cyclic shift along theta and uniform scaling a
shift along rho.  That turns the non-commutative rotation/scale part of a
rigid transform into the same kind of translation the phasor algebra
already handles.

The pixel-space mapping is a sparse bilinear :class:`ResampleMatrix` (one
forward, one backward).  Lifted to hypervectors, the bridge transform
decodes a vector to pixels, resamples, and re-encodes on the other grid --
see :func:`apply_lambda` / :func:`apply_lambda_inverse`.  The decode step
takes a real part, so the bridge is only piecewise-linear; it is also
rank-deficient (the annulus misses part of the image), so the backward
bridge is an operational inverse, not a matrix inverse.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .fhrr import Codebook, Hypervector, random_phasor, random_phasor_periodic
from .imagecodec import decode_plane, encode_plane


@dataclass(frozen=True)
class LogPolarGrid:
    """Sampling grid: n_rot angular bins over [0, 2pi), n_scale log-radius
    bins spanning [r_min, r_max] geometrically, around a real-valued center.
    """

    n_rot: int = 64
    n_scale: int = 32
    center: tuple[float, float] = (31.5, 31.5)
    r_min: float = 1.5
    r_max: float = 30.0

    def __post_init__(self):
        if self.n_rot < 4:
            raise ValueError("need at least 4 angular bins")
        if self.n_scale < 2:
            raise ValueError("need at least 2 log-radius bins")
        if self.r_min <= 0 or self.r_max <= self.r_min:
            raise ValueError("need 0 < r_min < r_max")

    @property
    def rho_step(self) -> float:
        """Log-radius bin width; scaling by exp(rho_step) shifts one bin."""
        return np.log(self.r_max / self.r_min) / (self.n_scale - 1)

    @property
    def theta_step(self) -> float:
        return 2.0 * np.pi / self.n_rot

    def rho_values(self) -> np.ndarray:
        return np.log(self.r_min) + self.rho_step * np.arange(self.n_scale)

    def theta_values(self) -> np.ndarray:
        return self.theta_step * np.arange(self.n_rot)


def _bilinear_rows(points_x, points_y, width, height, wrap_x=False):
    """Bilinear sample weights for real-valued points on a (width, height) grid.

    Returns (row_idx_list, col_idx, weight) triplets for a sparse matrix in
    which row i samples the flattened source image at (points_x[i],
    points_y[i]).  Neighbors falling outside the grid are dropped (their
    weight is lost), unless ``wrap_x`` wraps the first axis periodically.
    """
    rows, cols, vals = [], [], []
    x0 = np.floor(points_x).astype(int)
    y0 = np.floor(points_y).astype(int)
    fx = points_x - x0
    fy = points_y - y0
    for dx_, dy_ in ((0, 0), (0, 1), (1, 0), (1, 1)):
        wx = fx if dx_ else 1.0 - fx
        wy = fy if dy_ else 1.0 - fy
        weight = wx * wy
        px = x0 + dx_
        py = y0 + dy_
        if wrap_x:
            px = np.mod(px, width)
            valid = (py >= 0) & (py < height) & (weight > 0)
        else:
            valid = (px >= 0) & (px < width) & (py >= 0) & (py < height) & (weight > 0)
        idx = np.nonzero(valid)[0]
        rows.append(idx)
        cols.append(px[idx] * height + py[idx])
        vals.append(weight[idx])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


@dataclass
class ResampleMatrix:
    """Sparse bilinear resampler between flattened pixel grids."""

    matrix: sparse.csr_matrix
    grid: LogPolarGrid
    direction: str  # 'forward' (cartesian -> logpolar) or 'backward'
    interpolation: str = "bilinear"

    def __matmul__(self, other):
        return self.matrix @ other

    @property
    def shape(self):
        return self.matrix.shape

    def save(self, path) -> None:
        """Binary CSR container: magic, JSON header, then indptr/indices/data."""
        m = self.matrix
        header = json.dumps(
            {
                "shape": list(m.shape),
                "nnz": int(m.nnz),
                "direction": self.direction,
                "interpolation": self.interpolation,
                "grid": {
                    "n_rot": self.grid.n_rot,
                    "n_scale": self.grid.n_scale,
                    "center": list(self.grid.center),
                    "r_min": self.grid.r_min,
                    "r_max": self.grid.r_max,
                },
            }
        ).encode()
        with open(path, "wb") as fh:
            fh.write(b"LPCSR1")
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(m.indptr.astype("<i8").tobytes())
            fh.write(m.indices.astype("<i8").tobytes())
            fh.write(m.data.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ResampleMatrix":
        with open(path, "rb") as fh:
            if fh.read(6) != b"LPCSR1":
                raise ValueError("not a resample-matrix container")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen))
            n_rows, n_cols = header["shape"]
            indptr = np.frombuffer(fh.read(8 * (n_rows + 1)), dtype="<i8")
            indices = np.frombuffer(fh.read(8 * header["nnz"]), dtype="<i8")
            data = np.frombuffer(fh.read(8 * header["nnz"]), dtype="<f8")
        matrix = sparse.csr_matrix((data, indices, indptr), shape=(n_rows, n_cols))
        g = header["grid"]
        grid = LogPolarGrid(
            g["n_rot"], g["n_scale"], tuple(g["center"]), g["r_min"], g["r_max"]
        )
        return cls(matrix, grid, header["direction"], header["interpolation"])


def build_logpolar_matrices(
    grid: LogPolarGrid, width: int, height: int
) -> tuple[ResampleMatrix, ResampleMatrix]:
    """Build the forward (cartesian->logpolar) and backward resamplers.

    Forward row (i, j) samples the image bilinearly at
    ``center + exp(rho_j) * (cos theta_i, sin theta_i)``; backward rows
    sample the log-polar plane at each Cartesian pixel's (theta, rho),
    wrapping the theta axis and zeroing pixels outside the annulus.
    """
    if grid.r_max > min(width, height) / 2:
        raise ValueError("r_max exceeds half the image size")
    cx, cy = grid.center

    theta, rho = np.meshgrid(grid.theta_values(), grid.rho_values(), indexing="ij")
    src_x = (cx + np.exp(rho) * np.cos(theta)).reshape(-1)
    src_y = (cy + np.exp(rho) * np.sin(theta)).reshape(-1)
    rows, cols, vals = _bilinear_rows(src_x, src_y, width, height)
    forward = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(grid.n_rot * grid.n_scale, width * height)
    )

    xs, ys = np.meshgrid(np.arange(width), np.arange(height), indexing="ij")
    dx = xs.reshape(-1) - cx
    dy = ys.reshape(-1) - cy
    radius = np.hypot(dx, dy)
    angle = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    with np.errstate(divide="ignore"):
        rho_pix = np.where(radius > 0, np.log(np.maximum(radius, 1e-300)), -np.inf)
    u = angle / grid.theta_step
    w = (rho_pix - np.log(grid.r_min)) / grid.rho_step
    inside = (radius >= grid.r_min) & (radius <= grid.r_max)
    u = np.where(inside, u, 0.0)
    w = np.where(inside, w, -10.0)  # parked outside the grid -> zero row
    rows, cols, vals = _bilinear_rows(u, w, grid.n_rot, grid.n_scale, wrap_x=True)
    backward = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(width * height, grid.n_rot * grid.n_scale)
    )
    return (
        ResampleMatrix(forward, grid, "forward"),
        ResampleMatrix(backward, grid, "backward"),
    )


def build_periodic_codebook(seed: int, n_dims: int, size: int) -> Codebook:
    """Codebook of integer powers of a phase-lattice base vector.

    Column k is ``base**k``; column ``size`` would wrap to column 0 exactly,
    so shifts along this codebook's axis are toroidal.
    """
    if size < 2:
        raise ValueError("need at least 2 columns")
    base = random_phasor_periodic(seed, n_dims, size)
    return Codebook.from_base_powers(
        base, range(size), labels=list(range(size)), topology="periodic", period=size
    )


@dataclass
class LogPolarEncoder:
    """Phasor encoder for (theta, rho) planes.

    ``position_h`` is the periodic theta codebook (rotations wrap around),
    ``position_v`` the linear-topology rho codebook (scale does not wrap).
    The layout mirrors the Cartesian encoder so the same plane
    encode/decode helpers work on both.
    """

    seed: int
    n_dims: int
    grid: LogPolarGrid
    position_h: Codebook = field(init=False, repr=False)
    position_v: Codebook = field(init=False, repr=False)
    theta_base: Hypervector = field(init=False, repr=False)
    rho_base: Hypervector = field(init=False, repr=False)

    def __post_init__(self):
        root = np.random.SeedSequence(self.seed)
        t_seed, r_seed = root.spawn(2)
        self.theta_base = random_phasor_periodic(t_seed, self.n_dims, self.grid.n_rot)
        self.rho_base = random_phasor(r_seed, self.n_dims)
        self.position_h = Codebook.from_base_powers(
            self.theta_base,
            range(self.grid.n_rot),
            labels=list(range(self.grid.n_rot)),
            topology="periodic",
            period=self.grid.n_rot,
        )
        self.position_v = Codebook.from_base_powers(
            self.rho_base,
            range(self.grid.n_scale),
            labels=list(range(self.grid.n_scale)),
        )

    def rotation_codebook(self, half_range: int | None = None) -> Codebook:
        """Powers of the theta base: column k = rotation by k angular bins.

        With ``half_range`` the book covers only the arc [-half_range,
        +half_range] bins around zero.  An arc is not circular, so the
        restricted book uses linear topology (readout must not wrap).
        Tasks whose rotations are bounded pass their range here; columns
        beyond it only ever serve as spurious attractors (a letter upside
        down explaining another letter).
        """
        if half_range is None:
            return Codebook.from_base_powers(
                self.theta_base,
                range(self.grid.n_rot),
                labels=list(range(self.grid.n_rot)),
                topology="periodic",
                period=self.grid.n_rot,
            )
        shifts = list(range(-half_range, half_range + 1))
        return Codebook.from_base_powers(self.theta_base, shifts, labels=shifts)

    def scale_codebook(self, half_range: int | None = None) -> Codebook:
        """Centered powers of the rho base: column for shift k = scale exp(k * rho_step).

        ``half_range`` restricts the book to shifts in [-half_range,
        +half_range]; columns outside the scale range a task can actually
        produce are pure spurious attractors, so benchmark pipelines pass
        the generative range here.
        """
        if half_range is None:
            half = self.grid.n_scale // 2
            shifts = list(range(-half, self.grid.n_scale - half))
        else:
            shifts = list(range(-half_range, half_range + 1))
        return Codebook.from_base_powers(self.rho_base, shifts, labels=shifts)


class LambdaTransform:
    """Bridge between a Cartesian encoder and a log-polar encoder.

    Forward: decode -> forward-resample -> encode on the log-polar grid.
    Backward: decode -> backward-resample -> encode on the Cartesian grid.
    """

    def __init__(self, enc_cart, enc_lp: LogPolarEncoder, forward, backward):
        self.enc_cart = enc_cart
        self.enc_lp = enc_lp
        self.forward = forward
        self.backward = backward
        g = enc_lp.grid
        self._lp_shape = (g.n_rot, g.n_scale)
        self._cart_shape = (
            enc_cart.position_h.columns.shape[1],
            enc_cart.position_v.columns.shape[1],
        )

    def apply(self, s: Hypervector) -> Hypervector:
        plane = decode_plane(self.enc_cart, s)
        resampled = (self.forward @ plane.reshape(-1)).reshape(self._lp_shape)
        return encode_plane(self.enc_lp, resampled)

    def apply_inverse(self, s_lp: Hypervector) -> Hypervector:
        plane = decode_plane(self.enc_lp, s_lp)
        resampled = (self.backward @ plane.reshape(-1)).reshape(self._cart_shape)
        return encode_plane(self.enc_cart, resampled)


def apply_lambda(enc_cart, enc_lp, mats, s: Hypervector) -> Hypervector:
    """Functional form of the forward bridge; ``mats`` = (forward, backward)."""
    return LambdaTransform(enc_cart, enc_lp, mats[0], mats[1]).apply(s)


def apply_lambda_inverse(enc_cart, enc_lp, mats, s_lp: Hypervector) -> Hypervector:
    """Functional form of the backward bridge."""
    return LambdaTransform(enc_cart, enc_lp, mats[0], mats[1]).apply_inverse(s_lp)
