"""Synthetic scene sampling, rendering, and symbolic encoding.

A scene is a set of colored letters with real-valued poses.  Ground truth
is sampled first (:func:`sample_scene`), then rendered to pixels with
subpixel bilinear placement (:func:`render_scene`).  Placement retries
positions that would overlap an already-placed letter, up to a bounded
number of attempts, and records the attempt count in the returned
provenance.

Translation uses cyclic (toroidal) interpolation to match the encoder's
edge semantics exactly; templates are sized so letters stay clear of the
borders at benchmark shift ranges anyway.

:func:`encode_scene` builds the same scene symbolically -- a sum of
letter-pattern vectors bound with fractional position powers and color
vectors -- which serves as an oracle for the render+encode path.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .fhrr import Hypervector, fractional_power
from .imagecodec import COLOR_MIXING, COLOR_NAMES, ImageTensor, encode_plane
from .templates import TemplateSet

# letters darker than one 8-bit step are treated as background everywhere
INK_THRESHOLD = 1.0 / 255.0


@dataclass
class SceneObject:
    letter: str
    color: str
    x: float
    y: float
    rotation: float = 0.0  # degrees
    scale: float = 1.0
    attempts: int = 1  # placement attempts used during rendering


@dataclass
class SceneSpec:
    objects: list
    seed: int
    task: str = "translation"

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "task": self.task,
                "objects": [dataclasses.asdict(o) for o in self.objects],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        raw = json.loads(text)
        objects = [SceneObject(**o) for o in raw["objects"]]
        return cls(objects, raw["seed"], raw["task"])


@dataclass
class SceneImage:
    image: ImageTensor
    spec: SceneSpec


@dataclass(frozen=True)
class SceneConfig:
    """Sampling ranges for the two benchmark tasks.

    The rigid task draws from the first ``rigid_letters`` template labels,
    rotation uniform in ``rot_range`` degrees, and scale log-uniform over
    ``scale_range``.  Both tasks draw positions uniformly within
    ``max_shift`` pixels of the image center.
    """

    max_shift: float = 19.0
    rigid_letters: int = 10
    rot_range: tuple[float, float] = (-89.0, 89.0)
    scale_range: tuple[float, float] = (0.8, 1.25)
    overlap_max_attempts: int = 20

    def content_hash(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


def sample_scene(
    seed: int,
    n_objects: int,
    task: str = "translation",
    labels=None,
    config: SceneConfig = SceneConfig(),
) -> SceneSpec:
    """Draw ground-truth factors for one scene, deterministically per seed."""
    if n_objects < 1:
        raise ValueError("need at least one object")
    if task not in ("translation", "rigid"):
        raise ValueError(f"unknown task {task!r}")
    if labels is None:
        labels = [chr(ord("a") + i) for i in range(26)]
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
    n_letters = config.rigid_letters if task == "rigid" else len(labels)
    objects = []
    for _ in range(n_objects):
        letter = labels[int(rng.integers(0, n_letters))]
        color = COLOR_NAMES[int(rng.integers(0, len(COLOR_NAMES)))]
        x, y = rng.uniform(-config.max_shift, config.max_shift, size=2)
        if task == "rigid":
            rotation = float(rng.uniform(*config.rot_range))
            lo, hi = np.log(config.scale_range)
            scale = float(np.exp(rng.uniform(lo, hi)))
        else:
            rotation, scale = 0.0, 1.0
        objects.append(SceneObject(letter, color, float(x), float(y), rotation, scale))
    return SceneSpec(objects, seed, task)


def transform_template(
    raster: np.ndarray,
    dx: float,
    dy: float,
    rotation: float = 0.0,
    scale: float = 1.0,
) -> np.ndarray:
    """Place one template: rotate/scale about the raster center, then shift.

    Everything happens in a single bilinear resample.  The shift wraps
    toroidally, matching the encoder's translation semantics bit for bit
    on integer offsets.
    """
    raster = np.asarray(raster, dtype=np.float64)
    center = (np.asarray(raster.shape) - 1) / 2.0
    if rotation == 0.0 and scale == 1.0:
        return ndimage.shift(raster, (dx, dy), order=1, mode="grid-wrap", cval=0.0)
    theta = np.deg2rad(rotation)
    # output(p) = input(A (p - center - t) + center): rotate by +theta, scale
    # by +scale, then translate by t
    a = np.array(
        [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
    ) / scale
    offset = center - a @ (center + np.array([dx, dy]))
    return ndimage.affine_transform(
        raster, a, offset=offset, order=1, mode="grid-wrap", cval=0.0
    )


def render_scene(
    spec: SceneSpec, templates: TemplateSet, config: SceneConfig = SceneConfig()
) -> SceneImage:
    """Render a scene to an RGB image, retrying overlapping placements.

    If a placed letter shares any ink pixel with previously placed ones,
    its position is redrawn (same distribution, dedicated retry stream) up
    to ``overlap_max_attempts`` times; the final draw is accepted
    regardless.  The returned spec carries the final positions and the
    attempt counts.
    """
    width, height = templates.width, templates.height
    canvas = np.zeros((width, height, 3))
    occupied = np.zeros((width, height), dtype=bool)
    retry_rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(2)[1])
    placed = []
    for obj in spec.objects:
        raster = templates.image(templates.labels.index(obj.letter))
        x, y = obj.x, obj.y
        attempts = 1
        while True:
            gray = transform_template(raster, x, y, obj.rotation, obj.scale)
            mask = gray > INK_THRESHOLD
            if not (mask & occupied).any() or attempts >= config.overlap_max_attempts:
                break
            attempts += 1
            x, y = retry_rng.uniform(-config.max_shift, config.max_shift, size=2)
        occupied |= mask
        rgb = COLOR_MIXING[:, COLOR_NAMES.index(obj.color)]
        canvas += gray[:, :, None] * rgb[None, None, :]
        placed.append(
            SceneObject(obj.letter, obj.color, x, y, obj.rotation, obj.scale, attempts)
        )
    return SceneImage(
        ImageTensor(np.clip(canvas, 0.0, 1.0)),
        SceneSpec(placed, spec.seed, spec.task),
    )


def encode_scene(spec: SceneSpec, enc, templates: TemplateSet) -> Hypervector:
    """Symbolic scene encoding: sum of pattern (x) color (x) position products.

    The pattern vector for each object is its rotated/scaled (but
    uncentered, unshifted) template encoded with position codes; position
    enters as fractional powers of the encoder bases, color as the matching
    mixed-color vector.  For integer poses this equals the encoding of the
    rendered image up to interpolation differences.
    """
    if enc.channels != 3:
        raise ValueError("scene encoding requires an RGB encoder")
    total = np.zeros(enc.n_dims, dtype=np.complex128)
    for obj in spec.objects:
        raster = templates.image(templates.labels.index(obj.letter))
        if obj.rotation != 0.0 or obj.scale != 1.0:
            raster = transform_template(raster, 0.0, 0.0, obj.rotation, obj.scale)
        pattern = encode_plane(enc, raster)
        color = enc.color_mixed.columns[:, COLOR_NAMES.index(obj.color)]
        pose = fractional_power(enc.h_base, obj.x) * fractional_power(
            enc.v_base, obj.y
        )
        total += pattern * color * pose
    return total


def write_dataset(
    out_dir,
    seeds,
    n_objects: int,
    task: str,
    templates: TemplateSet,
    config: SceneConfig = SceneConfig(),
) -> dict:
    """Render scenes for each seed into ``out_dir`` and write a manifest.

    Files: ``scene_<seed>.ppm`` + ``scene_<seed>.json`` per scene, plus
    ``manifest.json`` recording the generation config and its hash.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for seed in seeds:
        scene = render_scene(
            sample_scene(seed, n_objects, task, templates.labels, config),
            templates,
            config,
        )
        scene.image.save(out_dir / f"scene_{seed}.ppm")
        (out_dir / f"scene_{seed}.json").write_text(scene.spec.to_json())
        entries.append(f"scene_{seed}")
    manifest = {
        "task": task,
        "n_objects": n_objects,
        "seeds": [int(s) for s in seeds],
        "config": dataclasses.asdict(config),
        "config_hash": config.content_hash(),
        "entries": entries,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest
