"""Diagnostic: pixel-domain pose scan top-1 vs truth on 16 rigid scenes."""
import time

import numpy as np

from scenefactor.pipelines import build_rigid_pipeline
from scenefactor.scenes import sample_scene, render_scene

pipe = build_rigid_pipeline()
BIN_DEG = 360.0 / pipe.grid.n_rot
letters = list(pipe.templates.labels)

hits = 0
t_total = 0.0
for i in range(16):
    seed = 30000 + i
    spec = sample_scene(seed, 1, task="rigid")
    img = render_scene(spec, pipe.templates)
    obj = img.spec.objects[0]
    pixels = img.image.pixels

    t0 = time.time()
    color_name, ranked = pipe.candidate_scan(pixels)
    t_total += time.time() - t0
    sc, j, rb, sb, dx, dy = ranked[0]
    ok = (
        letters[j] == obj.letter
        and color_name == obj.color
        and abs(rb * BIN_DEG - obj.rotation) <= 1.5 * BIN_DEG
        and abs(dx - obj.x) <= 1.5
        and abs(dy - obj.y) <= 1.5
    )
    hits += ok
    print(
        f"{i:2d} truth {obj.letter}/{obj.color[:3]}{obj.rotation:+6.1f}deg s={obj.scale:.2f} "
        f"({obj.x:+5.1f},{obj.y:+5.1f}) | scan {letters[j]}/{color_name[:3]}"
        f"{rb * BIN_DEG:+6.1f}deg sb={sb:+4.1f} ({dx:+5.1f},{dy:+5.1f}) "
        f"score={sc:.3f} {'OK' if ok else 'MISS'}"
    )
print(f"scan top-1 correct: {hits}/16, avg scan time {t_total / 16:.2f}s")
