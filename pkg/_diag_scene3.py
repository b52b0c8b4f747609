"""Why does the scan miss scenes 2 and 3?"""
import numpy as np

from scenefactor.pipelines import build_rigid_pipeline
from scenefactor.scenes import sample_scene, render_scene, transform_template
from scenefactor.imagecodec import COLOR_MIXING, COLOR_NAMES

pipe = build_rigid_pipeline()
BIN_DEG = 360.0 / pipe.grid.n_rot
letters = list(pipe.templates.labels)

for i in (2, 3):
    seed = 30000 + i
    spec = sample_scene(seed, 1, task="rigid")
    img = render_scene(spec, pipe.templates)
    obj = img.spec.objects[0]
    pixels = img.image.pixels
    mix = COLOR_MIXING[:, COLOR_NAMES.index(obj.color)]
    gray = pixels @ mix / float(mix @ mix)

    j = letters.index(obj.letter)
    raster = pipe.templates.image(j)

    # truth-pose candidate, continuous pose
    cand = transform_template(raster, obj.x, obj.y, obj.rotation, obj.scale)
    cos_true = np.sum(cand * gray) / (np.linalg.norm(cand) * np.linalg.norm(gray))

    # nearest lattice pose
    rb = round(obj.rotation / BIN_DEG)
    sb = round(np.log(obj.scale) / pipe.grid.rho_step)
    cand_q = transform_template(raster, obj.x, obj.y, rb * BIN_DEG, float(np.exp(sb * pipe.grid.rho_step)))
    cos_q = np.sum(cand_q * gray) / (np.linalg.norm(cand_q) * np.linalg.norm(gray))

    # centroid-predicted position for the true lattice cell
    mass = gray.sum()
    gx = float((gray.sum(axis=1) * np.arange(gray.shape[0])).sum() / mass)
    gy = float((gray.sum(axis=0) * np.arange(gray.shape[1])).sum() / mass)
    center = (np.asarray(gray.shape) - 1) / 2.0
    rmass = raster.sum()
    rx = float((raster.sum(axis=1) * np.arange(raster.shape[0])).sum() / rmass)
    ry = float((raster.sum(axis=0) * np.arange(raster.shape[1])).sum() / rmass)
    rel = np.array([rx, ry]) - center
    theta = np.deg2rad(rb * BIN_DEG)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    scale = float(np.exp(sb * pipe.grid.rho_step))
    pred = np.array([gx, gy]) - center - scale * (rot @ rel)

    # ink extent of the rendered scene (wrap check)
    ys, xs = np.nonzero(gray.T > 1 / 255)  # gray is (x, y)
    print(
        f"scene {i}: {obj.letter}{obj.rotation:+.1f} s={obj.scale:.2f} at ({obj.x:+.1f},{obj.y:+.1f})\n"
        f"  cos@truth-pose={cos_true:.3f}  cos@lattice-pose={cos_q:.3f} (rb={rb}, sb={sb})\n"
        f"  centroid-predicted pos=({pred[0]:+.1f},{pred[1]:+.1f}) vs truth ({obj.x:+.1f},{obj.y:+.1f})\n"
        f"  ink rows x:[{xs.min()},{xs.max()}] y:[{ys.min()},{ys.max()}] of {gray.shape}"
    )
