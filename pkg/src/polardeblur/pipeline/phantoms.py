"""Procedural vessel phantoms and an image-folder ingester."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..grid import pixel_centers
from ..noise import rng_for

SUPPORT = 0.9


def _paint(canvas, cx, cy, width_px, h):
    """Stamp an anti-aliased disc of diameter ``width_px`` pixels at ``(cx, cy)``."""
    M = canvas.shape[0]
    rad = 0.5 * width_px
    ci = (cx + 1.0) / h - 0.5
    cj = (cy + 1.0) / h - 0.5
    r = int(np.ceil(rad + 1))
    i0, i1 = max(int(ci) - r, 0), min(int(ci) + r + 2, M)
    j0, j1 = max(int(cj) - r, 0), min(int(cj) + r + 2, M)
    if i0 >= i1 or j0 >= j1:
        return
    ii = np.arange(i0, i1)[:, None]
    jj = np.arange(j0, j1)[None, :]
    d = np.hypot(ii - ci, jj - cj)
    val = np.clip(rad + 0.5 - d, 0.0, 1.0)
    np.maximum(canvas[i0:i1, j0:j1], val, out=canvas[i0:i1, j0:j1])


def synth_vessel_phantom(seed: int, M: int) -> np.ndarray:
    """Branching smooth curves with widths of 1-4 pixels, values in [0, 1].

    Between 3 and 8 trees are grown from random roots; each tree is a
    curvature-driven random walk that occasionally spawns thinner side
    branches.  The result vanishes outside radius 0.9.
    """
    rng = rng_for(seed, 0x5EED)
    h = 2.0 / M
    canvas = np.zeros((M, M))
    limit = SUPPORT - 3.0 * h
    n_trees = int(rng.integers(3, 9))
    for _ in range(n_trees):
        rad = 0.75 * np.sqrt(rng.random())
        ang = rng.uniform(0, 2 * np.pi)
        stack = [(rad * np.cos(ang), rad * np.sin(ang), rng.uniform(0, 2 * np.pi),
                  rng.uniform(2.0, 4.0), rng.uniform(0.6, 1.4), 0)]
        branches = 0
        while stack:
            x, y, heading, width, length, depth = stack.pop()
            curvature = 0.0
            step = 0.5 * h
            for _ in range(int(length / step)):
                curvature = 0.9 * curvature + rng.normal(0.0, 0.6)
                heading += curvature * step
                x += step * np.cos(heading)
                y += step * np.sin(heading)
                if np.hypot(x, y) > limit - 0.5 * width * h:
                    break
                _paint(canvas, x, y, width, h)
                if depth < 3 and branches < 6 and rng.random() < 0.012:
                    branches += 1
                    side = rng.choice([-1.0, 1.0])
                    stack.append((x, y, heading + side * rng.uniform(0.35, 0.9),
                                  max(1.0, width * rng.uniform(0.55, 0.85)),
                                  length * rng.uniform(0.3, 0.7), depth + 1))
    c = pixel_centers(M)
    canvas[np.hypot(c[:, None], c[None, :]) >= SUPPORT] = 0.0
    return canvas


def load_image_folder(path, M: int, radius: float = SUPPORT):
    """Read every image in ``path`` as grayscale ``M x M`` in [0, 1], masked to the disc.

    Returns ``(images, names, errors)`` where ``errors`` lists ``(name, message)``
    for files that could not be read.
    """
    from PIL import Image

    c = pixel_centers(M)
    mask = np.hypot(c[:, None], c[None, :]) < radius
    images, names, errors = [], [], []
    for f in sorted(p for p in Path(path).iterdir() if p.is_file()):
        try:
            with Image.open(f) as img:
                arr = np.asarray(img.convert("L").resize((M, M), Image.BILINEAR), dtype=np.float64)
        except Exception as exc:  # noqa: BLE001 - reported per record
            errors.append((f.name, str(exc)))
            continue
        # PIL rows run along y downwards; flip to the (x, y) layout
        arr = np.flipud(arr).T
        peak = arr.max()
        images.append((arr / peak if peak > 0 else arr) * mask)
        names.append(f.name)
    return images, names, errors
