import numpy as np
import pytest

from osteomorph import LabelMask


def lm(rows, dtype=np.uint8) -> LabelMask:
    """Build a LabelMask from a nested list or array (rows = y, cols = x)."""
    arr = np.asarray(rows, dtype=dtype)
    h, w = arr.shape
    return LabelMask(width=w, height=h, labels=arr)


def raster_ellipse(a, b, size, center=None, theta=0.0, label=1) -> LabelMask:
    """Independent ellipse rasterizer (center-inclusion), optionally rotated."""
    cx, cy = center if center is not None else ((size - 1) / 2, (size - 1) / 2)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    u = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
    v = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
    inside = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    labels = np.zeros((size, size), dtype=np.uint8)
    labels[inside] = label
    return LabelMask(width=size, height=size, labels=labels)


def random_blob(rng, size=16, steps=None) -> np.ndarray:
    """4-connected random-walk blob as a boolean grid with a clear border."""
    if steps is None:
        steps = int(rng.integers(1, 60))
    grid = np.zeros((size, size), dtype=bool)
    y, x = rng.integers(size // 4, 3 * size // 4, 2)
    grid[y, x] = True
    moves = ((0, 1), (0, -1), (1, 0), (-1, 0))
    for _ in range(steps):
        ys, xs = np.nonzero(grid)
        i = rng.integers(len(ys))
        dy, dx = moves[rng.integers(4)]
        ny = int(np.clip(ys[i] + dy, 1, size - 2))
        nx = int(np.clip(xs[i] + dx, 1, size - 2))
        grid[ny, nx] = True
    return grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
