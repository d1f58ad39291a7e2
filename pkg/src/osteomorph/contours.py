"""Closed subpixel contour extraction and polygon measures.

Contours are traced with marching squares over the 0/1 indicator of a
single class at iso-level 0.5.  Conventions:

* pixel centers sit at integer coordinates (x = column, y = row);
* each cell spans four adjacent centers;
* the indicator is padded with one ring of background, so every contour
  closes even when the blob touches the frame;
* crossing vertices are linearly interpolated along cell edges (edge
  midpoints for a binary field);
* ambiguous (saddle) cells are split by the cell-center average: a mean
  of at least 0.5 joins the foreground diagonals.

Segments are oriented with foreground on the left of the direction of
travel (in image coordinates, y down), so loops come out consistently
wound and are linked by following shared cell edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masks import BONE_CLASSES, LabelMask

ISO_LEVEL = 0.5


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed polyline of subpixel (x, y) vertices; the closing edge is implicit."""

    vertices: np.ndarray  # (n, 2) float64

    def __len__(self) -> int:
        return len(self.vertices)


# Case index packs the corner indicator bits as TL*8 + TR*4 + BR*2 + BL.
# Each entry maps the case to (entry edge, exit edge) segments; edges are
# named T, R, B, L on the current cell.
_SEGMENTS = {
    1: (("B", "L"),),
    2: (("R", "B"),),
    3: (("R", "L"),),
    4: (("T", "R"),),
    6: (("T", "B"),),
    7: (("T", "L"),),
    8: (("L", "T"),),
    9: (("B", "T"),),
    11: (("R", "T"),),
    12: (("L", "R"),),
    13: (("B", "R"),),
    14: (("L", "B"),),
}
# Saddle cases keyed by (case, center >= level).
_SADDLES = {
    (5, True): (("T", "L"), ("B", "R")),
    (5, False): (("T", "R"), ("B", "L")),
    (10, True): (("R", "T"), ("L", "B")),
    (10, False): (("L", "T"), ("R", "B")),
}


def _edge_key(side: str, i: int, j: int) -> tuple[str, int, int]:
    # Global identity of a cell edge, shared with the adjacent cell.
    if side == "T":
        return ("h", i, j)
    if side == "B":
        return ("h", i + 1, j)
    if side == "L":
        return ("v", i, j)
    return ("v", i, j + 1)  # R


def _edge_point(key: tuple[str, int, int], grid: np.ndarray) -> tuple[float, float]:
    # Interpolated crossing on the edge, in unpadded pixel coordinates
    # (the padded grid index (i, j) is the pixel center (j - 1, i - 1)).
    axis, i, j = key
    a = grid[i, j]
    b = grid[i, j + 1] if axis == "h" else grid[i + 1, j]
    t = (ISO_LEVEL - a) / (b - a)
    if axis == "h":
        return (j - 1.0 + t, i - 1.0)
    return (j - 1.0, i - 1.0 + t)


def extract_contours(mask: LabelMask, class_id: int) -> list[Contour]:
    """Trace all iso-0.5 contours of the class indicator as closed loops.

    Returns contours in discovery order (row-major cell scan); a mask
    with no pixels of ``class_id`` yields an empty list.
    """
    if class_id not in BONE_CLASSES:
        raise ValueError(f"class_id must be one of {BONE_CLASSES}, got {class_id}")
    grid = np.pad((mask.labels == class_id).astype(np.float64), 1)

    tl = grid[:-1, :-1]
    tr = grid[:-1, 1:]
    br = grid[1:, 1:]
    bl = grid[1:, :-1]
    corner_sum = tl + tr + br + bl
    cells = np.argwhere((corner_sum > 0.0) & (corner_sum < 4.0))

    next_edge: dict[tuple[str, int, int], tuple[str, int, int]] = {}
    order: list[tuple[str, int, int]] = []
    for i, j in cells:
        case = int(tl[i, j]) * 8 + int(tr[i, j]) * 4 + int(br[i, j]) * 2 + int(bl[i, j])
        if case in (5, 10):
            center = corner_sum[i, j] / 4.0
            segments = _SADDLES[(case, center >= ISO_LEVEL)]
        else:
            segments = _SEGMENTS[case]
        for entry, exit_ in segments:
            key = _edge_key(entry, i, j)
            next_edge[key] = _edge_key(exit_, i, j)
            order.append(key)

    contours: list[Contour] = []
    visited: set[tuple[str, int, int]] = set()
    for start in order:
        if start in visited:
            continue
        loop: list[tuple[float, float]] = []
        edge = start
        while True:
            visited.add(edge)
            loop.append(_edge_point(edge, grid))
            edge = next_edge[edge]
            if edge == start:
                break
        contours.append(Contour(vertices=np.asarray(loop, dtype=np.float64)))
    return contours


def largest_contour(contours: list[Contour]) -> Contour:
    """Contour of maximal enclosed area; ties go to the earliest in the list."""
    if not contours:
        raise ValueError("no contours to choose from")
    best = contours[0]
    best_area = polygon_area(best)
    for c in contours[1:]:
        a = polygon_area(c)
        if a > best_area:
            best, best_area = c, a
    return best


def polygon_area(contour: Contour) -> float:
    """Absolute shoelace area of the closed polygon, in px^2."""
    x = contour.vertices[:, 0]
    y = contour.vertices[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def polygon_perimeter(contour: Contour) -> float:
    """Sum of Euclidean edge lengths, including the closing edge, in px."""
    d = np.diff(np.vstack([contour.vertices, contour.vertices[:1]]), axis=0)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def write_contours_csv(contours: list[Contour], path) -> None:
    """Debug dump as ``contour_id,vertex_index,x,y`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("contour_id,vertex_index,x,y\n")
        for cid, contour in enumerate(contours):
            for vid, (x, y) in enumerate(contour.vertices):
                fh.write(f"{cid},{vid},{x:.6f},{y:.6f}\n")
