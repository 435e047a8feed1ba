"""Compact planar sets as finite unions of axis-aligned cells.

Sets are immutable after construction. Cells may be degenerate (zero
height) to represent subsets of horizontal lines; simulation-side
membership for those uses a dilation parameter owned by the brownian
module. Cell order is always lexicographic by center, so node
enumeration, kernels, and measures are reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

TARGET_RADIUS = 1.0 / 3.0


class GeometryError(ValueError):
    """Raised when a set constructor precondition is violated."""


@dataclass(frozen=True)
class Cell:
    """Closed axis-aligned cell: center (cx, cy), half-extents (hx, hy).

    hx must be positive; hy may be zero (segment cell).
    """

    cx: float
    cy: float
    hx: float
    hy: float

    def __post_init__(self):
        if not (self.hx > 0.0):
            raise GeometryError(f"cell halfwidth hx must be > 0, got {self.hx}")
        if self.hy < 0.0:
            raise GeometryError(f"cell halfwidth hy must be >= 0, got {self.hy}")

    @property
    def diameter(self) -> float:
        return 2.0 * math.hypot(self.hx, self.hy)

    def contains(self, x: float, y: float) -> bool:
        return abs(x - self.cx) <= self.hx and abs(y - self.cy) <= self.hy

    def corner_radius(self) -> float:
        """Largest distance from the origin to a point of the cell."""
        return math.hypot(abs(self.cx) + self.hx, abs(self.cy) + self.hy)


@dataclass(frozen=True)
class CompactSet:
    """Finite union of pairwise non-overlapping cells at a stated resolution.

    resolution is the maximum cell diameter. cells are stored sorted
    lexicographically by (cx, cy).
    """

    cells: tuple[Cell, ...]
    resolution: float = field(init=False)
    label: str = ""

    def __post_init__(self):
        ordered = tuple(sorted(self.cells, key=lambda c: (c.cx, c.cy)))
        object.__setattr__(self, "cells", ordered)
        res = max((c.diameter for c in ordered), default=0.0)
        object.__setattr__(self, "resolution", res)

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def is_empty(self) -> bool:
        return len(self.cells) == 0

    def contains(self, x: float, y: float) -> bool:
        return any(c.contains(x, y) for c in self.cells)

    def total_measure(self) -> float:
        """Total area, or total length if every cell is degenerate."""
        if all(c.hy == 0.0 for c in self.cells):
            return sum(2.0 * c.hx for c in self.cells)
        return sum(4.0 * c.hx * c.hy for c in self.cells)

    def diameter(self) -> float:
        if self.is_empty:
            return 0.0
        xs_lo = min(c.cx - c.hx for c in self.cells)
        xs_hi = max(c.cx + c.hx for c in self.cells)
        ys_lo = min(c.cy - c.hy for c in self.cells)
        ys_hi = max(c.cy + c.hy for c in self.cells)
        return math.hypot(xs_hi - xs_lo, ys_hi - ys_lo)

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the union."""
        if self.is_empty:
            return (0.0, 0.0, 0.0, 0.0)
        return (
            min(c.cx - c.hx for c in self.cells),
            min(c.cy - c.hy for c in self.cells),
            max(c.cx + c.hx for c in self.cells),
            max(c.cy + c.hy for c in self.cells),
        )


def _check_target(cells, label):
    bad = [c for c in cells if c.corner_radius() > TARGET_RADIUS + 1e-12]
    if bad:
        raise GeometryError(
            f"set {label!r} flagged as target but {len(bad)} cell(s) leave the "
            f"closed 1/3-disk (worst corner radius {max(c.corner_radius() for c in bad):.6g})"
        )


def make_disk(center, radius, resolution, label="", target=False) -> CompactSet:
    """Grid-cell approximation of a closed disk.

    Cells have side equal to ``resolution``, centers on the square grid
    aligned with ``center``; a cell is kept when its center lies strictly
    within ``radius``. The union is within Hausdorff distance one cell
    diagonal of the true disk.
    """
    if radius <= 0.0:
        raise GeometryError(f"radius must be > 0, got {radius}")
    if resolution <= 0.0:
        raise GeometryError(f"resolution must be > 0, got {resolution}")
    if resolution > radius:
        raise GeometryError(
            f"resolution {resolution} exceeds radius {radius}; refine the grid"
        )
    cx0, cy0 = float(center[0]), float(center[1])
    s = float(resolution)
    h = s / 2.0
    m = int(math.floor(radius / s))
    idx = np.arange(-m, m + 1)
    gx, gy = np.meshgrid(idx, idx, indexing="ij")
    keep = (gx.astype(float) ** 2 + gy.astype(float) ** 2) * s * s < radius * radius
    cells = [
        Cell(cx0 + i * s, cy0 + j * s, h, h)
        for i, j in zip(gx[keep].ravel(), gy[keep].ravel())
    ]
    if not label:
        label = f"disk(({cx0:g},{cy0:g}),r={radius:g},s={s:g})"
    if target:
        _check_target(cells, label)
    return CompactSet(cells=tuple(cells), label=label)


def cantor_interval_length(alpha: float, level: int) -> float:
    """Interval length at a construction level; level 0 is the unit segment."""
    if level == 0:
        return 1.0
    return 2.0 ** -(2.0 ** (alpha * level))


def make_cantor(alpha, depth, label="", target=False) -> CompactSet:
    """Two-ended nested interval construction on [-1/2, 1/2] x {0}.

    Level k >= 1 consists of 2^k intervals of length 2^(-2^(alpha*k)),
    two per parent, flush with the parent's endpoints. Degenerate cells
    (hy = 0).
    """
    if not (0.5 < alpha < 1.0):
        raise GeometryError(f"alpha must lie in (1/2, 1), got {alpha}")
    if depth < 0 or int(depth) != depth:
        raise GeometryError(f"depth must be a nonnegative integer, got {depth}")
    depth = int(depth)
    lefts = [-0.5]
    for k in range(1, depth + 1):
        parent_len = cantor_interval_length(alpha, k - 1)
        child_len = cantor_interval_length(alpha, k)
        if 2.0 * child_len > parent_len:
            raise GeometryError(
                f"children of length {child_len:g} overlap inside parent of "
                f"length {parent_len:g} at level {k} (alpha={alpha})"
            )
        lefts = [a for left in lefts for a in (left, left + parent_len - child_len)]
    ell = cantor_interval_length(alpha, depth)
    cells = tuple(Cell(a + ell / 2.0, 0.0, ell / 2.0, 0.0) for a in lefts)
    if not label:
        label = f"cantor(a={alpha:g},n={depth})"
    if target:
        _check_target(cells, label)
    return CompactSet(cells=cells, label=label)


def make_segment(x0, x1, y, resolution, label="", target=False) -> CompactSet:
    """Horizontal segment [x0, x1] x {y} split into cells of length <= resolution."""
    if x1 <= x0:
        raise GeometryError(f"need x0 < x1, got [{x0}, {x1}]")
    if resolution <= 0.0:
        raise GeometryError(f"resolution must be > 0, got {resolution}")
    length = x1 - x0
    k = max(1, int(math.ceil(length / resolution)))
    step = length / k
    cells = tuple(
        Cell(x0 + (i + 0.5) * step, float(y), step / 2.0, 0.0) for i in range(k)
    )
    if not label:
        label = f"segment([{x0:g},{x1:g}]x{y:g},s={step:g})"
    if target:
        _check_target(cells, label)
    return CompactSet(cells=cells, label=label)


def refine(cs: CompactSet, factor: int) -> CompactSet:
    """Split every cell into ``factor``^2 congruent children (``factor`` for
    degenerate cells). The union of children equals the parent region and the
    resolution drops by exactly ``factor``."""
    if factor < 2 or int(factor) != factor:
        raise GeometryError(f"refinement factor must be an integer >= 2, got {factor}")
    factor = int(factor)
    out = []
    for c in cs.cells:
        hx = c.hx / factor
        xs = c.cx - c.hx + (2 * np.arange(factor) + 1) * hx
        if c.hy == 0.0:
            out.extend(Cell(float(x), c.cy, hx, 0.0) for x in xs)
        else:
            hy = c.hy / factor
            ys = c.cy - c.hy + (2 * np.arange(factor) + 1) * hy
            out.extend(
                Cell(float(x), float(y), hx, hy) for x in xs for y in ys
            )
    return CompactSet(cells=tuple(out), label=cs.label)


def refine_to(cs: CompactSet, resolution: float) -> CompactSet:
    """Refine by the smallest power factor bringing resolution <= target."""
    if resolution <= 0.0:
        raise GeometryError(f"resolution must be > 0, got {resolution}")
    if cs.is_empty or cs.resolution <= resolution:
        return cs
    factor = int(math.ceil(cs.resolution / resolution))
    return refine(cs, max(2, factor))


def centers(cs: CompactSet) -> list[tuple[tuple[float, float], float]]:
    """((cx, cy), diameter) per cell, in the set's deterministic order."""
    return [((c.cx, c.cy), c.diameter) for c in cs.cells]


def node_arrays(cs: CompactSet) -> tuple[np.ndarray, np.ndarray]:
    """Cell centers as an (n, 2) array plus the (n,) diameter vector."""
    if cs.is_empty:
        return np.zeros((0, 2)), np.zeros(0)
    pts = np.array([[c.cx, c.cy] for c in cs.cells], dtype=float)
    diams = np.array([c.diameter for c in cs.cells], dtype=float)
    return pts, diams


def union(a: CompactSet, b: CompactSet, label="") -> CompactSet:
    """Union of two cellwise-disjoint sets."""
    return CompactSet(cells=a.cells + b.cells, label=label or f"{a.label}+{b.label}")


def to_json_dict(cs: CompactSet) -> dict:
    return {
        "label": cs.label,
        "resolution": cs.resolution,
        "cells": [{"cx": c.cx, "cy": c.cy, "hx": c.hx, "hy": c.hy} for c in cs.cells],
    }


def to_json(cs: CompactSet) -> str:
    return json.dumps(to_json_dict(cs))


def from_json_dict(doc: dict) -> CompactSet:
    cells = tuple(Cell(d["cx"], d["cy"], d["hx"], d["hy"]) for d in doc["cells"])
    cs = CompactSet(cells=cells, label=doc.get("label", ""))
    stated = doc.get("resolution")
    if stated is not None and cells and not math.isclose(stated, cs.resolution, rel_tol=1e-12):
        raise GeometryError(
            f"stated resolution {stated} disagrees with max cell diameter {cs.resolution}"
        )
    return cs


def from_json(text: str) -> CompactSet:
    return from_json_dict(json.loads(text))
