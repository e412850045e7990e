"""Analytic PEC cross-section shapes and their lattice intersections.

Shapes are closed curves with an interior. Supported: a circle, and a
"half moon" crescent (outer disk minus a cutter disk, bounded by two arcs
meeting at two sharp corners). ``None`` stands for free space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangular computational domain."""

    xmin: float = 0.0
    xmax: float = 10.0
    ymin: float = 0.0
    ymax: float = 10.0

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float


@dataclass(frozen=True)
class HalfMoon:
    """Crescent: interior of ``outer`` with the interior of ``cutter`` removed.

    The two disks must overlap partially so the boundary consists of two
    arcs joined at two corner points.
    """

    outer: Circle
    cutter: Circle


Shape = Union[Circle, HalfMoon]


class ShapeError(ValueError):
    pass


def validate_shape(shape: Optional[Shape], domain: Domain) -> None:
    """Check shape invariants: positive radii, proper disk overlap for the
    crescent, and clearance >= radius/2 from every domain edge."""
    if shape is None:
        return
    if isinstance(shape, Circle):
        if shape.r <= 0:
            raise ShapeError(f"circle radius must be positive, got {shape.r}")
        ref = shape
    elif isinstance(shape, HalfMoon):
        if shape.outer.r <= 0 or shape.cutter.r <= 0:
            raise ShapeError("half-moon disk radii must be positive")
        d = math.hypot(shape.cutter.cx - shape.outer.cx,
                       shape.cutter.cy - shape.outer.cy)
        if not (abs(shape.outer.r - shape.cutter.r) < d < shape.outer.r + shape.cutter.r):
            raise ShapeError(
                "half-moon disks must intersect at exactly two points "
                f"(centers {d:.6g} apart, radii {shape.outer.r:.6g}/{shape.cutter.r:.6g})")
        ref = shape.outer
    else:
        raise ShapeError(f"unsupported shape {type(shape).__name__}")
    clearance = edge_clearance(shape, domain)
    if clearance < ref.r / 2:
        raise ShapeError(
            f"shape too close to domain edge: clearance {clearance:.6g} "
            f"< radius/2 = {ref.r / 2:.6g}")


def edge_clearance(shape: Shape, domain: Domain) -> float:
    """Minimum distance from the shape boundary to the domain edges.

    The crescent boundary lies on its outer circle or inside it, so the
    outer circle's clearance is a valid (conservative) bound for both kinds.
    """
    c = shape.outer if isinstance(shape, HalfMoon) else shape
    return min(c.cx - domain.xmin, domain.xmax - c.cx,
               c.cy - domain.ymin, domain.ymax - c.cy) - c.r


def circle_signed_distance(circle: Circle, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact signed distance to the circle, positive inside."""
    return circle.r - np.hypot(x - circle.cx, y - circle.cy)


def halfmoon_interior_function(moon: HalfMoon, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """CSG level function min(phi_outer, -phi_cutter), positive inside the
    crescent. Equals the true signed distance except in regions whose
    nearest boundary point is a corner; redistancing corrects those."""
    phi_outer = circle_signed_distance(moon.outer, x, y)
    phi_cutter = circle_signed_distance(moon.cutter, x, y)
    return np.minimum(phi_outer, -phi_cutter)


def interior_function(shape: Shape, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if isinstance(shape, Circle):
        return circle_signed_distance(shape, x, y)
    if isinstance(shape, HalfMoon):
        return halfmoon_interior_function(shape, x, y)
    raise ShapeError(f"unsupported shape {type(shape).__name__}")


def corner_points(moon: HalfMoon) -> np.ndarray:
    """The two intersection points of the outer and cutter circles, (2, 2)."""
    c1, c2 = moon.outer, moon.cutter
    dx, dy = c2.cx - c1.cx, c2.cy - c1.cy
    d = math.hypot(dx, dy)
    a = (d * d + c1.r * c1.r - c2.r * c2.r) / (2 * d)
    h_sq = c1.r * c1.r - a * a
    if h_sq <= 0:
        raise ShapeError("half-moon disks do not intersect transversally")
    h = math.sqrt(h_sq)
    ux, uy = dx / d, dy / d
    mx, my = c1.cx + a * ux, c1.cy + a * uy
    return np.array([[mx - h * uy, my + h * ux],
                     [mx + h * uy, my - h * ux]])


def _circle_line_crossings(circle: Circle, lines: np.ndarray, axis: int) -> np.ndarray:
    """Closed-form crossings of a circle with a family of grid lines.

    axis=0: vertical lines x=const; axis=1: horizontal lines y=const.
    Tangency (discriminant exactly zero) yields a single point. Returns (m, 2).
    """
    center_along = circle.cx if axis == 0 else circle.cy
    center_other = circle.cy if axis == 0 else circle.cx
    disc = circle.r ** 2 - (lines - center_along) ** 2
    pts = []
    for line, d in zip(lines, disc):
        if d > 0.0:
            root = math.sqrt(d)
            pts.append((line, center_other - root))
            pts.append((line, center_other + root))
        elif d == 0.0:
            pts.append((line, center_other))
    out = np.array(pts, dtype=float).reshape(-1, 2)
    if axis == 1:
        out = out[:, ::-1]
    return out


def boundary_intersections(shape: Shape, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """All points where the shape boundary crosses a grid line, shape (m, 2).

    ``xs``/``ys`` are the lattice line coordinates. For the crescent, each
    circle's crossings are filtered to the arc that actually bounds the
    crescent, and the two corner points are appended.
    """
    if isinstance(shape, Circle):
        return np.vstack([_circle_line_crossings(shape, xs, 0),
                          _circle_line_crossings(shape, ys, 1)])
    if isinstance(shape, HalfMoon):
        tol = 1e-12 * max(shape.outer.r, shape.cutter.r)
        outer_pts = np.vstack([_circle_line_crossings(shape.outer, xs, 0),
                               _circle_line_crossings(shape.outer, ys, 1)])
        cutter_pts = np.vstack([_circle_line_crossings(shape.cutter, xs, 0),
                                _circle_line_crossings(shape.cutter, ys, 1)])
        # Outer arc: outside (or on) the cutter disk.
        if outer_pts.size:
            d_cut = np.hypot(outer_pts[:, 0] - shape.cutter.cx,
                             outer_pts[:, 1] - shape.cutter.cy)
            outer_pts = outer_pts[d_cut >= shape.cutter.r - tol]
        # Cutter arc: inside (or on) the outer disk.
        if cutter_pts.size:
            d_out = np.hypot(cutter_pts[:, 0] - shape.outer.cx,
                             cutter_pts[:, 1] - shape.outer.cy)
            cutter_pts = cutter_pts[d_out <= shape.outer.r + tol]
        return np.vstack([outer_pts, cutter_pts, corner_points(shape)])
    raise ShapeError(f"unsupported shape {type(shape).__name__}")
