"""Planar windows and convex-polygon utilities.

Windows act on projected coordinates P2(x) and are half-open, so that a
tiling of the plane by windows assigns every lattice column to exactly one
tile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# slack used for half-open membership tests on floating coordinates
EPS = 1e-9


def clip_halfplane(poly: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Clip a convex polygon (k, 2) to ``{p : a.p <= b}``."""
    if len(poly) == 0:
        return poly
    d = poly @ a - b
    inside = d <= 0.0
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        dp, dq = d[i], d[(i + 1) % k]
        if dp <= 0.0:
            out.append(p)
        if (dp <= 0.0) != (dq <= 0.0):
            s = dp / (dp - dq)
            out.append(p + s * (q - p))
    return _dedupe(np.array(out)) if out else poly[:0]


def _dedupe(poly: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Drop vertices that coincide with their predecessor (cyclically)."""
    if len(poly) < 2:
        return poly
    step = np.linalg.norm(poly - np.roll(poly, 1, axis=0), axis=1)
    keep = step > tol
    if not keep.any():
        return poly[:1]
    return poly[keep]


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def intersect_convex(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Intersection of two convex polygons given counter-clockwise."""
    out = p
    k = len(q)
    for i in range(k):
        a, b = q[i], q[(i + 1) % k]
        edge = b - a
        if float(edge @ edge) <= 1e-24:
            continue
        # inward side of a CCW edge is to the left: cross(edge, x - a) >= 0
        normal = np.array([edge[1], -edge[0]])
        out = clip_halfplane(out, normal, float(normal @ a))
        if len(out) == 0:
            break
    return out


def ccw(poly: np.ndarray) -> np.ndarray:
    if len(poly) < 3:
        return poly
    x, y = poly[:, 0], poly[:, 1]
    signed = float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return poly if signed >= 0 else poly[::-1]


@dataclass(frozen=True)
class Rect:
    """Half-open axis-aligned rectangle [x0, x1) x [y0, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"empty rectangle {self}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        x, y = xy[..., 0], xy[..., 1]
        return (x >= self.x0 - EPS) & (x < self.x1 - EPS) & (y >= self.y0 - EPS) & (y < self.y1 - EPS)

    def boundary_distance(self, xy: np.ndarray) -> np.ndarray:
        """Distance to the boundary for points inside the rectangle."""
        xy = np.asarray(xy, dtype=float)
        x, y = xy[..., 0], xy[..., 1]
        return np.minimum.reduce([x - self.x0, self.x1 - x, y - self.y0, self.y1 - y])

    def distance(self, xy: np.ndarray) -> np.ndarray:
        """Euclidean distance to the closed rectangle (0 inside)."""
        xy = np.asarray(xy, dtype=float)
        dx = np.maximum.reduce([self.x0 - xy[..., 0], np.zeros(xy.shape[:-1]), xy[..., 0] - self.x1])
        dy = np.maximum.reduce([self.y0 - xy[..., 1], np.zeros(xy.shape[:-1]), xy[..., 1] - self.y1])
        return np.hypot(dx, dy)

    def polygon(self) -> np.ndarray:
        return np.array([[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]], dtype=float)

    def bounding_box(self) -> "Rect":
        return self

    def int_region(self, pad: float = 0.0) -> "Rect":
        """Smallest integer rectangle covering every integer point of the padded window."""
        return Rect(
            math.floor(self.x0 - pad), math.floor(self.y0 - pad),
            math.ceil(self.x1 + pad) + 1, math.ceil(self.y1 + pad) + 1,
        )

    def contains_rect(self, other: "Rect") -> bool:
        return other.x0 >= self.x0 - EPS and other.y0 >= self.y0 - EPS and other.x1 <= self.x1 + EPS and other.y1 <= self.y1 + EPS


def unit_direction(nu) -> tuple[np.ndarray, np.ndarray]:
    """Normalize an integer direction and return (nu, nu_perp), nu_perp = rot90(nu)."""
    v = np.asarray(nu, dtype=float)
    n = float(np.hypot(*v))
    if n == 0:
        raise ValueError("zero direction")
    v = v / n
    return v, np.array([-v[1], v[0]])


@dataclass(frozen=True)
class OrientedRect:
    """Half-open rectangle aligned with (nu, nu_perp) around ``center``.

    A point p belongs to it when -h_nu <= <p - c, nu> < h_nu and
    -h_perp <= <p - c, nu_perp> < h_perp.  With equal half sides this is the
    oriented cube Q_nu(center, 2 h).
    """

    center: tuple[float, float]
    nu: tuple[float, float]
    half_nu: float
    half_perp: float

    @classmethod
    def cube(cls, nu, side: float, center=(0.0, 0.0)) -> "OrientedRect":
        v, _ = unit_direction(nu)
        return cls((float(center[0]), float(center[1])), (float(v[0]), float(v[1])), side / 2.0, side / 2.0)

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return unit_direction(self.nu)

    def local(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v, w = self.axes
        d = np.asarray(xy, dtype=float) - np.asarray(self.center)
        return d @ v, d @ w

    def contains(self, xy: np.ndarray) -> np.ndarray:
        a, b = self.local(xy)
        return (
            (a >= -self.half_nu - EPS) & (a < self.half_nu - EPS)
            & (b >= -self.half_perp - EPS) & (b < self.half_perp - EPS)
        )

    def boundary_distance(self, xy: np.ndarray) -> np.ndarray:
        a, b = self.local(xy)
        return np.minimum.reduce([a + self.half_nu, self.half_nu - a, b + self.half_perp, self.half_perp - b])

    @property
    def area(self) -> float:
        return 4.0 * self.half_nu * self.half_perp

    def polygon(self) -> np.ndarray:
        v, w = self.axes
        c = np.asarray(self.center)
        corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
        pts = np.array([c + sa * self.half_nu * v + sb * self.half_perp * w for sa, sb in corners])
        return ccw(pts)

    def bounding_box(self) -> Rect:
        p = self.polygon()
        return Rect(p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max())

    def int_region(self, pad: float = 0.0) -> Rect:
        return self.bounding_box().int_region(pad)
