"""Planar geometry primitives for workspace reasoning.

Everything here is pure and deterministic: points are immutable, occluder
shapes are value objects, and intersection predicates use exact sign tests
wherever the inputs allow it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union


class Vec2(NamedTuple):
    """A point or displacement in workspace coordinates (meters)."""

    x: float
    y: float

    def __add__(self, other: "Vec2") -> "Vec2":  # type: ignore[override]
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec2(self.x / n, self.y / n)

    def perp_left(self) -> "Vec2":
        """Rotate 90 degrees counterclockwise."""
        return Vec2(-self.y, self.x)


def heading_vec(theta: float) -> Vec2:
    return Vec2(math.cos(theta), math.sin(theta))


def distance(a: Vec2, b: Vec2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def orient(a: Vec2, b: Vec2, c: Vec2) -> float:
    """Signed area of triangle abc: >0 counterclockwise, <0 clockwise."""
    return (b - a).cross(c - a)


def point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool:
    """True if p lies on segment ab, assuming a, b, p are collinear."""
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def segments_intersect(p1: Vec2, q1: Vec2, p2: Vec2, q2: Vec2) -> bool:
    """True if closed segments p1q1 and p2q2 share at least one point."""
    d1 = orient(p2, q2, p1)
    d2 = orient(p2, q2, q1)
    d3 = orient(p1, q1, p2)
    d4 = orient(p1, q1, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and point_on_segment(p1, p2, q2):
        return True
    if d2 == 0 and point_on_segment(q1, p2, q2):
        return True
    if d3 == 0 and point_on_segment(p2, p1, q1):
        return True
    if d4 == 0 and point_on_segment(q2, p1, q1):
        return True
    return False


def segment_point_distance(a: Vec2, b: Vec2, p: Vec2) -> float:
    """Minimum distance from point p to segment ab."""
    ab = b - a
    denom = ab.dot(ab)
    if denom == 0.0:
        return distance(a, p)
    t = (p - a).dot(ab) / denom
    t = max(0.0, min(1.0, t))
    closest = a + ab.scaled(t)
    return distance(closest, p)


def polygon_area(vertices: Sequence[Vec2]) -> float:
    """Signed shoelace area: positive for counterclockwise winding."""
    acc = 0.0
    n = len(vertices)
    for i in range(n):
        acc += vertices[i].cross(vertices[(i + 1) % n])
    return acc / 2.0


def is_convex(vertices: Sequence[Vec2]) -> bool:
    """True for a convex polygon with nonzero area (either winding)."""
    n = len(vertices)
    if n < 3:
        return False
    sign = 0.0
    for i in range(n):
        d = orient(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n])
        if d != 0.0:
            if sign != 0.0 and (d > 0) != (sign > 0):
                return False
            sign = d
    return sign != 0.0


@dataclass(frozen=True)
class Disc:
    """Filled disc in workspace coordinates."""

    center: Vec2
    radius: float

    def translate(self, offset: Vec2) -> "Disc":
        return Disc(self.center + offset, self.radius)

    def reference_point(self) -> Vec2:
        return self.center

    def contains(self, p: Vec2) -> bool:
        return distance(p, self.center) <= self.radius

    def blocks_segment(self, a: Vec2, b: Vec2) -> bool:
        return segment_point_distance(a, b, self.center) <= self.radius


@dataclass(frozen=True)
class Polygon:
    """Filled convex polygon in workspace coordinates."""

    vertices: tuple[Vec2, ...]

    def translate(self, offset: Vec2) -> "Polygon":
        return Polygon(tuple(v + offset for v in self.vertices))

    def reference_point(self) -> Vec2:
        n = len(self.vertices)
        cx = sum(v.x for v in self.vertices) / n
        cy = sum(v.y for v in self.vertices) / n
        return Vec2(cx, cy)

    def contains(self, p: Vec2) -> bool:
        # Convexity is validated at load time, so a sign-consistency sweep
        # over the edges is exact. Boundary counts as inside.
        sign = 0.0
        n = len(self.vertices)
        for i in range(n):
            d = orient(self.vertices[i], self.vertices[(i + 1) % n], p)
            if d != 0.0:
                if sign != 0.0 and (d > 0) != (sign > 0):
                    return False
                sign = d
        return True

    def edges(self) -> list[tuple[Vec2, Vec2]]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def blocks_segment(self, a: Vec2, b: Vec2) -> bool:
        # A segment meets a filled polygon iff it crosses an edge or has an
        # endpoint inside.
        for e0, e1 in self.edges():
            if segments_intersect(a, b, e0, e1):
                return True
        return self.contains(a) or self.contains(b)


Shape = Union[Disc, Polygon]


def shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, Disc):
        return {
            "type": "disc",
            "center": [shape.center.x, shape.center.y],
            "radius": shape.radius,
        }
    return {
        "type": "polygon",
        "points": [[v.x, v.y] for v in shape.vertices],
    }


def shape_from_dict(data: dict) -> Shape:
    kind = data.get("type")
    if kind == "disc":
        cx, cy = data["center"]
        return Disc(Vec2(float(cx), float(cy)), float(data["radius"]))
    if kind == "polygon":
        return Polygon(tuple(Vec2(float(x), float(y)) for x, y in data["points"]))
    raise ValueError(f"unknown shape type: {kind!r}")


def all_finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)
