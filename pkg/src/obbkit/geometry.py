"""Oriented-box geometry: polygons, exact rotated IoU, minimum-area rectangles.

Boxes use the long-side convention: ``w >= h > 0`` and ``theta`` in
``[-pi/2, pi/2)``, the angle between the long side and the x-axis.
Polygons are ``(k, 2)`` float arrays with counter-clockwise vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "OBB",
    "reduce_angle",
    "obb_to_polygon",
    "convex_intersect",
    "polygon_area",
    "rotated_iou",
    "iou_matrix",
    "min_area_rect",
    "raster_iou_oracle",
    "points_in_obb",
]

HALF_PI = 0.5 * math.pi

CLIP_EPS = 1e-9
AREA_EPS = 1e-12


def reduce_angle(theta: float) -> float:
    """Reduce an angle modulo pi into the half-open interval [-pi/2, pi/2)."""
    theta = theta - math.pi * round(theta / math.pi)
    if theta >= HALF_PI:
        theta -= math.pi
    elif theta < -HALF_PI:
        theta += math.pi
    return theta


@dataclass(frozen=True)
class OBB:
    """Canonical oriented box. Construction validates the long-side invariants.

    Use :meth:`from_any` to build a box from dimensions in arbitrary order
    and an unreduced angle.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite OBB parameters: {vals}")
        if not self.h > 0:
            raise ValueError(f"OBB sides must be positive, got w={self.w}, h={self.h}")
        if self.w < self.h:
            raise ValueError(f"OBB long side first: w={self.w} < h={self.h}")
        if not -HALF_PI <= self.theta < HALF_PI:
            raise ValueError(f"OBB angle {self.theta} outside [-pi/2, pi/2)")

    @classmethod
    def from_any(cls, cx: float, cy: float, w: float, h: float, theta: float) -> "OBB":
        """Canonicalize: put the long side first (rotating by pi/2) and reduce theta."""
        if not (w > 0 and h > 0):
            raise ValueError(f"OBB sides must be positive, got w={w}, h={h}")
        if w < h:
            w, h = h, w
            theta = theta + HALF_PI
        return cls(float(cx), float(cy), float(w), float(h), reduce_angle(float(theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h, self.theta])

    @property
    def area(self) -> float:
        return self.w * self.h

    def __iter__(self):
        return iter((self.cx, self.cy, self.w, self.h, self.theta))


def _corners(box: OBB) -> list[tuple[float, float]]:
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = 0.5 * box.w, 0.5 * box.h
    # local frame corners, CCW starting at (+hw, +hh)
    local = ((hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh))
    return [(box.cx + u * c - v * s, box.cy + u * s + v * c) for u, v in local]


def obb_to_polygon(box: OBB) -> np.ndarray:
    """Return the four CCW corners of ``box`` as a ``(4, 2)`` array."""
    return np.array(_corners(box), dtype=float)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _cleanup(pts: list[tuple[float, float]], eps: float) -> list[tuple[float, float]]:
    # drop near-duplicate consecutive vertices
    out: list[tuple[float, float]] = []
    for p in pts:
        if not out or abs(p[0] - out[-1][0]) > eps or abs(p[1] - out[-1][1]) > eps:
            out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= eps and abs(out[0][1] - out[-1][1]) <= eps:
        out.pop()
    # merge collinear vertices
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            a, b, c = out[i - 1], out[i], out[(i + 1) % n]
            ab = math.hypot(c[0] - a[0], c[1] - a[1])
            if ab == 0.0 or abs(_cross(a, b, c)) <= eps * ab:
                del out[i]
                changed = True
                break
    return out


def _clip(subject: list[tuple[float, float]], clip: list[tuple[float, float]], eps: float):
    output = subject
    n = len(clip)
    for i in range(n):
        if not output:
            break
        a, b = clip[i], clip[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        elen = math.hypot(ex, ey)
        if elen == 0.0:
            continue
        # signed distance to the clip edge, positive on the inner (left) side
        dist = [(ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / elen for p in output]
        inp = output
        output = []
        m = len(inp)
        for j in range(m):
            s, e = inp[j - 1], inp[j]
            ds, de = dist[j - 1], dist[j]
            s_in, e_in = ds >= -eps, de >= -eps
            if e_in:
                if not s_in:
                    t = ds / (ds - de)
                    output.append((s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])))
                output.append(e)
            elif s_in:
                t = ds / (ds - de)
                output.append((s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])))
    return output


def _as_points(poly) -> list[tuple[float, float]]:
    arr = np.asarray(poly, dtype=float).reshape(-1, 2)
    return [(float(x), float(y)) for x, y in arr]


def convex_intersect(p, q, eps: float = CLIP_EPS) -> np.ndarray:
    """Intersect two convex CCW polygons by Sutherland-Hodgman clipping.

    Vertices within ``eps`` of a clip edge count as inside; duplicate and
    collinear output vertices are merged. Returns a ``(k, 2)`` array, with
    ``k == 0`` when the polygons do not overlap in a region of positive area.
    """
    pts = _clip(_as_points(p), _as_points(q), eps)
    pts = _cleanup(pts, eps)
    if len(pts) < 3:
        return np.zeros((0, 2))
    return np.array(pts, dtype=float)


def _shoelace(pts: Sequence[tuple[float, float]]) -> float:
    n = len(pts)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = pts[i - 1]
        x1, y1 = pts[i]
        acc += x0 * y1 - x1 * y0
    return abs(acc) * 0.5


def polygon_area(p) -> float:
    """Shoelace area; zero for fewer than three vertices."""
    return _shoelace(_as_points(p))


def _iou_key(box: OBB) -> tuple:
    return (box.cx, box.cy, box.w, box.h, box.theta)


def rotated_iou(a: OBB, b: OBB) -> float:
    """Exact IoU of two oriented boxes via convex polygon intersection.

    The argument pair is ordered canonically before clipping so the result
    is bitwise symmetric.
    """
    if _iou_key(b) < _iou_key(a):
        a, b = b, a
    pa, pb = _corners(a), _corners(b)
    # circumscribed-circle rejection
    ra = 0.5 * math.hypot(a.w, a.h)
    rb = 0.5 * math.hypot(b.w, b.h)
    if math.hypot(a.cx - b.cx, a.cy - b.cy) >= ra + rb:
        return 0.0
    inter_pts = _cleanup(_clip(pa, pb, CLIP_EPS), CLIP_EPS)
    inter = _shoelace(inter_pts)
    if inter < AREA_EPS:
        return 0.0
    area_a, area_b = _shoelace(pa), _shoelace(pb)
    union = area_a + area_b - inter
    return min(1.0, max(0.0, inter / union))


def iou_matrix(proposals: Sequence[OBB], gts: Sequence[OBB]) -> np.ndarray:
    """Pairwise rotated IoU; rows are proposals, columns ground truths."""
    if len(proposals) == 0 or len(gts) == 0:
        raise ValueError("iou_matrix needs at least one proposal and one ground truth")
    P = np.array([[b.cx, b.cy, 0.5 * math.hypot(b.w, b.h)] for b in proposals])
    G = np.array([[b.cx, b.cy, 0.5 * math.hypot(b.w, b.h)] for b in gts])
    dist = np.hypot(P[:, None, 0] - G[None, :, 0], P[:, None, 1] - G[None, :, 1])
    out = np.zeros((len(proposals), len(gts)))
    for i, j in zip(*np.nonzero(dist < P[:, None, 2] + G[None, :, 2])):
        out[i, j] = rotated_iou(proposals[i], gts[j])
    return out


def _convex_hull(points: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    # Andrew's monotone chain, CCW, collinear points dropped
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def min_area_rect(quad) -> OBB:
    """Minimum-area enclosing rectangle of a point set, as a canonical OBB.

    Uses rotating calipers: the optimal rectangle has a side collinear with
    a hull edge, so every hull edge direction is tried.

    Raises:
        ValueError: if the points are collinear or coincide.
    """
    pts = _as_points(quad)
    hull = _convex_hull(pts)
    scale = max(1.0, max(abs(v) for p in pts for v in p))
    if len(hull) < 3 or _shoelace(hull) <= 1e-12 * scale * scale:
        raise ValueError(f"degenerate quadrilateral (collinear or duplicate points): {pts}")
    best = None
    n = len(hull)
    for i in range(n):
        (x0, y0), (x1, y1) = hull[i], hull[(i + 1) % n]
        phi = math.atan2(y1 - y0, x1 - x0)
        c, s = math.cos(phi), math.sin(phi)
        us = [x * c + y * s for x, y in hull]
        vs = [-x * s + y * c for x, y in hull]
        umin, umax, vmin, vmax = min(us), max(us), min(vs), max(vs)
        area = (umax - umin) * (vmax - vmin)
        if best is None or area < best[0] * (1 - 1e-12):
            best = (area, phi, c, s, umin, umax, vmin, vmax)
    _, phi, c, s, umin, umax, vmin, vmax = best
    uc, vc = 0.5 * (umin + umax), 0.5 * (vmin + vmax)
    cx, cy = uc * c - vc * s, uc * s + vc * c
    du, dv = umax - umin, vmax - vmin
    if abs(du - dv) <= 1e-12 * max(du, dv):
        # square: keep the hull-edge orientation instead of an ulp-driven swap
        du = dv = max(du, dv)
    return OBB.from_any(cx, cy, du, dv, phi)


def points_in_obb(box: OBB, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Boundary-inclusive membership test in the box frame."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx, dy = x - box.cx, y - box.cy
    u = dx * c + dy * s
    v = dy * c - dx * s
    return (np.abs(u) <= 0.5 * box.w) & (np.abs(v) <= 0.5 * box.h)


def _grid_in_obb(box: OBB, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    # same test as points_in_obb, evaluated on the outer product grid ys x xs
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx, dy = xs - box.cx, ys - box.cy
    u = np.add.outer(dy * s, dx * c)
    np.abs(u, out=u)
    mask = u <= 0.5 * box.w
    v = np.add.outer(dy * c, -dx * s)
    np.abs(v, out=v)
    mask &= v <= 0.5 * box.h
    return mask


def raster_iou_oracle(a: OBB, b: OBB, samples_per_axis: int = 1024) -> float:
    """Grid estimate of IoU, independent of polygon clipping.

    Samples cell centres of a regular ``samples_per_axis`` square grid over
    the joint axis-aligned bounding box and counts point-in-box hits.
    """
    if samples_per_axis < 64:
        raise ValueError("samples_per_axis must be >= 64")
    corners = np.vstack([obb_to_polygon(a), obb_to_polygon(b)])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    n = samples_per_axis
    xs = lo[0] + (np.arange(n) + 0.5) * ((hi[0] - lo[0]) / n)
    ys = lo[1] + (np.arange(n) + 0.5) * ((hi[1] - lo[1]) / n)
    in_a = _grid_in_obb(a, xs, ys)
    in_b = _grid_in_obb(b, xs, ys)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union
