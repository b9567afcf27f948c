"""Ellipse representation and the planar numerics everything else is built on.

Points are passed around as ``(n, 2)`` float arrays of ``(x, y)`` pixel
coordinates; image y grows downwards but nothing here depends on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

# perimeter samples used for point-to-ellipse distances
N_DIST = 720
# polygon resolution used when an ellipse has to be treated as an area
N_AREA = 360


class TooFewPoints(ValueError):
    pass


class DegenerateConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class Ellipse:
    """Rotated ellipse. ``a`` is the semi-major axis, ``theta`` its angle."""

    cx: float
    cy: float
    a: float
    b: float
    theta: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.a, self.b, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite ellipse parameters: {vals}")
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")
        if not (0.0 <= self.theta < math.pi):
            raise ValueError(f"theta must lie in [0, pi), got {self.theta}")

    @classmethod
    def from_axes(cls, cx, cy, r1, r2, angle):
        """Build from two semi-axes in any order; ``angle`` is the direction of ``r1``."""
        r1, r2 = abs(float(r1)), abs(float(r2))
        angle = float(angle)
        if r2 > r1:
            r1, r2 = r2, r1
            angle += math.pi / 2
        theta = math.fmod(angle, math.pi)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta = 0.0
        if r1 == r2:
            theta = 0.0
        return cls(float(cx), float(cy), r1, r2, theta)

    @property
    def center(self):
        return np.array([self.cx, self.cy])

    @property
    def area(self):
        return math.pi * self.a * self.b

    def to_dict(self):
        return {"cx": self.cx, "cy": self.cy, "a": self.a, "b": self.b, "theta_radians": self.theta}

    @classmethod
    def from_dict(cls, d):
        return cls.from_axes(d["cx"], d["cy"], d["a"], d["b"], d["theta_radians"])

    def implicit(self, pts):
        """Value of ``(u/a)^2 + (v/b)^2 - 1`` in the ellipse frame; zero on the perimeter."""
        pts = np.asarray(pts, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dy = pts[:, 0] - self.cx, pts[:, 1] - self.cy
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return (u / self.a) ** 2 + (v / self.b) ** 2 - 1.0

    def bounding_box(self):
        c, s = math.cos(self.theta), math.sin(self.theta)
        hw = math.hypot(self.a * c, self.b * s)
        hh = math.hypot(self.a * s, self.b * c)
        return (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)


def sample_ellipse(e, n):
    """``n`` perimeter points at evenly spaced parametric angles, starting at t=0."""
    if n < 3:
        raise ValueError("need at least 3 samples")
    t = 2 * np.pi * np.arange(n) / n
    c, s = math.cos(e.theta), math.sin(e.theta)
    ct, st = np.cos(t), np.sin(t)
    x = e.cx + e.a * ct * c - e.b * st * s
    y = e.cy + e.a * ct * s + e.b * st * c
    return np.column_stack([x, y])


def _conic_to_ellipse(coef):
    A, B, C, D, E, F = coef
    if B * B - 4 * A * C >= 0:
        raise DegenerateConfiguration("fitted conic is not an ellipse")
    Q = np.array([[2 * A, B], [B, 2 * C]])
    x0, y0 = np.linalg.solve(Q, [-D, -E])
    f0 = F + 0.5 * (D * x0 + E * y0)
    lam, vec = np.linalg.eigh(np.array([[A, B / 2], [B / 2, C]]))
    with np.errstate(invalid="ignore", divide="ignore"):
        sq = -f0 / lam
    if not np.all(sq > 0) or not np.all(np.isfinite(sq)):
        raise DegenerateConfiguration("fitted conic is imaginary or degenerate")
    axes = np.sqrt(sq)
    i = int(np.argmax(axes))
    angle = math.atan2(vec[1, i], vec[0, i])
    return x0, y0, axes[i], axes[1 - i], angle


def fit_ellipse_dls(points):
    """Direct least-squares ellipse fit (Fitzgibbon, numerically stable Halir-Flusser form).

    The algebraic distance of a general conic is minimised subject to
    ``4AC - B^2 = 1``, which only admits ellipses. Data are centred and
    scaled before solving.

    Raises TooFewPoints for fewer than five points and
    DegenerateConfiguration when the points are collinear or the best conic
    is not a real ellipse.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if len(pts) < 5:
        raise TooFewPoints(f"need >= 5 points, got {len(pts)}")
    mean = pts.mean(axis=0)
    centred = pts - mean
    scale = math.sqrt(np.mean(np.sum(centred**2, axis=1)))
    if scale == 0:
        raise DegenerateConfiguration("all points coincide")
    x, y = (centred / scale).T
    sv = np.linalg.svd(np.column_stack([x, y]), compute_uv=False)
    if sv[1] <= 1e-9 * sv[0]:
        raise DegenerateConfiguration("points are collinear")

    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    T = -np.linalg.solve(S3, S2.T)
    M = S1 + S2 @ T
    # premultiply by the inverse of the constraint matrix
    M = np.array([M[2] / 2, -M[1], M[0] / 2])
    lam, vec = np.linalg.eig(M)
    lam, vec = lam.real, vec.real
    cond = 4 * vec[0] * vec[2] - vec[1] ** 2
    ok = np.flatnonzero(cond > 0)
    if len(ok) == 0:
        raise DegenerateConfiguration("no elliptical solution")
    k = ok[np.argmin(np.abs(lam[ok]))]
    a1 = vec[:, k]
    coef = np.concatenate([a1, T @ a1])

    x0, y0, r1, r2, angle = _conic_to_ellipse(coef)
    cx = x0 * scale + mean[0]
    cy = y0 * scale + mean[1]
    return Ellipse.from_axes(cx, cy, r1 * scale, r2 * scale, angle)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """Monotone-chain convex hull, counter-clockwise (positive signed area).

    Collinear boundary points are dropped. Raises DegenerateConfiguration
    when fewer than three non-collinear points exist.
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in np.asarray(points, dtype=float)})
    if len(pts) < 3:
        raise DegenerateConfiguration("need three distinct points for a hull")
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateConfiguration("points are collinear")
    return np.array(hull)


def polygon_area(poly):
    """Signed shoelace area (positive for counter-clockwise vertices)."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clip_half_plane(poly, inside, intersect):
    out = []
    n = len(poly)
    for i in range(n):
        cur, prev = poly[i], poly[i - 1]
        cin, pin = inside(cur), inside(prev)
        if cin:
            if not pin:
                out.append(intersect(prev, cur))
            out.append(cur)
        elif pin:
            out.append(intersect(prev, cur))
    return out


def clip_polygon_to_box(poly, box):
    """Sutherland-Hodgman clip of a polygon against ``(x_min, y_min, x_max, y_max)``."""
    x0, y0, x1, y1 = box
    verts = [tuple(map(float, v)) for v in np.asarray(poly, dtype=float)]

    def at_x(xc):
        def f(p, q):
            t = (xc - p[0]) / (q[0] - p[0])
            return (xc, p[1] + t * (q[1] - p[1]))
        return f

    def at_y(yc):
        def f(p, q):
            t = (yc - p[1]) / (q[1] - p[1])
            return (p[0] + t * (q[0] - p[0]), yc)
        return f

    edges = [
        (lambda p: p[0] >= x0, at_x(x0)),
        (lambda p: p[0] <= x1, at_x(x1)),
        (lambda p: p[1] >= y0, at_y(y0)),
        (lambda p: p[1] <= y1, at_y(y1)),
    ]
    for inside, intersect in edges:
        if not verts:
            break
        verts = _clip_half_plane(verts, inside, intersect)
    return np.array(verts).reshape(-1, 2)


def polygon_clip_area(poly, box):
    """Area of ``poly`` inside the axis-aligned ``box``."""
    clipped = clip_polygon_to_box(poly, box)
    return abs(polygon_area(clipped))


def ellipse_fraction_outside(e, box, n=N_AREA):
    """Fraction of the ellipse's area lying outside ``box`` (via an ``n``-gon)."""
    poly = sample_ellipse(e, n)
    total = abs(polygon_area(poly))
    inside = polygon_clip_area(poly, box)
    return max(0.0, 1.0 - inside / total)


def ellipse_distances(points, e, n=N_DIST):
    """Distance of each point to the nearest of ``n`` perimeter samples of ``e``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    tree = cKDTree(sample_ellipse(e, n))
    dist, _ = tree.query(pts)
    return dist


def point_ellipse_distance(p, e, n=N_DIST):
    return float(ellipse_distances(np.asarray(p, dtype=float).reshape(1, 2), e, n)[0])
