"""Deterministic synthetic plate scenes with known rims.

Each scene is a flat background with one or more filled ellipses (plates or
bowls). A dish with food gets a jagged food pile and jagged polylines on
top of it; bowls also show a dark body hanging below the rim. Ground truth and detector boxes are
derived analytically, so the whole pipeline can be scored without a labelled
photo dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from PIL import Image, ImageDraw

from rimfit.detections import BoundingBox, SceneDetections
from rimfit.evaluation import GroundTruth
from rimfit.geometry import Ellipse

SUPERSAMPLE = 4
MARGIN = 5.0
BOX_PAD = 5.0
BACKGROUND = 0.5
# bowl bodies are drawn darker than the background
BODY_LEVEL = 0.05
BOWL_DEPTH = 0.25
CLUTTER_WIDTH = 2.5
# turn angle range for clutter polylines, degrees
MIN_TURN, MAX_TURN = 30.0, 120.0
SEGMENT_LEN = (10.0, 25.0)
# food is scattered inside the rim scaled by this factor
FOOD_EXTENT = 0.8
# every dish holds a jagged food pile reaching close to the rim: a zigzag
# star alternating between the rim shrunk by PILE_MARGIN px and PILE_INNER
# times that, with teeth about PILE_TOOTH px apart
PILE_MARGIN = 10.0
PILE_LEVEL = 0.7
PILE_INNER = 0.85
PILE_TOOTH = 20.0


class SpecInfeasible(ValueError):
    pass


@dataclass(frozen=True)
class Rim:
    ellipse: Ellipse
    stroke_contrast: float = 0.1
    fill_contrast: float = 0.4


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    rims: tuple = ()
    clutter: int = 0
    second_rim: bool = False
    seed: int = 0
    bowl_depth: float = BOWL_DEPTH
    image_id: str = "scene"

    def to_dict(self):
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "clutter": self.clutter,
            "second_rim": self.second_rim,
            "bowl_depth": self.bowl_depth,
            "seed": self.seed,
            "ellipses": [
                {**r.ellipse.to_dict(), "stroke_contrast": r.stroke_contrast, "fill_contrast": r.fill_contrast}
                for r in self.rims
            ],
        }

    @classmethod
    def from_dict(cls, d):
        rims = []
        for e in d.get("ellipses", []):
            rims.append(Rim(Ellipse.from_dict(e), e.get("stroke_contrast", 0.1), e.get("fill_contrast", 0.4)))
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            rims=tuple(rims),
            clutter=int(d.get("clutter", 0)),
            second_rim=bool(d.get("second_rim", False)),
            bowl_depth=float(d.get("bowl_depth", BOWL_DEPTH)),
            seed=int(d.get("seed", 0)),
            image_id=str(d.get("image_id", "scene")),
        )


@dataclass
class Scene:
    image: np.ndarray
    truth: GroundTruth
    detections: SceneDetections
    polylines: list = field(default_factory=list)


def body_offset(e, depth=BOWL_DEPTH):
    """How far below the rim the bowl's lower arc sits.

    ``depth`` times the rim's half height, clamped to [60, 120] * ``depth`` px.
    """
    half_h = (e.bounding_box()[3] - e.bounding_box()[1]) / 2
    return float(np.clip(depth * half_h, 60.0 * depth, 120.0 * depth))


def _conic(e):
    """Coefficients of A x^2 + B x y + C y^2 = 1 for ``e`` centred at the origin."""
    c, s = math.cos(e.theta), math.sin(e.theta)
    ia, ib = 1 / e.a**2, 1 / e.b**2
    return c * c * ia + s * s * ib, 2 * c * s * (ia - ib), s * s * ia + c * c * ib


def dish_box(e, second_rim, depth=BOWL_DEPTH):
    x0, y0, x1, y1 = e.bounding_box()
    if second_rim:
        # the body spans the rim's x-extent and reaches body_offset lower
        y1 = y1 + body_offset(e, depth)
    return x0, y0, x1, y1


class _Canvas:
    def __init__(self, width, height):
        self.width, self.height = width, height
        n = SUPERSAMPLE
        self.xs = (np.arange(width * n) + 0.5) / n - 0.5
        self.ys = (np.arange(height * n) + 0.5) / n - 0.5
        self.data = np.full((height * n, width * n), BACKGROUND)

    def _window(self, box):
        n = SUPERSAMPLE
        x0, y0, x1, y1 = box
        i0 = max(0, int(math.floor((y0 + 0.5) * n)) - 1)
        i1 = min(self.data.shape[0], int(math.ceil((y1 + 0.5) * n)) + 1)
        j0 = max(0, int(math.floor((x0 + 0.5) * n)) - 1)
        j1 = min(self.data.shape[1], int(math.ceil((x1 + 0.5) * n)) + 1)
        X, Y = np.meshgrid(self.xs[j0:j1], self.ys[i0:i1])
        return (slice(i0, i1), slice(j0, j1)), X, Y

    def ellipse(self, e, level, band=None):
        """Fill ``e``; with ``band`` only paint a ring of that width on the perimeter."""
        ax_u, ax_v = e.a, e.b
        r = max(ax_u, ax_v) + (band or 0)
        sl, X, Y = self._window((e.cx - r, e.cy - r, e.cx + r, e.cy + r))
        c, s = math.cos(e.theta), math.sin(e.theta)
        u = c * (X - e.cx) + s * (Y - e.cy)
        v = -s * (X - e.cx) + c * (Y - e.cy)
        f = (u / ax_u) ** 2 + (v / ax_v) ** 2 - 1
        if band is None:
            mask = f <= 0
        else:
            grad = 2 * np.hypot(u / ax_u**2, v / ax_v**2)
            mask = np.abs(f) / np.maximum(grad, 1e-12) <= band / 2
        self.data[sl][mask] = level

    def sweep(self, e, drop, level):
        """Fill the region covered by ``e`` as it slides ``drop`` pixels down."""
        x0, y0, x1, y1 = e.bounding_box()
        sl, X, Y = self._window((x0, y0, x1, y1 + drop))
        A, B, C = _conic(e)
        dx = X - e.cx
        # column-wise roots of C y^2 + B dx y + (A dx^2 - 1) = 0
        disc = (B * dx) ** 2 - 4 * C * (A * dx * dx - 1)
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0))
        top = e.cy + (-B * dx - root) / (2 * C)
        bottom = e.cy + (-B * dx + root) / (2 * C) + drop
        self.data[sl][ok & (Y >= top) & (Y <= bottom)] = level

    def polygon(self, verts, level):
        n = SUPERSAMPLE
        # supersampled pixel (j, i) sits at ((j + 0.5) / n - 0.5, (i + 0.5) / n - 0.5)
        pts = [(float(x), float(y)) for x, y in (verts + 0.5) * n - 0.5]
        mask = Image.new("1", (self.data.shape[1], self.data.shape[0]), 0)
        ImageDraw.Draw(mask).polygon(pts, fill=1)
        self.data[np.asarray(mask, dtype=bool)] = level

    def polyline(self, verts, width, level):
        for p, q in zip(verts[:-1], verts[1:]):
            box = (min(p[0], q[0]) - width, min(p[1], q[1]) - width,
                   max(p[0], q[0]) + width, max(p[1], q[1]) + width)
            sl, X, Y = self._window(box)
            d = q - p
            t = ((X - p[0]) * d[0] + (Y - p[1]) * d[1]) / float(d @ d)
            t = np.clip(t, 0, 1)
            dist = np.hypot(X - p[0] - t * d[0], Y - p[1] - t * d[1])
            self.data[sl][dist <= width / 2] = level

    def render(self):
        n = SUPERSAMPLE
        h, w = self.height, self.width
        return self.data.reshape(h, n, w, n).mean(axis=(1, 3))


def food_pile(rng, e):
    """Closed zigzag polygon filling the food region of dish ``e``.

    Consecutive edges turn by well over 30 degrees, so the outline never
    survives the curvature gate.
    """
    inner = Ellipse(e.cx, e.cy, e.a - PILE_MARGIN, e.b - PILE_MARGIN, e.theta)
    perimeter = math.pi * (inner.a + inner.b)
    n = max(6, int(round(perimeter / (2 * PILE_TOOTH))))
    t = (np.arange(2 * n) + rng.uniform(0, 1)) * math.pi / n
    r = np.where(np.arange(2 * n) % 2 == 0, 1.0, PILE_INNER) * rng.uniform(0.97, 1.0, 2 * n)
    c, s = math.cos(inner.theta), math.sin(inner.theta)
    u, v = r * inner.a * np.cos(t), r * inner.b * np.sin(t)
    return np.column_stack([inner.cx + c * u - s * v, inner.cy + s * u + c * v])


def random_polyline(rng, inside, start, n_vertices):
    """Jagged polyline whose every turn lies in [MIN_TURN, MAX_TURN] degrees.

    ``inside`` is a predicate on points; vertices that would leave the
    region are resampled a few times before the polyline is cut short.
    """
    verts = [np.asarray(start, dtype=float)]
    heading = rng.uniform(0, 2 * math.pi)
    first = True
    while len(verts) < n_vertices:
        placed = False
        for _ in range(20):
            if first:
                h = rng.uniform(0, 2 * math.pi)
            else:
                turn = math.radians(rng.uniform(MIN_TURN, MAX_TURN)) * rng.choice((-1.0, 1.0))
                h = heading + turn
            length = rng.uniform(*SEGMENT_LEN)
            nxt = verts[-1] + length * np.array([math.cos(h), math.sin(h)])
            if inside(nxt):
                verts.append(nxt)
                heading = h
                placed = True
                break
        first = False
        if not placed:
            break
    return np.array(verts)


def _check_feasible(spec):
    for i, rim in enumerate(spec.rims):
        x0, y0, x1, y1 = dish_box(rim.ellipse, spec.second_rim, spec.bowl_depth)
        if x0 < MARGIN or y0 < MARGIN or x1 > spec.width - 1 - MARGIN or y1 > spec.height - 1 - MARGIN:
            raise SpecInfeasible(f"ellipse {i} of {spec.image_id} does not fit the {spec.width}x{spec.height} canvas")


def _clip_box(box, width, height):
    x0, y0, x1, y1 = box
    return (max(0.0, x0), max(0.0, y0), min(width - 1.0, x1), min(height - 1.0, y1))


def generate_scene(spec):
    """Render ``spec``; returns a :class:`Scene` with an 8-bit RGB image."""
    if spec.width < 16 or spec.height < 16:
        raise SpecInfeasible("canvas too small")
    _check_feasible(spec)
    rng = np.random.default_rng(spec.seed)
    canvas = _Canvas(spec.width, spec.height)
    plates, foods, polylines = [], [], []
    label = "bowl" if spec.second_rim else "plate"

    for rim in spec.rims:
        e = rim.ellipse
        interior = min(1.0, BACKGROUND + rim.fill_contrast)
        if spec.second_rim:
            canvas.sweep(e, body_offset(e, spec.bowl_depth), BODY_LEVEL)
        canvas.ellipse(e, interior)
        if rim.stroke_contrast:
            canvas.ellipse(e, min(1.0, interior + rim.stroke_contrast), band=1.5)
        box = dish_box(e, spec.second_rim, spec.bowl_depth)
        plates.append(BoundingBox(label, box[0] - BOX_PAD, box[1] - BOX_PAD, box[2] + BOX_PAD,
                                  box[3] + BOX_PAD, round(float(rng.uniform(0.5, 0.99)), 3)))

    # spread the clutter count over the rims, at least one each
    n_rims = len(spec.rims)
    if n_rims:
        share = [spec.clutter // n_rims + (1 if i < spec.clutter % n_rims else 0) for i in range(n_rims)]
    else:
        share = []

    def add_clutter(inside, sampler, level):
        poly = random_polyline(rng, inside, sampler(), int(rng.integers(4, 8)))
        if len(poly) < 2:
            return
        canvas.polyline(poly, CLUTTER_WIDTH, level)
        polylines.append(poly)
        half = CLUTTER_WIDTH / 2
        box = (poly[:, 0].min() - half, poly[:, 1].min() - half, poly[:, 0].max() + half, poly[:, 1].max() + half)
        foods.append(BoundingBox("food", *box, round(float(rng.uniform(0.4, 0.95)), 3)))

    for rim, count in zip(spec.rims, share):
        e = rim.ellipse
        if count:
            pile = food_pile(rng, e)
            canvas.polygon(pile, PILE_LEVEL)
            foods.append(BoundingBox("food", pile[:, 0].min(), pile[:, 1].min(), pile[:, 0].max(),
                                     pile[:, 1].max(), round(float(rng.uniform(0.4, 0.95)), 3)))
        inner = Ellipse(e.cx, e.cy, FOOD_EXTENT * e.a, FOOD_EXTENT * e.b, e.theta)

        def inside(p, inner=inner):
            return inner.implicit(np.asarray(p).reshape(1, 2))[0] <= 0

        def sampler(inner=inner):
            r = math.sqrt(rng.uniform(0, 1))
            t = rng.uniform(0, 2 * math.pi)
            c, s = math.cos(inner.theta), math.sin(inner.theta)
            u, v = r * inner.a * math.cos(t), r * inner.b * math.sin(t)
            return inner.cx + c * u - s * v, inner.cy + s * u + c * v

        for _ in range(count):
            add_clutter(inside, sampler, 0.05)

    if not n_rims:
        lo = np.array([MARGIN + 10, MARGIN + 10])
        hi = np.array([spec.width - MARGIN - 10, spec.height - MARGIN - 10])

        def inside(p):
            return bool(np.all(p >= lo) and np.all(p <= hi))

        for _ in range(spec.clutter):
            add_clutter(inside, lambda: rng.uniform(lo, hi), 0.95)

    gray = canvas.render()
    tint = np.array([1.0, 0.97, 0.92])
    rgb = np.clip(np.round(gray[..., None] * tint * 255), 0, 255).astype(np.uint8)
    foods = [BoundingBox(f.label, *_clip_box(f.as_tuple(), spec.width, spec.height), f.score) for f in foods]
    truth = GroundTruth(spec.image_id, [r.ellipse for r in spec.rims])
    dets = SceneDetections(spec.image_id, plates, foods)
    return Scene(rgb, truth, dets, polylines)


def _boxes_clear(a, b, gap):
    return a[2] + gap < b[0] or b[2] + gap < a[0] or a[3] + gap < b[1] or b[3] + gap < a[1]


def random_scene_specs(count, seed=0, width=900, height=600, rims=(1, 2), clutter=(3, 6),
                       second_rim_every=2, semi_major=(100.0, 190.0), axis_ratio=(0.6, 1.0),
                       bowl_tilt=math.radians(25), bowl_depth=BOWL_DEPTH, min_curvature_radius=50.0,
                       prefix="scene"):
    """``count`` reproducible scene specs; every ``second_rim_every``-th one has a bowl body.

    Plates take any rotation. Bowls are seen from the side, so their major
    axis stays within ``bowl_tilt`` of horizontal and their body hangs
    ``bowl_depth`` (see :func:`body_offset`) below the rim. Rims whose
    tightest bend (b^2 / a at the ends of the major axis) is below
    ``min_curvature_radius`` px are redrawn. ``rims=(0, 0)`` gives
    clutter-only scenes.
    """
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(count):
        second = bool(second_rim_every) and i % second_rim_every == 1
        n_rims = int(rng.integers(rims[0], rims[1] + 1))
        placed = []
        for _ in range(n_rims):
            for _attempt in range(200):
                a = rng.uniform(*semi_major)
                b = a * rng.uniform(*axis_ratio)
                if b * b / a < min_curvature_radius:
                    continue
                angle = rng.uniform(-bowl_tilt, bowl_tilt) if second else rng.uniform(0, math.pi)
                e0 = Ellipse.from_axes(0, 0, a, b, angle)
                x0, y0, x1, y1 = dish_box(e0, second, bowl_depth)
                lo_x, hi_x = MARGIN + BOX_PAD - x0, width - 1 - MARGIN - BOX_PAD - x1
                lo_y, hi_y = MARGIN + BOX_PAD - y0, height - 1 - MARGIN - BOX_PAD - y1
                if lo_x >= hi_x or lo_y >= hi_y:
                    continue
                e = Ellipse(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y), e0.a, e0.b, e0.theta)
                box = dish_box(e, second, bowl_depth)
                if all(_boxes_clear(box, dish_box(o, second, bowl_depth), 2 * BOX_PAD + 10) for o in placed):
                    placed.append(e)
                    break
        n_clutter = int(rng.integers(clutter[0], clutter[1] + 1))
        specs.append(SceneSpec(
            width=width,
            height=height,
            rims=tuple(Rim(e) for e in placed),
            clutter=n_clutter,
            second_rim=second if placed else False,
            seed=int(rng.integers(0, 2**31 - 1)),
            image_id=f"{prefix}_{i:03d}",
            bowl_depth=bowl_depth,
        ))
    return specs
