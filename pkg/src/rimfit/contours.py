"""From traced edge chains to grouped elliptical arcs.

Contours are ``(n, 2)`` arrays of integer (x, y) pixels in trace order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from rimfit.config import HyperParams
from rimfit.detections import DISH_LABELS
from rimfit.geometry import DegenerateConfiguration, TooFewPoints, ellipse_distances, fit_ellipse_dls

__all__ = [
    "HyperParams",
    "NoGap",
    "RimContext",
    "extract_curved",
    "filter_rim",
    "filter_straight",
    "group_contours",
    "rim_distances",
    "step_vector",
]

_TIE = 1e-9


class NoGap(ValueError):
    """The food box reaches the bottom of its dish box; nothing to disambiguate."""


@dataclass(frozen=True)
class RimContext:
    food_box: object
    plate_box: object

    def __post_init__(self):
        if self.food_box.label != "food":
            raise ValueError("food_box must be labelled food")
        if self.plate_box.label not in DISH_LABELS:
            raise ValueError("plate_box must be a plate or bowl")


def step_vector(p, u, s):
    """Displacement between contour points ``u`` and ``u + s``."""
    p = np.asarray(p)
    if u < 0 or u + s >= len(p):
        raise IndexError(f"step {u}+{s} outside contour of length {len(p)}")
    return p[u + s] - p[u]


def _gate_values(p, s):
    """L1 change between consecutive step vectors, one value per anchor ``u``."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    if n < 2 * s + 1:
        return np.empty(0)
    d1 = p[s:n - s] - p[:n - 2 * s]
    d2 = p[2 * s:] - p[s:n - s]
    return np.abs(d2 - d1).sum(axis=1)


def extract_curved(p, hp):
    """Keep the low-curvature stretches of a traced chain.

    For every anchor ``u`` the step vectors ``p[u]->p[u+s]`` and
    ``p[u+s]->p[u+2s]`` are compared. While they differ by at most
    ``epsilon`` (L1) the points ``p[u+s] .. p[u+2s]`` join the current run;
    a larger change closes the run, discards that window's points and starts
    afresh. Runs shorter than ``l_min`` are dropped. Output runs are
    contiguous slices of ``p`` and never share a point.
    """
    p = np.asarray(p)
    s = hp.s
    gate = _gate_values(p, s)
    out = []
    start = stop = None  # current run is p[start:stop]
    floor = 0  # first index a new run may use

    def close():
        if start is not None and stop - start >= hp.l_min:
            out.append(p[start:stop].copy())

    for u, a in enumerate(gate):
        v = u + s
        if a <= hp.epsilon:
            if start is None:
                start = max(v, floor)
            stop = v + s + 1
        else:
            close()
            start = stop = None
            floor = max(floor, v + s + 1)
    close()
    return out


def _line_distances(c):
    c = np.asarray(c, dtype=float)
    p0, p1 = c[0], c[-1]
    d = p1 - p0
    norm = np.hypot(*d)
    if norm == 0:
        return np.hypot(*(c - p0).T)
    return np.abs(d[0] * (c[:, 1] - p0[1]) - d[1] * (c[:, 0] - p0[0])) / norm


def chord_deviation(c):
    """Largest distance from a contour point to the line through its end points."""
    return float(_line_distances(c).max())


def filter_straight(contours, hp, squared=False):
    """Drop contours that hug the chord between their first and last point."""
    kept = []
    for c in contours:
        dev = chord_deviation(c)
        if squared:
            dev = dev * dev
        if dev >= hp.d_chord:
            kept.append(c)
    return kept


def gap_points(c, ctx):
    """Points of ``c`` in the gap under the food box, above the dish box bottom."""
    c = np.asarray(c)
    f, p = ctx.food_box, ctx.plate_box
    x, y = c[:, 0], c[:, 1]
    mask = (x >= f.x_min) & (x <= f.x_max) & (y >= f.y_max) & (y <= p.y_max)
    return c[mask]


def rim_distances(contours, ctx):
    """Depth below the food box bottom of each contour's lowest point in the gap.

    Contours with no point in the gap get None.
    """
    out = []
    for c in contours:
        pts = gap_points(c, ctx)
        out.append(abs(ctx.food_box.y_max - float(pts[:, 1].max())) if len(pts) else None)
    return out


def filter_rim(contours, ctx, hp):
    """Discard contours whose depth below the food box is an outlier.

    Only contours with points in the gap directly under the food box (down
    to the dish box bottom) take part, and only those points are measured.
    While the spread of their depths exceeds ``h_gap`` the one farthest from the mean depth is dropped (ties, and the
    two-contour case, drop the deeper one). Everything else passes through.
    """
    if ctx.food_box.y_max >= ctx.plate_box.y_max:
        raise NoGap("food box bottom is not above the dish box bottom")
    depths = rim_distances(contours, ctx)
    band = [i for i, d in enumerate(depths) if d is not None]
    depth = {i: depths[i] for i in band}
    alive = list(band)
    while len(alive) > 1:
        ds = [depth[i] for i in alive]
        if max(ds) - min(ds) <= hp.h_gap:
            break
        mean = sum(ds) / len(ds)
        dev = [abs(d - mean) for d in ds]
        top = max(dev)
        tied = [k for k, v in enumerate(dev) if v >= top - _TIE]
        # larger depth first, later position on a full tie
        k = max(tied, key=lambda k: (ds[k], k))
        alive.pop(k)
    dropped = set(band) - set(alive)
    return [c for i, c in enumerate(contours) if i not in dropped]


def fit_score(points):
    """Mean squared distance from ``points`` to the ellipse fitted through them."""
    pts = np.asarray(points, dtype=float)
    e = fit_ellipse_dls(pts)
    d = ellipse_distances(pts, e)
    return float(np.mean(d * d)), e


def _pair_score(a, b):
    try:
        return fit_score(np.concatenate([a, b]))[0]
    except (DegenerateConfiguration, TooFewPoints, np.linalg.LinAlgError):
        return None


def group_contours(contours, hp):
    """Greedily merge contours that lie on a common ellipse.

    Every round scores all pairs by the residual of an ellipse fitted to
    their pooled points and merges the best pair scoring below ``m_score``.
    Stops when no pair qualifies. Pairs whose pooled fit is degenerate are
    never merged.
    """
    items = [np.asarray(c) for c in contours]
    if len(items) < 2:
        return items
    ids = list(range(len(items)))
    pool = dict(zip(ids, items))
    scores = {}
    for i, j in itertools.combinations(ids, 2):
        scores[(i, j)] = _pair_score(pool[i], pool[j])
    next_id = len(items)
    while True:
        best = None
        for key, sc in scores.items():
            if sc is None or sc >= hp.m_score:
                continue
            # deterministic order: lowest score, then the earliest pair
            if best is None or (sc, key) < (best[1], best[0]):
                best = (key, sc)
        if best is None:
            break
        i, j = best[0]
        merged = np.concatenate([pool.pop(i), pool.pop(j)])
        scores = {k: v for k, v in scores.items() if i not in k and j not in k}
        for k in pool:
            scores[(k, next_id)] = _pair_score(pool[k], merged)
        pool[next_id] = merged
        next_id += 1
    return [pool[k] for k in sorted(pool)]
