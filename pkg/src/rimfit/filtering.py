"""Ellipse candidates from grouped contours, and the two box-based filters."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from rimfit.detections import nearest_box
from rimfit.geometry import (
    DegenerateConfiguration,
    Ellipse,
    TooFewPoints,
    convex_hull,
    ellipse_distances,
    ellipse_fraction_outside,
    fit_ellipse_dls,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateEllipse:
    ellipse: Ellipse
    source_contour_size: int
    score: float

    def __post_init__(self):
        if not self.score >= 0:
            raise ValueError("score must be non-negative")


def fit_candidates(contours):
    """Fit an ellipse to the convex hull of each contour.

    ``score`` is the mean squared distance of the contour's own points to
    the fitted ellipse. Contours whose hull or fit is degenerate are skipped.
    """
    out = []
    for c in contours:
        pts = np.asarray(c, dtype=float)
        try:
            e = fit_ellipse_dls(convex_hull(pts))
        except (DegenerateConfiguration, TooFewPoints, np.linalg.LinAlgError) as exc:
            log.debug("dropping contour of %d points: %s", len(pts), exc)
            continue
        d = ellipse_distances(pts, e)
        out.append(CandidateEllipse(e, len(pts), float(np.mean(d * d))))
    return out


def filter_by_plate_box(cands, plates, hp):
    """Drop candidates with at least ``a_p`` of their area outside the nearest dish box."""
    if not plates:
        return list(cands)
    kept = []
    for c in cands:
        e = c.ellipse
        box = nearest_box((e.cx, e.cy), plates)
        if ellipse_fraction_outside(e, box.as_tuple()) < hp.a_p:
            kept.append(c)
    return kept


def filter_by_food_distance(cands, foods, hp, squared=False):
    """Drop candidates whose centre is ``d_f`` or farther from every food box centre."""
    if not foods:
        return list(cands)
    kept = []
    for c in cands:
        e = c.ellipse
        dist = min(math.hypot(e.cx - f.center[0], e.cy - f.center[1]) for f in foods)
        if squared:
            dist = dist * dist
        if dist < hp.d_f:
            kept.append(c)
    return kept
