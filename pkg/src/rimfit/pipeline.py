"""End-to-end rim fitting for one image."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from rimfit.config import Config
from rimfit.contours import NoGap, RimContext, extract_curved, filter_rim, filter_straight, group_contours
from rimfit.detections import SceneDetections, merge_food_boxes, nearest_box
from rimfit.edges import canny, to_gray, trace_contours
from rimfit.filtering import filter_by_food_distance, filter_by_plate_box, fit_candidates

log = logging.getLogger(__name__)

STAGES = (
    "merge_detections",
    "canny",
    "trace",
    "extract",
    "straight",
    "rim",
    "group",
    "fit",
    "plate",
    "food",
)


@dataclass
class PipelineResult:
    ellipses: list
    candidates: list
    detections: SceneDetections
    stages: dict = field(default_factory=dict)


def rim_contexts(dets):
    """Pair every food box with its closest dish box."""
    out = []
    for f in dets.foods:
        p = nearest_box(f.center, dets.plates)
        if p is not None:
            out.append(RimContext(f, p))
    return out


def fit_image(image, detections=None, config=None):
    """Run every stage on an RGB or grayscale raster.

    ``detections`` may be None, in which case only the geometric stages
    run and every hull-fitted candidate is returned.
    """
    cfg = config or Config()
    hp = cfg.hyper
    stages = {}

    dets = detections or SceneDetections("", [], [])
    dets = merge_food_boxes(dets, hp.g_m, cfg.strict_containment)
    stages["merge_detections"] = dets

    gray = to_gray(image)
    edges = canny(gray, cfg.canny_sigma, low_quantile=cfg.canny_low_quantile,
                  high_quantile=cfg.canny_high_quantile)
    stages["canny"] = edges

    raw = trace_contours(edges)
    stages["trace"] = raw

    curved = [c for r in raw for c in extract_curved(r, hp)]
    stages["extract"] = curved

    bent = filter_straight(curved, hp, squared=cfg.squared_chord)
    stages["straight"] = bent

    rims = bent
    for ctx in rim_contexts(dets):
        try:
            rims = filter_rim(rims, ctx, hp)
        except NoGap:
            log.debug("no gap below food box %s", ctx.food_box.as_tuple())
    stages["rim"] = rims

    groups = group_contours(rims, hp)
    stages["group"] = groups

    cands = fit_candidates(groups)
    stages["fit"] = cands

    cands = filter_by_plate_box(cands, dets.plates, hp)
    stages["plate"] = cands

    cands = filter_by_food_distance(cands, dets.foods, hp, squared=cfg.squared_food_distance)
    stages["food"] = cands

    return PipelineResult([c.ellipse for c in cands], cands, dets, stages)
