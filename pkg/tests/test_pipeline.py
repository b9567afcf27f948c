import math

import numpy as np
import pytest

from rimfit.config import Config, replace
from rimfit.contours import rim_distances
from rimfit.evaluation import ellipse_chamfer
from rimfit.geometry import Ellipse
from rimfit.pipeline import STAGES, fit_image, rim_contexts
from rimfit.synthetic import Rim, SceneSpec, generate_scene


def disk_scene(r, size=240):
    return generate_scene(SceneSpec(size, size, rims=(Rim(Ellipse(size / 2, size / 2, r, r, 0)),), seed=7))


def test_disk_round_trip():
    scene = disk_scene(80)
    (e,) = fit_image(scene.image, scene.detections).ellipses
    assert math.hypot(e.cx - 120, e.cy - 120) < 1.5
    assert abs(e.a - 80) < 2 and abs(e.b - 80) < 2


def test_small_disk_needs_a_shorter_step():
    # at s = 8 pixel quantisation lifts the curvature gate above 2 on r = 60
    scene = disk_scene(60)
    assert fit_image(scene.image, scene.detections).ellipses == []
    (e,) = fit_image(scene.image, scene.detections, replace(Config(), s=6)).ellipses
    assert math.hypot(e.cx - 120, e.cy - 120) < 1.5 and abs(e.a - 60) < 2


def test_stage_order():
    scene = disk_scene(80)
    assert tuple(fit_image(scene.image, scene.detections).stages) == STAGES


def test_without_detections():
    scene = disk_scene(80)
    bare = fit_image(scene.image, None)
    assert len(bare.ellipses) == len(bare.stages["fit"]) == 1


def test_bowl_lower_arc_is_removed():
    rim = Ellipse(250, 170, 150, 95, 0.1)
    scene = generate_scene(SceneSpec(500, 400, rims=(Rim(rim),), clutter=4, second_rim=True, seed=7))
    res = fit_image(scene.image, scene.detections)
    (ctx,) = rim_contexts(res.stages["merge_detections"])
    before = [d for d in rim_distances(res.stages["straight"], ctx) if d is not None]
    after = [d for d in rim_distances(res.stages["rim"], ctx) if d is not None]
    # the body's lower arc was the deepest contour in the gap, and it went
    assert len(after) == len(before) - 1 and max(after) < max(before)
    (e,) = res.ellipses
    assert math.hypot(e.cx - rim.cx, e.cy - rim.cy) < 3
    assert ellipse_chamfer(e, rim) < 3


def test_final_points_were_edge_pixels():
    scene = generate_scene(SceneSpec(500, 400, rims=(Rim(Ellipse(250, 170, 150, 95, 0.1)),), clutter=4,
                                     second_rim=True, seed=3))
    res = fit_image(scene.image, scene.detections)
    edges = res.stages["canny"]
    for g in res.stages["group"]:
        g = np.asarray(g)
        assert edges[g[:, 1], g[:, 0]].all()


def test_grayscale_input():
    scene = disk_scene(80)
    gray = scene.image[..., 0]
    assert len(fit_image(gray, scene.detections).ellipses) == 1
