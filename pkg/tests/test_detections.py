import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rimfit.detections import (
    BoundingBox,
    ParseError,
    SceneDetections,
    SchemaViolation,
    iou,
    load_detections,
    merge_food_boxes,
    nearest_box,
    save_detections,
)


def food(*box, score=0.9):
    return BoundingBox("food", *box, score)


def write(tmp_path, items, name="img.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"image_id": "img", "detections": items}))
    return path


def test_load_one_plate_one_food(tmp_path):
    path = write(tmp_path, [
        {"label": "plate", "score": 0.9, "box": [0, 0, 100, 100]},
        {"label": "food", "score": 0.8, "box": [10, 10, 50, 50]},
    ])
    scene = load_detections(path)
    assert len(scene.plates) == 1 and len(scene.foods) == 1
    assert scene.foods[0].as_tuple() == (10, 10, 50, 50)


def test_low_scores_are_dropped(tmp_path):
    path = write(tmp_path, [{"label": "food", "score": 0.2, "box": [10, 10, 50, 50]}])
    assert load_detections(path).foods == []
    # the floor itself is kept
    path = write(tmp_path, [{"label": "food", "score": 0.35, "box": [10, 10, 50, 50]}])
    assert len(load_detections(path).foods) == 1


def test_inverted_box(tmp_path):
    path = write(tmp_path, [{"label": "plate", "score": 0.9, "box": [60, 0, 50, 10]}])
    with pytest.raises(SchemaViolation):
        load_detections(path)


def test_bad_documents(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_detections(bad)
    with pytest.raises(ParseError):
        load_detections(write(tmp_path, [{"label": "food", "box": [0, 0, 1, 1]}]))
    with pytest.raises(SchemaViolation):
        load_detections(write(tmp_path, [{"label": "cup", "score": 0.9, "box": [0, 0, 1, 1]}]))


def test_save_load_round_trip(tmp_path):
    scene = SceneDetections("x", [BoundingBox("bowl", 1, 2, 30, 40, 0.7)], [food(5, 6, 7, 8, score=0.5)])
    save_detections(scene, tmp_path / "x.json")
    assert load_detections(tmp_path / "x.json") == scene


def test_iou_examples():
    a = food(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, food(5, 5, 6, 6)) == 0.0
    assert iou(a, food(1, 0, 3, 2)) == pytest.approx(1 / 3)
    # touching edges do not overlap
    assert iou(a, food(2, 0, 4, 2)) == 0.0


coords = st.floats(0, 100, allow_nan=False)


@st.composite
def boxes(draw, label="food"):
    x0, y0 = draw(coords), draw(coords)
    w, h = draw(st.floats(1, 60)), draw(st.floats(1, 60))
    return BoundingBox(label, x0, y0, x0 + w, y0 + h, draw(st.floats(0.35, 1)))


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


def test_merge_inside_one_plate():
    plate = BoundingBox("plate", 0, 0, 200, 200)
    scene = SceneDetections("s", [plate], [food(10, 10, 40, 40, score=0.5), food(150, 150, 190, 190, score=0.8)])
    merged = merge_food_boxes(scene, 0.6)
    assert [f.as_tuple() for f in merged.foods] == [(10, 10, 190, 190)]
    assert merged.foods[0].score == 0.8


def test_merge_by_overlap():
    # IoU 0.7 exactly: inter 7, union 10
    a, b = food(0, 0, 8.5, 1), food(1.5, 0, 10, 1)
    assert iou(a, b) == pytest.approx(0.7)
    merged = merge_food_boxes(SceneDetections("s", [], [a, b]), 0.6)
    assert [f.as_tuple() for f in merged.foods] == [(0, 0, 10, 1)]
    unmerged = merge_food_boxes(SceneDetections("s", [], [a, b]), 0.75)
    assert len(unmerged.foods) == 2


def test_disjoint_foods_in_separate_plates():
    plates = [BoundingBox("plate", 0, 0, 100, 100), BoundingBox("bowl", 200, 0, 300, 100)]
    foods = [food(10, 10, 50, 50), food(210, 10, 250, 50)]
    merged = merge_food_boxes(SceneDetections("s", plates, foods), 0.6)
    assert merged.foods == foods


def test_strict_containment_switch():
    plate = BoundingBox("plate", 0, 0, 100, 100)
    # centres inside the plate, but the second box overhangs it
    foods = [food(10, 10, 40, 40), food(60, 60, 110, 90)]
    scene = SceneDetections("s", [plate], foods)
    assert len(merge_food_boxes(scene, 0.6).foods) == 1
    assert len(merge_food_boxes(scene, 0.6, strict_containment=True).foods) == 2


def test_merge_closes_chains():
    # a overlaps b, b overlaps c, a and c are disjoint
    a, b, c = food(0, 0, 10, 10), food(1, 0, 11, 10), food(10.5, 0, 20.5, 10)
    merged = merge_food_boxes(SceneDetections("s", [], [c, a, b]), 0.6)
    assert [f.as_tuple() for f in merged.foods] == [(0, 0, 11, 10), (10.5, 0, 20.5, 10)]
    # a+b union (0..11) overlaps c enough on the next round at a lower threshold
    merged = merge_food_boxes(SceneDetections("s", [], [c, a, b]), 0.02)
    assert [f.as_tuple() for f in merged.foods] == [(0, 0, 20.5, 10)]


scene_strategy = st.builds(
    lambda plates, foods: SceneDetections("s", plates, foods),
    st.lists(boxes("plate"), max_size=2),
    st.lists(boxes(), max_size=5),
)


@given(scene_strategy, st.sampled_from([0.1, 0.3, 0.6]))
def test_merge_idempotent_and_contains_members(scene, g_m):
    once = merge_food_boxes(scene, g_m)
    assert merge_food_boxes(once, g_m) == once
    for f in scene.foods:
        assert sum(m.contains_box(f) for m in once.foods) >= 1
    assert len(once.foods) <= len(scene.foods)


@given(st.lists(boxes(), min_size=1, max_size=5), st.sampled_from([0.1, 0.6]))
def test_merge_order_independent(foods, g_m):
    results = {tuple(merge_food_boxes(SceneDetections("s", [], list(p)), g_m).foods)
               for p in itertools.permutations(foods)}
    assert len(results) == 1


def test_nearest_box():
    boxes_ = [BoundingBox("plate", 0, 0, 10, 10), BoundingBox("bowl", 100, 0, 110, 10)]
    assert nearest_box((90, 5), boxes_) is boxes_[1]
    assert nearest_box((55, 5), boxes_) is boxes_[0]  # tie goes to the first
    assert nearest_box((0, 0), []) is None
