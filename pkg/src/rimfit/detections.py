"""Detector output ingestion and food-box merging.

Detection files are JSON documents of the form::

    {"image_id": "img_001",
     "detections": [{"label": "plate", "score": 0.91, "box": [x_min, y_min, x_max, y_max]}, ...]}

with pixel coordinates in the native image. Any upstream detector can be
plugged in by writing this format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

DISH_LABELS = ("plate", "bowl")
LABELS = DISH_LABELS + ("food",)


class ParseError(ValueError):
    pass


class SchemaViolation(ValueError):
    pass


@dataclass(frozen=True)
class BoundingBox:
    label: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float = 1.0

    def __post_init__(self):
        if self.label not in LABELS:
            raise SchemaViolation(f"unknown label {self.label!r}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise SchemaViolation(f"inverted or empty box {self.as_tuple()}")
        if not 0.0 <= self.score <= 1.0:
            raise SchemaViolation(f"score {self.score} outside [0, 1]")

    def as_tuple(self):
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def center(self):
        return ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    @property
    def area(self):
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def contains_point(self, x, y):
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def contains_box(self, other):
        return (self.x_min <= other.x_min and self.y_min <= other.y_min
                and other.x_max <= self.x_max and other.y_max <= self.y_max)

    def union(self, other):
        return BoundingBox(
            self.label,
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
            max(self.score, other.score),
        )


@dataclass
class SceneDetections:
    image_id: str
    plates: list = field(default_factory=list)
    foods: list = field(default_factory=list)

    def to_dict(self):
        return {
            "image_id": self.image_id,
            "detections": [
                {"label": b.label, "score": b.score, "box": list(b.as_tuple())}
                for b in list(self.plates) + list(self.foods)
            ],
        }


def parse_detections(doc, floor=0.35):
    """Validate a decoded detection document, dropping boxes scored below ``floor``."""
    try:
        image_id = str(doc["image_id"])
        items = doc["detections"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"detection document missing field: {exc}") from None
    plates, foods = [], []
    for item in items:
        try:
            box = BoundingBox(str(item["label"]), *map(float, item["box"]), float(item["score"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaViolation):
                raise
            raise ParseError(f"bad detection entry {item!r}") from None
        if box.score < floor:
            continue
        (foods if box.label == "food" else plates).append(box)
    return SceneDetections(image_id, plates, foods)


def load_detections(path, floor=0.35):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_detections(doc, floor)


def save_detections(scene, path):
    with open(path, "w") as fh:
        json.dump(scene.to_dict(), fh, indent=1)
        fh.write("\n")


def iou(a, b):
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _same_dish(a, b, plates, strict):
    for p in plates:
        if strict:
            if p.contains_box(a) and p.contains_box(b):
                return True
        elif p.contains_point(*a.center) and p.contains_point(*b.center):
            return True
    return False


def _sort_key(b):
    return (b.x_min, b.y_min, b.x_max, b.y_max, b.score)


def merge_food_boxes(scene, g_m, strict_containment=False):
    """Collapse food boxes that share a dish or overlap with IoU >= ``g_m``.

    Each round links every qualifying pair, replaces each linked group by its
    union rectangle (score = max), and repeats until nothing links. Working
    on whole groups keeps the result independent of input order.
    """
    foods = sorted(scene.foods, key=_sort_key)
    while True:
        n = len(foods)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        linked = False
        for i in range(n):
            for j in range(i + 1, n):
                a, b = foods[i], foods[j]
                if iou(a, b) >= g_m or _same_dish(a, b, scene.plates, strict_containment):
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[max(ri, rj)] = min(ri, rj)
                        linked = True
        if not linked:
            break
        groups = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(foods[i])
        merged = []
        for members in groups.values():
            box = members[0]
            for other in members[1:]:
                box = box.union(other)
            merged.append(box)
        foods = sorted(merged, key=_sort_key)
    return replace(scene, foods=foods, plates=list(scene.plates))


def nearest_box(point, boxes):
    """Box whose centre is closest to ``point``; ties go to the earlier box."""
    best, best_d = None, None
    for b in boxes:
        cx, cy = b.center
        d = (cx - point[0]) ** 2 + (cy - point[1]) ** 2
        if best_d is None or d < best_d:
            best, best_d = b, d
    return best
