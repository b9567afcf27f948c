"""Chamfer scoring of predicted ellipses against ground truth.

Two matching directions are provided. Method A walks the ground-truth
ellipses and scores each against its closest prediction, so missed rims
hurt. Method B walks the predictions and scores each against its closest
ground truth, so spurious or sloppy predictions hurt.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from rimfit.geometry import Ellipse, sample_ellipse


class EmptySet(ValueError):
    pass


class ParseError(ValueError):
    pass


@dataclass
class GroundTruth:
    image_id: str
    ellipses: list = field(default_factory=list)

    def to_dict(self):
        return {"image_id": self.image_id, "ellipses": [e.to_dict() for e in self.ellipses]}


@dataclass
class EvalReport:
    method: str
    mu: float
    sigma: float
    n_images: int
    per_image: dict = field(default_factory=dict)
    # mean of per-image means, reported alongside the per-value mean
    mu_per_image: float = math.nan

    def to_dict(self):
        return {
            "method": self.method,
            "mu": None if math.isnan(self.mu) else self.mu,
            "sigma": None if math.isnan(self.sigma) else self.sigma,
            "n_images": self.n_images,
            "mu_per_image": None if math.isnan(self.mu_per_image) else self.mu_per_image,
            "per_image": self.per_image,
        }

    def summary(self):
        return f"method {self.method}: mu={self.mu:.3f} sigma={self.sigma:.3f} N={self.n_images}"


def _nearest_distances(src, dst):
    dx = src[:, 0][:, None] - dst[:, 0][None, :]
    dy = src[:, 1][:, None] - dst[:, 1][None, :]
    return np.sqrt(dx * dx + dy * dy).min(axis=1)


def chamfer(a, b, normalized=True):
    """Symmetric Chamfer distance between two 2-D point sets.

    ``normalized=True`` averages the nearest-neighbour distances in each
    direction before halving; ``normalized=False`` sums them instead.
    Sums use ``math.fsum`` so the value does not depend on summation order.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("chamfer needs two non-empty point sets")
    ab = math.fsum(_nearest_distances(a, b).tolist())
    ba = math.fsum(_nearest_distances(b, a).tolist())
    if normalized:
        return 0.5 * (ab / len(a) + ba / len(b))
    return 0.5 * (ab + ba)


def ellipse_chamfer(e1, e2, n_samples=360, normalized=True):
    return chamfer(sample_ellipse(e1, n_samples), sample_ellipse(e2, n_samples), normalized)


def _match(sources, targets, n_samples, normalized):
    if not sources or not targets:
        return []
    target_pts = [sample_ellipse(t, n_samples) for t in targets]
    values = []
    for s in sources:
        sp = sample_ellipse(s, n_samples)
        values.append(min(chamfer(sp, tp, normalized) for tp in target_pts))
    return values


def eval_method_a(gt, preds, n_samples=360, normalized=True):
    """One value per ground-truth ellipse: Chamfer to its closest prediction."""
    ellipses = gt.ellipses if isinstance(gt, GroundTruth) else gt
    return _match(list(ellipses), list(preds), n_samples, normalized)


def eval_method_b(gt, preds, n_samples=360, normalized=True):
    """One value per prediction: Chamfer to its closest ground-truth ellipse."""
    ellipses = gt.ellipses if isinstance(gt, GroundTruth) else gt
    return _match(list(preds), list(ellipses), n_samples, normalized)


def aggregate(values, method="A"):
    """Pool per-image value lists into mean, population std and image count."""
    per_image = {k: list(v) for k, v in values.items() if len(v)}
    flat = [x for v in per_image.values() for x in v]
    if not flat:
        return EvalReport(method, math.nan, math.nan, 0, per_image)
    mu = math.fsum(flat) / len(flat)
    sigma = math.sqrt(math.fsum((x - mu) ** 2 for x in flat) / len(flat))
    means = [math.fsum(v) / len(v) for v in per_image.values()]
    return EvalReport(method, mu, sigma, len(per_image), per_image, math.fsum(means) / len(means))


def evaluate(truths, predictions, method="A", n_samples=360, normalized=True):
    """Score a corpus.

    ``truths`` maps image_id -> GroundTruth and ``predictions`` maps
    image_id -> list of Ellipse. Images absent from either side contribute
    nothing.
    """
    fn = eval_method_a if method == "A" else eval_method_b
    values = {}
    for image_id, gt in truths.items():
        preds = predictions.get(image_id, [])
        values[image_id] = fn(gt, preds, n_samples, normalized)
    return aggregate(values, method)


def parse_ground_truth(doc):
    try:
        out = {}
        for item in doc:
            out[str(item["image_id"])] = GroundTruth(
                str(item["image_id"]), [Ellipse.from_dict(e) for e in item["ellipses"]])
        return out
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad ground-truth document: {exc}") from None


def load_ground_truth(path):
    try:
        with open(path) as fh:
            return parse_ground_truth(json.load(fh))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_ground_truth(truths, path):
    with open(path, "w") as fh:
        json.dump([t.to_dict() for t in truths], fh, indent=1)
        fh.write("\n")


def load_predictions(path):
    """Read a per-image prediction file; returns (image_id, list of Ellipse)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return str(doc["image_id"]), [Ellipse.from_dict(e) for e in doc["ellipses"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_predictions(image_id, ellipses, path):
    with open(path, "w") as fh:
        json.dump({"image_id": image_id, "ellipses": [e.to_dict() for e in ellipses]}, fh, indent=1)
        fh.write("\n")
