"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s`` (the lines are
printed either way) or ``python3 tests/test_acceptance.py``.
"""

import json
import math
import time

import numpy as np
import pytest

from rimfit.cli import main
from rimfit.config import Config, HyperParams, load_config, save_config
from rimfit.contours import RimContext, filter_rim, filter_straight, rim_distances
from rimfit.detections import BoundingBox
from rimfit.evaluation import aggregate, chamfer, eval_method_a, eval_method_b
from rimfit.filtering import CandidateEllipse, filter_by_food_distance, filter_by_plate_box
from rimfit.geometry import Ellipse, fit_ellipse_dls, sample_ellipse
from rimfit.pipeline import fit_image
from rimfit.synthetic import generate_scene, random_scene_specs

BENCH_SEED = 2024
CLUTTER_SEED = 99


@pytest.fixture
def verdict(capsys):
    def report(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail

    return report


def test_c1_fit_round_trip(verdict):
    rng = np.random.default_rng(1)
    worst_c = worst_ax = 0.0
    t0 = time.perf_counter()
    for _ in range(200):
        a = rng.uniform(20, 200)
        e = Ellipse.from_axes(rng.uniform(-500, 500), rng.uniform(-500, 500), a, a * rng.uniform(0.3, 1.0),
                              rng.uniform(0, 2 * math.pi))
        f = fit_ellipse_dls(sample_ellipse(e, 12))
        worst_c = max(worst_c, math.hypot(f.cx - e.cx, f.cy - e.cy))
        worst_ax = max(worst_ax, abs(f.a - e.a) / e.a, abs(f.b - e.b) / e.b)
    dt = time.perf_counter() - t0
    ok = worst_c < 1e-6 and worst_ax < 1e-6 and dt < 1.0
    verdict(1, "DLS round-trip on 200 ellipses", ok,
            f"centre err {worst_c:.1e} px, axis err {worst_ax:.1e}, {dt:.2f} s")


def _oracle(a, b, normalized):
    def side(src, dst):
        return math.fsum(float(np.sqrt((dst[:, 0] - p[0]) ** 2 + (dst[:, 1] - p[1]) ** 2).min()) for p in src)

    ab, ba = side(a, b), side(b, a)
    return 0.5 * (ab / len(a) + ba / len(b)) if normalized else 0.5 * (ab + ba)


def test_c2_chamfer_oracle(verdict):
    rng = np.random.default_rng(2)
    pairs = [(rng.uniform(-300, 300, (int(rng.integers(1, 501)), 2)),
              rng.uniform(-300, 300, (int(rng.integers(1, 501)), 2))) for _ in range(100)]
    t0 = time.perf_counter()
    values = [(chamfer(a, b, True), chamfer(a, b, False)) for a, b in pairs]
    dt = time.perf_counter() - t0
    mismatches = sum(v != (_oracle(a, b, True), _oracle(a, b, False)) for v, (a, b) in zip(values, pairs))
    verdict(2, "Chamfer equals the brute-force oracle", mismatches == 0 and dt < 5.0,
            f"{mismatches} mismatches, {dt:.2f} s")


def test_c3_rim_hand_trace(verdict):
    food = BoundingBox("food", 100, 50, 200, 100)
    ctx = RimContext(food, BoundingBox("bowl", 50, 20, 250, 200))

    def piece(d):
        x = np.arange(110, 191)
        return np.stack([x, food.y_max + d - 0.01 * (x - 150) ** 2], axis=1)

    got = {}
    for ds in ((10, 12, 40), (10, 40), (10, 12)):
        kept = filter_rim([piece(d) for d in ds], ctx, HyperParams())
        got[ds] = sorted(round(d) for d in rim_distances(kept, ctx))
    want = {(10, 12, 40): [10, 12], (10, 40): [10], (10, 12): [10, 12]}
    verdict(3, "filter_rim hand traces", got == want, f"survivors {got}")


def test_c4_synthetic_end_to_end(verdict):
    specs = random_scene_specs(50, seed=BENCH_SEED)
    recall, precision = [], []
    t0 = time.perf_counter()
    for spec in specs:
        scene = generate_scene(spec)
        preds = fit_image(scene.image, scene.detections).ellipses
        a = eval_method_a(scene.truth, preds)
        recall += a + [math.inf] * (len(scene.truth.ellipses) - len(a))
        precision += eval_method_b(scene.truth, preds)
    dt = time.perf_counter() - t0
    rec = float(np.mean(np.array(recall) < 5))
    worst = max(precision, default=0.0)
    ok = rec >= 0.8 and worst < 8 and dt < 60
    verdict(4, "50 synthetic scenes, set A", ok,
            f"{len(recall)} GT rims, recall@5px {rec:.3f}, {len(precision)} predictions, "
            f"worst method-B {worst:.2f} px, {dt:.1f} s")


def test_c5_clutter_rejection(verdict):
    specs = random_scene_specs(30, seed=CLUTTER_SEED, rims=(0, 0))
    empty = 0
    for spec in specs:
        scene = generate_scene(spec)
        empty += not fit_image(scene.image, scene.detections).ellipses
    verdict(5, "clutter-only scenes give no ellipses", empty >= 27, f"{empty}/30 empty")


def _random_contours(rng):
    out = []
    for _ in range(int(rng.integers(0, 8))):
        n = int(rng.integers(5, 120))
        r = rng.uniform(20, 3000)
        t = rng.uniform(0, 2 * np.pi) + np.linspace(0, n / r, n)
        c = np.stack([150 + r * np.cos(t) - r * np.cos(t[0]), 150 + r * np.sin(t) - r * np.sin(t[0])], axis=1)
        out.append(np.round(c))
    return out


def _random_candidates(rng):
    return [CandidateEllipse(Ellipse.from_axes(*rng.uniform(0, 600, 2), *rng.uniform(10, 150, 2),
                                               rng.uniform(0, np.pi)), 100, 0.0)
            for _ in range(int(rng.integers(0, 10)))]


def _subset(out, inp):
    return all(any(o is i for i in inp) for o in out)


def test_c6_filters_monotone_idempotent(verdict):
    rng = np.random.default_rng(6)
    failures = {"straight": 0, "rim": 0, "plate": 0, "food": 0}
    for _ in range(100):
        hp = HyperParams(d_chord=float(rng.uniform(1, 20)), h_gap=float(rng.uniform(1, 30)),
                         a_p=float(rng.uniform(0.01, 0.5)), d_f=float(rng.uniform(50, 600)))
        contours = _random_contours(rng)
        fy = float(rng.uniform(60, 200))
        ctx = RimContext(BoundingBox("food", 80, 40, 260, fy),
                         BoundingBox("plate", 20, 20, 320, fy + float(rng.uniform(5, 150))))
        cands = _random_candidates(rng)
        plates = [BoundingBox("plate", x, y, x + w, y + h)
                  for x, y, w, h in rng.uniform([0, 0, 50, 50], [500, 500, 300, 300], (int(rng.integers(0, 3)), 4))]
        foods = [BoundingBox("food", x, y, x + 40, y + 40) for x, y in rng.uniform(0, 600, (int(rng.integers(0, 3)), 2))]
        checks = {
            "straight": (lambda xs: filter_straight(xs, hp), contours),
            "rim": (lambda xs: filter_rim(xs, ctx, hp), contours),
            "plate": (lambda xs: filter_by_plate_box(xs, plates, hp), cands),
            "food": (lambda xs: filter_by_food_distance(xs, foods, hp), cands),
        }
        for name, (f, xs) in checks.items():
            once = f(xs)
            twice = f(once)
            if not (_subset(once, xs) and len(twice) == len(once) and all(a is b for a, b in zip(once, twice))):
                failures[name] += 1
    verdict(6, "filters are monotone and idempotent", not any(failures.values()), f"failures {failures}")


def _tree_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_c7_determinism(verdict, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"random": {"count": 6, "seed": BENCH_SEED, "prefix": "det"}}))
    codes = [main(["synth", "--spec", str(spec), "--out", str(tmp_path / d)]) for d in ("s1", "s2")]
    synth_same = _tree_bytes(tmp_path / "s1") == _tree_bytes(tmp_path / "s2")
    codes += [main(["fit", str(tmp_path / "s1"), "--out", str(tmp_path / d)]) for d in ("f1", "f2")]
    fit_same = _tree_bytes(tmp_path / "f1") == _tree_bytes(tmp_path / "f2")
    ok = codes == [0, 0, 0, 0] and synth_same and fit_same
    verdict(7, "synth and fit are byte-reproducible", ok, f"synth same {synth_same}, fit same {fit_same}")


def test_c8_config_fidelity(verdict, tmp_path):
    set_a = HyperParams(g_m=0.6, s=8, epsilon=2, l_min=60, d_chord=7.0, h_gap=10, m_score=150, a_p=0.08, d_f=450)
    set_b = dict(g_m=0.7, s=7, epsilon=2, l_min=60, d_chord=7.5, h_gap=10, m_score=125, a_p=0.06, d_f=450)
    path = tmp_path / "b.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in set_b.items()))
    loaded = load_config(path)
    save_config(loaded, tmp_path / "b2.cfg")
    ok = (Config().hyper == set_a and loaded.hyper == HyperParams(**set_b)
          and load_config(tmp_path / "b2.cfg") == loaded)
    verdict(8, "defaults are set A, set B round-trips", ok)


def test_c9_aggregate_fixtures(verdict):
    r1 = aggregate({"img1": [4, 6]})
    r2 = aggregate({"img1": [3], "img2": [3]})
    r3 = aggregate({})
    got = [(r1.mu, r1.sigma, r1.n_images), (r2.mu, r2.sigma, r2.n_images), (r3.n_images,)]
    ok = got[:2] == [(5.0, 1.0, 1), (3.0, 0.0, 2)] and got[2] == (0,) and math.isnan(r3.mu) and math.isnan(r3.sigma)
    verdict(9, "aggregate hand fixtures", ok, f"{got}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
