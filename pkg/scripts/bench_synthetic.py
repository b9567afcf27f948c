"""Recall/precision of the pipeline on random synthetic corpora.

    python3 scripts/bench_synthetic.py --seeds 2024 7 11 --depths 0.25 0.5 --jobs 4

Prints one row per (seed, depth): GT count, recall at 5 px (method A),
worst and mean method-B value, and wall time.
"""

import argparse
import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from rimfit.config import Config, HyperParams, load_config
from rimfit.evaluation import eval_method_a, eval_method_b
from rimfit.pipeline import fit_image
from rimfit.synthetic import generate_scene, random_scene_specs


def score_scene(job):
    spec, cfg = job
    scene = generate_scene(spec)
    preds = fit_image(scene.image, scene.detections, cfg).ellipses
    a = eval_method_a(scene.truth, preds)
    a += [math.inf] * (len(scene.truth.ellipses) - len(a))
    return spec.image_id, a, eval_method_b(scene.truth, preds)


def run(seed, depth, n, cfg, jobs, verbose=False):
    specs = random_scene_specs(n, seed=seed, bowl_depth=depth)
    t0 = time.perf_counter()
    work = [(s, cfg) for s in specs]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(score_scene, work))
    else:
        rows = [score_scene(w) for w in work]
    dt = time.perf_counter() - t0
    a = np.array([v for _, va, _ in rows for v in va])
    b = np.array([v for _, _, vb in rows for v in vb])
    if verbose:
        for iid, va, vb in rows:
            if any(v >= 5 for v in va) or any(v >= 8 for v in vb):
                print(f"    {iid}: A {np.round(va, 2).tolist()} B {np.round(vb, 2).tolist()}")
    return len(a), float(np.mean(a < 5)), float(b.max()) if len(b) else float("nan"), \
        float(b.mean()) if len(b) else float("nan"), dt


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[2024])
    p.add_argument("--depths", type=float, nargs="+", default=[0.25])
    p.add_argument("-n", type=int, default=50, help="scenes per corpus")
    p.add_argument("--config", help="config file (default: set A)")
    p.add_argument("--set-b", action="store_true", help="use parameter set B")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true", help="list scenes that miss a threshold")
    args = p.parse_args()

    cfg = load_config(args.config)
    if args.set_b:
        cfg = Config(hyper=HyperParams.set_b())
    print(f"{'seed':>6} {'depth':>6} {'gt':>4} {'rec@5':>6} {'B max':>7} {'B mean':>7} {'time':>6}")
    for seed in args.seeds:
        for depth in args.depths:
            n_gt, rec, bmax, bmean, dt = run(seed, depth, args.n, cfg, args.jobs, args.verbose)
            print(f"{seed:>6} {depth:>6.2f} {n_gt:>4} {rec:>6.3f} {bmax:>7.2f} {bmean:>7.2f} {dt:>5.1f}s")


if __name__ == "__main__":
    main()
