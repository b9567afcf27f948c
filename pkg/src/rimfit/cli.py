"""Command line entry point: ``rimfit fit | eval | synth``.

Exit codes: 0 success, 1 I/O or configuration error, 2 data error in
``--strict`` mode.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from PIL import Image, ImageDraw

from rimfit import detections as det
from rimfit import evaluation as ev
from rimfit.config import BadConfig, load_config
from rimfit.geometry import sample_ellipse
from rimfit.pipeline import fit_image
from rimfit.synthetic import SceneSpec, SpecInfeasible, generate_scene, random_scene_specs

log = logging.getLogger("rimfit")

EXIT_OK, EXIT_IO, EXIT_STRICT = 0, 1, 2
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
PRED_COLOUR = (255, 0, 0)
GT_COLOUR = (0, 255, 0)


class MissingDetections(FileNotFoundError):
    pass


def image_id_of(path):
    return os.path.splitext(os.path.basename(path))[0]


def expand_images(patterns):
    paths = []
    for pat in patterns:
        if os.path.isdir(pat):
            hits = [os.path.join(pat, f) for f in os.listdir(pat) if f.lower().endswith(IMAGE_SUFFIXES)]
        else:
            hits = glob.glob(pat) or [pat]
        paths.extend(hits)
    return sorted(set(paths))


def read_image(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def draw_overlay(image, preds, truths=(), width=2):
    im = Image.fromarray(image).convert("RGB")
    draw = ImageDraw.Draw(im)
    for ellipses, colour in ((truths, GT_COLOUR), (preds, PRED_COLOUR)):
        for e in ellipses:
            pts = [tuple(p) for p in sample_ellipse(e, 360).tolist()]
            draw.line(pts + pts[:1], fill=colour, width=width)
    return im


def _fit_one(job):
    """Worker: returns (image_id, status, message)."""
    path, det_path, cfg, out_dir, overlay, truth = job
    iid = image_id_of(path)
    try:
        image = read_image(path)
    except OSError as exc:
        return iid, "io", f"cannot read image {path}: {exc}"
    scene = None
    if det_path is not None:
        if not os.path.exists(det_path):
            return iid, "data", f"no detections for {path} (expected {det_path})"
        try:
            scene = det.load_detections(det_path, cfg.detector_floor)
        except (det.ParseError, det.SchemaViolation) as exc:
            return iid, "data", str(exc)
    result = fit_image(image, scene, cfg)
    ev.save_predictions(iid, result.ellipses, os.path.join(out_dir, f"{iid}.json"))
    if overlay:
        draw_overlay(image, result.ellipses, truth or ()).save(os.path.join(out_dir, f"{iid}_overlay.png"))
    return iid, "ok", f"{len(result.ellipses)} ellipse(s)"


def cmd_fit(args):
    try:
        cfg = load_config(args.config)
    except BadConfig as exc:
        log.error("%s", exc)
        return EXIT_IO
    images = expand_images(args.images)
    if not images:
        log.error("no images match %s", " ".join(args.images))
        return EXIT_IO
    truths = {}
    if args.gt:
        try:
            truths = ev.load_ground_truth(args.gt)
        except (OSError, ev.ParseError) as exc:
            log.error("%s", exc)
            return EXIT_IO
    os.makedirs(args.out, exist_ok=True)

    jobs = []
    for path in images:
        iid = image_id_of(path)
        det_path = None if args.no_detections else os.path.join(args.detections or os.path.dirname(path),
                                                                f"{iid}.json")
        gt = truths.get(iid)
        jobs.append((path, det_path, cfg, args.out, args.overlay, gt.ellipses if gt else None))

    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_fit_one, jobs))
    else:
        results = [_fit_one(j) for j in jobs]

    status = EXIT_OK
    for iid, kind, msg in results:
        if kind == "ok":
            log.info("%s: %s", iid, msg)
        elif kind == "io":
            log.error("%s", msg)
            status = max(status, EXIT_STRICT if args.strict else EXIT_IO)
        else:
            log.warning("skipping %s: %s", iid, msg)
            if args.strict:
                status = EXIT_STRICT
    return status


def _read_predictions(preds_dir):
    preds = {}
    for name in sorted(os.listdir(preds_dir)):
        if not name.endswith(".json"):
            continue
        iid, ellipses = ev.load_predictions(os.path.join(preds_dir, name))
        preds[iid] = ellipses
    return preds


def cmd_eval(args):
    cfg_normalized = True
    n_samples = 360
    try:
        cfg = load_config(args.config)
        cfg_normalized, n_samples = cfg.chamfer_normalized, cfg.n_samples
        truths = ev.load_ground_truth(args.gt)
        preds = _read_predictions(args.preds)
    except (OSError, BadConfig, ev.ParseError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    methods = ("A", "B") if args.method == "both" else (args.method,)
    reports = [ev.evaluate(truths, preds, m, n_samples, cfg_normalized) for m in methods]
    for r in reports:
        print(r.summary())
    if args.report:
        with open(args.report, "w") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=1)
            fh.write("\n")
    return EXIT_OK


def _load_specs(path):
    with open(path) as fh:
        doc = json.load(fh)
    specs = [SceneSpec.from_dict(d) for d in doc.get("scenes", [])]
    rnd = doc.get("random")
    if rnd:
        kw = dict(rnd)
        for key in ("rims", "clutter", "semi_major", "axis_ratio"):
            if key in kw:
                kw[key] = tuple(kw[key])
        specs.extend(random_scene_specs(**kw))
    return specs


def cmd_synth(args):
    try:
        specs = _load_specs(args.spec)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        log.error("bad scene spec %s: %s", args.spec, exc)
        return EXIT_IO
    os.makedirs(args.out, exist_ok=True)
    truths = []
    for i, spec in enumerate(specs):
        try:
            scene = generate_scene(spec)
        except SpecInfeasible as exc:
            log.error("scene %d: %s", i, exc)
            return EXIT_IO
        Image.fromarray(scene.image).save(os.path.join(args.out, f"{spec.image_id}.png"))
        det.save_detections(scene.detections, os.path.join(args.out, f"{spec.image_id}.json"))
        truths.append(scene.truth)
    ev.save_ground_truth(truths, os.path.join(args.out, "ground_truth.json"))
    log.info("wrote %d scenes to %s", len(specs), args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rimfit", description="Plate and bowl rim ellipses from images and boxes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit rim ellipses to images")
    f.add_argument("images", nargs="+", help="image files, directories or glob patterns")
    f.add_argument("--detections", help="directory of <image_id>.json detection files (default: next to each image)")
    f.add_argument("--config", help=f"config file (default: ${'{'}RIMFIT_CONFIG{'}'} or built-in defaults)")
    f.add_argument("--out", required=True, help="output directory")
    f.add_argument("--overlay", action="store_true", help="also write <image_id>_overlay.png")
    f.add_argument("--gt", help="ground-truth file, drawn in green on overlays")
    f.add_argument("--no-detections", action="store_true", help="geometric stages only")
    f.add_argument("--strict", action="store_true", help="exit 2 on missing or malformed inputs")
    f.add_argument("--jobs", type=int, default=1)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="score predictions against ground truth")
    e.add_argument("--preds", required=True, help="directory of prediction files")
    e.add_argument("--gt", required=True)
    e.add_argument("--method", choices=("A", "B", "both"), default="both")
    e.add_argument("--config")
    e.add_argument("--report", help="write the report(s) as JSON here")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="render a synthetic corpus")
    s.add_argument("--spec", required=True, help='JSON with "scenes" and/or "random" sections')
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
