"""Command line: ``pansharp simulate|fuse|eval|weights-dump``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from pansharp import __version__
from pansharp.estimators import METHODS
from pansharp.metrics import d_lambda, d_s, full_reference_report, qnr
from pansharp.raster import difference_visualization, read_image, write_image
from pansharp.sampling import BlurSpec, SamplingSpec, bicubic_upsample, blur_downsample
from pansharp.simulate import (
    SimulationSpec,
    coregister_lowres,
    default_shifts,
    make_dataset,
    procedural_scene,
    unwarp_bands,
    warp_pan_per_band,
)
from pansharp.weights import NonlocalConfig, compute_weights

logger = logging.getLogger("pansharp")

EVAL_FIELDS = ["method", "rmse", "ergas", "sam", "ssim", "q2n"]
NOREF_FIELDS = ["d_lambda", "d_s", "qnr"]


class UsageError(Exception):
    """Invalid flag combination; reported with exit status 2."""


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def parse_shifts(text, n_bands):
    if text is None or text == "none":
        return tuple((0.0, 0.0) for _ in range(n_bands))
    if text == "auto":
        return default_shifts(n_bands)
    shifts = []
    for item in text.split(","):
        dx, dy = item.split(":")
        shifts.append((float(dx), float(dy)))
    if len(shifts) != n_bands:
        raise UsageError(f"--shifts lists {len(shifts)} shifts for {n_bands} bands")
    return tuple(shifts)


def resolve_threads(value):
    if value is not None:
        return max(1, value)
    env = os.environ.get("PANSHARP_THREADS")
    return max(1, int(env)) if env else 1


def write_manifest(path, manifest):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_simulate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.ref:
        ref = read_image(args.ref)
        source = {"ref": str(args.ref), "ref_sha256": sha256(args.ref)}
    else:
        ref = procedural_scene(args.procedural, args.bands, seed=args.seed)
        source = {"procedural_size": args.procedural, "procedural_bands": args.bands}
    n_bands = ref.shape[0]
    alphas = tuple(parse_floats(args.alphas)) if args.alphas else tuple([1.0 / n_bands] * n_bands)
    if len(alphas) != n_bands:
        raise UsageError(f"--alphas has {len(alphas)} values for {n_bands} bands")
    spec = SimulationSpec(
        sigma=args.sigma,
        factor=args.factor,
        shifts=parse_shifts(args.shifts, n_bands),
        alphas=alphas,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    start = time.perf_counter()
    pan, low, truth = make_dataset(ref, spec)
    paths = {"pan": out / "pan.mbf", "lowres": out / "lowres.mbf", "truth": out / "truth.mbf"}
    write_image(pan, paths["pan"])
    write_image(low, paths["lowres"])
    write_image(truth, paths["truth"])
    manifest = {
        "command": "simulate",
        "version": __version__,
        "config": spec.to_dict(),
        "inputs": source,
        "outputs": {k: str(v) for k, v in paths.items()},
        "output_sha256": {k: sha256(v) for k, v in paths.items()},
        "timings": {"total_s": time.perf_counter() - start},
    }
    write_manifest(out / "manifest.json", manifest)
    print(out / "manifest.json")
    return 0


def build_estimator(args):
    cls = METHODS[args.method]
    params = {}
    candidates = {
        "mu": args.mu,
        "delta": args.delta,
        "h": args.h,
        "search_radius": args.search_radius,
        "patch_radius": args.patch_radius,
        "sigma": args.sigma,
        "factor": args.factor,
        "tau": args.tau,
        "max_iter": args.max_iter,
        "tol": args.tol,
        "lam": args.lam,
        "hpf_box": args.hpf_box,
        "lmvm_window": args.lmvm_window,
        "n_jobs": args.threads,
    }
    accepted = cls().get_params()
    for name, value in candidates.items():
        if name in accepted and value is not None:
            params[name] = value
    if args.method == "nlv" and args.alphas:
        params["alphas"] = parse_floats(args.alphas)
    return cls(**params)


def cmd_fuse(args):
    args.threads = resolve_threads(args.threads)
    if args.method == "nlv" and args.misregistered:
        raise UsageError("nlv requires co-registered spectral components; drop --misregistered")
    manifest_in = load_manifest(args.manifest) if args.manifest else None
    pan_img = read_image(args.pan)
    pan = pan_img[0] if pan_img.shape[0] == 1 else pan_img
    low = read_image(args.lowres)
    if args.factor is None and manifest_in is not None:
        args.factor = manifest_in["config"]["factor"]
    spec = None
    if args.misregistered or args.coregister:
        if manifest_in is None:
            raise UsageError("--misregistered/--coregister need --manifest with the band shifts")
        cfg = manifest_in["config"]
        spec = SimulationSpec(sigma=cfg["sigma"], factor=cfg["factor"], shifts=cfg["shifts"])
    if args.coregister:
        low = coregister_lowres(low, spec)
    est = build_estimator(args)
    start = time.perf_counter()
    if args.misregistered:
        est.fit(warp_pan_per_band(pan, spec, low.shape[0]))
        fused = unwarp_bands(est.transform(low), spec)
    else:
        est.fit(pan)
        fused = est.transform(low)
    elapsed = time.perf_counter() - start
    write_image(fused, args.out)
    reports = [r.summary() for r in getattr(est, "reports_", [])]
    manifest = {
        "command": "fuse",
        "version": __version__,
        "method": args.method,
        "config": est.get_params(),
        "misregistered": bool(args.misregistered),
        "coregister": bool(args.coregister),
        "inputs": {"pan": str(args.pan), "lowres": str(args.lowres)},
        "input_sha256": {"pan": sha256(args.pan), "lowres": sha256(args.lowres)},
        "outputs": {"fused": str(args.out)},
        "timings": {"fuse_s": elapsed},
        "reports": reports,
    }
    # timings vary run to run; everything else is reproducible
    write_manifest(str(args.out) + ".json", manifest)
    for k, r in enumerate(reports):
        logger.info("band %d: %d iterations, final change %.3g", k, r["iterations"], r["final_relative_change"])
    return 0


def noref_scores(fused, pan, low, blur, sampling):
    s = sampling.factor
    up = bicubic_upsample(low, s)
    pans = pan if pan.ndim == 3 else pan[np.newaxis]
    pan_low = bicubic_upsample(blur_downsample(pans, blur, sampling), s)
    dl = d_lambda(fused, up)
    ds = d_s(fused, up, pans, pan_low)
    return [dl, ds, qnr(dl, ds)]


def cmd_eval(args):
    need_truth = args.mode in ("full", "all")
    need_noref = args.mode in ("noref", "all")
    if need_truth and not args.truth:
        raise UsageError("full-reference evaluation needs --truth")
    if need_noref and not (args.pan and args.lowres):
        raise UsageError("no-reference evaluation needs --pan and --lowres")
    truth = read_image(args.truth) if args.truth else None
    pan = low = None
    if need_noref:
        pan_img = read_image(args.pan)
        pan = pan_img[0] if pan_img.shape[0] == 1 else pan_img
        low = read_image(args.lowres)
    blur = BlurSpec(args.sigma)
    sampling = SamplingSpec(args.factor)
    labels = args.label or [Path(p).stem for p in args.fused]
    if len(labels) != len(args.fused):
        raise UsageError("--label must be given once per fused input")
    fields = (EVAL_FIELDS if need_truth else ["method"]) + (NOREF_FIELDS if need_noref else [])
    rows = []
    for label, path in zip(labels, args.fused):
        fused = read_image(path)
        row = [label]
        if need_truth:
            row += full_reference_report(truth, fused, args.factor).row()
        if need_noref:
            row += noref_scores(fused, pan, low, blur, sampling)
        rows.append(row)
        if args.diff_ppm and truth is not None:
            diff = difference_visualization(fused[:3], truth[:3])
            target = args.diff_ppm if len(args.fused) == 1 else f"{Path(args.diff_ppm).with_suffix('')}_{label}.ppm"
            write_image(diff if diff.shape[0] == 3 else diff[:1], target, "PPM" if diff.shape[0] == 3 else "PGM")
    if args.format == "json":
        text = json.dumps([dict(zip(fields, r)) for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fields)
        for r in rows:
            writer.writerow([r[0]] + [f"{v:.6f}" for v in r[1:]])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_weights_dump(args):
    img = read_image(args.pan)
    if not 0 <= args.band < img.shape[0]:
        raise UsageError(f"--band {args.band} out of range for {img.shape[0]} bands")
    pan = img[args.band]
    if not (0 <= args.row < pan.shape[0] and 0 <= args.col < pan.shape[1]):
        raise UsageError(f"pixel ({args.row}, {args.col}) lies outside {pan.shape}")
    field = compute_weights(pan, NonlocalConfig(args.search_radius, args.patch_radius, args.h))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["offset_x", "offset_y", "weight"])
    for ox, oy, wt in field.pixel_window(args.row, args.col):
        writer.writerow([ox, oy, repr(wt)])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="pansharp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="build a reduced-resolution test problem")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ref", help="reference multispectral image (MBF/PGM/PPM)")
    src.add_argument("--procedural", type=int, metavar="SIZE", help="generate a SIZE x SIZE synthetic scene")
    p.add_argument("--bands", type=int, default=4, help="bands of the synthetic scene")
    p.add_argument("--sigma", type=float, default=1.3)
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--alphas", help="comma-separated mixing weights (default: equal)")
    p.add_argument("--shifts", default="none", help="'auto', 'none' or dx:dy,dx:dy,...")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fuse", help="fuse a panchromatic with low-resolution bands")
    p.add_argument("--method", choices=sorted(METHODS), default="nlvd")
    p.add_argument("--pan", required=True)
    p.add_argument("--lowres", required=True)
    p.add_argument("--out", default="fused.mbf")
    p.add_argument("--manifest", help="simulation manifest holding the band shifts")
    reg = p.add_mutually_exclusive_group()
    reg.add_argument("--misregistered", action="store_true", help="warp the pan into each band, fuse, warp back")
    reg.add_argument("--coregister", action="store_true", help="resample the bands to a common geometry first")
    p.add_argument("--mu", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--search-radius", type=int)
    p.add_argument("--patch-radius", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--factor", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--lam", type=float, help="mixing-constraint weight (nlv)")
    p.add_argument("--alphas", help="mixing weights (nlv)")
    p.add_argument("--hpf-box", type=int)
    p.add_argument("--lmvm-window", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default $PANSHARP_THREADS or 1)")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="score fused images")
    p.add_argument("--fused", nargs="+", required=True)
    p.add_argument("--label", nargs="+")
    p.add_argument("--mode", choices=["full", "noref", "all"], default="full")
    p.add_argument("--truth")
    p.add_argument("--pan")
    p.add_argument("--lowres")
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--sigma", type=float, default=1.3)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--diff-ppm", help="write a [-20, 20] difference visualization against the truth")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("weights-dump", help="print one pixel's nonlocal weights as CSV")
    p.add_argument("--pan", required=True)
    p.add_argument("--band", type=int, default=0)
    p.add_argument("--row", type=int, required=True)
    p.add_argument("--col", type=int, required=True)
    p.add_argument("--h", type=float, default=1.25)
    p.add_argument("--search-radius", type=int, default=3)
    p.add_argument("--patch-radius", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights_dump)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
