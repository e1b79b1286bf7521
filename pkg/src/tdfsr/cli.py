"""Command-line front end: make masks, reconstruct images, run sweeps.

Exit codes: 0 success, 1 usage error, 2 data error. ``TDFSR_WORKERS`` caps
the number of worker processes used by ``bench``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from . import imaging, metrics
from .baseline import linear_reconstruct
from .pipeline import FsrConfig, IterationPlan, block_count, run_reconstruction
from .sampling import MaskSpec, generate_quarter_mask
from .texture import TdConfig, texture_plan, write_plan_csv

log = logging.getLogger("tdfsr")

METHODS = ("fsr", "td-fsr", "linear")
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunRecord:
    imageId: str
    method: str
    avgIterations: int
    psnrDb: float
    ssim: float
    wallSeconds: float
    totalIterationsPlanned: int
    totalIterationsSpent: int
    maskSeed: str
    configHash: str

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        out = []
        for v in astuple(self):
            if isinstance(v, float):
                out.append("nan" if math.isnan(v) else "inf" if math.isinf(v) else f"{v:.6f}")
            else:
                out.append(str(v))
        return out


def _csv_line(values) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(values)
    return buf.getvalue()


def config_hash(cfg: FsrConfig, td: TdConfig) -> str:
    return cfg.digest(surround=td.surround, i_min=td.i_min, i_max=td.i_max)


def _safe_ssim(reference, test) -> float:
    try:
        return metrics.ssim(reference, test)
    except ValueError:
        return math.nan


def run_method(image, mask, method: str, iters: int, cfg: FsrConfig, td: TdConfig,
               image_id: str = "", mask_seed: str = "", plan_csv=None):
    """Reconstruct `image` from the pixels kept by `mask`.

    Returns the reconstruction and a RunRecord scored against `image`.
    """
    degraded = imaging.apply_mask(image, mask)
    start = time.perf_counter()
    if method == "linear":
        result = linear_reconstruct(degraded, mask)
        planned = spent = 0
    elif method in ("fsr", "td-fsr"):
        if method == "fsr":
            plan = IterationPlan.uniform(block_count(image.shape, cfg), iters)
        else:
            plan, variances, normalized = texture_plan(degraded, mask, iters, cfg, td)
            if plan_csv is not None:
                write_plan_csv(plan_csv, plan, variances, normalized)
        rec = run_reconstruction(degraded, mask, plan, cfg)
        result, planned, spent = rec.image, plan.total, rec.iterations_spent
    else:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    wall = time.perf_counter() - start
    record = RunRecord(
        imageId=image_id, method=method, avgIterations=iters,
        psnrDb=metrics.psnr(image, result), ssim=_safe_ssim(image, result),
        wallSeconds=wall, totalIterationsPlanned=planned, totalIterationsSpent=spent,
        maskSeed=mask_seed, configHash=config_hash(cfg, td),
    )
    return result, record


def _configs(args) -> tuple[FsrConfig, TdConfig]:
    try:
        cfg = FsrConfig(block=args.block, border=args.border, rho=args.rho,
                        gamma=args.gamma, delta=args.delta)
        td = TdConfig(surround=args.p, i_min=args.imin, i_max=args.imax)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg, td


def _seed_from_comments(comments) -> str:
    for c in comments:
        if c.startswith("seed="):
            return c[len("seed="):]
    return ""


def _load_mask(path) -> tuple[np.ndarray, str]:
    try:
        pixels, comments = imaging.read_pgm(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read mask {path}: {exc}") from exc
    return pixels > 0, _seed_from_comments(comments)


def cmd_mask(args) -> int:
    try:
        spec = MaskSpec(width=args.width, height=args.height, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    mask = generate_quarter_mask(spec)
    try:
        imaging.save_mask(mask, args.out, comments=[f"seed={args.seed}"])
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    return 0


def cmd_reconstruct(args) -> int:
    cfg, td = _configs(args)
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    try:
        image = imaging.load_image(args.input)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {args.input}: {exc}") from exc
    mask, seed = _load_mask(args.mask)
    if mask.shape != image.shape:
        raise DataError(f"mask is {mask.shape[1]}x{mask.shape[0]}, image is "
                        f"{image.shape[1]}x{image.shape[0]}")
    result, record = run_method(image, mask, args.method, args.iters, cfg, td,
                                image_id=Path(args.input).stem, mask_seed=seed,
                                plan_csv=args.plan_csv)
    try:
        imaging.save_image(result, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    sys.stdout.write(_csv_line(record.row()))
    return 0


def _bench_image(job) -> list[RunRecord] | str:
    path, mask_path, seed, methods, iters_list, cfg, td = job
    try:
        image = imaging.load_image(path)
    except (OSError, ValueError) as exc:
        return f"skipping {path}: {exc}"
    if mask_path is not None:
        mask, mask_seed = _load_mask(mask_path)
        if mask.shape != image.shape:
            return f"skipping {path}: mask size does not match image"
    else:
        try:
            mask = generate_quarter_mask(MaskSpec(image.shape[1], image.shape[0], seed))
        except ValueError as exc:
            return f"skipping {path}: {exc}"
        mask_seed = str(seed)
    image_id = Path(path).stem
    records = []
    linear = None
    for method in methods:
        for iters in iters_list:
            if method == "linear":
                # linear does not depend on the iteration count
                if linear is None:
                    _, linear = run_method(image, mask, method, iters, cfg, td, image_id, mask_seed)
                rec = RunRecord(**{**linear.__dict__, "avgIterations": iters})
            else:
                _, rec = run_method(image, mask, method, iters, cfg, td, image_id, mask_seed)
            records.append(rec)
    return records


def _aggregate(records: list[RunRecord], methods, iters_list) -> list[RunRecord]:
    out = []
    for method in methods:
        for iters in iters_list:
            sel = [r for r in records if r.method == method and r.avgIterations == iters]
            if not sel:
                continue
            out.append(RunRecord(
                imageId="MEAN", method=method, avgIterations=iters,
                psnrDb=float(np.mean([r.psnrDb for r in sel])),
                ssim=float(np.mean([r.ssim for r in sel])),
                wallSeconds=float(np.mean([r.wallSeconds for r in sel])),
                totalIterationsPlanned=int(round(np.mean([r.totalIterationsPlanned for r in sel]))),
                totalIterationsSpent=int(round(np.mean([r.totalIterationsSpent for r in sel]))),
                maskSeed=sel[0].maskSeed, configHash=sel[0].configHash,
            ))
    return out


def _worker_count() -> int:
    env = os.environ.get("TDFSR_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer TDFSR_WORKERS=%r", env)
    return 1


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"not a comma-separated integer list: {text!r}") from exc
    if not values or min(values) < 1:
        raise UsageError("iteration counts must be positive integers")
    return values


def cmd_bench(args) -> int:
    cfg, td = _configs(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    iters_list = _int_list(args.iters_list)
    directory = Path(args.dir)
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".pgm")
    jobs = [(str(p), args.mask, args.seed, methods, iters_list, cfg, td) for p in paths]

    workers = min(_worker_count(), max(1, len(jobs)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_image, jobs))
    else:
        results = [_bench_image(j) for j in jobs]

    records: list[RunRecord] = []
    for res in results:
        if isinstance(res, str):
            log.warning(res)
        else:
            records.extend(res)
    if not records:
        log.error("no images processed in %s", directory)
        return EXIT_DATA

    rows = records + _aggregate(records, methods, iters_list)
    try:
        with open(args.report, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RunRecord.header())
            for r in rows:
                writer.writerow(r.row())
    except OSError as exc:
        raise DataError(f"cannot write {args.report}: {exc}") from exc
    return 0


def _add_model_options(p: argparse.ArgumentParser) -> None:
    d, t = FsrConfig(), TdConfig()
    p.add_argument("--rho", type=float, default=d.rho, help="weight decay factor")
    p.add_argument("--gamma", type=float, default=d.gamma,
                   help="orthogonality deficiency compensation")
    p.add_argument("--delta", type=float, default=d.delta,
                   help="weight of already reconstructed pixels")
    p.add_argument("--block", type=int, default=d.block, help="block size in pixels")
    p.add_argument("--border", type=int, default=d.border, help="border width in pixels")
    p.add_argument("--imin", type=int, default=t.i_min, help="TD-FSR minimum iterations")
    p.add_argument("--imax", type=int, default=t.i_max, help="TD-FSR maximum iterations")
    p.add_argument("--p", type=int, default=t.surround,
                   help="TD-FSR surround for the block variance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdfsr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mask", help="write a seeded quarter-sampling mask")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("reconstruct", help="degrade an image with a mask and reconstruct it")
    p.add_argument("--in", dest="input", required=True, help="original 8-bit PGM")
    p.add_argument("--mask", required=True, help="mask PGM (nonzero = acquired)")
    p.add_argument("--method", required=True, help="fsr, td-fsr or linear")
    p.add_argument("--iters", type=int, default=20, help="average iterations per block")
    p.add_argument("--out", required=True)
    p.add_argument("--plan-csv", help="td-fsr: also write the per-block plan here")
    _add_model_options(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("bench", help="sweep methods and iteration counts over a directory")
    p.add_argument("--dir", required=True, help="directory of 8-bit PGM images")
    p.add_argument("--mask", help="mask PGM shared by all images")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for per-image quarter masks when --mask is not given")
    p.add_argument("--methods", default="fsr,td-fsr")
    p.add_argument("--iters-list", default="20,40,60,80,100")
    p.add_argument("--report", required=True, help="output CSV")
    _add_model_options(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tdfsr: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"tdfsr: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
