"""Command-line interface: sense, recover, benchmark, diagnose.

All commands are deterministic functions of their inputs, flags and seed;
wall-clock timing is only recorded when --timing is passed so that reruns
produce byte-identical artifacts by default.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, imageio, metrics, sensing, solver
from .errors import DataFormatError, NumericalError
from .regularizer import WeightDesign, sigma_star_default

_Q_TO_KIND = {"1": "soft", "2": "wiener", "inf": "hard"}
_DESIGN_NAMES = {"q1": "soft", "q2": "wiener", "qinf": "hard",
                 "oracle": "oracle"}

# Keys accepted in a config file (key=value lines, # comments). Flags
# override file values which override defaults.
_CONFIG_KEYS = {
    "seed": int, "q": str, "sigma_star": str,
    "mu": float, "patch": int, "group": int, "stride": int, "window": int,
    "iters": int, "inner": int, "gd_iters": int, "eta": float,
    "gd_tol": float, "warm_inner": bool, "init": str,
}


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {s!r}")


def _read_config_file(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        typ = _CONFIG_KEYS[key]
        values[key] = _parse_bool(raw) if typ is bool else typ(raw)
    return values


def _pick(flag, file_cfg: dict, key: str, default):
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return default


def _resolve_design(args, file_cfg) -> WeightDesign:
    q = _pick(args.q, file_cfg, "q", "inf")
    if q not in _Q_TO_KIND:
        raise UsageError(f"--q must be one of 1, 2, inf (got {q!r})")
    raw = _pick(args.sigma_star, file_cfg, "sigma_star", "auto")
    if raw == "auto":
        sigma = None
    else:
        try:
            sigma = float(raw)
        except ValueError:
            raise UsageError(f"--sigma-star must be 'auto' or a number "
                             f"(got {raw!r})") from None
        if sigma < 0:
            raise UsageError("--sigma-star must be >= 0")
    return WeightDesign(_Q_TO_KIND[q], sigma_star=sigma)


def _resolve_init(args, file_cfg):
    choice = _pick(getattr(args, "init", None), file_cfg, "init", "backproj")
    if choice == "backproj":
        return None, "backproj"
    if choice.startswith("file:"):
        path = choice[5:]
        return imageio.read_image(path), choice
    raise UsageError(f"--init must be 'backproj' or 'file:PATH' "
                     f"(got {choice!r})")


def _build_config(args, file_cfg: dict) -> tuple[solver.RecoveryConfig, str]:
    init_image, init_label = _resolve_init(args, file_cfg)
    try:
        cfg = solver.RecoveryConfig(
            mu=_pick(args.mu, file_cfg, "mu", 0.0025),
            patch=_pick(args.patch, file_cfg, "patch", 8),
            group_size=_pick(args.group, file_cfg, "group", 60),
            stride=_pick(args.stride, file_cfg, "stride", 4),
            window=_pick(args.window, file_cfg, "window", 41),
            outer_loops=_pick(args.iters, file_cfg, "iters", None),
            inner_loops=_pick(args.inner, file_cfg, "inner", 1),
            gd_iters=_pick(args.gd_iters, file_cfg, "gd_iters", 200),
            gd_eta=_pick(args.eta, file_cfg, "eta", None),
            gd_tol=_pick(getattr(args, "gd_tol", None), file_cfg, "gd_tol", 1e-6),
            gd_warm_inner=_pick(getattr(args, "warm_inner", None), file_cfg,
                                "warm_inner", True),
            design=_resolve_design(args, file_cfg),
            seed=_pick(args.seed, file_cfg, "seed", 0),
            init_image=init_image,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg, init_label


def _config_snapshot(cfg: solver.RecoveryConfig, init_label: str,
                     design: WeightDesign, sigma_star) -> dict:
    return {
        "mu": cfg.mu, "patch": cfg.patch, "group": cfg.group_size,
        "stride": cfg.stride, "window": cfg.window,
        "iters": solver.resolve_outer_loops(cfg), "inner": cfg.inner_loops,
        "gd_iters": cfg.gd_iters, "eta": cfg.gd_eta, "gd_tol": cfg.gd_tol,
        "warm_inner": cfg.gd_warm_inner, "design": design.kind,
        "sigma_star": sigma_star, "seed": cfg.seed, "init": init_label,
    }


def _write_manifest(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def load_manifest(path) -> dict:
    with open(path) as f:
        return json.load(f)


def _manifest(command: str, inputs: dict, outputs: dict, seed: int,
              config: dict, wall_ms) -> dict:
    return {
        "tool": "hodw",
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "config": config,
        "wall_ms_total": wall_ms,
    }


def _trace_csv(path, trace, timing: bool, diagnose: bool = False) -> None:
    lines = []
    if diagnose:
        lines.append("iteration,psnr,lhs,rhs,res_mean,res_std,sigma_t")
        for row in trace:
            lines.append(",".join(_fmt(v) for v in (
                row.iteration, row.psnr, row.lhs, row.rhs,
                row.res_mean, row.res_std, row.sigma_t)))
    else:
        lines.append("iteration,data_fidelity,psnr,sigma_t,wall_ms")
        for row in trace:
            wall = row.wall_ms if timing else None
            lines.append(",".join(_fmt(v) for v in (
                row.iteration, row.data_fidelity, row.psnr, row.sigma_t,
                wall)))
    Path(path).write_text("\n".join(lines) + "\n")


def _effective_sigma(design: WeightDesign, subrate: float):
    if design.kind == "oracle":
        return None
    if design.sigma_star is not None:
        return design.sigma_star
    return sigma_star_default(design.kind, subrate)


def cmd_sense(args) -> int:
    t0 = time.perf_counter()
    img = imageio.read_image(args.image)
    h, w = img.shape[:2]
    try:
        op = sensing.build_operator(h, w, args.subrate, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    meas = sensing.sense(op, img)
    sensing.write_measurements(args.out, op, meas)
    wall = (time.perf_counter() - t0) * 1e3 if args.timing else None
    _write_manifest(str(args.out) + ".json", _manifest(
        "sense", {"image": str(args.image)}, {"measurements": str(args.out)},
        args.seed, {"subrate": args.subrate, "h": h, "w": w, "m": op.m,
                    "n_pad": op.n_pad}, wall))
    return 0


def _load_truth(path, op):
    truth = imageio.read_image(path)
    if truth.shape != (op.h, op.w, 3):
        raise DataFormatError(
            f"{path}: ground truth shape {truth.shape} does not match "
            f"measurements ({op.h}, {op.w}, 3)")
    return truth


def cmd_recover(args) -> int:
    t0 = time.perf_counter()
    file_cfg = _read_config_file(args.config) if args.config else {}
    op, meas = sensing.read_measurements(args.meas)
    cfg, init_label = _build_config(args, file_cfg)
    if args.oracle and args.truth is None:
        raise UsageError("--oracle requires --truth")
    truth = _load_truth(args.truth, op) if args.truth else None
    if args.oracle:
        out, trace = solver.recover_oracle(meas, op, cfg, truth)
    else:
        out, trace = solver.recover(meas, op, cfg, ground_truth=truth)
    imageio.write_image(args.out, out)
    if args.trace:
        _trace_csv(args.trace, trace, timing=args.timing)
    wall = (time.perf_counter() - t0) * 1e3 if args.timing else None
    design = cfg.design if not args.oracle else WeightDesign("oracle")
    _write_manifest(str(args.out) + ".json", _manifest(
        "recover",
        {"measurements": str(args.meas),
         "truth": str(args.truth) if args.truth else None},
        {"image": str(args.out),
         "trace": str(args.trace) if args.trace else None},
        cfg.seed, _config_snapshot(cfg, init_label, design,
                                   _effective_sigma(design, op.subrate)),
        wall))
    if truth is not None:
        print(f"psnr_db={metrics.psnr(out, truth):.4f}")
    return 0


def cmd_diagnose(args) -> int:
    file_cfg = _read_config_file(args.config) if args.config else {}
    op, meas = sensing.read_measurements(args.meas)
    cfg, _ = _build_config(args, file_cfg)
    truth = _load_truth(args.truth, op)
    if args.oracle:
        _, trace = solver.recover_oracle(meas, op, cfg, truth,
                                         diagnostics=True)
    else:
        _, trace = solver.recover(meas, op, cfg, ground_truth=truth,
                                  diagnostics=True)
    _trace_csv(args.out, trace, timing=False, diagnose=True)
    return 0


def _benchmark_one(image_path: str, crop: int, subrate: float, design: str,
                   seed: int, overrides: dict) -> tuple[float, float, float]:
    img = imageio.read_image(image_path)
    img = _center_crop(img, crop)
    h, w = img.shape[:2]
    op = sensing.build_operator(h, w, subrate, seed)
    meas = sensing.sense(op, img)
    kind = _DESIGN_NAMES[design]
    cfg = solver.RecoveryConfig(design=WeightDesign(kind), seed=seed,
                                **overrides)
    t0 = time.perf_counter()
    if kind == "oracle":
        out, _ = solver.recover_oracle(meas, op, cfg, img)
        sigma = None
    else:
        out, _ = solver.recover(meas, op, cfg)
        sigma = _effective_sigma(cfg.design, subrate)
    seconds = time.perf_counter() - t0
    return metrics.psnr(out, img), sigma, seconds


def _center_crop(img: np.ndarray, size: int) -> np.ndarray:
    if size <= 0:
        return img
    h, w = img.shape[:2]
    if h < size or w < size:
        raise UsageError(f"image {h}x{w} smaller than crop {size}")
    r = (h - size) // 2
    c = (w - size) // 2
    return np.ascontiguousarray(img[r:r + size, c:c + size, :])


def cmd_benchmark(args) -> int:
    images = sorted(p for p in Path(args.image_dir).iterdir()
                    if p.suffix.lower() in (".png", ".ppm", ".pnm"))
    if not images:
        raise UsageError(f"no PNG/PPM images in {args.image_dir}")
    try:
        subrates = [float(s) for s in args.subrates.split(",") if s]
        designs = [d.strip() for d in args.designs.split(",") if d.strip()]
    except ValueError as exc:
        raise UsageError(f"bad list argument: {exc}") from exc
    for d in designs:
        if d not in _DESIGN_NAMES:
            raise UsageError(f"unknown design {d!r}; choose from "
                             f"{sorted(_DESIGN_NAMES)}")
    file_cfg = _read_config_file(args.config) if args.config else {}
    overrides = {
        "mu": _pick(args.mu, file_cfg, "mu", 0.0025),
        "patch": _pick(args.patch, file_cfg, "patch", 8),
        "group_size": _pick(args.group, file_cfg, "group", 60),
        "stride": _pick(args.stride, file_cfg, "stride", 4),
        "window": _pick(args.window, file_cfg, "window", 41),
        "outer_loops": _pick(args.iters, file_cfg, "iters", None),
        "inner_loops": _pick(args.inner, file_cfg, "inner", 1),
        "gd_iters": _pick(args.gd_iters, file_cfg, "gd_iters", 200),
        "gd_eta": _pick(args.eta, file_cfg, "eta", None),
    }
    seed = args.seed if args.seed is not None else 0
    keys = [(str(img), sub, des)
            for img in images for sub in subrates for des in designs]
    workers = min(len(keys), max(1, int(os.environ.get("HODW_THREADS", "1"))))
    results = {}
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            futs = {ex.submit(_benchmark_one, path, args.crop, sub, des, seed,
                              overrides): (path, sub, des)
                    for path, sub, des in keys}
            for fut in concurrent.futures.as_completed(futs):
                results[futs[fut]] = fut.result()
    else:
        for path, sub, des in keys:
            results[(path, sub, des)] = _benchmark_one(
                path, args.crop, sub, des, seed, overrides)

    lines = ["image,subrate,design,sigma_star,psnr,seconds"]
    table: dict[tuple[str, float], dict[str, float]] = {}
    for path, sub, des in keys:
        psnr_db, sigma, seconds = results[(path, sub, des)]
        name = Path(path).name
        lines.append(",".join(_fmt(v) for v in (
            name, sub, des, sigma, psnr_db,
            seconds if args.timing else None)))
        table.setdefault((des, sub), {})[name] = psnr_db
    Path(args.out).write_text("\n".join(lines) + "\n")

    ref = "qinf" if "qinf" in designs else designs[0]
    delta_lines = ["design," + ",".join(repr(s) for s in subrates)]
    for des in designs:
        cells = []
        for sub in subrates:
            base = table[(ref, sub)]
            cur = table[(des, sub)]
            delta = float(np.mean([base[n] - cur[n] for n in sorted(base)]))
            cells.append(repr(delta))
        delta_lines.append(des + "," + ",".join(cells))
    delta_path = Path(args.out).with_name(Path(args.out).stem + "_delta.csv")
    delta_path.write_text("\n".join(delta_lines) + "\n")
    return 0


def _add_recovery_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", choices=["1", "2", "inf"], default=None,
                   help="weight design: 1=soft, 2=wiener, inf=hard "
                        "(default inf)")
    p.add_argument("--sigma-star", dest="sigma_star", default=None,
                   metavar="auto|F",
                   help="filter noise level; 'auto' looks up the subrate "
                        "default")
    p.add_argument("--mu", type=float, default=None,
                   help="split penalty weight (default 0.0025)")
    p.add_argument("--patch", type=int, default=None,
                   help="patch side length (default 8)")
    p.add_argument("--group", type=int, default=None,
                   help="patches per group (default 60)")
    p.add_argument("--stride", type=int, default=None,
                   help="anchor grid stride (default 4)")
    p.add_argument("--window", type=int, default=None,
                   help="block-match window side (default 41)")
    p.add_argument("--iters", type=int, default=None,
                   help="outer iterations (default 60 with an initial "
                        "image, 200 from back-projection)")
    p.add_argument("--inner", type=int, default=None,
                   help="inner iterations per dictionary (default 1)")
    p.add_argument("--gd-iters", dest="gd_iters", type=int, default=None,
                   help="gradient descent steps per update (default 200)")
    p.add_argument("--eta", type=float, default=None,
                   help="gradient step size (default 1/(n_pad/m + mu))")
    p.add_argument("--seed", type=int, default=None, help="run seed")
    p.add_argument("--config", default=None,
                   help="key=value config file; flags take precedence")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock columns (breaks byte-identical "
                        "reruns)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hodw",
        description="Compressive sensing of color images with nonlocal "
                    "higher-order dictionaries and weighted shrinkage")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sense", help="simulate compressive sensing of an image")
    p.add_argument("image", help="8-bit RGB PNG or PPM input")
    p.add_argument("out", help="output measurement file")
    p.add_argument("--subrate", type=float, required=True,
                   help="measurements per pixel, in (0, 1]")
    p.add_argument("--seed", type=int, default=0, help="operator seed")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock totals in the manifest")
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("recover", help="recover an image from measurements")
    p.add_argument("meas", help="measurement file from 'hodw sense'")
    p.add_argument("out", help="output image (PNG or PPM)")
    p.add_argument("--truth", default=None,
                   help="original image for PSNR reporting")
    p.add_argument("--trace", default=None, help="per-iteration CSV path")
    p.add_argument("--oracle", action="store_true",
                   help="use the oracle MMSE filter (requires --truth)")
    p.add_argument("--init", default=None, metavar="backproj|file:PATH",
                   help="initial estimate (default backproj)")
    _add_recovery_flags(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("benchmark",
                       help="grid of recoveries over images x subrates x designs")
    p.add_argument("image_dir", help="directory of PNG/PPM images")
    p.add_argument("out", help="output CSV; a *_delta.csv summary is "
                               "written alongside")
    p.add_argument("--subrates", default="0.1,0.2,0.3,0.4",
                   help="comma-separated subrates")
    p.add_argument("--designs", default="q1,q2,qinf",
                   help="comma-separated from q1,q2,qinf,oracle")
    p.add_argument("--crop", type=int, default=64,
                   help="center-crop size, 0 for full images (default 64)")
    _add_recovery_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("diagnose",
                       help="per-iteration residual diagnostics against the truth")
    p.add_argument("meas", help="measurement file")
    p.add_argument("out", help="diagnostics CSV path")
    p.add_argument("--truth", required=True, help="original image")
    p.add_argument("--oracle", action="store_true",
                   help="diagnose the oracle-filter run")
    p.add_argument("--init", default=None, metavar="backproj|file:PATH")
    _add_recovery_flags(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"hodw: error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"hodw: data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"hodw: numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
