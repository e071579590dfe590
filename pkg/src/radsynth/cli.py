"""Command-line surface: gen / eval / render / inspect / nist-annotate.

All subcommands are non-interactive; summaries go to stdout, diagnostics
to stderr. Exit codes: 0 success, 2 configuration errors, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

import numpy as np

from .annotate import NistRecord, annotate_nist, read_labels, write_labels
from .dataset import DatasetConfig, generate, read_manifest
from .errors import ConfigError, RadsynthError
from .evaluate import (
    load_split_ground_truth,
    map_suite,
    read_predictions,
    write_results_csv,
)
from .scene import Env
from .spectrogram import read_grid, render, to_image_array


def _parse_config_file(path: Path) -> dict:
    """Flat key=value file, '#' comments allowed."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _build_config(args) -> DatasetConfig:
    file_cfg = _parse_config_file(Path(args.config)) if args.config else {}

    def pick(flag_value, key, default=None):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, default)

    env = pick(args.env, "env")
    out = pick(args.out, "out", os.environ.get("RADSYNTH_OUT"))
    frames = pick(args.frames, "frames")
    if env is None or out is None or frames is None:
        raise ConfigError("--env, --out, and --frames are required")
    presets = pick(args.preset, "presets", "S")
    seed = pick(args.seed, "seed", 0)
    split = pick(args.split, "split_sizes")
    snr_levels = pick(args.snr_levels, "snr_levels")
    emit_iq = args.emit_iq or file_cfg.get("emit_raw_iq", "false") == "true"
    emit_grids = args.emit_grids or file_cfg.get("emit_grids", "false") == "true"

    try:
        env = Env(str(env))
    except ValueError:
        raise ConfigError(f"unknown env {env!r}; use 1t or 9t") from None
    kwargs = {}
    if split is not None:
        parts = str(split).split(",")
        if len(parts) != 3:
            raise ConfigError(f"--split expects train,val,test; got {split!r}")
        kwargs["split_sizes"] = tuple(int(p) for p in parts)
    if snr_levels is not None:
        kwargs["snr_levels"] = tuple(
            float(s) for s in str(snr_levels).split(",")
        )
    return DatasetConfig(
        env=env,
        output_root=Path(out),
        n_frames=int(frames),
        presets=tuple(p.strip() for p in str(presets).split(",") if p.strip()),
        global_seed=int(seed),
        emit_raw_iq=emit_iq,
        emit_grids=emit_grids,
        **kwargs,
    )


def _cmd_gen(args) -> int:
    config = _build_config(args)
    t0 = time.perf_counter()
    rows = generate(config, workers=args.workers)
    elapsed = time.perf_counter() - t0
    per_snr: dict[float, int] = {}
    for row in rows:
        per_snr[row.snr_db] = per_snr.get(row.snr_db, 0) + 1
    rate = len(rows) / elapsed if elapsed > 0 else float("inf")
    print(
        f"generated {len(rows)} frames (env={config.env.value}, "
        f"presets={','.join(config.presets)}) in {elapsed:.2f} s "
        f"({rate:.1f} frames/s)"
    )
    print(
        "per-SNR counts: "
        + " ".join(f"{s:g}:{per_snr[s]}" for s in sorted(per_snr))
    )
    print(f"output: {config.output_root}")
    return 0


def _cmd_eval(args) -> int:
    pred_path = Path(args.pred)
    if not pred_path.is_file():
        raise RadsynthError(f"prediction file not found: {pred_path}")
    dets = read_predictions(pred_path)
    gts, frame_snr = load_split_ground_truth(
        Path(args.root), args.env, args.preset, args.split
    )
    result = map_suite(dets, gts, frame_snr)
    out_path = Path(args.out) if args.out else Path(args.root) / "results.csv"
    write_results_csv(result, out_path)
    print("scope: mAP50 / mAP50:95")
    print(f"overall: {100 * result.map50:.2f} / {100 * result.map50_95:.2f}")
    for level, (m50, m5095) in result.per_snr.items():
        print(f"snr {level:g}: {100 * m50:.2f} / {100 * m5095:.2f}")
    if result.snr_mean is not None:
        print(
            f"snr-mean: {100 * result.snr_mean[0]:.2f} / "
            f"{100 * result.snr_mean[1]:.2f}"
        )
    print(f"results: {out_path}")
    return 0


def _burn_boxes(image: np.ndarray, labels) -> np.ndarray:
    """White 1-pixel outlines; image is (rows=freq top-down, cols=time)."""
    rows, cols = image.shape
    out = image.copy()
    for ann in labels:
        c0 = int(np.clip(np.floor((ann.x_c - ann.w / 2) * cols), 0, cols - 1))
        c1 = int(np.clip(np.ceil((ann.x_c + ann.w / 2) * cols) - 1, 0, cols - 1))
        r0 = int(np.clip(np.floor((ann.y_c - ann.h / 2) * rows), 0, rows - 1))
        r1 = int(np.clip(np.ceil((ann.y_c + ann.h / 2) * rows) - 1, 0, rows - 1))
        out[r0, c0 : c1 + 1] = 255
        out[r1, c0 : c1 + 1] = 255
        out[r0 : r1 + 1, c0] = 255
        out[r0 : r1 + 1, c1] = 255
    return out


def _cmd_render(args) -> int:
    src = Path(args.grids)
    if src.is_dir():
        grid_files = sorted(src.glob("*.grid"))
        if not grid_files:
            raise RadsynthError(f"no .grid files under {src}")
    elif src.is_file():
        grid_files = [src]
    else:
        raise RadsynthError(f"grid path not found: {src}")
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for grid_file in grid_files:
        spec = read_grid(grid_file)
        image = to_image_array(spec)
        if args.boxes:
            if not args.labels:
                raise RadsynthError("--boxes requires --labels")
            label_file = Path(args.labels) / f"{grid_file.stem}.txt"
            if not label_file.is_file():
                raise RadsynthError(f"label file not found: {label_file}")
            image = _burn_boxes(image, read_labels(label_file))
        target_dir = out_dir if out_dir is not None else grid_file.parent
        target = target_dir / f"{grid_file.stem}.png"
        target.write_bytes(render(spec, image=image))
        print(f"rendered {target}")
    return 0


def _cmd_inspect(args) -> int:
    root = Path(args.root)
    rows = read_manifest(root)
    matches = [r for r in rows if r["frame_id"] == args.frame_id]
    if not matches:
        raise RadsynthError(f"frame_id {args.frame_id} not in {root}/manifest.csv")
    row = matches[0]
    for key, value in row.items():
        if key.startswith(("image_", "label_", "grid_")) or key == "iq":
            continue
        if key == "classes":
            value = ";".join(value)
        print(f"{key}: {value}")
    label_rel = next(
        (row[k] for k in row if k.startswith("label_") and row[k]), None
    )
    if label_rel is None:
        raise RadsynthError("manifest row has no label file")
    labels = read_labels(root / label_rel)
    print(f"{len(labels)} annotations")
    for ann in labels:
        print(
            f"{ann.class_id} {ann.x_c:.6f} {ann.y_c:.6f} "
            f"{ann.w:.6f} {ann.h:.6f}"
        )
    return 0


_NIST_COLUMNS = ("frame_id", "class", "t_s", "f_c", "f_prf", "n")


def _cmd_nist_annotate(args) -> int:
    meta = Path(args.meta)
    if not meta.is_file():
        raise RadsynthError(f"metadata file not found: {meta}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_frame: dict[str, list] = {}
    with open(meta, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, rec in enumerate(reader, start=2):
            missing = [c for c in _NIST_COLUMNS if not (rec.get(c) or "").strip()]
            if missing:
                raise RadsynthError(
                    f"{meta}:{lineno}: missing field {missing[0]}"
                )

            def opt(key):
                value = (rec.get(key) or "").strip()
                return float(value) if value else None

            try:
                record = NistRecord(
                    frame_id=rec["frame_id"].strip(),
                    radar_class=rec["class"].strip(),
                    t_s=float(rec["t_s"]),
                    f_c=float(rec["f_c"]),
                    f_prf=float(rec["f_prf"]),
                    n=int(rec["n"]),
                    t_pw=opt("t_pw"),
                    b_chirp=opt("b_chirp"),
                )
                box = annotate_nist(record)
            except (ValueError, RadsynthError) as exc:
                raise RadsynthError(f"{meta}:{lineno}: {exc}") from None
            per_frame.setdefault(record.frame_id, []).append(box)
    for frame_id, boxes in per_frame.items():
        write_labels(boxes, out_dir / f"{frame_id}.txt")
    print(f"wrote {len(per_frame)} label files to {out_dir}")
    return 0


def _add_gen_parser(sub) -> None:
    p = sub.add_parser("gen", help="generate a dataset")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--env", choices=[e.value for e in (Env.SPARSE_1T, Env.DENSE_9T)])
    p.add_argument("--preset", help="comma-separated subset of S,M,L")
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", help="train,val,test sizes (default 50/35/15)")
    p.add_argument("--snr-levels", help="comma-separated dB levels")
    p.add_argument("--out", help="output root (or RADSYNTH_OUT)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit-iq", action="store_true", help="write raw I/Q files")
    p.add_argument("--emit-grids", action="store_true", help="write raw grids")
    p.set_defaults(func=_cmd_gen)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="radsynth",
        description="Synthetic wideband radar spectrum-detection datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_gen_parser(sub)

    p = sub.add_parser("eval", help="score a prediction file")
    p.add_argument("--pred", required=True, help="prediction text file")
    p.add_argument("--root", required=True, help="dataset root")
    p.add_argument("--env", default="9t")
    p.add_argument("--preset", default="S")
    p.add_argument("--split", default="test")
    p.add_argument("--out", help="results CSV path (default <root>/results.csv)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("render", help="re-emit PNGs from raw grids")
    p.add_argument("--grids", required=True, help=".grid file or directory")
    p.add_argument("--out", help="output directory (default alongside input)")
    p.add_argument("--labels", help="labels directory for --boxes")
    p.add_argument("--boxes", action="store_true", help="burn box outlines in")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("inspect", help="print a frame's manifest row and labels")
    p.add_argument("--root", required=True)
    p.add_argument("--frame-id", required=True)
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("nist-annotate", help="metadata CSV to label files")
    p.add_argument("--meta", required=True, help="metadata CSV")
    p.add_argument("--out", required=True, help="label output directory")
    p.set_defaults(func=_cmd_nist_annotate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RadsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
