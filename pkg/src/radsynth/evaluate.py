"""Detector scoring against ground-truth label files.

Implements the standard detection protocol: detections are matched to
ground truth greedily by descending confidence at a given IoU threshold,
per-class average precision uses all-point interpolation of the precision
envelope, and mAP is reported at IoU 0.50 and averaged over 0.50:0.95 in
0.05 steps, overall and stratified by frame SNR.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .annotate import read_labels
from .dataset import read_manifest
from .errors import DomainError, ParseError, RadsynthError

IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

Box = tuple[float, float, float, float]


def _check_box(box: Box, tol: float = 2e-6) -> None:
    x_c, y_c, w, h = box
    if not all(math.isfinite(v) for v in box):
        raise DomainError(f"non-finite box {box}")
    if w <= 0 or h <= 0:
        raise DomainError(f"box size must be positive, got {w}x{h}")
    if (
        x_c - w / 2 < -tol
        or x_c + w / 2 > 1 + tol
        or y_c - h / 2 < -tol
        or y_c + h / 2 > 1 + tol
    ):
        raise DomainError(f"box {box} extends outside the unit square")


def clip_box(box: Box) -> Box:
    """Clip a centre/size box to the unit square."""
    x_c, y_c, w, h = box
    x_lo, x_hi = max(x_c - w / 2, 0.0), min(x_c + w / 2, 1.0)
    y_lo, y_hi = max(y_c - h / 2, 0.0), min(y_c + h / 2, 1.0)
    if x_hi <= x_lo or y_hi <= y_lo:
        raise DomainError(f"box {box} lies fully outside the unit square")
    return ((x_lo + x_hi) / 2, (y_lo + y_hi) / 2, x_hi - x_lo, y_hi - y_lo)


@dataclass(frozen=True)
class Detection:
    frame_id: str
    class_id: int
    box: Box
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "box", tuple(float(v) for v in self.box))
        _check_box(self.box)
        if not math.isfinite(self.confidence) or not 0 <= self.confidence <= 1:
            raise DomainError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    frame_id: str
    class_id: int
    box: Box

    def __post_init__(self):
        object.__setattr__(self, "box", tuple(float(v) for v in self.box))
        _check_box(self.box)


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two axis-aligned centre/size boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise DomainError("IoU of a zero-area box is undefined")
    ix = min(ax + aw / 2, bx + bw / 2) - max(ax - aw / 2, bx - bw / 2)
    iy = min(ay + ah / 2, by + bh / 2) - max(ay - ah / 2, by - bh / 2)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


def match(
    dets: list[Detection], gts: list[GroundTruth], iou_thresh: float
) -> tuple[list[bool], int]:
    """Greedy single-frame, single-class matching.

    Detections are processed in descending confidence (stable on ties);
    each claims the unmatched ground truth of highest IoU >= iou_thresh,
    lowest index winning IoU ties. Returns TP flags aligned with the input
    detection order plus the number of ground truths left unmatched.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    taken = [False] * len(gts)
    flags = [False] * len(dets)
    for i in order:
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            v = iou(dets[i].box, gt.box)
            if v >= iou_thresh and v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0:
            taken[best_j] = True
            flags[i] = True
    return flags, taken.count(False)


def average_precision(
    flags: list[bool], confidences: list[float], n_gt: int
) -> float | None:
    """All-point interpolated AP.

    Precision at each recall level is the maximum precision at any recall
    at or beyond it; AP is the area under that envelope. Returns 0.0 when
    detections exist without ground truth, and None (class skipped) when
    neither exists.
    """
    if n_gt < 0:
        raise DomainError("n_gt must be >= 0")
    if n_gt == 0:
        return 0.0 if flags else None
    order = sorted(range(len(flags)), key=lambda i: -confidences[i])
    mrec, mpre = [0.0], [0.0]
    tp = 0
    for rank, i in enumerate(order, start=1):
        tp += bool(flags[i])
        mrec.append(tp / n_gt)
        mpre.append(tp / rank)
    mrec.append(1.0)
    mpre.append(0.0)
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    return sum(
        (mrec[i + 1] - mrec[i]) * mpre[i + 1]
        for i in range(len(mrec) - 1)
        if mrec[i + 1] > mrec[i]
    )


def _scope_aps(
    dets: list[Detection], gts: list[GroundTruth]
) -> tuple[dict, dict]:
    """Per-class AP at every IoU threshold over one frame set."""
    classes = sorted({d.class_id for d in dets} | {g.class_id for g in gts})
    aps: dict[int, dict[float, float | None]] = {}
    n_gts: dict[int, int] = {}
    for cls in classes:
        cls_dets = [d for d in dets if d.class_id == cls]
        cls_gts = [g for g in gts if g.class_id == cls]
        n_gts[cls] = len(cls_gts)
        frames = sorted(
            {d.frame_id for d in cls_dets} | {g.frame_id for g in cls_gts}
        )
        by_frame_d = {f: [] for f in frames}
        by_frame_g = {f: [] for f in frames}
        for d in cls_dets:
            by_frame_d[d.frame_id].append(d)
        for g in cls_gts:
            by_frame_g[g.frame_id].append(g)
        aps[cls] = {}
        for thresh in IOU_THRESHOLDS:
            flags: list[bool] = []
            confs: list[float] = []
            keys: list[tuple] = []
            for f in frames:
                f_flags, _ = match(by_frame_d[f], by_frame_g[f], thresh)
                for idx, d in enumerate(by_frame_d[f]):
                    flags.append(f_flags[idx])
                    confs.append(d.confidence)
                    keys.append((-d.confidence, d.frame_id, idx))
            # Deterministic global order regardless of input or worker order.
            order = sorted(range(len(keys)), key=lambda i: keys[i])
            flags = [flags[i] for i in order]
            confs = [confs[i] for i in order]
            aps[cls][thresh] = average_precision(flags, confs, n_gts[cls])
    return aps, n_gts


def _mean_aps(aps: dict) -> tuple[float, float]:
    """(mAP50, mAP50:95) over classes, skipping absent classes."""
    ap50, ap_all = [], []
    for cls_aps in aps.values():
        if cls_aps[IOU_THRESHOLDS[0]] is None:
            continue
        ap50.append(cls_aps[IOU_THRESHOLDS[0]])
        ap_all.append(
            sum(cls_aps[t] for t in IOU_THRESHOLDS) / len(IOU_THRESHOLDS)
        )
    if not ap50:
        return 0.0, 0.0
    return sum(ap50) / len(ap50), sum(ap_all) / len(ap_all)


@dataclass(frozen=True)
class APResult:
    """Evaluation output: per-class AP tables plus mAP summaries.

    ap maps scope -> class_id -> iou threshold -> AP (None = class absent
    in that scope). Scope "all" pools every frame; numeric scopes are SNR
    levels. snr_mean averages the per-SNR mAPs.
    """

    ap: dict
    n_gt: dict
    map50: float
    map50_95: float
    per_snr: dict
    snr_mean: tuple[float, float] | None


def map_suite(
    dets: list[Detection],
    gts: list[GroundTruth],
    frame_snr: dict[str, float],
) -> APResult:
    """Score detections against ground truth with SNR stratification.

    frame_snr must cover every frame referenced by a detection or ground
    truth; frames without boxes still matter for false positives, so the
    mapping should cover the whole evaluated split.
    """
    known = set(frame_snr)
    bad = sorted({d.frame_id for d in dets} - known)
    if bad:
        raise DomainError(f"detections reference unknown frame ids: {bad[:5]}")
    bad = sorted({g.frame_id for g in gts} - known)
    if bad:
        raise DomainError(f"ground truth references unknown frame ids: {bad[:5]}")

    ap_tables: dict = {}
    n_gt_tables: dict = {}
    ap_tables["all"], n_gt_tables["all"] = _scope_aps(dets, gts)
    map50, map50_95 = _mean_aps(ap_tables["all"])

    per_snr: dict[float, tuple[float, float]] = {}
    for level in sorted(set(frame_snr.values())):
        ids = {f for f, s in frame_snr.items() if s == level}
        s_dets = [d for d in dets if d.frame_id in ids]
        s_gts = [g for g in gts if g.frame_id in ids]
        ap_tables[level], n_gt_tables[level] = _scope_aps(s_dets, s_gts)
        per_snr[level] = _mean_aps(ap_tables[level])

    snr_mean = None
    if per_snr:
        snr_mean = (
            sum(v[0] for v in per_snr.values()) / len(per_snr),
            sum(v[1] for v in per_snr.values()) / len(per_snr),
        )
    return APResult(
        ap=ap_tables,
        n_gt=n_gt_tables,
        map50=map50,
        map50_95=map50_95,
        per_snr=per_snr,
        snr_mean=snr_mean,
    )


def read_predictions(path) -> list[Detection]:
    """Parse 'frame_id class_id confidence x_c y_c w h' lines.

    Boxes are clipped to the unit square on load.
    """
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 7:
                raise ParseError(
                    f"expected 7 fields, found {len(parts)}", line=lineno
                )
            try:
                frame_id = parts[0]
                class_id = int(parts[1])
                conf = float(parts[2])
                box = tuple(float(v) for v in parts[3:])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            try:
                out.append(Detection(frame_id, class_id, clip_box(box), conf))
            except DomainError as exc:
                raise ParseError(str(exc), line=lineno) from None
    return out


def load_split_ground_truth(
    root: Path, env: str, preset: str, split: str
) -> tuple[list[GroundTruth], dict[str, float]]:
    """Ground truth and frame->SNR map for one generated split."""
    root = Path(root)
    rows = [
        r
        for r in read_manifest(root)
        if r["split"] == split and r["env"] == env
    ]
    if not rows:
        raise RadsynthError(
            f"no manifest rows for env={env} split={split} under {root}"
        )
    label_col = f"label_{preset}"
    gts: list[GroundTruth] = []
    frame_snr: dict[str, float] = {}
    for rec in rows:
        frame_snr[rec["frame_id"]] = rec["snr_db"]
        label_rel = rec.get(label_col)
        if not label_rel:
            raise RadsynthError(
                f"manifest has no {label_col} column for frame {rec['frame_id']}"
            )
        for ann in read_labels(root / label_rel):
            gts.append(
                GroundTruth(
                    frame_id=rec["frame_id"],
                    class_id=ann.class_id,
                    box=(ann.x_c, ann.y_c, ann.w, ann.h),
                )
            )
    return gts, frame_snr


def write_results_csv(result: APResult, path) -> None:
    """Per (SNR scope, class, IoU threshold) AP rows plus summary rows.

    Summary rows use class_id '*'; the cross-SNR mean uses scope 'snr-mean'.
    """

    def scope_key(scope) -> str:
        return scope if isinstance(scope, str) else f"{scope:g}"

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["snr", "class_id", "iou", "ap"])
        for scope, table in result.ap.items():
            for cls in sorted(table):
                for thresh in IOU_THRESHOLDS:
                    ap = table[cls][thresh]
                    writer.writerow(
                        [
                            scope_key(scope),
                            cls,
                            f"{thresh:.2f}",
                            "" if ap is None else f"{ap:.6f}",
                        ]
                    )
        writer.writerow(["all", "*", "0.50", f"{result.map50:.6f}"])
        writer.writerow(["all", "*", "0.50:0.95", f"{result.map50_95:.6f}"])
        for level, (m50, m5095) in result.per_snr.items():
            writer.writerow([scope_key(level), "*", "0.50", f"{m50:.6f}"])
            writer.writerow([scope_key(level), "*", "0.50:0.95", f"{m5095:.6f}"])
        if result.snr_mean is not None:
            writer.writerow(["snr-mean", "*", "0.50", f"{result.snr_mean[0]:.6f}"])
            writer.writerow(
                ["snr-mean", "*", "0.50:0.95", f"{result.snr_mean[1]:.6f}"]
            )
