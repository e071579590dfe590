"""Full-dataset generation: planning, seeding, file layout, manifests.

Every frame is a pure function of (config, frame_index): its random stream
is a counter-based generator keyed by a 64-bit mix of the global seed and
the frame index, so any worker count or execution order produces identical
bytes. Layout per frame family:

    <root>/<env>/<preset>/<split>/{images,labels[,iq][,grids]}/<frame_id>.*
    <root>/manifest.csv
    <root>/config.txt
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .annotate import bbox_for_emitter, write_labels
from .errors import ConfigError, RadsynthError
from .scene import (
    Env,
    Frame,
    SNR_LEVELS_DB,
    WIDEBAND_DURATION,
    WIDEBAND_SAMPLE_RATE,
    add_awgn,
    compose_frame,
    sample_scene,
)
from .spectrogram import get_preset, render, spectrogram, write_grid

SPLITS = ("train", "val", "test")
SPLIT_FRACTIONS = (0.50, 0.35, 0.15)
PRESET_NAMES = ("S", "M", "L")

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    """64-bit finalizer (xor-shift / multiply rounds); a bijection."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def frame_seed(global_seed: int, frame_index: int) -> int:
    """Collision-free 64-bit per-frame seed.

    mix64 is bijective, so for a fixed global seed all frame indices map
    to distinct seeds, and changing the global seed changes every frame's
    seed. Identical across platforms (pure integer arithmetic).
    """
    return _mix64((_mix64(global_seed) + frame_index) & _MASK64)


def frame_rng(seed: int) -> np.random.Generator:
    """Counter-based random stream for one frame (Philox keyed by seed)."""
    return np.random.Generator(np.random.Philox(key=seed))


def default_split_sizes(n_frames: int) -> tuple[int, int, int]:
    """Largest-remainder apportionment of the 50/35/15 split fractions."""
    quotas = [f * n_frames for f in SPLIT_FRACTIONS]
    sizes = [int(q) for q in quotas]
    remainders = sorted(
        range(len(quotas)), key=lambda i: quotas[i] - sizes[i], reverse=True
    )
    for i in range(n_frames - sum(sizes)):
        sizes[remainders[i]] += 1
    return tuple(sizes)


@dataclass(frozen=True)
class DatasetConfig:
    """Everything that determines a generation run's output bytes."""

    env: Env
    output_root: Path
    n_frames: int = 40_000
    presets: tuple[str, ...] = ("S",)
    split_sizes: tuple[int, int, int] | None = None
    snr_levels: tuple[float, ...] = SNR_LEVELS_DB
    global_seed: int = 0
    emit_raw_iq: bool = False
    emit_grids: bool = False

    def __post_init__(self):
        object.__setattr__(self, "output_root", Path(self.output_root))
        object.__setattr__(self, "presets", tuple(self.presets))
        object.__setattr__(self, "snr_levels", tuple(float(s) for s in self.snr_levels))
        if self.env not in (Env.SPARSE_1T, Env.DENSE_9T):
            raise ConfigError(
                f"generation supports envs 1t and 9t, not {self.env.value}"
            )
        if self.n_frames < 1:
            raise ConfigError(f"n_frames must be >= 1, got {self.n_frames}")
        for p in self.presets:
            if p not in PRESET_NAMES:
                raise ConfigError(f"unknown preset {p!r}; use S, M, or L")
        if not self.presets:
            raise ConfigError("at least one preset is required")
        if not self.snr_levels:
            raise ConfigError("at least one SNR level is required")
        if self.split_sizes is None:
            object.__setattr__(
                self, "split_sizes", default_split_sizes(self.n_frames)
            )
        else:
            object.__setattr__(self, "split_sizes", tuple(self.split_sizes))
        if len(self.split_sizes) != 3 or any(s < 0 for s in self.split_sizes):
            raise ConfigError(f"split_sizes must be 3 counts, got {self.split_sizes}")
        if sum(self.split_sizes) != self.n_frames:
            raise ConfigError(
                f"split sizes {self.split_sizes} sum to {sum(self.split_sizes)}, "
                f"expected n_frames={self.n_frames}"
            )


@dataclass(frozen=True)
class PlanEntry:
    frame_index: int
    split: str
    snr_db: float


def plan(config: DatasetConfig) -> list[PlanEntry]:
    """Deterministic frame plan.

    SNR levels rotate round-robin over frame indices, so per-level counts
    differ by at most one; splits are contiguous index blocks, which keeps
    per-(SNR, split) cells within one frame of the global split ratios.
    """
    levels = config.snr_levels
    t, v, _ = config.split_sizes
    out = []
    for i in range(config.n_frames):
        split = "train" if i < t else ("val" if i < t + v else "test")
        out.append(PlanEntry(i, split, levels[i % len(levels)]))
    return out


@dataclass(frozen=True)
class ManifestRow:
    """One generated frame's bookkeeping entry."""

    frame_id: str
    frame_index: int
    split: str
    env: str
    snr_db: float
    emitter_count: int
    classes: tuple[str, ...]
    seed: int
    status: str = "ok"
    files: dict = field(default_factory=dict)


def _frame_id(index: int) -> str:
    return f"{index:06d}"


def _file_columns(config: DatasetConfig) -> list[str]:
    cols = []
    for p in config.presets:
        cols.append(f"image_{p}")
        cols.append(f"label_{p}")
        if config.emit_grids:
            cols.append(f"grid_{p}")
    if config.emit_raw_iq:
        cols.append("iq")
    return cols


def _build_frame(config: DatasetConfig, entry: PlanEntry) -> ManifestRow:
    """Generate one frame and write its artifacts. Pure in (config, entry)."""
    seed = frame_seed(config.global_seed, entry.frame_index)
    rng = frame_rng(seed)
    fs, dur = WIDEBAND_SAMPLE_RATE, WIDEBAND_DURATION

    emitters = sample_scene(config.env, rng, fs, dur)
    clean = compose_frame(emitters, dur, fs)
    noisy = add_awgn(clean, entry.snr_db, rng, levels=config.snr_levels)
    frame = Frame(
        iq=noisy,
        duration=dur,
        snr_db=entry.snr_db,
        emitters=tuple(emitters),
        env=config.env,
        frame_id=_frame_id(entry.frame_index),
        seed=seed,
    )
    annotations = []
    for emitter in emitters:
        box = bbox_for_emitter(emitter, dur, fs)
        if box is not None:
            annotations.append(box)

    root = config.output_root
    files: dict[str, str] = {}
    for p in config.presets:
        preset = get_preset("wideband", p)
        spec = spectrogram(noisy, preset)
        base = Path(config.env.value) / p / entry.split
        rel_img = base / "images" / f"{frame.frame_id}.png"
        rel_lab = base / "labels" / f"{frame.frame_id}.txt"
        (root / rel_img).write_bytes(render(spec))
        write_labels(annotations, root / rel_lab)
        files[f"image_{p}"] = rel_img.as_posix()
        files[f"label_{p}"] = rel_lab.as_posix()
        if config.emit_grids:
            rel_grid = base / "grids" / f"{frame.frame_id}.grid"
            write_grid(spec, root / rel_grid)
            files[f"grid_{p}"] = rel_grid.as_posix()
    if config.emit_raw_iq:
        # One raw file per frame, kept under the first preset's tree.
        base = Path(config.env.value) / config.presets[0] / entry.split
        rel_iq = base / "iq" / f"{frame.frame_id}.iqf32"
        interleaved = np.empty(2 * len(noisy), dtype="<f4")
        interleaved[0::2] = noisy.samples.real
        interleaved[1::2] = noisy.samples.imag
        (root / rel_iq).write_bytes(interleaved.tobytes())
        files["iq"] = rel_iq.as_posix()

    return ManifestRow(
        frame_id=frame.frame_id,
        frame_index=entry.frame_index,
        split=entry.split,
        env=config.env.value,
        snr_db=entry.snr_db,
        emitter_count=len(emitters),
        classes=tuple(e.radar_class.value for e in emitters),
        seed=seed,
        files=files,
    )


def _build_frame_safe(args) -> tuple[ManifestRow | None, str | None]:
    config, entry = args
    try:
        return _build_frame(config, entry), None
    except Exception as exc:  # noqa: BLE001 - reported via the manifest
        row = ManifestRow(
            frame_id=_frame_id(entry.frame_index),
            frame_index=entry.frame_index,
            split=entry.split,
            env=config.env.value,
            snr_db=entry.snr_db,
            emitter_count=0,
            classes=(),
            seed=frame_seed(config.global_seed, entry.frame_index),
            status="incomplete",
        )
        return row, f"frame {entry.frame_index}: {exc}"


def _make_dirs(config: DatasetConfig) -> None:
    root = config.output_root
    for p in config.presets:
        for split in SPLITS:
            base = root / config.env.value / p / split
            (base / "images").mkdir(parents=True, exist_ok=True)
            (base / "labels").mkdir(parents=True, exist_ok=True)
            if config.emit_grids:
                (base / "grids").mkdir(parents=True, exist_ok=True)
    if config.emit_raw_iq:
        for split in SPLITS:
            base = root / config.env.value / config.presets[0] / split
            (base / "iq").mkdir(parents=True, exist_ok=True)


def manifest_path(root: Path) -> Path:
    return Path(root) / "manifest.csv"


def write_manifest(config: DatasetConfig, rows: list[ManifestRow]) -> Path:
    """Manifest CSV: header row, UTF-8, LF endings, rows by frame index."""
    cols = [
        "frame_id",
        "frame_index",
        "split",
        "env",
        "snr_db",
        "emitter_count",
        "classes",
        "seed",
        "status",
    ] + _file_columns(config)
    path = manifest_path(config.output_root)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in sorted(rows, key=lambda r: r.frame_index):
            record = [
                row.frame_id,
                row.frame_index,
                row.split,
                row.env,
                f"{row.snr_db:g}",
                row.emitter_count,
                ";".join(row.classes),
                row.seed,
                row.status,
            ]
            record += [row.files.get(c, "") for c in _file_columns(config)]
            writer.writerow(record)
    return path


def read_manifest(root: Path) -> list[dict]:
    """Parse manifest.csv back into typed per-frame dicts."""
    path = manifest_path(root)
    if not path.is_file():
        raise RadsynthError(f"manifest not found: {path}")
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rec["frame_index"] = int(rec["frame_index"])
            rec["snr_db"] = float(rec["snr_db"])
            rec["emitter_count"] = int(rec["emitter_count"])
            rec["seed"] = int(rec["seed"])
            rec["classes"] = tuple(c for c in rec["classes"].split(";") if c)
            out.append(rec)
    return out


def write_config_echo(config: DatasetConfig) -> Path:
    """Canonical key-sorted echo of the run configuration."""
    items = {
        "emit_grids": str(config.emit_grids).lower(),
        "emit_raw_iq": str(config.emit_raw_iq).lower(),
        "env": config.env.value,
        "frames": str(config.n_frames),
        "numpy_version": np.__version__,
        "out": str(config.output_root),
        "presets": ",".join(config.presets),
        "rng": "philox64(key=mix64(mix64(seed)+frame_index))",
        "seed": str(config.global_seed),
        "snr_levels": ",".join(f"{s:g}" for s in config.snr_levels),
        "split_sizes": ",".join(str(s) for s in config.split_sizes),
    }
    path = config.output_root / "config.txt"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(items):
            fh.write(f"{key}={items[key]}\n")
    return path


def generate(config: DatasetConfig, workers: int = 1) -> list[ManifestRow]:
    """Generate every planned frame, the manifest, and the config echo.

    Output bytes depend only on the config (not on the worker count).
    Frames that fail are recorded with status=incomplete before the error
    is re-raised.
    """
    entries = plan(config)
    config.output_root.mkdir(parents=True, exist_ok=True)
    _make_dirs(config)

    jobs = [(config, e) for e in entries]
    rows: list[ManifestRow] = []
    errors: list[str] = []
    if workers <= 1:
        results = map(_build_frame_safe, jobs)
        for row, err in results:
            rows.append(row)
            if err:
                errors.append(err)
    else:
        with Pool(processes=workers) as pool:
            for row, err in pool.imap(_build_frame_safe, jobs, chunksize=4):
                rows.append(row)
                if err:
                    errors.append(err)

    write_manifest(config, rows)
    write_config_echo(config)
    if errors:
        raise RadsynthError(
            f"{len(errors)} frame(s) failed (marked incomplete in the "
            f"manifest): " + "; ".join(errors[:5])
        )
    return sorted(rows, key=lambda r: r.frame_index)
