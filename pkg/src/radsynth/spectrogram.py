"""Max-hold spectrogram pipeline.

An I/Q frame is framed into rectangular (unwindowed) segments, transformed
with an FFT per segment, converted to floored decibels, max-pooled along
time, and min-max normalized to [0, 1]. Three square resolution presets
exist per frame family; pooling factors are chosen so a full frame lands
exactly on the advertised output dimensions.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DomainError, ParseError
from .waveform import IqBuffer

#: Magnitudes are floored this many dB below the frame maximum.
DB_FLOOR = 120.0

#: Frame families: (sample_rate, samples per full frame).
FAMILIES = {
    "wideband": (500e6, 1_000_000),
    "nist": (10e6, 800_000),
}

_DIM = {"S": 128, "M": 256, "L": 512}
_POOL = {
    "wideband": {"S": 75, "M": 19, "L": 4},
    "nist": {"S": 60, "M": 30, "L": 15},
}

#: Stable ids used in the raw-grid file header.
PRESET_IDS = {
    ("wideband", "S"): 0,
    ("wideband", "M"): 1,
    ("wideband", "L"): 2,
    ("nist", "S"): 3,
    ("nist", "M"): 4,
    ("nist", "L"): 5,
}
_ID_TO_PRESET = {v: k for k, v in PRESET_IDS.items()}

_GRID_MAGIC = b"MHSG"
_GRID_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class ResolutionPreset:
    """STFT and pooling geometry for one output resolution.

    dim_f equals the segment length (square output, FFT length = segment
    length). n_overlap is derived from the frame length so that pooling
    n_pool consecutive columns yields exactly dim_t output bins, with any
    surplus trailing columns truncated.
    """

    name: str
    family: str
    dim_t: int
    dim_f: int
    n_pool: int
    n_seg: int
    n_overlap: int
    sample_rate: float
    n_samples: int

    @property
    def hop(self) -> int:
        return self.n_seg - self.n_overlap

    @property
    def time_res(self) -> float:
        """Seconds of frame time covered by one output time bin."""
        return self.n_samples / self.sample_rate / self.dim_t

    @property
    def freq_res(self) -> float:
        """Hz per frequency bin (sample_rate / FFT length)."""
        return self.sample_rate / self.dim_f


def get_preset(family: str, name: str) -> ResolutionPreset:
    """Look up a catalog preset (family 'wideband' or 'nist'; size S/M/L)."""
    if family not in FAMILIES:
        raise DomainError(f"unknown preset family {family!r}")
    if name not in _DIM:
        raise DomainError(f"unknown preset size {name!r}; use S, M, or L")
    sample_rate, n_samples = FAMILIES[family]
    dim = _DIM[name]
    n_pool = _POOL[family][name]
    samples_per_col = n_samples // (dim * n_pool)
    n_overlap = dim - samples_per_col if samples_per_col < dim else 0
    preset = ResolutionPreset(
        name=name,
        family=family,
        dim_t=dim,
        dim_f=dim,
        n_pool=n_pool,
        n_seg=dim,
        n_overlap=n_overlap,
        sample_rate=sample_rate,
        n_samples=n_samples,
    )
    # Output time bins on a full frame must land on the advertised size.
    eq_dim_t = (n_samples - n_overlap) // (n_pool * preset.hop)
    if eq_dim_t < dim:
        raise DomainError(
            f"preset {family}/{name} cannot produce {dim} time bins "
            f"from {n_samples} samples"
        )
    return preset


@dataclass(frozen=True)
class Spectrogram:
    """Normalized max-hold magnitude grid with axis calibration.

    grid[t, f] covers time bin t and frequency bin f, with f ascending from
    -sample_rate/2. Values span [0, 1] after per-frame normalization.
    """

    grid: np.ndarray
    time_res: float
    freq_res: float
    preset: ResolutionPreset

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 2:
            raise DomainError("grid must be 2-D (time x frequency)")
        if grid.size and (grid.min() < 0.0 or grid.max() > 1.0):
            raise DomainError("grid values must lie in [0, 1]")


def stft_magnitude(iq: IqBuffer, preset: ResolutionPreset) -> np.ndarray:
    """Floored dB magnitudes of the unwindowed short-time Fourier transform.

    Returns an (n_columns, dim_f) array. Segments of n_seg samples advance
    by hop = n_seg - n_overlap; each column is the centred (fftshifted)
    spectrum of one segment. Magnitudes are floored 120 dB below the frame
    maximum to keep silent bins finite.
    """
    x = iq.samples
    n_seg, hop = preset.n_seg, preset.hop
    if hop <= 0:
        raise DomainError(f"segment overlap {preset.n_overlap} leaves no hop")
    if x.size < n_seg:
        raise DomainError(
            f"input of {x.size} samples is shorter than one segment ({n_seg})"
        )
    n_cols = 1 + (x.size - n_seg) // hop
    needed = preset.dim_t * preset.n_pool
    if n_cols < needed and preset.n_overlap == 0:
        # Tail short of a full pooling group: pad with zeros segment-wise.
        padded = np.zeros(n_seg + (needed - 1) * hop, dtype=np.complex128)
        padded[: x.size] = x
        x = padded
        n_cols = needed
    frames = np.lib.stride_tricks.sliding_window_view(x, n_seg)[::hop][:n_cols]
    mag = np.abs(np.fft.fftshift(np.fft.fft(frames, axis=1), axes=1))
    ref = mag.max()
    if ref == 0.0:
        return np.full((n_cols, preset.dim_f), -DB_FLOOR)
    floor = ref * 10.0 ** (-DB_FLOOR / 20.0)
    return 20.0 * np.log10(np.maximum(mag, floor))


def pool_columns(columns: np.ndarray, preset: ResolutionPreset) -> np.ndarray:
    """Max-hold pooling of STFT columns, before normalization.

    Groups of n_pool consecutive columns reduce to their elementwise
    maximum; surplus trailing columns beyond dim_t groups are truncated.
    """
    columns = np.asarray(columns)
    needed = preset.dim_t * preset.n_pool
    if columns.shape[0] < needed:
        raise DomainError(
            f"max-hold needs {needed} columns "
            f"({preset.dim_t} bins x pool {preset.n_pool}), "
            f"got {columns.shape[0]}"
        )
    grouped = columns[:needed].reshape(preset.dim_t, preset.n_pool, -1)
    return grouped.max(axis=1)


def max_hold(columns: np.ndarray, preset: ResolutionPreset) -> Spectrogram:
    """Pool STFT columns and min-max normalize the result to [0, 1]."""
    pooled = pool_columns(columns, preset)
    lo, hi = pooled.min(), pooled.max()
    if hi > lo:
        grid = (pooled - lo) / (hi - lo)
    else:
        grid = np.zeros_like(pooled)
    return Spectrogram(
        grid=grid,
        time_res=preset.time_res,
        freq_res=preset.freq_res,
        preset=preset,
    )


def spectrogram(iq: IqBuffer, preset: ResolutionPreset) -> Spectrogram:
    """Full pipeline: STFT magnitudes then normalized max-hold."""
    return max_hold(stft_magnitude(iq, preset), preset)


def to_image_array(spec: Spectrogram) -> np.ndarray:
    """8-bit image layout: dim_f rows x dim_t columns, row 0 = highest
    frequency, pixel = round(255 * grid)."""
    return np.rint(spec.grid.T[::-1] * 255.0).astype(np.uint8)


def render(spec: Spectrogram, image: np.ndarray | None = None) -> bytes:
    """Encode the grid as a grayscale PNG with fixed encoder settings.

    The encoder parameters are pinned so identical grids always produce
    identical bytes. ``image`` overrides the pixel array (used for box
    overlays) and must match the spectrogram's image dimensions.
    """
    arr = to_image_array(spec) if image is None else image
    if arr.shape != (spec.grid.shape[1], spec.grid.shape[0]):
        raise DomainError("image dimensions do not match the spectrogram")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(
        buf, format="PNG", compress_level=6, optimize=False
    )
    return buf.getvalue()


def write_grid(spec: Spectrogram, path) -> None:
    """Raw grid export: 16-byte header (magic, dim_t, dim_f, preset id)
    then row-major little-endian float32 values."""
    key = (spec.preset.family, spec.preset.name)
    if key not in PRESET_IDS:
        raise DomainError(f"no stable id for preset {key}")
    header = _GRID_HEADER.pack(
        _GRID_MAGIC, spec.grid.shape[0], spec.grid.shape[1], PRESET_IDS[key]
    )
    data = spec.grid.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def read_grid(path) -> Spectrogram:
    """Inverse of write_grid."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _GRID_HEADER.size:
        raise ParseError(f"{path}: truncated grid header")
    magic, dim_t, dim_f, preset_id = _GRID_HEADER.unpack_from(raw)
    if magic != _GRID_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if preset_id not in _ID_TO_PRESET:
        raise ParseError(f"{path}: unknown preset id {preset_id}")
    expect = _GRID_HEADER.size + 4 * dim_t * dim_f
    if len(raw) != expect:
        raise ParseError(f"{path}: expected {expect} bytes, found {len(raw)}")
    grid = (
        np.frombuffer(raw, dtype="<f4", offset=_GRID_HEADER.size)
        .reshape(dim_t, dim_f)
        .astype(np.float64)
    )
    family, name = _ID_TO_PRESET[preset_id]
    preset = get_preset(family, name)
    return Spectrogram(
        grid=grid,
        time_res=preset.time_res,
        freq_res=preset.freq_res,
        preset=preset,
    )
