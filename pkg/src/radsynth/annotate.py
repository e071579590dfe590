"""Time-frequency bounding boxes and YOLO-layout label files.

A box spans an emission's active time extent and its estimated spectral
occupancy, clipped to the frame and normalized to [0, 1] with the frequency
axis top-down (y = 0 at +sample_rate/2) to match rendered spectrograms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import DomainError, ParseError, SchemaError
from .scene import (
    CLASS_ORDER,
    EmitterInstance,
    NIST_DURATION,
    NIST_SAMPLE_RATE,
)
from .waveform import CHIRPED_CLASSES, RadarClass, emission_duration

log = logging.getLogger(__name__)

#: class id = index in the canonical class order (alphabetical, stable).
CLASS_IDS = {cls: i for i, cls in enumerate(CLASS_ORDER)}
ID_TO_CLASS = {i: cls for cls, i in CLASS_IDS.items()}

#: NIST-style class order: two pulsed classes then three chirped ones.
NIST_CLASS_IDS = {"P0N1": 0, "P0N2": 1, "Q3N1": 2, "Q3N2": 3, "Q3N3": 4}

#: Fractional widening applied to reciprocal-of-duration bandwidth
#: estimates, absorbing the measurement uncertainty of sinc-shaped spectra.
BW_BUFFER_FRACTION = 0.5


@dataclass(frozen=True)
class Annotation:
    """One labeled box: class id plus normalized centre/size.

    x is the time axis, y the (top-down) frequency axis; the box must lie
    inside the unit square.
    """

    class_id: int
    x_c: float
    y_c: float
    w: float
    h: float

    def __post_init__(self):
        if self.class_id < 0:
            raise DomainError(f"negative class id {self.class_id}")
        if self.w <= 0 or self.h <= 0:
            raise DomainError(f"box size must be positive, got {self.w}x{self.h}")
        # Tolerance covers the 6-decimal label precision on re-read.
        eps = 2e-6
        if not (
            -eps <= self.x_c - self.w / 2
            and self.x_c + self.w / 2 <= 1 + eps
            and -eps <= self.y_c - self.h / 2
            and self.y_c + self.h / 2 <= 1 + eps
        ):
            raise DomainError("box extends outside the unit square")


def est_bandwidth(emitter: EmitterInstance) -> float:
    """Estimated spectral occupancy of one emission in Hz.

    Chirped classes occupy their sweep bandwidth. Rect pulses occupy the
    reciprocal pulse width plus a half-reciprocal buffer; phase-coded
    pulses likewise, but against the chip duration that sets their
    spectral spread.
    """
    params = emitter.params
    if emitter.radar_class in CHIRPED_CLASSES:
        return params.b_chirp
    if emitter.radar_class is RadarClass.RECT:
        t_ref = params.t_pw
    else:
        t_ref = params.t_pw / params.phase_code.n_chip
    return (1.0 + BW_BUFFER_FRACTION) / t_ref


def _normalize_box(
    t_lo: float,
    t_hi: float,
    f_lo: float,
    f_hi: float,
    class_id: int,
    frame_duration: float,
    sample_rate: float,
) -> Annotation | None:
    """Clip extents to the frame and band, then normalize. Returns None
    for a fully clipped (zero-area) box."""
    t_lo, t_hi = max(t_lo, 0.0), min(t_hi, frame_duration)
    nyq = sample_rate / 2.0
    f_lo, f_hi = max(f_lo, -nyq), min(f_hi, nyq)
    if t_hi <= t_lo or f_hi <= f_lo:
        return None
    # Frequency axis is top-down: +nyq maps to y = 0.
    y_lo = (nyq - f_hi) / sample_rate
    y_hi = (nyq - f_lo) / sample_rate
    return Annotation(
        class_id=class_id,
        x_c=(t_lo + t_hi) / 2.0 / frame_duration,
        y_c=(y_lo + y_hi) / 2.0,
        w=(t_hi - t_lo) / frame_duration,
        h=y_hi - y_lo,
    )


def bbox_for_emitter(
    emitter: EmitterInstance, frame_duration: float, sample_rate: float
) -> Annotation | None:
    """Bounding box of one placed emitter, or None when fully clipped.

    The time extent runs from the start time to the trailing edge of the
    last pulse or chirp; the frequency extent is centred on f_c with the
    estimated bandwidth.
    """
    d = emission_duration(emitter.params)
    b = est_bandwidth(emitter)
    box = _normalize_box(
        emitter.t_s,
        emitter.t_s + d,
        emitter.f_c - b / 2.0,
        emitter.f_c + b / 2.0,
        CLASS_IDS[emitter.radar_class],
        frame_duration,
        sample_rate,
    )
    if box is None:
        log.warning(
            "emitter %s at t_s=%g f_c=%g fully clipped; dropped from labels",
            emitter.radar_class.value,
            emitter.t_s,
            emitter.f_c,
        )
    return box


@dataclass(frozen=True)
class NistRecord:
    """Metadata of one narrowband (NIST-style) single-radar frame.

    Times in seconds, frequencies in Hz. Chirped classes (Q3N*) carry
    b_chirp; pulsed classes (P0N*) carry t_pw. n is the number of
    repetition intervals occupied by the burst.
    """

    frame_id: str
    radar_class: str
    t_s: float
    f_c: float
    f_prf: float
    n: int
    t_pw: float | None = None
    b_chirp: float | None = None


def annotate_nist(
    record: NistRecord,
    frame_duration: float = NIST_DURATION,
    sample_rate: float = NIST_SAMPLE_RATE,
) -> Annotation:
    """Annotation-transform for narrowband single-radar metadata.

    The box spans [t_s, t_s + n/f_prf] in time; the bandwidth is b_chirp
    for chirped classes and the buffered reciprocal pulse width for
    pulsed ones, normalized against the 80 ms x 10 MHz frame.
    """
    if record.radar_class not in NIST_CLASS_IDS:
        raise SchemaError(
            f"unknown class {record.radar_class!r}; "
            f"expected one of {sorted(NIST_CLASS_IDS)}"
        )
    for name in ("t_s", "f_c", "f_prf", "n"):
        if getattr(record, name) is None:
            raise SchemaError(f"record {record.frame_id}: missing field {name}")
    if record.f_prf <= 0:
        raise SchemaError(f"record {record.frame_id}: f_prf must be positive")
    chirped = record.radar_class.startswith("Q3N")
    if chirped:
        if record.b_chirp is None:
            raise SchemaError(f"record {record.frame_id}: missing field b_chirp")
        bandwidth = record.b_chirp
    else:
        if record.t_pw is None:
            raise SchemaError(f"record {record.frame_id}: missing field t_pw")
        bandwidth = (1.0 + BW_BUFFER_FRACTION) / record.t_pw

    box = _normalize_box(
        record.t_s,
        record.t_s + record.n / record.f_prf,
        record.f_c - bandwidth / 2.0,
        record.f_c + bandwidth / 2.0,
        NIST_CLASS_IDS[record.radar_class],
        frame_duration,
        sample_rate,
    )
    if box is None:
        raise SchemaError(
            f"record {record.frame_id}: box fully outside the frame"
        )
    return box


def write_labels(annotations: list[Annotation], path) -> None:
    """Write one 'class_id x_c y_c w h' line per box at 6-decimal fixed
    precision. Background frames produce an empty file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ann in annotations:
            fh.write(
                f"{ann.class_id} {ann.x_c:.6f} {ann.y_c:.6f} "
                f"{ann.w:.6f} {ann.h:.6f}\n"
            )


def read_labels(path) -> list[Annotation]:
    """Inverse of write_labels (up to the 6-decimal precision)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ParseError(
                    f"expected 5 fields, found {len(parts)}", line=lineno
                )
            try:
                class_id = int(parts[0])
                values = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite box value", line=lineno)
            try:
                out.append(Annotation(class_id, *values))
            except DomainError as exc:
                raise ParseError(str(exc), line=lineno) from None
    return out
