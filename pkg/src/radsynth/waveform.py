"""Complex baseband waveform synthesis for the 11 radar classes.

Covers rectangular pulse trains, LFM / FMCW chirps, and the phase-coded
families (Barker, Frank, P1, P2, P3, P4, Px, Zadoff-Chu). All waveforms have
a unit complex envelope while active and exact zeros in inter-pulse gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


class RadarClass(Enum):
    """The 11 waveform classes the generator can emit."""

    BARKER = "Barker"
    FMCW = "FMCW"
    FRANK = "Frank"
    LFM = "LFM"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    PX = "Px"
    RECT = "Rect"
    ZADOFF_CHU = "ZadoffChu"


class CodeFamily(Enum):
    BARKER = "Barker"
    FRANK = "Frank"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    PX = "Px"
    ZADOFF_CHU = "ZadoffChu"


#: Classes synthesized as pulse trains with a per-chip phase code.
CODED_CLASSES = frozenset(
    {
        RadarClass.BARKER,
        RadarClass.FRANK,
        RadarClass.P1,
        RadarClass.P2,
        RadarClass.P3,
        RadarClass.P4,
        RadarClass.PX,
        RadarClass.ZADOFF_CHU,
    }
)
#: Classes synthesized as pulse trains (unit envelope, inter-pulse gaps).
PULSED_CLASSES = CODED_CLASSES | {RadarClass.RECT}
#: Classes synthesized as linear chirps.
CHIRPED_CLASSES = frozenset({RadarClass.LFM, RadarClass.FMCW})

CLASS_TO_FAMILY = {
    RadarClass.BARKER: CodeFamily.BARKER,
    RadarClass.FRANK: CodeFamily.FRANK,
    RadarClass.P1: CodeFamily.P1,
    RadarClass.P2: CodeFamily.P2,
    RadarClass.P3: CodeFamily.P3,
    RadarClass.P4: CodeFamily.P4,
    RadarClass.PX: CodeFamily.PX,
    RadarClass.ZADOFF_CHU: CodeFamily.ZADOFF_CHU,
}

#: Valid chip counts per code family. Zadoff-Chu additionally accepts any odd
#: length >= 1 when constructed directly; this set is the sampling grid.
CODE_LENGTHS = {
    CodeFamily.BARKER: (5, 7, 11, 13),
    CodeFamily.FRANK: (4, 9, 16),
    CodeFamily.P1: (4, 9, 16),
    CodeFamily.PX: (4, 9, 16),
    CodeFamily.P2: (4, 16),
    CodeFamily.P3: tuple(range(4, 17)),
    CodeFamily.P4: tuple(range(4, 17)),
    CodeFamily.ZADOFF_CHU: (3, 5, 7, 9, 11, 13, 15),
}

_BARKER_SIGNS = {
    5: (1, 1, 1, -1, 1),
    7: (1, 1, 1, -1, -1, 1, -1),
    11: (1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1),
    13: (1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1),
}


def wrap_phase(phi: np.ndarray | float) -> np.ndarray | float:
    """Wrap phase values into [-pi, pi)."""
    return (np.asarray(phi) + math.pi) % TWO_PI - math.pi


def _round_half_up(x: float) -> int:
    """Sample-index rounding used for all pulse and chip edges."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class PhaseCode:
    """A per-chip phase sequence in radians, wrapped to [-pi, pi)."""

    chips: np.ndarray
    family: CodeFamily
    n_chip: int

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.float64)
        object.__setattr__(self, "chips", chips)
        if chips.shape != (self.n_chip,):
            raise DomainError(
                f"chip count {chips.shape} does not match n_chip={self.n_chip}"
            )
        if np.any(chips < -math.pi) or np.any(chips >= math.pi):
            raise DomainError("chip phases must be wrapped to [-pi, pi)")
        if self.family is CodeFamily.ZADOFF_CHU and self.n_chip % 2 == 0:
            raise DomainError("Zadoff-Chu length must be odd")


def _square_root_of(n_chip: int, family: CodeFamily) -> int:
    m = math.isqrt(n_chip)
    if m * m != n_chip:
        raise DomainError(f"{family.value} length {n_chip} is not a perfect square")
    return m


def code_generate(
    family: CodeFamily, n_chip: int, root: int | None = None
) -> PhaseCode:
    """Generate the chip phases of a pulse-compression code.

    Args:
        family: code family.
        n_chip: code length; must be valid for the family (Barker
            {5,7,11,13}; Frank/Px/P1 {4,9,16}; P2 {4,16}; P3/P4 4..16;
            Zadoff-Chu any odd length, sampled from {3..15} in practice).
        root: Zadoff-Chu root index, coprime with n_chip. Defaults to 1.
            Ignored for other families.

    Returns:
        PhaseCode with n_chip wrapped phases. Deterministic for fixed inputs.
    """
    if family is CodeFamily.ZADOFF_CHU:
        if n_chip < 1 or n_chip % 2 == 0:
            raise DomainError(
                f"Zadoff-Chu n_chip must be odd and >= 1, got {n_chip}"
            )
    elif n_chip not in CODE_LENGTHS[family]:
        raise DomainError(
            f"{family.value} n_chip must be one of {CODE_LENGTHS[family]}, "
            f"got {n_chip}"
        )

    if family is CodeFamily.BARKER:
        signs = np.array(_BARKER_SIGNS[n_chip], dtype=np.float64)
        phases = np.where(signs > 0, 0.0, math.pi)
    elif family is CodeFamily.FRANK:
        # Row-major M x M matrix of phases (2*pi/M) * i * j.
        m = _square_root_of(n_chip, family)
        i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        phases = (TWO_PI / m) * (i * j).ravel()
    elif family is CodeFamily.P1:
        # Step-chirp with frequency groups centred about DC and phase
        # accumulated across groups; group index j outer, sample i inner.
        m = _square_root_of(n_chip, family)
        j, i = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        phases = (-math.pi / m) * (m - 2 * j - 1) * (j * m + i)
        phases = phases.ravel()
    elif family is CodeFamily.P2:
        # Palindromic variant; needs even sqrt(n_chip) for low sidelobes.
        m = _square_root_of(n_chip, family)
        j, i = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        phases = (-math.pi / (2 * m)) * (2 * i + 1 - m) * (2 * j + 1 - m)
        phases = phases.ravel()
    elif family is CodeFamily.PX:
        # Centred-sample step-chirp; conjugate-equivalent to P2 at even
        # sqrt(n_chip) and additionally valid at odd sqrt(n_chip).
        m = _square_root_of(n_chip, family)
        j, i = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        phases = (math.pi / m) * ((m - 1) / 2.0 - j) * (m - 1 - 2 * i)
        phases = phases.ravel()
    elif family is CodeFamily.P3:
        n = np.arange(n_chip)
        phases = math.pi * n * n / n_chip
    elif family is CodeFamily.P4:
        n = np.arange(n_chip)
        phases = math.pi * n * (n - n_chip) / n_chip
    else:  # Zadoff-Chu
        u = 1 if root is None else int(root)
        if u < 1 or math.gcd(u, n_chip) != 1:
            raise DomainError(
                f"Zadoff-Chu root {u} must be positive and coprime with "
                f"n_chip={n_chip}"
            )
        n = np.arange(n_chip)
        phases = -math.pi * u * n * (n + 1) / n_chip

    return PhaseCode(chips=wrap_phase(phases), family=family, n_chip=n_chip)


@dataclass(frozen=True)
class WaveformParams:
    """Sampled parameters of one emission.

    Only the fields relevant to the class are populated; the rest stay None.
    Pulsed families carry (t_pw, f_prf, n_pulse), chirped families carry
    (b_chirp, t_chirp, n_chirp), with f_prf doubling as the LFM inter-chirp
    repetition rate. Phase-coded classes add a PhaseCode.
    """

    radar_class: RadarClass
    t_pw: float | None = None
    f_prf: float | None = None
    n_pulse: int | None = None
    b_chirp: float | None = None
    t_chirp: float | None = None
    n_chirp: int | None = None
    phase_code: PhaseCode | None = None
    phi: float = 0.0

    def __post_init__(self):
        cls = self.radar_class
        if not -math.pi / 4 <= self.phi <= math.pi / 4:
            raise DomainError(f"phi {self.phi} outside [-pi/4, pi/4]")
        if cls in PULSED_CLASSES:
            self._require("t_pw", "f_prf", "n_pulse")
            self._forbid("b_chirp", "t_chirp", "n_chirp")
            if self.t_pw <= 0 or self.f_prf <= 0 or self.n_pulse < 1:
                raise DomainError("pulsed parameters must be positive")
            if self.t_pw * self.f_prf >= 1.0:
                raise DomainError(
                    f"overlapping pulses: t_pw={self.t_pw} >= "
                    f"PRI={1.0 / self.f_prf}"
                )
            if cls in CODED_CLASSES:
                if self.phase_code is None:
                    raise DomainError(f"{cls.value} requires a phase_code")
                if self.phase_code.family is not CLASS_TO_FAMILY[cls]:
                    raise DomainError(
                        f"phase code family {self.phase_code.family.value} "
                        f"does not match class {cls.value}"
                    )
            elif self.phase_code is not None:
                raise DomainError("Rect does not take a phase_code")
        elif cls in CHIRPED_CLASSES:
            self._require("b_chirp", "t_chirp", "n_chirp")
            self._forbid("t_pw", "n_pulse")
            if self.phase_code is not None:
                raise DomainError(f"{cls.value} does not take a phase_code")
            if self.b_chirp <= 0 or self.t_chirp <= 0 or self.n_chirp < 1:
                raise DomainError("chirp parameters must be positive")
            if cls is RadarClass.LFM:
                if self.f_prf is None:
                    raise DomainError("LFM requires f_prf for chirp spacing")
                if self.t_chirp * self.f_prf >= 1.0:
                    raise DomainError(
                        f"overlapping chirps: t_chirp={self.t_chirp} >= "
                        f"PRI={1.0 / self.f_prf}"
                    )
            elif self.f_prf is not None:
                raise DomainError("FMCW chirps are contiguous; f_prf not used")

    def _require(self, *names: str):
        for name in names:
            if getattr(self, name) is None:
                raise DomainError(
                    f"{self.radar_class.value} requires parameter {name}"
                )

    def _forbid(self, *names: str):
        for name in names:
            if getattr(self, name) is not None:
                raise DomainError(
                    f"{self.radar_class.value} does not take parameter {name}"
                )


@dataclass(frozen=True)
class IqBuffer:
    """Complex baseband samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise DomainError("sample_rate must be positive")
        if samples.size and not np.all(np.isfinite(samples)):
            raise DomainError("IQ samples must be finite")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def emission_duration(params: WaveformParams) -> float:
    """Duration from the first active sample to the end of the last pulse
    or chirp. Trailing repetition-interval silence is not included."""
    cls = params.radar_class
    if cls in PULSED_CLASSES:
        return (params.n_pulse - 1) / params.f_prf + params.t_pw
    if cls is RadarClass.LFM:
        return (params.n_chirp - 1) / params.f_prf + params.t_chirp
    return params.n_chirp * params.t_chirp


def synth_pulsed(params: WaveformParams, sample_rate: float) -> IqBuffer:
    """Synthesize a rectangular or phase-coded pulse train.

    Emits n_pulse pulses of width t_pw spaced at 1/f_prf. Phase-coded
    classes subdivide each pulse into n_chip equal-duration chips. The
    buffer ends at the trailing edge of the last pulse.
    """
    if params.radar_class not in PULSED_CLASSES:
        raise DomainError(f"{params.radar_class.value} is not a pulsed class")
    pri = 1.0 / params.f_prf
    n_total = _round_half_up(
        ((params.n_pulse - 1) * pri + params.t_pw) * sample_rate
    )
    out = np.zeros(n_total, dtype=np.complex128)

    if params.phase_code is not None:
        chip_phases = params.phase_code.chips
        n_chip = params.phase_code.n_chip
    else:
        chip_phases = np.zeros(1)
        n_chip = 1
    t_chip = params.t_pw / n_chip

    for k in range(params.n_pulse):
        t0 = k * pri
        # Chip edges are rounded to the nearest sample index per pulse so
        # fractional-sample PRIs do not accumulate drift.
        for c in range(n_chip):
            start = _round_half_up((t0 + c * t_chip) * sample_rate)
            stop = _round_half_up((t0 + (c + 1) * t_chip) * sample_rate)
            out[start:stop] = np.exp(1j * (params.phi + chip_phases[c]))
    return IqBuffer(samples=out, sample_rate=sample_rate)


def synth_chirped(
    params: WaveformParams, sample_rate: float, contiguous: bool
) -> IqBuffer:
    """Synthesize a sawtooth linear-chirp train.

    Each chirp sweeps instantaneous frequency from -b_chirp/2 to +b_chirp/2
    over t_chirp. Contiguous mode (FMCW) backs chirps onto each other;
    otherwise chirps start every 1/f_prf with zeros in between (LFM).
    """
    if params.radar_class not in CHIRPED_CLASSES:
        raise DomainError(f"{params.radar_class.value} is not a chirped class")
    if params.b_chirp > sample_rate:
        raise DomainError(
            f"b_chirp={params.b_chirp} exceeds sample_rate={sample_rate}"
        )
    spacing = params.t_chirp if contiguous else 1.0 / params.f_prf
    n_total = _round_half_up(
        ((params.n_chirp - 1) * spacing + params.t_chirp) * sample_rate
    )
    out = np.zeros(n_total, dtype=np.complex128)
    b, t_c = params.b_chirp, params.t_chirp

    for k in range(params.n_chirp):
        start = _round_half_up(k * spacing * sample_rate)
        stop = _round_half_up((k * spacing + t_c) * sample_rate)
        t = np.arange(stop - start) / sample_rate
        # Phase integral of f(t) = -b/2 + b*t/t_c, restarted each chirp.
        phase = TWO_PI * (-0.5 * b * t + (b / (2.0 * t_c)) * t * t) + params.phi
        out[start:stop] = np.exp(1j * phase)
    return IqBuffer(samples=out, sample_rate=sample_rate)


def synthesize(params: WaveformParams, sample_rate: float) -> IqBuffer:
    """Synthesize any radar class at baseband (centre frequency 0)."""
    if params.radar_class in PULSED_CLASSES:
        return synth_pulsed(params, sample_rate)
    return synth_chirped(
        params, sample_rate, contiguous=params.radar_class is RadarClass.FMCW
    )
