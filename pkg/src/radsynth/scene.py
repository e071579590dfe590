"""Scene sampling, frame composition, and noise calibration.

Emitter parameters are drawn from fixed uniform grids (value ranges and
resolutions of the wideband dataset family), placed uniformly over a fixed
time horizon and frequency band, mixed at baseband, and degraded with AWGN
calibrated against the active-sample power of the clean composite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError
from .waveform import (
    CLASS_TO_FAMILY,
    CODE_LENGTHS,
    CODED_CLASSES,
    CHIRPED_CLASSES,
    IqBuffer,
    PULSED_CLASSES,
    RadarClass,
    WaveformParams,
    code_generate,
    emission_duration,
    synthesize,
    _round_half_up,
)


class Env(Enum):
    """Scene-density environment."""

    SPARSE_1T = "1t"
    DENSE_9T = "9t"
    NIST_LIKE = "nist"


#: Canonical class order; index in this tuple is the class id.
CLASS_ORDER = tuple(RadarClass)

#: Frame SNR grid in dB (uniform from -20 to 20 at 8 dB resolution).
SNR_LEVELS_DB = (-20.0, -12.0, -4.0, 4.0, 12.0, 20.0)

#: Wideband frame geometry: 1M complex samples over 2 ms at 500 MHz.
WIDEBAND_SAMPLE_RATE = 500e6
WIDEBAND_DURATION = 2e-3
WIDEBAND_FRAME_SAMPLES = 1_000_000

#: Narrowband (NIST-style) frame geometry: 800k samples over 80 ms at 10 MHz.
NIST_SAMPLE_RATE = 10e6
NIST_DURATION = 80e-3
NIST_FRAME_SAMPLES = 800_000

# Parameter grids as (low, high, step) in SI units.
_T_PW_GRID = (1e-6, 100e-6, 1e-6)
_F_PRF_GRID = (10e3, 50e3, 1e3)
_N_PULSE_RANGE = (2, 10)
_B_CHIRP_GRID = (10e6, 100e6, 1e6)
_T_CHIRP_GRID = (10e-6, 100e-6, 10e-6)
_N_CHIRP_RANGE = (1, 20)
_PHI_GRID = (-math.pi / 4, math.pi / 4, math.pi / 180)
_F_C_STEP = 10e6

#: Guard factor: a pulse (or chirp) must occupy < 90% of its repetition
#: interval, leaving a minimal inter-pulse gap.
_DUTY_GUARD = 0.9


@dataclass(frozen=True)
class EmitterInstance:
    """One radar emission placed within a frame.

    t_s is the start time in seconds from the frame origin; f_c is the
    baseband-relative centre frequency in Hz.
    """

    radar_class: RadarClass
    params: WaveformParams
    t_s: float
    f_c: float

    def __post_init__(self):
        if self.radar_class is not self.params.radar_class:
            raise DomainError("emitter class does not match its params")
        if self.t_s < 0:
            raise DomainError(f"t_s must be >= 0, got {self.t_s}")


@dataclass(frozen=True)
class Frame:
    """A generated I/Q frame with its scene metadata."""

    iq: IqBuffer
    duration: float
    snr_db: float
    emitters: tuple[EmitterInstance, ...]
    env: Env
    frame_id: str
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "emitters", tuple(self.emitters))
        expect = _round_half_up(self.duration * self.iq.sample_rate)
        if len(self.iq) != expect:
            raise DomainError(
                f"frame length {len(self.iq)} != duration * sample_rate "
                f"({expect})"
            )
        limit = 9 if self.env is Env.DENSE_9T else 1
        if len(self.emitters) > limit:
            raise DomainError(
                f"{self.env.value} allows at most {limit} emitters, "
                f"got {len(self.emitters)}"
            )


def _grid_value(rng: np.random.Generator, low: float, high: float, step: float) -> float:
    """Uniform draw from {low, low+step, ..., high}."""
    n_points = int(round((high - low) / step)) + 1
    return low + step * int(rng.integers(0, n_points))


def _int_range(rng: np.random.Generator, low: int, high: int) -> int:
    return int(rng.integers(low, high + 1))


def _sample_code_length(rng: np.random.Generator, cls: RadarClass) -> int:
    lengths = CODE_LENGTHS[CLASS_TO_FAMILY[cls]]
    return lengths[int(rng.integers(0, len(lengths)))]


def _sample_zc_root(rng: np.random.Generator, n_chip: int) -> int:
    candidates = [u for u in range(1, n_chip) if math.gcd(u, n_chip) == 1]
    return candidates[int(rng.integers(0, len(candidates)))]


def sample_emitter(
    radar_class: RadarClass,
    rng: np.random.Generator,
    sample_rate: float = WIDEBAND_SAMPLE_RATE,
    duration: float = WIDEBAND_DURATION,
) -> EmitterInstance:
    """Draw one emitter's parameters from the per-class uniform grids.

    The draw order is fixed (f_c, phi, class-specific parameters, t_s) so a
    given rng state always yields the same emitter. Pulse widths are
    rejection-resampled until they fit inside 90% of a repetition interval;
    LFM redraws the (t_chirp, f_prf) pair under the same guard.
    """
    f_c = _grid_value(rng, -sample_rate / 2, sample_rate / 2, _F_C_STEP)
    phi = _grid_value(rng, *_PHI_GRID)

    if radar_class in PULSED_CLASSES:
        f_prf = _grid_value(rng, *_F_PRF_GRID)
        while True:
            t_pw = _grid_value(rng, *_T_PW_GRID)
            if t_pw < _DUTY_GUARD / f_prf:
                break
        n_pulse = _int_range(rng, *_N_PULSE_RANGE)
        code = None
        if radar_class in CODED_CLASSES:
            n_chip = _sample_code_length(rng, radar_class)
            root = None
            if radar_class is RadarClass.ZADOFF_CHU:
                root = _sample_zc_root(rng, n_chip)
            code = code_generate(CLASS_TO_FAMILY[radar_class], n_chip, root)
        params = WaveformParams(
            radar_class=radar_class,
            t_pw=t_pw,
            f_prf=f_prf,
            n_pulse=n_pulse,
            phase_code=code,
            phi=phi,
        )
    elif radar_class is RadarClass.LFM:
        b_chirp = _grid_value(rng, *_B_CHIRP_GRID)
        while True:
            t_chirp = _grid_value(rng, *_T_CHIRP_GRID)
            f_prf = _grid_value(rng, *_F_PRF_GRID)
            if t_chirp < _DUTY_GUARD / f_prf:
                break
        n_chirp = _int_range(rng, *_N_CHIRP_RANGE)
        params = WaveformParams(
            radar_class=radar_class,
            f_prf=f_prf,
            b_chirp=b_chirp,
            t_chirp=t_chirp,
            n_chirp=n_chirp,
            phi=phi,
        )
    elif radar_class is RadarClass.FMCW:
        b_chirp = _grid_value(rng, *_B_CHIRP_GRID)
        t_chirp = _grid_value(rng, *_T_CHIRP_GRID)
        n_chirp = _int_range(rng, *_N_CHIRP_RANGE)
        params = WaveformParams(
            radar_class=radar_class,
            b_chirp=b_chirp,
            t_chirp=t_chirp,
            n_chirp=n_chirp,
            phi=phi,
        )
    else:
        raise DomainError(f"unknown radar class {radar_class}")

    # Start time: uniform with the emission inside the frame when it fits,
    # otherwise uniform over the frame with truncation at the frame end.
    slack = duration - emission_duration(params)
    if slack >= 0:
        t_s = float(rng.random()) * slack
    else:
        t_s = float(rng.random()) * duration
    return EmitterInstance(radar_class=radar_class, params=params, t_s=t_s, f_c=f_c)


def sample_scene(
    env: Env,
    rng: np.random.Generator,
    sample_rate: float = WIDEBAND_SAMPLE_RATE,
    duration: float = WIDEBAND_DURATION,
) -> list[EmitterInstance]:
    """Draw the emitter set of one frame.

    Sparse (1t): background with probability 0.5, else exactly one emitter.
    Dense (9t): background with probability 0.1, else a uniform count in
    1..9 with classes drawn uniformly with replacement.
    """
    if env is Env.SPARSE_1T:
        if rng.random() < 0.5:
            return []
        count = 1
    elif env is Env.DENSE_9T:
        if rng.random() < 0.1:
            return []
        count = int(rng.integers(1, 10))
    else:
        raise DomainError(f"scene sampling supports 1t and 9t, not {env.value}")
    emitters = []
    for _ in range(count):
        cls = CLASS_ORDER[int(rng.integers(0, len(CLASS_ORDER)))]
        emitters.append(sample_emitter(cls, rng, sample_rate, duration))
    return emitters


def place_emitter(
    emitter: EmitterInstance, duration: float, sample_rate: float
) -> tuple[int, np.ndarray]:
    """Synthesize, frequency-shift, and clip one emitter.

    Returns the frame sample index of the first emission sample and the
    shifted samples, truncated at the frame end (never wrapped).
    """
    nyq = sample_rate / 2
    if not -nyq <= emitter.f_c <= nyq:
        raise DomainError(f"f_c {emitter.f_c} outside [-fs/2, fs/2]")
    if emitter.t_s >= duration:
        raise DomainError(f"t_s {emitter.t_s} outside the frame")
    wav = synthesize(emitter.params, sample_rate)
    start = _round_half_up(emitter.t_s * sample_rate)
    n_frame = _round_half_up(duration * sample_rate)
    w = wav.samples[: max(n_frame - start, 0)]
    if emitter.f_c != 0.0 and w.size:
        n = np.arange(w.size)
        w = w * np.exp(2j * math.pi * emitter.f_c / sample_rate * n)
    return start, w


def compose_frame(
    emitters: list[EmitterInstance] | tuple[EmitterInstance, ...],
    duration: float,
    sample_rate: float,
) -> IqBuffer:
    """Mix the emitters of one scene into a clean baseband frame."""
    n_frame = _round_half_up(duration * sample_rate)
    out = np.zeros(n_frame, dtype=np.complex128)
    for emitter in emitters:
        start, w = place_emitter(emitter, duration, sample_rate)
        out[start : start + w.size] += w
    return IqBuffer(samples=out, sample_rate=sample_rate)


def add_awgn(
    clean: IqBuffer,
    snr_db: float,
    rng: np.random.Generator,
    levels: tuple[float, ...] | None = SNR_LEVELS_DB,
) -> IqBuffer:
    """Add circularly-symmetric white Gaussian noise at a target frame SNR.

    The signal power reference is the mean power of the clean frame over
    its active (nonzero) samples, making the SNR independent of duty cycle.
    Background (all-zero) frames get unit-power noise. snr_db = +inf is the
    exact zero-noise passthrough. ``levels`` is the admissible SNR grid;
    pass None to disable the grid check.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return IqBuffer(samples=clean.samples.copy(), sample_rate=clean.sample_rate)
    if levels is not None and not any(abs(snr_db - l) < 1e-9 for l in levels):
        raise DomainError(f"snr_db {snr_db} not in the level grid {levels}")
    active = clean.samples != 0
    if active.any():
        p_sig = float(np.mean(np.abs(clean.samples[active]) ** 2))
        sigma2 = p_sig / 10.0 ** (snr_db / 10.0)
    else:
        sigma2 = 1.0
    z = rng.standard_normal((clean.samples.size, 2))
    noise = (z[:, 0] + 1j * z[:, 1]) * math.sqrt(sigma2 / 2.0)
    return IqBuffer(samples=clean.samples + noise, sample_rate=clean.sample_rate)


def empirical_snr_db(clean: IqBuffer, noisy: IqBuffer) -> float:
    """Measured SNR of a generated frame, given its known clean component."""
    active = clean.samples != 0
    if not active.any():
        raise DomainError("empirical SNR undefined for a background frame")
    p_sig = float(np.mean(np.abs(clean.samples[active]) ** 2))
    p_noise = float(np.mean(np.abs(noisy.samples - clean.samples) ** 2))
    return 10.0 * math.log10(p_sig / p_noise)
