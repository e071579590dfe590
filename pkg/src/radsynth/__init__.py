"""Synthetic wideband radar spectrum-detection datasets and evaluation.

Pipeline modules:
    waveform     phase codes and I/Q synthesis for the 11 radar classes
    scene        parameter sampling, frame composition, AWGN calibration
    spectrogram  STFT, max-hold pooling, PNG / raw-grid export
    annotate     time-frequency boxes and YOLO-layout label files
    dataset      deterministic full-dataset generation and manifests
    evaluate     IoU matching, AP, mAP50 / mAP50:95 with SNR strata
    cli          batch command-line interface
"""

from .annotate import Annotation, annotate_nist, bbox_for_emitter, est_bandwidth
from .dataset import DatasetConfig, frame_seed, generate, plan
from .errors import (
    ConfigError,
    DomainError,
    ParseError,
    RadsynthError,
    SchemaError,
)
from .evaluate import Detection, GroundTruth, iou, map_suite
from .scene import (
    EmitterInstance,
    Env,
    Frame,
    add_awgn,
    compose_frame,
    sample_emitter,
    sample_scene,
)
from .spectrogram import ResolutionPreset, Spectrogram, get_preset, max_hold, render, spectrogram, stft_magnitude
from .waveform import (
    CodeFamily,
    IqBuffer,
    PhaseCode,
    RadarClass,
    WaveformParams,
    code_generate,
    synth_chirped,
    synth_pulsed,
    synthesize,
)

__version__ = "0.1.0"
