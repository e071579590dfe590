"""Parameter sampling, composition, and noise calibration tests."""

import math

import numpy as np
import pytest

from radsynth.dataset import frame_rng
from radsynth.errors import DomainError
from radsynth.scene import (
    CLASS_ORDER,
    EmitterInstance,
    Env,
    SNR_LEVELS_DB,
    WIDEBAND_DURATION,
    WIDEBAND_FRAME_SAMPLES,
    WIDEBAND_SAMPLE_RATE,
    add_awgn,
    compose_frame,
    empirical_snr_db,
    place_emitter,
    sample_emitter,
    sample_scene,
)
from radsynth.waveform import IqBuffer, RadarClass, emission_duration, synthesize


def rng(seed=0):
    return frame_rng(seed)


def on_grid(value, low, step):
    k = (value - low) / step
    return abs(k - round(k)) < 1e-6


class TestSampling:
    def test_rect_parameter_grids(self):
        r = rng(1)
        for _ in range(300):
            e = sample_emitter(RadarClass.RECT, r)
            p = e.params
            assert 1e-6 <= p.t_pw <= 100e-6 and on_grid(p.t_pw, 1e-6, 1e-6)
            assert 10e3 <= p.f_prf <= 50e3 and on_grid(p.f_prf, 10e3, 1e3)
            assert 2 <= p.n_pulse <= 10
            assert p.t_pw < 0.9 / p.f_prf

    def test_lfm_parameter_grids(self):
        r = rng(2)
        for _ in range(300):
            e = sample_emitter(RadarClass.LFM, r)
            p = e.params
            assert 10e6 <= p.b_chirp <= 100e6 and on_grid(p.b_chirp, 10e6, 1e6)
            assert 10e-6 <= p.t_chirp <= 100e-6 and on_grid(p.t_chirp, 10e-6, 10e-6)
            assert 1 <= p.n_chirp <= 20
            assert p.t_chirp < 0.9 / p.f_prf

    def test_common_grids_and_placement(self):
        r = rng(3)
        for _ in range(300):
            cls = CLASS_ORDER[int(r.integers(0, len(CLASS_ORDER)))]
            e = sample_emitter(cls, r)
            assert -250e6 <= e.f_c <= 250e6 and on_grid(e.f_c, -250e6, 10e6)
            assert -math.pi / 4 - 1e-12 <= e.params.phi <= math.pi / 4 + 1e-12
            assert on_grid(e.params.phi, -math.pi / 4, math.pi / 180)
            assert 0 <= e.t_s < WIDEBAND_DURATION
            d = emission_duration(e.params)
            if d <= WIDEBAND_DURATION:
                assert e.t_s + d <= WIDEBAND_DURATION + 1e-12

    def test_coded_classes_carry_codes(self):
        r = rng(4)
        for cls in (RadarClass.BARKER, RadarClass.ZADOFF_CHU, RadarClass.P2):
            e = sample_emitter(cls, r)
            assert e.params.phase_code is not None
            assert e.params.phase_code.family.value == cls.value

    def test_sparse_density(self):
        r = rng(5)
        empty = sum(1 for _ in range(4000) if not sample_scene(Env.SPARSE_1T, r))
        assert empty / 4000 == pytest.approx(0.5, abs=0.03)

    def test_dense_density_and_count_range(self):
        r = rng(6)
        counts = [len(sample_scene(Env.DENSE_9T, r)) for _ in range(4000)]
        counts = np.array(counts)
        assert (counts == 0).mean() == pytest.approx(0.1, abs=0.02)
        assert counts.max() == 9
        assert set(counts[counts > 0]) == set(range(1, 10))

    def test_nist_env_not_sampled(self):
        with pytest.raises(DomainError):
            sample_scene(Env.NIST_LIKE, rng(7))

    def test_reproducible_given_stream(self):
        a = sample_emitter(RadarClass.FMCW, rng(42))
        b = sample_emitter(RadarClass.FMCW, rng(42))
        assert a == b


class TestCompose:
    def test_empty_scene_is_zero_frame(self):
        buf = compose_frame([], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        assert len(buf) == WIDEBAND_FRAME_SAMPLES
        assert not np.any(buf.samples)

    def test_identity_placement(self):
        e = sample_emitter(RadarClass.RECT, rng(8))
        e = EmitterInstance(e.radar_class, e.params, t_s=0.0, f_c=0.0)
        frame = compose_frame([e], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        raw = synthesize(e.params, WIDEBAND_SAMPLE_RATE)
        np.testing.assert_array_equal(frame.samples[: len(raw)], raw.samples)
        assert not np.any(frame.samples[len(raw) :])

    def test_energy_additivity_disjoint_in_time(self):
        p1 = sample_emitter(RadarClass.RECT, rng(9)).params
        p2 = sample_emitter(RadarClass.FMCW, rng(10)).params
        e1 = EmitterInstance(RadarClass.RECT, p1, t_s=0.0, f_c=-50e6)
        e2 = EmitterInstance(
            RadarClass.FMCW,
            p2,
            t_s=WIDEBAND_DURATION - emission_duration(p2) - 1e-6,
            f_c=100e6,
        )
        assert emission_duration(p1) < e2.t_s  # genuinely disjoint
        frame = compose_frame([e1, e2], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        w1 = synthesize(p1, WIDEBAND_SAMPLE_RATE)
        w2 = synthesize(p2, WIDEBAND_SAMPLE_RATE)
        e_frame = np.sum(np.abs(frame.samples) ** 2)
        e_parts = np.sum(np.abs(w1.samples) ** 2) + np.sum(np.abs(w2.samples) ** 2)
        assert e_frame == pytest.approx(e_parts, rel=1e-6)

    def test_linearity_exact(self):
        a = sample_emitter(RadarClass.P3, rng(11))
        b = sample_emitter(RadarClass.LFM, rng(12))
        both = compose_frame([a, b], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        just_a = compose_frame([a], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        just_b = compose_frame([b], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        np.testing.assert_array_equal(
            both.samples, just_a.samples + just_b.samples
        )

    def test_frequency_shift_preserves_modulus(self):
        e = sample_emitter(RadarClass.FMCW, rng(13))
        e = EmitterInstance(e.radar_class, e.params, t_s=e.t_s, f_c=170e6)
        start, w = place_emitter(e, WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        raw = synthesize(e.params, WIDEBAND_SAMPLE_RATE)
        np.testing.assert_allclose(
            np.abs(w), np.abs(raw.samples[: len(w)]), atol=1e-12
        )

    def test_truncated_at_frame_end(self):
        p = sample_emitter(RadarClass.FMCW, rng(14)).params
        e = EmitterInstance(
            RadarClass.FMCW, p, t_s=WIDEBAND_DURATION * 0.999, f_c=0.0
        )
        frame = compose_frame([e], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        assert len(frame) == WIDEBAND_FRAME_SAMPLES

    def test_out_of_frame_emitter_rejected(self):
        p = sample_emitter(RadarClass.RECT, rng(15)).params
        e = EmitterInstance(RadarClass.RECT, p, t_s=WIDEBAND_DURATION, f_c=0.0)
        with pytest.raises(DomainError, match="t_s"):
            compose_frame([e], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)


class TestAwgn:
    def test_background_noise_statistics(self):
        clean = IqBuffer(np.zeros(1_000_000, dtype=complex), WIDEBAND_SAMPLE_RATE)
        noisy = add_awgn(clean, 12.0, rng(16))
        noise = noisy.samples
        assert abs(noise.real.mean()) < 0.005
        assert abs(noise.imag.mean()) < 0.005
        # Background frames use unit noise power: sigma^2/2 per component.
        assert noise.real.var() == pytest.approx(0.5, rel=0.01)
        assert noise.imag.var() == pytest.approx(0.5, rel=0.01)

    def test_infinite_snr_is_identity(self):
        e = sample_emitter(RadarClass.RECT, rng(17))
        clean = compose_frame([e], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        out = add_awgn(clean, math.inf, rng(18))
        np.testing.assert_array_equal(out.samples, clean.samples)

    def test_unit_power_full_frame_at_0db(self):
        n = 1_000_000
        clean = IqBuffer(np.ones(n, dtype=complex), WIDEBAND_SAMPLE_RATE)
        noisy = add_awgn(clean, 0.0, rng(19), levels=None)
        measured = np.mean(np.abs(noisy.samples - clean.samples) ** 2)
        assert measured == pytest.approx(1.0, rel=0.01)

    def test_snr_grid_enforced(self):
        clean = IqBuffer(np.ones(100, dtype=complex), WIDEBAND_SAMPLE_RATE)
        with pytest.raises(DomainError, match="grid"):
            add_awgn(clean, 7.0, rng(20))

    def test_reproducible(self):
        e = sample_emitter(RadarClass.LFM, rng(21))
        clean = compose_frame([e], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        a = add_awgn(clean, -4.0, rng(22))
        b = add_awgn(clean, -4.0, rng(22))
        np.testing.assert_array_equal(a.samples, b.samples)

    @pytest.mark.parametrize("snr_db", SNR_LEVELS_DB)
    def test_empirical_snr_within_tolerance(self, snr_db):
        e = sample_emitter(RadarClass.FMCW, rng(int(23 + snr_db)))
        clean = compose_frame([e], WIDEBAND_DURATION, WIDEBAND_SAMPLE_RATE)
        noisy = add_awgn(clean, snr_db, rng(int(100 + snr_db)))
        assert empirical_snr_db(clean, noisy) == pytest.approx(snr_db, abs=0.2)

    def test_empirical_snr_needs_signal(self):
        clean = IqBuffer(np.zeros(10, dtype=complex), WIDEBAND_SAMPLE_RATE)
        with pytest.raises(DomainError):
            empirical_snr_db(clean, clean)
