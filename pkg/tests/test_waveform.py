"""Phase-code and waveform synthesis tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radsynth.errors import DomainError
from radsynth.waveform import (
    CODE_LENGTHS,
    CLASS_TO_FAMILY,
    CodeFamily,
    RadarClass,
    WaveformParams,
    code_generate,
    emission_duration,
    synth_chirped,
    synth_pulsed,
    synthesize,
    wrap_phase,
)


def chips_to_complex(code):
    return np.exp(1j * code.chips)


def aperiodic_autocorr(x):
    """Brute-force aperiodic autocorrelation over all non-negative lags."""
    n = len(x)
    return np.array(
        [np.sum(x[k:] * np.conj(x[: n - k])) for k in range(n)]
    )


def periodic_autocorr(x):
    """Brute-force periodic (cyclic) autocorrelation over all lags."""
    n = len(x)
    return np.array([np.sum(x * np.conj(np.roll(x, -k))) for k in range(n)])


class TestPhaseCodes:
    @pytest.mark.parametrize("n", [5, 7, 11, 13])
    def test_barker_peak_to_sidelobe(self, n):
        x = chips_to_complex(code_generate(CodeFamily.BARKER, n))
        acf = np.abs(aperiodic_autocorr(x))
        assert acf[0] == pytest.approx(n, abs=1e-12)
        assert acf[1:].max() == pytest.approx(1.0, abs=1e-12)

    def test_barker13_example(self):
        x = chips_to_complex(code_generate(CodeFamily.BARKER, 13))
        acf = np.abs(aperiodic_autocorr(x))
        assert acf[0] == pytest.approx(13.0, abs=1e-12)
        assert acf[1:].max() <= 1.0 + 1e-12

    def test_zadoff_chu_length_one_is_trivial(self):
        for root in (1, 2, 7):
            code = code_generate(CodeFamily.ZADOFF_CHU, 1, root=root)
            assert code.n_chip == 1
            assert code.chips[0] == 0.0

    def test_frank_16_is_dft_matrix_phases(self):
        code = code_generate(CodeFamily.FRANK, 16)
        m = 4
        # Oracle: the m x m matrix of m-th roots of unity, read row-major.
        w = np.exp(2j * np.pi * np.outer(np.arange(m), np.arange(m)) / m)
        expected = wrap_phase(np.angle(w.ravel()))
        np.testing.assert_allclose(
            np.exp(1j * code.chips), np.exp(1j * expected), atol=1e-12
        )

    @pytest.mark.parametrize("family", list(CodeFamily))
    def test_all_codes_unit_modulus_and_wrapped(self, family):
        for n in CODE_LENGTHS[family]:
            code = code_generate(family, n)
            assert len(code.chips) == n
            assert np.all(code.chips >= -math.pi)
            assert np.all(code.chips < math.pi)
            np.testing.assert_allclose(
                np.abs(chips_to_complex(code)), 1.0, atol=1e-12
            )

    def test_zadoff_chu_cazac_all_roots(self):
        for n in CODE_LENGTHS[CodeFamily.ZADOFF_CHU]:
            for root in range(1, n):
                if math.gcd(root, n) != 1:
                    continue
                x = chips_to_complex(
                    code_generate(CodeFamily.ZADOFF_CHU, n, root=root)
                )
                acf = np.abs(periodic_autocorr(x)) / n
                assert acf[0] == pytest.approx(1.0, abs=1e-12)
                assert acf[1:].max() < 1e-9

    def test_invalid_length_names_allowed_set(self):
        with pytest.raises(DomainError, match=r"5, 7, 11, 13"):
            code_generate(CodeFamily.BARKER, 6)
        with pytest.raises(DomainError, match=r"4, 9, 16"):
            code_generate(CodeFamily.FRANK, 8)
        with pytest.raises(DomainError, match="odd"):
            code_generate(CodeFamily.ZADOFF_CHU, 4)

    def test_zc_root_must_be_coprime(self):
        with pytest.raises(DomainError, match="coprime"):
            code_generate(CodeFamily.ZADOFF_CHU, 9, root=3)

    def test_deterministic(self):
        a = code_generate(CodeFamily.P3, 11)
        b = code_generate(CodeFamily.P3, 11)
        np.testing.assert_array_equal(a.chips, b.chips)

    @pytest.mark.parametrize("n", [4, 16])
    def test_p2_and_px_conjugate_at_even_m(self, n):
        p2 = chips_to_complex(code_generate(CodeFamily.P2, n))
        px = chips_to_complex(code_generate(CodeFamily.PX, n))
        np.testing.assert_allclose(px, np.conj(p2), atol=1e-12)


class TestSynthPulsed:
    def test_rect_two_pulse_timing(self):
        params = WaveformParams(
            radar_class=RadarClass.RECT, t_pw=10e-6, f_prf=50e3, n_pulse=2
        )
        buf = synth_pulsed(params, 500e6)
        assert len(buf) == 15000
        np.testing.assert_allclose(np.abs(buf.samples[0:5000]), 1.0, atol=1e-12)
        np.testing.assert_array_equal(buf.samples[5000:10000], 0.0)
        np.testing.assert_allclose(np.abs(buf.samples[10000:15000]), 1.0, atol=1e-12)

    def test_rect_mid_pulse_value(self):
        params = WaveformParams(
            radar_class=RadarClass.RECT, t_pw=10e-6, f_prf=50e3, n_pulse=2
        )
        buf = synth_pulsed(params, 500e6)
        assert buf.samples[2500] == 1.0 + 0.0j

    def test_barker_chips_piecewise_constant(self):
        phi = 0.2
        code = code_generate(CodeFamily.BARKER, 13)
        params = WaveformParams(
            radar_class=RadarClass.BARKER,
            t_pw=13e-6,
            f_prf=20e3,
            n_pulse=1,
            phase_code=code,
            phi=phi,
        )
        buf = synth_pulsed(params, 500e6)
        assert len(buf) == 6500
        chip_len = 500  # 1 us chips at 500 MHz
        for c in range(13):
            seg = buf.samples[c * chip_len : (c + 1) * chip_len]
            expected = np.exp(1j * (phi + code.chips[c]))
            np.testing.assert_allclose(seg, expected, atol=1e-12)

    def test_overlapping_pulses_rejected(self):
        with pytest.raises(DomainError, match="overlap"):
            WaveformParams(
                radar_class=RadarClass.RECT, t_pw=25e-6, f_prf=50e3, n_pulse=2
            )

    def test_energy_equals_active_sample_count(self):
        params = WaveformParams(
            radar_class=RadarClass.RECT, t_pw=7e-6, f_prf=31e3, n_pulse=5
        )
        buf = synth_pulsed(params, 500e6)
        active = int(np.count_nonzero(buf.samples))
        energy = float(np.sum(np.abs(buf.samples) ** 2))
        assert energy == pytest.approx(active, rel=1e-12)

    def test_gap_samples_exactly_zero(self):
        params = WaveformParams(
            radar_class=RadarClass.RECT, t_pw=3e-6, f_prf=17e3, n_pulse=4
        )
        buf = synth_pulsed(params, 500e6)
        mods = np.abs(buf.samples)
        assert np.all((mods == 0.0) | (np.abs(mods - 1.0) < 1e-12))
        assert np.any(mods == 0.0)


def phase_diff_freq(samples, sample_rate):
    """Instantaneous-frequency estimate from finite phase differences."""
    return (
        np.angle(samples[1:] * np.conj(samples[:-1])) * sample_rate / (2 * np.pi)
    )


class TestSynthChirped:
    def test_fmcw_contiguous_and_midpoint_freq(self):
        params = WaveformParams(
            radar_class=RadarClass.FMCW, b_chirp=100e6, t_chirp=10e-6, n_chirp=3
        )
        buf = synth_chirped(params, 500e6, contiguous=True)
        assert len(buf) == 15000  # 30 us at 500 MHz
        np.testing.assert_allclose(np.abs(buf.samples), 1.0, atol=1e-12)
        freq = phase_diff_freq(buf.samples, 500e6)
        chirp_len = 5000
        for k in range(3):
            mid = k * chirp_len + chirp_len // 2
            est = freq[mid - 5 : mid + 5].mean()
            assert abs(est) < 100e6 / chirp_len  # within one freq step of 0

    def test_lfm_first_sample(self):
        params = WaveformParams(
            radar_class=RadarClass.LFM,
            b_chirp=20e6,
            t_chirp=20e-6,
            n_chirp=1,
            f_prf=10e3,
        )
        buf = synth_chirped(params, 500e6, contiguous=False)
        assert buf.samples[0] == 1.0 + 0.0j

    def test_lfm_pri_spacing(self):
        params = WaveformParams(
            radar_class=RadarClass.LFM,
            b_chirp=10e6,
            t_chirp=10e-6,
            n_chirp=3,
            f_prf=25e3,
        )
        buf = synth_chirped(params, 500e6, contiguous=False)
        # 2 PRIs of 40 us plus one 10 us chirp.
        assert len(buf) == 45000
        np.testing.assert_allclose(np.abs(buf.samples[:5000]), 1.0, atol=1e-12)
        np.testing.assert_array_equal(buf.samples[5000:20000], 0.0)
        np.testing.assert_allclose(
            np.abs(buf.samples[20000:25000]), 1.0, atol=1e-12
        )

    def test_instantaneous_frequency_slope(self):
        b, t_c, fs = 50e6, 40e-6, 500e6
        params = WaveformParams(
            radar_class=RadarClass.FMCW, b_chirp=b, t_chirp=t_c, n_chirp=1
        )
        buf = synth_chirped(params, fs, contiguous=True)
        freq = phase_diff_freq(buf.samples, fs)
        n = len(freq)
        lo, hi = int(0.1 * n), int(0.9 * n)
        t = np.arange(n)[lo:hi] / fs
        slope = np.polyfit(t, freq[lo:hi], 1)[0]
        assert slope == pytest.approx(b / t_c, rel=0.01)
        # Frequency sweeps -b/2 .. +b/2 linearly; spot-check interior values.
        expected = -b / 2 + b * (np.arange(n)[lo:hi] + 0.5) / (t_c * fs)
        assert np.allclose(freq[lo:hi], expected, rtol=0, atol=0.01 * b)

    def test_chirp_99pct_power_bandwidth(self):
        b, t_c, fs = 10e6, 50e-6, 500e6
        params = WaveformParams(
            radar_class=RadarClass.FMCW, b_chirp=b, t_chirp=t_c, n_chirp=1
        )
        buf = synth_chirped(params, fs, contiguous=True)
        # Periodogram oracle: integrate power, take the 0.5%..99.5% band.
        spec = np.fft.fftshift(np.fft.fft(buf.samples, 1 << 16))
        power = np.abs(spec) ** 2
        freqs = np.fft.fftshift(np.fft.fftfreq(1 << 16, d=1 / fs))
        cum = np.cumsum(power) / power.sum()
        f_lo = freqs[np.searchsorted(cum, 0.005)]
        f_hi = freqs[np.searchsorted(cum, 0.995)]
        assert (f_hi - f_lo) == pytest.approx(b, rel=0.20)

    def test_bandwidth_above_sample_rate_rejected(self):
        params = WaveformParams(
            radar_class=RadarClass.FMCW, b_chirp=20e6, t_chirp=10e-6, n_chirp=1
        )
        with pytest.raises(DomainError, match="sample_rate"):
            synth_chirped(params, 10e6, contiguous=True)


class TestParamsAndDispatch:
    def test_irrelevant_fields_rejected(self):
        with pytest.raises(DomainError):
            WaveformParams(
                radar_class=RadarClass.RECT,
                t_pw=1e-6,
                f_prf=10e3,
                n_pulse=2,
                b_chirp=1e6,
            )
        with pytest.raises(DomainError, match="f_prf"):
            WaveformParams(
                radar_class=RadarClass.LFM, b_chirp=1e6, t_chirp=1e-6, n_chirp=1
            )

    def test_phi_range_enforced(self):
        with pytest.raises(DomainError, match="phi"):
            WaveformParams(
                radar_class=RadarClass.RECT,
                t_pw=1e-6,
                f_prf=10e3,
                n_pulse=2,
                phi=1.0,
            )

    def test_coded_class_requires_matching_code(self):
        code = code_generate(CodeFamily.FRANK, 16)
        with pytest.raises(DomainError, match="match"):
            WaveformParams(
                radar_class=RadarClass.P1,
                t_pw=1e-5,
                f_prf=10e3,
                n_pulse=2,
                phase_code=code,
            )

    @pytest.mark.parametrize(
        "cls", [RadarClass.RECT, RadarClass.LFM, RadarClass.FMCW, RadarClass.P4]
    )
    def test_synthesize_dispatch_and_duration(self, cls):
        if cls in (RadarClass.LFM, RadarClass.FMCW):
            params = WaveformParams(
                radar_class=cls,
                b_chirp=10e6,
                t_chirp=10e-6,
                n_chirp=2,
                f_prf=20e3 if cls is RadarClass.LFM else None,
            )
        else:
            code = (
                code_generate(CodeFamily.P4, 8)
                if cls is RadarClass.P4
                else None
            )
            params = WaveformParams(
                radar_class=cls,
                t_pw=8e-6,
                f_prf=25e3,
                n_pulse=3,
                phase_code=code,
            )
        fs = 500e6
        buf = synthesize(params, fs)
        assert len(buf) == round(emission_duration(params) * fs)


@settings(max_examples=60, deadline=None)
@given(
    n=st.sampled_from(CODE_LENGTHS[CodeFamily.ZADOFF_CHU]),
    root=st.integers(min_value=1, max_value=14),
)
def test_zadoff_chu_cazac_property(n, root):
    if math.gcd(root, n) != 1:
        root = 1
    x = np.exp(1j * code_generate(CodeFamily.ZADOFF_CHU, n, root=root).chips)
    acf = np.abs(periodic_autocorr(x)) / n
    assert acf[1:].max() < 1e-9
    np.testing.assert_allclose(np.abs(x), 1.0, atol=1e-12)
