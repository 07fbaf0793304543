import numpy as np
import pytest

from conftest import SR, sine
from promrep import dsp
from promrep.errors import FormatError, InvalidArgument


class TestFraming:
    @pytest.mark.parametrize("n,expected", [(1024, 1), (1279, 1), (1280, 2), (22050, 83)])
    def test_frame_count(self, n, expected):
        assert dsp.num_frames(n) == expected
        assert dsp.stft_magnitude(dsp.AudioBuffer(np.zeros(n), SR)).num_frames == expected

    def test_long_window_shares_grid(self):
        x = np.arange(5000, dtype=float)
        short = dsp.frame_signal(x, 1024, 256)
        long = dsp.frame_signal(x, 4096, 256, grid=1024)
        assert short.shape[0] == long.shape[0]
        # both windows are centered on t * hop + 512
        np.testing.assert_array_equal(long[:, 2048], short[:, 512])
        np.testing.assert_array_equal(short[:, 512], np.arange(short.shape[0]) * 256 + 512)

    def test_too_short(self):
        with pytest.raises(InvalidArgument):
            dsp.stft_magnitude(dsp.AudioBuffer(np.zeros(1000), SR))

    def test_bad_geometry(self):
        with pytest.raises(InvalidArgument):
            dsp.stft_magnitude(dsp.AudioBuffer(np.zeros(4096), SR), fft_size=512)


def test_stft_peak_at_tone():
    spec = dsp.stft_magnitude(sine(1000.0))
    peak = spec.freqs[np.argmax(spec.magnitudes[10])]
    assert abs(peak - 1000.0) <= spec.bin_hz / 2


def test_hann_is_periodic():
    w = dsp.hann(8)
    assert w[0] == 0.0 and w[4] == pytest.approx(1.0)
    np.testing.assert_allclose(w[1:], w[1:][::-1])


class TestAWeighting:
    def test_reference_points(self):
        assert abs(dsp.a_weight_db(1000.0)) < 0.01
        # IEC 61672 tabulated values
        assert dsp.a_weight_db(100.0) == pytest.approx(-19.1, abs=0.1)
        assert dsp.a_weight_db(10000.0) == pytest.approx(-2.5, abs=0.1)

    def test_dc_clamped(self):
        assert dsp.a_weight_db(0.0) == dsp.A_WEIGHT_FLOOR_DB


def test_gain_scales_amplitude():
    x = sine(440.0, amp=0.25)
    np.testing.assert_allclose(dsp.gain(x, 20 * np.log10(2)).samples, 2 * x.samples)


class TestResample:
    def test_identity_is_exact(self):
        x = sine(300.0, 0.2)
        assert np.array_equal(dsp.resample(x, SR, SR).samples, x.samples)

    @pytest.mark.parametrize("target", [16000, 44100, 11025])
    def test_length_and_tone(self, target):
        x = sine(300.0, 0.5)
        y = dsp.resample(x, SR, target)
        assert len(y) == round(len(x) * target / SR)
        ref = sine(300.0, len(y) / target, sr=target).samples[:len(y)]
        mid = slice(200, len(y) - 200)
        assert np.max(np.abs(y.samples[mid] - ref[mid])) < 1e-3

    def test_anti_aliasing(self):
        x = sine(9000.0, 0.5)
        y = dsp.resample(x, SR, 11025).samples[200:-200]
        assert np.sqrt(np.mean(y ** 2)) < 1e-3

    def test_rejects_bad_rate(self):
        with pytest.raises(InvalidArgument):
            dsp.resample(sine(100.0, 0.1), 0, SR)


class TestWav:
    def test_float_round_trip(self, tmp_path):
        x = sine(220.0, 0.1, amp=0.5)
        dsp.write_wav(tmp_path / "a.wav", x)
        y = dsp.read_wav(tmp_path / "a.wav")
        assert y.sample_rate == SR
        np.testing.assert_array_equal(y.samples, x.samples.astype(np.float32))

    def test_pcm16_scaling(self, tmp_path):
        x = dsp.AudioBuffer(np.array([0.0, 0.5, -1.0]), SR)
        dsp.write_wav(tmp_path / "b.wav", x, subtype="pcm16")
        np.testing.assert_array_equal(dsp.read_wav(tmp_path / "b.wav").samples, [0.0, 0.5, -1.0])

    def test_stereo_mixed_to_mono(self, tmp_path):
        from scipy.io import wavfile
        wavfile.write(tmp_path / "s.wav", SR, np.array([[0.5, 0.1], [0.0, -0.2]], dtype=np.float32))
        np.testing.assert_allclose(dsp.read_wav(tmp_path / "s.wav").samples, [0.3, -0.1], rtol=1e-6)

    def test_garbage(self, tmp_path):
        (tmp_path / "bad.wav").write_bytes(b"not a wav")
        with pytest.raises(FormatError):
            dsp.read_wav(tmp_path / "bad.wav")


def test_audio_buffer_validation():
    with pytest.raises(InvalidArgument):
        dsp.AudioBuffer(np.zeros((2, 2)), SR)
    with pytest.raises(InvalidArgument):
        dsp.AudioBuffer([0.0, np.nan], SR)
