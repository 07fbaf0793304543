import numpy as np
import pytest

from conftest import SR, sine
from promrep import augment, dsp
from promrep.errors import InvalidArgument


def test_spectral_length_and_rate():
    x = sine(200.0, 0.5)
    y = augment.augment_spectral(x, 0.25)
    assert y.sample_rate == SR
    assert len(y) == round(len(x) * 2 ** -0.25)
    z = augment.augment_spectral(x, -1.0, target_rate=16000)
    assert z.sample_rate == 16000


def test_spectral_moves_tone():
    y = augment.augment_spectral(sine(200.0, 1.0), 1.0)
    spec = dsp.stft_magnitude(y, fft_size=4096, win_samples=4096)
    assert abs(spec.freqs[np.argmax(spec.magnitudes[5])] - 400.0) <= spec.bin_hz


def test_spectral_zero_is_identity():
    x = sine(200.0, 0.1)
    assert np.array_equal(augment.augment_spectral(x, 0.0).samples, x.samples)


def test_spectral_range():
    with pytest.raises(InvalidArgument):
        augment.augment_spectral(sine(200.0, 0.1), 1.2)


class TestVolume:
    def test_silence_first_draw(self):
        rng = np.random.default_rng(0)
        out, r_l = augment.augment_volume(dsp.AudioBuffer(np.zeros(100), SR), rng)
        assert r_l == np.random.default_rng(0).uniform(-1, 1)
        assert not out.samples.any()

    def test_half_peak_bound(self):
        x = dsp.AudioBuffer(np.array([0.5, -0.25, 0.1]), SR)
        for seed in range(200):
            out, r_l = augment.augment_volume(x, np.random.default_rng(seed))
            assert 12 * r_l <= 20 * np.log10(2) + 1e-12
            assert np.max(np.abs(out.samples)) <= 1.0

    def test_deterministic(self):
        x = sine(300.0, 0.1, amp=0.6)
        a = augment.augment_volume(x, np.random.default_rng(7))
        b = augment.augment_volume(x, np.random.default_rng(7))
        assert a[1] == b[1] and np.array_equal(a[0].samples, b[0].samples)

    def test_rejects_clipped_input(self):
        with pytest.raises(InvalidArgument):
            augment.augment_volume(dsp.AudioBuffer(np.array([1.5]), SR), np.random.default_rng(0))

    def test_bounded_retries(self, monkeypatch):
        monkeypatch.setattr(augment, "MAX_DRAWS", 3)

        class Always:
            def uniform(self, lo, hi):
                return 0.9

        with pytest.warns(UserWarning):
            out, r_l = augment.augment_volume(dsp.AudioBuffer(np.array([1.0]), SR), Always())
        assert r_l == 0.0 and out.samples[0] == 1.0


def test_pair():
    pair = augment.make_augmented_pair(sine(150.0, 0.3, amp=0.5), 16000, np.random.default_rng(3))
    assert pair.spectral.sample_rate == 16000 and pair.volume.sample_rate == SR
    assert -1 <= pair.r_f <= 1 and -1 <= pair.r_l <= 1


def test_spec_validation():
    with pytest.raises(InvalidArgument):
        augment.AugmentSpec(r_f=2.0, r_l=0.0, source_rate=SR, target_rate=SR)
