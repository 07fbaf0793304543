import numpy as np
import pytest

from conftest import SR, noisy_sine, sine
from promrep import archive, dsp, represent, salience
from promrep.errors import FormatError, InvalidArgument
from promrep.represent import GRID_HZ, PHONEMES, Posteriorgram


def test_interpolation_recovers_parabola_vertex():
    # log magnitude that is exactly a parabola peaking at bin 10.3
    bins = np.arange(32.0)
    log_mag = -0.5 * (bins - 10.3) ** 2
    got = salience.interpolate_magnitude(log_mag[None, :], np.array([10.3, 9.8, 11.0]))[0]
    np.testing.assert_allclose(np.log(got), -0.5 * (np.array([10.3, 9.8, 11.0]) - 10.3) ** 2,
                               atol=1e-12)


def test_interpolation_past_nyquist_is_zero():
    log_mag = np.zeros((1, 16))
    assert salience.interpolate_magnitude(log_mag, np.array([15.5]))[0, 0] == 0.0


def test_posteriorgram_shape_and_rows():
    post = salience.pitch_posteriorgram(sine(220.0))
    assert post.probs.shape == (dsp.num_frames(SR), 1440)
    np.testing.assert_allclose(post.probs.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(post.labels, GRID_HZ)


@pytest.mark.parametrize("freq", [55.0, 110.0, 261.6, 440.0, 880.0])
def test_decoded_tone(freq, rng):
    post = salience.pitch_posteriorgram(noisy_sine(freq, rng))
    hz = represent.decode_pitch(post)
    assert np.median(represent.cents(hz[4:-4], freq)) < 10


def test_silence_is_uniform():
    post = salience.pitch_posteriorgram(dsp.AudioBuffer(np.zeros(4096), SR))
    np.testing.assert_allclose(post.probs, 1.0 / 1440)
    assert np.all(represent.periodicity(post) == 0.0)


def test_too_short():
    with pytest.raises(InvalidArgument):
        salience.pitch_posteriorgram(dsp.AudioBuffer(np.zeros(100), SR))


class TestLoadPosteriorgram:
    def _write(self, path, probs, labels=PHONEMES):
        archive.write_archive(path, {"ppg": archive.Tensor(probs, list(labels))})

    def test_round_trip(self, tmp_path, rng):
        probs = rng.dirichlet(np.ones(40), size=12)
        salience.save_posteriorgram(tmp_path / "p.pmrp", Posteriorgram(probs, PHONEMES))
        back = salience.load_posteriorgram(tmp_path / "p.pmrp", PHONEMES)
        np.testing.assert_allclose(back.probs, probs, atol=1e-6)
        np.testing.assert_allclose(back.probs.sum(axis=1), 1.0, atol=1e-12)

    def test_label_mismatch(self, tmp_path):
        self._write(tmp_path / "p.pmrp", np.full((2, 40), 1 / 40), PHONEMES[::-1])
        with pytest.raises(FormatError, match="label"):
            salience.load_posteriorgram(tmp_path / "p.pmrp", PHONEMES)

    @pytest.mark.parametrize("value,match", [(np.nan, "NaN"), (-0.1, "negative"), (0.5, "sums")])
    def test_bad_rows(self, tmp_path, value, match):
        probs = np.full((3, 40), 1 / 40)
        probs[1, 0] = value
        self._write(tmp_path / "p.pmrp", probs)
        with pytest.raises(FormatError, match=match) as info:
            salience.load_posteriorgram(tmp_path / "p.pmrp", PHONEMES)
        assert "frame 1" in str(info.value)
