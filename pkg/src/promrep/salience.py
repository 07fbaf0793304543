"""DSP pitch posteriorgrams and loading of externally computed posteriorgrams.

The pitch front-end is harmonic summation: for each candidate frequency on
the 5-cent grid, sum the spectral magnitude at its first five harmonics
with 1/k weights, square, and normalize per frame.  Magnitudes between FFT
bins come from a parabola fitted to the log magnitude of the three nearest
bins, so salience peaks land between bins instead of snapping to them.
"""

import numpy as np

from . import archive, dsp
from .errors import FormatError, InvalidArgument
from .represent import GRID_HZ, Posteriorgram

SALIENCE_FFT = 4096
NUM_HARMONICS = 5
SHARPNESS = 2.0
SILENCE_DB = -80.0
ROW_SUM_TOLERANCE = 1e-4


def salience_spectrogram(audio):
    """4096-point magnitude spectrogram on the shared frame grid."""
    return dsp.stft_magnitude(audio, SALIENCE_FFT, SALIENCE_FFT, dsp.HOP_SIZE,
                              grid_samples=dsp.WINDOW_SIZE)


def interpolate_magnitude(log_mag, positions):
    """Magnitude at fractional bin ``positions`` from a 3-bin log parabola.

    The parabola is fitted around whichever of the two bins enclosing a
    position has the larger magnitude.

    Parameters
    ----------
    log_mag : np.ndarray [shape=(T, F)]
    positions : np.ndarray [shape=(P,)]
        Fractional FFT bin positions; those beyond the last bin give 0.

    Returns
    -------
    np.ndarray [shape=(T, P)]
    """
    F = log_mag.shape[1]
    lo = np.clip(np.floor(positions).astype(np.int64), 0, F - 2)
    # fit around the louder of the two neighbors so a spectral peak is
    # always described by its own parabola and the vertex is reachable
    center = np.where(log_mag[:, lo] >= log_mag[:, lo + 1], lo, lo + 1)
    center = np.clip(center, 1, F - 2)
    delta = positions - center
    a = np.take_along_axis(log_mag, center - 1, axis=1)
    b = np.take_along_axis(log_mag, center, axis=1)
    c = np.take_along_axis(log_mag, center + 1, axis=1)
    fitted = b + 0.5 * delta * (c - a) + 0.5 * delta * delta * (a - 2.0 * b + c)
    mags = np.exp(fitted)
    mags[:, positions > F - 1] = 0.0
    return mags


def salience(spec, harmonics=NUM_HARMONICS):
    """Harmonic-summation salience over the pitch grid, shape ``(T, 1440)``."""
    log_mag = np.log(spec.magnitudes + 1e-12)
    sal = np.zeros((spec.num_frames, GRID_HZ.shape[0]))
    for k in range(1, harmonics + 1):
        sal += interpolate_magnitude(log_mag, k * GRID_HZ / spec.bin_hz) / k
    return np.maximum(sal, 0.0)


def frame_level_db(audio):
    """Mean-square level of each grid frame in dB."""
    frames = dsp.frame_signal(audio.samples, dsp.WINDOW_SIZE, dsp.HOP_SIZE)
    return 10.0 * np.log10(np.mean(frames * frames, axis=1) + 1e-20)


def pitch_posteriorgram(audio):
    """Pitch posteriorgram over the 1440-bin grid from harmonic salience.

    Frames quieter than -80 dB get the uniform distribution.  Audio must
    already be at the analysis rate.
    """
    if len(audio) < dsp.WINDOW_SIZE:
        raise InvalidArgument(
            f"audio has {len(audio)} samples, shorter than one analysis window ({dsp.WINDOW_SIZE})")
    spec = salience_spectrogram(audio)
    sal = salience(spec) ** SHARPNESS
    total = sal.sum(axis=1, keepdims=True)
    silent = (frame_level_db(audio) < SILENCE_DB) | (total[:, 0] <= 0)
    probs = np.where(total > 0, sal / np.where(total > 0, total, 1.0), 0.0)
    probs[silent] = 1.0 / GRID_HZ.shape[0]
    return Posteriorgram(probs, tuple(GRID_HZ), dsp.HOP_SIZE, audio.sample_rate)


def save_posteriorgram(path, post, name="ppg"):
    """Write a posteriorgram as a single-tensor feature archive."""
    archive.write_archive(
        path,
        {name: archive.Tensor(post.probs, [str(label) for label in post.labels])},
        sample_rate=post.sample_rate, hop=post.hop)


def load_posteriorgram(path, expected_labels, name=None):
    """Load and validate a posteriorgram from a feature archive.

    Rows must be non-negative, free of NaN, and sum to 1 within 1e-4; they
    are then renormalized.  Labels must match ``expected_labels`` in order.

    Raises
    ------
    FormatError
        Naming the offending frame or label.
    """
    arc = archive.read_archive(path)
    candidates = [n for n, t in arc.tensors.items() if t.labels is not None]
    if name is None:
        if len(candidates) != 1:
            raise FormatError(f"{path}: expected one labeled tensor, found {candidates}")
        name = candidates[0]
    if name not in arc.tensors:
        raise FormatError(f"{path}: no tensor named {name!r}")
    tensor = arc.tensors[name]
    labels = [str(label) for label in (tensor.labels or [])]
    expected = [str(label) for label in expected_labels]
    if labels != expected:
        raise FormatError(f"{path}: label mismatch; file has {labels}, expected {expected}")

    probs = tensor.data.astype(np.float64)
    bad = np.flatnonzero(np.isnan(probs).any(axis=1))
    if bad.size:
        raise FormatError(f"{path}: NaN in frame {bad[0]}")
    bad = np.flatnonzero((probs < 0).any(axis=1))
    if bad.size:
        raise FormatError(f"{path}: negative probability in frame {bad[0]}")
    sums = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE)
    if bad.size:
        raise FormatError(f"{path}: frame {bad[0]} sums to {sums[bad[0]]:.6g}, not 1")
    probs /= sums[:, None]
    return Posteriorgram(probs, tuple(expected_labels), arc.hop, arc.sample_rate)
