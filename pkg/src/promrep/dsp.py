"""Signal-processing substrate: framing, spectra, resampling, A-weighting, gain.

All features in the package share one frame grid: frame ``t`` is centered
at sample ``t * hop + grid / 2`` with ``grid = 1024`` and ``hop = 256`` at
22.05 kHz, giving ``1 + (len - grid) // hop`` frames.  Longer analysis
windows are centered on the same points and read past the signal edges
through reflect padding.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.special import i0

from .errors import FormatError, InvalidArgument

SAMPLE_RATE = 22050
FFT_SIZE = 1024
WINDOW_SIZE = 1024
HOP_SIZE = 256

A_WEIGHT_FLOOR_DB = -120.0


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidArgument("AudioBuffer holds mono audio (1-D samples)")
        if int(self.sample_rate) <= 0:
            raise InvalidArgument(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgument("audio samples must be finite")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


@dataclass
class Spectrogram:
    magnitudes: np.ndarray = field(repr=False)
    freqs: np.ndarray = field(repr=False)
    hop_samples: int
    win_samples: int
    fft_size: int
    sample_rate: int

    @property
    def num_frames(self):
        return self.magnitudes.shape[0]

    @property
    def bin_hz(self):
        return self.sample_rate / self.fft_size


def num_frames(length, hop=HOP_SIZE, grid=WINDOW_SIZE):
    return 1 + (length - grid) // hop


def frame_signal(samples, frame_length, hop, grid=None):
    """Frames of ``frame_length`` samples centered on the shared frame grid.

    Returns a read-only strided view of shape ``(T, frame_length)``.
    """
    grid = frame_length if grid is None else grid
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] < grid:
        raise InvalidArgument(f"audio has {samples.shape[0]} samples, shorter than one frame ({grid})")
    T = num_frames(samples.shape[0], hop, grid)
    # first window starts at grid/2 - frame_length/2
    start = grid // 2 - frame_length // 2
    pad_left = max(0, -start)
    end = (T - 1) * hop + start + frame_length
    pad_right = max(0, end - samples.shape[0])
    if pad_left or pad_right:
        samples = np.pad(samples, (pad_left, pad_right), mode="reflect")
    start += pad_left
    frames = np.lib.stride_tricks.sliding_window_view(samples[start:], frame_length)[::hop]
    return frames[:T]


def stft_magnitude(audio, fft_size=FFT_SIZE, win_samples=WINDOW_SIZE, hop_samples=HOP_SIZE,
                   grid_samples=WINDOW_SIZE):
    """Hann-windowed magnitude spectrogram on the shared frame grid.

    Parameters
    ----------
    audio : AudioBuffer
    fft_size : int
        FFT length; windows shorter than this are zero-padded.
    win_samples, hop_samples : int
    grid_samples : int
        Window length that defines the frame grid (frame count and centers).

    Returns
    -------
    Spectrogram
        ``magnitudes`` has shape ``(T, fft_size // 2 + 1)``.
    """
    if not 0 < hop_samples <= win_samples <= fft_size:
        raise InvalidArgument(
            f"need 0 < hop ({hop_samples}) <= win ({win_samples}) <= fft_size ({fft_size})")
    if len(audio) < max(hop_samples, grid_samples):
        raise InvalidArgument(
            f"audio has {len(audio)} samples, shorter than one frame ({grid_samples})")
    frames = frame_signal(audio.samples, win_samples, hop_samples, grid_samples)
    window = hann(win_samples)
    mags = np.abs(np.fft.rfft(frames * window, n=fft_size, axis=1))
    freqs = np.arange(fft_size // 2 + 1) * audio.sample_rate / fft_size
    return Spectrogram(mags, freqs, hop_samples, win_samples, fft_size, audio.sample_rate)


def hann(n):
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def a_weight_db(freq):
    """A-weighting gain in dB (IEC 61672 analog curve, 0 dB at 1 kHz).

    Accepts a scalar or an array.  DC and anything below the floor are
    clamped to -120 dB.
    """
    f = np.asarray(freq, dtype=np.float64)
    if np.any(f < 0):
        raise InvalidArgument("frequency must be non-negative")
    f2 = f * f
    with np.errstate(divide="ignore"):
        ra = (12194.0 ** 2 * f2 * f2) / (
            (f2 + 20.6 ** 2)
            * np.sqrt((f2 + 107.7 ** 2) * (f2 + 737.9 ** 2))
            * (f2 + 12194.0 ** 2))
        db = 20.0 * np.log10(ra) + 2.0
    db = np.maximum(db, A_WEIGHT_FLOOR_DB)
    return float(db) if db.ndim == 0 else db


def gain(audio, db):
    """Scale every sample by ``10 ** (db / 20)``.  No clipping is applied."""
    return AudioBuffer(audio.samples * 10.0 ** (db / 20.0), audio.sample_rate)


# Windowed-sinc resampler.  Kaiser beta 9 gives roughly 90 dB stopband
# attenuation; 64 zero crossings per wing keep the transition band narrow.
NUM_ZEROS = 64
KAISER_BETA = 9.0
ROLLOFF = 0.945


def resample(audio, declared_rate, target_rate, chunk=4096):
    """Band-limited resampling by windowed-sinc interpolation.

    ``audio.samples`` are interpreted as sampled at ``declared_rate``
    (regardless of ``audio.sample_rate``) and converted to ``target_rate``.
    The anti-aliasing cutoff sits just below the lower of the two Nyquist
    frequencies.  Output length is ``round(len * target / declared)``.
    """
    if declared_rate <= 0 or target_rate <= 0:
        raise InvalidArgument("sample rates must be positive")
    x = audio.samples
    if declared_rate == target_rate:
        return AudioBuffer(x.copy(), int(target_rate))

    ratio = target_rate / declared_rate
    n_out = int(round(x.shape[0] * ratio))
    # cutoff in cycles per input sample (1.0 = input Nyquist)
    cutoff = ROLLOFF * min(1.0, ratio)
    half = int(math.ceil(NUM_ZEROS / cutoff))
    taps = np.arange(-half + 1, half + 1)

    padded = np.concatenate([np.zeros(half), x, np.zeros(half + 1)])
    out = np.empty(n_out)
    for begin in range(0, n_out, chunk):
        n = np.arange(begin, min(begin + chunk, n_out))
        pos = n / ratio
        base = np.floor(pos).astype(np.int64)
        frac = pos - base
        # distance from output instant to each tap, in input samples
        dist = frac[:, None] - taps[None, :]
        idx = base[:, None] + taps[None, :] + half
        arg = dist / half
        win = i0(KAISER_BETA * np.sqrt(np.clip(1.0 - arg * arg, 0.0, None))) / i0(KAISER_BETA)
        win[np.abs(arg) > 1.0] = 0.0
        kernel = cutoff * np.sinc(cutoff * dist) * win
        out[n] = np.einsum("ij,ij->i", padded[idx], kernel)
    return AudioBuffer(out, int(round(target_rate)))


def read_wav(path):
    """Read a WAV file as mono float audio.

    16-bit PCM is scaled by 1/32768; float files are read as-is.
    Multichannel audio is averaged to mono.
    """
    try:
        rate, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise FormatError(f"cannot read WAV {path}: {exc}") from exc
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise FormatError(f"unsupported WAV sample type {data.dtype} in {path}")
    if data.ndim == 2:
        data = data.mean(axis=1)
    return AudioBuffer(data, int(rate))


def write_wav(path, audio, subtype="float32"):
    """Write mono audio as IEEE float-32 (default) or 16-bit PCM."""
    if subtype == "float32":
        data = audio.samples.astype(np.float32)
    elif subtype == "pcm16":
        data = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        raise InvalidArgument(f"unknown WAV subtype {subtype!r}")
    wavfile.write(path, int(audio.sample_rate), data)
