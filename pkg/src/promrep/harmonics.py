"""F0, H1 and H2 trajectories and spectral centroid.

Harmonic ``i`` is tracked with Viterbi decoding on the log-magnitude
spectrogram restricted, frame by frame, to the FFT bins strictly inside
``((i + w) * f0, (i + 1 / w) * f0)``.  Decoded bins are refined by
quadratic interpolation of the log magnitude.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import viterbi
from .errors import DegenerateInputError, InvalidArgument

DEFAULT_W = 0.8
LOG_FLOOR = 1e-10


@dataclass
class HarmonicTrack:
    """Per-frame F0 and harmonic frequencies in Hz.

    ``harmonics[i - 1]`` holds harmonic ``i``.  ``valid[i - 1]`` marks the
    frames where that harmonic was decoded (voiced, non-empty band); other
    frames repeat the nearest earlier decoded value.
    """

    f0: np.ndarray
    harmonics: list = field(default_factory=list)
    valid: list = field(default_factory=list)
    w: float = DEFAULT_W

    @property
    def h1(self):
        return self.harmonics[0]

    @property
    def h2(self):
        return self.harmonics[1]


@dataclass
class CentroidTrack:
    hz: np.ndarray
    valid: np.ndarray


def band_limits(f0, harmonic, w=DEFAULT_W):
    """Open search interval ``((i + w) f0, (i + 1/w) f0)`` for harmonic ``i``."""
    f0 = np.asarray(f0, dtype=np.float64)
    return (harmonic + w) * f0, (harmonic + 1.0 / w) * f0


def _decode_segments(emissions, transition):
    """Decode, restarting wherever the band constraint leaves no path."""
    states = np.empty(emissions.shape[0], dtype=np.int_)
    start = 0
    while start < emissions.shape[0]:
        try:
            path = viterbi.decode(emissions[start:], transition)
            states[start:] = path.states
            break
        except DegenerateInputError as exc:
            stop = start + max(exc.frame, 1)
            states[start:stop] = viterbi.decode(emissions[start:stop], transition).states
            start = stop
    return states


def _track(log_mag, freqs, f0, frames, harmonic, w):
    T, F = log_mag.shape
    bin_hz = freqs[1] - freqs[0]
    lo, hi = band_limits(f0[frames], harmonic, w)
    inside = (freqs[None, :] > lo[:, None]) & (freqs[None, :] < hi[:, None])
    nonempty = inside.any(axis=1)
    frames = frames[nonempty]
    inside = inside[nonempty]
    lo, hi = lo[nonempty], hi[nonempty]
    if frames.size == 0:
        return np.full(T, np.nan), np.zeros(T, dtype=bool)

    # log-softmax of in-band log magnitudes; -inf elsewhere
    masked = np.where(inside, log_mag[frames], -np.inf)
    peak = masked.max(axis=1, keepdims=True)
    emissions = masked - peak - np.log(np.sum(np.exp(masked - peak), axis=1, keepdims=True))

    # one-octave jump cap at this harmonic's typical frequency, in bins
    typical = (harmonic + 1) * np.median(f0[frames])
    band = min(F - 1, max(1, int(math.ceil(typical / bin_hz))))
    transition = viterbi.make_triangular_transition(F, band)
    bins = _decode_segments(emissions, transition)

    # quadratic refinement, kept strictly inside the search band
    k = np.clip(bins, 1, F - 2)
    a, b, c = (log_mag[frames, k - 1], log_mag[frames, k], log_mag[frames, k + 1])
    denom = a - 2.0 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        offset = np.where(denom < 0, 0.5 * (a - c) / denom, 0.0)
    hz = (bins + np.clip(offset, -0.5, 0.5)) * bin_hz
    hz = np.minimum(np.maximum(hz, np.nextafter(lo, np.inf)), np.nextafter(hi, -np.inf))

    out = np.full(T, np.nan)
    valid = np.zeros(T, dtype=bool)
    out[frames] = hz
    valid[frames] = True
    return _hold(out, valid), valid


def _hold(values, valid):
    """Carry the last valid value forward; leading gaps take the first one."""
    if not valid.any():
        return values
    idx = np.where(valid, np.arange(values.shape[0]), 0)
    np.maximum.accumulate(idx, out=idx)
    first = np.argmax(valid)
    idx[:first] = first
    return values[idx]


def estimate_harmonics(spec, f0, voiced, w=DEFAULT_W, num_harmonics=2):
    """Track harmonics 1..``num_harmonics`` of a known F0 contour.

    Parameters
    ----------
    spec : Spectrogram
        Magnitude spectrogram on the same frame grid as ``f0``; a 4096-point
        FFT is recommended for adequate resolution at low harmonics.
    f0 : np.ndarray [shape=(T,)]
        F0 contour in Hz.
    voiced : np.ndarray [shape=(T,)]
        Frames to decode.
    w : float
        Band parameter in (0, 1).
    """
    if not 0.0 < w < 1.0:
        raise InvalidArgument(f"w must be in (0, 1), got {w}")
    f0 = np.asarray(f0, dtype=np.float64)
    voiced = np.asarray(voiced, dtype=bool)
    if f0.shape[0] != spec.num_frames or voiced.shape[0] != spec.num_frames:
        raise InvalidArgument(
            f"f0 ({f0.shape[0]}), voiced ({voiced.shape[0]}) and spectrogram "
            f"({spec.num_frames}) frame counts differ")
    log_mag = np.log(spec.magnitudes + LOG_FLOOR)
    frames = np.flatnonzero(voiced & (f0 > 0))
    harmonics, valid = [], []
    for i in range(1, num_harmonics + 1):
        hz, ok = _track(log_mag, spec.freqs, f0, frames, i, w)
        harmonics.append(hz)
        valid.append(ok)
    return HarmonicTrack(f0.copy(), harmonics, valid, w)


def spectral_centroid(spec, eps=1e-10):
    """Magnitude-weighted mean frequency per frame; silent frames give 0, invalid."""
    total = spec.magnitudes.sum(axis=1)
    valid = total >= eps
    weighted = spec.magnitudes @ spec.freqs
    hz = np.where(valid, weighted / np.where(valid, total, 1.0), 0.0)
    return CentroidTrack(hz, valid)
