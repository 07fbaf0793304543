"""Training-data augmentations: spectral-balance shift and volume shift.

The spectral-balance copy reinterprets the recording as sampled at
``2 ** r_f`` times its real rate and resamples back, which scales pitch and
spectral envelope together; the volume copy applies ``12 * r_l`` dB of
gain, redrawing ``r_l`` whenever the result would clip.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import InvalidArgument

logger = logging.getLogger(__name__)

VOLUME_RANGE_DB = 12.0
MAX_DRAWS = 1000


@dataclass
class AugmentSpec:
    r_f: float
    r_l: float
    source_rate: int
    target_rate: int

    def __post_init__(self):
        for name in ("r_f", "r_l"):
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise InvalidArgument(f"{name} must be in [-1, 1], got {value}")
        if self.source_rate <= 0 or self.target_rate <= 0:
            raise InvalidArgument("sample rates must be positive")


@dataclass
class AugmentedPair:
    spectral: dsp.AudioBuffer
    r_f: float
    volume: dsp.AudioBuffer
    r_l: float


def augment_spectral(x, r_f, target_rate=None):
    """Shift pitch and spectral balance by ``2 ** r_f``.

    Output duration is scaled by ``2 ** -r_f``; the output is at
    ``target_rate`` (default: the input rate).
    """
    if not -1.0 <= r_f <= 1.0:
        raise InvalidArgument(f"r_f must be in [-1, 1], got {r_f}")
    s = x.sample_rate
    target_rate = s if target_rate is None else target_rate
    shifted = dsp.resample(x, 2.0 ** r_f * s, s)
    return dsp.resample(shifted, s, target_rate)


def augment_volume(x, rng):
    """Random gain of ``12 * r_l`` dB, ``r_l ~ Uniform(-1, 1)``, without clipping.

    Draws are rejected while any sample would leave [-1, 1].  After 1000
    rejections the last draw is capped at 0 (attenuation only) and a
    warning is issued.

    Returns
    -------
    (AudioBuffer, float)
        The scaled audio and the accepted ``r_l``.
    """
    peak = float(np.max(np.abs(x.samples))) if len(x) else 0.0
    if peak > 1.0:
        raise InvalidArgument(f"input already exceeds [-1, 1] (peak {peak:.4g})")
    r_l = 0.0
    for _ in range(MAX_DRAWS):
        r_l = float(rng.uniform(-1.0, 1.0))
        out = dsp.gain(x, VOLUME_RANGE_DB * r_l)
        if not np.any(np.abs(out.samples) > 1.0):
            return out, r_l
    warnings.warn(f"volume augmentation rejected {MAX_DRAWS} draws; using attenuation only")
    r_l = min(0.0, r_l)
    return dsp.gain(x, VOLUME_RANGE_DB * r_l), r_l


def make_augmented_pair(x, target_rate, rng):
    """One spectral-balance copy and one volume copy of ``x``, with their ratios.

    The spectral copy is produced at ``target_rate``; the volume copy keeps
    the input rate.
    """
    r_f = float(rng.uniform(-1.0, 1.0))
    spectral = augment_spectral(x, r_f, target_rate)
    volume, r_l = augment_volume(x, rng)
    return AugmentedPair(spectral, r_f, volume, r_l)
