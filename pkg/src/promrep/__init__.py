"""Interpretable, disentangled speech representation toolkit.

Pitch (Viterbi-decoded), entropy periodicity, multi-band A-weighted
loudness and sparse phonetic posteriorgrams, with representation-level
editing, augmentation, harmonic tracking and objective metrics.
"""

from .dsp import AudioBuffer, Spectrogram
from .edit import RepresentationBundle
from .errors import BatchDecodeError, DegenerateInputError, FormatError, InvalidArgument
from .represent import MultibandLoudness, Posteriorgram, Sppg
from .viterbi import BACKEND, DecodePath, TransitionModel

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "BACKEND", "BatchDecodeError", "DecodePath", "DegenerateInputError",
    "FormatError", "InvalidArgument", "MultibandLoudness", "Posteriorgram",
    "RepresentationBundle", "Spectrogram", "Sppg", "TransitionModel",
]
