"""Representation-level edits: pitch shift, time stretch, loudness, ratios.

Edits operate on a ``RepresentationBundle`` and return a new bundle; the
input is never modified.  Members an edit does not touch are shared with
the input unchanged.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import dsp
from .errors import InvalidArgument
from .represent import (DEFAULT_ALPHA, GRID_MAX_HZ, GRID_MIN_HZ, PHONEMES, SILENCE,
                        MultibandLoudness, Sppg, sparsify, voiced_mask)

logger = logging.getLogger(__name__)

VOWELS = frozenset({"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY",
                    "UH", "UW"})
VOICED_CONSONANTS = frozenset({"L", "R", "W", "Y", "M", "N", "NG", "Z", "V", "DH", "ZH"})
STRETCHABLE = VOWELS | VOICED_CONSONANTS | {SILENCE}


@dataclass
class RepresentationBundle:
    """Time-aligned features plus the two time-invariant augmentation ratios.

    ``ppg`` is the dense posteriorgram (``T x 40``) when available and
    ``sppg`` its sparsified form.
    """

    pitch: np.ndarray = field(repr=False)
    periodicity: np.ndarray = field(repr=False)
    loudness: MultibandLoudness = field(repr=False)
    ppg: np.ndarray = field(default=None, repr=False)
    sppg: Sppg = field(default=None, repr=False)
    ratio_f: float = 0.0
    ratio_l: float = 0.0
    sample_rate: int = dsp.SAMPLE_RATE
    hop: int = dsp.HOP_SIZE
    labels: tuple = PHONEMES
    pitch_clamped: int = 0

    def __post_init__(self):
        lengths = {len(self.pitch), len(self.periodicity), self.loudness.db.shape[0]}
        if self.ppg is not None:
            lengths.add(self.ppg.shape[0])
        if self.sppg is not None:
            lengths.add(self.sppg.probs.shape[0])
        if len(lengths) != 1:
            raise InvalidArgument(f"bundle members disagree on frame count: {sorted(lengths)}")

    @property
    def num_frames(self):
        return len(self.pitch)


@dataclass
class StretchMap:
    """Fractional source frame position for each output frame."""

    positions: np.ndarray
    local_rate: float = 1.0
    uniform_fallback: bool = False

    def __len__(self):
        return self.positions.shape[0]


def shift_pitch(bundle, cents_offset):
    """Scale pitch by ``2 ** (cents_offset / 1200)``, clamped to the pitch grid.

    The number of clamped frames is reported in ``pitch_clamped``.
    """
    shifted = bundle.pitch * 2.0 ** (cents_offset / 1200.0)
    clamped = np.clip(shifted, GRID_MIN_HZ, GRID_MAX_HZ)
    count = int(np.count_nonzero(clamped != shifted))
    if count:
        logger.info("pitch shift clamped %d frame(s) to the grid range", count)
    return replace(bundle, pitch=clamped, pitch_clamped=count)


def edit_loudness(bundle, delta_dba):
    """Add ``delta_dba`` to every band of every frame."""
    db = bundle.loudness.db + delta_dba
    return replace(bundle, loudness=MultibandLoudness(db, bundle.loudness.band_edges))


def set_ratios(bundle, r_f, r_l):
    for name, value in (("r_f", r_f), ("r_l", r_l)):
        if not -1.0 <= value <= 1.0:
            raise InvalidArgument(f"{name} must be in [-1, 1], got {value}")
    return replace(bundle, ratio_f=float(r_f), ratio_l=float(r_l))


def stretchable_frames(sppg, voiced, labels=STRETCHABLE):
    """Frames whose most likely phoneme is in ``labels`` or that are voiced."""
    names = np.array(sppg.labels)
    argmax = np.argmax(sppg.probs, axis=1)
    phonetic = np.isin(names[argmax], list(labels))
    return phonetic | np.asarray(voiced, dtype=bool)


def build_stretch_map(sppg, voiced, factor, labels=STRETCHABLE):
    """Time map that stretches only voiced phonemes and silences.

    Non-stretchable frames advance at rate 1; stretchable frames share one
    local rate chosen so the output has ``round(factor * T)`` frames.  When
    no such rate exists the whole utterance is stretched uniformly and
    ``uniform_fallback`` is set.
    """
    if factor <= 0:
        raise InvalidArgument(f"stretch factor must be positive, got {factor}")
    T_in = sppg.probs.shape[0]
    T_out = max(1, int(round(factor * T_in)))
    if T_out == T_in:
        return StretchMap(np.arange(T_in, dtype=np.float64))
    if T_in == 1:
        return StretchMap(np.zeros(T_out), local_rate=float(T_out), uniform_fallback=True)

    mask = stretchable_frames(sppg, voiced, labels)
    # interval (j, j+1) takes the class of its left frame
    span = mask[:-1]
    fixed = np.count_nonzero(~span)
    free = np.count_nonzero(span)
    rate = (T_out - 1 - fixed) / free if free else 0.0
    if rate <= 0:
        warnings.warn("no feasible stretch over stretchable frames; stretching uniformly")
        positions = np.linspace(0.0, T_in - 1, T_out)
        return StretchMap(positions, local_rate=(T_out - 1) / (T_in - 1), uniform_fallback=True)

    durations = np.where(span, rate, 1.0)
    out_time = np.concatenate([[0.0], np.cumsum(durations)])
    targets = np.linspace(0.0, out_time[-1], T_out)
    positions = np.interp(targets, out_time, np.arange(T_in, dtype=np.float64))
    positions[0], positions[-1] = 0.0, T_in - 1
    return StretchMap(positions, local_rate=float(rate))


def slerp(p, q, t):
    """Spherical interpolation of two distributions on the Hellinger sphere.

    ``sqrt(p)`` and ``sqrt(q)`` are unit vectors; the interpolated vector
    is squared and renormalized.  Nearly parallel inputs fall back to
    linear interpolation.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise InvalidArgument(f"distributions differ in shape: {p.shape} vs {q.shape}")
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument(f"t must be in [0, 1], got {t}")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or not np.all(np.isfinite(v)) or abs(v.sum() - 1.0) > 1e-6:
            raise InvalidArgument(f"{name} is not a valid distribution")
    if t == 0.0:
        return p.copy()
    if t == 1.0:
        return q.copy()
    return _slerp_rows(p[None, :], q[None, :], np.array([t]))[0]


def _slerp_rows(p, q, t):
    """Row-wise SLERP; ``t`` has one entry per row."""
    a, b = np.sqrt(p), np.sqrt(q)
    dot = np.clip(np.sum(a * b, axis=1), -1.0, 1.0)
    omega = np.arccos(dot)
    t = t[:, None]
    small = omega < 1e-6
    sin_omega = np.where(small, 1.0, np.sin(omega))[:, None]
    wa = np.where(small[:, None], 1.0 - t, np.sin((1.0 - t) * omega[:, None]) / sin_omega)
    wb = np.where(small[:, None], t, np.sin(t * omega[:, None]) / sin_omega)
    linear = (1.0 - t) * p + t * q
    v = wa * a + wb * b
    out = np.where(small[:, None], linear, v * v)
    return out / out.sum(axis=1, keepdims=True)


def _split(positions, T_in):
    lo = np.clip(np.floor(positions).astype(np.int64), 0, T_in - 1)
    hi = np.minimum(lo + 1, T_in - 1)
    frac = positions - lo
    exact = frac == 0.0
    return lo, hi, frac, exact


def _lerp(values, lo, hi, frac, exact):
    f = frac.reshape((-1,) + (1,) * (values.ndim - 1))
    out = (1.0 - f) * values[lo] + f * values[hi]
    out[exact] = values[lo[exact]]
    return out


def _slerp_frames(probs, lo, hi, frac, exact):
    out = probs[lo].copy()
    mid = ~exact
    if np.any(mid):
        out[mid] = _slerp_rows(probs[lo[mid]], probs[hi[mid]], frac[mid])
    return out


def stretch(bundle, smap):
    """Resample every time-varying member at the map's source positions.

    Pitch is interpolated linearly in cents, periodicity and loudness
    linearly, and posteriorgram rows by SLERP.  With a dense PPG present,
    the sparse PPG is regenerated from the interpolated dense rows.
    """
    T_in = bundle.num_frames
    positions = np.asarray(smap.positions, dtype=np.float64)
    if positions.size and (positions.min() < 0 or positions.max() > T_in - 1):
        raise InvalidArgument("stretch map positions fall outside the bundle")
    lo, hi, frac, exact = _split(positions, T_in)

    pitch = 2.0 ** _lerp(np.log2(bundle.pitch), lo, hi, frac, exact)
    pitch[exact] = bundle.pitch[lo[exact]]
    periodicity = _lerp(bundle.periodicity, lo, hi, frac, exact)
    loudness = MultibandLoudness(_lerp(bundle.loudness.db, lo, hi, frac, exact),
                                 bundle.loudness.band_edges)

    ppg, sppg = None, None
    if bundle.ppg is not None:
        ppg = _slerp_frames(bundle.ppg, lo, hi, frac, exact)
    if bundle.sppg is not None:
        meta = bundle.sppg
        if ppg is not None:
            sppg = sparsify(ppg, meta.method, meta.k)
            sppg = replace(sppg, labels=meta.labels)
        else:
            sppg = replace(meta, probs=_slerp_frames(meta.probs, lo, hi, frac, exact),
                           fallback_frames=())
    return replace(bundle, pitch=pitch, periodicity=periodicity, loudness=loudness,
                   ppg=ppg, sppg=sppg)


def time_stretch(bundle, factor, alpha=None, labels=STRETCHABLE):
    """Build the stretch map from the bundle's own SPPG and voicing, then stretch."""
    if bundle.sppg is None:
        raise InvalidArgument("time stretching needs the sparse PPG to find stretchable frames")
    voiced = voiced_mask(bundle.periodicity, DEFAULT_ALPHA if alpha is None else alpha)
    return stretch(bundle, build_stretch_map(bundle.sppg, voiced, factor, labels))

