"""Objective metrics for comparing two representations.

Metrics with no frames to average over return ``nan`` rather than 0.
"""

import math

import numpy as np

from .errors import InvalidArgument
from .represent import cents

SILENCE_FLOOR_DBA = -60.0


def _same_length(a, b, what):
    if len(a) != len(b):
        raise InvalidArgument(f"{what}: frame counts differ ({len(a)} vs {len(b)})")


def pitch_error_cents(ref, est, ref_voiced, est_voiced):
    """Mean absolute pitch difference in cents over frames voiced in both."""
    ref, est = np.asarray(ref, dtype=np.float64), np.asarray(est, dtype=np.float64)
    _same_length(ref, est, "pitch_error_cents")
    _same_length(ref, ref_voiced, "pitch_error_cents")
    _same_length(est, est_voiced, "pitch_error_cents")
    both = np.asarray(ref_voiced, dtype=bool) & np.asarray(est_voiced, dtype=bool)
    if not both.any():
        return math.nan
    return float(np.mean(cents(ref[both], est[both])))


def periodicity_rmse(ref, est):
    ref, est = np.asarray(ref, dtype=np.float64), np.asarray(est, dtype=np.float64)
    _same_length(ref, est, "periodicity_rmse")
    if ref.size == 0:
        return math.nan
    return float(np.sqrt(np.mean((ref - est) ** 2)))


def loudness_error_dba(ref, est, silence_floor=SILENCE_FLOOR_DBA):
    """Mean absolute dB difference over non-silent (frame, band) cells.

    A frame is non-silent when the mean of its reference bands exceeds
    ``silence_floor``.
    """
    ref_db = getattr(ref, "db", ref)
    est_db = getattr(est, "db", est)
    ref_db, est_db = np.asarray(ref_db, dtype=np.float64), np.asarray(est_db, dtype=np.float64)
    if ref_db.shape != est_db.shape:
        raise InvalidArgument(f"loudness shapes differ: {ref_db.shape} vs {est_db.shape}")
    loud = ref_db.mean(axis=1) > silence_floor
    if not loud.any():
        return math.nan
    return float(np.mean(np.abs(ref_db[loud] - est_db[loud])))


def _kl2(p, m):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p / m), 0.0)
    return terms.sum(axis=-1)


def ppg_jsd(ref, est):
    """Frame-averaged Jensen-Shannon divergence (base 2) between sparse PPGs."""
    p = np.asarray(getattr(ref, "probs", ref), dtype=np.float64)
    q = np.asarray(getattr(est, "probs", est), dtype=np.float64)
    ref_labels, est_labels = getattr(ref, "labels", None), getattr(est, "labels", None)
    if ref_labels is not None and est_labels is not None and tuple(ref_labels) != tuple(est_labels):
        raise InvalidArgument("PPG label sets differ")
    if p.shape != q.shape:
        raise InvalidArgument(f"PPG shapes differ: {p.shape} vs {q.shape}")
    if p.shape[0] == 0:
        return math.nan
    m = 0.5 * (p + q)
    jsd = 0.5 * _kl2(p, m) + 0.5 * _kl2(q, m)
    return float(np.mean(np.clip(jsd, 0.0, 1.0)))


def pearson(a, b):
    """Sample Pearson correlation; ``nan`` if either input is constant."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    _same_length(a, b, "pearson")
    if a.size < 2:
        raise InvalidArgument("pearson needs at least two samples")
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(np.sum(da * da)) * float(np.sum(db * db)))
    if denom == 0.0:
        return math.nan
    return float(np.clip(np.sum(da * db) / denom, -1.0, 1.0))
