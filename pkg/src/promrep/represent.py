"""The four-part interpretable speech representation.

Pitch is decoded with Viterbi over a 1440-bin, 5-cent grid; periodicity is
one minus the normalized entropy of the pitch posterior; loudness is
A-weighted log magnitude averaged inside contiguous FFT-bin bands; and the
phonetic posteriorgram is sparsified per frame before use.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import dsp, viterbi
from .errors import InvalidArgument

GRID_BASE_HZ = 31.0
GRID_CENTS = 5.0
GRID_SIZE = 1440

DEFAULT_ALPHA = 0.1625
DEFAULT_BANDS = 8
DEFAULT_SPARSITY = ("percentile_k", 0.85)
NUM_QUANTIZER_BINS = 256
LOG_FLOOR = 1e-10

# 39 CMU dictionary phonemes plus a silence class
PHONEMES = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY",
    "F", "G", "HH", "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P",
    "R", "S", "SH", "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH", "<silent>",
)
SILENCE = "<silent>"


def pitch_bin_grid():
    """Geometric 5-cent grid: ``31 * 2 ** (5 i / 1200)`` for i in [0, 1440)."""
    return GRID_BASE_HZ * 2.0 ** (np.arange(GRID_SIZE) * GRID_CENTS / 1200.0)


GRID_HZ = pitch_bin_grid()
GRID_MIN_HZ = float(GRID_HZ[0])
GRID_MAX_HZ = float(GRID_HZ[-1])


@dataclass
class Posteriorgram:
    """Per-frame categorical distributions, shape ``(T, |Q|)``."""

    probs: np.ndarray = field(repr=False)
    labels: tuple
    hop: int = dsp.HOP_SIZE
    sample_rate: int = dsp.SAMPLE_RATE

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        self.labels = tuple(self.labels)
        if self.probs.ndim != 2 or self.probs.shape[1] != len(self.labels):
            raise InvalidArgument(
                f"probs shape {self.probs.shape} does not match {len(self.labels)} labels")

    @property
    def num_frames(self):
        return self.probs.shape[0]


@dataclass
class MultibandLoudness:
    db: np.ndarray = field(repr=False)
    band_edges: np.ndarray

    @property
    def num_bands(self):
        return self.db.shape[1]


@dataclass
class Sppg:
    """Sparsified phonetic posteriorgram.

    ``fallback_frames`` lists frames where threshold sparsification removed
    every phoneme and the argmax was kept instead.
    """

    probs: np.ndarray = field(repr=False)
    labels: tuple = PHONEMES
    method: str = "percentile_k"
    k: float = 0.85
    fallback_frames: tuple = ()


def cents(a, b):
    """Pitch distance ``1200 * |log2(a / b)|``; works elementwise on arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.any(a <= 0) or np.any(b <= 0):
        raise InvalidArgument("cents needs strictly positive frequencies")
    out = 1200.0 * np.abs(np.log2(a / b))
    return float(out) if out.ndim == 0 else out


def _entropy(probs):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    return -terms.sum(axis=-1)


def periodicity(post):
    """One minus the entropy of each frame normalized by ``ln |Q|``."""
    probs = post.probs if isinstance(post, Posteriorgram) else np.asarray(post, dtype=np.float64)
    n = probs.shape[-1]
    if n < 2:
        return np.ones(probs.shape[:-1])
    h = 1.0 - _entropy(probs) / math.log(n)
    return np.clip(h, 0.0, 1.0)


def voiced_mask(h, alpha=DEFAULT_ALPHA):
    """Frames whose periodicity strictly exceeds ``alpha``."""
    return np.asarray(h) > alpha


def decode_pitch(post, max_jump_cents=1200.0, workers=None):
    """Viterbi-decoded pitch contour in Hz.

    Uses a uniform initial distribution and triangular transitions that
    forbid jumps larger than ``max_jump_cents`` between adjacent frames.
    Every frame is decoded; voicing is carried separately by periodicity.
    """
    probs = post.probs if isinstance(post, Posteriorgram) else np.asarray(post)
    if probs.shape[1] != GRID_SIZE:
        raise InvalidArgument(f"pitch posteriorgram must have {GRID_SIZE} bins, got {probs.shape[1]}")
    if isinstance(post, Posteriorgram) and not np.allclose(post.labels, GRID_HZ, rtol=1e-6):
        raise InvalidArgument("posteriorgram labels do not match the pitch bin grid")
    transition = viterbi.make_triangular_transition(GRID_SIZE, int(round(max_jump_cents / GRID_CENTS)))
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    path = viterbi.decode(logp, transition)
    return GRID_HZ[path.states]


def sparsify(ppg, method="percentile_k", k=0.85):
    """Zero out low-probability phonemes per frame and renormalize.

    ``top_k`` keeps the ``k`` most probable phonemes, ``threshold_k`` keeps
    phonemes with probability at least ``k``, and ``percentile_k`` keeps the
    most probable phonemes until their cumulative mass reaches ``k``.
    Equal probabilities are ordered by phoneme index.
    """
    probs = ppg.probs if isinstance(ppg, Posteriorgram) else np.asarray(ppg, dtype=np.float64)
    labels = ppg.labels if isinstance(ppg, Posteriorgram) else PHONEMES[:probs.shape[1]]
    T, n = probs.shape
    # stable sort on the negated values: descending, index order on ties
    order = np.argsort(-probs, axis=1, kind="stable")
    ranked = np.take_along_axis(probs, order, axis=1)
    fallback = ()

    if method == "top_k":
        if int(k) != k or k < 1:
            raise InvalidArgument(f"top_k needs an integer k >= 1, got {k}")
        keep_ranked = np.broadcast_to(np.arange(n) < int(k), (T, n))
    elif method == "threshold_k":
        if not 0.0 <= k < 1.0:
            raise InvalidArgument(f"threshold_k needs k in [0, 1), got {k}")
        keep_ranked = ranked >= k
        empty = ~keep_ranked.any(axis=1)
        keep_ranked[empty, 0] = True
        fallback = tuple(int(t) for t in np.flatnonzero(empty))
    elif method == "percentile_k":
        if not 0.0 < k <= 1.0:
            raise InvalidArgument(f"percentile_k needs k in (0, 1], got {k}")
        mass = np.cumsum(ranked, axis=1)
        before = np.concatenate([np.zeros((T, 1)), mass[:, :-1]], axis=1)
        # keep a phoneme while the mass accumulated before it is short of k;
        # the phoneme that crosses k is kept
        keep_ranked = before < k
        if k >= 1.0:
            keep_ranked[:] = True
        keep_ranked[:, 0] = True
    else:
        raise InvalidArgument(f"unknown sparsification method {method!r}")

    keep = np.zeros_like(keep_ranked)
    np.put_along_axis(keep, order, keep_ranked, axis=1)
    if method == "percentile_k" and k >= 1.0:
        out = probs.copy()
    else:
        out = np.where(keep, probs, 0.0)
        out /= out.sum(axis=1, keepdims=True)
    return Sppg(out, tuple(labels), method, float(k), fallback)


def band_edges(num_bins, num_bands):
    """Split ``num_bins`` into contiguous groups; larger groups come first."""
    if not 1 <= num_bands <= num_bins:
        raise InvalidArgument(f"num_bands must be in [1, {num_bins}], got {num_bands}")
    base, extra = divmod(num_bins, num_bands)
    sizes = np.full(num_bands, base)
    sizes[:extra] += 1
    return np.concatenate([[0], np.cumsum(sizes)])


def multiband_loudness(spec, num_bands=DEFAULT_BANDS):
    """A-weighted log magnitude averaged over ``num_bands`` FFT-bin bands."""
    edges = band_edges(spec.magnitudes.shape[1], num_bands)
    weighted = 20.0 * np.log10(spec.magnitudes + LOG_FLOOR) + dsp.a_weight_db(spec.freqs)
    db = np.add.reduceat(weighted, edges[:-1], axis=1) / np.diff(edges)
    return MultibandLoudness(db, edges)


def equal_occupancy_edges(pitch_samples, num_bins=NUM_QUANTIZER_BINS):
    """Quantile bin edges so every bin holds the same share of ``pitch_samples``.

    Interior edges sit halfway between the last sample of one bin and the
    first sample of the next; the outer edges are the sample extremes.
    """
    values = np.sort(np.asarray(pitch_samples, dtype=np.float64).ravel())
    if np.unique(values).size < num_bins:
        raise InvalidArgument(
            f"need at least {num_bins} distinct pitch values, got {np.unique(values).size}")
    edges = _quantile_edges(values, num_bins)
    if np.any(np.diff(edges) <= 0):
        # repeated values straddle a boundary; place edges on distinct values
        edges = _quantile_edges(np.unique(values), num_bins)
    return edges


def _quantile_edges(values, num_bins):
    N = values.shape[0]
    starts = (np.arange(1, num_bins) * N) // num_bins
    interior = 0.5 * (values[starts - 1] + values[starts])
    return np.concatenate([[values[0]], interior, [values[-1]]])


def quantize_pitch(contour, edges):
    """Bin index per frame with half-open ``[edges[i], edges[i+1])`` bins.

    Values outside the edge range clamp to the first or last bin.
    """
    edges = np.asarray(edges)
    idx = np.searchsorted(edges, np.asarray(contour, dtype=np.float64), side="right") - 1
    return np.clip(idx, 0, edges.shape[0] - 2)
