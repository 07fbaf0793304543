"""Batched maximum-a-posteriori path decoding with banded transitions.

The hot loops live in the compiled ``_viterbi`` extension.  When it is not
importable (or ``PROMREP_PURE_PYTHON`` is set) the numpy implementation in
``_viterbi_py`` is used instead; the two are bit-identical.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BatchDecodeError, DegenerateInputError, InvalidArgument

logger = logging.getLogger(__name__)

if os.environ.get("PROMREP_PURE_PYTHON"):
    from . import _viterbi_py as _kernels
    BACKEND = "python"
else:
    try:
        from . import _viterbi as _kernels
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _viterbi_py as _kernels
        BACKEND = "python"

BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class TransitionModel:
    """Banded log-domain transition kernel.

    ``log_kernel[d + band_halfwidth]`` is the log-probability of moving by
    ``d`` states from an interior state.  Rows whose band is clipped at a
    state boundary are renormalized through ``row_offset`` (zero for
    interior rows), so ``trans(j, i) = log_kernel[i - j + band] + row_offset[j]``.
    """

    num_states: int
    band_halfwidth: int
    log_kernel: np.ndarray = field(repr=False)
    row_offset: np.ndarray = field(repr=False)

    def dense(self):
        """Expand to a full ``num_states x num_states`` log matrix (source, dest)."""
        Q, b = self.num_states, self.band_halfwidth
        out = np.full((Q, Q), -np.inf)
        for j in range(Q):
            lo, hi = max(0, j - b), min(Q - 1, j + b)
            out[j, lo:hi + 1] = self.log_kernel[lo - j + b:hi - j + b + 1] + self.row_offset[j]
        return out

    def log_prob(self, src, dst):
        d = dst - src
        if abs(d) > self.band_halfwidth or not (0 <= dst < self.num_states):
            return -np.inf
        return float(self.log_kernel[d + self.band_halfwidth] + self.row_offset[src])


@dataclass(frozen=True)
class DecodePath:
    states: np.ndarray
    log_joint: float


def make_triangular_transition(num_states, max_jump):
    """Triangular transition model with weight ``max_jump + 1 - |d|`` at offset ``d``.

    Staying on the same state is most likely and jumps of more than
    ``max_jump`` states have zero probability.
    """
    num_states, max_jump = int(num_states), int(max_jump)
    if num_states < 1:
        raise InvalidArgument(f"num_states must be positive, got {num_states}")
    if max_jump < 0:
        raise InvalidArgument(f"max_jump must be non-negative, got {max_jump}")
    if max_jump >= num_states:
        raise InvalidArgument(f"max_jump ({max_jump}) must be < num_states ({num_states})")

    offsets = np.arange(-max_jump, max_jump + 1)
    weights = (max_jump + 1 - np.abs(offsets)).astype(np.float64)
    weights /= weights.sum()
    log_kernel = np.log(weights)

    row_offset = np.zeros(num_states)
    for j in range(num_states):
        lo, hi = max(0, j - max_jump), min(num_states - 1, j + max_jump)
        if hi - lo < 2 * max_jump:
            kept = weights[lo - j + max_jump:hi - j + max_jump + 1].sum()
            row_offset[j] = -math.log(kept)

    log_kernel.setflags(write=False)
    row_offset.setflags(write=False)
    return TransitionModel(num_states, max_jump, log_kernel, row_offset)


def _validate(observations, transition, initial):
    obs = np.ascontiguousarray(observations, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[0] < 1:
        raise InvalidArgument(f"observations must be a non-empty T x Q matrix, got shape {obs.shape}")
    if obs.shape[1] != transition.num_states:
        raise InvalidArgument(
            f"observations have {obs.shape[1]} states, transition model has {transition.num_states}")
    if np.isnan(obs).any() or np.isposinf(obs).any():
        raise InvalidArgument("emissions must be finite or -inf")
    if initial is None:
        init = np.full(transition.num_states, -math.log(transition.num_states))
    else:
        init = np.ascontiguousarray(initial, dtype=np.float64)
        if init.shape != (transition.num_states,):
            raise InvalidArgument(f"initial must have shape ({transition.num_states},)")
        if np.isnan(init).any() or np.isposinf(init).any():
            raise InvalidArgument("initial log-prior must be finite or -inf")
    dead = np.flatnonzero(~np.any(obs > -np.inf, axis=1))
    if dead.size:
        raise DegenerateInputError(int(dead[0]), f"all emissions are -inf at frame {dead[0]}")
    return obs, init


def decode(observations, transition, initial=None):
    """Most likely state path under a banded transition model.

    Parameters
    ----------
    observations : np.ndarray [shape=(T, Q)]
        Log-emission scores; ``-inf`` marks an impossible state.
    transition : TransitionModel
    initial : np.ndarray [shape=(Q,)], optional
        Log-prior over the first state.  Uniform when omitted.

    Returns
    -------
    DecodePath
        Ties are broken toward the lowest state index, both when choosing
        the final state and at every backtrack step.

    Raises
    ------
    DegenerateInputError
        If some frame leaves no state with finite score.
    """
    obs, init = _validate(observations, transition, initial)
    path, log_joint, failed = _kernels.decode_banded(
        obs, transition.log_kernel, transition.row_offset, transition.band_halfwidth, init)
    if failed >= 0:
        raise DegenerateInputError(failed)
    return DecodePath(path, log_joint)


def decode_dense(observations, transition, initial=None, log_trans=None):
    """Reference decoder scoring every (source, dest) pair: O(T * Q^2).

    Used as the baseline in ``promrep bench``.  Pass ``log_trans`` to reuse
    an already expanded matrix.
    """
    obs, init = _validate(observations, transition, initial)
    if log_trans is None:
        log_trans = transition.dense()
    path, log_joint, failed = _kernels.decode_dense(obs, log_trans, init)
    if failed >= 0:
        raise DegenerateInputError(failed)
    return DecodePath(path, log_joint)


def default_workers():
    cap = os.environ.get("PROMREP_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def decode_batch(sequences, transition, initial=None, workers=None):
    """Decode many sequences concurrently, one sequence per task.

    The compiled kernel releases the GIL, so threads run in parallel.
    Result ``i`` is bit-identical to ``decode(sequences[i], ...)``.

    Raises
    ------
    BatchDecodeError
        If any sequence fails.  The other sequences are still decoded and
        available on ``err.results``.
    """
    sequences = list(sequences)
    if not sequences:
        raise InvalidArgument("decode_batch needs at least one sequence")
    workers = workers or default_workers()

    def work(seq):
        try:
            return decode(seq, transition, initial), None
        except (InvalidArgument, DegenerateInputError) as exc:
            return None, exc

    if workers == 1 or len(sequences) == 1:
        outcomes = [work(seq) for seq in sequences]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(sequences))) as pool:
            outcomes = list(pool.map(work, sequences))

    results = [res for res, _ in outcomes]
    errors = {i: exc for i, (_, exc) in enumerate(outcomes) if exc is not None}
    if errors:
        raise BatchDecodeError(results, errors)
    return results


def score_path(observations, transition, states, initial=None):
    """Log-joint of a given path, summed independently of the decoder."""
    obs, init = _validate(observations, transition, initial)
    states = [int(s) for s in states]
    total = init[states[0]] + obs[0, states[0]]
    for t in range(1, len(states)):
        total += transition.log_prob(states[t - 1], states[t]) + obs[t, states[t]]
    return float(total)


def brute_force_decode(observations, transition, initial=None):
    """Exhaustive search over all Q**T paths; a test oracle for ``decode``.

    Each path is scored with the same left-to-right accumulation as the
    decoder.  Among equally scored paths the one that is smallest when
    compared from the last frame backwards wins, which is the path the
    decoder's lowest-index backtrack selects.
    """
    obs, init = _validate(observations, transition, initial)
    T, Q = obs.shape
    if Q ** T > BRUTE_FORCE_LIMIT:
        raise InvalidArgument(f"Q**T = {Q}**{T} exceeds the brute-force limit of {BRUTE_FORCE_LIMIT}")
    trans = transition.dense()

    # scores[s0, s1, ..., st] accumulated one frame at a time
    scores = init + obs[0]
    for t in range(1, T):
        scores = (scores[..., None] + trans.reshape((1,) * (t - 1) + (Q, Q))) + obs[t]
    flat = scores.transpose(tuple(range(T - 1, -1, -1))).ravel()
    best = int(np.argmax(flat))
    if flat[best] == -np.inf:
        raise DegenerateInputError(0, "no admissible path")
    rev = np.unravel_index(best, (Q,) * T)
    states = np.array(rev[::-1], dtype=np.int_)
    return DecodePath(states, float(flat[best]))

