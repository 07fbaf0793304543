"""Audio to representation bundle, and bundle to/from PMRP archives."""

import logging

import numpy as np

from . import archive, dsp, represent, salience
from .edit import RepresentationBundle
from .errors import FormatError
from .represent import PHONEMES, MultibandLoudness, Posteriorgram, Sppg

logger = logging.getLogger(__name__)

PPG_FRAME_SLACK = 2


def to_analysis_rate(audio):
    if audio.sample_rate == dsp.SAMPLE_RATE:
        return audio
    return dsp.resample(audio, audio.sample_rate, dsp.SAMPLE_RATE)


def align_ppg(ppg, num_frames):
    """Trim a PPG (or the analysis) to a common frame count.

    Returns the common frame count.  Mismatches beyond two frames are an
    error.
    """
    diff = ppg.num_frames - num_frames
    if abs(diff) > PPG_FRAME_SLACK:
        raise FormatError(
            f"PPG has {ppg.num_frames} frames but the audio analysis has {num_frames}")
    if diff:
        logger.warning("PPG frame count differs by %d; truncating to %d frames",
                       diff, min(ppg.num_frames, num_frames))
    return min(ppg.num_frames, num_frames)


def analyze(audio, ppg=None, num_bands=represent.DEFAULT_BANDS):
    """Compute pitch, periodicity, loudness and (optionally) the sparse PPG.

    ``audio`` is resampled to the analysis rate first.  ``ppg`` is a dense
    phonetic posteriorgram on the same frame grid.
    """
    audio = to_analysis_rate(audio)
    post = salience.pitch_posteriorgram(audio)
    pitch = represent.decode_pitch(post)
    periodicity = represent.periodicity(post)
    loudness = represent.multiband_loudness(dsp.stft_magnitude(audio), num_bands)

    dense, sppg = None, None
    T = pitch.shape[0]
    if ppg is not None:
        T = align_ppg(ppg, T)
        pitch, periodicity = pitch[:T], periodicity[:T]
        loudness = MultibandLoudness(loudness.db[:T], loudness.band_edges)
        dense = ppg.probs[:T]
        method, k = represent.DEFAULT_SPARSITY
        sppg = represent.sparsify(Posteriorgram(dense, ppg.labels), method, k)
    return RepresentationBundle(pitch, periodicity, loudness, dense, sppg,
                                sample_rate=audio.sample_rate, hop=dsp.HOP_SIZE,
                                labels=ppg.labels if ppg is not None else PHONEMES)


def bundle_to_archive(bundle):
    tensors = {
        "pitch": archive.Tensor(bundle.pitch),
        "periodicity": archive.Tensor(bundle.periodicity),
        "loudness": archive.Tensor(bundle.loudness.db),
    }
    if bundle.ppg is not None:
        tensors["ppg"] = archive.Tensor(bundle.ppg, list(bundle.labels))
    if bundle.sppg is not None:
        tensors["sppg"] = archive.Tensor(bundle.sppg.probs, list(bundle.sppg.labels))
    return archive.Archive(tensors, bundle.sample_rate, bundle.hop, bundle.ratio_f, bundle.ratio_l)


def archive_to_bundle(arc):
    """Rebuild a bundle from an archive written by ``bundle_to_archive``."""
    missing = {"pitch", "periodicity", "loudness"} - set(arc.tensors)
    if missing:
        raise FormatError(f"archive lacks required tensors: {sorted(missing)}")
    as64 = lambda name: arc.tensors[name].data.astype(np.float64)  # noqa: E731
    loud = as64("loudness")
    fft_bins = dsp.FFT_SIZE // 2 + 1
    loudness = MultibandLoudness(loud, represent.band_edges(fft_bins, loud.shape[1]))
    ppg, sppg, labels = None, None, PHONEMES
    if "ppg" in arc.tensors:
        ppg = as64("ppg")
        labels = tuple(arc.tensors["ppg"].labels or PHONEMES)
    if "sppg" in arc.tensors:
        method, k = represent.DEFAULT_SPARSITY
        sppg = Sppg(as64("sppg"), tuple(arc.tensors["sppg"].labels or PHONEMES), method, k)
        labels = sppg.labels
    return RepresentationBundle(as64("pitch")[:, 0], as64("periodicity")[:, 0], loudness,
                                ppg, sppg, arc.ratio_f, arc.ratio_l, arc.sample_rate, arc.hop,
                                labels)


def save_bundle(path, bundle):
    archive.write(path, bundle_to_archive(bundle))


def load_bundle(path):
    return archive_to_bundle(archive.read_archive(path))


def frame_table(bundle):
    """Rows of per-frame values for CSV export."""
    header = ["frame", "pitch_hz", "periodicity"]
    header += [f"loudness_{b}" for b in range(bundle.loudness.num_bands)]
    if bundle.sppg is not None:
        header.append("phoneme")
    rows = []
    for t in range(bundle.num_frames):
        row = [t, float(bundle.pitch[t]), float(bundle.periodicity[t])]
        row += [float(v) for v in bundle.loudness.db[t]]
        if bundle.sppg is not None:
            row.append(bundle.sppg.labels[int(np.argmax(bundle.sppg.probs[t]))])
        rows.append(row)
    return header, rows

