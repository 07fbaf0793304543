"""Command-line interface.

Every subcommand exits non-zero on failure after printing one line of the
form ``error: <Kind>: <message>`` to stderr.
"""

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import augment, dsp, edit, features, harmonics, metrics, represent, salience, viterbi
from .errors import FormatError, InvalidArgument

logger = logging.getLogger("promrep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _wav_inputs(path):
    path = Path(path)
    if path.is_dir():
        return sorted(path.glob("*.wav"))
    return [path]


def _map_files(fn, items):
    workers = viterbi.default_workers()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_csv(target, header, rows):
    if target == "-":
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _json_value(value):
    return None if isinstance(value, float) and math.isnan(value) else value


# analyze -----------------------------------------------------------------

def cmd_analyze(args):
    src = Path(args.input)
    ppg = None
    if args.ppg:
        ppg = salience.load_posteriorgram(args.ppg, represent.PHONEMES)
    if src.is_dir():
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        if ppg is not None:
            raise InvalidArgument("--ppg applies to a single input file, not a directory")
        jobs = [(wav, out_dir / (wav.stem + ".pmrp")) for wav in _wav_inputs(src)]
    else:
        jobs = [(src, Path(args.output))]

    def run(job):
        wav, out = job
        bundle = features.analyze(dsp.read_wav(wav), ppg, args.bands)
        features.save_bundle(out, bundle)
        if args.csv:
            csv_path = args.csv if len(jobs) == 1 else str(out.with_suffix(".csv"))
            _write_csv(csv_path, *features.frame_table(bundle))
        return {"input": str(wav), "output": str(out), "frames": bundle.num_frames}

    for report in _map_files(run, jobs):
        if args.csv != "-":
            print(json.dumps(report))
    return 0


# edit --------------------------------------------------------------------

def cmd_edit(args):
    if all(v is None for v in (args.pitch_cents, args.stretch, args.loudness_db,
                               args.ratio_f, args.ratio_l)):
        raise UsageError("edit: give at least one of --pitch-cents, --stretch, "
                         "--loudness-db, --ratio-f/--ratio-l")
    bundle = features.load_bundle(args.input)
    if args.pitch_cents is not None:
        bundle = edit.shift_pitch(bundle, args.pitch_cents)
    if args.stretch is not None:
        if bundle.sppg is None:
            raise InvalidArgument("--stretch needs an archive with an sppg tensor "
                                  "(run analyze with --ppg)")
        bundle = edit.time_stretch(bundle, args.stretch, alpha=args.alpha)
    if args.loudness_db is not None:
        bundle = edit.edit_loudness(bundle, args.loudness_db)
    if args.ratio_f is not None or args.ratio_l is not None:
        r_f = bundle.ratio_f if args.ratio_f is None else args.ratio_f
        r_l = bundle.ratio_l if args.ratio_l is None else args.ratio_l
        bundle = edit.set_ratios(bundle, r_f, r_l)
    features.save_bundle(args.output, bundle)
    report = {"output": args.output, "frames": bundle.num_frames,
              "pitch_clamped": bundle.pitch_clamped}
    print(json.dumps(report))
    return 0


# bench -------------------------------------------------------------------

def random_emissions(rng, batch, frames, states):
    """Log-posteriors with a drifting peak, resembling pitch posteriorgrams."""
    out = []
    for _ in range(batch):
        center = np.cumsum(rng.normal(0.0, 3.0, frames)) + rng.uniform(0.2, 0.8) * states
        center = np.clip(center, 0, states - 1)
        logits = -0.5 * ((np.arange(states)[None, :] - center[:, None]) / 20.0) ** 2
        logits += rng.gumbel(size=(frames, states))
        out.append(logits - np.logaddexp.reduce(logits, axis=1, keepdims=True))
    return out


def run_bench(states=1440, frames=500, batch=64, band=240, seed=0, workers=None):
    rng = np.random.default_rng(seed)
    sequences = random_emissions(rng, batch, frames, states)
    transition = viterbi.make_triangular_transition(states, band)
    dense = transition.dense()

    start = time.perf_counter()
    naive = [viterbi.decode_dense(seq, transition, log_trans=dense) for seq in sequences]
    naive_s = time.perf_counter() - start

    start = time.perf_counter()
    banded = [viterbi.decode(seq, transition) for seq in sequences]
    banded_s = time.perf_counter() - start

    start = time.perf_counter()
    parallel = viterbi.decode_batch(sequences, transition, workers=workers)
    parallel_s = time.perf_counter() - start

    identical = all(
        np.array_equal(a.states, b.states) and np.array_equal(a.states, c.states)
        and a.log_joint == b.log_joint == c.log_joint
        for a, b, c in zip(naive, banded, parallel))
    return {
        "naive_s": naive_s,
        "banded_s": banded_s,
        "parallel_s": parallel_s,
        "speedup_banded": naive_s / banded_s,
        "speedup_parallel": naive_s / parallel_s,
        "identical": identical,
        "backend": viterbi.BACKEND,
        "workers": workers or viterbi.default_workers(),
        "states": states, "frames": frames, "batch": batch, "band": band, "seed": seed,
    }


def cmd_bench(args):
    for name in ("states", "frames", "batch"):
        if getattr(args, name) <= 0:
            raise InvalidArgument(f"--{name} must be positive")
    report = run_bench(args.states, args.frames, args.batch, args.band, args.seed, args.workers)
    print(json.dumps(report))
    if not report["identical"]:
        raise RuntimeError("decoders disagree")
    return 0


# augment -----------------------------------------------------------------

def cmd_augment(args):
    inputs = [wav for item in args.inputs for wav in _wav_inputs(item)]
    if not inputs:
        raise InvalidArgument("no WAV inputs found")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    streams = np.random.SeedSequence(args.seed).spawn(len(inputs))

    def run(job):
        wav, seq = job
        x = dsp.read_wav(wav)
        target = args.target_rate or x.sample_rate
        pair = augment.make_augmented_pair(x, target, np.random.default_rng(seq))
        spectral_path = out_dir / f"{wav.stem}-spectral.wav"
        volume_path = out_dir / f"{wav.stem}-volume.wav"
        dsp.write_wav(spectral_path, pair.spectral)
        dsp.write_wav(volume_path, pair.volume)
        return [
            {"source": str(wav), "output": str(spectral_path), "r_f": pair.r_f, "r_l": 0.0},
            {"source": str(wav), "output": str(volume_path), "r_f": 0.0, "r_l": pair.r_l},
        ]

    rows = [row for rows in _map_files(run, list(zip(inputs, streams))) for row in rows]
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(rows, indent=2))
    if args.csv:
        _write_csv(args.csv, ["source", "output", "r_f", "r_l"],
                   [[r["source"], r["output"], r["r_f"], r["r_l"]] for r in rows])
    print(json.dumps({"manifest": str(manifest), "copies": len(rows)}))
    return 0


# harmonics ---------------------------------------------------------------

def harmonic_table(audio, w=harmonics.DEFAULT_W, alpha=represent.DEFAULT_ALPHA):
    audio = features.to_analysis_rate(audio)
    post = salience.pitch_posteriorgram(audio)
    f0 = represent.decode_pitch(post)
    voiced = represent.voiced_mask(represent.periodicity(post), alpha)
    track = harmonics.estimate_harmonics(salience.salience_spectrogram(audio), f0, voiced, w)
    centroid = harmonics.spectral_centroid(dsp.stft_magnitude(audio))
    header = ["frame", "f0_hz", "h1_hz", "h2_hz", "centroid_hz", "voiced"]
    rows = []
    for t in range(f0.shape[0]):
        h1, h2 = track.h1[t], track.h2[t]
        rows.append([t, float(f0[t]), "" if np.isnan(h1) else float(h1),
                     "" if np.isnan(h2) else float(h2), float(centroid.hz[t]), int(voiced[t])])
    return header, rows


def cmd_harmonics(args):
    header, rows = harmonic_table(dsp.read_wav(args.input), args.w, args.alpha)
    _write_csv(args.csv or "-", header, rows)
    return 0


# metrics -----------------------------------------------------------------

def compare(ref, est, alpha=represent.DEFAULT_ALPHA):
    if ref.num_frames != est.num_frames:
        raise InvalidArgument(
            f"archives differ in frame count ({ref.num_frames} vs {est.num_frames})")
    ref_v = represent.voiced_mask(ref.periodicity, alpha)
    est_v = represent.voiced_mask(est.periodicity, alpha)
    report = {
        "delta_cents": metrics.pitch_error_cents(ref.pitch, est.pitch, ref_v, est_v),
        "delta_periodicity": metrics.periodicity_rmse(ref.periodicity, est.periodicity),
        "delta_dba": metrics.loudness_error_dba(ref.loudness, est.loudness),
        "delta_ppg": (metrics.ppg_jsd(ref.sppg, est.sppg)
                      if ref.sppg is not None and est.sppg is not None else math.nan),
        "frames_used": int(np.count_nonzero(ref_v & est_v)),
    }
    return report


def cmd_metrics(args):
    report = compare(features.load_bundle(args.reference), features.load_bundle(args.estimate),
                     args.alpha)
    if args.csv:
        keys = list(report)
        _write_csv(args.csv, keys, [[report[k] for k in keys]])
    print(json.dumps({k: _json_value(v) for k, v in report.items()}))
    return 0


# entry point -------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="promrep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", help="compute the representation of a WAV file")
    p.add_argument("input", help="WAV file or directory of WAV files")
    p.add_argument("output", help="archive path (directory when input is a directory)")
    p.add_argument("--ppg", help="archive holding a T x 40 phonetic posteriorgram")
    p.add_argument("--bands", type=int, default=represent.DEFAULT_BANDS)
    p.add_argument("--csv", help="also write per-frame CSV here ('-' for stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("edit", help="edit an archive")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--pitch-cents", type=float)
    p.add_argument("--stretch", type=float)
    p.add_argument("--loudness-db", type=float)
    p.add_argument("--ratio-f", type=float)
    p.add_argument("--ratio-l", type=float)
    p.add_argument("--alpha", type=float, default=represent.DEFAULT_ALPHA)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("bench", help="time naive, banded and batched Viterbi decoders")
    p.add_argument("--states", type=int, default=1440)
    p.add_argument("--frames", type=int, default=500)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--band", type=int, default=240)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("augment", help="write spectral-balance and volume copies")
    p.add_argument("inputs", nargs="+", help="WAV files or directories")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-rate", type=int)
    p.add_argument("--csv", help="also write the manifest as CSV")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("harmonics", help="per-frame F0/H1/H2/centroid CSV")
    p.add_argument("input")
    p.add_argument("--w", type=float, default=harmonics.DEFAULT_W)
    p.add_argument("--alpha", type=float, default=represent.DEFAULT_ALPHA)
    p.add_argument("--csv", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_harmonics)

    p = sub.add_parser("metrics", help="compare two archives")
    p.add_argument("reference")
    p.add_argument("estimate")
    p.add_argument("--alpha", type=float, default=represent.DEFAULT_ALPHA)
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("promrep: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return 2
    except (InvalidArgument, FormatError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
