"""Time the compiled and numpy Viterbi kernels on the same inputs.

Usage::

    python3 benchmarks/bench_backends.py --states 1440 --frames 500 --batch 4
"""

import argparse
import json
import time

import numpy as np

from promrep import _viterbi_py, viterbi
from promrep.cli import random_emissions

try:
    from promrep import _viterbi as _compiled
except ImportError:  # extension not built
    _compiled = None


def _time(fn, sequences):
    start = time.perf_counter()
    results = [fn(seq) for seq in sequences]
    return time.perf_counter() - start, results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--states", type=int, default=1440)
    parser.add_argument("--frames", type=int, default=500)
    parser.add_argument("--batch", type=int, default=4)
    parser.add_argument("--band", type=int, default=240)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    sequences = random_emissions(rng, args.batch, args.frames, args.states)
    tm = viterbi.make_triangular_transition(args.states, args.band)
    init = np.full(args.states, -np.log(args.states))
    dense = tm.dense()

    backends = {"python": _viterbi_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    report = {"states": args.states, "frames": args.frames, "batch": args.batch, "band": args.band}
    paths = {}
    for name, mod in backends.items():
        banded_s, banded = _time(
            lambda e: mod.decode_banded(e, tm.log_kernel, tm.row_offset, tm.band_halfwidth, init),
            sequences)
        dense_s, dense_res = _time(lambda e: mod.decode_dense(e, dense, init), sequences)
        report[f"{name}_banded_s"] = banded_s
        report[f"{name}_dense_s"] = dense_s
        paths[name] = [r[0] for r in banded] + [r[0] for r in dense_res]
    if "cython" in paths:
        report["cython_speedup_banded"] = report["python_banded_s"] / report["cython_banded_s"]
        report["identical"] = all(np.array_equal(a, b) for a, b in zip(paths["python"], paths["cython"]))
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
