"""Compare the compiled and pure-numpy kernel backends.

Runs the same workload twice in subprocesses, once with RLFC_NUMBA=1 and
once with RLFC_NUMBA=0, and prints a side-by-side table:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --worker   # current backend only
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workload(repeat):
    from rlfc import decoder, encoder, kernels
    from rlfc.bise import RANGE_TABLE
    from rlfc.lightfield import SyntheticSpec, synthesize_lightfield

    results = {"backend": "numba" if kernels.USE_NUMBA else "numpy"}

    # 1. BISE roundtrips: one entry per digit mode
    rng = np.random.default_rng(1)
    seqs = 0
    t0 = time.perf_counter()
    for idx in (5, 9, 16):           # N=8 bits, N=20 quint, N=96 trit
        entry = RANGE_TABLE[idx]
        n = 16
        values = rng.integers(0, entry.cardinality, size=(2000, n),
                              dtype=np.uint32)
        nbits = kernels.payload_bits(entry.mode, entry.low_bits, n)
        stride = (nbits + 7) // 8
        decoded = np.empty_like(values)
        scratch = np.empty(stride, dtype=np.uint8)
        for _ in range(repeat):
            assert kernels.bise_roundtrip_batch(values, entry.mode,
                                                entry.low_bits, stride,
                                                decoded, scratch) == -1
            seqs += len(values)
    results["bise_us_per_seq"] = (time.perf_counter() - t0) / seqs * 1e6

    # 2. full encode of a small synthetic grid
    lf = synthesize_lightfield(SyntheticSpec(s_count=4, t_count=4,
                                             width=32, height=32, seed=3))
    t0 = time.perf_counter()
    for _ in range(repeat):
        stream, _ = encoder.compress(lf)
    results["encode_s"] = (time.perf_counter() - t0) / repeat

    # 3. full decode
    state = decoder.init(stream)
    t0 = time.perf_counter()
    for _ in range(repeat):
        decoder.decode_all(state)
    results["decode_all_s"] = (time.perf_counter() - t0) / repeat

    # 4. random-access block decode latency
    hdr = state.header
    wb, hb = hdr.block_grid
    picks = rng.integers(0, [hdr.s_count, hdr.t_count, wb, hb, 3],
                         size=(2000, 5))
    t0 = time.perf_counter()
    for s, t, bx, by, c in picks:
        decoder.decode_block(state, (int(s), int(t)), (int(bx), int(by)),
                             int(c))
    results["block_us"] = (time.perf_counter() - t0) / len(picks) * 1e6
    return results


ROWS = (("bise_us_per_seq", "BISE roundtrip (us/seq)"),
        ("encode_s", "encode 4x4x32x32 (s)"),
        ("decode_all_s", "decode_all (s)"),
        ("block_us", "decode_block (us)"))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--worker", action="store_true",
                        help="run under the current backend, emit JSON")
    args = parser.parse_args(argv)

    if args.worker:
        print(json.dumps(_workload(args.repeat)))
        return 0

    reports = {}
    for flag in ("1", "0"):
        env = dict(os.environ, RLFC_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True)
        reports[flag] = json.loads(proc.stdout.strip().splitlines()[-1])

    fast, slow = reports["1"], reports["0"]
    print(f"{'workload':<28} {fast['backend']:>10} {slow['backend']:>10} "
          f"{'speedup':>8}")
    for key, label in ROWS:
        ratio = slow[key] / fast[key] if fast[key] else float("inf")
        print(f"{label:<28} {fast[key]:>10.2f} {slow[key]:>10.2f} "
              f"{ratio:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
