"""Time the numba kernels against their pure Python/numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]

Both builds are imported from the same module, so MEMBIN_DISABLE_JIT does
not matter here. Compilation happens before timing starts.
"""
import argparse
import time

import numpy as np

from membin import _kernels
from membin.model import CostModel, Constraints
from membin.specio import load_spec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--spec", default="rn50-w1a2")
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    spec = load_spec(args.spec)
    model = CostModel.default()
    cons = Constraints()
    rng = np.random.default_rng(0)
    n = len(spec)
    order = rng.permutation(n).astype(np.int64)
    u = rng.random((n, 2))
    mw, md = model.mode_widths, model.mode_depths
    w, d, lay = spec.widths, spec.depths, spec.layer_ids

    small = load_spec("cnv-w1a1")
    sw, sd, sl = small.widths[:10], small.depths[:10], small.layer_ids[:10]

    cases = [
        (f"batch_bin_cost ({n} bins)",
         lambda k: k(w, d, mw, md),
         _kernels.batch_bin_cost_py, _kernels.batch_bin_cost_jit),
        (f"nfd_pack ({n} buffers)",
         lambda k: k(order, w, d, lay, mw, md, model.nominal_capacity_bits, cons.c_max,
                     u, 0.1, 0.1, True, False),
         _kernels.nfd_pack_py, _kernels.nfd_pack_jit),
        ("oracle_search (10 buffers)",
         lambda k: k(sw, sd, sl, 4, False, mw, md),
         _kernels.oracle_search_py, _kernels.oracle_search_jit),
    ]
    print(f"{'kernel':<30}{'python (ms)':>14}{'numba (ms)':>14}{'speedup':>10}")
    for label, call, py, jit in cases:
        call(jit)  # compile / load cache
        t_py, r_py = best_of(lambda: call(py), args.repeat)
        t_jit, r_jit = best_of(lambda: call(jit), args.repeat)
        same = all(np.array_equal(np.asarray(a), np.asarray(b))
                   for a, b in zip(np.atleast_1d(r_py) if not isinstance(r_py, tuple) else r_py,
                                   np.atleast_1d(r_jit) if not isinstance(r_jit, tuple) else r_jit))
        flag = "" if same else "  MISMATCH"
        print(f"{label:<30}{t_py * 1e3:>14.3f}{t_jit * 1e3:>14.3f}{t_py / t_jit:>9.1f}x{flag}")


if __name__ == "__main__":
    main()
