"""Regenerate tests/derived_constants.json from the raw network tables.

Deliberately avoids importing membin: bit totals, per-buffer baselines and
the exact intra-layer optimum are recomputed here with plain integer
arithmetic so the tests compare two independent derivations.

    python tools/derive_constants.py > tests/derived_constants.json
"""
import json
import sys
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "membin" / "data"
MODES = [(1, 16384), (2, 8192), (4, 4096), (9, 2048), (18, 1024), (36, 512)]
NETS = ["cnv-w1a1", "cnv-w2a2", "tincy-yolo", "dorefanet", "rebnet", "rn50-w1a2"]
C_MAX = 4


def ceil_div(a, b):
    return (a + b - 1) // b


def brams(width, depth, modes=MODES):
    return min(ceil_div(width, mw) * ceil_div(depth, md) for mw, md in modes)


def intra_optimum(layers):
    # every buffer of a layer has the same shape, so only group sizes matter
    total = 0
    for row in layers:
        w = row["simd"] * row["width"]
        best = [0] * (row["pe"] + 1)
        for k in range(1, row["pe"] + 1):
            best[k] = min(brams(w, row["depth"] * g) + best[k - g]
                          for g in range(1, min(C_MAX, k) + 1))
        total += best[row["pe"]]
    return total


def main():
    out = {"modes": MODES, "c_max": C_MAX, "networks": {}}
    for name in NETS:
        layers = json.loads((DATA / f"{name}.json").read_text())["layers"]
        out["networks"][name] = {
            "buffers": sum(r["pe"] for r in layers),
            "total_bits": sum(r["pe"] * r["simd"] * r["width"] * r["depth"] for r in layers),
            "baseline_bram": sum(r["pe"] * brams(r["simd"] * r["width"], r["depth"]) for r in layers),
            "baseline_bram_base_frame": sum(
                r["pe"] * brams(r["simd"] * r["width"], r["depth"], [(18, 1024)]) for r in layers),
            "intra_optimum_bram": intra_optimum(layers),
        }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
