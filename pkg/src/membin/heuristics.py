"""Next-fit dynamic repacking, buffer swaps and random initial packings.

These are the move operators shared by the genetic and annealing searches.
Randomness always comes from an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from itertools import accumulate

import numpy as np

from . import _kernels
from .model import Bin, Constraints, CostModel, PackingSolution, AcceleratorSpec

Rng = np.random.Generator


def make_rng(seed: int | None) -> Rng:
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class NfdParams:
    """Knobs of the next-fit dynamic repacker.

    Bins at or above ``efficiency_threshold`` are kept as they are. The
    admission probabilities let a buffer into the open bin even when it
    does not reduce waste (``p_adm_h``) or does not match the bin width
    (``p_adm_w``). ``c_max`` of None defers to the constraints.
    """
    efficiency_threshold: float = 0.95
    p_adm_w: float = 0.5
    p_adm_h: float = 0.5
    c_max: int | None = None

    def __post_init__(self):
        for name in ("efficiency_threshold", "p_adm_w", "p_adm_h"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.c_max is not None and self.c_max < 1:
            raise ValueError("c_max must be >= 1")


def bin_waste(b: Bin, model: CostModel) -> int:
    """Nominal BRAM bits allocated to ``b`` but not holding parameters."""
    return model.n_bram(b.width, b.depth) * model.nominal_capacity_bits - b.bits


def bin_efficiency(b: Bin, model: CostModel) -> float:
    return b.bits / (model.n_bram(b.width, b.depth) * model.nominal_capacity_bits)


def pack_sequence(spec: AcceleratorSpec, order, params: NfdParams, model: CostModel,
                  constraints: Constraints, u: np.ndarray):
    """Next-fit sweep over ``order`` with pre-drawn admission uniforms ``u``.

    Returns the new bins and their ``(widths, depths, bits, n_layers)`` arrays.
    """
    order = np.asarray(order, dtype=np.int64)
    c_max = constraints.c_max if params.c_max is None else min(params.c_max, constraints.c_max)
    starts, ws, ds, bits, nls = _kernels.nfd_pack(
        order, spec.widths, spec.depths, spec.layer_ids,
        model.mode_widths, model.mode_depths, model.nominal_capacity_bits,
        c_max, u, params.p_adm_h, params.p_adm_w,
        constraints.strict_width_match, constraints.intra_layer_only)
    ids = order.tolist()
    bounds = starts.tolist() + [len(ids)]
    bins = [Bin(tuple(ids[bounds[k]:bounds[k + 1]]), w, d, bb, nl)
            for k, (w, d, bb, nl) in enumerate(zip(ws.tolist(), ds.tolist(),
                                                   bits.tolist(), nls.tolist()))]
    return bins, (ws, ds, bits, nls)


def nfd_repack(solution: PackingSolution, params: NfdParams, model: CostModel,
               constraints: Constraints, rng: Rng) -> PackingSolution:
    """Decompose poorly mapped bins and re-pack their buffers next-fit style.

    A bin survives when its efficiency reaches ``params.efficiency_threshold``.
    Surviving bins come first in the output, followed by the re-packed ones.
    """
    geom = solution.geometry()
    costs = solution.bin_costs(model)
    bits = geom[2]
    keep = bits >= params.efficiency_threshold * model.nominal_capacity_bits * costs
    if keep.all():
        return solution
    bins = solution.bins
    kept_idx = np.flatnonzero(keep)
    pool = [i for k in np.flatnonzero(~keep).tolist() for i in bins[k].buffers]
    order = np.asarray(pool, dtype=np.int64)[rng.permutation(len(pool))]
    if constraints.intra_layer_only:
        # next-fit only ever sees its neighbour, so keep each layer contiguous
        order = order[np.argsort(solution.spec.layer_ids[order], kind="stable")]
    u = rng.random((len(pool), 2))
    new, new_geom = pack_sequence(solution.spec, order, params, model, constraints, u)
    new_costs = _kernels.batch_bin_cost(new_geom[0], new_geom[1],
                                        model.mode_widths, model.mode_depths)
    out_bins = tuple(bins[k] for k in kept_idx.tolist()) + tuple(new)
    out_geom = tuple(np.concatenate((g[kept_idx], ng)) for g, ng in zip(geom, new_geom))
    out_costs = {model: np.concatenate((costs[kept_idx], new_costs))}
    return PackingSolution(out_bins, solution.spec, out_geom, out_costs)


def _derive(solution: PackingSolution, changed: dict, removed: int | None,
            added: list) -> PackingSolution:
    """Child of ``solution`` with some bins replaced, one dropped, some appended.

    Cached per-bin arrays are carried over and patched for the touched bins.
    """
    out = list(solution.bins)
    for k, b in changed.items():
        out[k] = b
    if removed is not None:
        del out[removed]
    out.extend(added)
    if solution._geom is None:
        return PackingSolution(tuple(out), solution.spec)

    def patch(arr, value_of):
        arr = arr.copy()
        for k, b in changed.items():
            arr[k] = value_of(b)
        if removed is not None:
            arr = np.delete(arr, removed)
        if added:
            arr = np.concatenate((arr, np.array([value_of(b) for b in added], dtype=np.int64)))
        return arr

    geom = tuple(patch(arr, lambda b, f=f: b[f]) for f, arr in zip((1, 2, 3, 4), solution._geom))
    costs = {m: patch(c, lambda b, m=m: m.n_bram(b.width, b.depth))
             for m, c in solution._costs.items()}
    return PackingSolution(tuple(out), solution.spec, geom, costs)


def _pick_buffer(bins, rng: Rng):
    cum = list(accumulate(len(b.buffers) for b in bins))
    k = int(rng.integers(cum[-1]))
    src = bisect.bisect_right(cum, k)
    member = k - (cum[src - 1] if src else 0)
    return src, member


def buffer_swap(solution: PackingSolution, constraints: Constraints, rng: Rng,
                max_tries: int = 16) -> PackingSolution:
    """Move one buffer to another bin, or exchange buffers between two bins.

    The two kinds are picked with equal probability. Candidates that break
    cardinality or the intra-layer rule are never drawn; if nothing legal
    turns up after ``max_tries`` draws the input is returned.
    """
    bins = solution.bins
    spec = solution.spec
    if len(spec) < 2 or not bins:
        return solution
    intra = constraints.intra_layer_only
    c_max = constraints.c_max
    layer_of = spec._cols[2]
    bin_layer = [layer_of[b.buffers[0]] for b in bins] if intra else None
    for _ in range(max_tries):
        if rng.random() < 0.5:
            src, member = _pick_buffer(bins, rng)
            buf = bins[src].buffers[member]
            dests = [j for j, b in enumerate(bins)
                     if j != src and len(b.buffers) < c_max
                     and (not intra or bin_layer[j] == layer_of[buf])]
            if len(bins[src].buffers) > 1:
                dests.append(-1)
            if not dests:
                continue
            dst = dests[int(rng.integers(len(dests)))]
            rest = bins[src].buffers[:member] + bins[src].buffers[member + 1:]
            changed = {}
            added = []
            if dst < 0:
                added.append(spec.make_bin((buf,)))
            else:
                changed[dst] = spec.make_bin(bins[dst].buffers + (buf,))
            if rest:
                changed[src] = spec.make_bin(rest)
            return _derive(solution, changed, None if rest else src, added)
        if len(bins) < 2:
            continue
        i = int(rng.integers(len(bins)))
        if intra:
            partners = [j for j in range(len(bins))
                        if j != i and bin_layer[j] == bin_layer[i]]
        else:
            partners = None
        if partners is not None:
            if not partners:
                continue
            j = partners[int(rng.integers(len(partners)))]
        else:
            j = int(rng.integers(len(bins) - 1))
            j += j >= i
        bi, bj = bins[i].buffers, bins[j].buffers
        if len(bi) == 1 and len(bj) == 1:
            continue  # swapping two singletons leaves the partition unchanged
        ki = int(rng.integers(len(bi)))
        kj = int(rng.integers(len(bj)))
        changed = {i: spec.make_bin(bi[:ki] + (bj[kj],) + bi[ki + 1:]),
                   j: spec.make_bin(bj[:kj] + (bi[ki],) + bj[kj + 1:])}
        return _derive(solution, changed, None, [])
    return solution


def random_feasible(spec: AcceleratorSpec, constraints: Constraints, rng: Rng) -> PackingSolution:
    """Shuffle the buffers and deal them into bins of random size 1..c_max."""
    if constraints.intra_layer_only:
        groups: dict[int, list[int]] = {}
        for b in spec.buffers:
            groups.setdefault(b.layer_id, []).append(b.id)
        pools = [groups[k] for k in sorted(groups)]
    else:
        pools = [list(range(len(spec)))]
    out = []
    for pool in pools:
        order = np.asarray(pool, dtype=np.int64)[rng.permutation(len(pool))].tolist()
        pos = 0
        while pos < len(order):
            size = int(rng.integers(1, constraints.c_max + 1))
            out.append(spec.make_bin(order[pos:pos + size]))
            pos += size
    return PackingSolution(tuple(out), spec)
