"""Hot loops: batched bin costing, the next-fit-dynamic sweep and the
exhaustive partition search.

Each kernel has a numba ``@njit`` build and a pure Python/numpy build with
the same contract. The JIT path is used when numba imports and
``MEMBIN_DISABLE_JIT`` is unset (or ``0``). Both builds consume the same
pre-drawn random numbers, so they return identical results for a seed.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
JIT_ENABLED = HAVE_NUMBA and os.environ.get("MEMBIN_DISABLE_JIT", "0") in ("", "0")


# --------------------------------------------------------------------------
# batched bin cost

def batch_bin_cost_py(widths, depths, mode_w, mode_d):
    if len(widths) == 0:
        return np.zeros(0, dtype=np.int64)
    cols = -(-widths[:, None] // mode_w[None, :])
    rows = -(-depths[:, None] // mode_d[None, :])
    return (cols * rows).min(axis=1)


def _batch_bin_cost_loop(widths, depths, mode_w, mode_d):
    out = np.empty(widths.shape[0], dtype=np.int64)
    for i in range(widths.shape[0]):
        best = -1
        for m in range(mode_w.shape[0]):
            n = ((widths[i] + mode_w[m] - 1) // mode_w[m]) * \
                ((depths[i] + mode_d[m] - 1) // mode_d[m])
            if best < 0 or n < best:
                best = n
        out[i] = best
    return out


# --------------------------------------------------------------------------
# next-fit dynamic sweep
#
# order     buffer indices in packing order
# u         (len(order), 2) uniforms; column 0 gates height admission,
#           column 1 width admission
# returns   (starts, widths, depths, bits, n_layers) per produced bin;
#           bin k holds order[starts[k]:starts[k+1]]

def nfd_pack_py(order, widths, depths, layers, mode_w, mode_d, nominal,
                c_max, u, p_h, p_w, strict_width, intra):
    order = order.tolist()
    ws = widths.tolist()
    ds = depths.tolist()
    ls = layers.tolist()
    mws = mode_w.tolist()
    mds = mode_d.tolist()
    modes = list(zip(mws, mds))
    uh = u[:, 0].tolist()
    uw = u[:, 1].tolist()
    cache = {}

    def cost(w, d):
        key = (w, d)
        c = cache.get(key)
        if c is None:
            c = min((-(-w // a)) * (-(-d // b)) for a, b in modes)
            cache[key] = c
        return c

    starts, bws, bds, bbits, bnl = [], [], [], [], []
    cnt = 0
    bw = bd = bb = 0
    blayers = []
    for pos, i in enumerate(order):
        w = ws[i]
        d = ds[i]
        lay = ls[i]
        if cnt > 0:
            nw = w if w > bw else bw
            nd = bd + d
            waste = cost(bw, bd) * nominal - bb
            new_waste = cost(nw, nd) * nominal - bb - w * d
            if (cnt < c_max
                    and (new_waste < waste or uh[pos] < p_h)
                    and (not strict_width or w == bw or uw[pos] < p_w)
                    and (not intra or lay == blayers[0])):
                cnt += 1
                bw, bd, bb = nw, nd, bb + w * d
                if lay not in blayers:
                    blayers.append(lay)
                continue
            bws.append(bw)
            bds.append(bd)
            bbits.append(bb)
            bnl.append(len(blayers))
        starts.append(pos)
        cnt = 1
        bw, bd, bb = w, d, w * d
        blayers = [lay]
    if cnt > 0:
        bws.append(bw)
        bds.append(bd)
        bbits.append(bb)
        bnl.append(len(blayers))
    as_arr = lambda x: np.array(x, dtype=np.int64)
    return as_arr(starts), as_arr(bws), as_arr(bds), as_arr(bbits), as_arr(bnl)


def _nfd_pack_loop(order, widths, depths, layers, mode_w, mode_d, nominal,
                   c_max, u, p_h, p_w, strict_width, intra):
    n = order.shape[0]
    nm = mode_w.shape[0]
    starts = np.empty(n, dtype=np.int64)
    bws = np.empty(n, dtype=np.int64)
    bds = np.empty(n, dtype=np.int64)
    bbits = np.empty(n, dtype=np.int64)
    bnl = np.empty(n, dtype=np.int64)
    blayers = np.empty(max(c_max, 1), dtype=np.int64)
    nb = 0
    cnt = 0
    nl = 0
    bw = 0
    bd = 0
    bb = 0
    for pos in range(n):
        i = order[pos]
        w = widths[i]
        d = depths[i]
        lay = layers[i]
        if cnt > 0:
            nw = w if w > bw else bw
            nd = bd + d
            c0 = -1
            c1 = -1
            for m in range(nm):
                a = ((bw + mode_w[m] - 1) // mode_w[m]) * ((bd + mode_d[m] - 1) // mode_d[m])
                b = ((nw + mode_w[m] - 1) // mode_w[m]) * ((nd + mode_d[m] - 1) // mode_d[m])
                if c0 < 0 or a < c0:
                    c0 = a
                if c1 < 0 or b < c1:
                    c1 = b
            waste = c0 * nominal - bb
            new_waste = c1 * nominal - bb - w * d
            if (cnt < c_max
                    and (new_waste < waste or u[pos, 0] < p_h)
                    and (not strict_width or w == bw or u[pos, 1] < p_w)
                    and (not intra or lay == blayers[0])):
                seen = False
                for k in range(nl):
                    if blayers[k] == lay:
                        seen = True
                if not seen:
                    blayers[nl] = lay
                    nl += 1
                cnt += 1
                bw = nw
                bd = nd
                bb += w * d
                continue
            bws[nb - 1] = bw
            bds[nb - 1] = bd
            bbits[nb - 1] = bb
            bnl[nb - 1] = nl
        starts[nb] = pos
        nb += 1
        cnt = 1
        bw = w
        bd = d
        bb = w * d
        blayers[0] = lay
        nl = 1
    if cnt > 0:
        bws[nb - 1] = bw
        bds[nb - 1] = bd
        bbits[nb - 1] = bb
        bnl[nb - 1] = nl
    return starts[:nb], bws[:nb], bds[:nb], bbits[:nb], bnl[:nb]


# --------------------------------------------------------------------------
# exhaustive partition search (restricted growth strings)
#
# returns (best_cost, best_labels, n_candidates); labels[i] is the block of
# buffer i in the first minimum-cost partition in enumeration order.

def oracle_search_py(widths, depths, layers, c_max, intra, mode_w, mode_d):
    ws = widths.tolist()
    ds = depths.tolist()
    ls = layers.tolist()
    modes = list(zip(mode_w.tolist(), mode_d.tolist()))
    n = len(ws)
    cache = {}

    def cost(w, d):
        c = cache.get((w, d))
        if c is None:
            c = cache[(w, d)] = min((-(-w // a)) * (-(-d // b)) for a, b in modes)
        return c

    blocks_w, blocks_d, blocks_n, blocks_l = [], [], [], []
    labels = [0] * n
    best = [None, None, 0]

    def visit(i):
        if i == n:
            best[2] += 1
            total = sum(cost(w, d) for w, d in zip(blocks_w, blocks_d))
            if best[0] is None or total < best[0]:
                best[0] = total
                best[1] = list(labels)
            return
        w, d, lay = ws[i], ds[i], ls[i]
        for j in range(len(blocks_w)):
            if blocks_n[j] >= c_max or (intra and blocks_l[j] != lay):
                continue
            prev = blocks_w[j]
            blocks_w[j] = max(prev, w)
            blocks_d[j] += d
            blocks_n[j] += 1
            labels[i] = j
            visit(i + 1)
            blocks_w[j] = prev
            blocks_d[j] -= d
            blocks_n[j] -= 1
        labels[i] = len(blocks_w)
        blocks_w.append(w)
        blocks_d.append(d)
        blocks_n.append(1)
        blocks_l.append(lay)
        visit(i + 1)
        blocks_w.pop()
        blocks_d.pop()
        blocks_n.pop()
        blocks_l.pop()

    if n == 0:
        return 0, np.zeros(0, dtype=np.int64), 1
    visit(0)
    return best[0], np.array(best[1], dtype=np.int64), best[2]


def _oracle_search_loop(widths, depths, layers, c_max, intra, mode_w, mode_d):
    n = widths.shape[0]
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64), 1
    nm = mode_w.shape[0]
    a = np.full(n, -1, dtype=np.int64)
    prev_w = np.zeros(n, dtype=np.int64)
    bw = np.zeros(n, dtype=np.int64)
    bd = np.zeros(n, dtype=np.int64)
    bc = np.zeros(n, dtype=np.int64)
    bl = np.zeros(n, dtype=np.int64)
    best = -1
    best_a = np.zeros(n, dtype=np.int64)
    count = 0
    nb = 0
    i = 0
    while i >= 0:
        j = a[i]
        if j >= 0:
            # undo the previous placement of item i
            bc[j] -= 1
            bd[j] -= depths[i]
            bw[j] = prev_w[i]
            if bc[j] == 0:
                nb -= 1
        j += 1
        while j < nb and (bc[j] >= c_max or (intra and bl[j] != layers[i])):
            j += 1
        if j > nb:
            a[i] = -1
            i -= 1
            continue
        a[i] = j
        prev_w[i] = bw[j]
        if j == nb:
            nb += 1
            bw[j] = widths[i]
            bd[j] = depths[i]
            bc[j] = 1
            bl[j] = layers[i]
        else:
            if widths[i] > bw[j]:
                bw[j] = widths[i]
            bd[j] += depths[i]
            bc[j] += 1
        if i == n - 1:
            count += 1
            total = 0
            for k in range(nb):
                c = -1
                for m in range(nm):
                    x = ((bw[k] + mode_w[m] - 1) // mode_w[m]) * \
                        ((bd[k] + mode_d[m] - 1) // mode_d[m])
                    if c < 0 or x < c:
                        c = x
                total += c
            if best < 0 or total < best:
                best = total
                best_a[:] = a
        else:
            i += 1
            a[i] = -1
    return best, best_a, count


if HAVE_NUMBA:
    batch_bin_cost_jit = numba.njit(cache=True)(_batch_bin_cost_loop)
    nfd_pack_jit = numba.njit(cache=True)(_nfd_pack_loop)
    oracle_search_jit = numba.njit(cache=True)(_oracle_search_loop)
else:  # pragma: no cover
    batch_bin_cost_jit = nfd_pack_jit = oracle_search_jit = None

if JIT_ENABLED:
    batch_bin_cost = batch_bin_cost_jit
    nfd_pack = nfd_pack_jit
    oracle_search = oracle_search_jit
else:
    batch_bin_cost = batch_bin_cost_py
    nfd_pack = nfd_pack_py
    oracle_search = oracle_search_py


def backend() -> str:
    return "numba" if JIT_ENABLED else "python"


_warm = False


def warmup():
    """Compile (or load from cache) the JIT kernels outside any timed region."""
    global _warm
    if _warm or not JIT_ENABLED:
        return
    w = np.array([8, 16, 8], dtype=np.int64)
    d = np.array([100, 200, 300], dtype=np.int64)
    lay = np.zeros(3, dtype=np.int64)
    mw = np.array([18, 36], dtype=np.int64)
    md = np.array([1024, 512], dtype=np.int64)
    batch_bin_cost(w, d, mw, md)
    nfd_pack(np.arange(3, dtype=np.int64), w, d, lay, mw, md, 18432, 4,
             np.zeros((3, 2)), 0.1, 0.1, True, False)
    oracle_search(w, d, lay, 4, False, mw, md)
    _warm = True
