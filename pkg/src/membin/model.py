"""Core types and the BRAM cost model.

Buffers are logical parameter memories; a bin depth-stacks a group of
buffers into a grid of RAM primitives whose width is the widest member.
All types are immutable and all functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels

NOMINAL_CAPACITY = 18 * 1024


@dataclass(frozen=True)
class Buffer:
    id: int
    width_bits: int
    depth_words: int
    layer_id: int = 0

    def __post_init__(self):
        if self.width_bits < 1 or self.depth_words < 1:
            raise ValueError(f"buffer {self.id}: width and depth must be >= 1, "
                             f"got {self.width_bits}x{self.depth_words}")

    @property
    def bits(self) -> int:
        return self.width_bits * self.depth_words


@dataclass(frozen=True)
class BramMode:
    width_bits: int
    depth_words: int

    def __post_init__(self):
        if self.width_bits < 1 or self.depth_words < 1:
            raise ValueError("BRAM mode dimensions must be positive")

    @property
    def capacity(self) -> int:
        return self.width_bits * self.depth_words

    def __str__(self):
        return f"{self.width_bits}x{self.depth_words}"


DEFAULT_MODES = (
    BramMode(1, 16384),
    BramMode(2, 8192),
    BramMode(4, 4096),
    BramMode(9, 2048),
    BramMode(18, 1024),
    BramMode(36, 512),
)
BASE_FRAME_MODES = (BramMode(18, 1024),)


class BinCost(NamedTuple):
    mode: BramMode
    columns: int
    rows: int
    n_bram: int


class CostModel:
    """Set of RAM aspect modes plus the nominal per-BRAM capacity.

    Costs are memoized on ``(width, depth)`` since searches revisit the
    same bin geometries constantly.
    """

    def __init__(self, modes: Sequence[BramMode] = DEFAULT_MODES,
                 nominal_capacity_bits: int | None = None):
        modes = tuple(modes)
        if not modes:
            raise ValueError("cost model needs at least one BRAM mode")
        cap = max(m.capacity for m in modes)
        if nominal_capacity_bits is None:
            nominal_capacity_bits = cap
        if nominal_capacity_bits != cap:
            raise ValueError(f"nominal capacity {nominal_capacity_bits} != "
                             f"largest mode capacity {cap}")
        self.modes = modes
        self.nominal_capacity_bits = nominal_capacity_bits
        self.mode_widths = np.array([m.width_bits for m in modes], dtype=np.int64)
        self.mode_depths = np.array([m.depth_words for m in modes], dtype=np.int64)
        self._n_cache: dict[tuple[int, int], int] = {}
        self._hash = hash(modes)

    @classmethod
    def default(cls) -> "CostModel":
        return cls(DEFAULT_MODES)

    @classmethod
    def base_frame(cls) -> "CostModel":
        return cls(BASE_FRAME_MODES)

    def __eq__(self, other):
        return isinstance(other, CostModel) and self.modes == other.modes

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"CostModel(modes=[{', '.join(map(str, self.modes))}])"

    def describe(self) -> dict:
        return {"modes": [[m.width_bits, m.depth_words] for m in self.modes],
                "nominal_capacity_bits": self.nominal_capacity_bits}

    def geometry_cost(self, width: int, depth: int) -> BinCost:
        """Cheapest mode for a ``width`` x ``depth`` rectangle.

        Ties on BRAM count go to the mode wasting fewer of its own bits,
        then to the narrower mode.
        """
        best = None
        for m in self.modes:
            cols = -(-width // m.width_bits)
            rows = -(-depth // m.depth_words)
            n = cols * rows
            key = (n, n * m.capacity, m.width_bits)
            if best is None or key < best[0]:
                best = (key, BinCost(m, cols, rows, n))
        return best[1]

    def n_bram(self, width: int, depth: int) -> int:
        key = (width, depth)
        n = self._n_cache.get(key)
        if n is None:
            n = self._n_cache[key] = self.geometry_cost(width, depth).n_bram
        return n


class Bin(NamedTuple):
    """Depth-stacked group of buffers.

    ``width`` is the widest member, ``depth`` the stacked depth, ``bits``
    the stored payload and ``n_layers`` the number of distinct layers.
    """
    buffers: tuple
    width: int
    depth: int
    bits: int
    n_layers: int


@dataclass(frozen=True)
class Constraints:
    c_max: int = 4
    intra_layer_only: bool = False
    strict_width_match: bool = True

    def __post_init__(self):
        if self.c_max < 1:
            raise ValueError("c_max must be >= 1")


@dataclass(frozen=True)
class LayerShape:
    """One row of an accelerator table: ``pe`` buffers of ``simd*width`` bits."""
    layer_id: int
    pe: int
    simd: int
    depth: int
    width: int

    def __post_init__(self):
        for name in ("pe", "simd", "depth", "width"):
            if getattr(self, name) < 1:
                raise ValueError(f"layer {self.layer_id}: {name} must be >= 1")


@dataclass(frozen=True, eq=False)
class AcceleratorSpec:
    """Named set of buffers. Buffer ids are always ``0..n-1`` in order."""
    name: str
    buffers: tuple
    layers: tuple = ()
    provenance: str = ""

    def __post_init__(self):
        for i, b in enumerate(self.buffers):
            if b.id != i:
                raise ValueError(f"buffer ids must be 0..n-1 in order; "
                                 f"position {i} has id {b.id}")

    @classmethod
    def from_layers(cls, name: str, layers: Iterable[LayerShape],
                    provenance: str = "") -> "AcceleratorSpec":
        layers = tuple(layers)
        if not layers:
            raise ValueError("accelerator spec has no layers")
        seen = set()
        buffers = []
        for row in layers:
            if row.layer_id in seen:
                raise ValueError(f"duplicate layer_id {row.layer_id}")
            seen.add(row.layer_id)
            for _ in range(row.pe):
                buffers.append(Buffer(len(buffers), row.simd * row.width,
                                      row.depth, row.layer_id))
        return cls(name, tuple(buffers), layers, provenance)

    @classmethod
    def from_buffers(cls, name: str, shapes: Iterable[tuple]) -> "AcceleratorSpec":
        """Build from ``(width, depth[, layer_id])`` tuples; ids are assigned."""
        buffers = []
        for i, s in enumerate(shapes):
            layer = s[2] if len(s) > 2 else 0
            buffers.append(Buffer(i, int(s[0]), int(s[1]), int(layer)))
        return cls(name, tuple(buffers))

    def __eq__(self, other):
        return (isinstance(other, AcceleratorSpec) and self.name == other.name
                and self.buffers == other.buffers)

    def __hash__(self):
        return hash((self.name, len(self.buffers)))

    def __len__(self):
        return len(self.buffers)

    @cached_property
    def widths(self) -> np.ndarray:
        return np.array([b.width_bits for b in self.buffers], dtype=np.int64)

    @cached_property
    def depths(self) -> np.ndarray:
        return np.array([b.depth_words for b in self.buffers], dtype=np.int64)

    @cached_property
    def layer_ids(self) -> np.ndarray:
        return np.array([b.layer_id for b in self.buffers], dtype=np.int64)

    @cached_property
    def _cols(self):
        return ([b.width_bits for b in self.buffers],
                [b.depth_words for b in self.buffers],
                [b.layer_id for b in self.buffers])

    @cached_property
    def total_bits(self) -> int:
        return sum(b.bits for b in self.buffers)

    def make_bin(self, ids) -> Bin:
        ws, ds, ls = self._cols
        ids = tuple(ids)
        if len(ids) == 1:
            i = ids[0]
            return Bin(ids, ws[i], ds[i], ws[i] * ds[i], 1)
        width = depth = bits = 0
        layers = set()
        for i in ids:
            w = ws[i]
            d = ds[i]
            if w > width:
                width = w
            depth += d
            bits += w * d
            layers.add(ls[i])
        return Bin(ids, width, depth, bits, len(layers))

    def bin_layer(self, b: Bin) -> int:
        return self._cols[2][b.buffers[0]]


class PackingSolution:
    """A partition of a spec's buffers into bins.

    Per-bin geometry and per-model BRAM counts are cached as numpy arrays;
    move operators hand the arrays of the parent forward so that scoring a
    neighbour costs O(changed bins) Python work.
    """
    __slots__ = ("bins", "spec", "_geom", "_costs")

    def __init__(self, bins, spec: AcceleratorSpec, _geom=None, _costs=None):
        self.bins = tuple(bins)
        self.spec = spec
        self._geom = _geom
        self._costs = _costs if _costs is not None else {}

    @classmethod
    def from_groups(cls, spec: AcceleratorSpec, groups) -> "PackingSolution":
        return cls(tuple(spec.make_bin(g) for g in groups), spec)

    @classmethod
    def singletons(cls, spec: AcceleratorSpec) -> "PackingSolution":
        return cls.from_groups(spec, ((i,) for i in range(len(spec))))

    def geometry(self):
        """``(widths, depths, bits, n_layers)`` int64 arrays, one entry per bin."""
        if self._geom is None:
            n = len(self.bins)
            arr = np.array([b[1:] for b in self.bins], dtype=np.int64).reshape(n, 4)
            self._geom = (arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy())
        return self._geom

    def bin_costs(self, model: CostModel) -> np.ndarray:
        c = self._costs.get(model)
        if c is None:
            w, d = self.geometry()[:2]
            c = self._costs[model] = _kernels.batch_bin_cost(
                w, d, model.mode_widths, model.mode_depths)
        return c

    def groups(self) -> list[list[int]]:
        return [list(b.buffers) for b in self.bins]

    def canonical(self) -> tuple:
        """Order-free form for equality checks between packings."""
        return tuple(sorted(tuple(sorted(b.buffers)) for b in self.bins))

    def __eq__(self, other):
        return isinstance(other, PackingSolution) and self.bins == other.bins

    def __hash__(self):
        return hash(self.bins)

    def __len__(self):
        return len(self.bins)

    def __repr__(self):
        return f"PackingSolution({self.spec.name!r}, bins={len(self.bins)})"


def buffer_bits(buffer: Buffer) -> int:
    return buffer.width_bits * buffer.depth_words


def bin_cost(buffers: Sequence[Buffer], model: CostModel) -> BinCost:
    """Cost of depth-stacking ``buffers`` into one bin."""
    if not buffers:
        raise ValueError("bin is empty")
    width = max(b.width_bits for b in buffers)
    depth = sum(b.depth_words for b in buffers)
    return model.geometry_cost(width, depth)


def solution_cost(solution: PackingSolution, model: CostModel) -> int:
    return int(solution.bin_costs(model).sum())


def mapping_efficiency(total_bits: int, n_bram: int, model: CostModel | None = None) -> float:
    """Stored bits over the nominal capacity of ``n_bram`` BRAMs."""
    if total_bits < 1 or n_bram < 1:
        raise ValueError(f"need positive bits and BRAM count, got {total_bits}, {n_bram}")
    cap = model.nominal_capacity_bits if model is not None else NOMINAL_CAPACITY
    return total_bits / (n_bram * cap)


def baseline_cost(spec: AcceleratorSpec, model: CostModel) -> int:
    n = model.n_bram
    return sum(n(b.width_bits, b.depth_words) for b in spec.buffers)


@dataclass(frozen=True)
class Violation:
    kind: str  # "partition" | "empty" | "cardinality" | "layer"
    detail: str


def validate(solution: PackingSolution, spec: AcceleratorSpec,
             constraints: Constraints) -> list[Violation]:
    """All constraint violations of ``solution``; empty list means valid."""
    out = []
    seen: dict[int, int] = {}
    ls = spec._cols[2]
    n = len(spec)
    for k, b in enumerate(solution.bins):
        if not b.buffers:
            out.append(Violation("empty", f"bin {k} is empty"))
            continue
        if len(b.buffers) > constraints.c_max:
            out.append(Violation("cardinality",
                                 f"bin {k} holds {len(b.buffers)} > {constraints.c_max}"))
        bad = [i for i in b.buffers if not 0 <= i < n]
        if bad:
            out.append(Violation("partition", f"bin {k} has unknown buffers {bad}"))
            continue
        if constraints.intra_layer_only and len({ls[i] for i in b.buffers}) > 1:
            out.append(Violation("layer", f"bin {k} mixes layers"))
        for i in b.buffers:
            seen[i] = seen.get(i, 0) + 1
        expect = spec.make_bin(b.buffers)
        if expect != b:
            out.append(Violation("partition", f"bin {k} geometry is stale"))
    dup = sorted(i for i, c in seen.items() if c > 1)
    missing = sorted(set(range(n)) - set(seen))
    if dup:
        out.append(Violation("partition", f"buffers placed more than once: {dup[:10]}"))
    if missing:
        out.append(Violation("partition", f"buffers not placed: {missing[:10]}"))
    return out
