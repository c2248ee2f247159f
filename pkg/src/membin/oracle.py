"""Exhaustive optimal packing for tiny instances.

Every partition of the buffer set into blocks of at most ``c_max`` buffers
is visited once (restricted growth strings), so the result is a true
minimum. Used as ground truth when checking the search heuristics.
"""
from __future__ import annotations

from . import _kernels
from .model import (AcceleratorSpec, Buffer, Constraints, CostModel, PackingSolution,
                    solution_cost, validate)

MAX_BUFFERS = 12


class InstanceTooLarge(ValueError):
    pass


def _as_spec(buffers) -> AcceleratorSpec:
    if isinstance(buffers, AcceleratorSpec):
        return buffers
    buffers = list(buffers)
    if all(isinstance(b, Buffer) for b in buffers) and \
            [b.id for b in buffers] == list(range(len(buffers))):
        return AcceleratorSpec("oracle", tuple(buffers))
    # arbitrary ids: renumber in the given order
    return AcceleratorSpec.from_buffers(
        "oracle", [(b.width_bits, b.depth_words, b.layer_id) if isinstance(b, Buffer) else b
                   for b in buffers])


def optimal_pack(buffers, constraints: Constraints | None = None,
                 model: CostModel | None = None) -> tuple[int, PackingSolution]:
    """Minimum BRAM count and one packing that achieves it.

    ``buffers`` is an AcceleratorSpec, a list of Buffer, or a list of
    ``(width, depth[, layer_id])`` tuples. Buffers whose ids are not
    ``0..n-1`` in order are renumbered by position; the witness refers to the
    renumbered spec (``witness.spec``).
    """
    constraints = constraints or Constraints()
    model = model or CostModel.default()
    spec = _as_spec(buffers)
    n = len(spec)
    if n > MAX_BUFFERS:
        raise InstanceTooLarge(f"{n} buffers; exhaustive search is capped at {MAX_BUFFERS}")
    if n == 0:
        return 0, PackingSolution((), spec)
    best, labels, _ = _kernels.oracle_search(
        spec.widths, spec.depths, spec.layer_ids, constraints.c_max,
        constraints.intra_layer_only, model.mode_widths, model.mode_depths)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(i)
    witness = PackingSolution.from_groups(spec, [groups[k] for k in sorted(groups)])
    assert solution_cost(witness, model) == best
    assert not validate(witness, spec, constraints)
    return int(best), witness


def count_partitions(n_buffers: int, constraints: Constraints) -> int:
    """Number of partitions the search visits for ``n_buffers`` interchangeable-layer buffers."""
    spec = AcceleratorSpec.from_buffers("count", [(1, 1)] * n_buffers)
    model = CostModel.default()
    _, _, count = _kernels.oracle_search(spec.widths, spec.depths, spec.layer_ids,
                                         constraints.c_max, False,
                                         model.mode_widths, model.mode_depths)
    return int(count)
