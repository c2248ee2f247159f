"""Cardinality-constrained packing of CNN parameter buffers into FPGA block RAM."""
from .model import (AcceleratorSpec, Bin, BinCost, BramMode, Buffer, Constraints, CostModel,
                    LayerShape, PackingSolution, baseline_cost, bin_cost, mapping_efficiency,
                    solution_cost, validate)
from .heuristics import NfdParams, buffer_swap, nfd_repack, random_feasible
from .ga import GaParams, evolve, fitness
from .sa import SaParams, anneal
from .oracle import optimal_pack
from .specio import builtin_hyperparams, builtin_spec, load_spec, parse_spec
from .bench import compare, efficiency_table, run_pack, sweep_population, time_to_converge

__version__ = "0.1.0"
