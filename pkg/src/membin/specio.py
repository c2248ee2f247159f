"""Accelerator spec files, built-in networks, tuned presets and run reports.

Spec and report files are JSON documents carrying a ``schema_version``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .ga import GaParams
from .heuristics import NfdParams
from .model import AcceleratorSpec, Constraints, LayerShape
from .sa import SaParams

SCHEMA_VERSION = 1


class SpecError(ValueError):
    """Malformed or inconsistent accelerator spec."""


BUILTIN_SPECS = ("cnv-w1a1", "cnv-w2a2", "tincy-yolo", "dorefanet", "rebnet", "rn50-w1a2")

_ALIASES = {
    "rebnet-arch3": "rebnet",
    "rn50": "rn50-w1a2",
    "tincyyolo": "tincy-yolo",
}

# Efficiency threshold used with every preset. The best achievable bin
# efficiency on the ResNet shapes is 32/36, so a threshold above that would
# shield no bin at all and reduce NFD to a random restart.
PRESET_EFFICIENCY_THRESHOLD = 0.85

# Tuned search settings per network:
# (population, tournament, p_adm_w, p_adm_h, p_mut, t0, cooling_rate)
PRESETS = {
    "cnv-w1a1": (50, 5, 0.0, 0.1, 0.3, 30.0, 1.0),
    "cnv-w2a2": (50, 5, 0.0, 0.1, 0.3, 30.0, 2.0),
    "tincy-yolo": (75, 5, 0.0, 0.2, 0.4, 30.0, 1.0),
    "dorefanet": (50, 5, 0.1, 0.3, 0.4, 30.0, 1.0),
    "rebnet": (75, 5, 1.0, 0.2, 0.4, 30.0, 1.0),
    "rn50-w1a2": (75, 5, 0.0, 0.1, 0.4, 40.0, 0.004),
    "rn101-w1a2": (75, 5, 0.0, 0.1, 0.4, 40.0, 0.004),
    "rn152-w1a2": (75, 5, 0.0, 0.1, 0.4, 40.0, 0.004),
}


def canonical_name(name: str) -> str:
    key = name.strip().lower()
    return _ALIASES.get(key, key)


def spec_from_dict(doc: dict) -> AcceleratorSpec:
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpecError(f"unsupported schema_version {version}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise SpecError("spec needs a non-empty string 'name'")
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise SpecError("spec needs a non-empty 'layers' list")
    rows = []
    for k, row in enumerate(layers):
        try:
            vals = {f: row[f] for f in ("layer_id", "pe", "simd", "depth", "width")}
        except (KeyError, TypeError) as exc:
            raise SpecError(f"layer {k}: missing field {exc}") from None
        for f, v in vals.items():
            if isinstance(v, bool) or not isinstance(v, int):
                raise SpecError(f"layer {k}: {f} must be an integer, got {v!r}")
        try:
            rows.append(LayerShape(**vals))
        except ValueError as exc:
            raise SpecError(str(exc)) from None
    try:
        return AcceleratorSpec.from_layers(name, rows, doc.get("provenance", ""))
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def parse_spec(text: str) -> AcceleratorSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None
    return spec_from_dict(doc)


def spec_to_dict(spec: AcceleratorSpec) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "name": spec.name}
    if spec.provenance:
        doc["provenance"] = spec.provenance
    doc["layers"] = [asdict(r) for r in spec.layers]
    return doc


def builtin_spec_text(name: str) -> str:
    key = canonical_name(name)
    if key not in BUILTIN_SPECS:
        raise KeyError(f"no built-in spec {name!r}; known: {', '.join(BUILTIN_SPECS)}")
    return resources.files("membin.data").joinpath(f"{key}.json").read_text()


def builtin_spec(name: str) -> AcceleratorSpec:
    return parse_spec(builtin_spec_text(name))


def load_spec(name_or_path: str) -> AcceleratorSpec:
    """Built-in name, or path to a spec JSON file."""
    if canonical_name(name_or_path) in BUILTIN_SPECS:
        return builtin_spec(name_or_path)
    path = Path(name_or_path)
    if path.is_file():
        return parse_spec(path.read_text())
    raise KeyError(f"{name_or_path!r} is neither a built-in spec nor a file")


def builtin_hyperparams(name: str, algorithm: str,
                        efficiency_threshold: float | None = None) -> GaParams | SaParams:
    """Preset parameters for ``name``; ``algorithm`` is ga/sa or a full algorithm id.

    The admission probabilities of the genetic row also drive the NFD
    perturbation of the annealer.
    """
    key = canonical_name(name)
    if key not in PRESETS:
        raise KeyError(f"no preset for {name!r}")
    family = algorithm.lower().split("-")[0]
    op = algorithm.lower().split("-")[1] if "-" in algorithm else "nfd"
    if family not in ("ga", "sa") or op not in ("s", "nfd"):
        raise KeyError(f"unknown algorithm {algorithm!r}")
    pop, tour, p_w, p_h, p_mut, t0, rc = PRESETS[key]
    if efficiency_threshold is None:
        efficiency_threshold = PRESET_EFFICIENCY_THRESHOLD
    nfd = NfdParams(efficiency_threshold, p_w, p_h)
    operator = "swap" if op == "s" else "nfd"
    if family == "ga":
        return GaParams(population_size=pop, tournament_size=tour, p_mut=p_mut,
                        nfd=nfd, mutation_operator=operator)
    return SaParams(t0=t0, cooling_rate=rc, perturbation=operator, nfd=nfd)


@dataclass
class BinRecord:
    mode: tuple
    columns: int
    rows: int
    buffers: list

    def to_json(self):
        return {"mode": list(self.mode), "columns": self.columns, "rows": self.rows,
                "buffers": list(self.buffers)}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(d["mode"]), d["columns"], d["rows"], list(d["buffers"]))


@dataclass
class ResultReport:
    spec_name: str
    algorithm: str
    seed: int | None
    constraints: dict
    cost_model: dict
    n_bram: int
    baseline_bram: int
    total_bits: int
    efficiency: float
    delta_bram: float
    bins: list = field(default_factory=list)
    convergence: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    steps: int = 0
    stop_reason: str = ""
    elapsed_seconds: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        d["bins"] = [b.to_json() for b in self.bins]
        d["convergence"] = [[float(t), int(c)] for t, c in self.convergence]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ResultReport":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {version}")
        d["bins"] = [BinRecord.from_json(b) for b in d.get("bins", [])]
        d["convergence"] = [(float(t), int(c)) for t, c in d.get("convergence", [])]
        return cls(**d)

    def deterministic_view(self) -> dict:
        """The report without anything measured by a clock."""
        d = self.to_json()
        d.pop("elapsed_seconds")
        d["convergence"] = [c for _, c in self.convergence]
        return d

    def constraints_obj(self) -> Constraints:
        return Constraints(**self.constraints)


def emit_report(report: ResultReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2) + "\n"
    if fmt == "human":
        return format_efficiency_rows([(report.spec_name, report.n_bram,
                                        report.efficiency, report.delta_bram)]) + \
            f"algorithm {report.algorithm}, seed {report.seed}, {len(report.bins)} bins, " \
            f"baseline {report.baseline_bram} BRAM\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> ResultReport:
    return ResultReport.from_json(json.loads(text))


def format_efficiency_rows(rows) -> str:
    """Table of ``(label, n_bram, efficiency, delta_bram|None)`` rows."""
    out = [f"{'Accelerator':<24}{'BRAM':>8}{'Efficiency':>12}{'dBRAM':>9}"]
    for label, n, eff, delta in rows:
        d = "" if delta is None else f"{delta:.2f}x"
        out.append(f"{label:<24}{n:>8}{eff * 100:>11.1f}%{d:>9}")
    return "\n".join(out) + "\n"


def convergence_csv(entries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_seconds", "best_cost"])
    for t, c in entries:
        w.writerow([f"{t:.6f}", c])
    return buf.getvalue()


def read_convergence_csv(text: str) -> list[tuple[float, int]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["t_seconds", "best_cost"]:
        raise ValueError("convergence CSV must start with header t_seconds,best_cost")
    return [(float(t), int(c)) for t, c in rows[1:]]
