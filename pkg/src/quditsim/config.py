"""Strict JSON experiment configs: validation that reports every violation,
dotted-path overrides, and construction of workload experiment objects.

A config names its workload, gives a mandatory seed, and carries one section
(named after the workload) mirroring that module's experiment type. Unknown
keys anywhere are violations — configs double as machine-diffable experiment
records, so silent extras would rot.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Callable, Optional

WORKLOADS = ("sqed", "qaoa", "reservoir", "synth")
QAOA_DENSE_LIMIT = 10_000_000


class ConfigError(Exception):
    """Unreadable, unparsable, or unbuildable configuration."""


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def parse_override(text: str) -> tuple[list[str], Any]:
    """``a.b.c=value``; the value parses as JSON when possible, else string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(cfg: dict, sets: list[str]) -> dict:
    """Return a copy of ``cfg`` with each ``--set`` override applied.

    Overrides may only traverse existing objects (a typo'd path must not
    invent sections), but may introduce a leaf key — validation then rejects
    it if the schema does not know it.
    """
    out = json.loads(json.dumps(cfg))
    for text in sets:
        path, value = parse_override(text)
        node = out
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(
                    f"override path {'.'.join(path)!r} does not match the config "
                    f"layout (missing section {part!r})")
            node = node[part]
        node[path[-1]] = value
    return out


# ---------------------------------------------------------------------------
# validation helpers


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


class _Section:
    """Accumulates violations for one config section."""

    def __init__(self, name: str, data: dict, violations: list[str]):
        self.name = name
        self.data = data
        self.violations = violations
        self.seen: set[str] = set()

    def complain(self, message: str):
        self.violations.append(f"{self.name}: {message}")

    def reject_unknown(self):
        for key in self.data:
            if key not in self.seen:
                self.complain(f"unknown key {key!r}")

    def get(self, key: str, required: bool = False, default=None):
        self.seen.add(key)
        if key not in self.data:
            if required:
                self.complain(f"missing required key {key!r}")
            return default
        return self.data[key]

    def number(self, key: str, required=False, default=None, minimum=None,
               maximum=None, strict_min=None):
        value = self.get(key, required, default)
        if value is None or value == default and key not in self.data:
            return value
        if not _is_num(value):
            self.complain(f"{key} must be a finite number, got {value!r}")
            return default
        if minimum is not None and value < minimum:
            self.complain(f"{key} must be >= {minimum}, got {value}")
        if strict_min is not None and value <= strict_min:
            self.complain(f"{key} must be > {strict_min}, got {value}")
        if maximum is not None and value > maximum:
            self.complain(f"{key} must be <= {maximum}, got {value}")
        return value

    def integer(self, key: str, required=False, default=None, minimum=None,
                maximum=None):
        value = self.get(key, required, default)
        if value is None or (value == default and key not in self.data):
            return value
        if not _is_int(value):
            self.complain(f"{key} must be an integer, got {value!r}")
            return default
        if minimum is not None and value < minimum:
            self.complain(f"{key} must be >= {minimum}, got {value}")
        if maximum is not None and value > maximum:
            self.complain(f"{key} must be <= {maximum}, got {value}")
        return value

    def choice(self, key: str, options, required=False, default=None):
        value = self.get(key, required, default)
        if value is not None and value not in options:
            self.complain(f"{key} must be one of {options}, got {value!r}")
        return value

    def boolean(self, key: str, default=None):
        value = self.get(key, default=default)
        if value is not None and not isinstance(value, bool):
            self.complain(f"{key} must be true or false, got {value!r}")
            return default
        return value


def _validate_sqed(sec: _Section):
    shape = sec.choice("shape", ("chain", "ladder"), required=True)
    n = sec.integer("n", required=True, minimum=2)
    d = sec.integer("d", required=True, minimum=2)
    couplings = [sec.number(k, default=0.0) for k in ("mu", "lam", "x", "y")]
    if all(not c for c in couplings if c is not None):
        sec.complain("all couplings (mu, lam, x, y) are zero")
    labeling = sec.choice("labeling", ("fock", "symmetric"))
    if labeling == "symmetric" and isinstance(d, int) and d % 2 == 0:
        sec.complain(f"symmetric labeling needs odd d, got d={d}")
    sec.number("t_max", default=200.0, strict_min=0.0)
    sec.integer("samples", default=4096, minimum=16)
    sec.integer("dense_limit", default=4096, minimum=2)
    initial = sec.get("initial")
    if initial is not None:
        n_sites = (2 * n if shape == "ladder" else n) if isinstance(n, int) else None
        if not isinstance(initial, list) or not all(_is_int(v) for v in initial):
            sec.complain("initial must be a list of integers")
        elif n_sites is not None and len(initial) != n_sites:
            sec.complain(f"initial must list {n_sites} levels, got {len(initial)}")
        elif isinstance(d, int) and any(not 0 <= v < d for v in initial):
            sec.complain(f"initial levels must lie in [0, {d})")
    sec.reject_unknown()


def _validate_graph(sec: _Section, base_dir: Path) -> Optional[int]:
    """Returns the node count when determinable."""
    edges = sec.get("edges")
    graph_file = sec.get("graph_file")
    n = sec.integer("n", minimum=2)
    if (edges is None) == (graph_file is None):
        sec.complain("give exactly one of 'edges' (with 'n') or 'graph_file'")
        return None
    if edges is not None:
        if n is None:
            sec.complain("'edges' requires 'n'")
        if (not isinstance(edges, list)
                or not all(isinstance(e, list) and len(e) == 2
                           and all(_is_int(v) for v in e) for e in edges)):
            sec.complain("edges must be a list of [u, v] integer pairs")
            return None
        from .qaoa import Graph

        if isinstance(n, int):
            try:
                Graph(n, tuple(tuple(e) for e in edges))
            except Exception as exc:
                sec.complain(f"bad graph: {exc}")
            return n
        return None
    if not isinstance(graph_file, str):
        sec.complain("graph_file must be a path string")
        return None
    path = (base_dir / graph_file).resolve()
    if not path.is_file():
        sec.complain(f"graph_file not found: {path}")
        return None
    from .qaoa import parse_edge_list

    try:
        graph = parse_edge_list(path.read_text())
    except Exception as exc:
        sec.complain(f"bad edge list in {path}: {exc}")
        return None
    return graph.n


def _validate_qaoa(sec: _Section, base_dir: Path):
    n = _validate_graph(sec, base_dir)
    d = sec.integer("d", required=True, minimum=2)
    sec.integer("p", default=1, minimum=1)
    sec.integer("restarts", default=3, minimum=1)
    sec.integer("rounds", default=10, minimum=0)
    sec.number("gamma_loss", default=0.2, minimum=0.0, maximum=1.0)
    sec.integer("shots", default=512, minimum=1)
    sec.boolean("reoptimize", default=False)
    sec.boolean("brute_force", default=True)
    sec.integer("maxiter", minimum=1)
    sec.integer("workers", default=1, minimum=1)
    if isinstance(n, int) and isinstance(d, int) and d**n > QAOA_DENSE_LIMIT:
        sec.complain(f"d^n = {d}^{n} exceeds the dense limit {QAOA_DENSE_LIMIT}")
    sec.reject_unknown()


def _validate_reservoir(sec: _Section):
    from dataclasses import fields

    from .reservoir import ReservoirConfig

    cfg_default = {f.name: f.default for f in fields(ReservoirConfig)}
    dims = sec.get("dims", default=list(cfg_default["dims"]))
    if (not isinstance(dims, list) or not dims
            or not all(_is_int(v) and v >= 2 for v in dims)):
        sec.complain("dims must be a list of integers >= 2")
        dims = None
    m = len(dims) if dims else None
    for key in ("omegas", "kappas"):
        values = sec.get(key, default=list(cfg_default[key]))
        if not isinstance(values, list) or not all(_is_num(v) for v in values):
            sec.complain(f"{key} must be a list of numbers")
            continue
        if m is not None and len(values) != m:
            sec.complain(f"{key} must have one entry per mode ({m})")
        if key == "kappas" and any(v < 0 for v in values):
            sec.complain("kappas must be nonnegative")
    couplings = sec.get("couplings",
                        default=[list(c) for c in cfg_default["couplings"]])
    if not isinstance(couplings, list) or not all(
            isinstance(c, list) and len(c) == 3 and _is_int(c[0])
            and _is_int(c[1]) and _is_num(c[2]) for c in couplings):
        sec.complain("couplings must be a list of [i, j, g] triples")
    elif m is not None:
        for i, j, _ in couplings:
            if i == j or not (0 <= i < m and 0 <= j < m):
                sec.complain(f"coupling ({i}, {j}) invalid for {m} modes")
    sec.number("tau", default=cfg_default["tau"], strict_min=0.0)
    sec.number("dt", strict_min=0.0)
    encoding = sec.choice("encoding", ("displacement", "coupling"),
                          default=cfg_default["encoding"])
    sec.number("drive_scale", default=cfg_default["drive_scale"])
    target = sec.integer("drive_target", default=cfg_default["drive_target"],
                         minimum=0)
    if m is not None and isinstance(target, int) and target >= m:
        sec.complain(f"drive_target {target} out of range for {m} modes")
    if encoding == "coupling" and isinstance(couplings, list) and not couplings:
        sec.complain("coupling encoding needs at least one coupling")
    washout = sec.integer("washout", default=cfg_default["washout"], minimum=0)
    feature_set = sec.choice("feature_set", ("per_mode", "joint", "quadrature"),
                             default=cfg_default["feature_set"])
    n_steps = sec.integer("n_steps", default=500, minimum=1)
    if isinstance(n_steps, int) and isinstance(washout, int) \
            and n_steps <= washout + 10:
        sec.complain(f"n_steps ({n_steps}) must exceed washout + 10 ({washout + 10})")
    sec.choice("task", ("narma2", "delay"), default="narma2")
    sec.integer("delay", default=2, minimum=0)
    shots = sec.integer("shots", minimum=1)
    if shots is not None and feature_set == "quadrature":
        sec.complain("shots require population features (per_mode or joint)")
    sec.number("ridge_lambda", default=1e-6, minimum=0.0)
    frac = sec.number("train_fraction", default=0.7)
    if frac is not None and _is_num(frac) and not 0.0 < frac < 1.0:
        sec.complain(f"train_fraction must lie in (0, 1), got {frac}")
    sec.reject_unknown()


def _validate_synth(sec: _Section, base_dir: Path):
    dims = sec.get("dims", required=True)
    if (not isinstance(dims, list) or not dims
            or not all(_is_int(v) and v >= 2 for v in dims)):
        sec.complain("dims must be a list of integers >= 2")
        dims = None
    layout_text = sec.get("layout", required=True)
    layout = None
    if layout_text is not None:
        if not isinstance(layout_text, str):
            sec.complain("layout must be a spec string")
        elif dims is not None:
            from .synth import parse_layout

            try:
                layout = parse_layout(tuple(dims), layout_text)
            except Exception as exc:
                sec.complain(f"bad layout: {exc}")
    target = sec.get("target", required=True)
    target_dims = None
    if target is not None:
        if not isinstance(target, dict):
            sec.complain("target must be an object with a 'name'")
        else:
            name = target.get("name")
            known = {"csum", "quditx", "snap", "matrix_file"}
            if name not in known:
                sec.complain(f"target.name must be one of {sorted(known)}")
            elif name in ("csum", "quditx"):
                d = target.get("d")
                if not _is_int(d) or d < 2:
                    sec.complain(f"target {name!r} needs integer d >= 2")
                else:
                    target_dims = [d, d] if name == "csum" else [d]
                extra = set(target) - {"name", "d"}
                if extra:
                    sec.complain(f"unknown target keys {sorted(extra)}")
            elif name == "snap":
                phases = target.get("phases")
                if (not isinstance(phases, list) or len(phases) < 2
                        or not all(_is_num(v) for v in phases)):
                    sec.complain("target 'snap' needs a list of >= 2 phases")
                else:
                    target_dims = [len(phases)]
                extra = set(target) - {"name", "phases"}
                if extra:
                    sec.complain(f"unknown target keys {sorted(extra)}")
            else:
                path = target.get("path")
                tdims = target.get("dims")
                if not isinstance(path, str) or not (base_dir / path).is_file():
                    sec.complain("target 'matrix_file' needs an existing 'path'")
                if (not isinstance(tdims, list) or not tdims
                        or not all(_is_int(v) and v >= 2 for v in tdims)):
                    sec.complain("target 'matrix_file' needs 'dims' (list of ints)")
                else:
                    target_dims = tdims
                extra = set(target) - {"name", "path", "dims"}
                if extra:
                    sec.complain(f"unknown target keys {sorted(extra)}")
    if target_dims is not None and dims is not None:
        if len(target_dims) != len(dims) or any(
                t > w for t, w in zip(target_dims, dims)):
            sec.complain(
                f"target dims {target_dims} do not embed in workspace {dims}")
    optimizer = sec.get("optimizer", default={})
    if not isinstance(optimizer, dict):
        sec.complain("optimizer must be an object")
    else:
        opt = _Section(f"{sec.name}.optimizer", optimizer, sec.violations)
        opt.number("step", default=0.05, strict_min=0.0)
        opt.integer("iters", default=2000, minimum=1)
        opt.integer("restarts", default=8, minimum=1)
        opt.number("epsilon", default=1e-5, strict_min=0.0)
        opt.reject_unknown()
    sec.integer("workers", default=1, minimum=1)
    sec.reject_unknown()


def validate_config(cfg: dict, base_dir: Path) -> list[str]:
    """All schema/invariant violations, not just the first."""
    violations: list[str] = []
    top = _Section("config", cfg, violations)
    workload = top.choice("workload", WORKLOADS, required=True)
    seed = top.get("seed", required=True)
    if seed is not None and not _is_int(seed):
        top.complain(f"seed must be an integer, got {seed!r}")
    out = top.get("out")
    if out is not None and not isinstance(out, str):
        top.complain("out must be a path string")
    if workload in WORKLOADS:
        section = top.get(workload, required=True)
        if section is not None:
            if not isinstance(section, dict):
                top.complain(f"section {workload!r} must be an object")
            else:
                sec = _Section(workload, section, violations)
                if workload == "sqed":
                    _validate_sqed(sec)
                elif workload == "qaoa":
                    _validate_qaoa(sec, base_dir)
                elif workload == "reservoir":
                    _validate_reservoir(sec)
                else:
                    _validate_synth(sec, base_dir)
    top.reject_unknown()
    return violations


# ---------------------------------------------------------------------------
# experiment construction (assumes a validated config)


def _build_sqed(section: dict):
    from .sqed import LatticeSpec, SqedExperiment

    lattice = LatticeSpec(
        shape=section["shape"], n=section["n"], d=section["d"],
        mu=section.get("mu", 0.0), lam=section.get("lam", 0.0),
        x=section.get("x", 0.0), y=section.get("y", 0.0),
        labeling=section.get("labeling"))
    initial = section.get("initial")
    return SqedExperiment(
        lattice=lattice,
        t_max=section.get("t_max", 200.0),
        samples=section.get("samples", 4096),
        initial=tuple(initial) if initial is not None else None,
        dense_limit=section.get("dense_limit", 4096))


def _build_qaoa(section: dict, base_dir: Path):
    from .qaoa import Graph, QaoaExperiment, parse_edge_list

    if "graph_file" in section:
        graph = parse_edge_list((base_dir / section["graph_file"]).read_text())
    else:
        graph = Graph(section["n"], tuple(tuple(e) for e in section["edges"]))
    return QaoaExperiment(
        graph=graph, d=section["d"], p=section.get("p", 1),
        restarts=section.get("restarts", 3), rounds=section.get("rounds", 10),
        gamma_loss=section.get("gamma_loss", 0.2),
        shots=section.get("shots", 512),
        reoptimize=section.get("reoptimize", False),
        brute_force=section.get("brute_force", True),
        maxiter=section.get("maxiter"), workers=section.get("workers", 1))


def _build_reservoir(section: dict):
    from .reservoir import ReservoirConfig, ReservoirExperiment

    cfg_kwargs: dict[str, Any] = {}
    for key in ("dims", "omegas", "kappas"):
        if key in section:
            cfg_kwargs[key] = tuple(section[key])
    if "couplings" in section:
        cfg_kwargs["couplings"] = tuple(
            (c[0], c[1], c[2]) for c in section["couplings"])
    for key in ("tau", "encoding", "drive_scale", "drive_target", "washout",
                "feature_set", "dt"):
        if key in section:
            cfg_kwargs[key] = section[key]
    exp_kwargs: dict[str, Any] = {}
    for key in ("n_steps", "task", "delay", "shots", "ridge_lambda",
                "train_fraction"):
        if key in section:
            exp_kwargs[key] = section[key]
    return ReservoirExperiment(config=ReservoirConfig(**cfg_kwargs), **exp_kwargs)


def _load_matrix_csv(path: Path, dim: int):
    import numpy as np

    table = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if table.shape != (dim, 2 * dim):
        raise ConfigError(
            f"matrix file {path} must be {dim} rows x {2 * dim} columns "
            "(real block then imaginary block)")
    return table[:, :dim] + 1j * table[:, dim:]


def _build_synth(section: dict, base_dir: Path):
    import numpy as np

    from .gates import GateMatrix, csum, qudit_x, snap
    from .synth import OptimizerOptions, SynthExperiment, parse_layout

    target_spec = section["target"]
    name = target_spec["name"]
    if name == "csum":
        target = csum(target_spec["d"])
    elif name == "quditx":
        target = qudit_x(target_spec["d"])
    elif name == "snap":
        target = snap(np.asarray(target_spec["phases"], dtype=float))
    else:
        dims = tuple(target_spec["dims"])
        matrix = _load_matrix_csv(base_dir / target_spec["path"],
                                  int(np.prod(dims)))
        target = GateMatrix(matrix, dims)
    layout = parse_layout(tuple(section["dims"]), section["layout"])
    opt = section.get("optimizer", {})
    optimizer = OptimizerOptions(
        step=opt.get("step", 0.05), iters=opt.get("iters", 2000),
        restarts=opt.get("restarts", 8), epsilon=opt.get("epsilon", 1e-5))
    return SynthExperiment(target=target, layout=layout, optimizer=optimizer,
                           workers=section.get("workers", 1))


def build_experiment(cfg: dict, base_dir: Path):
    """(workload, experiment object) from a validated config."""
    workload = cfg["workload"]
    section = cfg[workload]
    try:
        if workload == "sqed":
            return workload, _build_sqed(section)
        if workload == "qaoa":
            return workload, _build_qaoa(section, base_dir)
        if workload == "reservoir":
            return workload, _build_reservoir(section)
        return workload, _build_synth(section, base_dir)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot build {workload} experiment: {exc}") from exc
