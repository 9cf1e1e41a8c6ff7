"""Numerical synthesis of target unitaries from hardware-native blocks.

An ansatz is an ordered sequence of displacement, SNAP, and beam-splitter
blocks on a register of truncated modes. Synthesis minimizes ``1 -
fidelity(target, ansatz)`` with Adam over the concatenated block parameters,
using central finite differences for the gradient — no per-block adjoint
rules, so new block kinds stay cheap to add.

Targets may live on a smaller computational register than the workspace (for
example a qutrit gate synthesized inside six-level modes, giving the
displacement operators headroom). In that case fidelity is scored on the
computational subspace and an explicit leakage penalty (weight 1.0) charges
population that escapes it; without the penalty the optimizer happily parks
amplitude in the buffer levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .gates import GateMatrix, beam_splitter, displacement, snap
from .hilbert import DimensionError, OperatorTerm, RegisterSpec, digits_table, embed
from .util import child_seed, parallel_map, rng_from

BLOCK_KINDS = ("displacement", "snap", "beam_splitter")


@dataclass(frozen=True)
class Block:
    """One ansatz element: a gate family bound to specific modes."""

    kind: str
    modes: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        modes = tuple(int(m) for m in self.modes)
        expected = 2 if self.kind == "beam_splitter" else 1
        if len(modes) != expected or len(set(modes)) != len(modes):
            raise DimensionError(
                f"{self.kind} needs {expected} distinct mode(s), got {modes}")
        object.__setattr__(self, "modes", modes)

    def arity(self, dims: Sequence[int]) -> int:
        if self.kind == "snap":
            return dims[self.modes[0]]
        return 2   # displacement: (Re alpha, Im alpha); beam splitter: (theta, phi)


@dataclass(frozen=True)
class AnsatzLayout:
    """Workspace dimensions plus the ordered block sequence."""

    dims: tuple[int, ...]
    blocks: tuple[Block, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if any(d < 2 for d in dims):
            raise DimensionError("every mode needs dimension >= 2")
        if not self.blocks:
            raise DimensionError("layout needs at least one block")
        for block in self.blocks:
            if any(m >= len(dims) for m in block.modes):
                raise DimensionError(f"block modes {block.modes} out of range")

    @property
    def n_params(self) -> int:
        return sum(b.arity(self.dims) for b in self.blocks)

    def register(self) -> RegisterSpec:
        return RegisterSpec(self.dims)

    def param_slices(self) -> list[slice]:
        slices, at = [], 0
        for block in self.blocks:
            a = block.arity(self.dims)
            slices.append(slice(at, at + a))
            at += a
        return slices


def parse_layout(dims: Sequence[int], text: str) -> AnsatzLayout:
    """Layout spec string: comma-separated ``kind(modes)`` entries, e.g.
    ``disp(0),snap(0),bs(0,1)``; a ``Nx[...]`` prefix repeats a group."""
    import re

    text = text.strip()
    repeat = re.fullmatch(r"(\d+)x\[(.*)\]", text)
    body = ",".join([repeat.group(2)] * int(repeat.group(1))) if repeat else text
    names = {"disp": "displacement", "displacement": "displacement",
             "snap": "snap", "bs": "beam_splitter", "beam_splitter": "beam_splitter"}
    entries = re.findall(r"(\w+)\(([^)]*)\)|(\S)", body.replace(",", " "))
    blocks = []
    for name, arg, stray in entries:
        if stray:
            raise ValueError(f"bad block entry near {stray!r} in {text!r}")
        kind = names.get(name)
        if kind is None:
            raise ValueError(f"unknown block {name!r}")
        modes = tuple(int(m) for m in arg.replace(",", " ").split())
        blocks.append(Block(kind, modes))
    if not blocks:
        raise ValueError(f"layout {text!r} has no blocks")
    return AnsatzLayout(tuple(dims), tuple(blocks))


def _block_matrix(block: Block, params: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    """Full-register matrix of one block at the given parameter values."""
    if block.kind == "displacement":
        alpha = complex(params[0], params[1])
        local = displacement(alpha, dims[block.modes[0]]).matrix
    elif block.kind == "snap":
        local = snap(params).matrix
    else:
        d1, d2 = dims[block.modes[0]], dims[block.modes[1]]
        local = beam_splitter(params[0], params[1], d1, d2).matrix
    if len(dims) == 1:
        return local
    reg = RegisterSpec(dims)
    return embed(OperatorTerm(1.0, block.modes, local), reg)


def ansatz_unitary(layout: AnsatzLayout, params: Sequence[float]) -> GateMatrix:
    """Ordered product of the block unitaries (first block acts first)."""
    params = np.asarray(params, dtype=float)
    if params.shape != (layout.n_params,):
        raise DimensionError(
            f"layout expects {layout.n_params} parameters, got {params.shape}")
    total = None
    for block, sl in zip(layout.blocks, layout.param_slices()):
        mat = _block_matrix(block, params[sl], layout.dims)
        total = mat if total is None else mat @ total
    return GateMatrix(total, layout.dims)


def fidelity(u: GateMatrix, v: GateMatrix) -> float:
    """Global-phase-invariant overlap |Tr(U^dag V)|^2 / D^2."""
    if u.dims != v.dims:
        raise DimensionError(f"dimension mismatch {u.dims} vs {v.dims}")
    d = u.matrix.shape[0]
    return float(np.abs(np.trace(u.matrix.conj().T @ v.matrix)) ** 2) / d**2


def _subspace_indices(work_dims: tuple[int, ...], target_dims: tuple[int, ...]
                      ) -> np.ndarray:
    if len(work_dims) != len(target_dims) or any(
            t > w for t, w in zip(target_dims, work_dims)):
        raise DimensionError(
            f"target dims {target_dims} do not embed in workspace {work_dims}")
    digits = digits_table(work_dims)
    mask = np.all(digits < np.asarray(target_dims), axis=1)
    return np.nonzero(mask)[0]


@dataclass(frozen=True)
class _Objective:
    """1 - fidelity, plus a leakage penalty when scoring on a subspace."""

    target: np.ndarray
    indices: Optional[np.ndarray]    # workspace indices of the subspace
    leakage_weight: float = 1.0

    def __call__(self, unitary: np.ndarray) -> float:
        if self.indices is None:
            d = unitary.shape[0]
            fid = np.abs(np.trace(self.target.conj().T @ unitary)) ** 2 / d**2
            return float(1.0 - fid)
        sub = unitary[np.ix_(self.indices, self.indices)]
        d = len(self.indices)
        fid = np.abs(np.trace(self.target.conj().T @ sub)) ** 2 / d**2
        leakage = 1.0 - np.real(np.trace(sub.conj().T @ sub)) / d
        return float(1.0 - fid + self.leakage_weight * leakage)

    def scores(self, unitary: np.ndarray) -> tuple[float, float]:
        """(subspace fidelity, leakage) for reporting."""
        if self.indices is None:
            d = unitary.shape[0]
            return float(np.abs(np.trace(self.target.conj().T @ unitary)) ** 2 / d**2), 0.0
        sub = unitary[np.ix_(self.indices, self.indices)]
        d = len(self.indices)
        fid = float(np.abs(np.trace(self.target.conj().T @ sub)) ** 2 / d**2)
        leakage = float(1.0 - np.real(np.trace(sub.conj().T @ sub)) / d)
        return fid, leakage


def _fd_gradient(layout: AnsatzLayout, params: np.ndarray, objective: _Objective,
                 epsilon: float) -> np.ndarray:
    """Central differences with prefix/suffix products so each coordinate
    costs one block rebuild instead of a full ansatz rebuild."""
    mats = [_block_matrix(b, params[sl], layout.dims)
            for b, sl in zip(layout.blocks, layout.param_slices())]
    dim = mats[0].shape[0]
    eye = np.eye(dim, dtype=complex)
    prefix = [eye]
    for m in mats:
        prefix.append(m @ prefix[-1])
    suffix = [eye]
    for m in reversed(mats):
        suffix.append(suffix[-1] @ m)
    suffix.reverse()   # suffix[k] = U_L ... U_{k+1} (identity for k = L)
    grad = np.empty(layout.n_params)
    for k, (block, sl) in enumerate(zip(layout.blocks, layout.param_slices())):
        base = params[sl].copy()
        for j in range(sl.stop - sl.start):
            bumped = base.copy()
            bumped[j] = base[j] + epsilon
            plus = suffix[k + 1] @ (_block_matrix(block, bumped, layout.dims)
                                    @ prefix[k])
            bumped[j] = base[j] - epsilon
            minus = suffix[k + 1] @ (_block_matrix(block, bumped, layout.dims)
                                     @ prefix[k])
            grad[sl.start + j] = (objective(plus) - objective(minus)) / (2 * epsilon)
    return grad


def gradient(layout: AnsatzLayout, params: Sequence[float], target: GateMatrix,
             epsilon: float = 1e-5) -> np.ndarray:
    """Central finite differences of ``1 - fidelity(target, ansatz)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    params = np.asarray(params, dtype=float)
    if target.dims == tuple(layout.dims):
        objective = _Objective(target.matrix, None)
    else:
        indices = _subspace_indices(layout.dims, target.dims)
        objective = _Objective(target.matrix, indices)
    return _fd_gradient(layout, params, objective, epsilon)


@dataclass(frozen=True)
class OptimizerOptions:
    step: float = 0.05
    iters: int = 2000
    restarts: int = 8
    epsilon: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        if self.step <= 0 or self.iters < 1 or self.restarts < 1 or self.epsilon <= 0:
            raise ValueError("optimizer options out of range")


@dataclass(frozen=True)
class SynthesisResult:
    params: np.ndarray
    fidelity: float
    leakage: float
    objective: float
    iterations: int
    restarts: int
    objective_trace: np.ndarray   # per-iteration objective of the winning restart


def _initial_params(layout: AnsatzLayout, rng: np.random.Generator) -> np.ndarray:
    values = np.empty(layout.n_params)
    for block, sl in zip(layout.blocks, layout.param_slices()):
        if block.kind == "displacement":
            values[sl] = rng.uniform(-0.5, 0.5, 2)
        else:
            values[sl] = rng.uniform(-np.pi, np.pi, sl.stop - sl.start)
    return values


def _adam_descent(layout: AnsatzLayout, objective: _Objective, start: np.ndarray,
                  opts: OptimizerOptions) -> tuple[np.ndarray, float, np.ndarray]:
    params = start.copy()
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    best_params = params.copy()
    best_value = objective(ansatz_unitary(layout, params).matrix)
    trace = np.empty(opts.iters)
    for t in range(1, opts.iters + 1):
        grad = _fd_gradient(layout, params, objective, opts.epsilon)
        m = opts.beta1 * m + (1 - opts.beta1) * grad
        v = opts.beta2 * v + (1 - opts.beta2) * grad**2
        m_hat = m / (1 - opts.beta1**t)
        v_hat = v / (1 - opts.beta2**t)
        # cosine decay lets late iterations settle into the basin floor
        lr = opts.step * 0.5 * (1.0 + np.cos(np.pi * (t - 1) / opts.iters))
        params = params - lr * m_hat / (np.sqrt(v_hat) + 1e-8)
        value = objective(ansatz_unitary(layout, params).matrix)
        if value < best_value:
            best_value = value
            best_params = params.copy()
        # best-so-far, so the trace reads as attained objective per budget
        trace[t - 1] = best_value
    return best_params, best_value, trace


def synthesize(target: GateMatrix, layout: AnsatzLayout,
               optimizer: Optional[OptimizerOptions] = None, seed: int = 0,
               workers: int = 1) -> SynthesisResult:
    """Adam descent on 1 - fidelity from ``restarts`` random starts.

    Low final fidelity is a result, not an error — some (target, layout)
    pairs simply cannot express the gate. Deterministic for a given seed.
    """
    opts = optimizer if optimizer is not None else OptimizerOptions()
    if target.dims == tuple(layout.dims):
        objective = _Objective(target.matrix, None)
    else:
        indices = _subspace_indices(layout.dims, target.dims)
        objective = _Objective(target.matrix, indices)

    def solve(restart_index: int) -> tuple[np.ndarray, float, np.ndarray]:
        rng = rng_from(child_seed(seed, restart_index))
        return _adam_descent(layout, objective, _initial_params(layout, rng), opts)

    outcomes = parallel_map(solve, range(opts.restarts), workers=workers)
    best_params, best_value, best_trace = min(outcomes, key=lambda o: o[1])
    unitary = ansatz_unitary(layout, best_params).matrix
    fid, leakage = objective.scores(unitary)
    return SynthesisResult(
        params=best_params,
        fidelity=fid,
        leakage=leakage,
        objective=float(best_value),
        iterations=opts.iters,
        restarts=opts.restarts,
        objective_trace=best_trace,
    )


@dataclass(frozen=True)
class SynthExperiment:
    target: GateMatrix
    layout: AnsatzLayout
    optimizer: OptimizerOptions = OptimizerOptions()
    workers: int = 1


def run_experiment(exp: SynthExperiment, seed: int) -> dict:
    result = synthesize(exp.target, exp.layout, exp.optimizer, seed=seed,
                        workers=exp.workers)
    report = {
        "workload": "synth",
        "seed": int(seed),
        "workspace_dims": list(exp.layout.dims),
        "target_dims": list(exp.target.dims),
        "blocks": [[b.kind, list(b.modes)] for b in exp.layout.blocks],
        "n_params": exp.layout.n_params,
        "fidelity": result.fidelity,
        "leakage": result.leakage,
        "objective": result.objective,
        "iterations": result.iterations,
        "restarts": result.restarts,
        "params": [float(p) for p in result.params],
    }
    arrays = {"objective_trace": result.objective_trace,
              "unitary": ansatz_unitary(exp.layout, result.params).matrix}
    return {"report": report, "arrays": arrays}
