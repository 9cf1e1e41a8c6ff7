"""Hamiltonians, circuits, and evolution engines.

Three engines, in increasing generality:

* :func:`evolve_exact`   — dense eigendecomposition (D capped by ``dense_limit``),
* :func:`trotter_evolve` — product-formula evolution, order 1 or 2, applying
  per-term local exponentials with mixed-radix index arithmetic (no D x D
  embedding on the hot path),
* :func:`lindblad_evolve` — fixed-step RK4 density-matrix integrator with
  per-step re-Hermitization and trace-drift abort.

:func:`circuit_run` executes gate/channel sequences, auto-promoting pure
states to density matrices the first time a channel shows up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .gates import GateMatrix, KrausChannel, expm_hermitian
from .hilbert import (
    DensityMatrix,
    DimensionError,
    OperatorTerm,
    QuantumState,
    RegisterSpec,
    StateLike,
    apply_kraus_dm,
    apply_matrix_dm,
    apply_matrix_state,
    embed,
)
from .util import write_csv

DENSE_LIMIT = 4096
TRACE_ABORT = 1e-6


@dataclass(frozen=True)
class Hamiltonian:
    """Sum of local Hermitian terms over one register."""

    terms: tuple[OperatorTerm, ...]
    register: RegisterSpec

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("Hamiltonian needs at least one term")
        for term in terms:
            scaled = term.scaled()
            dev = float(np.max(np.abs(scaled - scaled.conj().T)))
            if dev > 1e-12:
                raise ValueError(f"non-Hermitian Hamiltonian term (max dev {dev:.2e})")
            sub = int(np.prod([self.register.dims[s] for s in term.sites]))
            if scaled.shape[0] != sub:
                raise DimensionError("term matrix does not match its site dims")
        object.__setattr__(self, "terms", terms)

    def dense(self) -> np.ndarray:
        """Full D x D matrix (requires D within the dense regime)."""
        total = np.zeros((self.register.dim, self.register.dim), dtype=complex)
        for term in self.terms:
            total += embed(term, self.register)
        return total


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus ``(collapse operator, rate)`` pairs."""

    hamiltonian: Hamiltonian
    collapses: tuple[tuple[OperatorTerm, float], ...] = ()

    def __post_init__(self):
        collapses = tuple((op, float(rate)) for op, rate in self.collapses)
        for _, rate in collapses:
            if rate < 0:
                raise ValueError(f"collapse rate must be >= 0, got {rate}")
        object.__setattr__(self, "collapses", collapses)

    @property
    def register(self) -> RegisterSpec:
        return self.hamiltonian.register


CircuitOp = tuple[Union[GateMatrix, KrausChannel], tuple[int, ...]]


@dataclass(frozen=True)
class Circuit:
    """Ordered gate/channel applications on a register."""

    register: RegisterSpec
    ops: tuple[CircuitOp, ...]

    def __post_init__(self):
        ops = []
        for op, sites in self.ops:
            sites = tuple(int(s) for s in sites)
            if len(sites) != op.arity:
                raise DimensionError(f"{op.arity}-mode operation given sites {sites}")
            for s, d in zip(sites, op.dims):
                if not 0 <= s < self.register.n_sites:
                    raise DimensionError(f"site {s} out of range")
                if self.register.dims[s] != d:
                    raise DimensionError(
                        f"operation dim {d} != register dim {self.register.dims[s]} at site {s}"
                    )
            ops.append((op, sites))
        object.__setattr__(self, "ops", tuple(ops))

    def __len__(self) -> int:
        return len(self.ops)


# ---------------------------------------------------------------------------
# exact evolution


def evolve_exact(state: QuantumState, hamiltonian: Hamiltonian, t: float,
                 dense_limit: int = DENSE_LIMIT) -> QuantumState:
    """``exp(-i H t)|psi>`` by dense eigendecomposition."""
    reg = hamiltonian.register
    if reg.dim > dense_limit:
        raise DimensionError(f"D={reg.dim} exceeds dense limit {dense_limit}")
    w, v = np.linalg.eigh(hamiltonian.dense())
    coeffs = v.conj().T @ state.amplitudes
    return QuantumState(v @ (np.exp(-1j * w * t) * coeffs), reg)


# ---------------------------------------------------------------------------
# Trotter product formulas


def _term_unitaries(hamiltonian: Hamiltonian, dt: float) -> list[tuple[np.ndarray, tuple[int, ...]]]:
    """Local ``exp(-i (c M) dt)`` per term, in term-list order."""
    out = []
    for term in hamiltonian.terms:
        scaled = term.scaled()
        # coefficient is folded into the matrix; scaled is Hermitian (checked)
        out.append((expm_hermitian(scaled, dt), term.sites))
    return out


def trotter_step_sequence(hamiltonian: Hamiltonian, dt: float, order: int
                          ) -> list[tuple[np.ndarray, tuple[int, ...]]]:
    """One Trotter step as a list of (local unitary, sites) applications.

    Order 1: every term once with step ``dt``, in term-list order.
    Order 2: forward half-steps then the same half-steps reversed.
    """
    if order == 1:
        return _term_unitaries(hamiltonian, dt)
    if order == 2:
        half = _term_unitaries(hamiltonian, dt / 2.0)
        return half + half[::-1]
    raise ValueError(f"order must be 1 or 2, got {order}")


def trotter_evolve(state: QuantumState, hamiltonian: Hamiltonian, t: float,
                   steps: int, order: int = 2) -> QuantumState:
    """Product-formula approximation of ``exp(-i H t)|psi>``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    reg = hamiltonian.register
    if reg is not state.register and reg.dims != state.register.dims:
        raise DimensionError("state and Hamiltonian registers differ")
    seq = trotter_step_sequence(hamiltonian, t / steps, order)
    amps = state.amplitudes
    dims = reg.dims
    for _ in range(steps):
        for mat, sites in seq:
            amps = apply_matrix_state(amps, mat, sites, dims)
    return QuantumState(amps, reg)


# ---------------------------------------------------------------------------
# Lindblad RK4


def _lindblad_rhs(rho: np.ndarray, h: np.ndarray,
                  collapse: list[tuple[np.ndarray, np.ndarray, np.ndarray, float]]
                  ) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for op, op_dag, op_dag_op, rate in collapse:
        out += rate * (op @ rho @ op_dag - 0.5 * (op_dag_op @ rho + rho @ op_dag_op))
    return out


def _rk4_step(rho: np.ndarray, dt: float, rhs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (rho + rho.conj().T)   # re-Hermitize every step


def suggested_dt(model: LindbladModel) -> float:
    """Step bound ``0.1 / max(|spectrum|, max rate)`` used by callers that do
    not pin dt themselves."""
    h = model.hamiltonian.dense()
    scale = float(np.max(np.abs(np.linalg.eigvalsh(h)))) if h.size else 0.0
    for _, rate in model.collapses:
        scale = max(scale, rate)
    return 0.1 / max(scale, 1e-9)


def lindblad_evolve(rho: DensityMatrix, model: LindbladModel, t: float, dt: float,
                    sample_times: Optional[Sequence[float]] = None
                    ) -> tuple[np.ndarray, list[DensityMatrix]]:
    """Integrate ``drho/dt = -i[H, rho] + sum_k rate_k D[L_k] rho`` with fixed-step RK4.

    The grid is ``n = round(t / dt)`` uniform steps (dt is nudged so the grid
    lands exactly on ``t``); requested sample times snap to the nearest grid
    point. Aborts with diagnostics if ``|trace - 1|`` exceeds 1e-6, which in
    practice means dt violates the stability bound (see :func:`suggested_dt`).

    Returns ``(times, states)`` with one density matrix per sample time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t < 0:
        raise ValueError("t must be >= 0")
    reg = model.register
    h = model.hamiltonian.dense()
    collapse = []
    for term, rate in model.collapses:
        op = embed(term, reg)
        op_dag = op.conj().T
        collapse.append((op, op_dag, op_dag_op := op_dag @ op, rate))

    n_steps = max(1, int(round(t / dt))) if t > 0 else 0
    dt_eff = t / n_steps if n_steps else 0.0
    if sample_times is None:
        sample_times = [t]
    wanted = {}
    for ts in sample_times:
        if not -1e-12 <= ts <= t + 1e-12:
            raise ValueError(f"sample time {ts} outside [0, {t}]")
        idx = int(round(ts / dt_eff)) if n_steps else 0
        wanted.setdefault(idx, ts)

    rhs = lambda r: _lindblad_rhs(r, h, collapse)
    current = rho.entries.copy()
    out_times, out_states = [], []

    def record(idx: int):
        if idx in wanted:
            out_times.append(idx * dt_eff)
            out_states.append(DensityMatrix(current, reg))

    record(0)
    for step in range(1, n_steps + 1):
        current = _rk4_step(current, dt_eff, rhs)
        drift = abs(float(np.real(np.trace(current))) - 1.0)
        if drift > TRACE_ABORT:
            raise RuntimeError(
                f"trace drift {drift:.3e} at step {step}/{n_steps} (t={step * dt_eff:.6g}); "
                f"dt={dt_eff:.3g} likely violates the stability bound {suggested_dt(model):.3g}"
            )
        record(step)
    return np.array(out_times), out_states


# ---------------------------------------------------------------------------
# channels and circuits


def apply_channel(rho: DensityMatrix, channel: KrausChannel,
                  sites: Sequence[int]) -> DensityMatrix:
    """Apply a local Kraus channel to a density matrix."""
    reg = rho.register
    sites = tuple(int(s) for s in sites)
    if len(sites) != channel.arity:
        raise DimensionError("site count does not match channel arity")
    for s, d in zip(sites, channel.dims):
        if reg.dims[s] != d:
            raise DimensionError(f"channel dim {d} != register dim {reg.dims[s]} at site {s}")
    out = apply_kraus_dm(rho.entries, channel.operators, sites, reg.dims)
    return DensityMatrix(out, reg)


NoiseFactory = Callable[[int], KrausChannel]
"""Maps a site dimension to the channel applied to that site after each gate."""


def circuit_run(state: StateLike, circuit: Circuit,
                noise: Optional[NoiseFactory] = None) -> StateLike:
    """Run a circuit on a pure state or density matrix.

    With ``noise`` set (or any channel in the circuit), pure-state input is
    promoted to a density matrix at the first point it is needed.
    """
    reg = circuit.register
    dims = reg.dims
    if isinstance(state, QuantumState):
        if state.register.dims != dims:
            raise DimensionError("state register does not match circuit register")
        pure: Optional[np.ndarray] = state.amplitudes
        rho: Optional[np.ndarray] = None
    elif isinstance(state, DensityMatrix):
        if state.register.dims != dims:
            raise DimensionError("state register does not match circuit register")
        pure, rho = None, state.entries
    else:
        raise TypeError(f"unsupported state type {type(state)!r}")

    def promote():
        nonlocal pure, rho
        if rho is None:
            rho = np.outer(pure, pure.conj())
            pure = None

    for op, sites in circuit.ops:
        if isinstance(op, KrausChannel):
            promote()
            rho = apply_kraus_dm(rho, op.operators, sites, dims)
        else:
            if noise is not None:
                promote()
            if pure is not None:
                pure = apply_matrix_state(pure, op.matrix, sites, dims)
            else:
                rho = apply_matrix_dm(rho, op.matrix, sites, dims)
            if noise is not None:
                for s in sites:
                    chan = noise(dims[s])
                    if chan is not None:
                        rho = apply_kraus_dm(rho, chan.operators, (s,), dims)
    if pure is not None:
        return QuantumState(pure, reg)
    return DensityMatrix(0.5 * (rho + rho.conj().T), reg)


def trajectory_csv(path, times: Sequence[float],
                   observables: Mapping[str, Sequence[float]]):
    """Write a trajectory table: ``time`` column then one column per observable."""
    names = list(observables)
    columns = [np.asarray(observables[k], dtype=float) for k in names]
    for col in columns:
        if len(col) != len(times):
            raise ValueError("observable length does not match times")
    rows = ([float(t)] + [float(c[i]) for c in columns] for i, t in enumerate(times))
    return write_csv(path, ["time"] + names, rows)
