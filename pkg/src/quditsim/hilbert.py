"""Truncated Fock-space registers: operators, states, embedding, sampling.

A register is a tensor product of finite-dimensional modes ("qudits"). Basis
ordering is row-major mixed radix with site 0 as the most significant digit,
i.e. ``index = sum_i level_i * prod_{j>i} d_j`` — the same convention
``np.kron`` uses, so ``kron(A, B)`` acts on sites ``(0, 1)``.

Two level-label conventions are supported per site:

* ``"fock"``      — levels labelled 0 .. d-1 (occupation numbers),
* ``"symmetric"`` — levels labelled -l .. +l (requires odd d = 2l+1), used by
  spin-like truncations where the middle level is the zero eigenvalue.

Labels only affect diagonal operators built from them (``lz``); amplitudes and
ladder structure are label-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .util import rng_from

FOCK = "fock"
SYMMETRIC = "symmetric"
_LABELINGS = (FOCK, SYMMETRIC)

NORM_TOL = 1e-10
HERM_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8


class DimensionError(ValueError):
    """Register/operator shape or dimension-limit violation."""


@dataclass(frozen=True)
class RegisterSpec:
    """Immutable description of a multi-qudit register.

    Parameters
    ----------
    dims : per-site truncation dimensions, each >= 2.
    labeling : a single string broadcast to every site, or one per site.
    """

    dims: tuple[int, ...]
    labeling: tuple[str, ...] = FOCK

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0:
            raise DimensionError("register needs at least one site")
        if any(d < 2 for d in dims):
            raise DimensionError(f"every site dimension must be >= 2, got {dims}")
        labeling = self.labeling
        if isinstance(labeling, str):
            labeling = (labeling,) * len(dims)
        labeling = tuple(labeling)
        if len(labeling) != len(dims):
            raise DimensionError("labeling must be one entry per site")
        for d, lab in zip(dims, labeling):
            if lab not in _LABELINGS:
                raise DimensionError(f"unknown labeling {lab!r}")
            if lab == SYMMETRIC and d % 2 == 0:
                raise DimensionError(f"symmetric labeling needs odd d, got d={d}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labeling", labeling)

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def labels(self, site: int) -> np.ndarray:
        """Diagonal level labels for one site (float array, length d)."""
        d = self.dims[site]
        if self.labeling[site] == SYMMETRIC:
            ell = (d - 1) // 2
            return np.arange(-ell, ell + 1, dtype=float)
        return np.arange(d, dtype=float)

    def index_of(self, levels: Sequence[int]) -> int:
        """Basis index of a product level tuple (site 0 most significant)."""
        if len(levels) != self.n_sites:
            raise DimensionError("one level per site required")
        idx = 0
        for lev, d in zip(levels, self.dims):
            lev = int(lev)
            if not 0 <= lev < d:
                raise DimensionError(f"level {lev} out of range for d={d}")
            idx = idx * d + lev
        return idx

    def levels_of(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index_of`."""
        if not 0 <= index < self.dim:
            raise DimensionError(f"basis index {index} out of range")
        out = []
        for d in reversed(self.dims):
            out.append(index % d)
            index //= d
        return tuple(reversed(out))


@lru_cache(maxsize=32)
def digits_table(dims: tuple[int, ...]) -> np.ndarray:
    """(D, n) array: row i holds the per-site levels of basis index i."""
    total = int(np.prod(dims))
    idx = np.arange(total)
    out = np.empty((total, len(dims)), dtype=np.int64)
    for axis in range(len(dims) - 1, -1, -1):
        out[:, axis] = idx % dims[axis]
        idx //= dims[axis]
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class QuantumState:
    """Normalized pure state over a register (amplitudes in basis order)."""

    amplitudes: np.ndarray
    register: RegisterSpec

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.register.dim:
            raise DimensionError(
                f"amplitude length {amps.shape[0]} != register dim {self.register.dim}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"state norm {norm} too far from 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_error(self) -> float:
        return abs(float(np.linalg.norm(self.amplitudes)) - 1.0)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @staticmethod
    def from_levels(register: RegisterSpec, levels: Sequence[int]) -> "QuantumState":
        amps = np.zeros(register.dim, dtype=complex)
        amps[register.index_of(levels)] = 1.0
        return QuantumState(amps, register)

    @staticmethod
    def uniform(register: RegisterSpec) -> "QuantumState":
        amps = np.full(register.dim, 1.0 / np.sqrt(register.dim), dtype=complex)
        return QuantumState(amps, register)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace matrix over a register.

    Construction checks hermiticity (1e-10) and trace (1e-9); positivity is
    checked by :meth:`min_eigenvalue` because it needs a full eigensolve.
    """

    entries: np.ndarray
    register: RegisterSpec

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        d = self.register.dim
        if rho.shape != (d, d):
            raise DimensionError(f"density matrix shape {rho.shape} != ({d}, {d})")
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERM_TOL:
            raise ValueError(f"density matrix not Hermitian (max dev {herm:.2e})")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} too far from 1")
        object.__setattr__(self, "entries", rho)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.entries)), 0.0, None)

    @staticmethod
    def from_state(state: QuantumState) -> "DensityMatrix":
        amps = state.amplitudes
        return DensityMatrix(np.outer(amps, amps.conj()), state.register)


StateLike = Union[QuantumState, DensityMatrix]


# ---------------------------------------------------------------------------
# local operators


@dataclass(frozen=True)
class OperatorTerm:
    """``coefficient * matrix`` acting on ``sites`` of a register.

    ``sites`` may be any distinct site indices in any order; the matrix is
    given in that site order (first site = most significant factor).
    """

    coefficient: complex
    sites: tuple[int, ...]
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise DimensionError(f"repeated sites in {sites}")
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError("term matrix must be square")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        if self.hermitian:
            full = self.coefficient * mat
            dev = float(np.max(np.abs(full - full.conj().T)))
            if dev > 1e-12:
                raise ValueError(f"term flagged hermitian deviates by {dev:.2e}")

    def scaled(self) -> np.ndarray:
        return self.coefficient * self.matrix


def ladder_bosonic(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated bosonic ladder trio ``(annihilate, create, number)``.

    ``annihilate[k-1, k] = sqrt(k)``; ``number`` is ``diag(0..d-1)``, equal to
    ``create @ annihilate`` up to float rounding.
    """
    if d < 2:
        raise DimensionError("need d >= 2")
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    return a, a.conj().T, np.diag(np.arange(d, dtype=float)).astype(complex)


def ladder_cyclic(d: int, labeling: str = FOCK) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit-amplitude truncated ladder trio ``(raise, lower, lz)``.

    ``raise|m> = |m+1>`` with the top level annihilated (no wrap-around);
    ``lz`` is diagonal in the requested label convention.
    """
    if d < 2:
        raise DimensionError("need d >= 2")
    raise_op = np.diag(np.ones(d - 1), k=-1).astype(complex)
    lower_op = raise_op.conj().T
    reg = RegisterSpec((d,), labeling)
    lz = np.diag(reg.labels(0)).astype(complex)
    return raise_op, lower_op, lz


def embed(term: OperatorTerm, register: RegisterSpec) -> np.ndarray:
    """Full D x D matrix for a local term (identity on untouched sites).

    Handles arbitrary (also non-adjacent, also permuted) site tuples by
    building ``matrix (x) identity`` in the reordered basis ``sites + rest``
    and conjugating with the basis permutation back to register order.
    """
    dims = register.dims
    n = register.n_sites
    sites = term.sites
    if any(not 0 <= s < n for s in sites):
        raise DimensionError(f"sites {sites} out of range for {n} sites")
    sub = int(np.prod([dims[s] for s in sites]))
    if term.matrix.shape[0] != sub:
        raise DimensionError(
            f"term matrix dim {term.matrix.shape[0]} != product of site dims {sub}"
        )
    rest = [i for i in range(n) if i not in sites]
    reorder = list(sites) + rest
    big = np.kron(term.scaled(), np.eye(int(np.prod([dims[r] for r in rest], initial=1.0))))
    # permutation: register-order index -> index in the (sites + rest) ordering
    digits = digits_table(dims)
    perm = np.zeros(register.dim, dtype=np.int64)
    for axis in reorder:
        perm = perm * dims[axis] + digits[:, axis]
    return big[np.ix_(perm, perm)]


# ---------------------------------------------------------------------------
# fast in-place-style application (no D x D embedding)


def _apply_axes(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a square ``matrix`` against the given tensor axes (kept in order)."""
    k = len(axes)
    moved = np.moveaxis(tensor, axes, range(k))
    shape = moved.shape
    flat = moved.reshape(matrix.shape[1], -1)
    out = (matrix @ flat).reshape(shape)
    return np.moveaxis(out, range(k), axes)


def apply_matrix_state(amps: np.ndarray, matrix: np.ndarray, sites: Sequence[int],
                       dims: Sequence[int]) -> np.ndarray:
    """``(M on sites) @ psi`` via mixed-radix index arithmetic (reshape), not
    a full D x D embedding. Returns a new array."""
    psi = np.asarray(amps).reshape(tuple(dims))
    return _apply_axes(psi, matrix, list(sites)).reshape(-1)


def apply_matrix_dm(rho: np.ndarray, matrix: np.ndarray, sites: Sequence[int],
                    dims: Sequence[int]) -> np.ndarray:
    """``A rho A^dag`` with A local on ``sites``; returns a new D x D array."""
    n = len(dims)
    d_total = rho.shape[0]
    t = np.asarray(rho).reshape(tuple(dims) + tuple(dims))
    t = _apply_axes(t, matrix, list(sites))
    t = _apply_axes(t, matrix.conj(), [n + s for s in sites])
    return t.reshape(d_total, d_total)


def apply_kraus_dm(rho: np.ndarray, operators: Iterable[np.ndarray],
                   sites: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """``sum_k A_k rho A_k^dag`` for local Kraus operators."""
    out = None
    for op in operators:
        piece = apply_matrix_dm(rho, op, sites, dims)
        out = piece if out is None else out + piece
    return out


# ---------------------------------------------------------------------------
# expectation / reduction / sampling


def expectation(state: StateLike, op: np.ndarray) -> complex:
    """<psi|O|psi> or Tr(rho O) for a full-register operator matrix."""
    if isinstance(state, QuantumState):
        return complex(np.vdot(state.amplitudes, op @ state.amplitudes))
    if isinstance(state, DensityMatrix):
        return complex(np.trace(state.entries @ op))
    raise TypeError(f"unsupported state type {type(state)!r}")


def partial_trace(dm: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the (sorted) kept sites."""
    reg = dm.register
    n = reg.n_sites
    keep = sorted(int(k) for k in keep)
    if len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise DimensionError(f"bad keep set {keep}")
    if not keep:
        raise DimensionError("must keep at least one site")
    dims = reg.dims
    t = dm.entries.reshape(tuple(dims) + tuple(dims))
    row_labels = list(range(n))
    col_labels = [i + n if i in keep else i for i in range(n)]
    out_labels = [i for i in keep] + [i + n for i in keep]
    red = np.einsum(t, row_labels + col_labels, out_labels)
    kept_dim = int(np.prod([dims[k] for k in keep]))
    sub_reg = RegisterSpec(tuple(dims[k] for k in keep),
                           tuple(reg.labeling[k] for k in keep))
    return DensityMatrix(red.reshape(kept_dim, kept_dim), sub_reg)


def measure_sample(state: StateLike, shots: int, seed: int) -> dict[tuple[int, ...], int]:
    """Sample computational-basis outcomes; returns ``{levels: count}``.

    Deterministic for a given seed (counter-based generator). Only outcomes
    with a nonzero count appear in the result.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    probs = state.probabilities()
    total = probs.sum()
    if total <= 0:
        raise ValueError("state has no probability mass")
    probs = probs / total
    counts = rng_from(seed).multinomial(shots, probs)
    reg = state.register
    return {reg.levels_of(int(i)): int(c) for i, c in enumerate(counts) if c > 0}
