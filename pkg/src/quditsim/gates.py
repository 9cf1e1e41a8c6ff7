"""Gate and channel library for truncated-Fock qudits.

All unitaries are built from Hermitian/anti-Hermitian generators by
eigendecomposition (never truncated power series), so they are unitary to
round-off even at small truncation dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .hilbert import DimensionError, ladder_bosonic

UNITARY_TOL = 1e-10
KRAUS_TOL = 1e-10


@dataclass(frozen=True)
class GateMatrix:
    """A unitary with the mode dimensions it acts on (site order = factor order)."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        d_total = int(np.prod(dims))
        if mat.shape != (d_total, d_total):
            raise DimensionError(f"gate shape {mat.shape} != dims product {d_total}")
        dev = float(np.max(np.abs(mat.conj().T @ mat - np.eye(d_total))))
        if dev > UNITARY_TOL:
            raise ValueError(f"matrix not unitary (max |U^dag U - I| = {dev:.2e})")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def arity(self) -> int:
        return len(self.dims)


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving channel given by Kraus operators on local modes."""

    operators: tuple[np.ndarray, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        d_total = int(np.prod(dims))
        ops = tuple(np.asarray(op, dtype=complex) for op in self.operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        for op in ops:
            if op.shape != (d_total, d_total):
                raise DimensionError(f"Kraus operator shape {op.shape} != {(d_total, d_total)}")
        total = sum(op.conj().T @ op for op in ops)
        dev = float(np.max(np.abs(total - np.eye(d_total))))
        if dev > KRAUS_TOL:
            raise ValueError(f"Kraus completeness violated (max dev {dev:.2e})")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "dims", dims)

    @property
    def arity(self) -> int:
        return len(self.dims)


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(-1j * t * h)`` for Hermitian ``h`` via eigendecomposition.

    Diagonal matrices take the exact elementwise path; this is shared by the
    Trotter layer builders so circuit gates and evolution steps are built from
    bit-identical matrices.
    """
    h = np.asarray(h)
    off = h - np.diag(np.diag(h))
    if not np.any(off):
        return np.diag(np.exp(-1j * t * np.diag(h)))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


# ---------------------------------------------------------------------------
# single-mode gates


def snap(phases) -> GateMatrix:
    """Diagonal phase gate ``diag(exp(i * phases))`` (one phase per level)."""
    phases = np.asarray(phases, dtype=float).reshape(-1)
    if phases.size < 2:
        raise DimensionError("need at least two levels")
    return GateMatrix(np.diag(np.exp(1j * phases)), (phases.size,))


def displacement(alpha: complex, d: int) -> GateMatrix:
    """Truncated displacement ``exp(alpha a^dag - conj(alpha) a)``."""
    a, adag, _ = ladder_bosonic(d)
    gen = alpha * adag - np.conj(alpha) * a          # anti-Hermitian
    return GateMatrix(expm_hermitian(1j * gen), (d,))


def qudit_x(d: int) -> GateMatrix:
    """Cyclic shift ``X|k> = |k+1 mod d>``."""
    if d < 2:
        raise DimensionError("need d >= 2")
    mat = np.zeros((d, d), dtype=complex)
    mat[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    return GateMatrix(mat, (d,))


def qudit_z(d: int) -> GateMatrix:
    """Clock gate ``Z|k> = omega^k |k>`` with ``omega = exp(2 pi i / d)``."""
    if d < 2:
        raise DimensionError("need d >= 2")
    omega = np.exp(2j * np.pi / d)
    return GateMatrix(np.diag(omega ** np.arange(d)), (d,))


def givens(d: int, j: int, k: int, theta: float, phi: float) -> GateMatrix:
    """Rotation in the two-level subspace ``{|j>, |k>}``, identity elsewhere."""
    if not (0 <= j < d and 0 <= k < d) or j == k:
        raise DimensionError(f"need distinct levels in range, got j={j}, k={k}")
    mat = np.eye(d, dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    mat[j, j] = c
    mat[k, k] = c
    mat[j, k] = -np.exp(1j * phi) * s
    mat[k, j] = np.exp(-1j * phi) * s
    return GateMatrix(mat, (d,))


# ---------------------------------------------------------------------------
# two-mode gates


def beam_splitter(theta: float, phi: float, d1: int, d2: int) -> GateMatrix:
    """``exp(theta (e^{i phi} a1^dag a2 - e^{-i phi} a1 a2^dag))``.

    Conserves total photon number; mode 1 is the most significant factor.
    """
    a1, adag1, _ = ladder_bosonic(d1)
    a2, adag2, _ = ladder_bosonic(d2)
    gen = theta * (np.exp(1j * phi) * np.kron(adag1, a2)
                   - np.exp(-1j * phi) * np.kron(a1, adag2))
    return GateMatrix(expm_hermitian(1j * gen), (d1, d2))


def csum(d: int) -> GateMatrix:
    """Controlled-sum ``|a>|b> -> |a>|(a+b) mod d>`` (control = first mode)."""
    if d < 2:
        raise DimensionError("need d >= 2")
    mat = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            mat[a * d + (a + b) % d, a * d + b] = 1.0
    return GateMatrix(mat, (d, d))


def edge_phase_separator(d: int, gamma: float) -> GateMatrix:
    """Diagonal phase ``exp(-i gamma [a == b])`` on a pair of same-d qudits."""
    if d < 2:
        raise DimensionError("need d >= 2")
    diag = np.ones(d * d, dtype=complex)
    idx = np.arange(d)
    diag[idx * d + idx] = np.exp(-1j * gamma)
    return GateMatrix(np.diag(diag), (d, d))


# ---------------------------------------------------------------------------
# channels


def photon_loss_channel(d: int, gamma: float) -> KrausChannel:
    """Single-mode photon loss with loss probability ``gamma`` per photon.

    Kraus operators ``A_k = sum_{n>=k} sqrt(C(n,k) gamma^k (1-gamma)^{n-k})
    |n-k><n|``; complete by the binomial theorem for any truncation d.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if d < 2:
        raise DimensionError("need d >= 2")
    ops = []
    for k in range(d):
        op = np.zeros((d, d), dtype=complex)
        for n in range(k, d):
            op[n - k, n] = np.sqrt(comb(n, k) * gamma**k * (1.0 - gamma) ** (n - k))
        ops.append(op)
    return KrausChannel(tuple(ops), (d,))


def loss_transition(d: int, gamma: float) -> np.ndarray:
    """Classical level-transition matrix ``T[m, n] = P(n -> m)`` of photon loss.

    Every loss Kraus operator has a single nonzero entry per row, so the
    post-channel computational-basis populations depend only on the
    pre-channel populations: ``q = T @ p`` with
    ``T[m, n] = C(n, n-m) gamma^(n-m) (1-gamma)^m`` for ``m <= n``.
    This is the exact channel action on basis-measurement statistics.
    """
    channel = photon_loss_channel(d, gamma)
    t = np.zeros((d, d))
    for op in channel.operators:
        t += np.abs(op) ** 2
    return t
