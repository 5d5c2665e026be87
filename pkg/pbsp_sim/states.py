"""State and unitary constructors: EPR resources, Haar samples, program states, Boolean unitaries."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from pbsp_sim.common.config import Config
from pbsp_sim.common.errors import DomainError
from pbsp_sim.linalg import DensityOperator, RegisterLayout, StateVector, check_budget

RESOURCE_KIND = "maximally-entangled-product"


# ─── Seeded randomness ──────────────────────────────────────────────────────

class SeededRng:
    """Counter-based (Philox) random stream, reproducible from its seed.

    Child streams are keyed by the root seed plus the full path of derivation
    keys, so a parallel task's draws depend only on (seed, task key).
    """

    def __init__(self, seed: int, keys: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        if self.seed < 0 or any(k < 0 for k in self.keys):
            raise DomainError(f"Seed and derivation keys must be non-negative, got {self.seed}, {self.keys}")
        sequence = np.random.SeedSequence([self.seed, *self.keys] if self.keys else self.seed)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def derive(self, *keys: int) -> "SeededRng":
        """Independent stream keyed by non-negative integers (e.g. d, N, task index)."""
        return SeededRng(self.seed, self.keys + tuple(keys))

    def complex_normal(self, shape) -> np.ndarray:
        g = self.generator
        return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2)


def make_rng(seed: Optional[int] = None) -> SeededRng:
    return SeededRng(Config.default_seed if seed is None else seed)


# ─── Resource description ───────────────────────────────────────────────────

@dataclass(frozen=True)
class ResourceSpec:
    d: int
    N: int
    kind: str = RESOURCE_KIND

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"Qudit dimension d={self.d} must be at least 2")
        if self.N < 1:
            raise DomainError(f"Number of ports N={self.N} must be at least 1")
        if self.kind != RESOURCE_KIND:
            raise DomainError(f"Unsupported resource kind '{self.kind}'")

    @property
    def alice_labels(self) -> tuple[str, ...]:
        return port_labels("A", self.N)

    @property
    def bob_labels(self) -> tuple[str, ...]:
        return port_labels("B", self.N)

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout.uniform(self.alice_labels + self.bob_labels, self.d)

    @property
    def alice_layout(self) -> RegisterLayout:
        return RegisterLayout.uniform(self.alice_labels, self.d)

    @property
    def bob_layout(self) -> RegisterLayout:
        return RegisterLayout.uniform(self.bob_labels, self.d)

    @property
    def total_dim(self) -> int:
        return self.d ** (2 * self.N)


def port_labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, n + 1))


def data_layout(d: int, label: str = "D") -> RegisterLayout:
    return RegisterLayout.of((label, d))


# ─── Basic states ───────────────────────────────────────────────────────────

def basis_state(d: int, index: int, label: str = "D") -> StateVector:
    if not 0 <= index < d:
        raise DomainError(f"Basis index {index} out of range for d={d}")
    amps = np.zeros(d, dtype=complex)
    amps[index] = 1.0
    return StateVector(data_layout(d, label), amps)


def uniform_superposition(d: int, label: str = "D") -> StateVector:
    return StateVector(data_layout(d, label), np.full(d, 1 / np.sqrt(d), dtype=complex))


def conjugate(psi: StateVector) -> StateVector:
    """Entrywise complex conjugate in the computational basis."""
    return StateVector(psi.layout, psi.amplitudes.conj())


def relabel(psi: StateVector, label: str) -> StateVector:
    return StateVector(data_layout(psi.dim, label), psi.amplitudes)


def max_entangled(d: int, labels: tuple[str, str] = ("A", "B")) -> StateVector:
    """|phi+_d> = (1/sqrt d) sum_x |xx>."""
    if d < 2:
        raise DomainError(f"max_entangled needs d >= 2, got {d}")
    amps = np.eye(d, dtype=complex).ravel() / np.sqrt(d)
    return StateVector(RegisterLayout.uniform(labels, d), amps)


def resource_state(spec: ResourceSpec, budget: Optional[int] = None) -> StateVector:
    """N EPR pairs on (A_i, B_i), stored in A_1..A_N B_1..B_N order.

    With that ordering the state is (1/sqrt(d^N)) sum_i |i>_A |i>_B.
    """
    check_budget(spec.total_dim, budget, what="resource state")
    dim_a = spec.d ** spec.N
    amps = np.eye(dim_a, dtype=complex).ravel() / np.sqrt(dim_a)
    return StateVector(spec.layout, amps)


def program_state(unitary: np.ndarray, n_ports: int, budget: Optional[int] = None) -> StateVector:
    """Choi-type program (I_A (x) U_B) applied to every EPR pair of the resource."""
    unitary = np.asarray(unitary, dtype=complex)
    check_unitary(unitary)
    spec = ResourceSpec(unitary.shape[0], n_ports)
    check_budget(spec.total_dim, budget, what="program state")
    dim_a = spec.d ** spec.N
    u_all = reduce(np.kron, [unitary] * n_ports)
    # amplitude[a, b] = sum_b' U[b, b'] delta(a, b') / sqrt(D) = U[b, a] / sqrt(D)
    amps = u_all.T.ravel() / np.sqrt(dim_a)
    return StateVector(spec.layout, amps)


# ─── Haar sampling ──────────────────────────────────────────────────────────

def haar_unitary(d: int, rng: SeededRng) -> np.ndarray:
    """Haar-distributed unitary: Ginibre matrix, QR, phases of R's diagonal."""
    if d < 1:
        raise DomainError(f"haar_unitary needs d >= 1, got {d}")
    z = rng.complex_normal((d, d))
    q, r = scipy.linalg.qr(z)
    diag = np.diag(r)
    phases = diag / np.abs(diag)
    return q * phases


def haar_state(d: int, rng: SeededRng, label: str = "D") -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    if d < 1:
        raise DomainError(f"haar_state needs d >= 1, got {d}")
    return StateVector.normalized(data_layout(d, label), rng.complex_normal(d))


def random_density(d: int, rng: SeededRng, rank: Optional[int] = None, label: str = "D") -> DensityOperator:
    """Random mixed state G G^dagger / Tr from a d x rank Ginibre matrix."""
    rank = d if rank is None else rank
    g = rng.complex_normal((d, rank))
    rho = g @ g.conj().T
    return DensityOperator(data_layout(d, label), rho / np.real(np.trace(rho)))


def check_unitary(unitary: np.ndarray, tol: float = 1e-10) -> None:
    unitary = np.asarray(unitary)
    if unitary.ndim != 2 or unitary.shape[0] != unitary.shape[1]:
        raise DomainError(f"Unitary must be square, got shape {unitary.shape}")
    dev = np.max(np.abs(unitary.conj().T @ unitary - np.eye(unitary.shape[0])))
    if dev > tol:
        raise DomainError(f"Matrix is not unitary (deviation {dev:.3e})")


def apply_unitary(unitary: np.ndarray, psi: StateVector) -> StateVector:
    check_unitary(unitary)
    return StateVector.normalized(psi.layout, np.asarray(unitary) @ psi.amplitudes)


# ─── Boolean-function unitaries ─────────────────────────────────────────────

def boolean_unitary(f: Sequence[int], k: int) -> np.ndarray:
    """Permutation U_f |x>|y> = |x>|y xor f(x)> on dimension 2^(k+1); index = 2x + y."""
    if k < 1:
        raise DomainError(f"boolean_unitary needs k >= 1, got {k}")
    bits = [int(b) for b in f]
    if len(bits) != 2 ** k:
        raise DomainError(f"Bit-string has length {len(bits)}, expected {2 ** k}")
    if any(b not in (0, 1) for b in bits):
        raise DomainError("Bit-string entries must be 0 or 1")
    dim = 2 ** (k + 1)
    u = np.zeros((dim, dim), dtype=complex)
    for x, fx in enumerate(bits):
        for y in (0, 1):
            u[2 * x + (y ^ fx), 2 * x + y] = 1.0
    return u


def random_bits(length: int, rng: SeededRng) -> tuple[int, ...]:
    return tuple(int(b) for b in rng.generator.integers(0, 2, size=length))
