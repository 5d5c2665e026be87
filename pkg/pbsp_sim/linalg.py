"""Dense linear algebra over labeled multi-register Hilbert spaces."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from pbsp_sim.common.config import Config
from pbsp_sim.common.errors import CapacityError, DomainError, LayoutError

_log = logging.getLogger(__name__)


# ─── Layouts ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RegisterLayout:
    """Ordered (label, dim) pairs; the tensor factor order of every array."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(label), int(dim)) for label, dim in self.registers)
        object.__setattr__(self, "registers", regs)
        labels = [label for label, _ in regs]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"Duplicate register labels in {labels}")
        for label, dim in regs:
            if dim < 1:
                raise LayoutError(f"Register {label} has non-positive dimension {dim}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(pairs))

    @classmethod
    def uniform(cls, labels: Iterable[str], dim: int) -> "RegisterLayout":
        return cls(tuple((label, dim) for label in labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.registers)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=object)) if self.registers else 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"Unknown register label '{label}' (have {list(self.labels)})") from None

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.registers + other.registers)

    def subset(self, keep: Iterable[str]) -> "RegisterLayout":
        """Sub-layout of `keep`, in this layout's order."""
        keep = set(keep)
        for label in keep:
            self.index(label)
        return RegisterLayout(tuple(r for r in self.registers if r[0] in keep))

    def __len__(self) -> int:
        return len(self.registers)


def check_budget(entries: int, budget: Optional[int] = None, what: str = "array") -> None:
    """Raise CapacityError when a dense array of `entries` complex numbers is over budget."""
    budget = Config.dense_budget if budget is None else budget
    if entries > budget:
        raise CapacityError(f"Dense {what} needs {entries} entries, over the budget of {budget}")


def _require_same(a: RegisterLayout, b: RegisterLayout) -> None:
    if a != b:
        raise LayoutError(f"Layout mismatch: {list(a.labels)} vs {list(b.labels)}")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


# ─── States and operators ───────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape[0] != self.layout.total_dim:
            raise LayoutError(
                f"State has {amps.shape[0]} amplitudes, layout needs {self.layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > Config.tol("norm"):
            raise DomainError(f"State vector norm {norm!r} is not 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, layout: RegisterLayout, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise DomainError("Cannot normalize the zero vector")
        return cls(layout, amps / norm)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        dim = self.layout.total_dim
        if mat.shape != (dim, dim):
            raise LayoutError(f"Operator shape {mat.shape} does not match layout dimension {dim}")
        dev = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
        if dev > Config.tol("hermitian") * max(1.0, np.max(np.abs(mat))):
            raise DomainError(f"Operator is not Hermitian (deviation {dev:.3e})")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, layout: RegisterLayout) -> "HermitianOperator":
        return cls(layout, np.eye(layout.total_dim))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same(self.layout, other.layout)
        return HermitianOperator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same(self.layout, other.layout)
        return HermitianOperator(self.layout, self.matrix - other.matrix)

    def scaled(self, factor: float) -> "HermitianOperator":
        return HermitianOperator(self.layout, self.matrix * float(factor))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive semidefinite operator; unit trace unless built with unit_trace=False."""

    layout: RegisterLayout
    matrix: np.ndarray
    unit_trace: bool = field(default=True)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        dim = self.layout.total_dim
        if mat.shape != (dim, dim):
            raise LayoutError(f"Density matrix shape {mat.shape} does not match layout dimension {dim}")
        dev = np.max(np.abs(mat - mat.conj().T))
        if dev > Config.tol("hermitian"):
            raise DomainError(f"Density matrix is not Hermitian (deviation {dev:.3e})")
        mat = (mat + mat.conj().T) / 2
        evals = scipy.linalg.eigvalsh(mat)
        lam_max = max(float(np.max(np.abs(evals))), 1e-300)
        if evals[0] < -Config.tol("psd") * lam_max:
            raise DomainError(f"Density matrix has negative eigenvalue {evals[0]:.3e}")
        if self.unit_trace:
            tr = np.real(np.trace(mat))
            if abs(tr - 1.0) > Config.tol("trace"):
                raise DomainError(f"Density matrix trace {tr!r} is not 1")
        object.__setattr__(self, "matrix", _frozen(mat))

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        return cls(state.layout, np.outer(state.amplitudes, state.amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, layout: RegisterLayout) -> "DensityOperator":
        return cls(layout, np.eye(layout.total_dim) / layout.total_dim)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise DomainError("Cannot normalize an operator with zero trace")
        return DensityOperator(self.layout, self.matrix / tr)


Operand = Union[StateVector, HermitianOperator, DensityOperator]


def projector(state: StateVector) -> DensityOperator:
    return DensityOperator.from_state(state)


# ─── Tensor products and partial traces ─────────────────────────────────────

def tensor(a: Operand, b: Operand) -> Operand:
    """Kronecker product; the result layout is a's registers followed by b's."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(layout, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, StateVector) or isinstance(b, StateVector):
        raise LayoutError("Cannot tensor a state vector with an operator")
    mat = np.kron(a.matrix, b.matrix)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(layout, mat, unit_trace=a.unit_trace and b.unit_trace)
    return HermitianOperator(layout, mat)


def _split_axes(layout: RegisterLayout, keep: Iterable[str]) -> tuple[list[int], list[int]]:
    keep = list(keep)
    if not keep:
        raise LayoutError("Partial trace needs at least one register to keep")
    if len(set(keep)) != len(keep):
        raise LayoutError(f"Duplicate registers in {keep}")
    keep_idx = sorted(layout.index(label) for label in keep)
    rest_idx = [i for i in range(len(layout)) if i not in keep_idx]
    return keep_idx, rest_idx


def partial_trace_outer(ket: np.ndarray, bra: np.ndarray, layout: RegisterLayout,
                        keep: Iterable[str]) -> np.ndarray:
    """Tr_rest |ket><bra| as a matrix on the kept registers (layout order)."""
    keep_idx, rest_idx = _split_axes(layout, keep)
    dims = layout.dims
    d_keep = int(np.prod([dims[i] for i in keep_idx]))
    order = keep_idx + rest_idx
    k = np.asarray(ket).reshape(dims).transpose(order).reshape(d_keep, -1)
    b = np.asarray(bra).reshape(dims).transpose(order).reshape(d_keep, -1)
    return k @ b.conj().T


def partial_trace(rho: Union[DensityOperator, StateVector], keep: Iterable[str]) -> DensityOperator:
    """Reduced state on `keep`; accepts a pure state without forming its projector."""
    keep = list(keep)
    layout = rho.layout
    sub = layout.subset(keep)
    if isinstance(rho, StateVector):
        mat = partial_trace_outer(rho.amplitudes, rho.amplitudes, layout, keep)
        return DensityOperator(sub, mat)

    keep_idx, rest_idx = _split_axes(layout, keep)
    dims = layout.dims
    n = len(dims)
    d_keep = int(np.prod([dims[i] for i in keep_idx]))
    d_rest = int(np.prod([dims[i] for i in rest_idx])) if rest_idx else 1
    order = keep_idx + rest_idx
    t = np.asarray(rho.matrix).reshape(dims + dims)
    t = t.transpose(order + [n + i for i in order])
    t = t.reshape(d_keep, d_rest, d_keep, d_rest)
    mat = np.trace(t, axis1=1, axis2=3)
    return DensityOperator(sub, mat, unit_trace=rho.unit_trace)


def embed(op: HermitianOperator, layout: RegisterLayout, budget: Optional[int] = None) -> HermitianOperator:
    """Extend `op` by the identity on the other registers of `layout`, in layout order."""
    for label, dim in op.layout.registers:
        if layout.registers[layout.index(label)][1] != dim:
            raise LayoutError(f"Register {label} has different dimensions")
    rest = [r for r in layout.registers if r[0] not in op.layout.labels]
    rest_layout = RegisterLayout(tuple(rest))
    full = op.layout.concat(rest_layout)
    check_budget(full.total_dim ** 2, budget, what="embedded operator")
    mat = np.kron(op.matrix, np.eye(rest_layout.total_dim))
    # Reorder tensor axes from `full` order into `layout` order.
    perm = [full.index(label) for label in layout.labels]
    n = len(layout)
    t = mat.reshape(full.dims + full.dims).transpose(perm + [n + p for p in perm])
    return HermitianOperator(layout, t.reshape(layout.total_dim, layout.total_dim))


def apply_local(op: Union[HermitianOperator, np.ndarray], state: Union[StateVector, np.ndarray],
                labels: Optional[Sequence[str]] = None,
                layout: Optional[RegisterLayout] = None) -> np.ndarray:
    """Apply an operator on a subset of registers to an amplitude vector.

    Returns the raw (generally unnormalized) amplitudes in the state's layout.
    """
    if isinstance(state, StateVector):
        layout = state.layout
        amps = state.amplitudes
    else:
        if layout is None:
            raise LayoutError("Raw amplitudes need an explicit layout")
        amps = np.asarray(state)
    if isinstance(op, HermitianOperator):
        labels = op.layout.labels
        mat = op.matrix
    else:
        if labels is None:
            raise LayoutError("Raw operator needs explicit register labels")
        mat = np.asarray(op)

    idx = [layout.index(label) for label in labels]
    rest = [i for i in range(len(layout)) if i not in idx]
    dims = layout.dims
    d_op = int(np.prod([dims[i] for i in idx]))
    if mat.shape != (d_op, d_op):
        raise LayoutError(f"Operator shape {mat.shape} does not match registers {list(labels)}")
    order = idx + rest
    t = amps.reshape(dims).transpose(order).reshape(d_op, -1)
    t = (mat @ t).reshape([dims[i] for i in order])
    inverse = np.argsort(order)
    return t.transpose(inverse).reshape(-1)


def expectation(state: StateVector, op: HermitianOperator) -> float:
    """<state| op |state> for an operator on a subset of the state's registers."""
    return float(np.real(np.vdot(state.amplitudes, apply_local(op, state))))


# ─── Spectral routines ──────────────────────────────────────────────────────

def spectral(op: Union[HermitianOperator, DensityOperator]) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    mat = np.asarray(op.matrix)
    return scipy.linalg.eigh((mat + mat.conj().T) / 2)


def _clamped_spectrum(op) -> tuple[np.ndarray, np.ndarray]:
    """Spectrum with every eigenvalue at or below psd * lambda_max set to zero."""
    evals, evecs = spectral(op)
    lam_max = max(float(np.max(np.abs(evals))), 1e-300)
    floor = Config.tol("psd") * lam_max
    if evals[0] < -floor:
        raise DomainError(f"Operator is not positive semidefinite (eigenvalue {evals[0]:.3e})")
    return np.where(evals > floor, evals, 0.0), evecs


def psd_sqrt(op: Union[HermitianOperator, DensityOperator]) -> np.ndarray:
    """Square root on the numerical support; rounding noise in the kernel stays zero."""
    evals, evecs = _clamped_spectrum(op)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def pinv_sqrt(op: HermitianOperator, cutoff: Optional[float] = None) -> HermitianOperator:
    """Moore-Penrose inverse square root; zero on the kernel.

    The support is the span of eigenvectors with eigenvalue > cutoff * lambda_max.
    """
    cutoff = Config.tol("pinv_cutoff") if cutoff is None else cutoff
    evals, evecs = spectral(op)
    if evals[0] < -Config.tol("pinv_negative"):
        raise DomainError(f"pinv_sqrt of an operator with eigenvalue {evals[0]:.3e}")
    lam_max = float(np.max(evals)) if evals.size else 0.0
    inv = np.zeros_like(evals)
    if lam_max > 0:
        support = evals > cutoff * lam_max
        inv[support] = 1.0 / np.sqrt(evals[support])
    _log.debug("pinv_sqrt: rank %d of %d", int(np.count_nonzero(inv)), evals.size)
    return HermitianOperator(op.layout, (evecs * inv) @ evecs.conj().T)


# ─── Distances ──────────────────────────────────────────────────────────────

def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity ||sqrt(rho) sqrt(sigma)||_1^2, clipped to [0, 1]."""
    _require_same(rho.layout, sigma.layout)
    s = scipy.linalg.svdvals(psd_sqrt(rho) @ psd_sqrt(sigma))
    return float(min(max(np.sum(s) ** 2, 0.0), 1.0))


def pure_fidelity(psi: StateVector, sigma: DensityOperator) -> float:
    """<psi| sigma |psi>, the fidelity against a pure state."""
    _require_same(psi.layout, sigma.layout)
    return float(np.real(np.vdot(psi.amplitudes, sigma.matrix @ psi.amplitudes)))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    _require_same(rho.layout, sigma.layout)
    diff = HermitianOperator(rho.layout, rho.matrix - sigma.matrix)
    evals, _ = spectral(diff)
    return float(min(0.5 * np.sum(np.abs(evals)), 1.0))
