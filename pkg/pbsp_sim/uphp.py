"""Universal programmable hybrid processor built on deterministic PBSP, and the QRAC it yields."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from pbsp_sim.bounds import BoundVerdict, uphp_lower_bound_log2, uphp_upper_bound_log2
from pbsp_sim.common.errors import DomainError, LayoutError
from pbsp_sim.linalg import (
    DensityOperator,
    HermitianOperator,
    StateVector,
    apply_local,
    check_budget,
    partial_trace_outer,
    psd_sqrt,
    spectral,
    trace_distance,
)
from pbsp_sim.pbsp import Povm, det_povm, structured_mixture, success_probability_formula
from pbsp_sim.states import (
    ResourceSpec,
    apply_unitary,
    basis_state,
    boolean_unitary,
    check_unitary,
    data_layout,
    program_state,
)

_log = logging.getLogger(__name__)


# ─── Memory planning ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MemoryPlan:
    d: int
    epsilon: float
    N: int
    log2_m: float
    log2_upper_bound: float
    log2_slack_allowance: float
    within_slack: bool

    @property
    def m(self) -> int:
        return self.d ** (2 * self.N)


def plan_memory(d: int, epsilon: float) -> MemoryPlan:
    """Ports N = ceil(d ln(1/epsilon^2)) and memory m = d^(2N) for an epsilon-UPHP.

    Rounding N up costs at most a factor d^2 over (1/epsilon)^(4 d ln d).
    """
    if d < 2:
        raise DomainError(f"plan_memory needs d >= 2, got {d}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"plan_memory needs epsilon in (0, 1), got {epsilon!r}")
    real_n = d * math.log(1.0 / epsilon ** 2)
    # absorb float error so that d ln(1/eps^2) landing on an integer stays there
    N = max(1, math.ceil(real_n - 1e-9))
    log2_m = 2 * N * math.log2(d)
    upper = uphp_upper_bound_log2(d, epsilon)
    slack = 2 * math.log2(d)
    verdict = BoundVerdict.compare_log2("uphp-memory", log2_m, upper + slack)
    return MemoryPlan(d, epsilon, N, log2_m, upper, slack, verdict.satisfied)


# ─── Processor ──────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class HybridProcessor:
    """Program memory (I (x) U)|phi+>^(x)N read out by deterministic PBSP."""

    d: int
    N: int
    unitary: np.ndarray

    def __post_init__(self):
        ResourceSpec(self.d, self.N)
        u = np.array(self.unitary, dtype=complex)
        check_unitary(u)
        if u.shape[0] != self.d:
            raise LayoutError(f"Unitary has dimension {u.shape[0]}, processor has d={self.d}")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @property
    def spec(self) -> ResourceSpec:
        return ResourceSpec(self.d, self.N)

    @property
    def log2_m(self) -> float:
        return 2 * self.N * math.log2(self.d)

    @property
    def m(self) -> int:
        return self.d ** (2 * self.N)

    @property
    def fidelity(self) -> float:
        return success_probability_formula(self.d, self.N)

    def program_state(self, budget: Optional[int] = None) -> StateVector:
        return program_state(self.unitary, self.N, budget)


def _check_data(psi: StateVector, proc: HybridProcessor) -> None:
    if psi.dim != proc.d:
        raise LayoutError(f"Input has dimension {psi.dim}, processor has d={proc.d}")


def apply_processor(psi: StateVector, proc: HybridProcessor) -> DensityOperator:
    """F U|psi><psi|U^dagger + (1 - F) U(I - |psi><psi|)U^dagger/(d - 1), never dense in m."""
    _check_data(psi, proc)
    return structured_mixture(apply_unitary(proc.unitary, psi), proc.fidelity)


def output_fidelity(psi: StateVector, proc: HybridProcessor) -> float:
    out = apply_processor(psi, proc)
    target = apply_unitary(proc.unitary, psi).amplitudes
    return float(np.real(np.vdot(target, out.matrix @ target)))


def trace_error_bound(d: int, N: int) -> float:
    """sqrt(1 - F) = (1 - 1/d)^(N/2); 1 when no ports are used."""
    if N <= 0:
        return 1.0
    return math.sqrt(1.0 - success_probability_formula(d, N))


def trace_error(proc: HybridProcessor) -> float:
    return trace_error_bound(proc.d, proc.N)


def processor_trace_distance(psi: StateVector, proc: HybridProcessor) -> float:
    """Measured 1/2 ||output - U psi psi^dagger U^dagger||_1."""
    out = apply_processor(psi, proc)
    target = apply_unitary(proc.unitary, psi).amplitudes
    return trace_distance(out, DensityOperator(out.layout, np.outer(target, target.conj())))


# ─── Dense channel on arbitrary memory states ───────────────────────────────

def processor_channel(proc: HybridProcessor, psi: StateVector, rho_memory: DensityOperator,
                      budget: Optional[int] = None) -> DensityOperator:
    """sum_j Tr_{A, B_not_j}[(M'_j(psi) (x) I) rho_M] for any memory state rho_M."""
    _check_data(psi, proc)
    spec = proc.spec
    if rho_memory.layout != spec.layout:
        raise LayoutError("Memory state layout does not match the processor memory")
    check_budget(spec.total_dim ** 2, budget, what="memory density operator")
    povm = det_povm(psi, proc.N, budget)
    evals, evecs = spectral(rho_memory)

    out = np.zeros((proc.d, proc.d), dtype=complex)
    for lam, vec in zip(evals, evecs.T):
        if lam <= 0:
            continue
        for j, element in zip(povm.labels, povm.elements):
            w = apply_local(element, vec, layout=spec.layout)
            out += lam * partial_trace_outer(w, vec, spec.layout, [f"B{j}"])
    return DensityOperator(data_layout(proc.d, "B"), out, unit_trace=False)


def processor_kraus_operators(proc: HybridProcessor, psi: StateVector,
                              budget: Optional[int] = None) -> list[np.ndarray]:
    """Kraus operators K_{j,k} = (<k|_{A B_not_j}) (sqrt(M'_j) (x) I_B), each d x m."""
    _check_data(psi, proc)
    spec = proc.spec
    dim = spec.total_dim
    check_budget(dim * dim, budget, what="Kraus operators")
    povm = det_povm(psi, proc.N, budget)
    dims = list(spec.layout.dims)
    identity_b = np.eye(proc.d ** proc.N)

    kraus = []
    for j, element in zip(povm.labels, povm.elements):
        root = psd_sqrt(element)
        full = np.kron(root, identity_b).reshape(dims + [dim])
        keep = spec.layout.index(f"B{j}")
        rest = [i for i in range(len(dims)) if i != keep]
        blocks = full.transpose(rest + [keep, len(dims)]).reshape(-1, proc.d, dim)
        kraus.extend(blocks)
    return kraus


def output_bit_projector(d: int, y: int) -> np.ndarray:
    """I (x) |y><y| on the last qubit of a d = 2^(k+1) register."""
    if y not in (0, 1):
        raise DomainError(f"Output bit must be 0 or 1, got {y}")
    diag = np.zeros(d)
    diag[y::2] = 1.0
    return np.diag(diag)


def qrac_measurement_povm(proc: HybridProcessor, x: int, budget: Optional[int] = None) -> Povm:
    """Memory POVM {M_x^0, M_x^1}: run the processor on |x, 0> and read the output bit."""
    psi = basis_state(proc.d, 2 * x)
    kraus = processor_kraus_operators(proc, psi, budget)
    elements = []
    for y in (0, 1):
        proj = output_bit_projector(proc.d, y)
        mat = sum(k.conj().T @ proj @ k for k in kraus)
        elements.append(HermitianOperator(proc.spec.layout, (mat + mat.conj().T) / 2))
    return Povm(proc.spec.layout, tuple(elements), (0, 1)).check()


# ─── Random access code ─────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class QracInstance:
    """2^k bits f encoded in the program memory of U_f; bit x decoded from |x, 0>."""

    k: int
    f: tuple[int, ...]
    epsilon: float
    processor: HybridProcessor

    @property
    def d(self) -> int:
        return 2 ** (self.k + 1)

    @property
    def N(self) -> int:
        return self.processor.N

    @property
    def log2_m(self) -> float:
        return self.processor.log2_m

    def _check_index(self, x: int) -> None:
        if not 0 <= x < len(self.f):
            raise DomainError(f"Index {x} out of range for {len(self.f)} encoded bits")

    def guess(self, x: int) -> float:
        """Probability of reading f(x) from the structured processor output."""
        self._check_index(x)
        out = apply_processor(basis_state(self.d, 2 * x), self.processor)
        return float(np.real(np.trace(output_bit_projector(self.d, self.f[x]) @ out.matrix)))

    def closed_form_guess(self) -> float:
        F = self.processor.fidelity
        return F + (1 - F) * (self.d / 2 - 1) / (self.d - 1)

    def min_guess(self) -> float:
        return min(self.guess(x) for x in range(len(self.f)))

    def dense_guess(self, x: int, budget: Optional[int] = None) -> float:
        """Guess probability via the pulled-back memory POVM on the program state."""
        self._check_index(x)
        povm = qrac_measurement_povm(self.processor, x, budget)
        program = self.processor.program_state(budget)
        element = povm.element(self.f[x])
        return float(np.real(np.vdot(program.amplitudes, element.matrix @ program.amplitudes)))

    def nayak_check(self) -> BoundVerdict:
        """Built memory in qubits against the random-access-code minimum (d/2)(1 - h(2 eps))."""
        return BoundVerdict.compare_log2("qrac-nayak", uphp_lower_bound_log2(self.d, self.epsilon), self.log2_m)


def build_qrac(f: Sequence[int], k: int, epsilon: float, ports: Optional[int] = None) -> QracInstance:
    """QRAC from the epsilon-UPHP programmed with U_f; `ports` overrides the planned N."""
    if k < 1:
        raise DomainError(f"build_qrac needs k >= 1, got {k}")
    if not 0.0 < epsilon < 0.25:
        raise DomainError(f"build_qrac needs epsilon in (0, 1/4), got {epsilon!r}")
    unitary = boolean_unitary(f, k)
    d = 2 ** (k + 1)
    N = plan_memory(d, epsilon).N if ports is None else ports
    if N < 1:
        raise DomainError(f"ports must be at least 1, got {N}")
    _log.debug("QRAC k=%d eps=%g: d=%d N=%d", k, epsilon, d, N)
    return QracInstance(k, tuple(int(b) for b in f), float(epsilon), HybridProcessor(d, N, unitary))
