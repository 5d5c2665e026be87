"""Closed-form bounds and the non-signaling certificates for EPR-resource PBSP."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional

import numpy as np
from scipy.special import entr

from pbsp_sim.common.config import Config
from pbsp_sim.common.errors import DomainError, LayoutError
from pbsp_sim.linalg import (
    DensityOperator,
    StateVector,
    apply_local,
    check_budget,
    fidelity,
    trace_distance,
)
from pbsp_sim.pbsp import (
    abort_probability,
    det_povm,
    port_state,
    prob_povm,
    run_deterministic,
    success_probability_formula,
)
from pbsp_sim.states import ResourceSpec, resource_state


@dataclass(frozen=True)
class BoundVerdict:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, tol: Optional[float] = None) -> "BoundVerdict":
        """Verdict on lhs <= rhs within an absolute tolerance."""
        tol = Config.tol("bound") if tol is None else tol
        return cls(name, float(lhs), float(rhs), bool(lhs <= rhs + tol), float(rhs - lhs))

    @classmethod
    def compare_log2(cls, name: str, lhs: float, rhs: float) -> "BoundVerdict":
        """Dimension comparison of log2 values with a relative tolerance."""
        tol = Config.tol("dimension_rel") * max(1.0, abs(rhs))
        return cls(name, float(lhs), float(rhs), bool(lhs <= rhs + tol), float(rhs - lhs))


# ─── Entropy and QRAC bounds ────────────────────────────────────────────────

def binary_entropy(p: float) -> float:
    """h(p) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_entropy needs p in [0, 1], got {p!r}")
    return float((entr(p) + entr(1.0 - p)) / math.log(2))


def nayak_min_qubits(n: int, p: float) -> float:
    """n (1 - h(p)): qubits any n-bit random access code with success p needs."""
    return n * (1.0 - binary_entropy(p))


def uphp_lower_bound_log2(d: int, epsilon: float) -> float:
    """log2 of the smallest memory dimension of an epsilon-UPHP: (d/2)(1 - h(2 epsilon))."""
    if not 0.0 <= epsilon < 0.5:
        raise DomainError(f"UPHP lower bound needs epsilon in [0, 1/2), got {epsilon!r}")
    return (d / 2) * (1.0 - binary_entropy(2 * epsilon))


def uphp_lower_bound(d: int, epsilon: float) -> float:
    return 2.0 ** uphp_lower_bound_log2(d, epsilon)


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")


def uphp_upper_bound_log2(d: int, epsilon: float) -> float:
    """log2 (1/epsilon)^(4 d ln d), the memory of the PBSP-based processor."""
    _check_epsilon(epsilon)
    return 4 * d * math.log(d) * math.log2(1 / epsilon)


def upqp_upper_bound_log2(d: int, epsilon: float) -> float:
    """log2 (1/epsilon)^((d^2 - 1)/2), the fully quantum processor reference."""
    _check_epsilon(epsilon)
    return (d * d - 1) / 2 * math.log2(1 / epsilon)


# ─── Fidelity bounds ────────────────────────────────────────────────────────

def pbsp_epr_bound(d: int, N: int) -> float:
    """Best success probability (and fidelity) of PBSP on N EPR pairs."""
    return success_probability_formula(d, N)


def pbsp_fidelity_bound_check(d: int, N: int, fidelity_achieved: float) -> BoundVerdict:
    """1 - h(sqrt(1 - F)) <= 4 N log2(d) / d for independent resource states."""
    if not 0.0 <= fidelity_achieved <= 1.0:
        raise DomainError(f"Fidelity {fidelity_achieved!r} outside [0, 1]")
    lhs = 1.0 - binary_entropy(math.sqrt(1.0 - fidelity_achieved))
    rhs = 4 * N * math.log2(d) / d
    return BoundVerdict.compare("pbsp-fidelity-bound", lhs, rhs)


def avg_from_entanglement_fidelity(F: float, d: int) -> float:
    if not 0.0 <= F <= 1.0:
        raise DomainError(f"Entanglement fidelity {F!r} outside [0, 1]")
    return (F * d + 1) / (d + 1)


def fuchs_van_de_graaf(rho: DensityOperator, sigma: DensityOperator) -> tuple[BoundVerdict, BoundVerdict]:
    """1 - sqrt(F) <= T and T <= sqrt(1 - F)."""
    F = fidelity(rho, sigma)
    T = trace_distance(rho, sigma)
    tol = Config.tol("fvdg")
    lower = BoundVerdict.compare("fvdg-lower", 1.0 - math.sqrt(F), T, tol)
    upper = BoundVerdict.compare("fvdg-upper", T, math.sqrt(max(1.0 - F, 0.0)), tol)
    return lower, upper


# ─── Non-signaling certificates ─────────────────────────────────────────────

@dataclass(frozen=True)
class ProbCertificate:
    d: int
    N: int
    p_t1: float
    p_t2: float
    abort_term: float
    protocol_success: float
    verdict: bool


@dataclass(frozen=True)
class FidCertificate:
    d: int
    N: int
    residual_lhs: float
    residual_sum: float
    failure_bound: float
    marginal_residual: float
    verdict: bool


def _prepare(psi: StateVector, d: int, N: int, budget: Optional[int]) -> tuple[ResourceSpec, StateVector]:
    if psi.dim != d:
        raise LayoutError(f"Input has dimension {psi.dim}, expected d={d}")
    spec = ResourceSpec(d, N)
    check_budget(spec.total_dim, budget, what="certificate")
    return spec, resource_state(spec, budget)


def bob_detection_operator(psi: StateVector, N: int) -> np.ndarray:
    """M_top = I - (I - |psi><psi|)^(x)N on Bob's ports: psi seen in some port."""
    d = psi.dim
    orth = np.eye(d) - np.outer(psi.amplitudes, psi.amplitudes.conj())
    return np.eye(d ** N) - reduce(np.kron, [orth] * N)


def nonsignaling_prob_certificate(psi: StateVector, d: int, N: int,
                                  budget: Optional[int] = None) -> ProbCertificate:
    """Bob's chance to see psi in some port, before (t1) and after (t2) Alice measures.

    Without communication the two agree, so the protocol's success probability
    cannot exceed p_t1 = 1 - (1 - 1/d)^N.
    """
    spec, resource = _prepare(psi, d, N, budget)
    detect = apply_local(bob_detection_operator(psi, N), resource, labels=spec.bob_labels)
    p_t1 = float(np.real(np.vdot(resource.amplitudes, detect)))

    povm = prob_povm(psi, N, budget)
    terms = {}
    for label, element in zip(povm.labels, povm.elements):
        terms[label] = float(np.real(np.vdot(apply_local(element, resource), detect)))
    p_t2 = sum(terms.values())
    success = sum(port_state(resource, povm.element(x), f"B{x}")[0] for x in range(1, N + 1))

    tol = Config.tol("agreement")
    ok = (
        abs(p_t1 - p_t2) <= tol
        and p_t2 >= success - tol
        and abs(p_t2 - terms[0] - success) <= tol
    )
    return ProbCertificate(d, N, p_t1, p_t2, terms[0], success, ok)


def nonsignaling_fid_certificate(psi: StateVector, d: int, N: int,
                                 budget: Optional[int] = None) -> FidCertificate:
    """1 - F of the deterministic protocol computed directly and as the port-error sum.

    Also checks that Alice's measurement leaves every port marginal at I/d, and
    that 1 - F meets the failure probability (1 - 1/d)^N with equality.
    """
    spec, resource = _prepare(psi, d, N, budget)
    direct = 1.0 - run_deterministic(psi, spec, budget, resource=resource).worst_case_fidelity_estimate

    povm = det_povm(psi, N, budget)
    orth = np.eye(d) - np.outer(psi.amplitudes, psi.amplitudes.conj())
    via_sum = 0.0
    marginal = 0.0
    for y in range(1, N + 1):
        port = f"B{y}"
        total = np.zeros((d, d), dtype=complex)
        for x, element in zip(povm.labels, povm.elements):
            _, state = port_state(resource, element, port)
            total += state.matrix
            if x == y:
                via_sum += float(np.real(np.trace(orth @ state.matrix)))
        marginal = max(marginal, float(np.max(np.abs(total - np.eye(d) / d))))

    failure = abort_probability(d, N)
    tol = Config.tol("agreement")
    ok = abs(direct - via_sum) <= tol and abs(direct - failure) <= tol and marginal <= tol
    return FidCertificate(d, N, direct, via_sum, failure, marginal, ok)
