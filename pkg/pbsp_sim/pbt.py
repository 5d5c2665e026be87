"""Standard port-based teleportation baseline: PGM on EPR ports, closed-form PBT rows."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pbsp_sim.common.config import Config
from pbsp_sim.common.errors import DomainError
from pbsp_sim.linalg import (
    HermitianOperator,
    RegisterLayout,
    apply_local,
    check_budget,
    embed,
    partial_trace_outer,
    pinv_sqrt,
    tensor,
)
from pbsp_sim.pbsp import Povm
from pbsp_sim.states import ResourceSpec, max_entangled, port_labels, resource_state

_log = logging.getLogger(__name__)

INPUT_LABEL = "A0"
REFERENCE_LABEL = "R"


@dataclass(frozen=True)
class PgmSpec:
    d: int
    N: int
    cutoff: float = Config.tol("pinv_cutoff")

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"PGM needs d >= 2, got {self.d}")
        if self.N < 1:
            raise DomainError(f"PGM needs N >= 1, got {self.N}")
        if self.cutoff <= 0:
            raise DomainError(f"pinv cutoff must be positive, got {self.cutoff}")

    @property
    def layout(self) -> RegisterLayout:
        """A_0 (the teleported input) followed by Alice's ports A_1..A_N."""
        return RegisterLayout.uniform((INPUT_LABEL,) + port_labels("A", self.N), self.d)

    def check_budget(self, budget: Optional[int] = None) -> None:
        check_budget(self.d ** (2 * self.N + 2), budget, what="PGM evaluation")


# ─── Measurement ────────────────────────────────────────────────────────────

def _signal(spec: PgmSpec, x: int, budget: Optional[int] = None) -> np.ndarray:
    """sigma_x = phi+_{A0 Ax} (x) I / d^(N-1), unit trace."""
    pair = max_entangled(spec.d, (INPUT_LABEL, f"A{x}"))
    proj = HermitianOperator(pair.layout, np.outer(pair.amplitudes, pair.amplitudes.conj()))
    return embed(proj, spec.layout, budget).matrix / spec.d ** (spec.N - 1)


def pgm_povm(spec: PgmSpec, budget: Optional[int] = None) -> Povm:
    """Pretty good measurement M_x = rho^-1/2 sigma_x rho^-1/2 with rho = sum_x sigma_x.

    The deficit I - sum_x M_x (kernel of rho) is split evenly over the N outcomes.
    """
    spec.check_budget(budget)
    layout = spec.layout
    signals = [_signal(spec, x, budget) for x in range(1, spec.N + 1)]
    rho = HermitianOperator(layout, sum(signals))
    root = pinv_sqrt(rho, spec.cutoff).matrix
    elements = [root @ s @ root for s in signals]
    deficit = np.eye(layout.total_dim) - sum(elements)
    _log.debug("PGM d=%d N=%d: deficit trace %.6g", spec.d, spec.N, float(np.real(np.trace(deficit))))
    elements = [HermitianOperator(layout, (m + m.conj().T) / 2 + deficit / spec.N) for m in elements]
    povm = Povm(layout, tuple(elements), tuple(range(1, spec.N + 1)))
    return povm.check(Config.tol("pgm_completeness"), Config.tol("pgm_completeness"))


# ─── Fidelities ─────────────────────────────────────────────────────────────

def pbt_entanglement_fidelity(spec: PgmSpec, budget: Optional[int] = None,
                              povm: Optional[Povm] = None) -> float:
    """Entanglement fidelity of standard PBT: teleport half of phi+_{R A0}, keep port B_x.

    F = sum_x <phi+| Tr_rest[(M_x (x) I) |Omega><Omega|]_{R B_x} |phi+>.
    """
    spec.check_budget(budget)
    povm = pgm_povm(spec, budget) if povm is None else povm
    d = spec.d
    reference = max_entangled(d, (REFERENCE_LABEL, INPUT_LABEL))
    omega = tensor(reference, resource_state(ResourceSpec(d, spec.N), budget))
    target = max_entangled(d, (REFERENCE_LABEL, "B")).amplitudes

    total = 0.0
    for x, element in zip(povm.labels, povm.elements):
        w = apply_local(element, omega)
        block = partial_trace_outer(w, omega.amplitudes, omega.layout, [REFERENCE_LABEL, f"B{x}"])
        total += float(np.real(np.vdot(target, block @ target)))
    return min(max(total, 0.0), 1.0)


def pbt_average_fidelity(spec: PgmSpec, budget: Optional[int] = None,
                         entanglement: Optional[float] = None) -> float:
    """Average fidelity (F d + 1)/(d + 1); `entanglement` reuses an already computed F."""
    from pbsp_sim.bounds import avg_from_entanglement_fidelity

    if entanglement is None:
        entanglement = pbt_entanglement_fidelity(spec, budget)
    return avg_from_entanglement_fidelity(entanglement, spec.d)


# ─── Closed-form rows ───────────────────────────────────────────────────────

def _check_grid(d: int, N: int) -> None:
    if d < 2 or N < 1:
        raise DomainError(f"Need d >= 2 and N >= 1, got d={d}, N={N}")


def prob_pbt_formula(d: int, N: int) -> float:
    """Success probability N / (N - 1 + d^2) of optimal probabilistic PBT."""
    _check_grid(d, N)
    return N / (N - 1 + d * d)


def fidelity_from_prob(p: float, d: int) -> float:
    """Entanglement fidelity p + (1 - p)/d^2 when failures are replaced by a random port."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Probability {p!r} outside [0, 1]")
    return p + (1.0 - p) / (d * d)


def pbt_det_fidelity_from_prob(d: int, N: int) -> float:
    return fidelity_from_prob(prob_pbt_formula(d, N), d)


def standard_fidelity_lower_bound(d: int, N: int) -> float:
    """1 - (d^2 - 1)/N; vacuous when not positive."""
    _check_grid(d, N)
    return 1.0 - (d * d - 1) / N


def standard_avg_fidelity_lower_bound(d: int, N: int) -> float:
    _check_grid(d, N)
    return 1.0 - d * (d - 1) / N


def standard_diamond_error_bound(d: int, N: int) -> float:
    """4 d^2 / sqrt(N), reported as a reference number only."""
    _check_grid(d, N)
    return 4.0 * d * d / math.sqrt(N)
