"""Port-based state preparation: POVMs, exact channel evaluation, Monte Carlo sampling."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.stats import binom

from pbsp_sim.common.config import Config
from pbsp_sim.common.errors import DomainError, LayoutError
from pbsp_sim.linalg import (
    DensityOperator,
    HermitianOperator,
    RegisterLayout,
    StateVector,
    apply_local,
    check_budget,
    partial_trace_outer,
)
from pbsp_sim.states import (
    ResourceSpec,
    SeededRng,
    data_layout,
    haar_state,
    haar_unitary,
    resource_state,
)

_log = logging.getLogger(__name__)

PROBABILISTIC = "probabilistic"
DETERMINISTIC = "deterministic"
VARIANTS = (PROBABILISTIC, DETERMINISTIC)


# ─── Closed forms ───────────────────────────────────────────────────────────

def success_probability_formula(d: int, N: int) -> float:
    """1 - (1 - 1/d)^N; N = 0 gives 0 and d = 1 gives 1."""
    if d < 1 or N < 0:
        raise DomainError(f"Need d >= 1 and N >= 0, got d={d}, N={N}")
    if N == 0:
        return 0.0
    if d == 1:
        return 1.0
    return 1.0 - (1.0 - 1.0 / d) ** N


def abort_probability(d: int, N: int) -> float:
    return 1.0 - success_probability_formula(d, N)


def port_success_weight(d: int, N: int) -> float:
    """Probability that one given port x is the selected success outcome.

    (1/d) sum_i C(N-1, i)/(i+1) (1/d)^i (1-1/d)^(N-1-i): port x holds the state,
    i of the other ports do too, and x wins the uniform tie-break.
    """
    if d < 1 or N < 0:
        raise DomainError(f"Need d >= 1 and N >= 0, got d={d}, N={N}")
    if N == 0:
        return 0.0
    i = np.arange(N)
    pmf = binom.pmf(i, N - 1, 1.0 / d)
    return float(np.sum(pmf / (i + 1)) / d)


def is_degenerate(d: int, N: int) -> bool:
    return N == 0 or d == 1


# ─── Result types ───────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Povm:
    layout: RegisterLayout
    elements: tuple[HermitianOperator, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if len(self.elements) != len(self.labels):
            raise LayoutError(f"{len(self.elements)} POVM elements but {len(self.labels)} labels")
        for el in self.elements:
            if el.layout != self.layout:
                raise LayoutError("POVM element layout differs from the POVM layout")

    def __len__(self) -> int:
        return len(self.elements)

    def element(self, label: int) -> HermitianOperator:
        try:
            return self.elements[self.labels.index(label)]
        except ValueError:
            raise DomainError(f"POVM has no outcome {label} (labels {list(self.labels)})") from None

    def completeness_error(self) -> float:
        total = sum(el.matrix for el in self.elements)
        return float(np.max(np.abs(total - np.eye(self.layout.total_dim))))

    def min_eigenvalue(self) -> float:
        return float(min(scipy.linalg.eigvalsh(el.matrix)[0] for el in self.elements))

    def check(self, completeness_tol: Optional[float] = None, psd_tol: Optional[float] = None) -> "Povm":
        completeness_tol = Config.tol("completeness") if completeness_tol is None else completeness_tol
        psd_tol = Config.tol("psd") if psd_tol is None else psd_tol
        err = self.completeness_error()
        if err > completeness_tol:
            raise DomainError(f"POVM elements do not sum to identity (deviation {err:.3e})")
        low = self.min_eigenvalue()
        if low < -psd_tol:
            raise DomainError(f"POVM element has negative eigenvalue {low:.3e}")
        return self

    def perturbed(self, index: int, factor: float) -> "Povm":
        """Copy with element `index` scaled by `factor` (checker sanity hook)."""
        elements = list(self.elements)
        elements[index] = elements[index].scaled(factor)
        return Povm(self.layout, tuple(elements), self.labels)


@dataclass(frozen=True, eq=False)
class ProtocolOutcome:
    outcome: int
    probability: float
    bob_state: Optional[DensityOperator] = None

    def __post_init__(self):
        p = float(self.probability)
        if p < -Config.tol("agreement") or p > 1 + Config.tol("agreement"):
            raise DomainError(f"Outcome probability {p!r} outside [0, 1]")
        object.__setattr__(self, "probability", min(max(p, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class ChannelResult:
    outcomes: tuple[ProtocolOutcome, ...]
    success_probability: float
    worst_case_fidelity_estimate: float
    variant: str = PROBABILISTIC
    provenance: str = "dense"
    trials: Optional[int] = None
    counts: Optional[tuple[int, ...]] = field(default=None)

    def outcome(self, label: int) -> ProtocolOutcome:
        for o in self.outcomes:
            if o.outcome == label:
                return o
        raise DomainError(f"No outcome {label} in result")

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([o.probability for o in self.outcomes])

    @property
    def headline(self) -> float:
        """Success probability (probabilistic) or channel fidelity (deterministic)."""
        if self.variant == PROBABILISTIC:
            return self.success_probability
        return self.worst_case_fidelity_estimate

    @property
    def standard_error(self) -> Optional[float]:
        if self.trials is None:
            return None
        p = self.headline
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)

    def target_fidelity(self, psi: StateVector) -> float:
        """Fidelity with psi of Bob's output, conditioned on a kept port."""
        kept = [o for o in self.outcomes if o.bob_state is not None and o.probability > 0]
        weight = sum(o.probability for o in kept)
        if weight <= 0:
            return 0.0
        return sum(o.probability * _overlap(psi, o.bob_state) for o in kept) / weight

    def channel_output(self) -> DensityOperator:
        """sum_x p_x rho_Bx over kept ports, on a single 'B' register."""
        kept = [o for o in self.outcomes if o.bob_state is not None]
        if not kept:
            raise DomainError("Result has no kept-port states")
        d = kept[0].bob_state.layout.total_dim
        mat = sum(o.probability * o.bob_state.matrix for o in kept)
        return DensityOperator(data_layout(d, "B"), mat, unit_trace=False)


def _overlap(psi: StateVector, rho: DensityOperator) -> float:
    if rho.layout.total_dim != psi.dim:
        raise LayoutError(f"Bob state dimension {rho.layout.total_dim} differs from input {psi.dim}")
    amps = psi.amplitudes
    return float(min(max(np.real(np.vdot(amps, rho.matrix @ amps)), 0.0), 1.0))


def _check_input(psi: StateVector, spec: ResourceSpec) -> None:
    if psi.dim != spec.d:
        raise LayoutError(f"Input has dimension {psi.dim}, resource has d={spec.d}")


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise DomainError(f"Unknown protocol variant '{variant}' (expected one of {VARIANTS})")


# ─── POVM construction ──────────────────────────────────────────────────────

def _conjugate_basis(psi: StateVector) -> np.ndarray:
    """Unitary whose first column is psi* (up to phase)."""
    d = psi.dim
    q, _ = scipy.linalg.qr(np.column_stack([psi.amplitudes.conj(), np.eye(d)]))
    return q[:, :d]


def _hit_pattern(d: int, N: int) -> np.ndarray:
    """Boolean (N, d^N) array: port i of product-basis index j lies in the psi* direction."""
    grid = np.indices((d,) * N).reshape(N, -1)
    return grid == 0


def _subset_povm(psi: StateVector, N: int, budget: Optional[int]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Abort and per-port elements, diagonal in the {P*, I-P*} product eigenbasis."""
    if N < 1:
        raise DomainError(f"POVM needs N >= 1, got {N}")
    d = psi.dim
    check_budget(d ** (2 * N), budget, what="POVM element")
    basis = reduce(np.kron, [_conjugate_basis(psi)] * N)
    hits = _hit_pattern(d, N)
    count = hits.sum(axis=0)
    share = np.where(count > 0, 1.0 / np.maximum(count, 1), 0.0)

    def rotate(weights: np.ndarray) -> np.ndarray:
        return (basis * weights) @ basis.conj().T

    abort = rotate((count == 0).astype(float))
    ports = [rotate(hits[x] * share) for x in range(N)]
    return abort, ports


def prob_povm(psi: StateVector, N: int, budget: Optional[int] = None) -> Povm:
    """Outcomes 0..N: 0 when no port holds psi*, x with weight 1/|S| over success sets S."""
    abort, ports = _subset_povm(psi, N, budget)
    layout = ResourceSpec(psi.dim, N).alice_layout
    elements = [HermitianOperator(layout, abort)] + [HermitianOperator(layout, m) for m in ports]
    return Povm(layout, tuple(elements), tuple(range(N + 1))).check()


def det_povm(psi: StateVector, N: int, budget: Optional[int] = None) -> Povm:
    """Outcomes 1..N: M'_x = M_x + M_0 / N."""
    abort, ports = _subset_povm(psi, N, budget)
    layout = ResourceSpec(psi.dim, N).alice_layout
    elements = [HermitianOperator(layout, m + abort / N) for m in ports]
    return Povm(layout, tuple(elements), tuple(range(1, N + 1))).check()


# ─── Dense evaluation ───────────────────────────────────────────────────────

def port_state(resource: StateVector, element: HermitianOperator, port: str) -> tuple[float, DensityOperator]:
    """Probability of `element` on `resource` and the unnormalized state left on `port`.

    The state is Tr_rest[(element (x) I) |resource><resource|] restricted to `port`.
    """
    w = apply_local(element, resource)
    p = float(np.real(np.vdot(resource.amplitudes, w)))
    mat = partial_trace_outer(w, resource.amplitudes, resource.layout, [port])
    return p, DensityOperator(resource.layout.subset([port]), mat, unit_trace=False)


def _dense_run(psi: StateVector, spec: ResourceSpec, povm: Povm, resource: StateVector,
               variant: str) -> ChannelResult:
    _log.debug("dense %s run d=%d N=%d", variant, spec.d, spec.N)
    outcomes = []
    for label, element in zip(povm.labels, povm.elements):
        if label == 0:
            p, _ = port_state(resource, element, spec.bob_labels[0])
            outcomes.append(ProtocolOutcome(0, p, None))
            continue
        p, unnormalized = port_state(resource, element, f"B{label}")
        bob = unnormalized.normalized() if p > Config.tol("agreement") else None
        outcomes.append(ProtocolOutcome(label, p, bob))

    result = ChannelResult(tuple(outcomes), 0.0, 0.0, variant=variant, provenance="dense")
    if variant == PROBABILISTIC:
        success = sum(o.probability for o in outcomes if o.outcome != 0)
    else:
        success = 1.0
    return replace(result, success_probability=success, worst_case_fidelity_estimate=result.target_fidelity(psi))


def run_probabilistic(psi: StateVector, spec: ResourceSpec, budget: Optional[int] = None) -> ChannelResult:
    """Dense probabilistic PBSP: Alice measures prob_povm on the EPR resource."""
    _check_input(psi, spec)
    resource = resource_state(spec, budget)
    return _dense_run(psi, spec, prob_povm(psi, spec.N, budget), resource, PROBABILISTIC)


def run_deterministic(psi: StateVector, spec: ResourceSpec, budget: Optional[int] = None,
                      resource: Optional[StateVector] = None) -> ChannelResult:
    """Dense deterministic PBSP; `resource` replaces the EPR resource (e.g. a program state)."""
    _check_input(psi, spec)
    if resource is None:
        resource = resource_state(spec, budget)
    elif resource.layout != spec.layout:
        raise LayoutError("Resource layout does not match the resource spec")
    return _dense_run(psi, spec, det_povm(psi, spec.N, budget), resource, DETERMINISTIC)


# ─── Structured evaluation ──────────────────────────────────────────────────

def structured_mixture(psi: StateVector, target_weight: float, label: str = "B") -> DensityOperator:
    """target_weight |psi><psi| + (1 - target_weight)(I - |psi><psi|)/(d - 1)."""
    d = psi.dim
    proj = np.outer(psi.amplitudes, psi.amplitudes.conj())
    orth = (np.eye(d) - proj) / (d - 1)
    return DensityOperator(data_layout(d, label), target_weight * proj + (1 - target_weight) * orth)


def structured_run(psi: StateVector, spec: ResourceSpec, variant: str = PROBABILISTIC) -> ChannelResult:
    """Closed-form run using the per-port product structure; no dense arrays.

    Each port holds psi independently with probability 1/d; a success set S has
    probability (1/d)^|S| (1-1/d)^(N-|S|) and the kept port is uniform within S.
    """
    _check_input(psi, spec)
    _check_variant(variant)
    d, N = spec.d, spec.N
    q = port_success_weight(d, N)
    abort = abort_probability(d, N)
    if variant == PROBABILISTIC:
        outcomes = [ProtocolOutcome(0, abort, None)]
        outcomes += [
            ProtocolOutcome(x, q, structured_mixture(psi, 1.0, f"B{x}")) for x in range(1, N + 1)
        ]
        return ChannelResult(tuple(outcomes), N * q, 1.0, variant=variant, provenance="structured")

    fid = N * q
    outcomes = [ProtocolOutcome(x, 1.0 / N, structured_mixture(psi, fid, f"B{x}")) for x in range(1, N + 1)]
    return ChannelResult(tuple(outcomes), 1.0, fid, variant=variant, provenance="structured")


# ─── Monte Carlo ────────────────────────────────────────────────────────────

def draw_outcomes(spec: ResourceSpec, trials: int, rng: SeededRng,
                  variant: str = PROBABILISTIC) -> tuple[np.ndarray, np.ndarray]:
    """Sample (outcome, hit) arrays: per-port Bernoulli(1/d), uniform choice among hits.

    Without a hit the probabilistic variant aborts (outcome 0) and the
    deterministic variant keeps a uniformly random port.
    """
    _check_variant(variant)
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    g = rng.generator
    hits = g.random((trials, spec.N)) < 1.0 / spec.d
    keys = np.where(hits, g.random((trials, spec.N)), -1.0)
    chosen = np.argmax(keys, axis=1) + 1
    any_hit = hits.any(axis=1)
    if variant == PROBABILISTIC:
        fallback = np.zeros(trials, dtype=int)
    else:
        fallback = g.integers(1, spec.N + 1, size=trials)
    return np.where(any_hit, chosen, fallback), any_hit


def _sample_chunk(spec: ResourceSpec, size: int, stream: SeededRng, variant: str) -> tuple[np.ndarray, int]:
    outcomes, any_hit = draw_outcomes(spec, size, stream, variant)
    return np.bincount(outcomes, minlength=spec.N + 1), int(any_hit.sum())


def sample_outcomes(psi: StateVector, spec: ResourceSpec, trials: int, rng: SeededRng,
                    variant: str = PROBABILISTIC, workers: int = 1) -> ChannelResult:
    """Empirical ChannelResult from `trials` Born-rule samples.

    Trials are split into chunks, each with its own stream derived from the root
    seed and chunk index, so counts do not depend on `workers`.
    """
    _check_input(psi, spec)
    _check_variant(variant)
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    chunk = Config.sample_chunk
    sizes = [min(chunk, trials - start) for start in range(0, trials, chunk)]
    streams = [rng.derive(spec.d, spec.N, VARIANTS.index(variant), i) for i in range(len(sizes))]
    jobs = list(zip(sizes, streams))

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _sample_chunk(spec, job[0], job[1], variant), jobs))
    else:
        parts = [_sample_chunk(spec, size, stream, variant) for size, stream in jobs]

    counts = sum(part[0] for part in parts)
    hit_count = sum(part[1] for part in parts)
    _log.debug("sampled %d trials d=%d N=%d: counts %s", trials, spec.d, spec.N, counts.tolist())

    exact = structured_run(psi, spec, variant)
    labels = range(0 if variant == PROBABILISTIC else 1, spec.N + 1)
    outcomes = []
    for x in labels:
        state = exact.outcome(x).bob_state
        outcomes.append(ProtocolOutcome(x, counts[x] / trials, state))
    if variant == PROBABILISTIC:
        success = (trials - counts[0]) / trials
        fidelity = 1.0 if success > 0 else 0.0
    else:
        success = 1.0
        fidelity = hit_count / trials
    return ChannelResult(tuple(outcomes), float(success), float(fidelity), variant=variant,
                         provenance="sampled", trials=trials, counts=tuple(int(c) for c in counts))


# ─── Fidelity estimators ────────────────────────────────────────────────────

Runner = Callable[[StateVector, ResourceSpec], ChannelResult]


def sample_fidelities(runner: Runner, d: int, N: int, samples: int, rng: SeededRng) -> np.ndarray:
    """Output-vs-target fidelity of `runner` on `samples` Haar-random inputs."""
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}")
    spec = ResourceSpec(d, N)
    values = []
    for _ in range(samples):
        psi = haar_state(d, rng)
        values.append(runner(psi, spec).target_fidelity(psi))
    return np.array(values)


def worst_case_fidelity(runner: Runner, d: int, N: int, samples: int, rng: SeededRng) -> float:
    """Minimum over Haar-sampled inputs; an estimate of the infimum, not a certificate."""
    return float(np.min(sample_fidelities(runner, d, N, samples, rng)))


def average_fidelity(runner: Runner, d: int, N: int, samples: int, rng: SeededRng) -> float:
    return float(np.mean(sample_fidelities(runner, d, N, samples, rng)))


def randomized_runner(runner: Runner, rng: SeededRng) -> Runner:
    """Haar-twirled protocol psi -> U^dagger Phi(U psi) U with a fresh U per call.

    Its worst-case fidelity equals the average fidelity of `runner`.
    """

    def twirled(psi: StateVector, spec: ResourceSpec) -> ChannelResult:
        u = haar_unitary(spec.d, rng)
        rotated = StateVector(psi.layout, u @ psi.amplitudes)
        result = runner(rotated, spec)
        outcomes = []
        for o in result.outcomes:
            state = o.bob_state
            if state is not None:
                state = DensityOperator(state.layout, u.conj().T @ state.matrix @ u, unit_trace=state.unit_trace)
            outcomes.append(ProtocolOutcome(o.outcome, o.probability, state))
        return replace(result, outcomes=tuple(outcomes))

    return twirled
