"""Verification suites behind `pbsp-sim verify`; every row carries a pass/fail verdict."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from pbsp_sim import bounds, pbsp, pbt, uphp
from pbsp_sim.common.config import Config
from pbsp_sim.linalg import DensityOperator
from pbsp_sim.runconfig import RunConfig
from pbsp_sim.states import (
    ResourceSpec,
    SeededRng,
    basis_state,
    haar_state,
    haar_unitary,
    random_bits,
    random_density,
    uniform_superposition,
)
from pbsp_sim.tables import Report, make_row

_log = logging.getLogger(__name__)

# Stream keys of the individual suites under the root seed
_SUITE = {
    "povm": 1, "formula": 2, "structured": 3, "nonsignaling": 4,
    "fvdg": 5, "qrac": 6, "uphp": 7, "pbt": 8,
}

FVDG_DIMS = (2, 3, 4)
UPHP_POINTS = ((2, 3), (3, 2), (4, 2))
PLAN_EPSILONS = (0.5, 0.2, 0.1, 0.01)
PLAN_DIMS = (2, 3, 4)
QRAC_KS = (1, 2)
QRAC_FUNCTIONS = 50
NONSIGNALING_HAAR = 10


def _check(task: str, reference, value, ok: bool, d=None, N=None, epsilon=None,
           provenance: str = "dense") -> dict:
    return make_row(f"verify:{task}", d, N, epsilon, formula=reference, dense=value,
                    verdict=bool(ok), provenance=provenance)


def _dense_points(config: RunConfig) -> list[tuple[int, int]]:
    """(d, N) grid points whose resource fits the dense budget."""
    points = []
    for d in config.d_list:
        for N in config.n_list:
            if config.dense_ok(d ** (2 * N)):
                points.append((d, N))
            else:
                _log.info("verify: skipping dense checks at d=%d N=%d (over budget)", d, N)
    return points


def _stream(config: RunConfig, suite: str, *keys: int) -> SeededRng:
    return SeededRng(config.seed).derive(_SUITE[suite], *keys)


# ─── POVM completeness ──────────────────────────────────────────────────────

def povm_suite(config: RunConfig) -> list[dict]:
    rows = []
    for d, N in _dense_points(config):
        psi = haar_state(d, _stream(config, "povm", d, N))
        for kind, builder in (("prob", pbsp.prob_povm), ("det", pbsp.det_povm)):
            povm = builder(psi, N, config.dense_budget)
            if config.perturb is not None and kind == "prob":
                povm = povm.perturbed(len(povm) - 1, config.perturb)
            err = povm.completeness_error()
            low = povm.min_eigenvalue()
            ok = err <= Config.tol("completeness") and low >= -Config.tol("psd")
            rows.append(_check(f"povm-{kind}-completeness", 0.0, err, ok, d, N))
    return rows


# ─── Dense runs against closed forms ────────────────────────────────────────

def formula_suite(config: RunConfig) -> list[dict]:
    tol = Config.tol("agreement")
    rows = []
    for d, N in _dense_points(config):
        spec = ResourceSpec(d, N)
        rng = _stream(config, "formula", d, N)
        formula = pbsp.success_probability_formula(d, N)
        prob_dev, posterior, det_dev, symmetry, fids = 0.0, 1.0, 0.0, 0.0, []
        for _ in range(config.haar_samples):
            psi = haar_state(d, rng)
            prob = pbsp.run_probabilistic(psi, spec, config.dense_budget)
            prob_dev = max(prob_dev, abs(prob.success_probability - formula))
            posterior = min(posterior, prob.worst_case_fidelity_estimate)
            det = pbsp.run_deterministic(psi, spec, config.dense_budget)
            det_dev = max(det_dev, abs(det.worst_case_fidelity_estimate - formula))
            symmetry = max(symmetry, float(np.max(np.abs(det.probabilities - 1.0 / N))))
            fids.append(det.worst_case_fidelity_estimate)
        spread = float(np.max(fids) - np.min(fids))
        rows += [
            _check("prob-success", formula, formula + prob_dev, prob_dev <= tol, d, N),
            _check("prob-posterior-fidelity", 1.0, posterior, posterior >= 1 - tol, d, N),
            _check("det-fidelity", formula, formula + det_dev, det_dev <= tol, d, N),
            _check("det-outcome-symmetry", 0.0, symmetry, symmetry <= tol, d, N),
            _check("det-input-independence", 0.0, spread, spread <= tol, d, N),
        ]
    return rows


def _result_gap(a: pbsp.ChannelResult, b: pbsp.ChannelResult) -> float:
    gap = max(abs(a.success_probability - b.success_probability),
              abs(a.worst_case_fidelity_estimate - b.worst_case_fidelity_estimate))
    for oa, ob in zip(a.outcomes, b.outcomes):
        gap = max(gap, abs(oa.probability - ob.probability))
        if oa.bob_state is not None and ob.bob_state is not None:
            gap = max(gap, float(np.max(np.abs(oa.bob_state.matrix - ob.bob_state.matrix))))
        elif (oa.bob_state is None) != (ob.bob_state is None):
            return float("inf")
    return gap


def structured_suite(config: RunConfig) -> list[dict]:
    tol = Config.tol("agreement")
    rows = []
    for d, N in _dense_points(config):
        psi = haar_state(d, _stream(config, "structured", d, N))
        spec = ResourceSpec(d, N)
        gap = max(
            _result_gap(pbsp.run_probabilistic(psi, spec, config.dense_budget),
                        pbsp.structured_run(psi, spec, pbsp.PROBABILISTIC)),
            _result_gap(pbsp.run_deterministic(psi, spec, config.dense_budget),
                        pbsp.structured_run(psi, spec, pbsp.DETERMINISTIC)),
        )
        rows.append(_check("dense-vs-structured", 0.0, gap, gap <= tol, d, N))

    psi = haar_state(2, _stream(config, "structured", 2, 50))
    large = pbsp.structured_run(psi, ResourceSpec(2, 50)).success_probability
    rows.append(_check("structured-large-N", 1 - 2.0 ** -50, large,
                       abs(large - (1 - 2.0 ** -50)) <= 1e-12, 2, 50, provenance="formula"))
    return rows


# ─── Non-signaling certificates ─────────────────────────────────────────────

def _adversarial_inputs(d: int, rng: SeededRng) -> list:
    inputs = [basis_state(d, 0), basis_state(d, d - 1), uniform_superposition(d)]
    return inputs + [haar_state(d, rng) for _ in range(NONSIGNALING_HAAR)]


def nonsignaling_suite(config: RunConfig) -> list[dict]:
    rows = []
    for d, N in _dense_points(config):
        inputs = _adversarial_inputs(d, _stream(config, "nonsignaling", d, N))
        prob_gap, prob_ok, fid_gap, fid_ok = 0.0, True, 0.0, True
        for psi in inputs:
            cert = bounds.nonsignaling_prob_certificate(psi, d, N, config.dense_budget)
            prob_gap = max(prob_gap, abs(cert.p_t1 - cert.p_t2))
            prob_ok = prob_ok and cert.verdict
            fid = bounds.nonsignaling_fid_certificate(psi, d, N, config.dense_budget)
            fid_gap = max(fid_gap, abs(fid.residual_lhs - fid.residual_sum), fid.marginal_residual)
            fid_ok = fid_ok and fid.verdict
        rows.append(_check("nonsignaling-prob", 0.0, prob_gap, prob_ok, d, N))
        rows.append(_check("nonsignaling-fid", 0.0, fid_gap, fid_ok, d, N))
    return rows


# ─── Fuchs-van de Graaf ─────────────────────────────────────────────────────

def fvdg_suite(config: RunConfig, pairs: int = Config.default_fvdg_pairs) -> list[dict]:
    rows = []
    for j, d in enumerate(FVDG_DIMS):
        rng = _stream(config, "fvdg", d)
        count = pairs // len(FVDG_DIMS) + (1 if j < pairs % len(FVDG_DIMS) else 0)
        slack, ok = float("inf"), True
        for i in range(count):
            rank = 1 + i % d
            rho = random_density(d, rng, rank)
            sigma = random_density(d, rng, 1 + (i // d) % d)
            for verdict in bounds.fuchs_van_de_graaf(rho, sigma):
                slack = min(slack, verdict.slack)
                ok = ok and verdict.satisfied
        rows.append(_check("fuchs-van-de-graaf", 0.0, slack, ok, d))
    return rows


# ─── UPHP and QRAC ──────────────────────────────────────────────────────────

def uphp_suite(config: RunConfig) -> list[dict]:
    tol = Config.tol("agreement")
    rows = []
    for d, N in UPHP_POINTS:
        rng = _stream(config, "uphp", d, N)
        formula = pbsp.success_probability_formula(d, N)
        fid_dev, td_ok, worst_td = 0.0, True, 0.0
        for _ in range(config.haar_samples):
            proc = uphp.HybridProcessor(d, N, haar_unitary(d, rng))
            psi = haar_state(d, rng)
            fid_dev = max(fid_dev, abs(uphp.output_fidelity(psi, proc) - formula))
            td = uphp.processor_trace_distance(psi, proc)
            worst_td = max(worst_td, td)
            td_ok = td_ok and td <= uphp.trace_error(proc) + tol
        rows.append(_check("uphp-fidelity", formula, formula + fid_dev, fid_dev <= tol, d, N,
                           provenance="formula"))
        rows.append(_check("uphp-trace-error", uphp.trace_error_bound(d, N), worst_td, td_ok, d, N,
                           provenance="formula"))

    d, N = 2, 2
    if config.dense_ok(d ** (2 * N)):
        rng = _stream(config, "uphp", 0)
        proc = uphp.HybridProcessor(d, N, haar_unitary(d, rng))
        psi = haar_state(d, rng)
        dense = pbsp.run_deterministic(psi, proc.spec, config.dense_budget,
                                       resource=proc.program_state(config.dense_budget)).channel_output()
        gap = float(np.max(np.abs(dense.matrix - uphp.apply_processor(psi, proc).matrix)))
        rows.append(_check("uphp-dense-vs-structured", 0.0, gap, gap <= tol, d, N))

    for d in PLAN_DIMS:
        for eps in PLAN_EPSILONS:
            plan = uphp.plan_memory(d, eps)
            rows.append(_check("uphp-plan-slack", plan.log2_upper_bound + plan.log2_slack_allowance,
                               plan.log2_m, plan.within_slack, d, plan.N, eps, provenance="formula"))
    return rows


def _kraus_identity_gap(instance: uphp.QracInstance, rng: SeededRng, samples: int,
                        budget: Optional[int]) -> float:
    proc = instance.processor
    layout = proc.spec.layout
    gap = 0.0
    for x in range(len(instance.f)):
        povm = uphp.qrac_measurement_povm(proc, x, budget)
        psi = basis_state(proc.d, 2 * x)
        for _ in range(samples):
            rho = DensityOperator(layout, random_density(layout.total_dim, rng).matrix)
            out = uphp.processor_channel(proc, psi, rho, budget)
            for y in (0, 1):
                lhs = float(np.real(np.trace(povm.element(y).matrix @ rho.matrix)))
                rhs = float(np.real(np.trace(uphp.output_bit_projector(proc.d, y) @ out.matrix)))
                gap = max(gap, abs(lhs - rhs))
    return gap


def qrac_suite(config: RunConfig) -> list[dict]:
    tol = Config.tol("agreement")
    rows = []
    for k in QRAC_KS:
        for eps in config.eps_list:
            if not eps < 0.25:
                continue
            rng = _stream(config, "qrac", k, int(round(eps * 1_000_000)))
            worst, nayak_ok = 1.0, True
            for _ in range(QRAC_FUNCTIONS):
                instance = uphp.build_qrac(random_bits(2 ** k, rng), k, eps)
                worst = min(worst, instance.min_guess())
                nayak_ok = nayak_ok and instance.nayak_check().satisfied
            d = 2 ** (k + 1)
            rows.append(_check("qrac-min-guess", 1 - 2 * eps, worst, worst >= 1 - 2 * eps - tol,
                               d, instance.N, eps, provenance="formula"))
            rows.append(_check("qrac-nayak", bounds.uphp_lower_bound_log2(d, eps), instance.log2_m,
                               nayak_ok, d, instance.N, eps, provenance="formula"))

    # Under-provisioned k = 1, N = 1 instance small enough for the dense pull-back
    instance = uphp.build_qrac((0, 1), 1, 0.2, ports=1)
    if config.dense_ok(instance.processor.spec.total_dim ** 2):
        rng = _stream(config, "qrac", 0)
        gap = _kraus_identity_gap(instance, rng, config.haar_samples, config.dense_budget)
        rows.append(_check("qrac-kraus-identity", 0.0, gap, gap <= tol, instance.d, 1))
        guess_gap = max(abs(instance.dense_guess(x, config.dense_budget) - instance.guess(x)) for x in (0, 1))
        rows.append(_check("qrac-dense-vs-structured", 0.0, guess_gap, guess_gap <= tol, instance.d, 1))
    return rows


# ─── Bounds and the PBT baseline ────────────────────────────────────────────

def bounds_suite(config: RunConfig) -> list[dict]:
    tol = Config.tol("bound")
    rows = []

    worst = 0.0
    for d in range(1, 11):
        for N in range(1, 21):
            weight = N * pbsp.port_success_weight(d, N)
            worst = max(worst, abs(weight - pbsp.success_probability_formula(d, N)))
    rows.append(_check("binomial-identity", 0.0, worst, worst <= 1e-12, provenance="formula"))

    fid_ok = True
    for d in sorted(set(config.d_list) | {2, 4, 8, 16}):
        for N in sorted(set(config.n_list) | {1}):
            verdict = bounds.pbsp_fidelity_bound_check(d, N, pbsp.success_probability_formula(d, N))
            fid_ok = fid_ok and verdict.satisfied
    rows.append(_check("pbsp-fidelity-bound", None, None, fid_ok, provenance="formula"))

    for d in config.d_list:
        for eps in config.eps_list:
            if eps >= 0.5:
                continue
            verdict = bounds.BoundVerdict.compare_log2(
                "uphp-lower", bounds.uphp_lower_bound_log2(d, eps), uphp.plan_memory(d, eps).log2_m
            )
            rows.append(_check("uphp-lower-vs-built", verdict.lhs, verdict.rhs, verdict.satisfied,
                               d, None, eps, provenance="formula"))

    for d in config.d_list:
        for N in config.n_list:
            gap = pbsp.success_probability_formula(d, N) - pbt.prob_pbt_formula(d, N)
            rows.append(_check("pbsp-dominates-pbt", 0.0, gap, gap > 0, d, N, provenance="formula"))

    rows += _pgm_rows(config, tol)
    return rows


def _pgm_rows(config: RunConfig, tol: float) -> list[dict]:
    rows = []
    points = [(2, N) for N in range(1, 5)] + [(3, N) for N in range(1, 3)]
    previous = {}
    for d, N in points:
        if not config.dense_ok(d ** (2 * N + 2)):
            continue
        spec = pbt.PgmSpec(d, N)
        povm = pbt.pgm_povm(spec, config.dense_budget)
        err = povm.completeness_error()
        low = povm.min_eigenvalue()
        pgm_tol = Config.tol("pgm_completeness")
        rows.append(_check("pgm-completeness", 0.0, err, err <= pgm_tol and low >= -pgm_tol, d, N))

        F = pbt.pbt_entanglement_fidelity(spec, config.dense_budget, povm)
        bound = pbt.standard_fidelity_lower_bound(d, N)
        ok = F >= bound - tol and F >= previous.get(d, 0.0) - tol
        if N == 1:
            ok = ok and abs(F - 1.0 / d ** 2) <= tol
        rows.append(_check("pgm-entanglement-fidelity", bound, F, ok, d, N))
        previous[d] = F
    return rows


# ─── Entry point ────────────────────────────────────────────────────────────

SUITES = (
    ("povm", povm_suite),
    ("formula", formula_suite),
    ("structured", structured_suite),
    ("nonsignaling", nonsignaling_suite),
    ("fvdg", fvdg_suite),
    ("uphp", uphp_suite),
    ("qrac", qrac_suite),
    ("bounds", bounds_suite),
)


def cmd_verify(config: RunConfig) -> Report:
    """Run every suite; the report fails if any row fails."""
    report = Report("Verification")
    for name, suite in SUITES:
        rows = suite(config)
        failed = sum(1 for r in rows if r["verdict"] == "fail")
        _log.info("verify %s: %d rows, %d failed", name, len(rows), failed)
        report.rows.extend(rows)
    return report
