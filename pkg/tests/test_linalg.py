"""Tests for linalg.py"""

import numpy as np
import pytest


def _bell():
    from pbsp_sim.states import max_entangled
    return max_entangled(2, ("A", "B"))


# ─── Layouts ─────────────────────────────────────────────────────────────────

def test_layout_dims_and_total():
    from pbsp_sim.linalg import RegisterLayout
    layout = RegisterLayout.of(("A", 2), ("B", 3))
    assert layout.labels == ("A", "B")
    assert layout.dims == (2, 3)
    assert layout.total_dim == 6
    assert layout.index("B") == 1


def test_layout_duplicate_label_rejected():
    from pbsp_sim.linalg import RegisterLayout
    from pbsp_sim.common.errors import LayoutError
    with pytest.raises(LayoutError):
        RegisterLayout.of(("A", 2), ("A", 2))


def test_layout_unknown_label():
    from pbsp_sim.linalg import RegisterLayout
    from pbsp_sim.common.errors import LayoutError
    with pytest.raises(LayoutError):
        RegisterLayout.uniform(["A"], 2).index("Z")


def test_layout_subset_keeps_layout_order():
    from pbsp_sim.linalg import RegisterLayout
    layout = RegisterLayout.uniform(["A1", "A2", "B1"], 2)
    assert layout.subset(["B1", "A1"]).labels == ("A1", "B1")


def test_check_budget_raises_capacity_error():
    from pbsp_sim.linalg import check_budget
    from pbsp_sim.common.errors import CapacityError
    check_budget(16, budget=16)
    with pytest.raises(CapacityError):
        check_budget(17, budget=16)


# ─── States and operators ────────────────────────────────────────────────────

def test_state_vector_rejects_unnormalized():
    from pbsp_sim.linalg import RegisterLayout, StateVector
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        StateVector(RegisterLayout.of(("D", 2)), [1.0, 1.0])


def test_state_vector_normalized_constructor():
    from pbsp_sim.linalg import RegisterLayout, StateVector
    psi = StateVector.normalized(RegisterLayout.of(("D", 2)), [3.0, 4.0])
    assert np.allclose(psi.amplitudes, [0.6, 0.8])


def test_state_vector_wrong_length():
    from pbsp_sim.linalg import RegisterLayout, StateVector
    from pbsp_sim.common.errors import LayoutError
    with pytest.raises(LayoutError):
        StateVector(RegisterLayout.of(("D", 3)), [1.0, 0.0])


def test_density_rejects_negative_eigenvalue():
    from pbsp_sim.linalg import DensityOperator, RegisterLayout
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        DensityOperator(RegisterLayout.of(("D", 2)), np.diag([1.5, -0.5]))


def test_density_rejects_non_unit_trace():
    from pbsp_sim.linalg import DensityOperator, RegisterLayout
    from pbsp_sim.common.errors import DomainError
    layout = RegisterLayout.of(("D", 2))
    with pytest.raises(DomainError):
        DensityOperator(layout, np.eye(2))
    assert DensityOperator(layout, np.eye(2), unit_trace=False).trace == pytest.approx(2.0)


def test_hermitian_rejects_non_hermitian():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        HermitianOperator(RegisterLayout.of(("D", 2)), np.array([[0, 1], [0, 0]]))


def test_hermitian_arithmetic_needs_same_layout():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout
    from pbsp_sim.common.errors import LayoutError
    a = HermitianOperator.identity(RegisterLayout.of(("A", 2)))
    b = HermitianOperator.identity(RegisterLayout.of(("B", 2)))
    assert np.allclose((a + a).matrix, 2 * np.eye(2))
    with pytest.raises(LayoutError):
        a - b


# ─── Tensor and partial trace ────────────────────────────────────────────────

def test_partial_trace_of_bell_is_maximally_mixed():
    from pbsp_sim.linalg import partial_trace
    reduced = partial_trace(_bell(), ["B"])
    assert reduced.layout.labels == ("B",)
    assert np.allclose(reduced.matrix, np.eye(2) / 2)


def test_partial_trace_density_matches_state_path():
    from pbsp_sim.linalg import partial_trace, projector
    from pbsp_sim.states import SeededRng, haar_state, relabel
    from pbsp_sim.linalg import tensor
    rng = SeededRng(7)
    psi = tensor(relabel(haar_state(3, rng), "X"), relabel(haar_state(2, rng), "Y"))
    via_state = partial_trace(psi, ["Y"])
    via_density = partial_trace(projector(psi), ["Y"])
    assert np.allclose(via_state.matrix, via_density.matrix)


def test_tensor_product_keeps_order():
    from pbsp_sim.linalg import tensor, partial_trace
    from pbsp_sim.states import basis_state
    psi = tensor(basis_state(2, 0, "X"), basis_state(3, 2, "Y"))
    assert psi.layout.labels == ("X", "Y")
    assert psi.amplitudes[2] == pytest.approx(1.0)
    assert partial_trace(psi, ["Y"]).matrix[2, 2] == pytest.approx(1.0)


def test_tensor_state_with_operator_rejected():
    from pbsp_sim.linalg import tensor, projector
    from pbsp_sim.common.errors import LayoutError
    from pbsp_sim.states import basis_state
    with pytest.raises(LayoutError):
        tensor(basis_state(2, 0, "X"), projector(basis_state(2, 0, "Y")))


def test_embed_places_operator_on_second_register():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout, embed
    layout = RegisterLayout.of(("A", 2), ("B", 2))
    z = HermitianOperator(RegisterLayout.of(("B", 2)), np.diag([1.0, -1.0]))
    assert np.allclose(embed(z, layout).matrix, np.kron(np.eye(2), np.diag([1.0, -1.0])))


def test_apply_local_matches_embed():
    from pbsp_sim.linalg import HermitianOperator, apply_local, embed
    from pbsp_sim.states import ResourceSpec, resource_state
    spec = ResourceSpec(2, 2)
    resource = resource_state(spec)
    x = HermitianOperator(spec.layout.subset(["A2"]), np.array([[0, 1], [1, 0]]))
    expected = embed(x, spec.layout).matrix @ resource.amplitudes
    assert np.allclose(apply_local(x, resource), expected)


def test_expectation_on_subsystem():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout, expectation
    z = HermitianOperator(RegisterLayout.of(("A", 2)), np.diag([1.0, -1.0]))
    assert expectation(_bell(), z) == pytest.approx(0.0, abs=1e-12)


def test_partial_trace_in_two_steps():
    from pbsp_sim.linalg import RegisterLayout, StateVector, partial_trace, projector
    from pbsp_sim.states import SeededRng
    layout = RegisterLayout.of(("X", 2), ("Y", 3), ("Z", 2))
    psi = StateVector.normalized(layout, SeededRng(4).complex_normal(12))
    rho = projector(psi)
    direct = partial_trace(rho, ["X"])
    stepwise = partial_trace(partial_trace(rho, ["X", "Y"]), ["X"])
    assert np.allclose(direct.matrix, stepwise.matrix, atol=1e-12)
    assert np.allclose(partial_trace(rho, ["Z", "X"]).matrix, partial_trace(psi, ["X", "Z"]).matrix, atol=1e-12)


def test_partial_trace_rejects_duplicate_keep():
    from pbsp_sim.linalg import partial_trace, projector
    from pbsp_sim.common.errors import LayoutError
    with pytest.raises(LayoutError):
        partial_trace(_bell(), ["A", "A"])
    with pytest.raises(LayoutError):
        partial_trace(projector(_bell()), ["B", "B"])


# ─── Spectral routines ───────────────────────────────────────────────────────

def test_pinv_sqrt_zero_on_kernel():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout, pinv_sqrt
    op = HermitianOperator(RegisterLayout.of(("D", 3)), np.diag([4.0, 1.0, 0.0]))
    assert np.allclose(pinv_sqrt(op).matrix, np.diag([0.5, 1.0, 0.0]))


def test_pinv_sqrt_rejects_negative_operator():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout, pinv_sqrt
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        pinv_sqrt(HermitianOperator(RegisterLayout.of(("D", 2)), np.diag([1.0, -0.5])))


def test_pinv_sqrt_sandwich_is_support_projector():
    from pbsp_sim.linalg import HermitianOperator, pinv_sqrt
    from pbsp_sim.states import SeededRng, random_density
    rho = random_density(4, SeededRng(9), rank=2)
    root = pinv_sqrt(HermitianOperator(rho.layout, rho.matrix)).matrix
    p = root @ rho.matrix @ root
    assert np.allclose(p @ p, p, atol=1e-9)
    assert np.real(np.trace(p)) == pytest.approx(2.0, abs=1e-9)


def test_spectral_reconstruction():
    from pbsp_sim.linalg import HermitianOperator, RegisterLayout, spectral
    from pbsp_sim.states import SeededRng
    rng = SeededRng(13)
    for qubits in (1, 4, 8):
        layout = RegisterLayout.uniform([f"Q{i}" for i in range(qubits)], 2)
        g = rng.complex_normal((layout.total_dim, layout.total_dim))
        h = HermitianOperator(layout, g + g.conj().T)
        evals, evecs = spectral(h)
        assert np.all(np.diff(evals) >= 0)
        assert np.allclose((evecs * evals) @ evecs.conj().T, h.matrix, atol=1e-10)
        assert np.allclose(evecs.conj().T @ evecs, np.eye(layout.total_dim), atol=1e-10)


def test_psd_sqrt_squares_back():
    from pbsp_sim.linalg import psd_sqrt
    from pbsp_sim.states import SeededRng, random_density
    rho = random_density(3, SeededRng(3))
    root = psd_sqrt(rho)
    assert np.allclose(root @ root, rho.matrix)


# ─── Distances ───────────────────────────────────────────────────────────────

def test_fidelity_of_identical_states_is_one():
    from pbsp_sim.linalg import fidelity
    from pbsp_sim.states import SeededRng, random_density
    rho = random_density(3, SeededRng(11))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)


def test_fidelity_and_trace_distance_of_orthogonal_states():
    from pbsp_sim.linalg import fidelity, projector, trace_distance
    from pbsp_sim.states import basis_state
    a, b = projector(basis_state(2, 0)), projector(basis_state(2, 1))
    assert fidelity(a, b) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(a, b) == pytest.approx(1.0)


def test_pure_fidelity_matches_uhlmann():
    from pbsp_sim.linalg import fidelity, projector, pure_fidelity
    from pbsp_sim.states import SeededRng, haar_state, random_density
    rng = SeededRng(5)
    for d in (2, 3, 4):
        for _ in range(50):
            psi = haar_state(d, rng)
            sigma = random_density(d, rng)
            assert fidelity(projector(psi), sigma) == pytest.approx(pure_fidelity(psi, sigma), abs=1e-10)


def test_fidelity_of_rank_deficient_pair():
    from pbsp_sim.linalg import fidelity, projector
    from pbsp_sim.states import SeededRng, haar_state
    rng = SeededRng(6)
    psi, phi = haar_state(4, rng), haar_state(4, rng)
    overlap = abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2
    assert fidelity(projector(psi), projector(phi)) == pytest.approx(overlap, abs=1e-10)


def test_distance_layout_mismatch():
    from pbsp_sim.linalg import trace_distance
    from pbsp_sim.linalg import DensityOperator, RegisterLayout
    from pbsp_sim.common.errors import LayoutError
    a = DensityOperator.maximally_mixed(RegisterLayout.of(("A", 2)))
    b = DensityOperator.maximally_mixed(RegisterLayout.of(("B", 2)))
    with pytest.raises(LayoutError):
        trace_distance(a, b)
