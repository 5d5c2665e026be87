"""Tests for states.py"""

import numpy as np
import pytest


# ─── Seeded randomness ───────────────────────────────────────────────────────

def test_same_seed_same_draws():
    from pbsp_sim.states import SeededRng
    a = SeededRng(42).derive(1, 2).complex_normal(5)
    b = SeededRng(42).derive(1, 2).complex_normal(5)
    assert np.array_equal(a, b)


def test_derived_streams_differ():
    from pbsp_sim.states import SeededRng
    root = SeededRng(42)
    assert not np.array_equal(root.derive(1).complex_normal(4), root.derive(2).complex_normal(4))


def test_derive_chains_keys():
    from pbsp_sim.states import SeededRng
    chained = SeededRng(9).derive(1).derive(2)
    assert chained.keys == (1, 2)
    assert np.array_equal(chained.complex_normal(3), SeededRng(9, (1, 2)).complex_normal(3))


def test_negative_seed_rejected():
    from pbsp_sim.states import SeededRng
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        SeededRng(-1)


def test_make_rng_uses_default_seed():
    from pbsp_sim.states import make_rng
    from pbsp_sim.common.config import Config
    assert make_rng().seed == Config.default_seed


# ─── Resource ────────────────────────────────────────────────────────────────

def test_resource_spec_labels():
    from pbsp_sim.states import ResourceSpec
    spec = ResourceSpec(3, 2)
    assert spec.layout.labels == ("A1", "A2", "B1", "B2")
    assert spec.total_dim == 81


def test_resource_spec_rejects_bad_values():
    from pbsp_sim.states import ResourceSpec
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        ResourceSpec(1, 2)
    with pytest.raises(DomainError):
        ResourceSpec(2, 0)


def test_resource_is_product_of_epr_pairs():
    from pbsp_sim.linalg import partial_trace
    from pbsp_sim.states import ResourceSpec, max_entangled, resource_state
    spec = ResourceSpec(2, 2)
    resource = resource_state(spec)
    pair = partial_trace(resource, ["A1", "B1"])
    bell = max_entangled(2, ("A1", "B1"))
    assert np.allclose(pair.matrix, np.outer(bell.amplitudes, bell.amplitudes.conj()))
    # Each port alone is maximally mixed
    assert np.allclose(partial_trace(resource, ["B2"]).matrix, np.eye(2) / 2)


def test_resource_amplitudes_two_qubit_pairs():
    from pbsp_sim.states import ResourceSpec, resource_state
    amps = resource_state(ResourceSpec(2, 2)).amplitudes
    support = [0b0000, 0b0101, 0b1010, 0b1111]
    assert np.allclose(amps[support], 0.5)
    assert np.allclose(np.delete(amps, support), 0.0)


def test_resource_is_reordered_pair_product():
    from pbsp_sim.linalg import tensor
    from pbsp_sim.states import ResourceSpec, max_entangled, resource_state
    pairs = tensor(max_entangled(3, ("A1", "B1")), max_entangled(3, ("A2", "B2")))
    assert pairs.layout.labels == ("A1", "B1", "A2", "B2")
    reordered = pairs.tensor_view().transpose(0, 2, 1, 3)
    assert np.allclose(reordered, resource_state(ResourceSpec(3, 2)).tensor_view())


def test_conjugate_projector_steers_epr_pair():
    from pbsp_sim.linalg import apply_local, partial_trace_outer
    from pbsp_sim.states import SeededRng, conjugate, haar_state, max_entangled, relabel
    rng = SeededRng(17)
    for d in (2, 3):
        phi = max_entangled(d, ("A", "B"))
        for _ in range(10):
            psi = haar_state(d, rng)
            star = conjugate(relabel(psi, "A")).amplitudes
            steered = apply_local(np.outer(star, star.conj()), phi, labels=["A"])
            bob = partial_trace_outer(steered, phi.amplitudes, phi.layout, ["B"])
            expected = np.outer(psi.amplitudes, psi.amplitudes.conj()) / d
            assert np.allclose(bob, expected, atol=1e-12)


def test_resource_over_budget():
    from pbsp_sim.states import ResourceSpec, resource_state
    from pbsp_sim.common.errors import CapacityError
    with pytest.raises(CapacityError):
        resource_state(ResourceSpec(3, 3), budget=100)


def test_program_state_applies_unitary_on_bob_side():
    from pbsp_sim.linalg import partial_trace
    from pbsp_sim.states import SeededRng, haar_unitary, max_entangled, program_state
    u = haar_unitary(2, SeededRng(1))
    program = program_state(u, 1)
    bell = max_entangled(2, ("A1", "B1"))
    expected = np.kron(np.eye(2), u) @ bell.amplitudes
    assert np.allclose(program.amplitudes, expected)
    assert np.allclose(partial_trace(program, ["A1"]).matrix, np.eye(2) / 2)


# ─── Haar sampling ───────────────────────────────────────────────────────────

def test_haar_unitary_is_unitary():
    from pbsp_sim.states import SeededRng, haar_unitary
    u = haar_unitary(4, SeededRng(3))
    assert np.allclose(u.conj().T @ u, np.eye(4))


def test_haar_state_is_normalized():
    from pbsp_sim.states import SeededRng, haar_state
    psi = haar_state(5, SeededRng(3))
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)


def test_haar_unitary_entry_statistics():
    from pbsp_sim.states import SeededRng, haar_unitary
    rng = SeededRng(23)
    n = 10_000
    for d in (2, 3, 4):
        corner = np.array([haar_unitary(d, rng)[0, 0] for _ in range(n)])
        # |U_00|^2 is Beta(1, d - 1)
        sigma = np.sqrt((d - 1) / (d * d * (d + 1)) / n)
        assert abs(np.mean(np.abs(corner) ** 2) - 1 / d) <= 3 * sigma
        # No preferred phase
        sigma_part = np.sqrt(1 / (2 * d) / n)
        assert abs(np.mean(corner.real)) <= 4 * sigma_part
        assert abs(np.mean(corner.imag)) <= 4 * sigma_part


def test_haar_state_overlap_statistics():
    from pbsp_sim.states import SeededRng, haar_state
    rng = SeededRng(29)
    n = 10_000
    for d in (2, 5):
        weights = np.array([abs(haar_state(d, rng).amplitudes[0]) ** 2 for _ in range(n)])
        sigma = np.sqrt((d - 1) / (d * d * (d + 1)) / n)
        assert abs(np.mean(weights) - 1 / d) <= 3 * sigma


def test_random_density_rank():
    from pbsp_sim.states import SeededRng, random_density
    rho = random_density(4, SeededRng(2), rank=1)
    assert rho.trace == pytest.approx(1.0)
    assert np.linalg.matrix_rank(rho.matrix, tol=1e-9) == 1


def test_check_unitary_rejects():
    from pbsp_sim.states import check_unitary
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        check_unitary(np.array([[1, 1], [0, 1]]))
    with pytest.raises(DomainError):
        check_unitary(np.ones((2, 3)))


# ─── Boolean unitaries ───────────────────────────────────────────────────────

def test_boolean_unitary_flips_output_bit():
    from pbsp_sim.states import boolean_unitary, check_unitary
    u = boolean_unitary((0, 1), 1)
    check_unitary(u)
    # |x=1, y=0> -> |1, 1>
    assert u[3, 2] == 1
    # |x=0, y=0> unchanged
    assert u[0, 0] == 1


def test_boolean_unitary_of_identity_function_is_cnot():
    from pbsp_sim.states import boolean_unitary
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.array_equal(boolean_unitary((0, 1), 1), cnot)


def test_boolean_unitary_is_an_involution():
    from pbsp_sim.states import SeededRng, boolean_unitary, random_bits
    rng = SeededRng(31)
    for k in (1, 2, 3):
        u = boolean_unitary(random_bits(2 ** k, rng), k)
        assert np.allclose(u @ u, np.eye(2 ** (k + 1)))


def test_boolean_unitary_wrong_length():
    from pbsp_sim.states import boolean_unitary
    from pbsp_sim.common.errors import DomainError
    with pytest.raises(DomainError):
        boolean_unitary((0, 1, 1), 1)


def test_random_bits_reproducible():
    from pbsp_sim.states import SeededRng, random_bits
    bits = random_bits(16, SeededRng(4))
    assert bits == random_bits(16, SeededRng(4))
    assert set(bits) <= {0, 1}
