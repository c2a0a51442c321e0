import numpy as np
import pytest
from hypothesis import given, strategies as st

from krylovlab.models import random_gue, random_haar_state
from krylovlab.tensor import (
    HermitianOperator,
    HilbertStructure,
    StateVector,
    StructureError,
    ValidationError,
    eigendecompose,
    evolve,
    evolve_many,
    operator_kron,
    partial_trace,
    reduced_density,
    schmidt,
    tensor_product,
)
from oracles import partial_trace_loops, rk4_evolve

dims_st = st.lists(st.integers(2, 3), min_size=2, max_size=3)


def test_structure_rejects_trivial_party():
    with pytest.raises(StructureError):
        HilbertStructure((2, 1))
    assert HilbertStructure((2, 3, 2)).total_dim == 12


def test_state_must_be_normalized():
    with pytest.raises(ValidationError):
        StateVector(np.array([1.0, 1.0]), (2,))
    psi = StateVector.normalized([1.0, 1.0], (2,))
    assert np.allclose(psi.amplitudes, [2**-0.5, 2**-0.5])


def test_state_dimension_mismatch():
    with pytest.raises(StructureError):
        StateVector(np.array([1.0, 0, 0]), (2, 2))


def test_nonhermitian_rejected_and_near_hermitian_symmetrized():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0, 1], [0, 0]]), (2,))
    m = np.array([[1.0, 2.0], [2.0 + 1e-14, 0.0]])
    assert np.allclose(HermitianOperator(m, (2,)).matrix, HermitianOperator(m, (2,)).matrix.conj().T, atol=0)


def test_tensor_product_amplitudes():
    a = StateVector.normalized([1, 2], (2,))
    b = StateVector.normalized([1, 0, 1j], (3,))
    ab = tensor_product(a, b)
    assert ab.structure.party_dims == (2, 3)
    assert np.allclose(ab.amplitudes, np.kron(a.amplitudes, b.amplitudes))


@given(st.integers(0, 2**32 - 1))
def test_tensor_product_associative(seed):
    a, b, c = (random_haar_state((d,), seed + k) for k, d in enumerate((2, 3, 2)))
    left = tensor_product(tensor_product(a, b), c)
    right = tensor_product(a, tensor_product(b, c))
    assert np.allclose(left.amplitudes, right.amplitudes, atol=1e-14)


@given(dims_st, st.integers(0, 2**32 - 1))
def test_partial_trace_matches_loop_oracle(dims, seed):
    psi = random_haar_state(dims, seed)
    dA = dims[0]
    dB = int(np.prod(dims[1:]))
    rho = psi.projector()
    ours = partial_trace(rho, [0]).matrix
    assert np.abs(ours - partial_trace_loops(rho.matrix, dA, dB)).max() < 1e-13
    assert np.abs(reduced_density(psi, [0]).matrix - ours).max() < 1e-13


@given(dims_st, st.integers(0, 2**32 - 1))
def test_partial_trace_of_product_is_factor(dims, seed):
    a = random_haar_state(dims[:1], seed)
    b = random_haar_state(dims[1:], seed + 1)
    rho_a = partial_trace(tensor_product(a, b).projector(), [0]).matrix
    assert np.abs(rho_a - np.outer(a.amplitudes, a.amplitudes.conj())).max() < 1e-13


def test_partial_trace_keeps_trace_and_order():
    psi = random_haar_state((2, 3, 2), 3)
    rho = psi.projector()
    r02 = partial_trace(rho, [2, 0])
    assert r02.structure.party_dims == (2, 2)
    assert abs(np.trace(r02.matrix) - 1) < 1e-13
    # tracing in two steps agrees with one step
    r01 = partial_trace(rho, [0, 1])
    r0 = partial_trace(r01, [0])
    assert np.abs(r0.matrix - partial_trace(rho, [0]).matrix).max() < 1e-13


def test_partial_trace_rejects_bad_density():
    bad = HermitianOperator(np.eye(4), (2, 2))
    with pytest.raises(ValidationError):
        partial_trace(bad, [0])


def test_eigendecompose_reconstructs():
    H = random_gue(6, 4)
    w, v = eigendecompose(H)
    assert np.all(np.diff(w) >= 0)
    assert np.abs(v @ np.diag(w) @ v.conj().T - H.matrix).max() < 1e-12
    assert np.abs(v.conj().T @ v - np.eye(6)).max() < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_evolve_matches_runge_kutta(seed):
    H = random_gue(6, seed)
    psi = random_haar_state((6,), seed + 10)
    ref = rk4_evolve(H.matrix, psi.amplitudes, 1.3)
    assert np.abs(evolve(H, psi, 1.3).amplitudes - ref).max() < 1e-8


@given(st.integers(0, 2**32 - 1), st.floats(0, 5), st.floats(0, 5))
def test_evolution_composes(seed, t1, t2):
    H = random_gue(5, seed)
    psi = random_haar_state((5,), seed ^ 7)
    once = evolve(H, psi, t1 + t2).amplitudes
    twice = evolve(H, evolve(H, psi, t1), t2).amplitudes
    assert np.abs(once - twice).max() < 1e-10


@given(st.integers(0, 2**32 - 1))
def test_evolution_unitary_and_energy_conserving(seed):
    H = random_gue(8, seed)
    psi = random_haar_state((8,), seed ^ 3)
    traj = evolve_many(H, psi, np.linspace(0, 20, 11))
    assert np.abs(np.linalg.norm(traj, axis=1) - 1).max() < 1e-12
    energies = np.einsum("ti,ij,tj->t", traj.conj(), H.matrix, traj).real
    assert np.abs(energies - H.expectation(psi)).max() < 1e-11


def test_evolve_many_matches_evolve():
    H = random_gue(4, 9)
    psi = random_haar_state((4,), 9)
    ts = [0.0, 0.5, 2.0]
    many = evolve_many(H, psi, ts)
    for row, t in zip(many, ts):
        assert np.abs(row - evolve(H, psi, t).amplitudes).max() < 1e-13


def test_operator_kron_order():
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    assert np.array_equal(operator_kron(x, z), np.kron(x, z))


@given(dims_st, st.integers(0, 2**32 - 1))
def test_schmidt_reconstructs_and_normalizes(dims, seed):
    psi = random_haar_state(dims, seed)
    sd = schmidt(psi, [0])
    m = sd.left @ np.diag(sd.coefficients) @ sd.right
    assert np.abs(m.reshape(-1) - psi.amplitudes).max() < 1e-13
    assert abs((sd.coefficients**2).sum() - 1) < 1e-13
    # Schmidt weights equal the reduced spectrum
    spec = np.sort(reduced_density(psi, [0]).eigenvalues)[::-1]
    assert np.allclose(spec[: sd.coefficients.size], sd.coefficients**2, atol=1e-13)


def test_schmidt_rank_of_product_and_bell():
    prod_state = StateVector.basis((2, 2), 0)
    bell = StateVector.normalized([1, 0, 0, 1], (2, 2))
    assert schmidt(prod_state, [0]).rank == 1
    assert schmidt(bell, [1]).rank == 2
