from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import logm
from scipy.stats import unitary_group

from krylovlab.measures import (
    OptimizerError,
    alternating_product_overlap,
    geometric_measure,
    geometric_measure_product,
    ggm,
    l1_coherence,
    m_producible_geometric_measure,
    pairwise_coherence,
    relative_entropy,
    set_partitions,
    shannon_entropy,
    von_neumann_entropy,
)
from krylovlab.models import random_haar_state
from krylovlab.tensor import HermitianOperator, StateVector, StructureError, ValidationError, tensor_product
from oracles import brute_force_product_overlap_3qubit, partial_trace_loops

seeds = st.integers(0, 2**32 - 1)
GHZ = StateVector.normalized([1, 0, 0, 0, 0, 0, 0, 1], (2, 2, 2))
W = StateVector.normalized([0, 1, 1, 0, 1, 0, 0, 0], (2, 2, 2))


def random_density(dim, seed, rank=None):
    rng = np.random.default_rng(seed)
    rank = rank or dim
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return HermitianOperator(rho / np.trace(rho).real, (dim,))


def test_shannon_entropy_examples():
    assert shannon_entropy([1.0, 0.0]) == 0.0
    assert shannon_entropy(np.full(8, 1 / 8)) == pytest.approx(np.log(8), abs=1e-14)
    # geometric law with mean 1: p_n = 2^-(n+1), entropy 2 ln 2
    n = np.arange(200)
    p = 0.5 ** (n + 1)
    p /= p.sum()
    assert shannon_entropy(p) == pytest.approx(2 * np.log(2), abs=1e-12)


def test_shannon_entropy_rejects_bad_input():
    with pytest.raises(ValidationError):
        shannon_entropy([0.5, 0.6])
    with pytest.raises(ValidationError):
        shannon_entropy([1.5, -0.5])


def test_von_neumann_examples():
    assert von_neumann_entropy(StateVector.basis((3,), 1).projector()) == pytest.approx(0.0, abs=1e-14)
    mixed = HermitianOperator(np.eye(4) / 4, (4,))
    assert von_neumann_entropy(mixed) == pytest.approx(np.log(4), abs=1e-14)
    bell = StateVector.normalized([1, 0, 0, 1], (2, 2))
    rho_a = partial_trace_loops(bell.projector().matrix, 2, 2)
    assert von_neumann_entropy(HermitianOperator(rho_a, (2,))) == pytest.approx(np.log(2), abs=1e-14)


def test_von_neumann_rejects_non_states():
    with pytest.raises(ValidationError):
        von_neumann_entropy(HermitianOperator(np.diag([1.2, -0.2]), (2,)))
    with pytest.raises(ValidationError):
        von_neumann_entropy(HermitianOperator(np.eye(2), (2,)))


def test_relative_entropy_diagonal_value():
    rho = HermitianOperator(np.diag([0.5, 0.5]), (2,))
    sigma = HermitianOperator(np.diag([0.75, 0.25]), (2,))
    expected = 0.5 * np.log(2 / 3) + 0.5 * np.log(2)
    assert relative_entropy(rho, sigma) == pytest.approx(expected, abs=1e-14)


def test_relative_entropy_support_condition():
    rho = HermitianOperator(np.diag([0.5, 0.5]), (2,))
    sigma = HermitianOperator(np.diag([1.0, 0.0]), (2,))
    assert relative_entropy(rho, sigma) == np.inf
    assert relative_entropy(sigma, rho) == pytest.approx(np.log(2), abs=1e-14)
    # pure states that are not parallel
    plus = StateVector.normalized([1, 1], (2,)).projector()
    assert relative_entropy(plus, sigma) == np.inf


@given(seeds)
def test_relative_entropy_matches_matrix_log_oracle(seed):
    rho = random_density(3, seed)
    sigma = random_density(3, seed + 1)
    r = rho.matrix
    ref = np.trace(r @ (logm(r) - logm(sigma.matrix))).real
    assert relative_entropy(rho, sigma) == pytest.approx(ref, abs=1e-9)


@given(seeds, st.integers(1, 4))
def test_klein_inequality(seed, rank):
    rho = random_density(4, seed, rank)
    sigma = random_density(4, seed + 7)
    assert relative_entropy(rho, sigma) >= 0
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)


def test_l1_coherence_examples():
    plus = StateVector.normalized([1, 1], (2,))
    assert l1_coherence(plus) == pytest.approx(1.0)
    assert l1_coherence(StateVector.normalized(np.ones(5), (5,))) == pytest.approx(4.0)
    assert l1_coherence(StateVector.basis((3,), 2)) == 0.0
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert l1_coherence(plus, hadamard) == pytest.approx(0.0, abs=1e-15)


@given(seeds)
def test_l1_coherence_equals_offdiagonal_sum(seed):
    psi = random_haar_state((5,), seed)
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
    ref = np.abs(rho).sum() - np.abs(np.diag(rho)).sum()
    assert l1_coherence(psi) == pytest.approx(ref, abs=1e-12)
    assert 0 <= l1_coherence(psi) <= 4 + 1e-12


def test_pairwise_coherence():
    psi = StateVector.normalized([1, 2, 2], (3,))
    assert pairwise_coherence(psi, None, 1, 2) == pytest.approx(4 / 9)
    with pytest.raises(StructureError):
        pairwise_coherence(psi, None, 1, 1)


def test_basis_must_be_orthonormal():
    with pytest.raises(ValidationError):
        l1_coherence(StateVector.basis((2,), 0), np.array([[1, 1], [0, 1]]))


def test_ghz_geometric_measures():
    assert geometric_measure_product(GHZ).value == pytest.approx(0.5, abs=1e-10)
    assert ggm(GHZ).value == pytest.approx(0.5, abs=1e-10)


def test_w_state_against_brute_force():
    oracle = 1 - brute_force_product_overlap_3qubit(W.amplitudes)
    ours = geometric_measure_product(W).value
    assert abs(ours - oracle) < 1e-4
    assert ours == pytest.approx(5 / 9, abs=1e-9)


@pytest.mark.parametrize("seed", [1, 2])
def test_random_three_qubit_against_brute_force(seed):
    psi = random_haar_state((2, 2, 2), seed)
    oracle = 1 - brute_force_product_overlap_3qubit(psi.amplitudes)
    assert abs(geometric_measure_product(psi).value - oracle) < 1e-4


def _ggm_oracle(psi):
    # largest eigenvalue of every single-qubit marginal (the only cuts for three qubits)
    best = 0.0
    t = psi.tensor()
    for perm in permutations(range(3)):
        v = t.transpose(perm).reshape(-1)
        rho = partial_trace_loops(np.outer(v, v.conj()), 2, 4)
        best = max(best, np.linalg.eigvalsh(rho)[-1])
    return 1 - best


def test_w_state_ggm():
    assert ggm(W).value == pytest.approx(1 / 3, abs=1e-12)
    assert ggm(W).value == pytest.approx(_ggm_oracle(W), abs=1e-12)


@given(seeds)
def test_ggm_matches_marginal_oracle(seed):
    psi = random_haar_state((2, 2, 2), seed)
    assert ggm(psi).value == pytest.approx(_ggm_oracle(psi), abs=1e-12)


def test_product_state_has_zero_measure():
    a, b, c = (random_haar_state((d,), s) for s, d in enumerate((2, 3, 2)))
    psi = tensor_product(tensor_product(a, b), c)
    assert geometric_measure_product(psi).value < 1e-12
    assert ggm(psi).value < 1e-12


def test_two_party_measure_uses_schmidt():
    psi = StateVector.normalized([np.sqrt(0.7), 0, 0, np.sqrt(0.3)], (2, 2))
    assert geometric_measure_product(psi).value == pytest.approx(0.3, abs=1e-14)
    with pytest.raises(StructureError):
        ggm(psi)


@given(seeds)
def test_local_unitary_invariance(seed):
    psi = random_haar_state((2, 2, 2), seed)
    us = [unitary_group.rvs(2, random_state=seed % 2**31 + k) for k in range(3)]
    rotated = StateVector(np.kron(np.kron(us[0], us[1]), us[2]) @ psi.amplitudes, psi.structure)
    assert geometric_measure_product(rotated).value == pytest.approx(geometric_measure_product(psi).value, abs=1e-8)
    assert ggm(rotated).value == pytest.approx(ggm(psi).value, abs=1e-12)


@given(seeds)
def test_ggm_never_exceeds_product_measure(seed):
    psi = random_haar_state((2, 3, 2), seed)
    assert ggm(psi).value <= geometric_measure_product(psi).value + 1e-10


def test_alternating_updates_are_monotone():
    psi = random_haar_state((3, 2, 2, 2), 11)
    hist = []
    overlap, factors, converged = alternating_product_overlap(psi.tensor(), restarts=8, seed=1, history=hist)
    steps = np.array(hist)
    assert converged
    assert np.all(np.diff(steps, axis=0) >= -1e-12)
    prod_state = factors[0]
    for f in factors[1:]:
        prod_state = np.kron(prod_state, f)
    assert abs(np.vdot(prod_state, psi.amplitudes)) ** 2 == pytest.approx(overlap, abs=1e-12)


def test_monotonicity_guard_fires(monkeypatch):
    import krylovlab.measures as m

    monkeypatch.setattr(m, "MONOTONE_SLACK", -1.0)
    with pytest.raises(OptimizerError):
        alternating_product_overlap(random_haar_state((2, 2, 2), 0).tensor(), restarts=2)


def test_set_partition_counts():
    # Bell numbers
    assert sum(1 for _ in set_partitions(range(4), 4)) == 15
    assert sum(1 for _ in set_partitions(range(5), 5)) == 52
    assert all(len(b) <= 2 for p in set_partitions(range(5), 2) for b in p)


@given(seeds)
def test_m_producible_limits(seed):
    psi = random_haar_state((2, 2, 2, 2), seed)
    assert m_producible_geometric_measure(psi, 4).value == pytest.approx(ggm(psi).value, abs=1e-12)
    two = m_producible_geometric_measure(psi, 2, seed=3).value
    assert two == pytest.approx(geometric_measure_product(psi, seed=3).value, abs=1e-8)
    assert m_producible_geometric_measure(psi, 3).value <= two + 1e-10


def test_m_producible_range_checked():
    with pytest.raises(StructureError):
        m_producible_geometric_measure(GHZ, 4)


def test_dispatch():
    assert geometric_measure(GHZ, "ggm").value == pytest.approx(0.5)
    assert geometric_measure(W, "product", restarts=4).value == pytest.approx(5 / 9, abs=1e-9)
    with pytest.raises(ValueError):
        geometric_measure(GHZ, "nope")
