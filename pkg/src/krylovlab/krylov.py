"""Lanczos construction of the Krylov basis and Krylov-chain dynamics."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .tensor import (
    HermitianOperator,
    StateVector,
    StructureError,
    ValidationError,
    NORM_TOL,
    evolve_many,
)

DEFAULT_TOL = 1e-12
DEFAULT_N_POINTS = 401
SUM_RULE_TOL = 1e-10


class KrylovMismatchError(RuntimeError):
    """Krylov amplitudes fail the sum rule, so the basis does not belong to (H, psi0)."""


@dataclass(frozen=True, eq=False)
class KrylovBasis:
    """Orthonormal Krylov vectors (columns of ``vectors``) and Lanczos coefficients.

    ``b_coeffs[n-1]`` holds b_n, the coupling between sites n-1 and n.
    """

    vectors: np.ndarray
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    structure: object = None
    threshold: float = 0.0

    @property
    def dim_k(self) -> int:
        return self.vectors.shape[1]

    def state(self, n: int) -> StateVector:
        return StateVector(self.vectors[:, n], self.structure)

    def states(self) -> list[StateVector]:
        return [self.state(n) for n in range(self.dim_k)]

    def gram_deviation(self) -> float:
        g = self.vectors.conj().T @ self.vectors
        return float(np.abs(g - np.eye(self.dim_k)).max())

    def tridiagonal(self) -> np.ndarray:
        t = np.diag(self.a_coeffs).astype(float)
        if self.dim_k > 1:
            t += np.diag(self.b_coeffs, 1) + np.diag(self.b_coeffs, -1)
        return t


def build_krylov(H: HermitianOperator, psi0: StateVector, tol: float = DEFAULT_TOL) -> KrylovBasis:
    """Lanczos recursion with two full re-orthogonalization passes per step.

    Stops when the next b falls to ``tol * ||H||_2`` or the basis spans the
    whole space.
    """
    if psi0.dim != H.dim:
        raise StructureError(f"state dimension {psi0.dim} does not match operator dimension {H.dim}")
    norm = np.linalg.norm(psi0.amplitudes)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValidationError(f"initial state is not normalized (norm = {norm!r})")

    h = H.matrix
    dim = H.dim
    threshold = tol * H.spectral_norm()
    basis = np.zeros((dim, dim), dtype=complex)
    basis[:, 0] = psi0.amplitudes
    a: list[float] = []
    b: list[float] = []
    n = 0
    while True:
        k = basis[:, n]
        hk = h @ k
        a.append(float(np.vdot(k, hk).real))
        if n + 1 == dim:
            break
        v = hk - a[n] * k
        if n > 0:
            v -= b[n - 1] * basis[:, n - 1]
        stored = basis[:, : n + 1]
        for _ in range(2):
            v -= stored @ (stored.conj().T @ v)
        b_next = float(np.linalg.norm(v))
        if b_next <= threshold:
            break
        b.append(b_next)
        basis[:, n + 1] = v / b_next
        n += 1

    vectors = basis[:, : n + 1].copy()
    vectors.setflags(write=False)
    return KrylovBasis(
        vectors=vectors,
        a_coeffs=np.array(a),
        b_coeffs=np.array(b),
        structure=psi0.structure,
        threshold=threshold,
    )


def time_grid(t_max: float, n_points: int = DEFAULT_N_POINTS) -> np.ndarray:
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    return np.linspace(0.0, t_max, n_points)


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    times: np.ndarray
    phi: np.ndarray  # shape (len(times), dim_k)

    @property
    def dim_k(self) -> int:
        return self.phi.shape[1]

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.phi) ** 2

    @property
    def spread(self) -> np.ndarray:
        return spread_complexity(self)

    @property
    def ipr(self) -> np.ndarray:
        return inverse_participation_ratio(self)

    def sum_rule_deviation(self) -> float:
        return float(np.abs(self.probabilities.sum(axis=1) - 1.0).max())


def amplitudes_full_space(basis: KrylovBasis, H: HermitianOperator, psi0: StateVector, times) -> AmplitudeTrajectory:
    """Project the exactly evolved state onto each Krylov vector."""
    times = np.asarray(times, dtype=float).reshape(-1)
    psi_t = evolve_many(H, psi0, times)
    phi = psi_t @ basis.vectors.conj()
    traj = AmplitudeTrajectory(times=times, phi=phi)
    dev = traj.sum_rule_deviation()
    if dev > SUM_RULE_TOL:
        raise KrylovMismatchError(
            f"Krylov amplitudes miss {dev:.3e} of the probability; basis was not built from this (H, psi0)"
        )
    return traj


def amplitudes_tridiagonal(basis: KrylovBasis, times) -> AmplitudeTrajectory:
    """Amplitudes of exp(-iTt) e_0 on the Lanczos chain T."""
    times = np.asarray(times, dtype=float).reshape(-1)
    if basis.dim_k == 1:
        phi = np.exp(-1j * basis.a_coeffs[0] * times)[:, None]
        return AmplitudeTrajectory(times=times, phi=phi)
    evals, evecs = eigh_tridiagonal(basis.a_coeffs, basis.b_coeffs)
    weights = evecs[0, :]  # <E_j|e_0>, real for a real symmetric T
    phases = np.exp(-1j * np.outer(times, evals))
    phi = (phases * weights) @ evecs.T
    return AmplitudeTrajectory(times=times, phi=phi)


def _probabilities(traj) -> np.ndarray:
    if isinstance(traj, AmplitudeTrajectory):
        return traj.probabilities
    p = np.asarray(traj, dtype=float)
    return p[None, :] if p.ndim == 1 else p


def spread_complexity(traj) -> np.ndarray:
    """K(t) = sum_n n |phi_n(t)|^2.

    Accepts a trajectory or a probability array of shape (T, d_K) or (d_K,).
    """
    p = _probabilities(traj)
    return p @ np.arange(p.shape[1], dtype=float)


def inverse_participation_ratio(traj) -> np.ndarray:
    p = _probabilities(traj)
    return (p**2).sum(axis=1)
