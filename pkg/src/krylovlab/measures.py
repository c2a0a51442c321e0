"""Entropies, coherence quantifiers and geometric entanglement measures.

All logarithms are natural; entropies are in nats and use 0 ln 0 = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import prod
from typing import Sequence

import numpy as np

from .tensor import (
    HermitianOperator,
    StateVector,
    StructureError,
    ValidationError,
    check_density_matrix,
    schmidt,
)

PROB_TOL = 1e-12
SUPPORT_TOL = 1e-12
LEAKAGE_TOL = 1e-10

GM_RESTARTS = 32
GM_TOL = 1e-12
GM_MAX_SWEEPS = 500
# slack allowed on the per-sweep monotonicity assertion (floating-point noise)
MONOTONE_SLACK = 1e-12


class OptimizerError(RuntimeError):
    pass


def as_distribution(p, tol: float = PROB_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if np.any(p < 0):
        raise ValidationError(f"negative probability {p.min()!r}")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"probabilities sum to {total!r}, expected 1")
    return p


def _entropy_terms(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def shannon_entropy(p) -> float:
    return _entropy_terms(as_distribution(p))


def von_neumann_entropy(rho: HermitianOperator) -> float:
    return _entropy_terms(check_density_matrix(rho))


def entropy_of_spectrum(evals: np.ndarray) -> np.ndarray:
    """Row-wise entropy of already-validated eigenvalue arrays; negatives clipped."""
    e = np.clip(np.asarray(evals, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(e > 0, e * np.log(np.where(e > 0, e, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def relative_entropy(rho: HermitianOperator, sigma: HermitianOperator) -> float:
    """Tr[rho (ln rho - ln sigma)], or +inf when supp(rho) is not inside supp(sigma)."""
    if rho.dim != sigma.dim:
        raise StructureError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    p = check_density_matrix(rho)
    q = check_density_matrix(sigma)
    _, u = rho.eigensystem
    _, v = sigma.eigensystem
    overlap = np.abs(v.conj().T @ u) ** 2  # overlap[j, i] = |<s_j|r_i>|^2
    null = q <= SUPPORT_TOL
    leakage = float((overlap[null] @ p).sum()) if null.any() else 0.0
    if leakage > LEAKAGE_TOL:
        return float("inf")
    log_q = np.log(np.where(null, 1.0, q))
    cross = float(((overlap[~null] * log_q[~null, None]) @ p).sum())
    value = -_entropy_terms(p) - cross
    return max(value, 0.0) if value > -1e-12 else value


def _basis_amplitudes(psi: StateVector, basis) -> np.ndarray:
    if basis is None:
        return psi.amplitudes
    b = np.asarray(basis, dtype=complex)
    if b.shape != (psi.dim, psi.dim):
        raise StructureError(f"basis must be a {psi.dim}x{psi.dim} matrix of column vectors")
    if np.abs(b.conj().T @ b - np.eye(psi.dim)).max() > 1e-10:
        raise ValidationError("basis is not orthonormal")
    return b.conj().T @ psi.amplitudes


def l1_coherence(psi: StateVector, basis=None) -> float:
    """Sum of |rho_ij| over i != j in the given basis (columns); computational basis if None."""
    c = np.abs(_basis_amplitudes(psi, basis))
    return float(c.sum() ** 2 - (c**2).sum())


def pairwise_coherence(psi: StateVector, basis=None, i: int = 0, j: int = 1) -> float:
    if i == j:
        raise StructureError("pairwise coherence needs two distinct levels")
    c = np.abs(_basis_amplitudes(psi, basis))
    return float(c[i] * c[j])


@dataclass(frozen=True, eq=False)
class GeometricMeasureResult:
    value: float
    maximizer: list[np.ndarray] | np.ndarray | None
    restarts_used: int
    converged: bool
    partition: tuple[tuple[int, ...], ...] | None = None

    @property
    def max_overlap(self) -> float:
        return 1.0 - self.value


def _random_unit(rng: np.random.Generator, size: tuple[int, ...]) -> np.ndarray:
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _env_subscripts(n: int) -> list[str]:
    # contract the state tensor with conj factors of all parties but j; 'Z' indexes restarts
    full = _LETTERS[:n]
    subs = []
    for j in range(n):
        others = ",".join("Z" + full[i] for i in range(n) if i != j)
        subs.append(f"{full},{others}->Z{full[j]}")
    return subs


def alternating_product_overlap(
    tensor: np.ndarray,
    restarts: int = GM_RESTARTS,
    tol: float = GM_TOL,
    max_sweeps: int = GM_MAX_SWEEPS,
    seed: int = 0,
    history: list | None = None,
):
    """Maximize |<a_1 x ... x a_n | T>|^2 over unit local vectors, batched over restarts.

    Each local update replaces one factor by its normalized environment, which
    is the exact maximizer with the others held fixed, so the overlap is
    nondecreasing sweep to sweep. Returns (best overlap, factors, converged).
    """
    dims = tensor.shape
    n = len(dims)
    rng = np.random.default_rng(seed)
    factors = [_random_unit(rng, (restarts, d)) for d in dims]
    subs = _env_subscripts(n)
    prev = np.full(restarts, -np.inf)
    converged = False
    overlap = np.zeros(restarts)
    for _ in range(max_sweeps):
        for j in range(n):
            others = [factors[i].conj() for i in range(n) if i != j]
            env = np.einsum(subs[j], tensor, *others)
            overlap = np.einsum("zi,zi->z", env.conj(), env).real
            norm = np.sqrt(overlap)
            norm[norm == 0] = 1.0
            factors[j] = env / norm[:, None]
        if np.any(overlap < prev - MONOTONE_SLACK):
            raise OptimizerError("alternating update decreased the overlap")
        if history is not None:
            history.append(overlap.copy())
        if np.all(np.abs(overlap - prev) < tol):
            converged = True
            break
        prev = overlap
    best = int(np.argmax(overlap))
    return float(overlap[best]), [f[best] for f in factors], converged


def _require_pure(psi: StateVector) -> None:
    if not isinstance(psi, StateVector):
        raise ValidationError("geometric measures are defined for pure states (StateVector)")


def _clip_value(v: float) -> float:
    return float(min(max(v, 0.0), 1.0))


def geometric_measure_product(
    psi: StateVector,
    restarts: int = GM_RESTARTS,
    tol: float = GM_TOL,
    max_sweeps: int = GM_MAX_SWEEPS,
    seed: int = 0,
) -> GeometricMeasureResult:
    """1 - max |<phi|psi>|^2 over fully product |phi>.

    Two parties are handled exactly through the largest Schmidt coefficient.
    """
    _require_pure(psi)
    n = psi.structure.n_parties
    if n < 2:
        raise StructureError("geometric measure needs at least two parties")
    if n == 2:
        sd = schmidt(psi, [0])
        maximizer = [sd.left[:, 0], sd.right[0, :].conj()]
        return GeometricMeasureResult(_clip_value(1.0 - sd.coefficients[0] ** 2), maximizer, 0, True)
    overlap, factors, converged = alternating_product_overlap(
        psi.tensor(), restarts=restarts, tol=tol, max_sweeps=max_sweeps, seed=seed
    )
    return GeometricMeasureResult(_clip_value(1.0 - overlap), factors, restarts, converged)


def ggm(psi: StateVector) -> GeometricMeasureResult:
    """Generalized geometric measure: 1 - largest squared Schmidt coefficient over all cuts."""
    _require_pure(psi)
    n = psi.structure.n_parties
    if n < 3:
        raise StructureError("GGM is defined for at least three parties")
    best, best_cut = -1.0, None
    # cuts and their complements give the same spectrum; fix party 0 on one side
    for size in range(1, n):
        for rest in combinations(range(1, n), size - 1):
            cut = (0,) + rest
            if len(cut) == n:
                continue
            lam = schmidt(psi, cut).coefficients[0] ** 2
            if lam > best:
                best, best_cut = lam, cut
    return GeometricMeasureResult(_clip_value(1.0 - best), None, 0, True, partition=(best_cut,))


def set_partitions(items: Sequence[int], max_block: int):
    """All partitions of ``items`` into blocks of size at most ``max_block``."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(0, min(max_block, len(items))):
        for mates in combinations(rest, k):
            block = (first,) + mates
            remaining = [x for x in rest if x not in mates]
            for tail in set_partitions(remaining, max_block):
                yield [block] + tail


def _is_maximal(partition, max_block: int) -> bool:
    sizes = sorted(len(b) for b in partition)
    return len(sizes) < 2 or sizes[0] + sizes[1] > max_block


def m_producible_geometric_measure(
    psi: StateVector,
    m: int,
    restarts: int = GM_RESTARTS,
    tol: float = GM_TOL,
    max_sweeps: int = GM_MAX_SWEEPS,
    seed: int = 0,
) -> GeometricMeasureResult:
    """1 - max overlap with (m-1)-producible states.

    Only partitions that cannot be coarsened within the block limit are
    searched, since merging blocks enlarges the feasible set. Two-block
    partitions are solved exactly by SVD.
    """
    _require_pure(psi)
    n = psi.structure.n_parties
    if not 2 <= m <= n:
        raise StructureError(f"m must lie in [2, {n}], got {m}")
    dims = psi.structure.party_dims
    best, best_part, best_factors, all_converged = -1.0, None, None, True
    for part in set_partitions(range(n), m - 1):
        if not _is_maximal(part, m - 1):
            continue
        order = [p for block in part for p in block]
        shape = [prod(dims[p] for p in block) for block in part]
        t = psi.tensor().transpose(order).reshape(shape)
        if len(part) == 2:
            u, s, vh = np.linalg.svd(t, full_matrices=False)
            overlap, factors, converged = float(s[0] ** 2), [u[:, 0], vh[0].conj()], True
        else:
            overlap, factors, converged = alternating_product_overlap(
                t, restarts=restarts, tol=tol, max_sweeps=max_sweeps, seed=seed
            )
        all_converged &= converged
        if overlap > best:
            best, best_part, best_factors = overlap, tuple(part), factors
    return GeometricMeasureResult(_clip_value(1.0 - best), best_factors, restarts, all_converged, best_part)


def geometric_measure(psi: StateVector, kind: str = "product", **options) -> GeometricMeasureResult:
    """Dispatch on the member of the geometric-measure class: 'product' or 'ggm'."""
    if kind == "product":
        return geometric_measure_product(psi, **options)
    if kind == "ggm":
        return ggm(psi)
    raise ValueError(f"unknown geometric measure kind {kind!r}")
