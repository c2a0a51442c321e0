"""Dense linear algebra on multipartite Hilbert spaces.

States and operators carry their tensor-product structure so that partial
traces and Schmidt decompositions can be taken across arbitrary party cuts.
Everything is dense; the intended scale is total dimension up to a few
thousand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import prod
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


class StructureError(ValueError):
    """Invalid party index, cut, or mismatched tensor structure."""


class ValidationError(ValueError):
    """Input violates a numerical precondition (norm, hermiticity, trace)."""


@dataclass(frozen=True)
class HilbertStructure:
    party_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        if not dims:
            raise StructureError("at least one party is required")
        if any(d < 2 for d in dims):
            raise StructureError(f"every party dimension must be >= 2, got {dims}")
        object.__setattr__(self, "party_dims", dims)

    @property
    def total_dim(self) -> int:
        return prod(self.party_dims)

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    def check_parties(self, parties: Iterable[int]) -> tuple[int, ...]:
        """Return sorted unique party indices, rejecting out-of-range ones."""
        out = tuple(sorted({int(p) for p in parties}))
        for p in out:
            if not 0 <= p < self.n_parties:
                raise StructureError(f"party index {p} out of range for {self.n_parties} parties")
        return out

    def complement(self, parties: Iterable[int]) -> tuple[int, ...]:
        keep = set(self.check_parties(parties))
        return tuple(p for p in range(self.n_parties) if p not in keep)

    def sub(self, parties: Sequence[int]) -> "HilbertStructure":
        return HilbertStructure(tuple(self.party_dims[p] for p in parties))


def as_structure(dims) -> HilbertStructure:
    if isinstance(dims, HilbertStructure):
        return dims
    if isinstance(dims, (int, np.integer)):
        return HilbertStructure((int(dims),))
    return HilbertStructure(tuple(dims))


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    structure: HilbertStructure

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        structure = as_structure(self.structure)
        object.__setattr__(self, "structure", structure)
        if amps.size != structure.total_dim:
            raise StructureError(
                f"state has {amps.size} amplitudes but structure {structure.party_dims} needs {structure.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized (norm = {norm!r})")

    @classmethod
    def normalized(cls, amplitudes, structure) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(amps / norm, structure)

    @classmethod
    def basis(cls, structure, index) -> "StateVector":
        """Computational basis state; ``index`` is flat or one digit per party."""
        structure = as_structure(structure)
        if np.ndim(index) > 0:
            index = int(np.ravel_multi_index(tuple(index), structure.party_dims))
        amps = np.zeros(structure.total_dim, dtype=complex)
        amps[int(index)] = 1.0
        return cls(amps, structure)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.structure.party_dims)

    def projector(self) -> "HermitianOperator":
        return HermitianOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.structure)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _hermitian_scale(m: np.ndarray) -> float:
    return max(1.0, float(np.abs(m).max(initial=0.0)))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix with a lazily cached eigensystem.

    Deviations from hermiticity below ``HERMITIAN_TOL`` (relative to the
    largest entry when that exceeds one) are removed by symmetrizing; larger
    deviations raise.
    """

    matrix: np.ndarray
    structure: HilbertStructure

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        structure = as_structure(self.structure)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructureError(f"operator must be square, got shape {m.shape}")
        if m.shape[0] != structure.total_dim:
            raise StructureError(
                f"operator of size {m.shape[0]} does not match structure {structure.party_dims}"
            )
        dev = float(np.abs(m - m.conj().T).max(initial=0.0))
        if dev > HERMITIAN_TOL * _hermitian_scale(m):
            raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3e})")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "structure", structure)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        evals, evecs = np.linalg.eigh(self.matrix)
        evals.setflags(write=False)
        evecs.setflags(write=False)
        return evals, evecs

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem[0]

    def spectral_norm(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    def apply(self, psi: StateVector | np.ndarray) -> np.ndarray:
        vec = psi.amplitudes if isinstance(psi, StateVector) else psi
        return self.matrix @ vec

    def expectation(self, psi: StateVector) -> float:
        return float(np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes).real)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    structure = HilbertStructure(a.structure.party_dims + b.structure.party_dims)
    return StateVector.normalized(np.kron(a.amplitudes, b.amplitudes), structure)


def operator_kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def check_density_matrix(rho: HermitianOperator, trace_tol: float = 1e-10) -> np.ndarray:
    """Validate unit trace and PSD; return eigenvalues clipped at zero."""
    tr = float(np.trace(rho.matrix).real)
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"density matrix has trace {tr!r}, expected 1")
    evals = rho.eigenvalues
    if evals[0] < -PSD_TOL:
        raise ValidationError(f"density matrix has negative eigenvalue {evals[0]!r}")
    return np.clip(evals, 0.0, None)


def partial_trace(rho: HermitianOperator, keep: Iterable[int]) -> HermitianOperator:
    """Reduced density matrix on the parties in ``keep`` (returned in ascending order)."""
    structure = rho.structure
    keep = structure.check_parties(keep)
    if not keep:
        raise StructureError("keep must name at least one party")
    check_density_matrix(rho)
    traced = structure.complement(keep)
    dims = structure.party_dims
    t = rho.matrix.reshape(dims + dims)
    # trace out one party at a time, highest index first so axes stay valid
    for p in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=p, axis2=p + m)
    d_keep = prod(dims[p] for p in keep)
    return HermitianOperator(t.reshape(d_keep, d_keep), structure.sub(keep))


def bipartite_matrix(psi: StateVector, keep: Iterable[int]) -> np.ndarray:
    """Reshape a pure state into a (d_keep, d_rest) coefficient matrix."""
    structure = psi.structure
    keep = structure.check_parties(keep)
    rest = structure.complement(keep)
    if not keep or not rest:
        raise StructureError("cut must be a nonempty proper subset of the parties")
    t = psi.tensor().transpose(keep + rest)
    d_keep = prod(structure.party_dims[p] for p in keep)
    return t.reshape(d_keep, -1)


def reduced_density(psi: StateVector, keep: Iterable[int]) -> HermitianOperator:
    """Reduced state of a pure state, computed directly from the amplitudes."""
    keep = psi.structure.check_parties(keep)
    if len(keep) == psi.structure.n_parties:
        return psi.projector()
    m = bipartite_matrix(psi, keep)
    return HermitianOperator(m @ m.conj().T, psi.structure.sub(keep))


def eigendecompose(op: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    return op.eigensystem


def _coefficients(H: HermitianOperator, psi0: StateVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if psi0.dim != H.dim:
        raise StructureError(f"state dimension {psi0.dim} does not match operator dimension {H.dim}")
    evals, evecs = H.eigensystem
    return evals, evecs, evecs.conj().T @ psi0.amplitudes


def evolve(H: HermitianOperator, psi0: StateVector, t: float) -> StateVector:
    """exp(-iHt) psi0 via the spectral decomposition of H."""
    if t == 0:
        return psi0
    evals, evecs, c = _coefficients(H, psi0)
    out = evecs @ (np.exp(-1j * evals * t) * c)
    return StateVector(out / np.linalg.norm(out), psi0.structure)


def evolve_many(H: HermitianOperator, psi0: StateVector, times) -> np.ndarray:
    """Evolved amplitudes on a time grid as an array of shape (len(times), dim)."""
    times = np.asarray(times, dtype=float).reshape(-1)
    evals, evecs, c = _coefficients(H, psi0)
    phases = np.exp(-1j * np.outer(times, evals))
    return (phases * c) @ evecs.T


@dataclass(frozen=True, eq=False)
class SchmidtData:
    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cut: tuple[int, ...] = field(default=())

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients > 1e-14))


def schmidt(psi: StateVector, cut: Iterable[int]) -> SchmidtData:
    """Schmidt decomposition across ``cut`` versus the remaining parties.

    Columns of ``left`` and rows of ``right`` are the Schmidt vectors, so
    ``left @ diag(coefficients) @ right`` reproduces the coefficient matrix.
    """
    cut = psi.structure.check_parties(cut)
    m = bipartite_matrix(psi, cut)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtData(coefficients=s, left=u, right=vh, cut=cut)
