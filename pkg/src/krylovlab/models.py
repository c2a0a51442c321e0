"""Seeded generators for Hamiltonians and initial states.

Random streams come from numpy's Philox4x64-10 counter-based bit generator
keyed directly by the 64-bit seed, so a (kind, params, seed) triple always
reproduces the same instance bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .tensor import (
    HermitianOperator,
    HilbertStructure,
    StateVector,
    StructureError,
    ValidationError,
    as_structure,
    operator_kron,
)

KINDS = ("gue", "diagonal-nondegenerate", "spin-chain-ising", "spin-chain-xy", "cavity-truncated")
SEED_MASK = (1 << 64) - 1

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & SEED_MASK))


def derive_seed(master: int, index: int) -> int:
    """Deterministic 64-bit sub-seed for instance ``index`` of an ensemble."""
    ss = np.random.SeedSequence([int(master) & SEED_MASK, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _complex_gaussian(rng: np.random.Generator, size) -> np.ndarray:
    # unit variance: E|z|^2 = 1
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def random_gue(dim: int, seed: int, structure=None) -> HermitianOperator:
    if dim < 2:
        raise ValidationError("GUE dimension must be at least 2")
    a = _complex_gaussian(rng_for(seed), (dim, dim))
    return HermitianOperator((a + a.conj().T) / 2, structure if structure is not None else (dim,))


def random_haar_state(structure, seed: int) -> StateVector:
    structure = as_structure(structure)
    v = _complex_gaussian(rng_for(seed), structure.total_dim)
    return StateVector(v / np.linalg.norm(v), structure)


def _site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    return operator_kron(*(op if k == site else np.eye(2) for k in range(n_sites)))


def _bond_values(value, n_bonds: int) -> np.ndarray:
    vals = np.broadcast_to(np.asarray(value, dtype=float), (n_bonds,))
    return np.array(vals)


def spin_chain(kind: str, n_sites: int, couplings=1.0, field=0.0) -> HermitianOperator:
    """Open-boundary spin-1/2 chains.

    ising: sum_i J_i Z_i Z_{i+1} + sum_i h_i X_i
    xy:    sum_i J_i (X_i X_{i+1} + Y_i Y_{i+1}) / 2
    ``couplings`` and ``field`` may be scalars or per-bond / per-site lists.
    """
    if not 2 <= n_sites <= 12:
        raise ValidationError(f"n_sites must lie in [2, 12], got {n_sites}")
    kind = kind.removeprefix("spin-chain-")
    dim = 2**n_sites
    J = _bond_values(couplings, n_sites - 1)
    h = np.zeros((dim, dim), dtype=complex)
    if kind == "ising":
        hx = _bond_values(field, n_sites)
        for i in range(n_sites - 1):
            h += J[i] * _site_operator(PAULI_Z, i, n_sites) @ _site_operator(PAULI_Z, i + 1, n_sites)
        for i in range(n_sites):
            h += hx[i] * _site_operator(PAULI_X, i, n_sites)
    elif kind == "xy":
        for i in range(n_sites - 1):
            for p in (PAULI_X, PAULI_Y):
                h += 0.5 * J[i] * _site_operator(p, i, n_sites) @ _site_operator(p, i + 1, n_sites)
    else:
        raise ValueError(f"unknown spin chain kind {kind!r}")
    return HermitianOperator(h, (2,) * n_sites)


def jaynes_cummings(cutoff: int, g: float = 1.0, omega_q: float = 0.0, omega_c: float = 0.0) -> HermitianOperator:
    """Qubit (x) boson truncated at ``cutoff`` photons.

    H = g (s+ b + s- b^dag) + omega_q |1><1| + omega_c b^dag b with s+ = |1><0|.
    """
    if cutoff < 1:
        raise ValidationError("photon cutoff must be at least 1")
    nb = cutoff + 1
    b = np.diag(np.sqrt(np.arange(1, nb)), 1).astype(complex)
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    h = g * (np.kron(sp, b) + np.kron(sp.conj().T, b.conj().T))
    h += omega_q * np.kron(np.diag([0.0, 1.0]), np.eye(nb))
    h += omega_c * np.kron(np.eye(2), b.conj().T @ b)
    return HermitianOperator(h, (2, nb))


def qutrit_from_coherences(c0, c1, c2, E0, E1, E2) -> tuple[HermitianOperator, StateVector, bool]:
    """Diagonal qutrit Hamiltonian and real superposition; third item flags degeneracy."""
    c = np.array([c0, c1, c2], dtype=float)
    if abs((c**2).sum() - 1.0) > 1e-12:
        raise ValidationError("squared amplitudes must sum to 1")
    energies = np.array([E0, E1, E2], dtype=float)
    degenerate = len(np.unique(energies)) < 3
    return HermitianOperator(np.diag(energies), (3,)), StateVector(c, (3,)), degenerate


def _initial_state(spec: dict | None, structure: HilbertStructure, seed: int) -> StateVector:
    spec = dict(spec or {"kind": "haar"})
    kind = spec.get("kind", "haar")
    if kind == "haar":
        return random_haar_state(structure, seed)
    if kind == "basis":
        return StateVector.basis(structure, spec.get("index", 0))
    if kind == "amplitudes":
        re = np.asarray(spec["re"], dtype=float)
        im = np.asarray(spec.get("im", np.zeros_like(re)), dtype=float)
        return StateVector.normalized(re + 1j * im, structure)
    raise ValueError(f"unknown initial state kind {kind!r}")


@dataclass(frozen=True)
class EnsembleSpec:
    """A model family, its parameters, and the seed that pins the random parts.

    ``params["initial"]`` selects the initial state: {"kind": "haar"},
    {"kind": "basis", "index": ...} or {"kind": "amplitudes", "re": [...], "im": [...]}.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")

    @property
    def structure(self) -> HilbertStructure:
        p = self.params
        if self.kind == "gue":
            return as_structure(p.get("dims", [2, 2]))
        if self.kind == "diagonal-nondegenerate":
            if "energies" in p:
                return as_structure(len(p["energies"]))
            return as_structure(p.get("dims", [2]))
        if self.kind.startswith("spin-chain"):
            return HilbertStructure((2,) * int(p.get("n_sites", 2)))
        return HilbertStructure((2, int(p.get("cutoff", 2)) + 1))

    def hamiltonian(self) -> HermitianOperator:
        p = self.params
        structure = self.structure
        if self.kind == "gue":
            return random_gue(structure.total_dim, derive_seed(self.seed, 0), structure)
        if self.kind == "diagonal-nondegenerate":
            if "energies" in p:
                energies = np.asarray(p["energies"], dtype=float)
            else:
                energies = np.sort(rng_for(derive_seed(self.seed, 0)).uniform(-1, 1, structure.total_dim))
            return HermitianOperator(np.diag(energies), structure)
        if self.kind.startswith("spin-chain"):
            return spin_chain(self.kind, int(p.get("n_sites", 2)), p.get("J", 1.0), p.get("h", 0.0))
        return jaynes_cummings(int(p.get("cutoff", 2)), p.get("g", 1.0), p.get("omega_q", 0.0), p.get("omega_c", 0.0))

    def initial_state(self) -> StateVector:
        return _initial_state(self.params.get("initial"), self.structure, derive_seed(self.seed, 1))

    def generate(self) -> tuple[HermitianOperator, StateVector]:
        return self.hamiltonian(), self.initial_state()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        unknown = set(d) - {"kind", "params", "seed"}
        if unknown:
            raise StructureError(f"unknown model fields {sorted(unknown)}")
        return cls(kind=d["kind"], params=dict(d.get("params", {})), seed=int(d.get("seed", 0)))
