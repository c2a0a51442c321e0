"""Executable checkers for the entanglement/IPR bounds and the low-dimensional
closed forms relating energy-basis coherence to spread complexity.

Energy levels are indexed 0, 1, 2 throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .krylov import (
    DEFAULT_TOL,
    KrylovBasis,
    amplitudes_full_space,
    build_krylov,
    inverse_participation_ratio,
    spread_complexity,
)
from .measures import (
    GM_MAX_SWEEPS,
    GM_RESTARTS,
    GM_TOL,
    entropy_of_spectrum,
    geometric_measure,
)
from .tensor import (
    HermitianOperator,
    StateVector,
    StructureError,
    ValidationError,
    bipartite_matrix,
    evolve_many,
)

VIOLATION_TOL = 1e-9
OMEGA_SIGN_CONVENTIONS = ("as-printed", "flipped")
# chosen because it reproduces the Lanczos |phi_2|^2; see resolve_omega_sign
OMEGA_SIGN_DEFAULT = "flipped"
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Per-time record of an inequality lhs <= rhs (and rhs_lower <= lhs when two-sided)."""

    name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    condition_flags: np.ndarray
    rhs_lower: np.ndarray | None = None
    extras: dict = field(default_factory=dict)
    tol: float = VIOLATION_TOL

    @property
    def slack(self) -> np.ndarray:
        upper = self.rhs - self.lhs
        if self.rhs_lower is None:
            return upper
        return np.minimum(upper, self.lhs - self.rhs_lower)

    @property
    def violations(self) -> int:
        s = self.slack
        return int(np.count_nonzero(self.condition_flags & ~(s >= -self.tol)))

    @property
    def satisfied(self) -> bool:
        return self.violations == 0

    @property
    def min_slack(self) -> float:
        s = self.slack[self.condition_flags]
        return float(s.min()) if s.size else float("nan")


class ClosedForm(NamedTuple):
    values: np.ndarray
    degenerate: bool
    convention: str | None = None


# --- maximum-entropy distribution at fixed mean -------------------------------------------


def f_of_K(K):
    """(1+K) ln(1+K) - K ln K, with f(0) = 0."""
    k = np.asarray(K, dtype=float)
    if np.any(k < 0):
        raise ValidationError("spread complexity must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        klogk = np.where(k > 0, k * np.log(np.where(k > 0, k, 1.0)), 0.0)
    out = (1 + k) * np.log1p(k) - klogk
    return float(out) if out.ndim == 0 else out


def _truncated_geometric(log_r: float, n_terms: int) -> np.ndarray:
    n = np.arange(n_terms, dtype=float)
    w = n * log_r
    w = np.exp(w - w.max())
    return w / w.sum()


def max_entropy_distribution(K: float, n_terms: int = 200) -> np.ndarray:
    """Maximum-entropy distribution on {0, ..., n_terms-1} with mean K.

    The maximizer is geometric, p_n proportional to r^n; for finite support the
    ratio is solved so that the mean is exactly K, which tends to
    r = K/(1+K) as n_terms grows.
    """
    if K < 0:
        raise ValidationError("mean must be nonnegative")
    if n_terms < 1:
        raise ValueError("n_terms must be positive")
    if K == 0:
        p = np.zeros(n_terms)
        p[0] = 1.0
        return p
    if K >= n_terms - 1:
        raise ValidationError(f"mean {K} is not attainable on {n_terms} outcomes")
    n = np.arange(n_terms, dtype=float)

    def excess(log_r):
        return _truncated_geometric(log_r, n_terms) @ n - K

    lo, hi = -1.0, 1.0
    while excess(lo) > 0:
        lo *= 2
    while excess(hi) < 0:
        hi *= 2
    log_r = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _truncated_geometric(log_r, n_terms)


# --- entropy / spread-complexity bound ------------------------------------------------------


def _resolve_cut(structure, cut) -> tuple[int, ...]:
    if cut is None:
        if structure.n_parties != 2:
            raise StructureError("a cut must be given unless the system has exactly two parties")
        return (0,)
    cut = structure.check_parties(cut)
    if not cut or len(cut) == structure.n_parties:
        raise StructureError("cut must be a nonempty proper subset of the parties")
    return cut


def _reduced_spectra(vectors: np.ndarray, structure, cut) -> np.ndarray:
    """Eigenvalues of the reduced states of many pure states (rows of ``vectors``)."""
    mats = np.stack([bipartite_matrix(StateVector.normalized(v, structure), cut) for v in vectors])
    rhos = mats @ mats.conj().transpose(0, 2, 1)
    return np.linalg.eigvalsh(rhos)


def check_entropy_spread_bound(
    H: HermitianOperator,
    psi0: StateVector,
    cut=None,
    times=None,
    basis: KrylovBasis | None = None,
    tol: float = DEFAULT_TOL,
) -> BoundReport:
    """S(rho_A(t)) <= d_K [sum_n |phi_n|^2 S(rho_A^(n)) + f(K(t))]."""
    cut = _resolve_cut(psi0.structure, cut)
    times = np.asarray(times if times is not None else [0.0], dtype=float)
    basis = basis or build_krylov(H, psi0, tol)
    traj = amplitudes_full_space(basis, H, psi0, times)
    p = traj.probabilities
    s_krylov = entropy_of_spectrum(_reduced_spectra(basis.vectors.T, psi0.structure, cut))
    psi_t = evolve_many(H, psi0, times)
    lhs = entropy_of_spectrum(_reduced_spectra(psi_t, psi0.structure, cut))
    K = np.clip(spread_complexity(traj), 0.0, None)
    rhs = basis.dim_k * (p @ s_krylov + f_of_K(K))
    return BoundReport(
        name="prop1",
        times=times,
        lhs=lhs,
        rhs=np.atleast_1d(rhs),
        condition_flags=np.ones(times.size, dtype=bool),
        extras={"spread": K, "krylov_entropies": s_krylov, "dim_k": basis.dim_k},
    )


# --- IPR bounds through geometric measures --------------------------------------------------


def ipr_bounds_from_gm(g_psi, x):
    """Lower and upper IPR bounds (1 -/+ sqrt(1 - (G - X)^2)) / 2; NaN where (G - X)^2 > 1."""
    d = np.asarray(g_psi, dtype=float) - np.asarray(x, dtype=float)
    disc = 1.0 - d**2
    root = np.sqrt(np.where(disc >= 0, disc, np.nan))
    return (1 - root) / 2, (1 + root) / 2


def _gm_kwargs(gm_options: dict | None) -> tuple[str, dict]:
    opts = {"kind": "product", "restarts": GM_RESTARTS, "tol": GM_TOL, "max_sweeps": GM_MAX_SWEEPS, "seed": 0}
    opts.update(gm_options or {})
    kind = opts.pop("kind")
    return kind, ({} if kind == "ggm" else opts)


def check_ipr_gm_bounds(
    H: HermitianOperator,
    psi0: StateVector,
    times=None,
    gm_options: dict | None = None,
    basis: KrylovBasis | None = None,
    tol: float = DEFAULT_TOL,
) -> BoundReport:
    """Two-sided IPR bound in terms of G_psi and X = sum_n |phi_n|^4 G_{k_n}.

    Points with G_psi - X outside [0, 1] are flagged off and never counted as
    violations; negative differences leave the lower bound vacuous.
    """
    if psi0.structure.n_parties < 3:
        raise StructureError("IPR/geometric-measure bounds need at least three parties")
    kind, kw = _gm_kwargs(gm_options)
    times = np.asarray(times if times is not None else [0.0], dtype=float)
    basis = basis or build_krylov(H, psi0, tol)
    traj = amplitudes_full_space(basis, H, psi0, times)
    g_krylov = np.array([geometric_measure(k, kind, **kw).value for k in basis.states()])
    psi_t = evolve_many(H, psi0, times)
    g_psi = np.array(
        [geometric_measure(StateVector.normalized(v, psi0.structure), kind, **kw).value for v in psi_t]
    )
    p = traj.probabilities
    x = (p**2) @ g_krylov
    ipr = inverse_participation_ratio(traj)
    d = g_psi - x
    flags = (d >= 0) & (d <= 1)
    lower, upper = ipr_bounds_from_gm(g_psi, x)
    return BoundReport(
        name="prop2",
        times=times,
        lhs=ipr,
        rhs=upper,
        rhs_lower=lower,
        condition_flags=flags,
        extras={"g_psi": g_psi, "x": x, "krylov_gm": g_krylov, "measure": kind, "dim_k": basis.dim_k},
    )


def upper_bound_tighter_than_trivial(report: BoundReport, threshold: float = 1e-8) -> bool:
    """At flagged points with (G - X)^2 > threshold the upper IPR bound is strictly below 1."""
    d2 = (report.extras["g_psi"] - report.extras["x"]) ** 2
    mask = report.condition_flags & (d2 > threshold)
    return bool(np.all(report.rhs[mask] < 1.0))


def gm_superposition_upper_bound(coeffs, gm_values) -> float:
    """min_m {1 - [|c_m| sqrt(1 - G_m) - sqrt(1 - |c_m|^2)]^2}, clipped to [0, 1]."""
    c = np.abs(np.asarray(coeffs, dtype=complex))
    g = np.asarray(gm_values, dtype=float)
    if c.shape != g.shape:
        raise StructureError("one geometric measure per coefficient is required")
    if abs((c**2).sum() - 1.0) > 1e-10:
        raise ValidationError("coefficients must be normalized")
    if np.any((g < 0) | (g > 1)):
        raise ValidationError("geometric measures must lie in [0, 1]")
    a = 1.0 - (c * np.sqrt(1.0 - g) - np.sqrt(np.clip(1.0 - c**2, 0.0, None))) ** 2
    return float(np.clip(a.min(), 0.0, 1.0))


def gm_superposition_lower_bound(coeffs, gm_values) -> float:
    """1 - (sum_n |c_n| sqrt(1 - G_n))^2, clipped to [0, 1]."""
    c = np.abs(np.asarray(coeffs, dtype=complex))
    g = np.asarray(gm_values, dtype=float)
    return float(np.clip(1.0 - (c @ np.sqrt(1.0 - g)) ** 2, 0.0, 1.0))


# --- qubit and qutrit closed forms ----------------------------------------------------------


def qubit_spread_closed_form(E0: float, E1: float, c0, c1, times) -> ClosedForm:
    """K(t) = C_l1^2 sin^2(omega t / 2) with C_l1 = 2 |c0| |c1| and omega = E1 - E0."""
    p0, p1 = abs(c0) ** 2, abs(c1) ** 2
    if abs(p0 + p1 - 1.0) > 1e-12:
        raise ValidationError("qubit amplitudes must be normalized")
    times = np.asarray(times, dtype=float)
    omega = E1 - E0
    if abs(omega) <= DEGENERACY_TOL * max(1.0, abs(E0), abs(E1)):
        return ClosedForm(np.zeros_like(times), True)
    return ClosedForm(4 * p0 * p1 * np.sin(omega * times / 2) ** 2, False)


@dataclass(frozen=True, eq=False)
class QutritClosedFormInputs:
    """Energies and real amplitudes of a qutrit in its energy eigenbasis."""

    energies: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).reshape(3)
        c = np.asarray(self.amplitudes)
        if np.iscomplexobj(c):
            if np.abs(c.imag).max() > 0:
                raise ValidationError("amplitudes must be real; rephase the eigenvectors first")
            c = c.real
        c = c.astype(float).reshape(3)
        if abs((c**2).sum() - 1.0) > 1e-12:
            raise ValidationError("squared amplitudes must sum to 1")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "amplitudes", c)

    @classmethod
    def from_operator(cls, H: HermitianOperator, psi0: StateVector) -> "QutritClosedFormInputs":
        """Energy-basis data for any 3-level (H, psi0); eigenvector phases absorb the amplitude phases."""
        if H.dim != 3:
            raise StructureError("qutrit closed form needs a 3-dimensional Hilbert space")
        evals, evecs = H.eigensystem
        c = np.abs(evecs.conj().T @ psi0.amplitudes)
        return cls(evals, c / np.linalg.norm(c))

    @property
    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2

    @property
    def gaps(self) -> np.ndarray:
        """gaps[i, j] = E_i - E_j."""
        return self.energies[:, None] - self.energies[None, :]

    @property
    def coherences(self) -> np.ndarray:
        c = np.abs(self.amplitudes)
        return np.outer(c, c)

    @property
    def a0(self) -> float:
        return float(self.probabilities @ self.energies)

    @property
    def b1_squared(self) -> float:
        w, C = self.gaps, self.coherences
        return float(sum(C[i, j] ** 2 * w[i, j] ** 2 for i, j in ((0, 1), (0, 2), (1, 2))))

    @property
    def shifted_energies(self) -> np.ndarray:
        return self.energies - self.a0

    @property
    def third_vector_raw(self) -> np.ndarray:
        return np.cross(self.amplitudes, self.amplitudes * self.shifted_energies)

    @property
    def normalization(self) -> float:
        """N such that N * third_vector_raw is a unit vector (inf when it vanishes)."""
        n = np.linalg.norm(self.third_vector_raw)
        return float(1.0 / n) if n > 0 else float("inf")

    @property
    def third_vector(self) -> np.ndarray:
        return self.third_vector_raw * self.normalization

    @property
    def degenerate(self) -> bool:
        e = np.sort(self.energies)
        scale = max(1.0, float(np.abs(e).max()))
        return bool(np.any(np.diff(e) <= DEGENERACY_TOL * scale))


def _half_angle_terms(inputs: QutritClosedFormInputs, times: np.ndarray, i: int, j: int) -> np.ndarray:
    E, w = inputs.energies, inputs.gaps
    return np.sin(w[i, j] * times / 2) * np.exp(-0.5j * (E[i] + E[j]) * times)


def qutrit_phi1_squared(inputs: QutritClosedFormInputs, times) -> np.ndarray:
    """(4 / b1^2) |sum_{i<j} C_ij^2 w_ij sin(w_ij t/2) e^{-i(E_i+E_j)t/2}|^2."""
    times = np.asarray(times, dtype=float)
    b1sq = inputs.b1_squared
    if b1sq == 0:
        return np.zeros_like(times)
    C, w = inputs.coherences, inputs.gaps
    s = sum(C[i, j] ** 2 * w[i, j] * _half_angle_terms(inputs, times, i, j) for i, j in ((0, 1), (0, 2), (1, 2)))
    return 4.0 / b1sq * np.abs(s) ** 2


def omega_term(inputs: QutritClosedFormInputs, times, sign_convention: str = OMEGA_SIGN_DEFAULT) -> np.ndarray:
    """w_12 e^{-i(E_0+E_1)t/2} sin(w_01 t/2) +/- w_01 e^{-i(E_1+E_2)t/2} sin(w_12 t/2)."""
    if sign_convention not in OMEGA_SIGN_CONVENTIONS:
        raise ValueError(f"sign_convention must be one of {OMEGA_SIGN_CONVENTIONS}")
    times = np.asarray(times, dtype=float)
    w = inputs.gaps
    sign = 1.0 if sign_convention == "as-printed" else -1.0
    return w[1, 2] * _half_angle_terms(inputs, times, 0, 1) + sign * w[0, 1] * _half_angle_terms(inputs, times, 1, 2)


def qutrit_phi2_squared(inputs: QutritClosedFormInputs, times, sign_convention: str = OMEGA_SIGN_DEFAULT) -> np.ndarray:
    """4 N^2 C_01 C_12 C_20 |Omega|^2."""
    times = np.asarray(times, dtype=float)
    C = inputs.coherences
    triple = C[0, 1] * C[1, 2] * C[2, 0]
    if triple == 0:
        return np.zeros_like(times)
    n2 = inputs.normalization**2
    return 4.0 * n2 * triple * np.abs(omega_term(inputs, times, sign_convention)) ** 2


def _merged_levels(inputs: QutritClosedFormInputs) -> tuple[np.ndarray, np.ndarray]:
    """Distinct occupied energies and their total weights."""
    scale = max(1.0, float(np.abs(inputs.energies).max()))
    levels: list[float] = []
    weights: list[float] = []
    for E, p in sorted(zip(inputs.energies, inputs.probabilities)):
        if levels and abs(E - levels[-1]) <= DEGENERACY_TOL * scale:
            weights[-1] += p
        else:
            levels.append(E)
            weights.append(p)
    keep = np.array(weights) > 0
    return np.array(levels)[keep], np.array(weights)[keep]


def qutrit_spread_closed_form(
    inputs: QutritClosedFormInputs, times, sign_convention: str = OMEGA_SIGN_DEFAULT
) -> ClosedForm:
    """K(t) = |phi_1|^2 + 2 |phi_2|^2 from energy gaps and pairwise coherences.

    Degenerate spectra have at most two distinct occupied levels and fall back
    to the qubit expression on the merged levels.
    """
    times = np.asarray(times, dtype=float)
    if inputs.degenerate:
        levels, weights = _merged_levels(inputs)
        if levels.size < 2:
            return ClosedForm(np.zeros_like(times), True, sign_convention)
        form = qubit_spread_closed_form(levels[0], levels[1], np.sqrt(weights[0]), np.sqrt(weights[1]), times)
        return ClosedForm(form.values, True, sign_convention)
    k = qutrit_phi1_squared(inputs, times) + 2.0 * qutrit_phi2_squared(inputs, times, sign_convention)
    return ClosedForm(k, False, sign_convention)


def _pipeline_probabilities(H: HermitianOperator, psi0: StateVector, times) -> tuple[KrylovBasis, np.ndarray]:
    basis = build_krylov(H, psi0)
    return basis, amplitudes_full_space(basis, H, psi0, times).probabilities


def resolve_omega_sign(inputs: QutritClosedFormInputs, times) -> tuple[str, dict[str, float]]:
    """Pick the Omega sign convention whose |phi_2|^2 matches the Lanczos pipeline.

    Returns the convention and the max abs deviation of each candidate.
    """
    if inputs.degenerate or inputs.coherences[0, 1] * inputs.coherences[1, 2] * inputs.coherences[0, 2] == 0:
        raise ValidationError("sign resolution needs a nondegenerate instance with all three levels occupied")
    H = HermitianOperator(np.diag(inputs.energies), (3,))
    psi0 = StateVector(inputs.amplitudes, (3,))
    basis, p = _pipeline_probabilities(H, psi0, times)
    if basis.dim_k < 3:
        raise ValidationError("Krylov space did not reach dimension 3")
    deviations = {
        conv: float(np.abs(qutrit_phi2_squared(inputs, times, conv) - p[:, 2]).max())
        for conv in OMEGA_SIGN_CONVENTIONS
    }
    return min(deviations, key=deviations.get), deviations


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Closed form versus the Lanczos pipeline on a time grid."""

    name: str
    times: np.ndarray
    pipeline: np.ndarray
    closed_form: np.ndarray
    tol: float
    extras: dict = field(default_factory=dict)

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.pipeline - self.closed_form)

    @property
    def max_abs_deviation(self) -> float:
        return float(self.deviation.max(initial=0.0))

    @property
    def violations(self) -> int:
        return int(np.count_nonzero(~(self.deviation <= self.tol)))

    @property
    def satisfied(self) -> bool:
        return self.violations == 0


def compare_qubit_closed_form(H: HermitianOperator, psi0: StateVector, times, tol: float = 1e-10) -> ComparisonReport:
    if H.dim != 2:
        raise StructureError("qubit closed form needs a 2-dimensional Hilbert space")
    times = np.asarray(times, dtype=float)
    evals, evecs = H.eigensystem
    c = evecs.conj().T @ psi0.amplitudes
    closed = qubit_spread_closed_form(evals[0], evals[1], c[0], c[1], times)
    _, p = _pipeline_probabilities(H, psi0, times)
    return ComparisonReport(
        "prop3", times, spread_complexity(p), closed.values, tol,
        {"l1_coherence": 2 * abs(c[0]) * abs(c[1]), "omega": evals[1] - evals[0], "degenerate": closed.degenerate},
    )


def compare_qutrit_closed_form(
    H: HermitianOperator, psi0: StateVector, times, tol: float = 1e-8, sign_convention: str = OMEGA_SIGN_DEFAULT
) -> ComparisonReport:
    inputs = QutritClosedFormInputs.from_operator(H, psi0)
    times = np.asarray(times, dtype=float)
    closed = qutrit_spread_closed_form(inputs, times, sign_convention)
    _, p = _pipeline_probabilities(H, psi0, times)
    extras = {"sign_convention": sign_convention, "degenerate": closed.degenerate}
    if p.shape[1] > 1 and not closed.degenerate:
        extras["phi1_max_abs_deviation"] = float(np.abs(qutrit_phi1_squared(inputs, times) - p[:, 1]).max())
    return ComparisonReport("prop4", times, spread_complexity(p), closed.values, tol, extras)


# --- short-time law -------------------------------------------------------------------------


@dataclass(frozen=True)
class ShortTimeReport:
    trivial: bool
    alpha: float
    b1_squared: float
    relative_deviation: float
    ratio_at_smallest: float
    relative_deviation_at_smallest: float


def short_time_check(H: HermitianOperator, psi0: StateVector, t_grid_small=None, n_points: int = 25) -> ShortTimeReport:
    """Least-squares fit of K(t) = alpha t^2 at small t, compared with b_1^2."""
    basis = build_krylov(H, psi0)
    if basis.dim_k == 1:
        return ShortTimeReport(True, 0.0, 0.0, 0.0, 0.0, 0.0)
    if t_grid_small is None:
        t_grid_small = np.logspace(-4, -2, n_points) / H.spectral_norm()
    t = np.asarray(t_grid_small, dtype=float)
    K = spread_complexity(amplitudes_full_space(basis, H, psi0, t))
    alpha = float((K * t**2).sum() / (t**4).sum())
    b1sq = float(basis.b_coeffs[0] ** 2)
    i0 = int(np.argmin(t))
    ratio = float(K[i0] / t[i0] ** 2)
    return ShortTimeReport(False, alpha, b1sq, abs(alpha - b1sq) / b1sq, ratio, abs(ratio - b1sq) / b1sq)
