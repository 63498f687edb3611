"""Local-measurement feasibility analysis for bipartite pure families.

Whether a product measurement (no classical communication) can reach the
quantum Fisher information is governed by two coefficient matrices: A for the
state and B for its orthogonal derivative component. A measurement pair is
encoded by isometries U (columns: vectors on subsystem 1) and V (columns:
conjugated vectors on subsystem 2); with C = U^dag A V and D = U^dag B V the
measurement saturates iff every C_ij conj(D_ij) is real (phase condition) and
D vanishes wherever C does (support condition).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import metrology
from .tensor import HilbertLayout, as_layout
from .zerodiag import simultaneous_zero_diag, zero_diag_basis

PHASE_TOL = 1e-8
SUPPORT_TOL = 1e-8
C_ZERO_REL = 1e-9       # |C_ij| below this (relative to max |C|) counts as zero


@dataclass
class BipartiteCoeffs:
    """Coefficient matrices of the state and its orthogonal derivative."""

    a_mat: np.ndarray
    b_mat: np.ndarray

    def __post_init__(self) -> None:
        self.a_mat = np.asarray(self.a_mat, dtype=complex)
        self.b_mat = np.asarray(self.b_mat, dtype=complex)
        if self.a_mat.shape != self.b_mat.shape or self.a_mat.ndim != 2:
            raise ValueError("coefficient matrices must share a 2-D shape")
        if abs(np.trace(self.a_mat.conj().T @ self.a_mat) - 1.0) > 1e-10:
            raise ValueError("state coefficients are not normalized")
        if abs(np.trace(self.a_mat.conj().T @ self.b_mat)) > 1e-9:
            raise ValueError("coefficient matrices are not orthogonal")


@dataclass
class IsometryPair:
    """Measurement pair (U, V) with U U^dag = I_d1 and V V^dag = I_d2."""

    u_mat: np.ndarray
    v_mat: np.ndarray

    def __post_init__(self) -> None:
        self.u_mat = np.asarray(self.u_mat, dtype=complex)
        self.v_mat = np.asarray(self.v_mat, dtype=complex)
        for name, m in (("U", self.u_mat), ("V", self.v_mat)):
            d, cols = m.shape
            if cols < d:
                raise ValueError(f"{name} must have at least as many columns as rows")
            if np.abs(m @ m.conj().T - np.eye(d)).max() > 1e-9:
                raise ValueError(f"{name} is not an isometry (rows not orthonormal)")

    @property
    def projective(self) -> bool:
        return self.u_mat.shape[0] == self.u_mat.shape[1] and \
            self.v_mat.shape[0] == self.v_mat.shape[1]

    def cd(self, coeffs: BipartiteCoeffs) -> tuple[np.ndarray, np.ndarray]:
        c = self.u_mat.conj().T @ coeffs.a_mat @ self.v_mat
        d = self.u_mat.conj().T @ coeffs.b_mat @ self.v_mat
        return c, d


@dataclass
class LmFeasibilityReport:
    phase_residual: float
    support_residual: float
    feasible: bool
    projective: bool

    def to_json(self) -> dict:
        return {
            "phase_residual": self.phase_residual,
            "support_residual": self.support_residual,
            "feasible": self.feasible,
            "projective": self.projective,
        }


def coefficient_matrices(psi: np.ndarray, psi_perp: np.ndarray,
                         layout: HilbertLayout) -> BipartiteCoeffs:
    """Reshape a bipartite state and its perpendicular derivative to matrices."""
    layout = as_layout(layout)
    if layout.nsub != 2:
        raise ValueError("coefficient matrices require a bipartite layout")
    d1, d2 = layout.dims
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi_perp = np.asarray(psi_perp, dtype=complex).reshape(-1)
    if psi.size != d1 * d2 or psi_perp.size != d1 * d2:
        raise ValueError("vector length does not match the layout")
    return BipartiteCoeffs(a_mat=psi.reshape(d1, d2), b_mat=psi_perp.reshape(d1, d2))


def check_lm_conditions(pair: IsometryPair, coeffs: BipartiteCoeffs,
                        phase_tol: float = PHASE_TOL,
                        support_tol: float = SUPPORT_TOL) -> LmFeasibilityReport:
    """Evaluate the phase and support conditions for a measurement pair."""
    c, d = pair.cd(coeffs)
    phase = float(np.abs(c * np.conj(d) - np.conj(c) * d).max())
    c_tol = C_ZERO_REL * max(float(np.abs(c).max()), 1e-300)
    zeros = np.abs(c) < c_tol
    support = float(np.abs(d)[zeros].max()) if zeros.any() else 0.0
    return LmFeasibilityReport(
        phase_residual=phase,
        support_residual=support,
        feasible=bool(phase <= phase_tol and support <= support_tol),
        projective=pair.projective,
    )


def construct_lm_2xd(coeffs: BipartiteCoeffs) -> IsometryPair:
    """Projective pair meeting the phase condition when subsystem 1 is a qubit.

    U zero-diagonalizes the 2x2 skew form A B^dag - B A^dag; with P_i the
    projectors onto U's columns, the two d x d targets B^dag P_i A -
    A^dag P_i B are then traceless and are simultaneously zero-diagonalized
    by V. The support condition is not guaranteed and is only reported.
    """
    a, b = coeffs.a_mat, coeffs.b_mat
    if a.shape[0] != 2:
        raise ValueError("construction requires subsystem 1 of dimension 2")
    skew = a @ b.conj().T - b @ a.conj().T
    u = zero_diag_basis(skew)
    targets = []
    for i in range(2):
        p = np.outer(u[:, i], u[:, i].conj())
        t = b.conj().T @ p @ a - a.conj().T @ p @ b
        if abs(np.trace(t)) > 1e-10 * max(1.0, float(np.linalg.norm(t))):
            raise RuntimeError("conditioned target lost tracelessness")
        targets.append(-1j * t)     # anti-Hermitian target over i gives a Hermitian pair
    v = simultaneous_zero_diag(targets[0], targets[1])
    return IsometryPair(u_mat=u, v_mat=v)


def lm_povm_from_pair(pair: IsometryPair) -> metrology.Povm:
    """Rank-one product POVM encoded by the pair.

    Columns of U are the subsystem-1 vectors and columns of V the conjugated
    subsystem-2 vectors; the row-orthonormality of U and V is exactly the
    completeness of the product elements.
    """
    u, v = pair.u_mat, pair.v_mat
    elements, labels = [], []
    for i in range(u.shape[1]):
        e1 = np.outer(u[:, i], u[:, i].conj())
        for j in range(v.shape[1]):
            w = np.conj(v[:, j])
            elements.append(np.kron(e1, np.outer(w, w.conj())))
            labels.append((i, j))
    povm = metrology.Povm(elements=elements, labels=labels)
    povm.validate(sum_tol=1e-8)
    return povm


@dataclass
class SearchReport:
    phase_residual: float
    support_residual: float
    feasible: bool
    projective: bool
    restarts: int
    note: str = ("heuristic local search: a negative outcome is evidence of "
                 "infeasibility, not a proof")

    def to_json(self) -> dict:
        return {
            "phase_residual": self.phase_residual,
            "support_residual": self.support_residual,
            "feasible": self.feasible,
            "projective": self.projective,
            "restarts": self.restarts,
            "note": self.note,
        }


def _herm_from_params(x: np.ndarray, d: int) -> np.ndarray:
    h = np.zeros((d, d), dtype=complex)
    diag, rest = x[:d], x[d:]
    h[np.diag_indices(d)] = diag
    iu = np.triu_indices(d, k=1)
    n_off = len(iu[0])
    h[iu] = rest[:n_off] + 1j * rest[n_off:]
    h[(iu[1], iu[0])] = np.conj(h[iu])
    return h


def _unitary_from_params(x: np.ndarray, d: int) -> np.ndarray:
    w, v = np.linalg.eigh(_herm_from_params(x, d))
    return (v * np.exp(1j * w)) @ v.conj().T


def heuristic_lm_search(coeffs: BipartiteCoeffs, restarts: int = 40,
                        iters: int = 300, allow_isometry_padding: bool = False,
                        seed: int = 0,
                        phase_tol: float = PHASE_TOL,
                        support_tol: float = SUPPORT_TOL
                        ) -> tuple[IsometryPair, SearchReport]:
    """Multi-start local search for a feasible measurement pair.

    Unitaries are parameterized as exponentials of Hermitian matrices; with
    padding enabled, V gains one extra column by taking the first d2 rows of
    a (d2+1)-dimensional unitary. Each restart minimizes the squared phase
    residual plus a narrowly weighted support penalty by damped least
    squares; the search stops early once a pair meets the tolerances and
    always returns the best pair found.
    """
    d1, d2 = coeffs.a_mat.shape
    m2 = d2 + 1 if allow_isometry_padding else d2
    n_u, n_v = d1 * d1, m2 * m2
    # Penalty window for "C entry is zero": narrow, so exact solutions with
    # small but genuinely nonzero C entries are not distorted.
    eps = 1e-3

    def build(x):
        u = _unitary_from_params(x[:n_u], d1)
        v = _unitary_from_params(x[n_u:], m2)[:d2, :]
        return u, v

    def resid_vec(x):
        u, v = build(x)
        c = u.conj().T @ coeffs.a_mat @ v
        d = u.conj().T @ coeffs.b_mat @ v
        weight = np.sqrt(np.exp(-np.abs(c) ** 2 / eps ** 2)).ravel()
        return np.concatenate([np.imag(np.conj(c) * d).ravel(),
                               weight * np.abs(d).ravel()])

    def score(pair):
        rep = check_lm_conditions(pair, coeffs, phase_tol, support_tol)
        return max(rep.phase_residual, rep.support_residual), rep

    rng = np.random.default_rng(seed)
    best_pair, best_rep, best_val = None, None, np.inf
    used = 0
    for _ in range(restarts):
        used += 1
        x0 = rng.standard_normal(n_u + n_v)
        sol = least_squares(resid_vec, x0, method="trf", max_nfev=iters,
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        pair = IsometryPair(*build(sol.x))
        val, rep = score(pair)
        if val < best_val:
            best_pair, best_rep, best_val = pair, rep, val
        if rep.feasible and val < 1e-10:
            break

    return best_pair, SearchReport(phase_residual=best_rep.phase_residual,
                                   support_residual=best_rep.support_residual,
                                   feasible=best_rep.feasible,
                                   projective=best_pair.projective,
                                   restarts=used)
