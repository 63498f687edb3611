"""Parameterized state families, Fisher information and saturation checking.

A state family maps a real parameter theta to a density matrix. Four kinds
are supported: pure states generated by exp(-i theta G), numerically
tabulated pure states, rank-two mixtures over a theta-independent basis, and
generic numeric mixed families. The module computes the symmetric logarithmic
derivative, quantum and classical Fisher information, the traceless target
matrices used by the measurement synthesis, and the full saturation check for
a POVM (zero-sandwich condition on every outcome plus the regularity
condition on zero-probability outcomes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .tensor import HilbertLayout, herm_eig, sqrt_psd

DEFAULT_RANK_TOL = 1e-9
DEFAULT_FD_STEP = 1e-4


def _unit(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state vector norm {nrm!r} is not 1")
    return vec


def _check_hermitian(m: np.ndarray, name: str, tol: float = 1e-10) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if np.abs(m - m.conj().T).max() > tol * max(1.0, np.abs(m).max()):
        raise ValueError(f"{name} is not Hermitian")
    return (m + m.conj().T) / 2


@dataclass
class UnitaryGeneratorFamily:
    """Pure family psi_theta = exp(-i theta G) psi_in with Hermitian G."""

    layout: HilbertLayout
    psi_in: np.ndarray
    generator: np.ndarray

    def __post_init__(self) -> None:
        self.psi_in = _unit(self.psi_in)
        self.generator = _check_hermitian(self.generator, "generator")
        d = self.layout.total
        if self.psi_in.shape != (d,) or self.generator.shape != (d, d):
            raise ValueError("psi_in / generator shapes do not match the layout")
        w, v = np.linalg.eigh(self.generator)
        self._gen_eigvals = w
        self._gen_eigvecs = v
        self._coeffs = v.conj().T @ self.psi_in

    state_type = "pure"

    def psi(self, theta: float) -> np.ndarray:
        return self._gen_eigvecs @ (np.exp(-1j * theta * self._gen_eigvals) * self._coeffs)

    def dpsi(self, theta: float) -> np.ndarray:
        return -1j * (self.generator @ self.psi(theta))

    def rho_drho(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        psi, dpsi = self.psi(theta), self.dpsi(theta)
        rho = np.outer(psi, psi.conj())
        drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
        return rho, drho


@dataclass
class PureNumericFamily:
    """Pure family given by a numeric evaluator theta -> psi(theta).

    The evaluator must be continuous in theta (its output is renormalized but
    a jumpy global phase would corrupt the finite-difference derivative).
    """

    layout: HilbertLayout
    evaluator: Callable[[float], np.ndarray]
    step: float = DEFAULT_FD_STEP

    state_type = "pure"

    def psi(self, theta: float) -> np.ndarray:
        vec = np.asarray(self.evaluator(theta), dtype=complex).reshape(-1)
        if vec.shape != (self.layout.total,):
            raise ValueError("evaluator output does not match the layout")
        nrm = np.linalg.norm(vec)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"evaluator output norm {nrm!r} is not 1")
        return vec / nrm

    def dpsi(self, theta: float) -> np.ndarray:
        h = self.step
        return (self.psi(theta + h) - self.psi(theta - h)) / (2 * h)

    def rho_drho(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        h = self.step
        psi = self.psi(theta)
        rho = np.outer(psi, psi.conj())
        pp, pm = self.psi(theta + h), self.psi(theta - h)
        drho = (np.outer(pp, pp.conj()) - np.outer(pm, pm.conj())) / (2 * h)
        return rho, drho


@dataclass
class RankTwoFixedBasisFamily:
    """Mixture p(theta)|psi0><psi0| + (1-p(theta))|psi1><psi1|, fixed basis."""

    layout: HilbertLayout
    psi0: np.ndarray
    psi1: np.ndarray
    p_fn: Callable[[float], float]
    dp_fn: Callable[[float], float]

    def __post_init__(self) -> None:
        self.psi0 = _unit(self.psi0)
        self.psi1 = _unit(self.psi1)
        if abs(np.vdot(self.psi0, self.psi1)) > 1e-10:
            raise ValueError("psi0 and psi1 must be orthogonal")

    state_type = "rank-two"

    def p(self, theta: float) -> float:
        p = float(self.p_fn(theta))
        if not 0.0 < p < 1.0:
            raise ValueError(f"p(theta) = {p} outside (0, 1)")
        return p

    def rho_drho(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        p = self.p(theta)
        dp = float(self.dp_fn(theta))
        p0 = np.outer(self.psi0, self.psi0.conj())
        p1 = np.outer(self.psi1, self.psi1.conj())
        return p * p0 + (1 - p) * p1, dp * (p0 - p1)


@dataclass
class MixedGenericFamily:
    """Mixed family given by a numeric evaluator theta -> rho(theta)."""

    layout: HilbertLayout
    evaluator: Callable[[float], np.ndarray]
    step: float = DEFAULT_FD_STEP

    state_type = "mixed"

    def rho(self, theta: float) -> np.ndarray:
        d = self.layout.total
        rho = _check_hermitian(np.asarray(self.evaluator(theta), dtype=complex), "rho", 1e-9)
        if rho.shape != (d, d):
            raise ValueError("evaluator output does not match the layout")
        w = np.linalg.eigvalsh(rho)
        if w.min() < -1e-9 or abs(np.trace(rho).real - 1.0) > 1e-9:
            raise ValueError("evaluator output is not a unit-trace PSD matrix")
        return rho

    def rho_drho(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        h = self.step
        drho = (self.rho(theta + h) - self.rho(theta - h)) / (2 * h)
        return self.rho(theta), (drho + drho.conj().T) / 2


StateFamily = Union[UnitaryGeneratorFamily, PureNumericFamily,
                    RankTwoFixedBasisFamily, MixedGenericFamily]


@dataclass
class SldResult:
    """Symmetric logarithmic derivative with the spectral data it came from."""

    L: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    qfi: float
    rank_tol: float


@dataclass
class SaturationMatrices:
    """Traceless targets whose zero-sandwich condition characterizes saturation."""

    m_set: list[np.ndarray]
    m_tilde: np.ndarray | None
    state_type: str
    psi_perp: np.ndarray | None = None


@dataclass
class Povm:
    """Finite POVM: PSD elements summing to the identity."""

    elements: list[np.ndarray]
    labels: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.elements = [np.asarray(e, dtype=complex) for e in self.elements]
        if not self.labels:
            self.labels = list(range(len(self.elements)))

    def validate(self, psd_tol: float = 1e-9, sum_tol: float = 1e-8) -> None:
        if not self.elements:
            raise ValueError("POVM has no elements")
        d = self.elements[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in self.elements:
            if e.shape != (d, d):
                raise ValueError("POVM elements have inconsistent shapes")
            _check_hermitian(e, "POVM element")
            if np.linalg.eigvalsh((e + e.conj().T) / 2).min() < -psd_tol:
                raise ValueError("POVM element is not PSD")
            total += e
        if np.abs(total - np.eye(d)).max() > sum_tol:
            raise ValueError("POVM elements do not sum to the identity")


@dataclass
class Thresholds:
    """Tolerances entering the saturation verdict."""

    condition_rel: float = 1e-7     # zero-sandwich residual, relative to target norm
    regularity_rel: float = 1e-7    # null-outcome residual, same scale
    fi_rel: float = 1e-6            # admissible (qfi - fi) relative to qfi
    p_tol: float = 1e-12            # outcome probability treated as zero


@dataclass
class SaturationReport:
    fi: float
    qfi: float
    condition_residual: float
    regularity_residual: float
    saturating: bool

    def to_json(self) -> dict:
        return {
            "fi": self.fi,
            "qfi": self.qfi,
            "condition_residual": self.condition_residual,
            "regularity_residual": self.regularity_residual,
            "saturating": self.saturating,
        }


def eval_state(family: StateFamily, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Density matrix and derivative at theta, validated Hermitian/traceless."""
    rho, drho = family.rho_drho(theta)
    rho = _check_hermitian(rho, "rho", 1e-9)
    drho = _check_hermitian(drho, "drho", 1e-8)
    if abs(np.trace(drho)) > 1e-8 * max(1.0, np.abs(drho).max()):
        raise ValueError("drho is not traceless")
    return rho, drho


def sld(rho: np.ndarray, drho: np.ndarray,
        rank_tol: float = DEFAULT_RANK_TOL) -> SldResult:
    """Symmetric logarithmic derivative L solving drho = (L rho + rho L)/2.

    Built on the eigenbasis of rho: L_jk = 2 <j|drho|k> / (p_j + p_k) over
    pairs with p_j + p_k above rank_tol. Components of drho connecting two
    kernel directions cannot be represented by any L and raise.
    """
    rho = _check_hermitian(rho, "rho")
    drho = _check_hermitian(drho, "drho", 1e-8)
    w, v = herm_eig(rho)
    t = v.conj().T @ drho @ v
    support = w > rank_tol
    kernel = ~support
    if kernel.any():
        blocked = np.abs(t[np.ix_(kernel, kernel)]).max()
        if blocked > 1e-8:
            raise ValueError(
                f"drho has weight {blocked:.3e} between kernel directions; "
                "no SLD reproduces it")
    denom = w[:, None] + w[None, :]
    mask = denom > rank_tol
    coeff = np.zeros_like(t)
    coeff[mask] = 2 * t[mask] / denom[mask]
    L = v @ coeff @ v.conj().T
    L = (L + L.conj().T) / 2
    qfi = float(np.real(np.trace(rho @ L @ L)))
    return SldResult(L=L, eigvals=w, eigvecs=v, qfi=qfi, rank_tol=rank_tol)


def qfi(family: StateFamily, theta: float,
        rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Quantum Fisher information Tr(rho L^2) at theta."""
    rho, drho = eval_state(family, theta)
    return sld(rho, drho, rank_tol).qfi


def fisher_info(povm: Povm, rho: np.ndarray, drho: np.ndarray,
                p_tol: float = 1e-12) -> float:
    """Classical Fisher information of the POVM outcome distribution.

    Outcomes with probability below p_tol are excluded from the sum.
    """
    povm.validate()
    total = 0.0
    for e in povm.elements:
        p = float(np.real(np.trace(e @ rho)))
        if p < p_tol:
            continue
        dp = float(np.real(np.trace(e @ drho)))
        total += dp * dp / p
    return total


def perp_component(psi: np.ndarray, dpsi: np.ndarray) -> np.ndarray:
    """Component of dpsi orthogonal to psi (invariant under phase gauge)."""
    psi = _unit(psi, tol=1e-10)
    dpsi = np.asarray(dpsi, dtype=complex).reshape(-1)
    return dpsi - np.vdot(psi, dpsi) * psi


def _pure_psi_dpsi(family: StateFamily, theta: float) -> tuple[np.ndarray, np.ndarray]:
    if family.state_type != "pure":
        raise ValueError("state vector access requires a pure family")
    return family.psi(theta), family.dpsi(theta)


def _detect_fixed_rank_two(family: MixedGenericFamily, theta: float,
                           rank_tol: float, drift_tol: float = 1e-8):
    """Support eigenvectors if the rank-2 eigenbasis is theta-independent.

    Compares the support eigenprojectors at theta and theta +- h; drift above
    drift_tol means the basis moves with theta and the rank-two shortcut does
    not apply.
    """
    w0, v0 = herm_eig(family.rho(theta))
    support = w0 > rank_tol
    if support.sum() != 2:
        return None
    vecs = v0[:, support]
    for t in (theta - family.step, theta + family.step):
        w1, v1 = herm_eig(family.rho(t))
        sup1 = v1[:, w1 > rank_tol]
        if sup1.shape[1] != 2:
            raise ValueError("rank changes across theta +- h")
        # per-vector drift, matched through the overlap matrix
        ov = np.abs(vecs.conj().T @ sup1)
        drift = np.abs(ov @ ov.T - np.eye(2)).max()
        if drift > drift_tol:
            raise ValueError(
                f"rank-two family has a theta-dependent eigenbasis (drift {drift:.3e})")
    return vecs[:, 0], vecs[:, 1]


def saturation_matrices(family: StateFamily, theta: float,
                        rank_tol: float = DEFAULT_RANK_TOL) -> SaturationMatrices:
    """Traceless zero-sandwich targets for the family at theta.

    Pure families: M = |psi><perp| - |perp><psi| (anti-Hermitian) and the
    rank-one-complete target m_tilde = M + (|psi><psi| - I/D). The deviation
    term enters as the Hermitian part so that a zero sandwich forces
    <E|M|E> = 0 and |<E|psi>|^2 = 1/D separately; folding it into the
    anti-Hermitian part would let the two contributions cancel. Rank-two
    fixed-basis families: m_tilde = |psi0><psi1| (the scale-invariant
    direction, with the real prefactor dropped). Generic mixed families of
    rank > 2 get the full M_ij list and no m_tilde.
    """
    d = family.layout.total
    if family.state_type == "pure":
        psi, dpsi = _pure_psi_dpsi(family, theta)
        perp = perp_component(psi, dpsi)
        m = np.outer(psi, perp.conj()) - np.outer(perp, psi.conj())
        m_tilde = m + (np.outer(psi, psi.conj()) - np.eye(d) / d)
        return SaturationMatrices(m_set=[m], m_tilde=m_tilde,
                                  state_type="pure", psi_perp=perp)
    if family.state_type == "rank-two":
        m = np.outer(family.psi0, family.psi1.conj())
        return SaturationMatrices(m_set=[m], m_tilde=m, state_type="rank-two")

    pair = _detect_fixed_rank_two(family, theta, rank_tol)
    if pair is not None:
        m = np.outer(pair[0], pair[1].conj())
        return SaturationMatrices(m_set=[m], m_tilde=m, state_type="rank-two")
    rho, drho = eval_state(family, theta)
    res = sld(rho, drho, rank_tol)
    support = np.flatnonzero(res.eigvals > rank_tol)
    m_set = []
    for i in support:
        for j in support:
            ket_bra = np.outer(res.eigvecs[:, i], res.eigvecs[:, j].conj())
            m_set.append(ket_bra @ res.L - res.L @ ket_bra)
    return SaturationMatrices(m_set=m_set, m_tilde=None, state_type="mixed")


def check_saturation(povm: Povm, family: StateFamily, theta: float,
                     thresholds: Thresholds | None = None,
                     rank_tol: float = DEFAULT_RANK_TOL) -> SaturationReport:
    """Full saturation check of a POVM against a family at theta.

    Evaluates the zero-sandwich condition sqrt(E) M_ij sqrt(E) = 0 on every
    outcome (M_ij built from the SLD spectral data over the support of rho)
    and, for outcomes of zero probability, the regularity condition
    sqrt(E) L |psi_i> = 0. The verdict additionally requires fi to reach qfi.
    """
    thr = thresholds or Thresholds()
    povm.validate()
    rho, drho = eval_state(family, theta)
    res = sld(rho, drho, rank_tol)
    support = np.flatnonzero(res.eigvals > rank_tol)
    m_set = []
    for i in support:
        for j in support:
            ket_bra = np.outer(res.eigvecs[:, i], res.eigvecs[:, j].conj())
            m_set.append(ket_bra @ res.L - res.L @ ket_bra)
    scale = max((float(np.linalg.norm(m)) for m in m_set), default=0.0)

    fi = fisher_info(povm, rho, drho, p_tol=thr.p_tol)
    l_support = res.L @ res.eigvecs[:, support]

    cond_res = 0.0
    reg_res = 0.0
    for e in povm.elements:
        root = sqrt_psd(e)
        for m in m_set:
            cond_res = max(cond_res, float(np.linalg.norm(root @ m @ root)))
        p = float(np.real(np.trace(e @ rho)))
        if p < thr.p_tol:
            reg_res = max(reg_res, float(np.linalg.norm(root @ l_support, axis=0).max()
                                         if support.size else 0.0))

    saturating = (cond_res <= thr.condition_rel * scale
                  and reg_res <= thr.regularity_rel * scale
                  and (res.qfi - fi) <= thr.fi_rel * res.qfi)
    return SaturationReport(fi=fi, qfi=res.qfi, condition_residual=cond_res,
                            regularity_residual=reg_res, saturating=bool(saturating))
