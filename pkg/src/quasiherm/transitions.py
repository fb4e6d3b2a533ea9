"""Bi-orthogonal eigensystems and metric-consistent transition probabilities.

Left eigenvectors are stored as column vectors ``l_n`` with the functional
``<ñ| = l_n^H``; they are normalised so that ``<ñ|m> = δ_nm`` (``N_n = 1``).
Right eigenvectors have unit Euclidean norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import matops
from .errors import DegenerateSpectrum, NearDefective, ZeroNorm
from .metric import CertifiedMetric, ambiguous_metric, certify, is_observable

NORMALIZATION = "N_n=1"


@dataclass(frozen=True, eq=False)
class BiorthogonalSystem:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    norms: np.ndarray
    condition: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def gram(self) -> np.ndarray:
        """Matrix of pairings ``<ñ|m>``."""
        return self.left.conj().T @ self.right

    def metric_consistency(self, theta) -> float:
        """Largest sine of the angle between ``Θ|n>`` and ``|ñ>`` over all n.

        Zero when ``<ñ| ∝ <n|Θ`` for every state, i.e. when the left vectors
        are the ones induced by this metric.
        """
        worst = 0.0
        for k in range(self.dim):
            u = theta @ self.right[:, k]
            v = self.left[:, k]
            c = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
            worst = max(worst, float(np.sqrt(max(0.0, 1 - c * c))))
        return worst


def biorthogonal_system(H, tol: float | None = None) -> BiorthogonalSystem:
    """Right eigenvectors of H paired with eigenvectors of H^H.

    Pairing is an optimal assignment on ``|λ_i - conj(μ_j)|``.  Inside a
    degenerate eigenspace the assigned left vectors need not be
    bi-orthogonal; the dual basis ``(R^{-1})^H`` is used there instead.

    Raises
    ------
    NearDefective
        Some eigenpair condition number exceeds ``1e8``.
    """
    H = matops.as_matrix(H)
    tol = matops.default_tol() if tol is None else tol
    es = matops.eig_general(H, tol=max(tol, 1e-8))
    if es.near_defective:
        raise NearDefective(
            f"eigenpair condition {np.max(es.condition):.3e} exceeds "
            f"{matops.NEAR_DEFECTIVE_CONDITION:.0e}; eigenvectors are nearly aligned"
        )
    lam, R = es.eigenvalues, es.right_vectors
    mu, Lv = np.linalg.eig(H.conj().T)
    _, cols = linear_sum_assignment(np.abs(lam[:, None] - mu.conj()[None, :]))
    L = Lv[:, cols]
    pair = np.sum(L.conj() * R, axis=0)
    L = L / pair.conj()
    gram = L.conj().T @ R
    if np.max(np.abs(gram - np.eye(len(lam)))) > np.sqrt(tol):
        L = np.linalg.inv(R).conj().T
    return BiorthogonalSystem(lam, R, L, np.ones(len(lam)), es.condition)


def min_level_spacing(eigenvalues) -> float:
    ev = np.asarray(eigenvalues)
    if len(ev) < 2:
        return float("inf")
    d = np.abs(ev[:, None] - ev[None, :])
    d[np.diag_indices(len(ev))] = np.inf
    return float(d.min())


def theta_inner(u, v, metric) -> complex:
    """``<u|Θ|v>``; ``metric`` is a CertifiedMetric or a plain matrix."""
    theta = metric.theta if isinstance(metric, CertifiedMetric) else np.asarray(metric)
    return complex(np.vdot(u, theta @ v))


@dataclass(frozen=True)
class TransitionReport:
    n: int
    m: int
    observable_label: str
    probability: float
    metric_id: str
    caveat_flags: frozenset = frozenset()
    forms: dict = field(default_factory=dict)
    normalization: str = NORMALIZATION
    observable_residual: float = 0.0
    tol: float = 0.0

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "observable": self.observable_label,
            "probability": self.probability,
            "metric_id": self.metric_id,
            "caveat_flags": sorted(self.caveat_flags),
            "forms": dict(self.forms),
            "normalization": self.normalization,
            "observable_residual": self.observable_residual,
            "tol": self.tol,
        }


def transition_probability(n: int, m: int, A, H, cm: CertifiedMetric,
                           label: str = "A", tol: float | None = None,
                           system: BiorthogonalSystem | None = None) -> TransitionReport:
    """Transition probability ``P_nm(A)`` between eigenstates n, m of H.

    Three algebraically equivalent forms are evaluated:

    ``direct``        |<n|ΘA|m>|² / (<n|Θ|n><m|Θ|m>)
    ``symmetric``     <m|ΘA|n><n|ΘA|m> / (<n|Θ|n><m|Θ|m>)
    ``biorthogonal``  <m̃|A|n><ñ|A|m> / (<ñ|n><m̃|m>)

    They agree whenever A is an observable for Θ.  The reported
    ``probability`` is the symmetric form, which stays metric independent
    under ``Θ -> Θ p(H)`` even when A is admissible for Θ only.  A
    non-admissible A is still evaluated and flagged
    ``non_observable_operator``.
    """
    A = matops.as_matrix(A)
    tol = cm.tol if tol is None else tol
    bs = system if system is not None else biorthogonal_system(H, tol)
    theta = cm.theta
    rn, rm = bs.right[:, n], bs.right[:, m]
    Nn, Nm = theta_inner(rn, rn, theta), theta_inner(rm, rm, theta)
    if Nn.real <= tol or Nm.real <= tol:
        raise ZeroNorm(f"vanishing Θ-norm ({Nn.real:.3e}, {Nm.real:.3e})")
    TA = theta @ A
    a_nm = np.vdot(rn, TA @ rm)
    a_mn = np.vdot(rm, TA @ rn)
    denom = (Nn * Nm).real
    direct = abs(a_nm) ** 2 / denom
    symmetric = a_mn * a_nm / denom
    ln, lm = bs.left[:, n], bs.left[:, m]
    biorth = (np.vdot(lm, A @ rn) * np.vdot(ln, A @ rm)) / (np.vdot(ln, rn) * np.vdot(lm, rm))

    flags = set()
    ok, res = is_observable(A, cm, tol)
    if not ok:
        flags.add("non_observable_operator")
    scale = max(1.0, float(np.max(np.abs(bs.eigenvalues))))
    if min_level_spacing(bs.eigenvalues) <= tol * scale:
        flags.add("degenerate_spectrum")
    return TransitionReport(
        n=n, m=m, observable_label=label, probability=float(symmetric.real),
        metric_id=cm.label or cm.source, caveat_flags=frozenset(flags),
        forms={"direct": float(direct), "symmetric": float(symmetric.real),
               "symmetric_imag": float(symmetric.imag), "biorthogonal": float(biorth.real),
               "biorthogonal_imag": float(biorth.imag)},
        observable_residual=res,
        tol=tol,
    )


@dataclass(frozen=True)
class IndependenceResult:
    P_original: float
    P_tilde: float
    delta: float
    independent: bool
    tilde_metric_id: str


def metric_independence_check(n: int, m: int, A, H, cm: CertifiedMetric, poly_coeffs,
                              tol: float = 1e-10) -> IndependenceResult:
    """Compare ``P_nm(A)`` under Θ and under the certified ``Θ p(H)``.

    Raises DegenerateSpectrum for degenerate H (independence is not
    guaranteed there) and CandidateFailsCertification if ``Θ p(H)`` is not a
    valid metric.
    """
    bs = biorthogonal_system(H, cm.tol)
    scale = max(1.0, float(np.max(np.abs(bs.eigenvalues))))
    if min_level_spacing(bs.eigenvalues) <= cm.tol * scale:
        raise DegenerateSpectrum("spectrum of H is degenerate")
    cand = ambiguous_metric(cm, H, poly_coeffs)
    cm_t = certify(cand, H, cm.tol, cm.block)
    P = transition_probability(n, m, A, H, cm, system=bs).probability
    Pt = transition_probability(n, m, A, H, cm_t, system=bs).probability
    delta = abs(P - Pt)
    return IndependenceResult(P, Pt, delta, delta <= tol, cand.label)


def state_overlap_probability(u, v, metric) -> float:
    """``|<v|Θ|u>|² / (<u|Θ|u><v|Θ|v>)`` for arbitrary states."""
    num = abs(theta_inner(v, u, metric)) ** 2
    return num / (theta_inner(u, u, metric).real * theta_inner(v, v, metric).real)


def general_state_dependence(u, v, cm: CertifiedMetric, H, poly_coeffs) -> dict:
    """Overlap probability of general states under Θ and ``Θ p(H)``.

    For superpositions of H eigenstates the cross terms carry the
    metric; the result is flagged ``general_states``.
    """
    cand = ambiguous_metric(cm, H, poly_coeffs)
    P = state_overlap_probability(u, v, cm.theta)
    Pt = state_overlap_probability(u, v, cand.theta)
    return {"P": P, "P_tilde": Pt, "delta": abs(P - Pt), "caveat_flags": ["general_states"]}


def outcome_distribution(psi, A, cm: CertifiedMetric) -> np.ndarray:
    """Θ-probabilities of the eigen-outcomes of observable A in state psi."""
    es = matops.eig_general(A, tol=max(cm.tol, 1e-8))
    theta = cm.theta
    norm_psi = theta_inner(psi, psi, theta).real
    out = []
    for k in range(es.eigenvalues.size):
        a = es.right_vectors[:, k]
        out.append(abs(theta_inner(a, psi, theta)) ** 2 / (theta_inner(a, a, theta).real * norm_psi))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class MisuseReport:
    max_overlap: float
    overlaps: np.ndarray
    is_observable: bool
    observable_residual: float


def misuse_demo(B, cm: CertifiedMetric) -> MisuseReport:
    """Quantify treating a standard-Hermitian, non-admissible B as observable.

    The eigenvectors of B (unit Euclidean norm) are orthogonal in the L²
    sense, but their Θ-overlaps ``<β_m|Θ|β_n>`` need not vanish; the largest
    off-diagonal magnitude is the reported inconsistency.
    """
    es = matops.eig_hermitian(B, cm.tol)
    V = es.right_vectors
    G = V.conj().T @ cm.theta @ V
    off = np.abs(G - np.diag(np.diag(G)))
    ok, res = is_observable(B, cm)
    return MisuseReport(float(off.max()) if off.size else 0.0, G, ok, res)
