"""Metric certification, similarity maps and observable admissibility.

A metric candidate Θ is *certified* for a Hamiltonian H once it passes three
gates, in this order:

1. ``hermitian``          Θ = Θ^H
2. ``positive-definite``  smallest eigenvalue of Θ exceeds the tolerance
3. ``quasi-hermitian``    |ΘH - H^HΘ| <= tol |ΘH|

For truncated Fock-space operators the gates can be restricted to a leading
principal block (``block=m``): the relations only hold away from the
truncation edge.  A candidate may also carry its exponent ``log_theta``
(Θ = exp(L)); positivity is then read off the spectrum of L, and S = Θ^{1/2}
is ``exp(L/2)``, which avoids resolving eigenvalues that underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matops
from .errors import (
    CandidateFailsCertification,
    CertificationError,
    DimensionMismatch,
    NotHermitian,
    NotHermitianInput,
    NotPositiveDefinite,
    NotQuasiHermitian,
)

RANK_TOL = 1e-10
GATES = ("hermitian", "positive-definite", "quasi-hermitian")


@dataclass(frozen=True, eq=False)
class MetricCandidate:
    theta: np.ndarray
    source: str = "user-supplied"
    label: str = ""
    log_theta: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class CertifiedMetric:
    theta: np.ndarray
    min_eigenvalue: float
    condition_number: float
    tol: float
    block: int | None = None
    source: str = "user-supplied"
    label: str = ""
    log_theta: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)

    @cached_property
    def s_root(self) -> np.ndarray:
        """Positive square root S of Θ."""
        if self.log_theta is not None:
            return matops.hermitian_function(self.log_theta, lambda x: np.exp(0.5 * x))
        return matops.mat_func(self.theta, "sqrt", tol=self.tol)

    @cached_property
    def s_inverse(self) -> np.ndarray:
        if self.log_theta is not None:
            return matops.hermitian_function(self.log_theta, lambda x: np.exp(-0.5 * x))
        return matops.mat_func(self.theta, "power", t=-0.5, tol=self.tol)

    @property
    def dim(self) -> int:
        return self.theta.shape[0]


def _blk(M: np.ndarray, block: int | None) -> np.ndarray:
    return M if block is None else M[:block, :block]


def quasi_residual(theta, A, block: int | None = None) -> float:
    """Relative quasi-Hermiticity defect ``|ΘA - A^HΘ| / |ΘA|`` (Frobenius)."""
    TA = theta @ A
    return matops.relative_residual(_blk(TA - A.conj().T @ theta, block), _blk(TA, block))


def evaluate_gates(candidate: MetricCandidate, H, tol: float | None = None,
                   block: int | None = None) -> dict:
    """Evaluate every gate without raising.

    Returns a dict with one ``{"pass": bool, "residual": float}`` entry per
    gate plus ``min_eigenvalue`` and ``condition_number``.  Gates after the
    first failure are still evaluated when meaningful.
    """
    theta = matops.as_matrix(candidate.theta)
    H = matops.as_matrix(H)
    if theta.shape != H.shape:
        raise DimensionMismatch(f"metric {theta.shape} vs Hamiltonian {H.shape}")
    tol = matops.default_tol("fock" if block else "dense") if tol is None else tol
    out: dict = {"tol": tol, "block": block}

    tb = _blk(theta, block)
    herm_ok, herm_res = matops.is_hermitian(tb, tol)
    if candidate.log_theta is not None:
        lok, lres = matops.is_hermitian(candidate.log_theta, tol)
        herm_ok, herm_res = herm_ok and lok, max(herm_res, lres)
    out["hermitian"] = {"pass": herm_ok, "residual": herm_res}

    if candidate.log_theta is not None:
        lam = np.linalg.eigvalsh(0.5 * (candidate.log_theta + candidate.log_theta.conj().T))
        pd_ok = bool(np.all(np.isfinite(lam)))
        lam_min = float(np.exp(lam[0]))
        cond = float(np.exp(lam[-1] - lam[0]))
        out["log_min_eigenvalue"] = float(lam[0])
    else:
        lam = np.linalg.eigvalsh(0.5 * (tb + tb.conj().T))
        lam_min = float(lam[0])
        pd_ok = herm_ok and lam_min > tol
        cond = float(lam[-1] / lam_min) if lam_min > 0 else float("inf")
    out["positive-definite"] = {"pass": pd_ok, "residual": lam_min}
    out["min_eigenvalue"] = lam_min
    out["condition_number"] = cond

    q = quasi_residual(theta, H, block)
    out["quasi-hermitian"] = {"pass": q <= tol, "residual": q}
    return out


def first_failed_gate(gates: dict) -> str | None:
    for g in GATES:
        if not gates[g]["pass"]:
            return g
    return None


def certify(candidate: MetricCandidate, H, tol: float | None = None,
            block: int | None = None) -> CertifiedMetric:
    """Certify ``candidate`` as a metric for ``H``.

    Raises
    ------
    NotHermitian, NotPositiveDefinite, NotQuasiHermitian
        The first failing gate, in that order.
    """
    gates = evaluate_gates(candidate, H, tol, block)
    failed = first_failed_gate(gates)
    if failed is not None:
        exc = {"hermitian": NotHermitian, "positive-definite": NotPositiveDefinite,
               "quasi-hermitian": NotQuasiHermitian}[failed]
        res = gates[failed]["residual"]
        raise exc(f"gate {failed} failed (value {res:.3e}, tol {gates['tol']:.1e})", residual=res)
    theta = matops.as_matrix(candidate.theta)
    return CertifiedMetric(
        theta=0.5 * (theta + theta.conj().T),
        min_eigenvalue=gates["min_eigenvalue"],
        condition_number=gates["condition_number"],
        tol=gates["tol"],
        block=block,
        source=candidate.source,
        label=candidate.label,
        log_theta=candidate.log_theta,
        residuals={g: gates[g]["residual"] for g in GATES},
    )


def certification_report(candidate: MetricCandidate, H, tol: float | None = None,
                         block: int | None = None) -> dict:
    """JSON-ready certification summary; never raises on a failed gate."""
    gates = evaluate_gates(candidate, H, tol, block)
    failed = first_failed_gate(gates)
    return {
        "gates": {
            "hermitian": _gate_json(gates["hermitian"]),
            "positive": _gate_json(gates["positive-definite"]),
            "quasi": _gate_json(gates["quasi-hermitian"]),
        },
        "certified": failed is None,
        "failed_gate": failed,
        "condition_number": gates["condition_number"],
        "min_eigenvalue": gates["min_eigenvalue"],
        "tol": gates["tol"],
        "block": block,
        "source": candidate.source,
    }


def _gate_json(g: dict) -> dict:
    return {"status": "pass" if g["pass"] else "fail", "residual": float(g["residual"])}


def hermitian_equivalent(cm: CertifiedMetric, H) -> np.ndarray:
    """``h = S H S⁻¹``."""
    return cm.s_root @ matops.as_matrix(H) @ cm.s_inverse


def is_observable(A, cm: CertifiedMetric, tol: float | None = None,
                  block: int | None = None) -> tuple[bool, float]:
    """Quasi-Hermiticity of ``A`` under the certified metric.

    Verdict: ``|ΘA - A^HΘ| <= tol * max(1, |ΘA|)`` (Frobenius, optionally on
    the leading block).  The returned residual is the absolute defect.
    """
    A = matops.as_matrix(A)
    if A.shape != cm.theta.shape:
        raise DimensionMismatch(f"{A.shape} vs metric {cm.theta.shape}")
    tol = cm.tol if tol is None else tol
    block = cm.block if block is None else block
    TA = cm.theta @ A
    res = float(np.linalg.norm(_blk(TA - A.conj().T @ cm.theta, block)))
    return res <= tol * max(1.0, float(np.linalg.norm(_blk(TA, block)))), res


def make_observable(a, cm: CertifiedMetric) -> np.ndarray:
    """Map a standard Hermitian observable to ``A = S⁻¹ a S``."""
    a = matops.as_matrix(a)
    ok, res = matops.is_hermitian(a, cm.tol)
    if not ok:
        raise NotHermitianInput(f"input observable is not Hermitian (residual {res:.3e})",
                                residual=res)
    return cm.s_inverse @ a @ cm.s_root


def polynomial(H, coeffs) -> np.ndarray:
    """``Σ_k coeffs[k] H^k`` by Horner's rule."""
    H = matops.as_matrix(H)
    if len(coeffs) == 0:
        raise ValueError("empty coefficient list")
    V = np.zeros_like(H)
    eye = np.eye(H.shape[0], dtype=complex)
    for c in reversed(list(coeffs)):
        V = V @ H + c * eye
    return V


def ambiguous_metric(cm: CertifiedMetric, H, poly_coeffs) -> MetricCandidate:
    """Alternative metric ``Θ p(H)`` generated by a real polynomial ``p``.

    ``Θ p(H) = p(H^H) Θ`` is Hermitian because Θ intertwines H and H^H, and
    it is quasi-Hermitian for H because ``[p(H), H] = 0``.  The candidate is
    certified before being returned (same tolerance and block as ``cm``).

    Raises
    ------
    CandidateFailsCertification
        Carries the ``gate`` that failed (e.g. positivity when ``p`` is not
        positive on the spectrum of H).
    """
    if any(np.iscomplexobj(c) and np.imag(c) != 0 for c in poly_coeffs):
        raise ValueError("polynomial coefficients must be real")
    V = polynomial(H, [float(np.real(c)) for c in poly_coeffs])
    cand = MetricCandidate(cm.theta @ V, source="ambiguity-generated",
                           label=f"{cm.label}*p(H){list(poly_coeffs)}")
    try:
        certify(cand, H, cm.tol, cm.block)
    except CertificationError as exc:
        raise CandidateFailsCertification(str(exc), residual=exc.residual, gate=exc.gate) from exc
    return cand


def commutant_dimension(ops, rank_tol: float = RANK_TOL) -> int:
    """Dimension of ``{X : [X, M] = 0 for all M in ops}``.

    Each commutator is linear in ``vec(X)``; the stacked system is rank
    decided by singular values above ``rank_tol * max_k |M_k|``.
    """
    mats = [matops.as_matrix(M) for M in ops]
    n = mats[0].shape[0]
    if any(M.shape != (n, n) for M in mats):
        raise DimensionMismatch("all operators must share one dimension")
    eye = np.eye(n)
    # column-major vec: vec(XM - MX) = (M^T ⊗ I - I ⊗ M) vec(X)
    system = np.vstack([np.kron(M.T, eye) - np.kron(eye, M) for M in mats])
    sv = np.linalg.svd(system, compute_uv=False)
    # scale by the operators, not by σ_max: for a (numerically) scalar set the
    # commutator system is pure roundoff and σ_max carries no information
    scale = max(float(np.linalg.norm(M, 2)) for M in mats)
    if scale == 0:
        return n * n
    rank = int(np.sum(sv > rank_tol * scale))
    return n * n - rank
