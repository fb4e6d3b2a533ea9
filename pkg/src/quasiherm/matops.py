"""Dense complex matrix kernel.

Matrices are plain ``numpy.ndarray`` objects of complex dtype.  The helpers
here validate them, compute eigensystems with per-pair condition estimates,
evaluate functions of Hermitian matrices spectrally, and provide the
Hermiticity / positivity predicates used by the certification code.

Tolerances are relative.  The defaults are ``1e-10`` for small dense
matrices and ``1e-8`` for truncated Fock-space matrices; the environment
variable ``QUASIH_TOL`` overrides both.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InvalidDimension,
    NotHermitian,
    NotPositiveDefinite,
)

DENSE_TOL = 1e-10
FOCK_TOL = 1e-8
NEAR_DEFECTIVE_CONDITION = 1e8
COALESCENCE_TOL = 1e-6

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def default_tol(kind: str = "dense") -> float:
    """Default relative tolerance, honouring the ``QUASIH_TOL`` override."""
    env = os.environ.get("QUASIH_TOL")
    if env:
        return float(env)
    return FOCK_TOL if kind == "fock" else DENSE_TOL


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite square complex array, or raise."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidDimension(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidDimension("matrix has non-finite entries")
    return A


def matrix_from_json(obj: dict) -> np.ndarray:
    """Parse the ``{"dim": n, "re": [[...]], "im": [[...]]}`` matrix form.

    ``im`` may be omitted for real matrices.
    """
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidDimension(f"malformed matrix literal: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise InvalidDimension(f"matrix literal does not match dim={dim}")
    return as_matrix(re + 1j * im)


def matrix_to_json(M) -> dict:
    A = as_matrix(M)
    return {"dim": A.shape[0], "re": A.real.tolist(), "im": A.imag.tolist()}


def adjoint(M) -> np.ndarray:
    return as_matrix(M).conj().T


def commutator(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"{A.shape} vs {B.shape}")
    return A @ B - B @ A


@dataclass(frozen=True)
class EigSystem:
    """Eigenvalues with unit-norm right eigenvectors stored as columns.

    ``condition[k]`` is the classical eigenvalue condition number
    ``|l_k| |r_k| / |l_k^H r_k|``; it is 1 for normal matrices and diverges
    at a defective eigenvalue.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    condition: np.ndarray
    residual: float

    @property
    def near_defective(self) -> bool:
        """Condition above ``1e8``, or a coalesced pair with parallel vectors."""
        if np.any(self.condition > NEAR_DEFECTIVE_CONDITION):
            return True
        w, V = self.eigenvalues, self.right_vectors
        scale = max(1.0, float(np.max(np.abs(w))))
        for i in range(len(w)):
            for j in range(i + 1, len(w)):
                if abs(w[i] - w[j]) <= COALESCENCE_TOL * scale and \
                        abs(np.vdot(V[:, i], V[:, j])) > 1 - COALESCENCE_TOL:
                    return True
        return False


def _sort_order(values: np.ndarray) -> np.ndarray:
    # lexsort uses the last key as primary; mergesort keeps index stability
    return np.lexsort((np.arange(len(values)), values.imag, values.real))


def _normalize_columns(V: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(V, axis=0)
    norms[norms == 0] = 1.0
    return V / norms


def eig_general(M, tol: float | None = None) -> EigSystem:
    """Eigendecomposition of an arbitrary square matrix.

    Eigenvalues are sorted ascending by real part, then imaginary part.
    Raises :class:`ConvergenceFailure` when LAPACK does not converge or the
    backward residual ``max_k |M v_k - λ_k v_k|`` exceeds ``tol * |M|``.
    """
    A = as_matrix(M)
    tol = default_tol() if tol is None else tol
    try:
        w, vl, vr = sla.eig(A, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = _sort_order(w)
    w, vl, vr = w[order], _normalize_columns(vl[:, order]), _normalize_columns(vr[:, order])
    overlap = np.abs(np.sum(vl.conj() * vr, axis=0))
    with np.errstate(divide="ignore"):
        condition = np.where(overlap > 0, 1.0 / np.maximum(overlap, 1e-300), np.inf)
    scale = max(np.linalg.norm(A, 2), 1.0)
    residual = float(np.max(np.linalg.norm(A @ vr - vr * w, axis=0)) / scale)
    if residual > tol:
        raise ConvergenceFailure(f"eigen-residual {residual:.3e} exceeds tol {tol:.1e}")
    return EigSystem(w, vr, condition, residual)


def is_hermitian(M, tol: float | None = None) -> tuple[bool, float]:
    """Check ``max|M - M^H| <= tol * max(1, max|M|)``; returns (verdict, residual)."""
    A = as_matrix(M)
    tol = default_tol() if tol is None else tol
    residual = float(np.max(np.abs(A - A.conj().T)))
    return residual <= tol * max(1.0, float(np.max(np.abs(A)))), residual


def eig_hermitian(M, tol: float | None = None) -> EigSystem:
    A = as_matrix(M)
    tol = default_tol() if tol is None else tol
    ok, res = is_hermitian(A, tol)
    if not ok:
        raise NotHermitian(f"matrix is not Hermitian (residual {res:.3e})", residual=res)
    w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    scale = max(np.linalg.norm(A, 2), 1.0)
    residual = float(np.max(np.linalg.norm(A @ V - V * w, axis=0)) / scale)
    return EigSystem(w.astype(float), V, np.ones(len(w)), residual)


def is_positive_definite(M, tol: float | None = None) -> tuple[bool, float]:
    """Returns (min eigenvalue > tol, min eigenvalue); requires Hermitian input."""
    es = eig_hermitian(M, tol)
    tol = default_tol() if tol is None else tol
    lam_min = float(es.eigenvalues[0])
    return lam_min > tol, lam_min


def hermitian_function(M, fn, tol: float | None = None) -> np.ndarray:
    """Evaluate ``fn`` on a Hermitian matrix through its spectral decomposition."""
    es = eig_hermitian(M, tol)
    V = es.right_vectors
    return (V * fn(es.eigenvalues)) @ V.conj().T


def mat_func(M, f: str, t: float | None = None, tol: float | None = None) -> np.ndarray:
    """Spectral matrix function of a Hermitian matrix.

    Parameters
    ----------
    M : array_like
        Hermitian input; positive definite for ``sqrt``, ``inverse`` and
        ``power``.
    f : {"sqrt", "exp", "inverse", "power"}
        Function tag.
    t : float, optional
        Exponent for ``f="power"``.

    Raises
    ------
    NotHermitian
        Input fails the Hermiticity check.
    NotPositiveDefinite
        ``sqrt``/``inverse``/``power`` requested on a non-PD input.
    """
    es = eig_hermitian(M, tol)
    tol = default_tol() if tol is None else tol
    lam, V = es.eigenvalues, es.right_vectors
    if f == "exp":
        vals = np.exp(lam)
    else:
        if lam[0] <= tol * max(1.0, abs(lam[-1])):
            raise NotPositiveDefinite(
                f"{f} needs a positive-definite matrix (min eigenvalue {lam[0]:.3e})",
                residual=float(lam[0]),
            )
        if f == "sqrt":
            vals = np.sqrt(lam)
        elif f == "inverse":
            vals = 1.0 / lam
        elif f == "power":
            if t is None:
                raise ValueError("power needs an exponent t")
            vals = lam**t
        else:
            raise ValueError(f"unknown matrix function {f!r}")
    return (V * vals) @ V.conj().T


def relative_residual(R: np.ndarray, ref: np.ndarray) -> float:
    """Frobenius ratio ``|R| / max(|ref|, tiny)``."""
    denom = np.linalg.norm(ref)
    return float(np.linalg.norm(R) / denom) if denom > 0 else float(np.linalg.norm(R))
