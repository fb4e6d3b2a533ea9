"""PT-symmetric two-level model ``H = [[r e^{iθ}, s], [s, r e^{-iθ}]]``.

The auxiliary angle α is defined through ``sin α = (r/s) sin θ`` (principal
branch) and the metric family is ``Θ = 1 + sin γ σ_x + sin α σ_y``, which is
positive definite iff ``sin²γ + sin²α < 1``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import matops
from .errors import DegenerateParams, LoopHitsEP, NotPositiveDefinite
from .matops import SIGMA_X, SIGMA_Y, SIGMA_Z
from .metric import CertifiedMetric, MetricCandidate, certify, is_observable, make_observable

EP_TOL = 1e-10


@dataclass(frozen=True)
class TwoLevelParams:
    r: float = 1.0
    s: float = 1.0
    theta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.s == 0 and self.r * math.sin(self.theta) != 0:
            raise DegenerateParams("s = 0 with r sin θ != 0 leaves α undefined")

    @property
    def discriminant(self) -> float:
        """``s² - r² sin²θ``; positive in the real-spectrum regime."""
        return self.s**2 - (self.r * math.sin(self.theta)) ** 2

    @property
    def real_spectrum(self) -> bool:
        return abs(self.s) > abs(self.r * math.sin(self.theta))

    @property
    def sin_alpha(self) -> float:
        if self.s == 0:
            return 0.0
        return self.r / self.s * math.sin(self.theta)

    @property
    def alpha(self) -> complex:
        """Principal ``arcsin`` of ``sin α``; complex outside the real regime."""
        a = cmath.asin(self.sin_alpha)
        return a.real if abs(a.imag) == 0 else a

    @property
    def positive_metric(self) -> bool:
        return math.sin(self.gamma) ** 2 + self.sin_alpha**2 < 1

    def with_(self, **kw) -> "TwoLevelParams":
        d = dict(r=self.r, s=self.s, theta=self.theta, gamma=self.gamma)
        d.update(kw)
        return TwoLevelParams(**d)


def build_H(params: TwoLevelParams) -> np.ndarray:
    return hamiltonian(params.r, params.s, params.theta)


def hamiltonian(r: complex, s: complex, theta: complex) -> np.ndarray:
    """Same matrix as :func:`build_H`, but accepting complexified parameters."""
    return np.array(
        [[r * np.exp(1j * theta), s], [s, r * np.exp(-1j * theta)]], dtype=complex
    )


@dataclass(frozen=True)
class ExactEigensystem:
    E_minus: complex
    E_plus: complex
    v_minus: np.ndarray
    v_plus: np.ndarray
    complex_regime: bool


def exact_eigensystem(params: TwoLevelParams) -> ExactEigensystem:
    """Closed-form energies and the unnormalised eigenvectors ``(∓e^{∓iα}, 1)``.

    Values are returned as complex numbers; in the real regime the imaginary
    parts are exactly zero.
    """
    r, s, th = params.r, params.s, params.theta
    root = cmath.sqrt(params.discriminant)
    E_minus = r * math.cos(th) - root
    E_plus = r * math.cos(th) + root
    # e^{±iα} = cos α ± i sin α with cos α = root / s, the branch that pairs
    # each vector with its energy for either sign of s and in both regimes
    sa = params.sin_alpha
    ca = root / s if s != 0 else 1.0
    v_minus = np.array([-(ca - 1j * sa), 1.0], dtype=complex)
    v_plus = np.array([ca + 1j * sa, 1.0], dtype=complex)
    return ExactEigensystem(
        complex(E_minus), complex(E_plus), v_minus, v_plus, not params.real_spectrum
    )


def theta_matrix(sin_alpha: float, sin_gamma: float) -> np.ndarray:
    return np.array(
        [[1.0, sin_gamma - 1j * sin_alpha], [sin_gamma + 1j * sin_alpha, 1.0]], dtype=complex
    )


def build_theta(params: TwoLevelParams) -> MetricCandidate:
    """Metric candidate ``Θ(α, γ)``; raises NotPositiveDefinite off the PD domain."""
    sa, sg = params.sin_alpha, math.sin(params.gamma)
    load = sa * sa + sg * sg
    if load >= 1:
        raise NotPositiveDefinite(
            f"sin²γ + sin²α = {load:.12g} >= 1", residual=1 - math.sqrt(load)
        )
    return MetricCandidate(theta_matrix(sa, sg), source="constructed-from-model", label="twolevel")


def certified_metric(params: TwoLevelParams, tol: float | None = None) -> CertifiedMetric:
    return certify(build_theta(params), build_H(params), tol)


def hermitize(params: TwoLevelParams, tol: float | None = None) -> np.ndarray:
    cm = certified_metric(params, tol)
    return cm.s_root @ build_H(params) @ cm.s_inverse


def offdiagonal_f(params: TwoLevelParams) -> complex:
    """Off-diagonal element of the hermitised Hamiltonian as a closed form."""
    r, s, th, g = params.r, params.s, params.theta, params.gamma
    k = r / s * math.sin(th)
    if math.sin(g) == 0 and k == 0:
        return complex(s)
    root = cmath.sqrt(s**2 * math.cos(g) ** 2 - (r * math.sin(th)) ** 2)
    return (s * math.sin(g) + 1j * k * root) / (math.sin(g) + 1j * k)


@dataclass(frozen=True)
class EPReport:
    is_ep: bool
    coalesced_eigenvalue: complex
    alignment_angle: float
    theta_min_eigenvalue: float
    jordan_form: np.ndarray
    discriminant: float
    eigenvalues: tuple
    condition: float
    theta_norms_raw: tuple = ()
    theta_norms_unit: tuple = ()


def _vector_angle(u: np.ndarray, v: np.ndarray) -> float:
    c = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(math.acos(min(1.0, c)))


def jordan_form(H: np.ndarray, eigenvalue: complex) -> np.ndarray:
    """Jordan form of a defective 2×2 matrix from its Jordan chain."""
    N = H - eigenvalue * np.eye(2)
    # eigenvector spans the kernel of N; for a rank-one nilpotent N the
    # image of N is that kernel
    col = N[:, np.argmax(np.linalg.norm(N, axis=0))]
    v = col / np.linalg.norm(col)
    w = np.linalg.lstsq(N, v, rcond=None)[0]
    P = np.column_stack([v, w])
    J = np.linalg.solve(P, H @ P)
    return J


def ep_report(params: TwoLevelParams, tol: float = EP_TOL) -> EPReport:
    """Exceptional-point diagnostics at the given parameters.

    The discriminant ``s² - r² sin²θ`` is the EP witness; eigenvector
    alignment and the metric's smallest eigenvalue are reported alongside.
    """
    H = build_H(params)
    disc = params.discriminant
    scale = max(params.s**2, params.r**2)
    is_ep = scale > 0 and abs(disc) <= tol * scale and params.r * math.sin(params.theta) != 0
    ex = exact_eigensystem(params)
    angle = _vector_angle(ex.v_minus, ex.v_plus)
    T = theta_matrix(params.sin_alpha, math.sin(params.gamma))
    lam_min = float(np.linalg.eigvalsh(T)[0])
    # Θ-norms of (∓e^{∓iα}, 1) as written and after unit Euclidean scaling
    raw = tuple(float(np.vdot(v, T @ v).real) for v in (ex.v_minus, ex.v_plus))
    unit = tuple(n / float(np.vdot(v, v).real) for n, v in zip(raw, (ex.v_minus, ex.v_plus)))
    es = matops.eig_general(H, tol=1e-8)
    if is_ep:
        lam = params.r * math.cos(params.theta)
        J = jordan_form(H, lam)
        J[np.abs(J) < 1e-12] = 0.0
        coalesced = complex(lam)
    else:
        J = np.diag([ex.E_minus, ex.E_plus]).astype(complex)
        coalesced = complex("nan")
    return EPReport(
        is_ep=bool(is_ep),
        coalesced_eigenvalue=coalesced,
        alignment_angle=angle,
        theta_min_eigenvalue=lam_min,
        jordan_form=J,
        discriminant=disc,
        eigenvalues=(ex.E_minus, ex.E_plus),
        condition=float(np.max(es.condition)),
        theta_norms_raw=raw,
        theta_norms_unit=unit,
    )


def _track(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    cost = np.abs(prev[:, None] - new[None, :])
    _, cols = linear_sum_assignment(cost)
    return new[cols]


def branch_point_check(
    params: TwoLevelParams,
    rho: float,
    parameter: str = "theta",
    center: complex | None = None,
    n_samples: int = 64,
    tol: float = 1e-8,
) -> bool:
    """Adiabatic label exchange of the two eigenvalues around a closed loop.

    The loop ``q(φ) = center + ρ e^{iφ}`` runs in the complex plane of the
    chosen ``parameter`` (``"theta"``, ``"s"`` or ``"r"``), the others held
    at their values in ``params``; ``center`` defaults to the current value.
    Eigenvalues are continued sample to sample by minimum-distance matching;
    a step is halved whenever a jump exceeds 10% of the local level spacing.

    Returns True iff the labels come back exchanged (square-root monodromy).

    Notes
    -----
    At ``r = s`` the discriminant ``s² - r² sin²θ = cos²θ`` has a *double*
    zero at θ = π/2, so a θ-loop encloses two merged simple branch points and
    yields no exchange; loops in ``s`` or ``r`` see the square root.
    """
    if parameter not in ("theta", "s", "r"):
        raise ValueError(f"unknown loop parameter {parameter!r}")
    base = {"theta": params.theta, "s": params.s, "r": params.r}
    c0 = base[parameter] if center is None else center

    def eigs(phi: float) -> np.ndarray:
        vals = dict(base)
        vals[parameter] = c0 + rho * np.exp(1j * phi)
        r, s, th = vals["r"], vals["s"], vals["theta"]
        disc = s * s - (r * np.sin(th)) ** 2
        if abs(disc) <= tol * max(abs(s) ** 2, abs(r) ** 2, 1e-300):
            raise LoopHitsEP(f"loop passes through an exceptional point at φ={phi:.4f}")
        return np.linalg.eigvals(hamiltonian(r, s, th))

    start = np.sort_complex(eigs(0.0))
    current = start.copy()
    phi, step = 0.0, 2 * math.pi / n_samples
    two_pi = 2 * math.pi
    while phi < two_pi - 1e-15:
        h = min(step, two_pi - phi)
        while True:
            trial = _track(current, eigs(phi + h))
            spacing = abs(current[0] - current[1])
            jump = np.max(np.abs(trial - current))
            if spacing == 0 or jump <= 0.1 * spacing or h < 1e-9:
                break
            h /= 2
        current = trial
        phi += h
    if rho == 0:
        return False
    gap = abs(start[0] - start[1])
    swapped = abs(current[0] - start[1]) + abs(current[1] - start[0])
    same = abs(current[0] - start[0]) + abs(current[1] - start[1])
    return bool(swapped < same and swapped < 1e-6 * max(gap, 1.0))


def sigma_z_admissibility(params: TwoLevelParams, tol: float | None = None) -> tuple[bool, float]:
    """Whether σ_z is an observable under Θ(α, γ).

    The residual is the entrywise maximum of ``Θσ_z - σ_zΘ``, equal to
    ``2 sqrt(sin²γ + sin²α)``.
    """
    tol = matops.default_tol() if tol is None else tol
    T = build_theta(params).theta
    residual = float(np.max(np.abs(T @ SIGMA_Z - SIGMA_Z.conj().T @ T)))
    return residual <= tol, residual


def proper_spin_observable(params: TwoLevelParams, tol: float | None = None) -> np.ndarray:
    """``Σ_z = S⁻¹ σ_z S``, the z-spin that is an observable under Θ."""
    return make_observable(SIGMA_Z, certified_metric(params, tol))


def pauli_verdicts(params: TwoLevelParams, tol: float | None = None) -> dict:
    """Observable verdicts for σ_x, σ_y, σ_z and Σ_z under Θ(α, γ)."""
    cm = certified_metric(params, tol)
    out = {}
    for label, A in (("sigma_x", SIGMA_X), ("sigma_y", SIGMA_Y), ("sigma_z", SIGMA_Z),
                     ("Sigma_z", make_observable(SIGMA_Z, cm))):
        ok, res = is_observable(A, cm, tol)
        out[label] = {"observable": ok, "residual": res}
    return out
