"""Non-Hermitian bosonic oscillator in a truncated Fock space.

``H = ω(a†a + 1/2) + α a² + β a†²`` has the spectrum ``(n + 1/2)Ω`` with
``Ω = sqrt(ω² - 4αβ)``.  A one-parameter metric family is

    Θ(z) = c(z) ** K(z),
    c(z) = (α+β-ωz + (α-β)q) / (α+β-ωz - (α-β)q),   q = sqrt(1-z²),
    K(z) = (p²(1-z) + ω²x²(1+z)) / (4ωq),

evaluated as ``exp(ln c · K)`` and normalised to ``<0|Θ|0> = 1``.

Units and conventions: ħ = 1, ``x = (a + a†)/sqrt(2ω)`` and
``p = i sqrt(ω/2)(a† - a)``, so that ``ω(a†a + 1/2) = (p² + ω²x²)/2``.
Relations that hold in the untruncated space are checked on the leading
``N/2`` block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import matops
from .errors import (
    ComplexSpectrumRegime,
    FitResidualTooLarge,
    IllDefinedMetric,
    InvalidDimension,
    TruncationUnconverged,
)
from .metric import CertifiedMetric, MetricCandidate, certify, hermitian_equivalent

TRUNCATION_TOL = 1e-3
FIT_TOL = 1e-6
MU_NU_TOL = 1e-4


@dataclass(frozen=True)
class OscParams:
    omega: float = 2.0
    alpha: float = 0.5
    beta: float = 0.3
    truncation: int = 80
    z: float = 0.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.truncation < 2:
            raise InvalidDimension("truncation N must be >= 2")
        if not -1 <= self.z <= 1:
            raise ValueError("z must lie in [-1, 1]")

    @property
    def omega_sq(self) -> float:
        """``Ω² = ω² - 4αβ``."""
        return self.omega**2 - 4 * self.alpha * self.beta

    @property
    def real_spectrum(self) -> bool:
        return self.omega_sq > 0

    @property
    def Omega(self) -> float:
        if not self.real_spectrum:
            raise ComplexSpectrumRegime(f"ω² - 4αβ = {self.omega_sq:.6g} <= 0")
        return math.sqrt(self.omega_sq)

    @property
    def interior(self) -> int:
        return self.truncation // 2

    def with_(self, **kw) -> "OscParams":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class FockOperators:
    a: np.ndarray
    a_dag: np.ndarray
    x: np.ndarray
    p: np.ndarray

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def build_fock_operators(N: int, omega: float) -> FockOperators:
    if N < 2:
        raise InvalidDimension("N must be >= 2")
    if omega <= 0:
        raise ValueError("omega must be positive")
    a = np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)
    a_dag = a.conj().T
    x = (a + a_dag) / math.sqrt(2 * omega)
    p = 1j * math.sqrt(omega / 2) * (a_dag - a)
    return FockOperators(a, a_dag, x, p)


def build_oscillator_H(params: OscParams) -> np.ndarray:
    ops = build_fock_operators(params.truncation, params.omega)
    a, ad = ops.a, ops.a_dag
    N = params.truncation
    return (params.omega * (ad @ a + 0.5 * np.eye(N))
            + params.alpha * (a @ a) + params.beta * (ad @ ad))


def exact_spectrum(params: OscParams, n_max: int) -> list[float]:
    Om = params.Omega
    return [(n + 0.5) * Om for n in range(n_max + 1)]


def spurious_singularities(params: OscParams) -> tuple[float, float]:
    """Roots ``z±`` where the base of Θ(z) vanishes or diverges, sorted."""
    w, al, be = params.omega, params.alpha, params.beta
    Om = params.Omega
    denom = w**2 + (al - be) ** 2
    z1 = ((al + be) * w + (al - be) * Om) / denom
    z2 = ((al + be) * w - (al - be) * Om) / denom
    return (min(z1, z2), max(z1, z2))


def metric_base(params: OscParams) -> float:
    """The scalar ``c(z)``; raises IllDefinedMetric where Θ(z) is undefined."""
    w, al, be, z = params.omega, params.alpha, params.beta, params.z
    if abs(z) >= 1:
        raise IllDefinedMetric(f"|z| = {abs(z)} >= 1: Θ(z) is not constructed at the endpoints")
    if not params.real_spectrum:
        raise ComplexSpectrumRegime(f"ω² - 4αβ = {params.omega_sq:.6g} <= 0: no metric")
    z_lo, z_hi = spurious_singularities(params)
    if z_lo <= z <= z_hi:
        raise IllDefinedMetric(f"z = {z} lies in the forbidden window [{z_lo:.6g}, {z_hi:.6g}]")
    q = math.sqrt(1 - z * z)
    num = al + be - w * z + (al - be) * q
    den = al + be - w * z - (al - be) * q
    if den == 0 or num / den <= 0:
        raise IllDefinedMetric(f"metric base c = {num}/{den} is not positive")
    return num / den


def metric_exponent(params: OscParams, ops: FockOperators | None = None) -> np.ndarray:
    """``K(z) = (p²(1-z) + ω²x²(1+z)) / (4ω sqrt(1-z²))``."""
    ops = ops or build_fock_operators(params.truncation, params.omega)
    z, w = params.z, params.omega
    x2, p2 = ops.x @ ops.x, ops.p @ ops.p
    return (p2 * (1 - z) + w**2 * x2 * (1 + z)) / (4 * w * math.sqrt(1 - z * z))


def _log_theta(params: OscParams) -> np.ndarray:
    L = math.log(metric_base(params)) * metric_exponent(params)
    L = 0.5 * (L + L.conj().T)
    Theta = matops.hermitian_function(L, np.exp)
    return L - math.log(Theta[0, 0].real) * np.eye(params.truncation)


def build_theta_z(params: OscParams, check_truncation: bool = True) -> MetricCandidate:
    """Θ(z) as a metric candidate carrying its exponent.

    The truncation diagnostic rebuilds Θ with ``M = N - N//4`` levels and
    requires the leading ``M/2`` blocks of both builds to agree to
    ``TRUNCATION_TOL`` (relative).  Comparing against a smaller rather than a
    larger space keeps the reference build inside the range where the
    exponential of the truncated exponent is numerically representable.
    """
    L = _log_theta(params)
    theta = matops.hermitian_function(L, np.exp)
    N = params.truncation
    if check_truncation and N >= 8:
        M = N - N // 4
        small = matops.hermitian_function(_log_theta(params.with_(truncation=M)), np.exp)
        m = M // 2
        drift = matops.relative_residual(theta[:m, :m] - small[:m, :m], theta[:m, :m])
        if not np.isfinite(drift) or drift > TRUNCATION_TOL:
            raise TruncationUnconverged(
                f"interior block of Θ(z) moves by {drift:.3e} between N={M} and N={N}; "
                "the truncated exponential has not converged",
                residual=drift,
            )
    return MetricCandidate(theta, source="constructed-from-model",
                           label=f"oscillator-theta(z={params.z})", log_theta=L)


def certified_theta_z(params: OscParams, tol: float | None = None) -> CertifiedMetric:
    tol = matops.default_tol("fock") if tol is None else tol
    return certify(build_theta_z(params), build_oscillator_H(params), tol, block=params.interior)


def admissible_observable_z(params: OscParams) -> np.ndarray:
    """``O(z) = p²(1-z) + ω²x²(1+z)``, the companion observable of Θ(z)."""
    ops = build_fock_operators(params.truncation, params.omega)
    z, w = params.z, params.omega
    return (ops.p @ ops.p) * (1 - z) + w**2 * (ops.x @ ops.x) * (1 + z)


def extract_mu_nu(params: OscParams, tol: float | None = None) -> tuple[float, float]:
    """Fit the hermitised Hamiltonian to ``(μ p² + ν x²)/2 + const``.

    The fit runs over the leading ``N/2`` block.  Raises FitResidualTooLarge
    when the relative fit residual exceeds ``FIT_TOL`` or ``μν`` misses
    ``Ω²`` by more than ``MU_NU_TOL`` (relative).
    """
    cm = certified_theta_z(params, tol)
    h = hermitian_equivalent(cm, build_oscillator_H(params))
    ops = build_fock_operators(params.truncation, params.omega)
    m = params.interior
    basis = [(ops.p @ ops.p)[:m, :m], (ops.x @ ops.x)[:m, :m], np.eye(m)]
    A = np.column_stack([b.ravel() for b in basis])
    target = h[:m, :m].ravel()
    coef = np.linalg.lstsq(A, target, rcond=None)[0]
    fit = matops.relative_residual(A @ coef - target, target)
    if fit > FIT_TOL:
        raise FitResidualTooLarge(f"hermitised H is not of the form μp²+νx² (residual {fit:.3e})")
    mu, nu = 2 * coef[0].real, 2 * coef[1].real
    if abs(mu * nu - params.omega_sq) > MU_NU_TOL * abs(params.omega_sq):
        raise FitResidualTooLarge(f"μν = {mu * nu:.8g} differs from Ω² = {params.omega_sq:.8g}")
    return float(mu), float(nu)


def classical_energy(params: OscParams, amplitude: float, tol: float | None = None) -> float:
    """Classical oscillation energy ``A² Ω² / (2 μ(z))``."""
    if amplitude == 0:
        return 0.0
    mu, _ = extract_mu_nu(params, tol)
    return amplitude**2 * params.omega_sq / (2 * mu)


def coalescence_diagnostic(params: OscParams) -> dict:
    """Level spacing near the Ω → 0 exceptional point.

    Reports ``Ω² = ω² - 4αβ``, the spacing ``Ω`` (complex past the EP) and
    ``dΩ/dβ = -2α/Ω``, whose divergence marks the square-root coalescence.
    """
    om2 = params.omega_sq
    Om = complex(np.sqrt(complex(om2)))
    rate = -2 * params.alpha / Om if Om != 0 else complex("inf")
    return {"omega_sq": om2, "spacing": Om, "spacing_derivative_beta": rate,
            "at_ep": om2 == 0, "real_spectrum": om2 > 0}


def low_spectrum(params: OscParams, n_max: int) -> np.ndarray:
    """Lowest ``n_max + 1`` eigenvalues of the truncated Hamiltonian."""
    es = matops.eig_general(build_oscillator_H(params), tol=matops.default_tol("fock"))
    return es.eigenvalues[: n_max + 1]


def operator_table(params: OscParams) -> dict:
    """Named standard operators of the truncated space (for admissibility scans)."""
    ops = build_fock_operators(params.truncation, params.omega)
    return {
        "x": ops.x,
        "p": ops.p,
        "number": ops.a_dag @ ops.a,
        "O(z)": admissible_observable_z(params),
    }
