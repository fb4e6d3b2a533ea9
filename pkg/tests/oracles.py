"""Independent reference computations used by the test-suite.

Nothing here calls the package's numerical kernels; each oracle reaches the
answer by a different route (closed forms, scipy routines, brute force).
"""

import math

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq
from scipy.special import gammaln


def random_hermitian(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def random_quasi_hermitian(rng, n, spread=0.4, spacing=0.5):
    """(H, Θ, S, h) with H = S⁻¹ h S and Θ = S², S = expm of a small Hermitian.

    The spectrum of h is well separated (gaps ≥ ``spacing``).
    """
    energies = np.cumsum(spacing + rng.uniform(0, 1, size=n)) - n / 2
    U = sla.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))[0]
    h = (U * energies) @ U.conj().T
    S = sla.expm(random_hermitian(rng, n, spread))
    H = np.linalg.solve(S, h @ S)
    return H, S @ S, S, h


def two_level_energies(r, s, theta):
    root = np.sqrt(complex(s * s - (r * math.sin(theta)) ** 2))
    return r * math.cos(theta) - root, r * math.cos(theta) + root


def oscillator_window_roots(omega, alpha, beta):
    """z± as the roots of the numerator and denominator of the metric base c(z)."""
    q = lambda z: math.sqrt(1 - z * z)
    num = lambda z: alpha + beta - omega * z + (alpha - beta) * q(z)
    den = lambda z: alpha + beta - omega * z - (alpha - beta) * q(z)
    roots = []
    for g in (num, den):
        grid = np.linspace(-0.999, 0.999, 4001)
        vals = [g(z) for z in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0:
                roots.append(a)
            elif fa * fb < 0:
                roots.append(brentq(g, a, b, xtol=1e-15))
    return sorted(roots)


def gaussian_theta_block(omega, alpha, beta, z, N):
    """Exact N×N Fock block of c^K in normal-ordered Gaussian form.

    With K₀ = (a†a+½)/2, K₊ = a†²/2, K₋ = a²/2 the exponent is
    ``K = (K₀ + z(K₊+K₋)/2)/q``; disentangling in the 2×2 representation of
    su(1,1) gives ``c^K ∝ exp(A a†²/2) B^{a†a/2} exp(A a²/2)``.  Each matrix
    element is then a finite sum.  Normalised to ``<0|Θ|0> = 1``.
    """
    q = math.sqrt(1 - z * z)
    c = (alpha + beta - omega * z + (alpha - beta) * q) / (alpha + beta - omega * z - (alpha - beta) * q)
    lam = math.log(c)
    M22 = math.cosh(lam / 2) - math.sinh(lam / 2) / q
    if M22 <= 0:
        raise ValueError("vacuum element of c^K diverges")
    A = math.sinh(lam / 2) * z / q / M22
    B = 1 / M22**2
    E = np.zeros((N, N))
    for m in range(N):
        for k in range(m % 2, m + 1, 2):
            j = (m - k) // 2
            if j == 0:
                E[m, k] = 1.0
            elif A != 0:
                E[m, k] = np.sign(A) ** j * math.exp(
                    j * math.log(abs(A) / 2) - gammaln(j + 1) + 0.5 * (gammaln(m + 1) - gammaln(k + 1)))
    D = B ** (np.arange(N) / 2)
    return (E * D) @ E.T


def commutant_dim_normal(M, tol=1e-8):
    """Σ m_k² over eigenvalue multiplicities, valid for diagonalisable M."""
    w = np.sort_complex(np.linalg.eigvals(M))
    mults, run = [], 1
    for a, b in zip(w[:-1], w[1:]):
        if abs(a - b) < tol:
            run += 1
        else:
            mults.append(run)
            run = 1
    mults.append(run)
    return sum(m * m for m in mults)


def commutant_dim_bruteforce(ops, tol=1e-9):
    """Null space of the commutator map, built column by column from E_ij."""
    n = ops[0].shape[0]
    cols = []
    for i in range(n):
        for j in range(n):
            X = np.zeros((n, n), dtype=complex)
            X[i, j] = 1
            cols.append(np.concatenate([(X @ M - M @ X).ravel() for M in ops]))
    A = np.array(cols).T
    return n * n - np.linalg.matrix_rank(A, tol=tol * max(1.0, np.abs(A).max()))


def propagate_expm(H, psi0, t):
    return sla.expm(-1j * H * t) @ psi0
