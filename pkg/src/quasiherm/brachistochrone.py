"""Time evolution and passage times between spin states of the two-level model.

Time is in inverse energy units (ħ = 1).  The proper spin-flip partners are
the eigenstates of ``Σ_z = S⁻¹σ_zS``, which are Θ-orthogonal; for them the
first full transfer happens at ``π / (E+ - E-)``.  The naive analysis with
the σ_z eigenstates ``(1,0), (0,1)`` is reported only as a diagnostic: those
states are not Θ-orthogonal, so the resulting "transition time" carries no
measurement meaning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import twolevel
from .errors import ComplexSpectrumRegime
from .matops import SIGMA_Z
from .transitions import BiorthogonalSystem, biorthogonal_system, theta_inner
from .twolevel import TwoLevelParams

GRID_PER_BOUND = 200
SOURCE_TOL = 1e-8
NAIVE_FLAG = "non_orthogonal_in_metric"


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    states: np.ndarray
    theta_norms: np.ndarray | None = None
    overlaps: np.ndarray | None = None
    populations: np.ndarray | None = None


class Propagator:
    """``ψ(t) = Σ_n c_n e^{-iE_n t}|n>`` with ``c_n = <ñ|ψ0>``."""

    def __init__(self, H, psi0, system: BiorthogonalSystem | None = None):
        self.system = system if system is not None else biorthogonal_system(H)
        self.H = np.asarray(H, dtype=complex)
        self.coeffs = self.system.left.conj().T @ np.asarray(psi0, dtype=complex)

    def __call__(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self.system.eigenvalues * t)
        return self.system.right @ (self.coeffs * phases)

    def derivative(self, t: float) -> np.ndarray:
        return -1j * (self.H @ self(t))


def evolve(H, psi0, t_grid, theta=None, target=None) -> EvolutionTrace:
    """Propagate ``psi0`` over ``t_grid`` (increasing).

    With ``theta`` the Θ-norms are recorded; with both ``theta`` and
    ``target`` the overlaps ``<target|Θ|ψ(t)>`` and normalised populations
    are recorded as well.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be increasing")
    prop = Propagator(H, psi0)
    states = np.array([prop(tk) for tk in t])
    norms = overlaps = pops = None
    if theta is not None:
        theta = np.asarray(theta)
        norms = np.einsum("ti,ij,tj->t", states.conj(), theta, states).real
        if target is not None:
            tgt = np.asarray(target, dtype=complex)
            overlaps = states @ (theta @ tgt).conj()
            pops = np.abs(overlaps) ** 2 / (norms * theta_inner(tgt, tgt, theta).real)
    return EvolutionTrace(t, states, norms, overlaps, pops)


@dataclass(frozen=True)
class PassageResult:
    tau: float
    bound: float
    frame: str
    gap: float
    found: bool
    source_population: float
    target_population: float
    theta_overlap: float
    caveat_flags: frozenset = field(default_factory=frozenset)


def _first_maximum(pop, dpop, horizon: float, dt: float) -> float | None:
    t_prev, d_prev = 0.0, dpop(0.0)
    t = dt
    while t <= horizon:
        d = dpop(t)
        if d_prev > 0 and d <= 0:
            return brentq(dpop, t_prev, t, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        t_prev, d_prev = t, d
        t += dt
    return None


def _population_functions(prop: Propagator, metric, target):
    tgt = np.asarray(target, dtype=complex)
    w = metric @ tgt
    norm_t = theta_inner(tgt, tgt, metric).real

    def pop(t):
        psi = prop(t)
        return abs(np.vdot(w, psi)) ** 2 / (norm_t * np.vdot(psi, metric @ psi).real)

    def dpop(t):
        # quotient rule; the norm is constant only when H is Hermitian in `metric`
        psi, dpsi = prop(t), prop.derivative(t)
        a, da = np.vdot(w, psi), np.vdot(w, dpsi)
        nrm = np.vdot(psi, metric @ psi).real
        dnrm = 2 * np.vdot(psi, metric @ dpsi).real
        return (2 * (np.conj(a) * da).real * nrm - abs(a) ** 2 * dnrm) / (norm_t * nrm**2)

    return pop, dpop


def passage_time(params: TwoLevelParams, frame: str = "proper_sigma") -> PassageResult:
    """First time of complete transfer between the two spin states.

    ``frame="proper_sigma"`` uses the Σ_z eigenstates and the metric Θ;
    the coarse grid step is ``bound/200`` and the maximum of the target
    population is refined by root finding on its time derivative.
    ``frame="naive_sigma"`` uses the σ_z eigenstates with the L² product and
    always carries the ``non_orthogonal_in_metric`` flag.
    """
    cm = twolevel.certified_metric(params)
    H = twolevel.build_H(params)
    ex = twolevel.exact_eigensystem(params)
    gap = (ex.E_plus - ex.E_minus).real
    bound = math.pi / gap
    system = biorthogonal_system(H)
    up, down = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    theta_overlap = abs(theta_inner(up, down, cm.theta)) / math.sqrt(
        theta_inner(up, up, cm.theta).real * theta_inner(down, down, cm.theta).real)

    if frame == "proper_sigma":
        psi_i, psi_f = cm.s_inverse @ up, cm.s_inverse @ down
        metric, flags = cm.theta, frozenset()
    elif frame == "naive_sigma":
        psi_i, psi_f = up, down
        metric, flags = np.eye(2), frozenset({NAIVE_FLAG})
    else:
        raise ValueError(f"unknown frame {frame!r}")

    prop = Propagator(H, psi_i, system)
    pop_f, dpop_f = _population_functions(prop, metric, psi_f)
    pop_i, _ = _population_functions(prop, metric, psi_i)
    tau = _first_maximum(pop_f, dpop_f, horizon=4 * bound, dt=bound / GRID_PER_BOUND)
    if tau is None:
        return PassageResult(float("nan"), bound, frame, gap, False, float("nan"),
                             float("nan"), theta_overlap, flags)
    src = pop_i(tau)
    return PassageResult(tau, bound, frame, gap, bool(src < SOURCE_TOL), float(src),
                         float(pop_f(tau)), theta_overlap, flags)


EP_STUDY_COLUMNS = ("theta", "gamma", "gap", "tau_proper", "bound", "tau_times_gap",
                    "theta_min_eig", "alignment_angle", "naive_theta_overlap_abs")


def ep_approach_study(r: float, s: float, theta_grid, gamma: float = 0.0) -> list[dict]:
    """Proper passage time and metric diagnostics along a θ path toward the EP.

    Each grid point must lie strictly inside the real-spectrum regime.  The
    product ``tau * gap`` stays at π while the Θ overlap of the σ_z pair and
    the metric's smallest eigenvalue expose the naive picture's collapse.
    """
    rows = []
    for th in theta_grid:
        p = TwoLevelParams(r=r, s=s, theta=float(th), gamma=gamma)
        if not p.real_spectrum:
            raise ComplexSpectrumRegime(f"θ = {th} is outside the real-spectrum regime")
        res = passage_time(p, "proper_sigma")
        rep = twolevel.ep_report(p)
        rows.append({
            "theta": float(th),
            "gamma": gamma,
            "gap": res.gap,
            "tau_proper": res.tau,
            "bound": res.bound,
            "tau_times_gap": res.tau * res.gap,
            "theta_min_eig": rep.theta_min_eigenvalue,
            "alignment_angle": rep.alignment_angle,
            "naive_theta_overlap_abs": res.theta_overlap,
        })
    return rows


def spin_expectation(params: TwoLevelParams, psi) -> complex:
    """Θ-expectation value of σ_z, complex in general since σ_z is not admissible."""
    cm = twolevel.certified_metric(params)
    return theta_inner(psi, SIGMA_Z @ psi, cm.theta) / theta_inner(psi, psi, cm.theta)
