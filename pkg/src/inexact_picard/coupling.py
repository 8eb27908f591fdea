"""Picard coupling of the S_N neutronics and the pin heat model.

Each outer iteration runs an inner neutronics solve on the cross sections
of the current temperature, then updates the temperature from the new
flux. In adaptive mode the inner solve stops at ``tau * r_T`` (floored at
``epsilon_phi``), where ``r_T`` is the latest relative temperature change.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .accel import accelerated_power_iterate
from .model import Problem, UnphysicalStateError, xs_at_temperature
from .thermal import ThermalModel, is_physical, update_temperature
from .transport import DivergenceError, FluxState, InnerResult, InnerStoppingRule, power_iterate

RISE_LIMIT = 5
R_T_LIMIT = 10.0


@dataclass
class OuterRecord:
    index: int
    r_T: float
    inner_iters: int
    r_N: float
    k_eff: float
    inner_tol: float
    inner_converged: bool
    wall_time: float


@dataclass
class PicardHistory:
    tau: float = 0.0
    records: list[OuterRecord] = field(default_factory=list)
    status: str = "running"
    polish_iters: int = 0
    message: str = ""

    @property
    def label(self) -> str:
        return tau_label(self.tau)

    @property
    def r_T(self) -> np.ndarray:
        return np.array([r.r_T for r in self.records])

    @property
    def inner_counts(self) -> np.ndarray:
        return np.array([r.inner_iters for r in self.records], dtype=int)

    @property
    def total_inner(self) -> int:
        return int(self.inner_counts.sum())

    @property
    def total_sweeps(self) -> int:
        return self.total_inner + self.polish_iters


@dataclass
class RhoEstimate:
    rho: float
    window: int
    ratios: np.ndarray

    @property
    def stagnant(self) -> bool:
        return abs(self.rho - 1.0) < 1e-12


@dataclass
class CoupledState:
    flux: FluxState
    T: np.ndarray

    @property
    def k_eff(self) -> float:
        return self.flux.k_eff


def tau_label(tau: float) -> str:
    return "ref" if tau == 0 else f"tau={tau:g}"


def temperature_residual(T_new, T_old) -> float:
    T_new = np.asarray(T_new, dtype=float)
    return float(np.linalg.norm(T_new - np.asarray(T_old, dtype=float)) / np.linalg.norm(T_new))


def inner_tolerance(tau: float, r_T_prev: float | None, floor: float) -> float:
    """``max(tau * r_T, floor)``; before any ``r_T`` exists it is taken as 1."""
    r_T = 1.0 if r_T_prev is None else r_T_prev
    return max(tau * r_T, floor)


def estimate_spectral_radius(residuals, m: int = 10, skip: int = 0) -> RhoEstimate:
    """Geometric mean of the last ``m`` successive residual ratios.

    The first ``skip`` residuals are dropped before the window is taken.
    """
    r = np.asarray(residuals, dtype=float)[skip:]
    if r.size < m + 1:
        raise ValueError(f"need at least {m + 1} residuals after skipping {skip}, got {r.size}")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("residuals must be positive and finite")
    ratios = r[1:] / r[:-1]
    window = ratios[-m:]
    rho = float(np.exp(np.mean(np.log(window))))
    return RhoEstimate(rho=rho, window=m, ratios=ratios)


def divergence_guard(r_T_history, T=None) -> str:
    r = np.asarray(r_T_history, dtype=float)
    if r.size and (not np.isfinite(r[-1]) or r[-1] > R_T_LIMIT):
        return "diverged"
    if T is not None and not is_physical(T):
        return "diverged"
    if r.size > RISE_LIMIT and np.all(np.diff(r[-(RISE_LIMIT + 1):]) > 0):
        return "diverged"
    return "continue"


def inner_solve(problem: Problem, state: FluxState, xs_eff, rule: InnerStoppingRule) -> InnerResult:
    h = problem.model.h
    if problem.settings.accel == "lpcmfd":
        return accelerated_power_iterate(state, xs_eff, problem.quadrature, h, rule, problem.settings.coarsening)
    return power_iterate(state, xs_eff, problem.quadrature, h, rule)


def initial_state(problem: Problem) -> CoupledState:
    """Flat flux and ``k = 1``; temperature from the heat model on that flux."""
    flux = FluxState.flat(problem.model.n_cells, problem.quadrature)
    thermal = ThermalModel.from_model(problem.model, problem.xs)
    T_ref = np.full(problem.model.n_cells, problem.xs.T_ref)
    return CoupledState(flux=flux, T=update_temperature(flux.scalar_flux, T_ref, thermal, problem.xs))


def picard_solve(problem: Problem, tau: float | None = None, state: CoupledState | None = None):
    """Inexact Picard iteration. Returns ``(CoupledState, PicardHistory)``.

    ``tau`` overrides ``settings.tau``; zero selects a fixed inner tolerance of
    ``epsilon_phi``. After the outer test passes, one last inner solve at
    ``epsilon_phi`` on the final temperature polishes the returned flux.
    """
    s = problem.settings
    tau = s.tau if tau is None else tau
    thermal = ThermalModel.from_model(problem.model, problem.xs)
    state = initial_state(problem) if state is None else state
    flux, T = state.flux.copy(), state.T.copy()
    history = PicardHistory(tau=tau)
    r_T_prev = None

    def rule_for(r_T):
        if tau > 0:
            return InnerStoppingRule.adaptive(tau, 1.0 if r_T is None else r_T, s.epsilon_phi, s.max_inner)
        return InnerStoppingRule.fixed(s.epsilon_phi, s.max_inner)

    try:
        for outer in range(1, s.max_outer + 1):
            t0 = time.perf_counter()
            rule = rule_for(r_T_prev)
            res = inner_solve(problem, flux, xs_at_temperature(problem.xs, T), rule)
            flux = res.state
            T_new = update_temperature(flux.scalar_flux, T, thermal, problem.xs)
            r_T = temperature_residual(T_new, T)
            T = T_new
            r_N = float(res.residuals[-1]) if res.iterations else math.nan
            history.records.append(
                OuterRecord(outer, r_T, res.iterations, r_N, flux.k_eff, rule.tolerance, res.converged,
                            time.perf_counter() - t0)
            )
            r_T_prev = r_T
            if r_T <= s.epsilon_T:
                polish = inner_solve(
                    problem, flux, xs_at_temperature(problem.xs, T), InnerStoppingRule.fixed(s.epsilon_phi, s.max_inner)
                )
                flux = polish.state
                history.polish_iters = polish.iterations
                history.status = "converged"
                break
            if divergence_guard(history.r_T, T) == "diverged":
                history.status = "diverged"
                break
        else:
            history.status = "cap"
    except (UnphysicalStateError, DivergenceError) as err:
        history.status = "diverged"
        history.message = str(err)
    return CoupledState(flux=flux, T=T), history


def outer_rate(history: PicardHistory, m: int = 10, skip: int = 3) -> RhoEstimate:
    return estimate_spectral_radius(history.r_T, m=m, skip=skip)


def measure_inner_rate(problem: Problem, iterations: int = 3000, window: int = 10, seed: int = 0,
                       amplitude: float = 0.1, tol: float = 1e-11) -> RhoEstimate:
    """Asymptotic inner residual ratio on the cross sections of the initial state.

    The flat start is the exact fundamental mode of a homogeneous slab, so a
    seeded random perturbation is added to excite every spatial mode. The
    solve stops at ``tol`` (before round-off pollutes the ratios) or after
    ``iterations`` sweeps.
    """
    start = initial_state(problem)
    flux = start.flux.copy()
    rng = np.random.default_rng(seed)
    phi = flux.scalar_flux * (1.0 + amplitude * rng.uniform(-1.0, 1.0, flux.scalar_flux.size))
    flux.scalar_flux = phi / phi.mean()
    res = inner_solve(problem, flux, xs_at_temperature(problem.xs, start.T), InnerStoppingRule.fixed(tol, iterations))
    return estimate_spectral_radius(res.residuals, m=window)
