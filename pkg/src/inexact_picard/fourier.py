"""Fourier-analysis predictor for the spectral radius of inexact Picard.

The error of the coupled iteration is expanded in the cosine modes of the
reflective slab, ``xi_j = pi j / (Sigma_t0 L)``. Each mode is damped by the
lagged-source sweep with the factor ``arctan(xi) / xi``. The temperature
error then contracts per outer iteration by

    varrho(xi) = (T0 - Tm) [ +-tau C / T0 + f1 - (a1 - f1)(1 - c0) r / (1 - r) ]

where ``r = rho_pi(xi)``, ``f1`` and ``a1`` are the relative fission and
absorption temperature coefficients, and ``C`` couples the inner truncation
error to the outer residual. The predicted radius is the largest ``|varrho|``
over modes and signs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class FaInput:
    sigma_t0: float = 0.534
    c0: float = 0.96
    sigma_f1_rel: float = -2.59e-5
    sigma_a1_rel: float = 9.63e-6
    L: float = 150.0
    T0: float = 850.0
    T_m: float = 575.0
    rho_N: float = 0.99949
    j_max: int = 64

    def __post_init__(self):
        if not self.sigma_t0 > 0 or not self.L > 0:
            raise ValueError("sigma_t0 and L must be positive")
        if not self.T0 > self.T_m:
            raise ValueError("T0 must exceed T_m")
        if not (isinstance(self.j_max, (int, np.integer)) and self.j_max >= 1):
            raise ValueError("j_max must be an integer >= 1")

    @classmethod
    def from_problem(cls, problem, rho_N: float) -> FaInput:
        """Predictor input for a validated problem and a measured inner rate."""
        xs, model = problem.xs, problem.model
        return cls(
            sigma_t0=xs.sigma_t0,
            c0=xs.c0,
            sigma_f1_rel=xs.sigma_f1_rel,
            sigma_a1_rel=xs.sigma_a1_rel,
            L=model.L,
            T0=xs.T_ref,
            T_m=model.mean_coolant,
            rho_N=float(rho_N),
            j_max=problem.settings.j_max,
        )

    @property
    def delta_T(self) -> float:
        return self.T0 - self.T_m

    @property
    def gamma(self) -> float:
        # Feedback strength per unit flux; the reference flux level cancels.
        return (1.0 - self.c0) * (self.sigma_a1_rel - self.sigma_f1_rel)


@dataclass
class FaPrediction:
    xi: np.ndarray
    rho_pi: np.ndarray
    varrho: np.ndarray  # signed, tau = 0
    rho0: float
    C: float
    tau: float
    rho_tau: float
    tau_max: float
    dominant_j: int
    stable_unperturbed: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def C_over_T0(self) -> float:
        return self.extra.get("C_over_T0", math.nan)


def rho_pi(xi):
    """``arctan(xi) / xi`` with a series branch near zero."""
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    small = a < SERIES_CUTOFF
    safe = np.where(small, 1.0, a)
    x2 = a * a
    out = np.where(small, 1.0 - x2 / 3.0 + x2 * x2 / 5.0, np.arctan(safe) / safe)
    return float(out) if out.ndim == 0 else out


def modes(L: float, sigma_t0: float, j_max: int) -> np.ndarray:
    if not (L > 0 and sigma_t0 > 0):
        raise ValueError("L and sigma_t0 must be positive")
    return math.pi * np.arange(1, int(j_max) + 1) / (sigma_t0 * L)


def constant_C(rho_N: float, rho: float) -> float:
    """Amplification of the inner truncation error in the outer update."""
    for name, value in (("rho_N", rho_N), ("rho", rho)):
        if not 0.0 < value < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return rho_N / (1.0 - rho_N) * (1.0 - rho) / rho


def feedback_bracket(xi, inp: FaInput):
    """The tau-free part of varrho divided by ``T0 - Tm``."""
    r = rho_pi(xi)
    return inp.sigma_f1_rel - inp.gamma * r / (1.0 - r)


def varrho(xi, inp: FaInput, tau: float = 0.0, C: float = 0.0, sign: int = 1):
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return inp.delta_T * (sign * tau * C / inp.T0 + feedback_bracket(xi, inp))


def _worst(xi, inp, tau, C):
    # |varrho| maximized over the two perturbation signs, then over modes
    mags = np.maximum(np.abs(varrho(xi, inp, tau, C, 1)), np.abs(varrho(xi, inp, tau, C, -1)))
    j = int(np.argmax(mags))
    return float(mags[j]), j + 1


def perturbed_rho(inp: FaInput, tau: float, C: float) -> float:
    return _worst(modes(inp.L, inp.sigma_t0, inp.j_max), inp, tau, C)[0]


def tau_max_closed_form(rho0: float, C: float, inp: FaInput) -> float:
    if rho0 >= 1.0:
        return 0.0
    if C == 0.0:
        return math.inf
    return (1.0 - rho0) * inp.T0 / (inp.delta_T * C)


def tau_max_bisect(C: float, inp: FaInput, xtol: float = 1e-14) -> float:
    """Root of ``perturbed_rho(tau) = 1`` by bisection on a grown bracket."""
    if perturbed_rho(inp, 0.0, C) >= 1.0:
        return 0.0
    if C == 0.0:
        return math.inf
    hi = 1e-6
    while perturbed_rho(inp, hi, C) < 1.0:
        hi *= 2.0
    return float(bisect(lambda t: perturbed_rho(inp, t, C) - 1.0, 0.0, hi, xtol=xtol, rtol=1e-15, maxiter=500))


def predict_rho(inp: FaInput, tau: float = 0.0) -> FaPrediction:
    """Two-stage prediction: ``C`` from the unperturbed radius, then ``tau``."""
    xi = modes(inp.L, inp.sigma_t0, inp.j_max)
    r = rho_pi(xi)
    v0 = varrho(xi, inp)
    rho0, dominant = _worst(xi, inp, 0.0, 0.0)
    extra = {}
    if rho0 >= 1.0 or rho0 == 0.0 or not 0.0 < inp.rho_N < 1.0:
        # C undefined: either no feedback, no valid inner rate, or unstable at tau = 0
        C = 0.0 if rho0 == 0.0 or inp.rho_N == 0.0 else math.nan
        tmax = 0.0 if rho0 >= 1.0 else math.inf
        rho_tau = rho0 if tau == 0 or C == 0.0 else math.nan
        return FaPrediction(xi, r, v0, rho0, C, tau, rho_tau, tmax, dominant, rho0 < 1.0,
                            {"C_over_T0": C / inp.T0 if C == C else math.nan})
    C = constant_C(inp.rho_N, rho0)
    rho_tau, _ = _worst(xi, inp, tau, C)
    tmax = tau_max_closed_form(rho0, C, inp)
    extra["C_over_T0"] = C / inp.T0
    extra["tau_max_bisect"] = tau_max_bisect(C, inp)
    return FaPrediction(xi, r, v0, rho0, C, tau, rho_tau, tmax, dominant, True, extra)


def self_consistent_rho(inp: FaInput, tau: float, omega: float = 0.5, tol: float = 1e-12, max_iter: int = 1000):
    """Solve ``rho = max |varrho(xi; tau, C(rho_N, rho))|`` by damped fixed point.

    Exploratory alternative to the two-stage evaluation. Returns
    ``(rho, converged)``; a radius reaching 1 stops the iteration since ``C``
    is then undefined.
    """
    rho = predict_rho(inp).rho0
    if not 0.0 < rho < 1.0:
        return rho, False
    xi = modes(inp.L, inp.sigma_t0, inp.j_max)
    for _ in range(max_iter):
        target, _ = _worst(xi, inp, tau, constant_C(inp.rho_N, rho))
        new = (1.0 - omega) * rho + omega * target
        if new >= 1.0:
            return new, False
        if abs(new - rho) <= tol:
            return new, True
        rho = new
    return rho, False
