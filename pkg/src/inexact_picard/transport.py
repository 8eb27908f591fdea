"""One-group slab S_N solver: diamond-difference sweeps and power iteration.

Both boundaries are reflective. The sweep runs the positive directions
left to right, reflects them at x = L, then runs the negative directions
right to left; the outgoing flux at x = 0 becomes the incoming boundary
state of the next sweep.

Every inner (power) iteration is one sweep with the scattering and fission
sources lagged together. The flux is renormalized to mean 1 after every
iteration, and the boundary angular flux is rescaled with it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import EffectiveXS, QuadratureSet


class DivergenceError(ArithmeticError):
    """The neutronics iterate lost positivity or produced a null norm."""


@dataclass
class FluxState:
    scalar_flux: np.ndarray
    psi_in_left: np.ndarray  # incoming at x=0 for +mu, ordered like QuadratureSet.positive
    psi_in_right: np.ndarray  # incoming at x=L for -mu (mirror of +mu ordering)
    k_eff: float = 1.0

    @classmethod
    def flat(cls, n_cells: int, quad: QuadratureSet, k_eff: float = 1.0) -> FluxState:
        n_half = quad.nodes.size // 2
        return cls(
            scalar_flux=np.ones(n_cells),
            psi_in_left=np.full(n_half, 0.5),
            psi_in_right=np.full(n_half, 0.5),
            k_eff=k_eff,
        )

    def copy(self) -> FluxState:
        return FluxState(
            self.scalar_flux.copy(), self.psi_in_left.copy(), self.psi_in_right.copy(), self.k_eff
        )


@dataclass(frozen=True)
class InnerStoppingRule:
    """Inner termination: fixed tolerance, or ``max(floor, tau * r_T)``."""

    kind: str = "fixed"
    tol: float = 1e-8
    tau: float = 0.0
    r_T: float = 1.0
    floor: float = 1e-8
    cap: int = 50000

    @classmethod
    def fixed(cls, tol: float, cap: int = 50000) -> InnerStoppingRule:
        return cls(kind="fixed", tol=tol, floor=tol, cap=cap)

    @classmethod
    def adaptive(cls, tau: float, r_T: float, floor: float, cap: int = 50000) -> InnerStoppingRule:
        return cls(kind="adaptive", tau=tau, r_T=r_T, floor=floor, cap=cap)

    @property
    def tolerance(self) -> float:
        if self.kind == "adaptive":
            return max(self.floor, self.tau * self.r_T)
        return self.tol


@dataclass
class SweepResult:
    scalar_flux: np.ndarray
    face_current: np.ndarray  # n_cells + 1 faces
    psi_out_left: np.ndarray  # outgoing at x=0 (-mu), becomes next psi_in_left
    psi_out_right: np.ndarray  # outgoing at x=L (+mu), reflected in-sweep
    max_balance: float = 0.0
    negative_count: int = 0


@dataclass
class InnerResult:
    state: FluxState
    iterations: int
    residuals: np.ndarray
    converged: bool
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _sweep_core(q, inv_denom, h, mu, w, psi_in_left, phi, current, psi_out_left, psi_out_right, check):
    # inv_denom[i, m] = 1 / (2 mu_m + sigma_t_i h); directions are swept together
    # cell by cell, which gives independent recurrences per m.
    n = q.size
    n_half = mu.size
    max_balance = 0.0
    negatives = 0
    psi = psi_in_left.copy()
    two_mu = 2.0 * mu
    wmu = w * mu
    cur = 0.0
    for m in range(n_half):
        cur += wmu[m] * psi[m]
    current[0] = cur
    for i in range(n):
        qh = q[i] * h
        acc = 0.0
        cur = 0.0
        for m in range(n_half):
            psi_c = (qh + two_mu[m] * psi[m]) * inv_denom[i, m]
            psi_new = 2.0 * psi_c - psi[m]
            if check:
                if psi_c < 0.0 or psi_new < 0.0:
                    negatives += 1
                if qh > 0.0:
                    sigma_h = 1.0 / inv_denom[i, m] - two_mu[m]
                    bal = abs(mu[m] * (psi_new - psi[m]) + sigma_h * psi_c - qh) / qh
                    if bal > max_balance:
                        max_balance = bal
            acc += w[m] * psi_c
            psi[m] = psi_new
            cur += wmu[m] * psi_new
        phi[i] = acc
        current[i + 1] = cur
    for m in range(n_half):
        psi_out_right[m] = psi[m]
    cur = 0.0
    for m in range(n_half):
        cur += wmu[m] * psi[m]
    current[n] -= cur
    for i in range(n - 1, -1, -1):
        qh = q[i] * h
        acc = 0.0
        cur = 0.0
        for m in range(n_half):
            psi_c = (qh + two_mu[m] * psi[m]) * inv_denom[i, m]
            psi_new = 2.0 * psi_c - psi[m]
            if check:
                if psi_c < 0.0 or psi_new < 0.0:
                    negatives += 1
                if qh > 0.0:
                    sigma_h = 1.0 / inv_denom[i, m] - two_mu[m]
                    bal = abs(mu[m] * (psi_new - psi[m]) + sigma_h * psi_c - qh) / qh
                    if bal > max_balance:
                        max_balance = bal
            acc += w[m] * psi_c
            psi[m] = psi_new
            cur += wmu[m] * psi_new
        phi[i] += acc
        current[i] -= cur
    for m in range(n_half):
        psi_out_left[m] = psi[m]
    return max_balance, negatives


@njit(cache=True)
def _inverse_denominators(sigma_t, h, mu):
    out = np.empty((sigma_t.size, mu.size))
    for i in range(sigma_t.size):
        for m in range(mu.size):
            out[i, m] = 1.0 / (2.0 * mu[m] + sigma_t[i] * h)
    return out


@njit(cache=True)
def _power_kernel(phi, k, psi_left, sigma_t, sigma_s, nu_sigma_f, h, mu, w, tol, cap):
    n = phi.size
    n_half = mu.size
    inv_denom = _inverse_denominators(sigma_t, h, mu)
    residuals = np.empty(cap)
    phi = phi.copy()
    psi_left = psi_left.copy()
    psi_right = psi_left.copy()
    q = np.empty(n)
    phi_new = np.empty(n)
    current = np.empty(n + 1)
    out_left = np.empty(n_half)
    out_right = np.empty(n_half)
    count = 0
    status = 0
    f_old = 0.0
    for i in range(n):
        f_old += nu_sigma_f[i] * phi[i]
    for it in range(cap):
        for i in range(n):
            q[i] = 0.5 * (sigma_s[i] + nu_sigma_f[i] / k) * phi[i]
        _sweep_core(q, inv_denom, h, mu, w, psi_left, phi_new, current, out_left, out_right, False)
        f_new = 0.0
        total = 0.0
        for i in range(n):
            f_new += nu_sigma_f[i] * phi_new[i]
            total += phi_new[i]
        if f_old <= 0.0 or f_new <= 0.0 or total <= 0.0:
            status = -1
            break
        k = k * f_new / f_old
        scale = n / total
        diff2 = 0.0
        norm2 = 0.0
        f_old = 0.0
        for i in range(n):
            v = phi_new[i] * scale
            diff2 += (v - phi[i]) ** 2
            norm2 += v * v
            phi[i] = v
            f_old += nu_sigma_f[i] * v
        for m in range(n_half):
            psi_left[m] = out_left[m] * scale
            psi_right[m] = out_right[m] * scale
        r = np.sqrt(diff2 / norm2)
        residuals[it] = r
        count = it + 1
        if r <= tol:
            status = 1
            break
    return phi, k, psi_left, psi_right, residuals[:count], status


def _sweep_kernel(q, sigma_t, h, mu, w, psi_in_left):
    n = q.size
    phi = np.empty(n)
    current = np.empty(n + 1)
    out_left = np.empty(mu.size)
    out_right = np.empty(mu.size)
    inv_denom = _inverse_denominators(sigma_t, h, mu)
    bal, neg = _sweep_core(q, inv_denom, h, mu, w, psi_in_left, phi, current, out_left, out_right, True)
    return phi, current, out_left, out_right, bal, neg


# --------------------------------------------------------------------------
# public operations


def assemble_source(phi, xs_eff: EffectiveXS, k: float) -> np.ndarray:
    """Isotropic angular source ``(Sigma_s phi + nu Sigma_f phi / k) / 2``."""
    if not k > 0:
        raise ValueError("k must be positive")
    phi = np.asarray(phi, dtype=float)
    return 0.5 * (xs_eff.sigma_s * phi + xs_eff.nu_sigma_f * phi / k)


def dd_sweep(q, sigma_t, quad: QuadratureSet, h: float, psi_in_left) -> SweepResult:
    q = np.ascontiguousarray(q, dtype=float)
    sigma_t = np.ascontiguousarray(np.broadcast_to(sigma_t, q.shape), dtype=float)
    if np.any(sigma_t <= 0):
        raise ValueError("total cross section must be positive")
    mu, w = quad.positive
    phi, current, out_left, out_right, bal, neg = _sweep_kernel(
        q, sigma_t, float(h), mu, w, np.ascontiguousarray(psi_in_left, dtype=float)
    )
    return SweepResult(phi, current, out_left, out_right, float(bal), int(neg))


def k_update(k_old: float, fission_new: float, fission_old: float) -> float:
    if not (fission_new > 0 and fission_old > 0):
        raise DivergenceError("fission integral became nonpositive")
    return k_old * fission_new / fission_old


def flux_residual(phi_new, phi_old) -> float:
    """Relative L2 change ``||phi_new - phi_old|| / ||phi_new||``."""
    phi_new = np.asarray(phi_new, dtype=float)
    denom = np.linalg.norm(phi_new)
    if denom == 0:
        raise DivergenceError("zero flux norm")
    return float(np.linalg.norm(phi_new - np.asarray(phi_old, dtype=float)) / denom)


def normalize(state: FluxState, h: float, L: float) -> FluxState:
    """Rescale flux and boundary state so that ``sum(phi) * h == L``."""
    total = state.scalar_flux.sum() * h
    if not total > 0:
        raise DivergenceError("nonpositive flux integral")
    s = L / total
    return FluxState(state.scalar_flux * s, state.psi_in_left * s, state.psi_in_right * s, state.k_eff)


def power_step(state: FluxState, xs_eff: EffectiveXS, quad: QuadratureSet, h: float) -> tuple[FluxState, SweepResult]:
    """One unaccelerated inner iteration, written out operation by operation."""
    q = assemble_source(state.scalar_flux, xs_eff, state.k_eff)
    sw = dd_sweep(q, xs_eff.sigma_t, quad, h, state.psi_in_left)
    k_new = k_update(
        state.k_eff, np.sum(xs_eff.nu_sigma_f * sw.scalar_flux) * h, np.sum(xs_eff.nu_sigma_f * state.scalar_flux) * h
    )
    new = FluxState(sw.scalar_flux, sw.psi_out_left, sw.psi_out_right, k_new)
    return normalize(new, h, h * state.scalar_flux.size), sw


def power_iterate(state: FluxState, xs_eff: EffectiveXS, quad: QuadratureSet, h: float, rule: InnerStoppingRule) -> InnerResult:
    """Inner power iteration until ``r_N <= rule.tolerance`` or the cap.

    Returns the last iterate as is; the cap is reported through
    ``converged=False`` rather than raised.
    """
    mu, w = quad.positive
    phi, k, psi_l, psi_r, res, status = _power_kernel(
        np.ascontiguousarray(state.scalar_flux, dtype=float),
        float(state.k_eff),
        np.ascontiguousarray(state.psi_in_left, dtype=float),
        np.ascontiguousarray(xs_eff.sigma_t),
        np.ascontiguousarray(xs_eff.sigma_s),
        np.ascontiguousarray(xs_eff.nu_sigma_f),
        float(h),
        mu,
        w,
        float(rule.tolerance),
        int(rule.cap),
    )
    if status < 0:
        raise DivergenceError("flux or fission integral became nonpositive during power iteration")
    new = FluxState(phi, psi_l, psi_r, float(k))
    return InnerResult(new, res.size, res, status == 1)
