"""Coarse-mesh finite-difference acceleration with linear prolongation.

Each accelerated inner iteration is one transport sweep, a coarse-mesh
diffusion eigenvalue solve made consistent with the sweep's face currents
through drift coefficients, and a multiplicative update of the fine flux.
The update ratios live at coarse-cell centers and are interpolated linearly
to fine-cell centers (held flat in the outer half of the two end cells),
instead of the flat per-cell ratio of plain CMFD. That is what keeps the
scheme stable with optically thick coarse cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import EffectiveXS, QuadratureSet
from .transport import (
    DivergenceError,
    FluxState,
    InnerResult,
    InnerStoppingRule,
    _inverse_denominators,
    _sweep_core,
    flux_residual,
    k_update,
)

RATIO_CLAMP = (0.1, 10.0)


@dataclass
class CoarseSystem:
    p: int
    H: float
    flux: np.ndarray
    current: np.ndarray  # net current at the n_coarse + 1 coarse faces
    diffusion: np.ndarray
    d_tilde: np.ndarray  # zero on the two reflective faces
    d_hat: np.ndarray
    sigma_a: np.ndarray
    nu_sigma_f: np.ndarray
    k: float

    def face_currents(self, flux=None) -> np.ndarray:
        """Currents given by the finite-difference formula with drift."""
        flux = self.flux if flux is None else flux
        J = np.empty(flux.size + 1)
        J[0] = self.d_hat[0] * flux[0]
        J[-1] = self.d_hat[-1] * flux[-1]
        J[1:-1] = -self.d_tilde[1:-1] * (flux[1:] - flux[:-1]) + self.d_hat[1:-1] * (flux[1:] + flux[:-1])
        return J

    def tridiagonal(self):
        """Loss operator M (leakage + absorption) as (lower, diag, upper)."""
        dt, dh = self.d_tilde, self.d_hat
        diag = dt[:-1] - dh[:-1] + dt[1:] + dh[1:] + self.sigma_a * self.H
        lower = -dt[1:-1] - dh[1:-1]  # coefficient of flux[J-1] in row J
        upper = -dt[1:-1] + dh[1:-1]  # coefficient of flux[J+1] in row J
        return lower, diag, upper

    def fission(self) -> np.ndarray:
        return self.nu_sigma_f * self.H


def build_coarse(phi, face_current, xs_eff: EffectiveXS, h: float, p: int, k: float) -> CoarseSystem:
    phi = np.asarray(phi, dtype=float)
    n = phi.size
    if n % p:
        raise ValueError(f"coarsening {p} does not divide {n} cells")
    nc = n // p
    blocks = phi.reshape(nc, p)
    flux = blocks.mean(axis=1)
    if np.any(flux <= 0):
        raise DivergenceError("coarse flux is not positive")
    weight = blocks.sum(axis=1)
    sigma_a = (xs_eff.sigma_a.reshape(nc, p) * blocks).sum(axis=1) / weight
    nu_sigma_f = (xs_eff.nu_sigma_f.reshape(nc, p) * blocks).sum(axis=1) / weight
    sigma_t = (xs_eff.sigma_t.reshape(nc, p) * blocks).sum(axis=1) / weight
    H = p * h
    D = 1.0 / (3.0 * sigma_t)
    current = np.asarray(face_current, dtype=float)[::p].copy()

    d_tilde = np.zeros(nc + 1)
    d_tilde[1:-1] = 2.0 * D[:-1] * D[1:] / (H * (D[:-1] + D[1:]))
    d_hat = np.empty(nc + 1)
    d_hat[1:-1] = (current[1:-1] + d_tilde[1:-1] * (flux[1:] - flux[:-1])) / (flux[1:] + flux[:-1])
    d_hat[0] = current[0] / flux[0]
    d_hat[-1] = current[-1] / flux[-1]
    return CoarseSystem(p, H, flux, current, D, d_tilde, d_hat, sigma_a, nu_sigma_f, float(k))


@njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    c[0] = upper[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        c[i] = upper[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom
    x = np.empty(n)
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


@njit(cache=True)
def _inverse_power(lower, diag, upper, fission, flux, k, shift, tol, max_iter):
    # Wielandt: solve (M - lam_s F) x = F flux with lam_s = (1 - shift) / k;
    # shift = 1 is plain inverse power.
    total = np.sum(flux)
    lam_s = (1.0 - shift) / k
    shifted = diag - lam_s * fission
    for it in range(max_iter):
        src = fission * flux
        new = _thomas(lower, shifted, upper, src)
        f_new = np.sum(fission * new)
        if f_new <= 0.0:
            return flux, k, it + 1, False
        k_new = 1.0 / (lam_s + np.sum(src) / f_new)
        new *= total / np.sum(new)
        dphi = np.sqrt(np.sum((new - flux) ** 2) / np.sum(new * new))
        dk = abs(k_new - k) / k_new
        flux = new
        k = k_new
        if dphi <= tol and dk <= tol:
            return flux, k, it + 1, True
    return flux, k, max_iter, False


def solve_low_order(sys: CoarseSystem, tol: float = 1e-12, max_iter: int = 100000, shift: float = 0.01):
    """Coarse k-eigenproblem by shifted inverse power iteration.

    The shift sits ``shift`` (relative) below the current eigenvalue estimate
    ``1/k``, with ``k`` first estimated from the global balance of the input
    flux; every step is one tridiagonal solve. Plain inverse power (no shift)
    is the fallback for when that estimate lands below the true eigenvalue. Returns ``(flux, k, converged)`` with the flux keeping the
    input's total; convergence also requires a positive eigenvector and a
    small unshifted eigen-residual.
    """
    lower, diag, upper = sys.tridiagonal()
    F = sys.fission()
    if sys.flux.size == 1:
        return sys.flux.copy(), float(F[0] / diag[0]), True

    def loss(v):
        out = diag * v
        out[1:] += lower * v[:-1]
        out[:-1] += upper * v[1:]
        return out

    # global balance of the warm-start flux seeds the shift
    k0 = float(np.sum(F * sys.flux) / np.sum(loss(sys.flux)))
    if not k0 > 0:
        k0 = sys.k
    for s in (shift, 1.0):
        flux, k, _, ok = _inverse_power(lower, diag, upper, F, sys.flux.copy(), k0, s, tol, max_iter)
        if ok:
            src = F * flux / k
            ok = bool(np.all(flux > 0)) and np.linalg.norm(loss(flux) - src) <= 1e3 * tol * np.linalg.norm(src)
        if ok:
            break
    return flux, float(k), ok


def correction_factors(coarse_old, coarse_new, p: int):
    """Fine-center multiplicative factors from coarse ratios.

    Returns ``(factors, clamped)``.
    """
    coarse_old = np.asarray(coarse_old, dtype=float)
    coarse_new = np.asarray(coarse_new, dtype=float)
    ratio = coarse_new / coarse_old
    clamped = bool(np.any(~(ratio >= RATIO_CLAMP[0])) or np.any(ratio > RATIO_CLAMP[1]))
    ratio = np.clip(np.nan_to_num(ratio, nan=RATIO_CLAMP[0]), *RATIO_CLAMP)
    nc = ratio.size
    x_coarse = (np.arange(nc) + 0.5) * p
    x_fine = np.arange(nc * p) + 0.5
    return np.interp(x_fine, x_coarse, ratio), clamped


def prolongate_linear(phi, coarse_old, coarse_new, p: int) -> np.ndarray:
    """Apply the interpolated coarse correction and renormalize to mean 1."""
    factors, _ = correction_factors(coarse_old, coarse_new, p)
    out = np.asarray(phi, dtype=float) * factors
    return out * (out.size / out.sum())


def accelerated_power_iterate(
    state: FluxState,
    xs_eff: EffectiveXS,
    quad: QuadratureSet,
    h: float,
    rule: InnerStoppingRule,
    p: int,
) -> InnerResult:
    """Inner iteration with one sweep plus one coarse solve per step.

    Same stopping semantics as :func:`transport.power_iterate`. A failed coarse
    solve falls back to the plain power update for that step.
    """
    mu, w = quad.positive
    n = state.scalar_flux.size
    inv_denom = _inverse_denominators(np.ascontiguousarray(xs_eff.sigma_t), float(h), mu)
    tol = rule.tolerance
    phi = state.scalar_flux.copy()
    psi_left = state.psi_in_left.copy()
    psi_right = state.psi_in_right.copy()
    k = float(state.k_eff)
    residuals = []
    fallbacks = clamps = 0
    phi_half = np.empty(n)
    current = np.empty(n + 1)
    out_left = np.empty(mu.size)
    out_right = np.empty(mu.size)
    converged = False
    for _ in range(rule.cap):
        q = 0.5 * (xs_eff.sigma_s + xs_eff.nu_sigma_f / k) * phi
        _sweep_core(q, inv_denom, float(h), mu, w, psi_left, phi_half, current, out_left, out_right, False)
        ok = False
        try:
            coarse = build_coarse(phi_half, current, xs_eff, h, p, k)
            coarse_new, k_c, ok = solve_low_order(coarse)
        except (DivergenceError, ZeroDivisionError):
            ok = False
        if ok:
            factors, clamped = correction_factors(coarse.flux, coarse_new, p)
            clamps += clamped
            new = phi_half * factors
            new_left = out_left * factors[0]
            new_right = out_right * factors[-1]
            k_new = k_c
        else:
            fallbacks += 1
            new, new_left, new_right = phi_half.copy(), out_left.copy(), out_right.copy()
            k_new = k_update(k, np.sum(xs_eff.nu_sigma_f * phi_half), np.sum(xs_eff.nu_sigma_f * phi))
        total = new.sum()
        if not total > 0:
            raise DivergenceError("accelerated flux lost positivity")
        scale = n / total
        new *= scale
        r = flux_residual(new, phi)
        phi, psi_left, psi_right, k = new, new_left * scale, new_right * scale, k_new
        residuals.append(r)
        if r <= tol:
            converged = True
            break
    out = FluxState(phi, psi_left, psi_right, k)
    return InnerResult(
        out, len(residuals), np.array(residuals), converged, {"fallbacks": fallbacks, "clamped": clamps}
    )
