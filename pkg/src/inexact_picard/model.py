"""Problem definition for the one-group slab N/TH model.

Cross sections are affine in the local fuel temperature about ``T_ref``.
Only the absorption and nu-fission coefficients are inputs; the scattering
cross section is held at its reference value, so the total cross section
carries the whole absorption change (``Sigma_t1 = Sigma_a1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid problem configuration.

    ``errors`` holds one message per violated invariant; each message starts
    with the offending field name.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class UnphysicalStateError(ArithmeticError):
    """A cross section or temperature left its physical range."""


COOLANT_MODES = ("constant", "heat-balance")
ACCEL_MODES = ("none", "lpcmfd")


@dataclass(frozen=True)
class CrossSectionSet:
    sigma_t0: float = 0.534
    nu_sigma_f0: float = 0.0255
    c0: float = 0.96
    sigma_f1_rel: float = -2.59e-5
    sigma_a1_rel: float = 9.63e-6
    T_ref: float = 850.0

    @property
    def sigma_a0(self) -> float:
        return (1.0 - self.c0) * self.sigma_t0

    @property
    def sigma_s0(self) -> float:
        return self.c0 * self.sigma_t0

    @property
    def k_inf(self) -> float:
        return self.nu_sigma_f0 / self.sigma_a0


@dataclass(frozen=True)
class PinParameters:
    """Explicit fuel-pin description for the lumped heat coefficient.

    Units are W, cm, K. ``flux_level`` converts the mean-one flux shape into
    an absolute scalar flux and ``nu`` converts nu-fission into fission.
    """

    k_f: float
    r_g: float
    h_g: float
    k_c: float
    r_ci: float
    r_co: float
    h: float
    r_fo: float
    kappa: float
    flux_level: float
    nu: float = 2.43


@dataclass(frozen=True)
class SlabModel:
    L: float = 150.0
    n_cells: int = 300
    sn_order: int = 12
    coolant_mode: str = "constant"
    T_m: float = 575.0
    delta_T: float | None = 275.0
    coolant_rise: float = 0.0
    pin: PinParameters | None = None

    @property
    def h(self) -> float:
        return self.L / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    @property
    def mean_coolant(self) -> float:
        if self.coolant_mode == "heat-balance":
            return self.T_m + 0.5 * self.coolant_rise
        return self.T_m


@dataclass(frozen=True)
class QuadratureSet:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def positive(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive direction cosines and their weights, ascending."""
        mask = self.nodes > 0
        return self.nodes[mask], self.weights[mask]


@dataclass(frozen=True)
class CouplingSettings:
    epsilon_T: float = 1e-7
    epsilon_phi: float = 1e-8
    tau: float = 0.0
    max_outer: int = 300
    max_inner: int = 50000
    accel: str = "none"
    coarsening: int = 6
    j_max: int = 64


@dataclass(frozen=True)
class EffectiveXS:
    """Per-cell cross sections at a given temperature field."""

    sigma_t: np.ndarray
    sigma_s: np.ndarray
    nu_sigma_f: np.ndarray
    sigma_a: np.ndarray


@dataclass(frozen=True)
class Problem:
    model: SlabModel
    xs: CrossSectionSet
    settings: CouplingSettings
    quadrature: QuadratureSet = field(repr=False)


def gauss_legendre(n: int) -> QuadratureSet:
    """Gauss-Legendre rule on [-1, 1] with ``n`` (even) points."""
    if not isinstance(n, (int, np.integer)) or n % 2 or not 2 <= n <= 64:
        raise ConfigError(f"sn_order: must be an even integer in [2, 64], got {n!r}")
    mu, w = np.polynomial.legendre.leggauss(int(n))
    # Symmetrize exactly so that reflection maps direction m onto n-1-m.
    mu = 0.5 * (mu - mu[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureSet(nodes=mu, weights=w)


def xs_at_temperature(xs: CrossSectionSet, T) -> EffectiveXS:
    T = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(~np.isfinite(T)) or np.any(T <= 0):
        raise UnphysicalStateError("temperature must be finite and positive")
    dT = T - xs.T_ref
    sigma_a = xs.sigma_a0 * (1.0 + xs.sigma_a1_rel * dT)
    nu_sigma_f = xs.nu_sigma_f0 * (1.0 + xs.sigma_f1_rel * dT)
    sigma_s = np.full_like(T, xs.sigma_s0)
    sigma_t = sigma_s + sigma_a
    if np.any(sigma_a <= 0) or np.any(sigma_t <= 0):
        raise UnphysicalStateError("absorption or total cross section became nonpositive")
    if np.any(nu_sigma_f < 0):
        raise UnphysicalStateError("nu-fission cross section became negative")
    return EffectiveXS(sigma_t=sigma_t, sigma_s=sigma_s, nu_sigma_f=nu_sigma_f, sigma_a=sigma_a)


def _positive(value) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value) and value > 0


def validate(model: SlabModel, xs: CrossSectionSet, settings: CouplingSettings) -> Problem:
    """Check every invariant and return the assembled problem.

    Raises ConfigError listing all violations at once.
    """
    errors = []

    if not _positive(xs.sigma_t0):
        errors.append("sigma_t0: must be > 0")
    if not _positive(xs.nu_sigma_f0):
        errors.append("nu_sigma_f0: must be > 0")
    if not (0.0 <= xs.c0 < 1.0):
        errors.append("c0: must satisfy 0 <= c0 < 1")
    if not _positive(xs.T_ref):
        errors.append("T_ref: must be > 0")
    for name in ("sigma_f1_rel", "sigma_a1_rel"):
        if not math.isfinite(getattr(xs, name)):
            errors.append(f"{name}: must be finite")

    if not _positive(model.L):
        errors.append("L: must be > 0")
    if not isinstance(model.n_cells, int) or model.n_cells < 10:
        errors.append("n_cells: must be an integer >= 10")
    if not isinstance(model.sn_order, int) or model.sn_order % 2 or not 2 <= model.sn_order <= 64:
        errors.append("sn_order: must be an even integer in [2, 64]")
    if model.coolant_mode not in COOLANT_MODES:
        errors.append(f"coolant_mode: must be one of {COOLANT_MODES}")
    if not _positive(model.T_m):
        errors.append("T_m: must be > 0")
    if model.coolant_rise < 0:
        errors.append("coolant_rise: must be >= 0")
    if (model.delta_T is None) == (model.pin is None):
        errors.append("delta_T: give exactly one of delta_T or the explicit pin parameters")
    elif model.delta_T is not None and not (math.isfinite(model.delta_T) and model.delta_T >= 0):
        errors.append("delta_T: must be >= 0")
    if model.pin is not None:
        for name, value in vars(model.pin).items():
            if not _positive(value):
                errors.append(f"{name}: must be > 0")
        if model.pin.r_co <= model.pin.r_ci:
            errors.append("r_co: must exceed r_ci")

    for name in ("epsilon_T", "epsilon_phi"):
        if not 0.0 < getattr(settings, name) < 1.0:
            errors.append(f"{name}: must lie in (0, 1)")
    if not settings.tau >= 0:
        errors.append("tau: must be >= 0")
    for name in ("max_outer", "max_inner", "coarsening", "j_max"):
        value = getattr(settings, name)
        if not isinstance(value, int) or value < 1:
            errors.append(f"{name}: must be an integer >= 1")
    if settings.accel not in ACCEL_MODES:
        errors.append(f"accel: must be one of {ACCEL_MODES}")
    elif (
        settings.accel == "lpcmfd"
        and isinstance(settings.coarsening, int)
        and settings.coarsening >= 1
        and isinstance(model.n_cells, int)
        and model.n_cells % settings.coarsening
    ):
        errors.append("coarsening: must divide n_cells")

    if errors:
        raise ConfigError(errors)
    return Problem(model=model, xs=xs, settings=settings, quadrature=gauss_legendre(model.sn_order))
