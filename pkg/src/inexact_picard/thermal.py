"""Fuel temperature from a lumped single-pin heat model.

``T = T_m + A * nuSigma_f(T_old) * phi`` per axial cell. The fission-rate
coefficient is the nu-fission cross section, with the constant nu folded
into ``A``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, CrossSectionSet, SlabModel, xs_at_temperature

TEMPERATURE_BOUNDS = (200.0, 4000.0)


def thermal_resistance(k_f, r_g, h_g, k_c, r_ci, r_co, h) -> float:
    """Pellet-to-coolant resistance per unit length (cm K / W).

    Sum of pellet conduction, gap conductance, clad conduction and the
    coolant film. Pass ``k_f=math.inf`` to drop the pellet term.
    """
    if r_co <= r_ci:
        raise ConfigError("r_co: must exceed r_ci")
    for name, value in dict(k_f=k_f, r_g=r_g, h_g=h_g, k_c=k_c, r_ci=r_ci, r_co=r_co, h=h).items():
        if not value > 0:
            raise ConfigError(f"{name}: must be > 0")
    pellet = 0.0 if math.isinf(k_f) else 1.0 / (8.0 * math.pi * k_f)
    gap = 1.0 / (2.0 * math.pi * r_g * h_g)
    clad = math.log(r_co / r_ci) / (2.0 * math.pi * k_c)
    film = 1.0 / (2.0 * math.pi * r_co * h)
    return pellet + gap + clad + film


def calibrate_A(delta_T: float, xs: CrossSectionSet, flux_mean: float = 1.0) -> float:
    """``A`` such that the reference pin (flat flux, ``T_ref``) runs ``delta_T`` above coolant."""
    return delta_T / (xs.nu_sigma_f0 * flux_mean)


def coolant_profile(q_lin, T_inlet: float, rise: float) -> np.ndarray:
    """Cell-center coolant temperature from a cumulative heat balance.

    Cell ``i`` sees the heat of cells ``0..i-1`` plus half of its own, so the
    outlet face reaches exactly ``T_inlet + rise``.
    """
    q_lin = np.asarray(q_lin, dtype=float)
    if rise < 0:
        raise ConfigError("coolant_rise: must be >= 0")
    if rise == 0:
        return np.full(q_lin.shape, float(T_inlet))
    total = q_lin.sum()
    if not total > 0:
        raise ConfigError("coolant_rise: heat balance needs a positive total power")
    upstream = np.cumsum(q_lin) - 0.5 * q_lin
    return T_inlet + rise * upstream / total


@dataclass(frozen=True)
class ThermalModel:
    A: float
    coolant_mode: str = "constant"
    T_m: float = 575.0  # constant coolant, or inlet in heat-balance mode
    rise: float = 0.0

    @classmethod
    def from_model(cls, model: SlabModel, xs: CrossSectionSet) -> ThermalModel:
        if model.pin is not None:
            pin = model.pin
            R_t = thermal_resistance(pin.k_f, pin.r_g, pin.h_g, pin.k_c, pin.r_ci, pin.r_co, pin.h)
            A = math.pi * pin.r_fo**2 * pin.kappa * R_t * pin.flux_level / pin.nu
        else:
            A = calibrate_A(model.delta_T, xs)
        rise = model.coolant_rise if model.coolant_mode == "heat-balance" else 0.0
        return cls(A=A, coolant_mode=model.coolant_mode, T_m=model.T_m, rise=rise)

    def coolant(self, power) -> np.ndarray:
        power = np.asarray(power, dtype=float)
        if self.coolant_mode == "heat-balance":
            return coolant_profile(power, self.T_m, self.rise)
        return np.full(power.shape, self.T_m)


def update_temperature(phi, T_old, thermal: ThermalModel, xs: CrossSectionSet) -> np.ndarray:
    """New fuel temperature with nu-fission evaluated at the lagged ``T_old``."""
    phi = np.asarray(phi, dtype=float)
    nu_sigma_f = xs_at_temperature(xs, np.broadcast_to(T_old, phi.shape)).nu_sigma_f
    power = nu_sigma_f * phi
    return thermal.coolant(power) + thermal.A * power


def is_physical(T) -> bool:
    T = np.asarray(T, dtype=float)
    lo, hi = TEMPERATURE_BOUNDS
    return bool(np.all(np.isfinite(T)) and T.min() >= lo and T.max() <= hi)
