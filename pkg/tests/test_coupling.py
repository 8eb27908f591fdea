import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from inexact_picard.coupling import (
    divergence_guard,
    estimate_spectral_radius,
    inner_tolerance,
    measure_inner_rate,
    outer_rate,
    picard_solve,
    tau_label,
    temperature_residual,
)
from inexact_picard.model import CouplingSettings, CrossSectionSet, validate

from conftest import heat_balance_model


def test_temperature_residual_examples():
    assert temperature_residual(np.full(4, 850.0), np.full(4, 850.0)) == 0.0
    assert temperature_residual(np.full(4, 858.5), np.full(4, 850.0)) == pytest.approx(8.5 / 858.5, rel=1e-14)
    assert temperature_residual(np.full(4, 858.5), np.full(4, 850.0)) == pytest.approx(0.009901, abs=1e-6)


@given(hnp.arrays(float, 10, elements=st.floats(300, 2000)), hnp.arrays(float, 10, elements=st.floats(300, 2000)),
       st.floats(0.01, 100.0))
def test_temperature_residual_scale_free(a, b, c):
    assert temperature_residual(c * a, c * b) == pytest.approx(temperature_residual(a, b), rel=1e-12, abs=1e-15)


def test_inner_tolerance_examples():
    assert inner_tolerance(0.5, 1e-3, 1e-8) == pytest.approx(5e-4)
    assert inner_tolerance(0.5, 1e-9, 1e-8) == 1e-8
    assert inner_tolerance(0.5, None, 1e-8) == 0.5


@given(st.floats(1e-4, 10.0), st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
def test_inner_tolerance_floor_and_monotone(tau, r1, r2):
    lo, hi = sorted((r1, r2))
    assert inner_tolerance(tau, lo, 1e-8) <= inner_tolerance(tau, hi, 1e-8)
    assert inner_tolerance(tau, lo, 1e-8) >= 1e-8


def test_spectral_radius_examples():
    assert estimate_spectral_radius([1, 0.5, 0.25, 0.125], m=3).rho == pytest.approx(0.5, rel=1e-14)
    est = estimate_spectral_radius([1, 0.7, 0.5, 0.34], m=2)
    assert est.rho == pytest.approx(np.sqrt(0.34 / 0.7), rel=1e-14)
    assert est.rho == pytest.approx(0.6969, abs=1e-4)
    flat = estimate_spectral_radius([0.2] * 6, m=5)
    assert flat.rho == 1.0 and flat.stagnant


def test_spectral_radius_errors():
    with pytest.raises(ValueError):
        estimate_spectral_radius([1.0, 0.5], m=3)
    with pytest.raises(ValueError):
        estimate_spectral_radius([1.0, 0.0, 0.5, 0.1], m=2)


@given(st.floats(0.05, 0.99), st.integers(3, 12), st.floats(1e-3, 10.0))
def test_spectral_radius_recovers_geometric_rate(rho, m, r0):
    r = r0 * rho ** np.arange(m + 4)
    assert estimate_spectral_radius(r, m=m, skip=2).rho == pytest.approx(rho, rel=1e-10)


def test_guard_examples():
    assert divergence_guard([0.1, 0.05, 0.02, 0.01, 0.005, 0.002]) == "continue"
    assert divergence_guard([0.1, 0.12, 0.15, 0.19, 0.25, 0.33]) == "diverged"
    assert divergence_guard([0.1, 11.0]) == "diverged"
    assert divergence_guard([0.1], T=np.array([900.0, 4500.0])) == "diverged"


@given(st.integers(6, 40))
def test_guard_ignores_decaying_oscillation(n):
    ratios = np.where(np.arange(n) % 2 == 0, 1.1, 0.5)
    assert divergence_guard(0.1 * np.cumprod(ratios)) == "continue"


def test_tau_label():
    assert tau_label(0) == "ref"
    assert tau_label(0.5) == "tau=0.5"


def test_zero_feedback_is_decoupled():
    xs = CrossSectionSet(sigma_f1_rel=0.0, sigma_a1_rel=0.0)
    p = validate(heat_balance_model(), xs, CouplingSettings(accel="lpcmfd"))
    _, h = picard_solve(p)
    assert h.status == "converged"
    assert len(h.records) <= 2 and h.r_T[-1] < 1e-8


def test_fixed_tolerance_run(coupled_problem):
    state, h = picard_solve(coupled_problem, tau=0.0)
    assert h.status == "converged"
    assert h.r_T[-1] <= 1e-7 and np.all(h.r_T[:-1] > 1e-7)
    assert np.all(h.inner_counts >= 1)
    assert all(r.inner_tol == 1e-8 and r.inner_converged for r in h.records)
    assert 0.70 < outer_rate(h).rho < 0.80
    assert abs(state.flux.scalar_flux.mean() - 1.0) < 1e-13


def test_adaptive_tightening(coupled_problem):
    _, h = picard_solve(coupled_problem, tau=0.5)
    assert h.status == "converged"
    tol = np.array([r.inner_tol for r in h.records])
    assert tol[0] == 0.5
    r_T = h.r_T
    for k in range(2, len(tol)):
        if r_T[k - 1] < r_T[k - 2]:
            assert tol[k] <= tol[k - 1]
    assert np.all(tol >= 1e-8)


def test_outer_rate_insensitive_to_tight_inner_tolerance(coupled_problem):
    from dataclasses import replace
    tight = replace(coupled_problem, settings=replace(coupled_problem.settings, epsilon_phi=1e-10))
    _, h8 = picard_solve(coupled_problem, tau=0.0)
    _, h10 = picard_solve(tight, tau=0.0)
    assert abs(outer_rate(h8).rho - outer_rate(h10).rho) <= 0.005


def test_strong_feedback_diverges():
    xs = CrossSectionSet(sigma_f1_rel=-2.59e-5, sigma_a1_rel=3.0e-5)
    p = validate(heat_balance_model(), xs, CouplingSettings(accel="lpcmfd"))
    _, h = picard_solve(p)
    assert h.status == "diverged"


def test_outer_cap_reported(coupled_problem):
    from dataclasses import replace
    capped = replace(coupled_problem, settings=replace(coupled_problem.settings, max_outer=3))
    _, h = picard_solve(capped)
    assert h.status == "cap" and len(h.records) == 3


def test_inner_rate_probe(constant_problem, coupled_problem):
    assert measure_inner_rate(constant_problem).rho == pytest.approx(0.99949, abs=5e-4)
    assert measure_inner_rate(coupled_problem).rho <= 0.75
