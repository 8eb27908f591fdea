import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inexact_picard.model import (
    ConfigError,
    CouplingSettings,
    CrossSectionSet,
    PinParameters,
    SlabModel,
    UnphysicalStateError,
    gauss_legendre,
    validate,
    xs_at_temperature,
)


def legendre_newton_roots(n, iters=100):
    """Roots of P_n by Newton on the three-term recurrence."""
    roots = []
    for i in range(1, n + 1):
        x = math.cos(math.pi * (i - 0.25) / (n + 0.5))
        for _ in range(iters):
            p0, p1 = 1.0, x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1.0)
            step = p1 / dp
            x -= step
            if abs(step) < 1e-16:
                break
        roots.append(x)
    return np.sort(roots)


def test_two_point_rule():
    q = gauss_legendre(2)
    np.testing.assert_allclose(q.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-12)
    np.testing.assert_allclose(q.weights, [1.0, 1.0], atol=1e-14)


def test_s12_moments():
    q = gauss_legendre(12)
    assert abs(q.weights.sum() - 2.0) < 1e-13
    assert abs(np.sum(q.weights * q.nodes**2) - 2.0 / 3.0) < 1e-12


def test_s12_nodes_match_newton_oracle():
    np.testing.assert_allclose(gauss_legendre(12).nodes, legendre_newton_roots(12), atol=1e-12)


@pytest.mark.parametrize("n", [0, 3, 7, 66, 2.0])
def test_bad_quadrature_order(n):
    with pytest.raises(ConfigError, match="sn_order"):
        gauss_legendre(n)


@given(st.integers(1, 32).map(lambda k: 2 * k))
def test_quadrature_symmetry_and_moments(n):
    q = gauss_legendre(n)
    assert abs(q.weights.sum() - 2.0) < 1e-13
    assert abs(np.sum(q.weights * q.nodes)) < 1e-13
    np.testing.assert_array_equal(q.nodes, -q.nodes[::-1])
    np.testing.assert_array_equal(q.weights, q.weights[::-1])
    assert np.all(q.weights > 0)
    mu, w = q.positive
    assert mu.size == n // 2 and np.all(np.diff(mu) > 0)


def test_xs_at_reference(xs):
    e = xs_at_temperature(xs, [850.0])
    assert e.sigma_t[0] == pytest.approx(0.534, rel=1e-15)
    assert e.nu_sigma_f[0] == pytest.approx(0.0255, rel=1e-15)
    assert e.sigma_s[0] == pytest.approx(0.96 * 0.534)
    assert e.sigma_a[0] == pytest.approx(0.02136)


def test_xs_plus_100K(xs):
    e = xs_at_temperature(xs, [950.0])
    assert e.nu_sigma_f[0] == pytest.approx(0.0255 * (1 - 2.59e-5 * 100), rel=1e-14)
    assert e.sigma_a[0] == pytest.approx(0.02136 * (1 + 9.63e-6 * 100), rel=1e-13)


@given(st.floats(300, 2500), st.floats(300, 2500))
def test_xs_exactly_affine(T1, T2):
    xs = CrossSectionSet()
    a, b = xs_at_temperature(xs, [T1]), xs_at_temperature(xs, [T2])
    m = xs_at_temperature(xs, [0.5 * (T1 + T2)])
    for name in ("sigma_t", "sigma_s", "nu_sigma_f", "sigma_a"):
        lhs = getattr(a, name) + getattr(b, name)
        assert np.allclose(lhs, 2 * getattr(m, name), rtol=1e-14, atol=0)


@given(st.lists(st.floats(250, 3500), min_size=1, max_size=20))
def test_total_is_scatter_plus_absorption(T):
    e = xs_at_temperature(CrossSectionSet(), T)
    np.testing.assert_allclose(e.sigma_t, e.sigma_s + e.sigma_a, rtol=1e-15)


def test_unphysical_temperature(xs):
    with pytest.raises(UnphysicalStateError):
        xs_at_temperature(xs, [-5.0])
    hot = CrossSectionSet(sigma_f1_rel=-1e-2)
    with pytest.raises(UnphysicalStateError):
        xs_at_temperature(hot, [1000.0])


def test_default_problem_is_valid(xs):
    p = validate(SlabModel(L=150.0, n_cells=300, sn_order=12), xs, CouplingSettings())
    assert p.quadrature.nodes.size == 12
    assert p.model.h == 0.5


def test_validate_collects_every_error():
    with pytest.raises(ConfigError) as info:
        validate(SlabModel(sn_order=7, L=-1.0), CrossSectionSet(c0=1.0), CouplingSettings(tau=-1.0))
    fields = {msg.split(":")[0] for msg in info.value.errors}
    assert {"c0", "sn_order", "L", "tau"} <= fields


def test_heat_model_selector():
    pin = PinParameters(0.03, 0.41, 0.6, 0.17, 0.42, 0.48, 3.0, 0.41, 200.0, 1e12)
    with pytest.raises(ConfigError, match="delta_T"):
        validate(SlabModel(pin=pin), CrossSectionSet(), CouplingSettings())
    validate(SlabModel(pin=pin, delta_T=None), CrossSectionSet(), CouplingSettings())


def test_coarsening_must_divide_mesh():
    with pytest.raises(ConfigError, match="coarsening"):
        validate(SlabModel(), CrossSectionSet(), CouplingSettings(accel="lpcmfd", coarsening=7))
