import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renarea.jets import Jet, JetError, jet_arithmetic, taylor_derivatives, taylor_ode

N = 4
coeffs = st.lists(st.floats(-3, 3, allow_nan=False), min_size=N + 1, max_size=N + 1)


def r(order=N):
    return Jet.variable(order)


def test_product_of_conjugates():
    x = r()
    out = jet_arithmetic(1 + x * x, 1 - x * x, "mul")
    np.testing.assert_allclose(out.c, [1, 0, 0, 0, -1])


def test_binomial_sqrt():
    out = jet_arithmetic(1 + 2 * r() * r(), None, "sqrt")
    np.testing.assert_allclose(out.c, [1, 0, 1, 0, -0.5])
    np.testing.assert_allclose(np.sqrt(1 + 2 * r(6) ** 2).c, [1, 0, 1, 0, -0.5, 0, 0.5])


def test_derivative_of_cube():
    x = r(6)
    d = jet_arithmetic((1 - x * x / 4) ** 3, None, "ddr")
    np.testing.assert_allclose(d.c, [0, -1.5, 0, 0.75, 0, -0.09375])


def test_division_needs_invertible_constant():
    with pytest.raises(JetError):
        jet_arithmetic(Jet.constant(1.0, N), r(), "div")
    with pytest.raises(JetError):
        np.sqrt(r())


def test_compose_and_elementary_functions():
    x = r(6)
    e = np.exp(x)
    fact = np.cumprod(np.r_[1, np.arange(1, 7)])
    np.testing.assert_allclose(e.c, 1 / fact)
    np.testing.assert_allclose(np.log(e).c, x.c, atol=1e-15)
    s, c = np.sin(x), np.cos(x)
    np.testing.assert_allclose((s * s + c * c).c, [1, 0, 0, 0, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(np.arctan(np.tan(x)).c, x.c, atol=1e-14)
    inner = x * x
    np.testing.assert_allclose(jet_arithmetic(1 / (1 - x), inner, "compose").c, [1, 0, 1, 0, 1, 0, 1])


def test_field_valued_coefficients():
    a = Jet(np.stack([np.ones(3), np.arange(3.0), np.zeros(3)]))
    b = a * a
    np.testing.assert_allclose(b.c[1], 2 * np.arange(3.0))
    np.testing.assert_allclose(b.c[2], np.arange(3.0) ** 2)
    assert b[1].c.shape == (3,)


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs, coeffs)
def test_ring_axioms(a, b, c):
    A, B, C = Jet(a), Jet(b), Jet(c)
    np.testing.assert_allclose(((A * B) * C).c, (A * (B * C)).c, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose((A * (B + C)).c, (A * B + A * C).c, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose((A * B).c, (B * A).c)


@settings(max_examples=40, deadline=None)
@given(coeffs)
def test_division_inverts_multiplication(a):
    a = np.asarray(a)
    a[0] = 1.0 + abs(a[0])
    A = Jet(a)
    B = Jet(np.linspace(0.5, 1.5, N + 1))
    np.testing.assert_allclose(((A * B) / A).c, B.c, rtol=1e-9, atol=1e-9)


def test_taylor_ode_matches_exponential_and_harmonic():
    c = taylor_ode(lambda t, y: y, 0.0, [1.0], 6)
    np.testing.assert_allclose(taylor_derivatives(c)[:, 0], np.ones(7))
    c = taylor_ode(lambda t, y: [y[1], -y[0]], 0.3, [np.sin(0.3), np.cos(0.3)], 5)
    d = taylor_derivatives(c)[:, 0]
    np.testing.assert_allclose(d, [np.sin(0.3), np.cos(0.3), -np.sin(0.3), -np.cos(0.3), np.sin(0.3), np.cos(0.3)],
                               atol=1e-14)
