import numpy as np
import pytest

from renarea.geometry import (
    ChartDomainError, ChartPoint, MetricDegenerate, MetricField, ball_orbit, ball_radius_to_r,
    bianchi_residuals, curvature_at, euclidean, hyperbolic_ball, metric_at, normal_form_orbit,
    perturbed, r_to_ball_radius, sigma2_conformal_residual,
)
import jax.numpy as jnp


@pytest.fixture(scope="module")
def ball5():
    return hyperbolic_ball(5)


def test_hyperbolic_scalar_curvature_autodiff(ball5):
    b = curvature_at(ball5, np.array([0.1, -0.2, 0.05, 0.3, 0.0]))
    assert abs(b.scalar + 20) / 20 <= 1e-6
    assert np.abs(b.weyl).max() <= 1e-10
    np.testing.assert_allclose(b.ricci, -4 * b.metric, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(b.schouten, -0.5 * b.metric, rtol=1e-10, atol=1e-10)


def test_hyperbolic_scalar_curvature_finite_differences(ball5):
    b = curvature_at(ball5, np.array([0.1, -0.2, 0.05, 0.3, 0.0]), method="fd")
    assert abs(b.scalar + 20) / 20 <= 1e-4


def test_flat_space_is_flat():
    b = curvature_at(euclidean(3), np.array([0.3, 1.0, -2.0]))
    assert np.abs(b.riemann).max() == 0.0


def test_normal_form_is_hyperbolic():
    pair = normal_form_orbit(2, 1)
    x = np.array([0.2, -0.1, 0.4, 0.5, 0.3])
    b = curvature_at(pair.singular, x)
    assert abs(b.scalar + 20) <= 1e-9
    # the compact scale of the normal form is not conformally flat only through r; Weyl is invariant
    assert np.abs(b.weyl).max() <= 1e-8 * np.abs(b.riemann).max()
    first, second = bianchi_residuals(pair.singular, x)
    assert first <= 1e-10 and second <= 1e-8


def test_ball_orbit_matches_radius_map():
    rho = np.linspace(0.05, 0.95, 7)
    np.testing.assert_allclose(r_to_ball_radius(ball_radius_to_r(rho)), rho)
    pair = ball_orbit(1, 2)
    b = curvature_at(pair.singular, np.array([0.3, 0.1, -0.2, 0.4, 0.5]))
    assert abs(b.scalar + 20) <= 1e-8


def test_sigma2_conformal_identity_in_four_dimensions():
    pair = normal_form_orbit(2, 0)
    res = sigma2_conformal_residual(pair.compact, pair.r, np.array([0.1, 0.2, -0.3, 0.4]))
    assert abs(res) <= 1e-9
    b = curvature_at(pair.singular, np.array([0.1, 0.2, -0.3, 0.4]))
    assert abs(b.sigma2 - 1.5) <= 1e-10


def test_perturbed_metric_has_weyl():
    pair = perturbed(normal_form_orbit(3, 0), 0.05, seed=1, center=np.r_[0, 0, 0, 0, 0.3], width=0.3)
    b = curvature_at(pair.compact, np.array([0.05, 0.05, 0.0, 0.1, 0.3]))
    assert np.abs(b.weyl).max() > 1e-3


def test_domain_and_degeneracy_errors(ball5):
    with pytest.raises(ChartDomainError):
        metric_at(ball5, np.array([0.9, 0.9, 0.0, 0.0, 0.0]))
    with pytest.raises(ChartDomainError):
        metric_at(ball5, ChartPoint.of(np.zeros(5), "other"))
    bad = MetricField(2, lambda x: jnp.array([[1.0, 0.0], [0.0, -1.0]]) + 0 * x[0], -1, 1, "bad")
    with pytest.raises(MetricDegenerate):
        metric_at(bad, np.zeros(2))
    skew = MetricField(2, lambda x: jnp.array([[1.0, 0.5], [0.0, 1.0]]) + 0 * x[0], -1, 1, "skew")
    with pytest.raises(MetricDegenerate):
        metric_at(skew, np.zeros(2))
    with pytest.raises(ValueError):
        curvature_at(ball5, np.zeros(5), method="spectral")
