import numpy as np
import pytest

from renarea.geometry import normal_form_orbit
from renarea.series import expand_area_form, expand_minimal_graph, expand_volume_form_4d
from renarea.solver import Scenario, cap_profile

PSI_CLIFFORD = float(np.arctan(np.sqrt(0.5)))
ROUND = [1.0, 0.0, -0.75, 0.0, 0.1875]


def scenario(p1, p2, psi0):
    return Scenario("s", p1, p2, psi0, require_minimal_boundary=False)


@pytest.mark.parametrize("psi0", [0.1, 0.3, 0.7])
def test_second_coefficient_is_mean_curvature(psi0):
    z = expand_minimal_graph(scenario(3, 0, psi0))
    assert abs(z[2] - 3 * np.tan(psi0) / 6) <= 1e-10
    assert abs(z[1]) <= 1e-14 and abs(z[3]) <= 1e-12


def test_fourth_coefficient_matches_cap():
    theta = 0.3
    z = expand_minimal_graph(scenario(3, 0, theta))
    est = [(cap_profile(theta, r) - theta - z[2] * r * r) / r**4 for r in (4e-3, 2e-3)]
    # Richardson step removes the r² error of the quotient
    c4 = (4 * est[1] - est[0]) / 3
    assert abs(c4 - z[4]) <= 1e-2 * abs(z[4])
    assert abs(24 * z[4] - 24 * c4) <= 1e-2 * abs(24 * z[4])


@pytest.mark.parametrize("p1,p2,psi0", [(3, 0, 0.0), (2, 1, PSI_CLIFFORD)])
def test_area_form_of_minimal_boundary(p1, p2, psi0):
    a = expand_area_form(scenario(p1, p2, psi0))
    np.testing.assert_allclose(a, ROUND, atol=1e-8)


def test_area_form_cap_differs():
    a = expand_area_form(scenario(3, 0, 0.3))
    assert abs(a[1]) <= 1e-12
    assert abs(a[2] + 0.75) > 0.05


def test_volume_form_of_hyperbolic_space():
    v = expand_volume_form_4d(normal_form_orbit(2, 0))
    np.testing.assert_allclose(v, ROUND, atol=1e-8)
