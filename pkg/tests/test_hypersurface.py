import numpy as np
import pytest

from renarea.geometry import normal_form_orbit
from renarea.hypersurface import (
    BoundaryData, GraphHypersurface, boundary_fundamental_forms, gauss_identity_residuals,
    graph_induced_metric, induced_metric_at, second_fundamental_form_at, unit_normal_at,
)
from renarea.solver import minimal_residual_at

PSI_CLIFFORD = float(np.arctan(np.sqrt(0.5)))


def flat_graph(p1=3, p2=0, psi0=0.0, jets=None):
    pair = normal_form_orbit(p1, p2)
    rg = np.geomspace(1e-4, 0.5, 50)
    return GraphHypersurface(pair, BoundaryData(p1, p2, psi0), rg, np.zeros_like(rg),
                             jets=jets or (lambda r: np.zeros(7)))


@pytest.fixture(scope="module")
def equatorial_graph():
    return flat_graph()


def test_induced_metric_of_the_flat_graph(equatorial_graph):
    r = 0.3
    h = induced_metric_at(equatorial_graph, None, r)
    a2 = (1 - r * r / 4) ** 2
    np.testing.assert_allclose(h, np.diag([4 * a2, 4 * a2, 4 * a2, 1.0]), rtol=1e-14)


def test_graph_formula_tilted_plane():
    h = graph_induced_metric(np.eye(3), [0.7, 0.0])
    np.testing.assert_allclose(h, [[1 + 0.49, 0.0], [0.0, 1.0]])


def test_normal_of_flat_graph_is_coordinate_direction(equatorial_graph):
    r = 0.2
    mu = unit_normal_at(equatorial_graph, None, r)
    a = 1 - r * r / 4
    np.testing.assert_allclose(mu, [0, 0, 0, r / a, 0], atol=1e-14)


def test_geodesic_graph_is_totally_geodesic(equatorial_graph):
    d = equatorial_graph.data(0.3)
    sff = second_fundamental_form_at(equatorial_graph, q=0.3)
    assert np.abs(sff.B_lowered).max() <= 1e-13
    traced, squared = gauss_identity_residuals(d)
    assert abs(d["scal_y"] + 12) <= 1e-10 and abs(traced) <= 1e-10 and abs(squared) <= 1e-8


def test_conformal_law_agrees_with_direct_computation():
    g = flat_graph(2, 1, PSI_CLIFFORD, jets=lambda r: np.r_[0.1 * r**2, 0.2 * r, 0.1, np.zeros(4)])
    sff = second_fundamental_form_at(g, q=0.25)
    assert sff.direct_gap <= 1e-10
    assert np.abs(sff.B_lowered).max() > 1e-3


def test_traced_gauss_residual_detects_mean_curvature():
    """Off minimality the traced identity leaves exactly H²; the Euler-Lagrange
    residual is linear in δ up to O(δ²)."""
    res = []
    for delta in (1e-3, 2e-3, 4e-3):
        g = flat_graph(jets=lambda r, d=delta: np.r_[d * r**3, 3 * d * r**2, 3 * d * r, d, np.zeros(3)])
        d = g.data(0.2)
        traced, _ = gauss_identity_residuals(d)
        np.testing.assert_allclose(traced, d["mean"] ** 2, rtol=1e-6, atol=1e-14)
        res.append((minimal_residual_at(g, 0.2), d["mean"]))
    el = np.array([e for e, _ in res])
    np.testing.assert_allclose(el / el[0], [1, 2, 4], rtol=1e-5)
    ratio = np.array([e / h for e, h in res])
    np.testing.assert_allclose(ratio / ratio[0], 1, rtol=1e-4)


def test_boundary_forms_equatorial_and_circle():
    for p1 in (3, 1):
        bf = boundary_fundamental_forms(BoundaryData(p1, 0, 0.0))
        assert abs(bf["eta"]) <= 1e-14 and np.abs(bf["II"]).max() <= 1e-14


def test_boundary_forms_clifford():
    bf = boundary_fundamental_forms(BoundaryData(2, 1, PSI_CLIFFORD))
    assert abs(bf["eta"]) <= 1e-12
    np.testing.assert_allclose(np.sort(np.abs(bf["principal"])), np.sort([np.sqrt(0.5), np.sqrt(0.5), np.sqrt(2)]),
                               rtol=1e-12)
    assert abs(bf["norm2_ring"] - 3) <= 1e-12
    np.testing.assert_allclose(bf["integral_ring"], 16 * np.pi**2 / np.sqrt(3), rtol=1e-12)


def test_boundary_forms_round_cap_is_umbilic():
    bf = boundary_fundamental_forms(BoundaryData(3, 0, 0.3))
    assert abs(bf["eta"] - 3 * np.tan(0.3)) <= 1e-12
    assert bf["norm2_ring"] <= 1e-24
