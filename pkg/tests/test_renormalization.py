import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renarea.renormalization import (
    LadderError, _quad_for, equatorial_area_closed_form, fit_expansion, gauss_panels,
    integrate_over_Y_eps, ladder, radial_breaks, renormalized_area, write_ladder_csv,
)

BASIS = (-3, -1, 0, 1, 2)


def synthetic(eps, coef):
    return sum(c * eps**b for b, c in zip(BASIS, coef))


def test_synthetic_finite_part():
    eps = ladder(0.125)
    fit = fit_expansion(eps, eps**-3 + 2 * eps**-1 + 5 + eps)
    assert abs(fit.finite_part - 5.0) <= 1e-8
    assert abs(fit.finite_part - 5.0) <= fit.finite_part_error


def test_perturbed_finite_part_within_error():
    eps = ladder(0.125)
    vals = eps**-1 + 7 + eps**2 * np.sin(40 * eps)
    fit = fit_expansion(eps, vals, (-1, 0, 1))
    assert abs(fit.finite_part - 7) <= fit.finite_part_error


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_basis_exactness(coef):
    eps = ladder(0.125)
    fit = fit_expansion(eps, synthetic(eps, coef))
    # relative to the sample size at the top of the ladder; absolute 1e-10 is
    # below the rounding of ε⁻³ samples near the bottom
    scale = max(1.0, float(synthetic(eps[:1], np.abs(coef))[0]))
    assert abs(fit.finite_part - coef[2]) <= 1e-10 * scale
    vals = synthetic(eps, coef)
    recon = synthetic(eps, fit.coefficients)
    assert np.all(np.abs(recon - vals) <= 1e-10 * np.maximum(1.0, np.abs(vals)))


def test_missing_log_term_shows_in_diagnostics():
    eps = ladder(0.125)
    fit = fit_expansion(eps, synthetic(eps, [1, 1, 1, 0, 0]) + 0.3 * eps**-2, diagnose=(-2,))
    assert abs(fit.extra["coef[-2]"] - 0.3) <= 1e-8


@pytest.mark.parametrize("eps,basis,msg", [
    (ladder(0.1), (-1, 1), "exponent 0"),
    (ladder(0.1, 6, 2), BASIS, "two more"),
    (ladder(0.1)[::-1], BASIS, "decreasing"),
])
def test_fit_errors(eps, basis, msg):
    with pytest.raises(LadderError, match=msg):
        fit_expansion(eps, np.ones_like(eps), basis)


def test_ill_conditioned_fit_raises():
    eps = ladder(0.1)
    with pytest.raises(LadderError, match="ill conditioned"):
        fit_expansion(eps, np.ones_like(eps), max_condition=1.0)


def test_csv_round_trip(tmp_path):
    eps = ladder(0.1)
    fit = fit_expansion(eps, synthetic(eps, [1, 2, 3, 4, 5]))
    path = tmp_path / "sub" / "ladder.csv"
    write_ladder_csv(path, fit)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["epsilon", "value"]
    np.testing.assert_allclose(np.array(rows[1:], dtype=float), np.c_[eps, fit.values], rtol=1e-15)


def test_gauss_panels_exact_for_polynomials():
    r, w, _ = gauss_panels(radial_breaks(1e-4, ladder(0.1), 1.0), 16)
    assert abs(np.sum(w * r**15) - (1 - 1e-64) / 16) <= 1e-14
    exact = (1e12 - 1) / 3
    assert abs(np.sum(w * r**-4) - exact) <= 1e-12 * exact


def test_singular_integrand_converges_with_order():
    exact = (1e12 - 1) / 3
    errs = []
    for n in (2, 3, 4, 5):
        r, w, _ = gauss_panels(radial_breaks(1e-4, ladder(0.1), 1.0), n)
        errs.append(abs(np.sum(w * r**-4) - exact) / exact)
    assert errs[-1] < errs[0] * 1e-3 and all(a > b for a, b in zip(errs, errs[1:]))


def test_equatorial_ladder_matches_closed_form(equatorial):
    scn, res = equatorial
    q, eps = _quad_for(scn, res)
    exact = equatorial_area_closed_form(eps)
    np.testing.assert_allclose(q.integral_above(None, eps), exact, rtol=1e-6)


def test_equatorial_closed_form_finite_part():
    eps = ladder(0.125)
    fit = fit_expansion(eps, equatorial_area_closed_form(eps))
    assert abs(fit.coefficient(-3) - 2 * np.pi**2 / 3) <= 1e-8
    assert abs(fit.finite_part - 4 * np.pi**2 / 3) <= 5e-3 * 4 * np.pi**2 / 3
    # the remainder is O(ε³); with that exponent in the basis the fit is exact
    full = fit_expansion(eps, equatorial_area_closed_form(eps), (-3, -1, 0, 1, 3))
    assert abs(full.finite_part - 4 * np.pi**2 / 3) <= 1e-9


def test_window_invariance(equatorial):
    scn, res = equatorial
    a = renormalized_area(scn, res, ladder(scn.r_0 / 4)).finite_part
    b = renormalized_area(scn, res, ladder(scn.r_0 / 8)).finite_part
    assert abs(a - b) <= 1e-4 * abs(a)


def test_zero_integrand(equatorial):
    scn, res = equatorial
    assert np.all(integrate_over_Y_eps(0, scn, res, ladder(0.1)) == 0.0)


def test_ladder_below_grid_rejected(equatorial):
    scn, res = equatorial
    with pytest.raises(LadderError, match="grid support"):
        _quad_for(scn, res, ladder(0.1, 20))
