"""Renormalized area of the totally geodesic slice, from the ladder fit and
from the closed-form antiderivative."""
import math

from renarea.renormalization import equatorial_area_closed_form, fit_expansion, ladder, renormalized_area
from renarea.scenarios import load_catalog
from renarea.solver import solve_cohomogeneity_one

scn = load_catalog()["equatorial"].scenario()
res = solve_cohomogeneity_one(scn)
fit = renormalized_area(scn, res)
print(f"{'epsilon':>12} {'area(Y_eps)':>18} {'closed form':>18}")
for e, v, c in zip(fit.epsilons, fit.values, equatorial_area_closed_form(fit.epsilons)):
    print(f"{e:12.4e} {v:18.8f} {c:18.8f}")
print(f"finite part {fit.finite_part:.8f} +- {fit.finite_part_error:.1e}  (4 pi^2/3 = {4 * math.pi**2 / 3:.8f})")
print(f"eps^-3 coefficient {fit.coefficient(-3):.8f}  (2 pi^2/3 = {2 * math.pi**2 / 3:.8f})")
