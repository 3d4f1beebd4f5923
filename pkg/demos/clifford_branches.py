"""All shooting branches filling the Clifford-type boundary, with their
topology, renormalized area and the Gauss-Bonnet balance."""
from renarea.renormalization import renormalized_area
from renarea.scenarios import load_catalog
from renarea.solver import build_branch, solve_cohomogeneity_one
from renarea.verify import verify_theorem_1_1

scn = load_catalog()["clifford_type"].scenario()
default = solve_cohomogeneity_one(scn)
print(f"{'start':>6} {'value':>12} {'collapsed':>10} {'chi':>4} {'A':>12} {'6A - RHS':>10}")
for b in default.branches:
    res = build_branch(scn, b, branches=default.branches)
    A = renormalized_area(scn, res).finite_part
    rep = verify_theorem_1_1(scn, res)
    print(f"{b.start_kind:>6} {b.start_value:12.8f} {b.collapse:>10} {b.chi:>4} {A:12.6f} {rep.residual:10.2e}")
print(f"default branch: {default.collapse_info['start_kind']} at {default.collapse_info['start_value']:.8f}")
