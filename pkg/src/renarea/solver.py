"""Minimal hypersurfaces with symmetric boundary data.

The ambient is hyperbolic space in normal form over the round sphere written
as ``S^n = {(cos ψ ω₁, sin ψ ω₂)}`` with ``ω_i ∈ S^{p_i}``; the boundary
``Σ = {ψ = ψ0}`` is a product of round spheres.  Invariant hypersurfaces are
described by a profile curve, integrated in two charts:

* near the boundary as a graph ``ψ(r)`` of the special defining function;
* in the interior as an arclength-parametrised planar curve of the ball
  model, which handles the orbit collapse on an axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .geometry import ball_orbit, ball_radius_to_r, normal_form_orbit, r_to_ball_radius
from .hypersurface import (
    BoundaryData,
    EmbeddedPatch,
    GraphHypersurface,
    profile_embedding,
)
from .jets import Jet, taylor_ode


class SolverError(RuntimeError):
    pass


class ShootingBracketError(SolverError):
    pass


@dataclass
class Scenario:
    name: str
    p1: int
    p2: int
    psi0: float
    starts: tuple = ("axis2",)
    scan: tuple = (0.01, 0.9, 60)
    branch: str | None = None
    chi_hint: int | None = None
    multiplicity: int = 1
    r_min: float = 1e-5
    r_0: float = 0.5
    n_r: int = 400
    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 0.5
    symmetry: str = "rotational"
    eta_tol: float = 1e-8
    require_minimal_boundary: bool = True
    ambient: str = "hyperbolic_normal_form"

    @property
    def k(self):
        return self.p1 + self.p2 + 1

    @property
    def boundary(self):
        return BoundaryData(self.p1, self.p2, self.psi0, self.multiplicity)

    @property
    def eta(self):
        return boundary_mean_curvature(self.p1, self.p2, self.psi0)

    def validate(self):
        if not self.r_min > 0:
            raise ValueError("r_min must be positive")
        if not self.r_min < self.r_0:
            raise ValueError("r_min must be below r_0")
        if not self.r_0 < 2.0:
            raise ValueError("r_0 must be inside the chart (r < 2)")
        if self.require_minimal_boundary and abs(self.eta) > self.eta_tol:
            raise ValueError(f"boundary mean curvature {self.eta:.3e} exceeds {self.eta_tol:g}")
        return self


def boundary_mean_curvature(p1, p2, psi0):
    """Mean curvature of {ψ = ψ0} in the round sphere along ∂_ψ, sign fixed so
    that it equals the trace of II for the normal ∂_ψ."""
    eta = p1 * np.tan(psi0)
    if p2:
        eta -= p2 / np.tan(psi0)
    return float(eta)


# -- reduced equations ---------------------------------------------------------

class ReducedEquations:
    """Graph and planar-profile forms of the minimal-hypersurface equation."""

    def __init__(self, p1, p2):
        self.p1, self.p2 = p1, p2
        self.k = p1 + p2 + 1

    def dlogF(self, psi):
        out = -self.p1 * np.tan(psi)
        if self.p2:
            out = out + self.p2 / np.tan(psi)
        return out

    def graph_residual(self, r, psi, dpsi, ddpsi):
        """Euler–Lagrange residual of the reduced area ``∫ W √(1 + a²ψ'²) dr``.

        Works on floats, arrays, complex steps and jets alike.
        """
        k = self.k
        a = 1.0 - r * r / 4.0
        ap = -r / 2.0
        s2 = 1.0 + a * a * dpsi * dpsi
        dlogw = -k / r + (k - 1) * ap / a
        return ddpsi + (ap / a) * dpsi * (2.0 + a * a * dpsi * dpsi) + s2 * (dlogw * dpsi - self.dlogF(psi) / (a * a))

    def graph_rhs(self, r, y):
        psi, dpsi = y[0], y[1]
        return [dpsi, -self.graph_residual(r, psi, dpsi, 0.0)]

    def profile_rhs(self, s, y):
        """Planar profile ``(ρ1, ρ2, Θ)`` in the ball, unit flat speed."""
        r1, r2, th = y[0], y[1], y[2]
        c, sn = np.cos(th), np.sin(th)
        n1, n2 = -sn, c
        rho2 = r1 * r1 + r2 * r2
        kap = 2.0 * self.k * (r1 * n1 + r2 * n2) / (1.0 - rho2)
        if self.p1:
            kap = kap + self.p1 * n1 / r1
        if self.p2:
            kap = kap + self.p2 * n2 / r2
        return [c, sn, kap]

    def start_state(self, kind, value, s0):
        """Second-order series start on an axis or on the mirror line."""
        k, p1, p2 = self.k, self.p1, self.p2
        if kind == "axis1":
            p = value
            th0 = np.pi / 2
            kap0 = (-p1 / p - 2 * k * p / (1 - p * p)) / (1 + p2)
            y0 = np.array([p, 0.0])
        elif kind == "axis2":
            q = value
            th0 = 0.0
            kap0 = ((p2 / q if p2 else 0.0) + 2 * k * q / (1 - q * q)) / (1 + p1)
            y0 = np.array([0.0, q])
        elif kind == "mirror":
            p = value
            th0 = np.pi / 2
            kap0 = -p1 / p - 2 * k * p / (1 - p * p)
            y0 = np.array([p, 0.0])
        else:
            raise ValueError(f"unknown start kind {kind!r}")
        t = np.array([np.cos(th0), np.sin(th0)])
        n = np.array([-np.sin(th0), np.cos(th0)])
        pos = y0 + t * s0 + 0.5 * kap0 * n * s0 * s0
        return np.r_[pos, th0 + kap0 * s0]


def expand_graph_coefficients(p1, p2, psi0, order=None):
    """Order-by-order solution of r·(EL) = 0 for ψ = ψ0 + Σ z_m r^m.

    The equation at order m−1 is affine in z_m with slope m(m−1−k); at the
    resonant order m = k+1 the coefficient is free and is returned as 0.
    """
    eq = ReducedEquations(p1, p2)
    k = eq.k
    n = k + 1 if order is None else order
    z = np.zeros(n + 3)
    z[0] = psi0
    for m in range(1, n + 1):
        def res(zm):
            c = z.copy()
            c[m] = zm
            psi = Jet(c)
            dpsi = psi.ddr()
            ddpsi = dpsi.ddr()
            rr = Jet.variable(n + 2)
            # multiply through by r before dividing to keep the jet regular
            out = eq_residual_times_r(eq, rr, psi, dpsi, ddpsi)
            return out.coefficient(m - 1)
        r0, r1 = res(0.0), res(1.0)
        slope = r1 - r0
        if abs(slope) < 1e-12:
            if abs(r0) > 1e-9:
                raise SolverError(f"resonant order {m} is obstructed (residual {r0:.3e})")
            continue
        z[m] = -r0 / slope
    return z[: n + 1]


def eq_residual_times_r(eq, r, psi, dpsi, ddpsi):
    """``r`` times the graph residual written without division by ``r``."""
    k = eq.k
    a = 1.0 - r * r / 4.0
    ap = r * (-0.5)
    s2 = 1.0 + a * a * dpsi * dpsi
    r_dlogw = -k + (k - 1) * ap * r / a
    return (r * ddpsi + r * (ap / a) * dpsi * (2.0 + a * a * dpsi * dpsi)
            + s2 * (r_dlogw * dpsi - r * eq.dlogF(psi) / (a * a)))


# -- the symmetric surface -----------------------------------------------------

@dataclass(eq=False)
class ProfileSegment:
    """Interior part of the profile in the ball chart, ``s ∈ [s_start, s_end]``."""

    eq: ReducedEquations
    sol: object
    s_start: float
    s_end: float
    sign: float
    order: int = 6
    _patch: EmbeddedPatch | None = field(default=None, repr=False)

    @property
    def n_orbit(self):
        return self.eq.p1 + self.eq.p2

    @property
    def patch(self):
        if self._patch is None:
            emb, ref = profile_embedding(self.n_orbit, self.order)
            pair = ball_orbit(self.eq.p1, self.eq.p2)
            self._patch = EmbeddedPatch(pair, emb, ref, self.n_orbit + 1, "profile")
        return self._patch

    def state(self, s):
        return self.sol.sol(s)

    def local_model(self, s):
        y = self.state(s)
        c = taylor_ode(lambda t, v: _jet_list(self.eq.profile_rhs(t, v)), s, y, self.order)
        return np.r_[s, self.sign, c[:, 0], c[:, 1]]

    def data_many(self, ss, kind="core"):
        ss = np.atleast_1d(ss)
        us = np.c_[np.zeros((len(ss), self.n_orbit)), ss]
        ps = np.stack([self.local_model(s) for s in ss])
        return self.patch.evaluate_many(us, ps, kind)


def _jet_list(items):
    return items


@dataclass(eq=False)
class SymmetricSurface:
    """A full invariant minimal hypersurface: interior profile plus boundary graph."""

    scenario: Scenario
    graph: GraphHypersurface
    interior: ProfileSegment
    start_kind: str
    start_value: float
    r_junction: float
    collapse: str | None

    @property
    def multiplicity(self):
        return self.scenario.multiplicity


@dataclass
class Branch:
    start_kind: str
    start_value: float
    mismatch: float
    collapse: str | None
    chi: int


@dataclass
class SolveResult:
    surface: object
    residual_norm: float
    iterations: int
    collapse_info: dict | None = None
    branches: list = field(default_factory=list)
    truncation_residual: float | None = None
    converged: bool = True


def collapse_of(kind, p1, p2):
    """Which orbit factor degenerates for a start kind, and χ of the filling.

    The filling is a disk bundle over the surviving sphere factor, so χ is
    that of the surviving sphere (or 1 when nothing survives).
    """
    chi_sphere = lambda m: 1 + (-1) ** m
    if kind == "axis1":
        return f"S^{p2}", chi_sphere(p1)
    if kind == "axis2":
        return f"S^{p1}", (chi_sphere(p2) if p2 else 1)
    return None, chi_sphere(p1)


class Shooter:
    def __init__(self, scn: Scenario, rtol=1e-12, atol=1e-14, s_max=6.0):
        self.scn = scn
        self.eq = ReducedEquations(scn.p1, scn.p2)
        self.rtol, self.atol, self.s_max = rtol, atol, s_max
        self.s0 = 1e-6
        self.rho_j = r_to_ball_radius(scn.r_0)
        z = expand_graph_coefficients(scn.p1, scn.p2, scn.psi0, scn.k)
        self.target = float(np.polynomial.polynomial.polyval(scn.r_min, z))

    def interior(self, kind, value, dense=False):
        eq = self.eq
        rho_j = self.rho_j
        if abs(value) >= rho_j or value == 0.0 and kind != "axis2":
            return None
        y0 = eq.start_state(kind, value, self.s0)

        def hit(s, y):
            return np.hypot(y[0], y[1]) - rho_j
        hit.terminal, hit.direction = True, 1

        def axis1(s, y):
            return y[1] if eq.p2 else 1.0
        def axis2(s, y):
            return y[0]
        def spiral(s, y):
            return 20.0 - abs(y[2])
        for ev in (axis1, axis2, spiral):
            ev.terminal = True
        events = [hit, axis2, spiral] + ([axis1] if eq.p2 else [])
        sol = solve_ivp(eq.profile_rhs, [self.s0, self.s_max], y0, method="DOP853",
                        rtol=self.rtol, atol=self.atol, events=events, dense_output=dense)
        if sol.status != 1 or len(sol.t_events[0]) == 0:
            return None
        return sol

    def junction_state(self, ye):
        r1, r2, th = ye
        rho = np.hypot(r1, r2)
        psi = np.arctan2(r2, r1)
        r = ball_radius_to_r(rho)
        dpsi = np.tan(th - psi) / rho * (-(1.0 + rho) ** 2 / 4.0)
        return r, psi, dpsi

    def graph(self, r, psi, dpsi, dense=False):
        sol = solve_ivp(self.eq.graph_rhs, [r, self.scn.r_min], [psi, dpsi], method="DOP853",
                        rtol=self.rtol, atol=self.atol, dense_output=dense)
        if sol.status != 0:
            return None
        return sol

    def mismatch(self, kind, value):
        with np.errstate(all="ignore"):
            sol = self.interior(kind, value)
            if sol is None:
                return np.nan
            r, psi, dpsi = self.junction_state(sol.y_events[0][0])
            if not np.isfinite(dpsi):
                return np.nan
            g = self.graph(r, psi, dpsi)
            if g is None:
                return np.nan
            return float(g.y[0, -1] - self.target)

    def scan(self, kind, lo, hi, n):
        xs = np.linspace(lo, hi, n)
        fs = np.array([self.mismatch(kind, x) for x in xs])
        roots = []
        for i in range(n - 1):
            a, b = fs[i], fs[i + 1]
            if not (np.isfinite(a) and np.isfinite(b)):
                continue
            if a == 0.0:
                roots.append(xs[i])
            elif a * b < 0:
                roots.append(brentq(lambda x: self.mismatch(kind, x), xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15))
        if n and np.isfinite(fs[-1]) and fs[-1] == 0.0:
            roots.append(xs[-1])
        return roots, xs, fs


def solve_cohomogeneity_one(scn: Scenario, order=6) -> SolveResult:
    """Shoot on the interior start parameter, report all branches, pick one."""
    scn.validate()
    sh = Shooter(scn)
    lo, hi, n = scn.scan
    branches = []
    scanned = []
    for kind in scn.starts:
        a, b = (lo, hi)
        if kind == "axis2" and scn.p2 == 0:
            a = -hi
        roots, xs, fs = sh.scan(kind, a, b, n)
        scanned.append((kind, a, b))
        for x in roots:
            col, chi = collapse_of(kind, scn.p1, scn.p2)
            branches.append(Branch(kind, float(x), sh.mismatch(kind, x), col, chi))
    if not branches:
        raise ShootingBracketError(f"no shooting bracket found; scanned {scanned}")
    if scn.branch is not None:
        pool = [b for b in branches if b.start_kind == scn.branch]
        if not pool:
            raise ShootingBracketError(f"pinned branch {scn.branch!r} not found among {branches}")
    else:
        pool = branches
    chosen = pool[0]
    if len(pool) > 1:
        from .renormalization import renormalized_area
        areas = []
        for b in pool:
            res = _build(scn, sh, b, order, branches)
            areas.append((renormalized_area(scn, res).finite_part, res))
        areas.sort(key=lambda t: t[0])
        return areas[0][1]
    return _build(scn, sh, chosen, order, branches)


def build_branch(scn: Scenario, branch: Branch, order=6, branches=None) -> SolveResult:
    return _build(scn, Shooter(scn), branch, order, branches or [branch])


def _build(scn, sh, branch, order, branches):
    eq = sh.eq
    isol = sh.interior(branch.start_kind, branch.start_value, dense=True)
    ye = isol.y_events[0][0]
    s_end = float(isol.t_events[0][0])
    r, psi, dpsi = sh.junction_state(ye)
    gsol = sh.graph(r, psi, dpsi, dense=True)
    # orient the interior normal to agree with +∂_ψ at the junction
    r1, r2, th = ye
    n = np.array([-np.sin(th), np.cos(th)])
    sign = 1.0 if (r1 * n[1] - r2 * n[0]) > 0 else -1.0
    interior = ProfileSegment(eq, isol, sh.s0, s_end, sign, order)

    def jets(rr):
        y = gsol.sol(rr)
        c = taylor_ode(lambda t, v: eq.graph_rhs(t, v), rr, y, order)
        out = c[:, 0].copy()
        out[0] -= scn.psi0
        return out

    rg = np.geomspace(scn.r_min, r, scn.n_r)
    zg = gsol.sol(rg)[0] - scn.psi0
    pair = normal_form_orbit(scn.p1, scn.p2)
    graph = GraphHypersurface(pair, scn.boundary, rg, zg, jets=jets, order=order)
    surf = SymmetricSurface(scn, graph, interior, branch.start_kind, branch.start_value, r, branch.collapse)
    res = float(abs(branch.mismatch))
    info = dict(start_kind=branch.start_kind, start_value=branch.start_value,
                collapsed_factor=branch.collapse, chi=branch.chi, r_junction=r)
    return SolveResult(surf, res, 0, info, branches)


def profile_residuals(res: SolveResult, n=40):
    """Sup of the reduced Euler–Lagrange residual at sample points of both charts."""
    surf = res.surface
    eq = surf.interior.eq
    out = 0.0
    for rr in np.geomspace(surf.graph.r_grid[0] * 1.01, surf.graph.r_grid[-1] * 0.99, n):
        c = surf.graph.jets(rr)
        psi = c[0] + surf.scenario.psi0
        out = max(out, abs(eq.graph_residual(rr, psi, c[1], 2 * c[2])))
    return out


def minimal_residual_at(Y: GraphHypersurface, q) -> float:
    """Reduced Euler–Lagrange residual of an invariant graph at ``q`` (a radius
    or a point whose last coordinate is r)."""
    r = float(np.ravel(q.array if hasattr(q, "array") else q)[-1])
    c = Y.local_model(r)[1:]
    eq = ReducedEquations(Y.boundary.p1, Y.boundary.p2)
    return float(eq.graph_residual(r, c[0], c[1], 2.0 * c[2]))


# -- finite-difference boundary value solver ---------------------------------

def solve_graph(scn: Scenario, outer_value: float | None = None, n: int | None = None,
                reference: SolveResult | None = None, initial=None) -> SolveResult:
    """Damped Newton on the discretised reduced Euler–Lagrange equation.

    Unknowns are ψ at the nodes of a uniform grid on ``[r_min, r_0]``; the
    inner value is clamped to the truncated boundary expansion and the outer
    value is taken from ``outer_value`` or from a reference profile solution.
    """
    scn.validate()
    eq = ReducedEquations(scn.p1, scn.p2)
    n = scn.n_r if n is None else n
    r = np.linspace(scn.r_min, scn.r_0, n + 1)
    h = r[1] - r[0]
    zexp = expand_graph_coefficients(scn.p1, scn.p2, scn.psi0, scn.k)
    inner = float(np.polynomial.polynomial.polyval(scn.r_min, zexp))
    if outer_value is None:
        if reference is None:
            reference = solve_cohomogeneity_one(scn)
        g = reference.surface.graph
        outer_value = float(scn.psi0 + g.jets(scn.r_0)[0]) if scn.r_0 <= g.r_grid[-1] else None
        if outer_value is None:
            raise SolverError("reference profile does not reach r_0")
    if initial is None:
        psi = inner + (outer_value - inner) * (r - r[0]) / (r[-1] - r[0])
    else:
        psi = np.asarray(initial(r), dtype=float)
    psi[0], psi[-1] = inner, outer_value

    def residual(v):
        d1 = (v[2:] - v[:-2]) / (2 * h)
        d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
        return eq.graph_residual(r[1:-1], v[1:-1], d1, d2)

    def jacobian(v):
        d1 = (v[2:] - v[:-2]) / (2 * h)
        d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
        st = 1e-30
        rr, vv = r[1:-1], v[1:-1]
        e_p = eq.graph_residual(rr, vv + 1j * st, d1, d2).imag / st
        e_d = eq.graph_residual(rr, vv, d1 + 1j * st, d2).imag / st
        e_dd = eq.graph_residual(rr, vv, d1, d2 + 1j * st).imag / st
        main = e_p - 2 * e_dd / h**2
        lower = -e_d / (2 * h) + e_dd / h**2
        upper = e_d / (2 * h) + e_dd / h**2
        m = n - 1
        return sparse.diags([lower[1:], main, upper[:-1]], [-1, 0, 1], shape=(m, m), format="csc")

    # second differences cannot resolve residuals below eps·|ψ|/h²
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.abs(psi).max())) / h**2
    goal = max(scn.tol, floor)
    it = 0
    f = residual(psi)
    norm = float(np.abs(f).max())
    while norm > goal and it < scn.max_iter:
        step = spsolve(jacobian(psi), -f)
        lam = 1.0
        while True:
            trial = psi.copy()
            trial[1:-1] += lam * step
            ft = residual(trial)
            nt = float(np.abs(ft).max())
            if np.isfinite(nt) and nt < norm * (1 - 1e-4 * lam):
                break
            lam *= scn.damping
            if lam < 1e-8:
                raise SolverError(f"line search stalled at iteration {it}, residual {norm:.3e}")
        psi, f, norm = trial, ft, nt
        it += 1
    if norm > goal:
        raise SolverError(f"Newton did not converge in {scn.max_iter} iterations (residual {norm:.3e})")
    spline = CubicSpline(r, psi - scn.psi0)
    mid = 0.5 * (r[1:-2] + r[2:-1])
    trunc = float(np.abs(eq.graph_residual(mid, spline(mid) + scn.psi0, spline(mid, 1), spline(mid, 2))).max())
    pair = normal_form_orbit(scn.p1, scn.p2)
    yg = GraphHypersurface(pair, scn.boundary, r, psi - scn.psi0)
    info = reference.collapse_info if reference is not None else None
    return SolveResult(yg, norm, it, info, reference.branches if reference else [], trunc)


def cap_profile(theta0, r):
    """Totally geodesic filling of the round sphere {ψ = θ0}: ψ as a function of r."""
    return np.arcsin(np.sin(theta0) * (4 + r * r) / (4 - r * r))


def cap_start(theta0):
    """Axis crossing of the totally geodesic cap in the ball model.

    The cap lies on the sphere of centre 1/sin θ0 and radius cot θ0 on the
    polar axis, which meets the axis at tan(θ0/2).
    """
    return float(np.tan(theta0 / 2))
