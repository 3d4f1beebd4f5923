"""Regularised integrals on Y_ε = Y ∩ {r ≥ ε} and their ε-expansions.

The radial range of the boundary graph is cut into Gauss–Legendre panels whose
breakpoints include every ladder value, so each ladder sample is an exact sum
of whole panels.  Orbit integrals of the symmetric scenarios collapse to one
node per orbit weighted by orbit volume over coordinate density.
"""
from __future__ import annotations

import csv
import itertools
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .hypersurface import orbit_weight


class LadderError(ValueError):
    pass


def ladder(eps_max, count=10, ratio=2.0):
    return eps_max * ratio ** (-np.arange(count, dtype=float))


@dataclass
class EpsilonLadderFit:
    epsilons: np.ndarray
    values: np.ndarray
    basis: tuple
    coefficients: np.ndarray
    condition_number: float
    fit_residual: float
    finite_part: float
    finite_part_error: float
    extra: dict = field(default_factory=dict)

    def coefficient(self, exponent):
        return float(self.coefficients[list(self.basis).index(exponent)])

    def to_dict(self):
        return dict(epsilons=list(map(float, self.epsilons)), values=list(map(float, self.values)),
                    basis=list(self.basis), coefficients=list(map(float, self.coefficients)),
                    condition_number=float(self.condition_number), fit_residual=float(self.fit_residual),
                    finite_part=float(self.finite_part), finite_part_error=float(self.finite_part_error),
                    extra={k: float(v) for k, v in self.extra.items()})


def _lstsq(eps, vals, basis):
    a = np.stack([eps ** float(b) for b in basis], axis=1)
    # rows carry rounding noise proportional to their largest term
    row = np.abs(a).max(axis=1, keepdims=True)
    scale = np.linalg.norm(a / row, axis=0)
    a_s = a / row / scale
    rhs = vals / row[:, 0]
    coef, *_ = np.linalg.lstsq(a_s, rhs, rcond=None)
    for _ in range(2):
        coef += np.linalg.lstsq(a_s, rhs - a_s @ coef, rcond=None)[0]
    coef = coef / scale
    cond = float(np.linalg.cond(a_s))
    resid = vals - a @ coef
    return coef, cond, resid


def fit_expansion(epsilons, values, basis=(-3, -1, 0, 1, 2), max_condition=1e13,
                  diagnose=()) -> EpsilonLadderFit:
    """Scaled least-squares fit of ``Σ c_b ε^b``; the finite part is ``c_0``.

    The error estimate is the spread of ``c_0`` over all leave-two-out refits.
    Exponents in ``diagnose`` are fitted in an enlarged basis and their
    coefficient and the induced shift of ``c_0`` reported in ``extra``.
    """
    eps = np.asarray(epsilons, dtype=float)
    vals = np.asarray(values, dtype=float)
    basis = tuple(basis)
    if 0 not in basis:
        raise LadderError("basis must contain the exponent 0")
    if len(eps) < len(basis) + 2:
        raise LadderError("need at least two more samples than basis functions")
    if np.any(np.diff(eps) >= 0):
        raise LadderError("epsilons must be strictly decreasing")
    coef, cond, resid = _lstsq(eps, vals, basis)
    if cond > max_condition:
        raise LadderError(f"ladder fit is ill conditioned (condition number {cond:.2e})")
    i0 = basis.index(0)
    fp = float(coef[i0])
    spread = 0.0
    for drop in itertools.combinations(range(len(eps)), 2):
        keep = np.setdiff1d(np.arange(len(eps)), drop)
        c, *_ = _lstsq(eps[keep], vals[keep], basis)
        spread = max(spread, abs(c[i0] - fp))
    scale = np.abs(vals).max() if len(vals) else 1.0
    rel = float(np.abs(resid).max() / scale) if scale > 0 else 0.0
    extra = {}
    for b in diagnose:
        big = tuple(sorted(set(basis) | {b}))
        c, _, _ = _lstsq(eps, vals, big)
        extra[f"coef[{b}]"] = float(c[big.index(b)])
        extra[f"shift[{b}]"] = float(c[big.index(0)] - fp)
        # error scale of the added coefficient from leave-two-out refits
        sp = 0.0
        for drop in itertools.combinations(range(len(eps)), 2):
            keep = np.setdiff1d(np.arange(len(eps)), drop)
            if len(keep) < len(big) + 1:
                continue
            cc, *_ = _lstsq(eps[keep], vals[keep], big)
            sp = max(sp, abs(cc[big.index(b)] - c[big.index(b)]))
        extra[f"spread[{b}]"] = sp
    return EpsilonLadderFit(eps, vals, basis, coef, cond, rel, fp, spread, extra)


def write_ladder_csv(path, fit: EpsilonLadderFit):
    """CSV with header ``epsilon,value``, written atomically."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "value"])
        for e, v in zip(fit.epsilons, fit.values):
            w.writerow([repr(float(e)), repr(float(v))])
    os.replace(tmp, path)


# -- quadrature ----------------------------------------------------------------

def gauss_panels(breaks, n):
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights, panel = [], [], []
    for i, (a, b) in enumerate(zip(breaks[:-1], breaks[1:])):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
        panel.append(np.full(n, i))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(panel)


def radial_breaks(r_lo, eps, r_hi, ratio=2.0):
    """Panel breakpoints: geometric below the ladder, the ladder itself, then
    geometric up to ``r_hi``."""
    eps = np.sort(np.asarray(eps))
    lo = []
    t = eps[0]
    while t / ratio > r_lo * (1 + 1e-12):
        t /= ratio
        lo.append(t)
    hi = []
    t = eps[-1]
    while t * ratio < r_hi * (1 - 1e-12):
        t *= ratio
        hi.append(t)
    return np.unique(np.r_[r_lo, lo, eps, hi, r_hi])


@dataclass
class SurfaceQuadrature:
    """Kernel values at the quadrature nodes of a symmetric surface."""

    graph_r: np.ndarray
    graph_w: np.ndarray
    graph: dict
    interior_w: np.ndarray
    interior: dict
    weight: float
    k: int
    eps: np.ndarray
    boundary: dict
    r_min: float
    r_junction: float

    def density(self, part, name):
        d = self.graph if part == "graph" else self.interior
        w = self.graph_w if part == "graph" else self.interior_w
        return w * d["dA_plus"] * self.weight, d[name] if name is not None else 1.0

    def integral_above(self, name, eps):
        """∫_{Y_ε} f dA₊ for each ε (f = 1 when ``name`` is None)."""
        wg = self.graph_w * self.graph["dA_plus"] * self.weight
        fg = self.graph[name] if name is not None else np.ones_like(wg)
        wi = self.interior_w * self.interior["dA_plus"] * self.weight
        fi = self.interior[name] if name is not None else np.ones_like(wi)
        inner = float(np.sum(wi * fi))
        eps = np.atleast_1d(eps)
        return np.array([inner + float(np.sum((wg * fg)[self.graph_r >= e])) for e in eps])

    def integral(self, name):
        return self.integral_above(name, self.r_min)[0]

    def boundary_integral(self, name):
        """∮_{Σ_ε} f ds̄ on the ladder."""
        b = self.boundary
        return b[name] * b["ds_bar"] * self.weight


def quadrature(surface, eps, n_gl=16, n_interior=12, kind="core"):
    """Evaluate the surface kernel on all nodes and at the ladder radii."""
    g = surface.graph
    r_lo, r_hi = g.r_grid[0], g.r_grid[-1]
    if np.min(eps) < 2 * r_lo:
        raise LadderError("ε below the grid support (need ε ≥ 2 r_min)")
    breaks = radial_breaks(r_lo, eps, r_hi)
    rn, rw, _ = gauss_panels(breaks, n_gl)
    gd = g.data_many(rn, kind)
    seg = surface.interior
    sb = np.linspace(seg.s_start, seg.s_end, n_interior + 1)
    sn, sw, _ = gauss_panels(sb, n_gl)
    idata = seg.data_many(sn, kind)
    bd = g.data_many(np.asarray(eps), kind)
    sc = surface.scenario
    w = orbit_weight(sc.p1, sc.p2) * surface.multiplicity
    return SurfaceQuadrature(rn, rw, gd, sw, idata, w, sc.k, np.asarray(eps), bd, r_lo, r_hi)


def default_ladder(scn, count=10):
    return ladder(scn.r_0 / 4.0, count)


def _quad_for(scn, result, eps=None):
    eps = default_ladder(scn) if eps is None else eps
    cache = getattr(result, "_quad_cache", None)
    if cache is None:
        cache = {}
        result._quad_cache = cache
    key = tuple(np.round(eps, 15))
    if key not in cache:
        cache[key] = quadrature(result.surface, eps)
    return cache[key], eps


def area_basis(k):
    """Exponents of the area expansion of a k-dimensional minimal graph."""
    return tuple(sorted(set(range(-(k - 1), 0, 2)) | {0, 1, 2}))


def renormalized_area(scn, result, eps=None) -> EpsilonLadderFit:
    q, eps = _quad_for(scn, result, eps)
    vals = q.integral_above(None, eps)
    return fit_expansion(eps, vals, area_basis(scn.k), diagnose=(-2,))


def renormalized_B2_ladder(scn, result, eps=None, basis=(-1, 0, 1, 2)):
    """Ladders of ∫_{Y_ε}|B̊|² and of ∫_{Y_ε}Δ|B̊|² (the latter as a boundary flux)."""
    q, eps = _quad_for(scn, result, eps)
    b2 = q.integral_above("bosq", eps)
    lap = laplacian_ladder(q)
    return fit_expansion(eps, b2, basis), fit_expansion(eps, lap, basis)


def laplacian_ladder(q: SurfaceQuadrature):
    """∫_{Y_ε} Δ₊|B|² dA₊ = −∮_{Σ_ε} ∂_{ν₊}|B|² ds₊ with ν₊ = r ν̄ and
    ds₊ = r^{1−k} ds̄."""
    b = q.boundary
    r = b["r"]
    return -(r ** (2 - q.k)) * b["flux_bsq"] * b["ds_bar"] * q.weight


def integrate_over_Y_eps(integrand, scn, result, eps):
    """∫_{Y_ε} f dA₊ for a named kernel field, ``None`` (f = 1) or 0."""
    if isinstance(integrand, (int, float)) and integrand == 0:
        return np.zeros_like(np.atleast_1d(eps), dtype=float)
    q, _ = _quad_for(scn, result)
    return q.integral_above(integrand, np.atleast_1d(eps))


def equatorial_area_closed_form(eps, k=4):
    """∫_ε^2 (1 − r²/4)^{k−1} r^{−k} dr · vol(S^{k−1}) for the totally geodesic slice."""
    from math import comb, gamma, pi
    vol = 2 * pi ** (k / 2) / gamma(k / 2)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    out = np.zeros_like(eps)
    for j in range(k):
        c = comb(k - 1, j) * (-0.25) ** j
        e = 2 * j - k
        if e == -1:
            out += c * (np.log(2.0) - np.log(eps))
        else:
            out += c * (2.0 ** (e + 1) - eps ** (e + 1)) / (e + 1)
    return vol * out


# -- ambient renormalised volume ----------------------------------------------

def volume_quadrature(pair, eps, n_gl=16, n_psi=12, r_hi=2.0):
    """Nodes over (ψ, r) for a normal-form chart with one sphere factor."""
    from .geometry import curvature_at
    import jax
    import jax.numpy as jnp
    from .geometry import decompose, norm2, riemann
    n = pair.dim
    p1 = n - 2
    breaks = radial_breaks(np.min(eps) / 2.0, eps, r_hi)
    rn, rw, _ = gauss_panels(breaks, n_gl)
    x, w = np.polynomial.legendre.leggauss(n_psi)
    psi = 0.5 * np.pi * x
    pw = 0.5 * np.pi * w
    gp = pair.singular.fn
    rm = riemann(gp)

    def point(v):
        g = gp(v)
        weyl = decompose(g, rm(v))[4]
        return jnp.sqrt(jnp.linalg.det(g)), norm2(weyl, jnp.linalg.inv(g))

    fn = jax.jit(jax.vmap(point))
    R, P = np.meshgrid(rn, psi, indexing="ij")
    W = np.outer(rw, pw)
    pts = np.c_[np.zeros((R.size, p1)), P.ravel(), R.ravel()]
    dv, wsq = (np.asarray(a) for a in fn(jnp.asarray(pts)))
    wt = orbit_weight(p1, 0)
    return R.ravel(), W.ravel() * dv * wt, wsq


def renormalized_volume_4d(pair, eps=None, basis=(-3, -1, 0, 1, 2)):
    """Ladder of Vol(r > ε) and the plain ∫|W|² for a 4D normal-form chart."""
    eps = ladder(0.5, 10) if eps is None else eps
    r, dv, wsq = volume_quadrature(pair, eps)
    vals = np.array([np.sum(dv[r >= e]) for e in eps])
    fit = fit_expansion(eps, vals, basis, diagnose=(-2,))
    weyl = float(np.sum(dv * wsq))
    tail = float(np.sum((dv * wsq)[r < np.min(eps)]))
    fit.extra["weyl_integral"] = weyl
    fit.extra["weyl_tail"] = tail
    return fit
