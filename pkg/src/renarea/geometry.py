"""Metric fields on coordinate charts and their curvature.

Tensors are stored fully lowered.  The Riemann tensor follows
``R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`` with
``R_ijkl = <R(e_i, e_j) e_k, e_l>``, so the unit sphere has
``R_ijkl = g_il g_jk − g_ik g_jl`` and hyperbolic space of dimension ``n`` has
scalar curvature ``−n(n−1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)


class ChartDomainError(ValueError):
    pass


class MetricDegenerate(ValueError):
    pass


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple
    chart_id: str

    @classmethod
    def of(cls, coords, chart_id):
        return cls(tuple(float(c) for c in np.ravel(coords)), chart_id)

    @property
    def array(self):
        return np.array(self.coords)


@dataclass(eq=False)
class MetricField:
    """A smooth symmetric-matrix valued map on an open coordinate box.

    ``fn`` must be written with ``jax.numpy`` so that nested forward-mode
    differentiation is available; ``derivative_order`` records how many
    derivatives of it are trusted.
    """

    dim: int
    fn: Callable
    lo: np.ndarray
    hi: np.ndarray
    chart_id: str
    name: str = ""
    derivative_order: int = 8
    inside: Callable | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dim,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dim,)).copy()

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        ok = x.shape == (self.dim,) and np.all(x > self.lo) and np.all(x < self.hi)
        if ok and self.inside is not None:
            ok = bool(self.inside(x))
        return bool(ok)

    def jitted(self, key, builder):
        if key not in self._cache:
            self._cache[key] = jax.jit(builder(self.fn))
        return self._cache[key]


@dataclass(eq=False)
class ConformalPair:
    """A compactified metric together with its defining function.

    The singular metric is ``compact / r**2``.
    """

    compact: MetricField
    r: Callable
    name: str = ""
    _singular: MetricField | None = field(default=None, repr=False)

    @property
    def dim(self):
        return self.compact.dim

    @property
    def singular(self):
        if self._singular is None:
            g, r = self.compact.fn, self.r
            self._singular = MetricField(
                self.dim, lambda x: g(x) / r(x) ** 2, self.compact.lo, self.compact.hi,
                self.compact.chart_id, self.name + "+", self.compact.derivative_order,
                self.compact.inside,
            )
        return self._singular


def _coords(field_, p):
    x = p.array if isinstance(p, ChartPoint) else np.asarray(p, dtype=float)
    if isinstance(p, ChartPoint) and p.chart_id != field_.chart_id:
        raise ChartDomainError(f"point is on chart {p.chart_id!r}, field on {field_.chart_id!r}")
    if not field_.contains(x):
        raise ChartDomainError(f"{x} outside the domain of chart {field_.chart_id!r}")
    return x


def metric_at(field_, p, with_inverse=False):
    x = _coords(field_, p)
    g = np.asarray(field_.fn(jnp.asarray(x)))
    if not np.allclose(g, g.T, rtol=1e-13, atol=1e-14 * max(1.0, np.abs(g).max())):
        raise MetricDegenerate("metric evaluation is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise MetricDegenerate(f"metric not positive definite at {x}") from exc
    return (g, np.linalg.inv(g)) if with_inverse else g


# -- tensor algebra shared by every curvature path ---------------------------

def christoffel_from(g, dg):
    """Γ^l_ij from g and dg[i, j, k] = ∂_k g_ij."""
    ginv = jnp.linalg.inv(g)
    low = 0.5 * (jnp.einsum("mji->mij", dg) + dg - jnp.einsum("ijm->mij", dg))
    return jnp.einsum("lm,mij->lij", ginv, low)


def christoffel(gfn):
    def gam(x):
        return christoffel_from(gfn(x), jax.jacfwd(gfn)(x))
    return gam


def riemann_from(g, gam, dgam):
    """Lowered Riemann from Γ^l_ij and dgam[l, i, j, k] = ∂_k Γ^l_ij."""
    up = (
        jnp.einsum("ljki->lkij", dgam)
        - jnp.einsum("likj->lkij", dgam)
        + jnp.einsum("lim,mjk->lkij", gam, gam)
        - jnp.einsum("ljm,mik->lkij", gam, gam)
    )
    return jnp.einsum("lm,mkij->ijkl", g, up)


def riemann(gfn):
    gam = christoffel(gfn)

    def rm(x):
        return riemann_from(gfn(x), gam(x), jax.jacfwd(gam)(x))
    return rm


def kulkarni_nomizu(a, b):
    """(a ∧ b)_ijkl arranged so that ½ g∧g is the unit-sphere tensor here."""
    return (
        jnp.einsum("il,jk->ijkl", a, b) + jnp.einsum("jk,il->ijkl", a, b)
        - jnp.einsum("ik,jl->ijkl", a, b) - jnp.einsum("jl,ik->ijkl", a, b)
    )


def decompose(g, rm):
    """Ricci, scalar, Schouten, trace-free Ricci, Weyl and σ₂ from R_ijkl."""
    n = g.shape[0]
    ginv = jnp.linalg.inv(g)
    ric = jnp.einsum("il,ijkl->jk", ginv, rm)
    scal = jnp.einsum("jk,jk->", ginv, ric)
    tfr = ric - scal / n * g
    if n >= 3:
        sch = (ric - scal / (2.0 * (n - 1)) * g) / (n - 2)
    else:
        sch = jnp.zeros_like(g)
    weyl = rm - kulkarni_nomizu(sch, g) if n >= 4 else jnp.zeros_like(rm)
    mixed = ginv @ sch
    sigma2 = 0.5 * (jnp.trace(mixed) ** 2 - jnp.trace(mixed @ mixed))
    return ric, scal, sch, tfr, weyl, sigma2


def norm2(t, ginv):
    """Full contraction |t|² of a lowered tensor of any rank."""
    out = t
    for _ in range(t.ndim):
        out = jnp.tensordot(out, ginv, axes=([0], [0]))
    return jnp.sum(out * t)


@dataclass
class CurvatureBundle:
    metric: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray
    schouten: np.ndarray
    trace_free_ricci: np.ndarray
    sigma2: float
    weyl_defined: bool = True

    @property
    def inverse(self):
        return np.linalg.inv(self.metric)

    def norm2(self, name):
        return float(norm2(jnp.asarray(getattr(self, name)), jnp.asarray(self.inverse)))


def _bundle(g, rm):
    ric, scal, sch, tfr, weyl, s2 = decompose(g, rm)
    n = g.shape[0]
    return CurvatureBundle(
        np.asarray(g), np.asarray(rm), np.asarray(ric), float(scal), np.asarray(weyl),
        np.asarray(sch), np.asarray(tfr), float(s2), n >= 4,
    )


def _autodiff_kernel(gfn):
    rm = riemann(gfn)
    return lambda x: (gfn(x), rm(x))


def curvature_at(field_, p, method="autodiff", scale=1.0):
    """Curvature bundle at ``p`` by nested forward-mode AD or by finite differences."""
    x = _coords(field_, p)
    if field_.derivative_order < 2:
        raise ValueError("curvature needs at least two trusted derivatives")
    if method == "autodiff":
        g, rm = field_.jitted("curv", _autodiff_kernel)(jnp.asarray(x))
    elif method == "fd":
        g, rm = _fd_riemann(field_, x, scale)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    if not np.all(np.isfinite(np.asarray(rm))):
        raise FloatingPointError(f"curvature evaluation failed at {x}")
    return _bundle(jnp.asarray(g), jnp.asarray(rm))


def _richardson(d, h):
    return (4.0 * d(h / 2.0) - d(h)) / 3.0


def _fd_riemann(field_, x, scale):
    """Central differences with one Richardson step on the metric values."""
    n = field_.dim
    f = lambda y: np.asarray(field_.fn(jnp.asarray(y)))
    eps = np.finfo(float).eps
    h1 = eps ** (1 / 3) * scale * 8.0
    h2 = eps ** (1 / 4) * scale * 8.0
    e = np.eye(n)

    def d1(h):
        return np.stack([(f(x + h * e[k]) - f(x - h * e[k])) / (2 * h) for k in range(n)], axis=-1)

    def d2(h):
        out = np.zeros((n, n, n, n))
        for k in range(n):
            for l in range(k, n):
                v = (f(x + h * e[k] + h * e[l]) - f(x + h * e[k] - h * e[l])
                     - f(x - h * e[k] + h * e[l]) + f(x - h * e[k] - h * e[l])) / (4 * h * h)
                out[:, :, k, l] = out[:, :, l, k] = v
        return out

    g = f(x)
    dg = _richardson(d1, h1)
    ddg = _richardson(d2, h2)
    ginv = np.linalg.inv(g)
    gam = np.asarray(christoffel_from(g, dg))
    low = 0.5 * (np.einsum("mjik->mijk", ddg) + ddg - np.einsum("ijmk->mijk", ddg))
    dgam = np.einsum("lm,mijk->lijk", ginv, low) - np.einsum("la,abk,bij->lijk", ginv, dg, gam)
    return g, riemann_from(g, gam, dgam)


def sigma2(field_, p):
    return curvature_at(field_, p).sigma2


# -- scalar-function calculus on a metric ------------------------------------

def hessian_of(gfn, ffn):
    """Covariant Hessian ∇²f for a scalar function on the chart."""
    gam = christoffel(gfn)

    def hess(x):
        return jax.hessian(ffn)(x) - jnp.einsum("kij,k->ij", gam(x), jax.grad(ffn)(x))
    return hess


def divergence_of(gfn, vfn):
    """∇^α V_α for a covector field given as a function of the coordinates."""
    gam = christoffel(gfn)

    def div(x):
        ginv = jnp.linalg.inv(gfn(x))
        cov = jax.jacfwd(vfn)(x) - jnp.einsum("kij,k->ij", gam(x), vfn(x))
        return jnp.einsum("ij,ij->", ginv, cov)
    return div


def sigma2_identity_terms(gfn, rfn):
    """Both sides of the pointwise σ₂ conformal-change identity.

    ``gfn`` is the compact metric, the singular one is ``gfn / r²``.  Returns a
    function of ``x`` giving ``(lhs, scaled_sigma2, divergence)`` with
    ``lhs = 4σ₂(P̄)`` and the identity reading
    ``lhs = 4 r⁻⁴ σ₂(P₊) + 2 ∇̄·V``.
    """
    rm_bar = riemann(gfn)
    hfn = lambda x: gfn(x) / rfn(x) ** 2
    rm_plus = riemann(hfn)
    hess = hessian_of(gfn, rfn)

    def ricci_scalar(x):
        g = gfn(x)
        ric, scal, *_ = decompose(g, rm_bar(x))
        return ric, scal

    def vfield(x):
        g = gfn(x)
        ginv = jnp.linalg.inv(g)
        r = rfn(x)
        dr = jax.grad(rfn)(x)
        up = ginv @ dr
        hs = hess(x)
        lap = jnp.einsum("ij,ij->", ginv, hs)
        ric, scal = ricci_scalar(x)
        grad2 = dr @ up
        return (grad2 * dr / r**3 - dr * lap / r**2 + hs @ up / r**2
                + ric @ up / r - 0.5 * scal * dr / r)

    div = divergence_of(gfn, vfield)

    def terms(x):
        g = gfn(x)
        lhs = 4.0 * decompose(g, rm_bar(x))[-1]
        plus = 4.0 * decompose(hfn(x), rm_plus(x))[-1] / rfn(x) ** 4
        return lhs, plus, 2.0 * div(x)
    return terms


def sigma2_conformal_residual(field_compact, r_func, p):
    """LHS minus RHS of the σ₂ conformal-change identity at ``p``."""
    x = _coords(field_compact, p)
    if float(r_func(jnp.asarray(x))) <= 0.0:
        raise ValueError("conformal factor must be positive")
    fn = field_compact._cache.get(("sig2", id(r_func)))
    if fn is None:
        fn = jax.jit(sigma2_identity_terms(field_compact.fn, r_func))
        field_compact._cache[("sig2", id(r_func))] = fn
    lhs, plus, div = (float(v) for v in fn(jnp.asarray(x)))
    return lhs - plus - div


def bianchi_residuals(field_, p):
    """(first Bianchi, contracted second Bianchi) maximum residuals at ``p``."""
    x = jnp.asarray(_coords(field_, p))
    gfn = field_.fn
    rm = riemann(gfn)

    def ric_scal(y):
        ric, scal, *_ = decompose(gfn(y), rm(y))
        return ric, scal

    def contracted(y):
        g = gfn(y)
        ginv = jnp.linalg.inv(g)
        gam = christoffel(gfn)(y)
        dric = jax.jacfwd(lambda z: ric_scal(z)[0])(y)
        dscal = jax.grad(lambda z: ric_scal(z)[1])(y)
        ric = ric_scal(y)[0]
        cov = dric - jnp.einsum("mki,mj->ijk", gam, ric) - jnp.einsum("mkj,im->ijk", gam, ric)
        return jnp.einsum("ik,ijk->j", ginv, cov) - 0.5 * dscal

    r = np.asarray(rm(x))
    first = r + np.einsum("ijkl->jkil", r) + np.einsum("ijkl->kijl", r)
    second = np.asarray(jax.jit(contracted)(x))
    return float(np.abs(first).max()), float(np.abs(second).max())


# -- catalog metrics ---------------------------------------------------------

def sphere_stereo(y):
    """Round unit-sphere metric in stereographic coordinates."""
    p = y.shape[0]
    return 4.0 / (1.0 + y @ y) ** 2 * jnp.eye(p)


def euclidean(dim):
    return MetricField(dim, lambda x: jnp.eye(dim) + 0.0 * x[0], -np.inf, np.inf, f"R{dim}", "euclidean")


def hyperbolic_ball(dim):
    def fn(x):
        return 4.0 / (1.0 - x @ x) ** 2 * jnp.eye(dim)
    return MetricField(dim, fn, -1.0, 1.0, f"ball{dim}", "hyperbolic ball",
                       inside=lambda x: float(x @ x) < 1.0)


def _orbit_block(a2, c2, s2, y1, y2):
    blocks = [a2[None, None] * jnp.ones((1, 1))]
    if y1.shape[0]:
        blocks.append(a2 * c2 * sphere_stereo(y1))
    if y2.shape[0]:
        blocks.append(a2 * s2 * sphere_stereo(y2))
    return blocks


def normal_form_orbit(p1, p2):
    """Hyperbolic space in special-defining-function normal form.

    Coordinates ``(y1[p1], y2[p2], ψ, r)`` with compact metric
    ``dr² + (1 − r²/4)² (dψ² + cos²ψ g_{S^p1} + sin²ψ g_{S^p2})`` and
    singular metric ``compact / r²``.  When ``p2 = 0`` the angle ψ is signed.
    """
    n = p1 + p2 + 2

    def fn(x):
        y1, y2, psi, r = x[:p1], x[p1:p1 + p2], x[n - 2], x[n - 1]
        a2 = (1.0 - r * r / 4.0) ** 2
        g = jnp.zeros((n, n))
        if p1:
            g = g.at[:p1, :p1].set(a2 * jnp.cos(psi) ** 2 * sphere_stereo(y1))
        if p2:
            g = g.at[p1:p1 + p2, p1:p1 + p2].set(a2 * jnp.sin(psi) ** 2 * sphere_stereo(y2))
        g = g.at[n - 2, n - 2].set(a2)
        return g.at[n - 1, n - 1].set(1.0)

    lo = np.r_[-np.full(p1 + p2, 50.0), -np.pi / 2 if p2 == 0 else 0.0, 0.0]
    hi = np.r_[np.full(p1 + p2, 50.0), np.pi / 2, 2.0]
    field_ = MetricField(n, fn, lo, hi, f"nf{p1}{p2}", f"normal form ({p1},{p2})")
    return ConformalPair(field_, lambda x: x[n - 1], field_.name)


def ball_radius_to_r(rho):
    return 2.0 * (1.0 - rho) / (1.0 + rho)


def r_to_ball_radius(r):
    return (2.0 - r) / (2.0 + r)


def ball_orbit(p1, p2):
    """Hyperbolic ball in orbit coordinates ``(y1[p1], y2[p2], ρ1, ρ2)``.

    Compact metric ``16 (dρ1² + ρ1² g_{S^p1} + dρ2² + ρ2² g_{S^p2}) / (1 + ρ)⁴``
    for the defining function ``r = 2(1 − ρ)/(1 + ρ)``; with ``p2 = 0`` the
    second planar coordinate is signed.
    """
    n = p1 + p2 + 2

    def fn(x):
        y1, y2, r1, r2 = x[:p1], x[p1:p1 + p2], x[n - 2], x[n - 1]
        rho = jnp.sqrt(r1 * r1 + r2 * r2)
        c = 16.0 / (1.0 + rho) ** 4
        g = jnp.zeros((n, n))
        if p1:
            g = g.at[:p1, :p1].set(c * r1 * r1 * sphere_stereo(y1))
        if p2:
            g = g.at[p1:p1 + p2, p1:p1 + p2].set(c * r2 * r2 * sphere_stereo(y2))
        return g.at[n - 2, n - 2].set(c).at[n - 1, n - 1].set(c)

    def rfn(x):
        return ball_radius_to_r(jnp.sqrt(x[n - 2] ** 2 + x[n - 1] ** 2))

    lo = np.r_[-np.full(p1 + p2, 50.0), 0.0, -1.0 if p2 == 0 else 0.0]
    hi = np.r_[np.full(p1 + p2, 50.0), 1.0, 1.0]
    field_ = MetricField(n, fn, lo, hi, f"bo{p1}{p2}", f"ball orbit ({p1},{p2})",
                         inside=lambda x: float(x[n - 2] ** 2 + x[n - 1] ** 2) < 1.0)
    return ConformalPair(field_, rfn, field_.name)


def perturbed(pair, amplitude, seed=0, center=None, width=0.5):
    """A smooth symmetric bump added to the compact metric (not conformally flat)."""
    rng = np.random.default_rng(seed)
    n = pair.dim
    s = rng.normal(size=(n, n))
    s = jnp.asarray(0.5 * (s + s.T))
    c = jnp.asarray(np.zeros(n) if center is None else np.asarray(center, dtype=float))
    base = pair.compact.fn

    def fn(x):
        d = x - c
        return base(x) + amplitude * jnp.exp(-(d @ d) / (2 * width**2)) * s

    f = MetricField(n, fn, pair.compact.lo, pair.compact.hi, pair.compact.chart_id,
                    pair.name + " perturbed", pair.compact.derivative_order, pair.compact.inside)
    return ConformalPair(f, pair.r, f.name)
