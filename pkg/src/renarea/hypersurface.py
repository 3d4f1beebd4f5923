"""Embedded hypersurfaces of a conformally compact chart.

A hypersurface is handed over as an embedding ``u ↦ x(u; params)`` into the
chart of a :class:`~renarea.geometry.ConformalPair`.  Everything pointwise is
obtained by forward-mode differentiation of that map, so an embedding that is
a local Taylor polynomial of an ODE solution yields exact jets of the surface
at the expansion point.

Conventions: ``B(X, Y) = <∇_X Y, μ>``; the compact and singular forms are
related by ``B = B̄/r + μ̄(r) h̄ / r²``.  On the level sets ``Σ_r`` of the
defining function, ``ν̄`` is the inward (increasing ``r``) unit normal and
``L̄(X, Y) = <∇̄_X Y, ν̄> = −∇̄²r(X, Y)/|∇̄r|``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import (
    ChartPoint,
    ConformalPair,
    MetricField,
    christoffel,
    christoffel_from,
    decompose,
    norm2,
    riemann,
)


class DegenerateHypersurface(ValueError):
    pass


def cofactor_normal(jac):
    """Covector annihilating the columns of an ``n × (n−1)`` Jacobian."""
    n = jac.shape[0]
    rows = []
    for i in range(n):
        keep = np.array([j for j in range(n) if j != i])
        rows.append((-1.0) ** i * jnp.linalg.det(jac[keep, :]))
    return jnp.stack(rows)


def _contract(t, ginv):
    return norm2(t, ginv)


def core_kernel(pair: ConformalPair, emb: Callable, ref_cov: Callable):
    """Pointwise data of the embedded hypersurface at ``u``.

    ``ref_cov(u, params, jac)`` returns an ambient covector used to orient the
    normal (``ref_cov · μ̄ > 0``).
    """
    gbar = pair.compact.fn
    rx = pair.r
    gplus = lambda x: gbar(x) / rx(x) ** 2
    gam_bar = christoffel(gbar)
    gam_plus = christoffel(gplus)
    rm_bar_x = riemann(gbar)
    rm_plus_x = riemann(gplus)

    def parts(u, params):
        phi = lambda v: emb(v, params)
        x = phi(u)
        jac = jax.jacfwd(phi)(u)
        hess = jax.jacfwd(jax.jacfwd(phi))(u)
        g = gbar(x)
        ginv = jnp.linalg.inv(g)
        cov = cofactor_normal(jac)
        vec = ginv @ cov
        nrm = jnp.sqrt(cov @ vec)
        sign = jnp.sign(ref_cov(u, params, jac) @ vec)
        mu_bar = sign * vec / nrm
        nu_bar = g @ mu_bar
        return x, jac, hess, g, mu_bar, nu_bar

    def second_forms(u, params):
        x, jac, hess, g, mu_bar, nu_bar = parts(u, params)
        r = rx(x)
        acc_bar = hess + jnp.einsum("lij,ia,jb->lab", gam_bar(x), jac, jac)
        b_bar = jnp.einsum("l,lab->ab", nu_bar, acc_bar)
        h_bar = jac.T @ g @ jac
        mur = jax.grad(rx)(x) @ mu_bar
        b_conf = b_bar / r + mur / r**2 * h_bar
        acc_plus = hess + jnp.einsum("lij,ia,jb->lab", gam_plus(x), jac, jac)
        b_direct = jnp.einsum("l,lab->ab", nu_bar / r, acc_plus)
        return h_bar, b_bar, b_conf, b_direct, r, mur

    def hbar_u(params):
        def f(v):
            jac = jax.jacfwd(lambda w: emb(w, params))(v)
            return jac.T @ gbar(emb(v, params)) @ jac
        return f

    def ry_u(params):
        return lambda v: rx(emb(v, params))

    def bsq_plus(params):
        def f(v):
            h_bar, _, b, *_ = second_forms(v, params)
            r = rx(emb(v, params))
            hinv = jnp.linalg.inv(h_bar / r**2)
            return _contract(b, hinv)
        return f

    def kernel(u, params):
        x, jac, hess, g, mu_bar, nu_bar = parts(u, params)
        h_bar, b_bar, b_conf, b_direct, r, mur = second_forms(u, params)
        k = h_bar.shape[0]
        h_plus = h_bar / r**2
        hinv_bar = jnp.linalg.inv(h_bar)
        hinv_plus = jnp.linalg.inv(h_plus)
        b = b_conf
        mean = jnp.einsum("ab,ab->", hinv_plus, b)
        mean_bar = jnp.einsum("ab,ab->", hinv_bar, b_bar)
        bo = b - mean / k * h_plus
        bo_bar = b_bar - mean_bar / k * h_bar
        bsq = _contract(b, hinv_plus)
        bosq = _contract(bo, hinv_plus)
        bosq_bar = _contract(bo_bar, hinv_bar)
        bo2 = bo @ hinv_plus @ bo
        bo2_bar = bo_bar @ hinv_bar @ bo_bar
        tangent_orth = jnp.abs(cov_dot(jac, g, mu_bar)).max()

        hb = hbar_u(params)
        rm_y_bar = riemann(hb)(u)
        hp = lambda v: hb(v) / ry_u(params)(v) ** 2
        rm_y_plus = riemann(hp)(u)
        ric_b, scal_b, sch_b, tfr_b, weyl_b, s2_b = decompose(h_bar, rm_y_bar)
        ric_p, scal_p, sch_p, tfr_p, weyl_p, s2_p = decompose(h_plus, rm_y_plus)

        # ambient Weyl in both scales, contracted with the normal
        wx_bar = decompose(g, rm_bar_x(x))[4]
        wx_plus = decompose(g / r**2, rm_plus_x(x))[4]
        mu_plus = r * mu_bar
        wn_bar = jnp.einsum("iajb,ix,a,jy,b->xy", wx_bar, jac, mu_bar, jac, mu_bar)
        wn_plus = jnp.einsum("iajb,ix,a,jy,b->xy", wx_plus, jac, mu_plus, jac, mu_plus)
        bw_bar = jnp.einsum("ab,ac,bd,cd->", bo2_bar, hinv_bar, hinv_bar, wn_bar)
        bw_plus = jnp.einsum("ab,ac,bd,cd->", bo2, hinv_plus, hinv_plus, wn_plus)
        ww_bar = _contract(wn_bar, hinv_bar)
        ww_plus = _contract(wn_plus, hinv_plus)

        # contracted Gauss equation, general ambient and Einstein form
        rm_xp = rm_plus_x(x)
        ric_xp = decompose(g / r**2, rm_xp)[0]
        rnn = jnp.einsum("ijml,i,jx,my,l->xy", rm_xp, mu_plus, jac, jac, mu_plus)
        bb = b @ hinv_plus @ b
        gauss_gen = ric_p - (jac.T @ ric_xp @ jac - rnn) - mean * b + bb
        gauss_ein = ric_p + bb - mean * b + (k - 1) * h_plus - wn_plus

        # level sets of r on (Ȳ, h̄)
        ry = ry_u(params)
        dr = jax.grad(ry)(u)
        gam_y = christoffel_from(h_bar, jax.jacfwd(hb)(u))
        hess_r = jax.hessian(ry)(u) - jnp.einsum("kij,k->ij", gam_y, dr)
        grad_r = hinv_bar @ dr
        drsq = dr @ grad_r
        dnorm = jnp.sqrt(drsq)
        nu = grad_r / dnorm
        nu_low = dr / dnorm
        proj = jnp.eye(k) - jnp.outer(nu, nu_low)
        lap_r = jnp.einsum("ab,ab->", hinv_bar, hess_r)
        l_low = -proj.T @ hess_r @ proj / dnorm
        l_mixed = hinv_bar @ l_low
        hr = jnp.trace(l_mixed)
        lsq = jnp.trace(l_mixed @ l_mixed)
        l3 = jnp.trace(l_mixed @ l_mixed @ l_mixed)
        ric_nn = nu @ ric_b @ nu
        rm_nabn = jnp.einsum("iabl,i,l->ab", rm_y_bar, nu, nu)
        t_low = proj.T @ (ric_b - rm_nabn) @ proj
        tl = jnp.einsum("ab,ac,bd,cd->", t_low, hinv_bar, hinv_bar, l_low)
        s_bar = (scal_b * hr - 2.0 * ric_nn * hr - 2.0 * tl + 2.0 / 3.0 * hr**3
                 - 2.0 * hr * lsq + 4.0 / 3.0 * l3)
        hess_nu_grad = nu @ hess_r @ grad_r
        ric_nu_grad = nu @ ric_b @ grad_r
        literal = (drsq / r**3 - lap_r / r**2 + hess_nu_grad / r**2
                   + ric_nu_grad / r - 0.5 * scal_b / r)
        v_dot_nu = (drsq * dnorm / r**3 - dnorm * lap_r / r**2 + hess_nu_grad / r**2
                    + ric_nu_grad / r - 0.5 * scal_b * dnorm / r)

        kb = proj.T @ h_bar @ proj + jnp.outer(nu_low, nu_low)
        grad_bsq = jax.grad(bsq_plus(params))(u)

        return dict(
            x=x, r=r, h_bar=h_bar, h_plus=h_plus, mu_bar=mu_bar, mur=mur,
            b_bar=b_bar, b=b, b_direct=b_direct, mean=mean, mean_bar=mean_bar,
            bsq=bsq, bosq=bosq, bosq_bar=bosq_bar,
            bo4=bosq**2, bo4_bar=bosq_bar**2,
            bo2sq=_contract(bo2, hinv_plus), bo2sq_bar=_contract(bo2_bar, hinv_bar),
            bw=bw_plus, bw_bar=bw_bar, ww=ww_plus, ww_bar=ww_bar,
            orth=tangent_orth,
            gauss_ric=_contract(gauss_gen, hinv_plus), gauss_ric_einstein=_contract(gauss_ein, hinv_plus),
            scal_y=scal_p, scal_y_bar=scal_b,
            ric_y_sq=_contract(ric_p, hinv_plus), tfr_sq=_contract(tfr_p, hinv_plus),
            weyl_sq=_contract(weyl_p, hinv_plus), weyl_sq_bar=_contract(weyl_b, hinv_bar),
            sigma2=s2_p, sigma2_bar=s2_b,
            dA_plus=jnp.sqrt(jnp.linalg.det(h_plus)), dA_bar=jnp.sqrt(jnp.linalg.det(h_bar)),
            drsq=drsq, lap_r=lap_r, hr=hr, lsq=lsq, l3=l3, ric_nn=ric_nn, tl=tl,
            s_bar=s_bar, bdry_literal=s_bar - 2.0 * literal, bdry_exact=s_bar - 2.0 * v_dot_nu,
            corr_1=drsq / r**3, corr_2=-lap_r / r**2, corr_3=hess_nu_grad / r**2,
            corr_4=ric_nu_grad / r, corr_5=-0.5 * scal_b / r,
            flux_bsq=nu @ grad_bsq,
            ds_bar=jnp.sqrt(jnp.linalg.det(kb)),
            nu=nu,
        )
    return kernel


def cov_dot(jac, g, vec):
    """ḡ(∂_α φ, v) for every tangent column."""
    return jac.T @ g @ vec


def suite_kernel(pair: ConformalPair, emb: Callable):
    """Higher-order level-set data: derivatives of curvature along ν̄ and the
    σ₂ identity divergence on (Ȳ, h̄)."""
    gbar = pair.compact.fn
    rx = pair.r

    def kernel(u, params):
        hb = lambda v: _induced(gbar, emb, v, params)
        ry = lambda v: rx(emb(v, params))
        rm = riemann(hb)

        def scal(v):
            return decompose(hb(v), rm(v))[1]

        def nu_of(v):
            h = hb(v)
            d = jax.grad(ry)(v)
            up = jnp.linalg.solve(h, d)
            return up / jnp.sqrt(d @ up)

        def ric_nn(v):
            ric = decompose(hb(v), rm(v))[0]
            n = nu_of(v)
            return n @ ric @ n

        nu = nu_of(u)
        d_scal = jax.grad(scal)(u) @ nu
        d_ricnn = jax.grad(ric_nn)(u) @ nu
        from .geometry import sigma2_identity_terms
        lhs, plus, div = sigma2_identity_terms(hb, ry)(u)
        return dict(d_scal=d_scal, d_ric_nn=d_ricnn, sigma2_lhs=lhs,
                    sigma2_plus=plus, sigma2_div=div, scal=scal(u))
    return kernel


def _induced(gbar, emb, v, params):
    jac = jax.jacfwd(lambda w: emb(w, params))(v)
    return jac.T @ gbar(emb(v, params)) @ jac


@dataclass(eq=False)
class EmbeddedPatch:
    """An embedding family ``x(u; params)`` with cached compiled kernels."""

    pair: ConformalPair
    emb: Callable
    ref_cov: Callable
    dim: int
    name: str = ""
    _kernels: dict = field(default_factory=dict, repr=False)

    def _get(self, key):
        if key not in self._kernels:
            builder = {"core": lambda: core_kernel(self.pair, self.emb, self.ref_cov),
                       "suite": lambda: suite_kernel(self.pair, self.emb)}[key]
            fn = builder()
            self._kernels[key] = (jax.jit(fn), jax.jit(jax.vmap(fn)))
        return self._kernels[key]

    def evaluate(self, u, params, kind="core"):
        single, _ = self._get(kind)
        out = single(jnp.asarray(u, dtype=float), jnp.asarray(params, dtype=float))
        return {k: np.asarray(v) for k, v in out.items()}

    def evaluate_many(self, us, params, kind="core"):
        _, batched = self._get(kind)
        out = batched(jnp.asarray(us, dtype=float), jnp.asarray(params, dtype=float))
        return {k: np.asarray(v) for k, v in out.items()}


# -- embeddings used by the symmetric scenarios -------------------------------

def _poly(c, t):
    out = 0.0
    for ck in c[::-1]:
        out = out * t + ck
    return out


def graph_embedding(n_orbit, order):
    """``u = (y, r) ↦ (y, ψ(r), r)`` with ψ a polynomial in ``r − r_c``.

    ``params = [r_c, c_0, ..., c_order]``.
    """
    def emb(u, params):
        rc, c = params[0], params[1 : order + 2]
        r = u[n_orbit]
        return jnp.concatenate([u[:n_orbit], jnp.stack([_poly(c, r - rc), r])])

    def ref_cov(u, params, jac):
        return jnp.zeros(n_orbit + 2).at[n_orbit].set(1.0)
    return emb, ref_cov


def profile_embedding(n_orbit, order):
    """``u = (y, s) ↦ (y, ρ1(s), ρ2(s))`` with polynomial planar profile.

    ``params = [s_c, sign, a_0..a_order, b_0..b_order]``; the normal is the
    left normal of the planar curve times ``sign``.
    """
    def emb(u, params):
        sc = params[0]
        a = params[2 : order + 3]
        b = params[order + 3 : 2 * order + 4]
        s = u[n_orbit] - sc
        return jnp.concatenate([u[:n_orbit], jnp.stack([_poly(a, s), _poly(b, s)])])

    def ref_cov(u, params, jac):
        t = jac[n_orbit:, n_orbit]
        return params[1] * jnp.zeros(n_orbit + 2).at[n_orbit].set(-t[1]).at[n_orbit + 1].set(t[0])
    return emb, ref_cov


def function_graph_embedding(n_orbit, zfn, base=0.0):
    """``u = (x, r) ↦ (x, base + z(x, r), r)`` for an arbitrary jax function z."""
    def emb(u, params):
        return jnp.concatenate([u[:n_orbit], jnp.stack([base + zfn(u, params), u[n_orbit]])])

    def ref_cov(u, params, jac):
        return jnp.zeros(n_orbit + 2).at[n_orbit].set(1.0)
    return emb, ref_cov


# -- the graph representation -------------------------------------------------

@dataclass(eq=False)
class BoundaryData:
    """Σ = {x⁴ = ψ0} inside the boundary sphere, split into orbit factors."""

    p1: int
    p2: int
    psi0: float
    multiplicity: int = 1

    @property
    def dim(self):
        return self.p1 + self.p2 + 1


@dataclass(eq=False)
class GraphHypersurface:
    """Graph ``x⁴ = ψ0 + z(r)`` over the orbit coordinates near the boundary.

    ``z_values`` sample the graph on ``r_grid``.  ``local_model(r)`` returns the
    Taylor polynomial of ``z`` at ``r``: exact jets when an ODE supplies them,
    otherwise the cubic spline piece (C² only).
    """

    pair: ConformalPair
    boundary: BoundaryData
    r_grid: np.ndarray
    z_values: np.ndarray
    orientation: int = 1
    symmetry: str = "rotational"
    jets: Callable | None = None
    order: int = 6
    _spline: CubicSpline | None = field(default=None, repr=False)
    _patch: EmbeddedPatch | None = field(default=None, repr=False)

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.z_values = np.asarray(self.z_values, dtype=float)

    @property
    def spline(self):
        if self._spline is None:
            self._spline = CubicSpline(self.r_grid, self.z_values, bc_type="not-a-knot")
        return self._spline

    @property
    def n_orbit(self):
        return self.boundary.p1 + self.boundary.p2

    @property
    def patch(self):
        if self._patch is None:
            emb, ref = graph_embedding(self.n_orbit, self.order)
            self._patch = EmbeddedPatch(self.pair, emb, ref, self.n_orbit + 1, "graph")
        return self._patch

    def check_r(self, r):
        if not (self.r_grid[0] <= r <= self.r_grid[-1]):
            raise DegenerateHypersurface(f"r = {r} outside the grid [{self.r_grid[0]}, {self.r_grid[-1]}]")

    def local_model(self, r):
        self.check_r(r)
        c = np.zeros(self.order + 1)
        if self.jets is not None:
            jc = np.asarray(self.jets(r))
            c[: min(len(jc), self.order + 1)] = jc[: self.order + 1]
        else:
            s = self.spline
            c[:4] = [s(r), s(r, 1), s(r, 2) / 2.0, s(r, 3) / 6.0]
        c[0] += self.boundary.psi0
        return np.r_[r, c]

    def z(self, r, nu=0):
        return self.spline(r, nu)

    def point(self, r):
        return ChartPoint.of(np.r_[np.zeros(self.n_orbit), r], "Y:" + self.pair.compact.chart_id)

    def data(self, r):
        return self.patch.evaluate(np.r_[np.zeros(self.n_orbit), r], self.local_model(r))

    def data_many(self, rs, kind="core"):
        rs = np.atleast_1d(rs)
        us = np.c_[np.zeros((len(rs), self.n_orbit)), rs]
        ps = np.stack([self.local_model(r) for r in rs])
        return self.patch.evaluate_many(us, ps, kind)


def _q_to_r(Y, q):
    arr = q.array if isinstance(q, ChartPoint) else np.atleast_1d(np.asarray(q, dtype=float))
    return float(arr[-1])


def induced_metric_at(Y: GraphHypersurface, ambient: MetricField | None, q):
    """h̄ in the basis (∂_a, ∂_r) following the graph formula."""
    r = _q_to_r(Y, q)
    h = Y.data(r)["h_bar"]
    if np.linalg.det(h) <= 0:
        raise DegenerateHypersurface("induced metric is degenerate")
    return h


def graph_induced_metric(gbar, dz):
    """Direct use of the graph formula h̄ = ḡ_ab + ḡ_4a z_b + ḡ_4b z_a + ḡ_44 z_a z_b.

    ``gbar`` is the ambient matrix in coordinates ordered (x^a, x⁴, r) and
    ``dz`` the gradient of z in (x^a, r).
    """
    gbar = np.asarray(gbar, dtype=float)
    n = gbar.shape[0]
    keep = [i for i in range(n) if i != n - 2]
    g = gbar[np.ix_(keep, keep)]
    g4 = gbar[n - 2, keep]
    g44 = gbar[n - 2, n - 2]
    dz = np.asarray(dz, dtype=float)
    return g + np.outer(g4, dz) + np.outer(dz, g4) + g44 * np.outer(dz, dz)


def unit_normal_at(Y: GraphHypersurface, ambient_singular: MetricField | None, q):
    """Singular-scale unit normal vector μ = r μ̄."""
    d = Y.data(_q_to_r(Y, q))
    return d["r"] * d["mu_bar"]


@dataclass
class SecondFundamentalData:
    B_lowered: np.ndarray
    B_bar_lowered: np.ndarray
    H: float
    B_ring: np.ndarray
    invariant_B2: float
    invariant_B4: float
    direct_gap: float


def _sff(d):
    k = d["h_plus"].shape[0]
    bo = d["b"] - d["mean"] / k * d["h_plus"]
    gap = float(np.abs(d["b"] - d["b_direct"]).max() / max(1.0, np.abs(d["b"]).max()))
    return SecondFundamentalData(d["b"], d["b_bar"], float(d["mean"]), bo,
                                 float(d["bosq"]), float(d["bo4"]), gap)


def second_fundamental_form_at(Y: GraphHypersurface, ambient=None, q=None):
    return _sff(Y.data(_q_to_r(Y, q)))


def gauss_identity_residuals(d, einstein_trace=None):
    """Traced and squared Gauss residuals from kernel output ``d``.

    For a minimal hypersurface of an Einstein space with ``Ric = −n g`` the
    traced identity is ``R_Y + |B|² = −(n−1)(n−2)`` and squaring gives the
    quartic form; both residuals are returned.
    """
    k = d["h_plus"].shape[-1]
    c = (k - 1) * k if einstein_trace is None else einstein_trace
    traced = d["scal_y"] + d["bsq"] + c
    squared = d["scal_y"] ** 2 - (d["bsq"] ** 2 + 2 * c * d["bsq"] + c * c)
    return traced, squared


def boundary_fundamental_forms(boundary: BoundaryData, boundary_metric=None):
    """II, I̊I, |I̊I|² and η of Σ = {ψ = ψ0} in the round boundary sphere.

    Evaluated through the same embedding machinery: Σ is the level set of
    the angle in the orbit chart of the unit sphere.  Returns a dict with the
    principal curvatures, ``II`` (lowered, orbit chart at y = 0), its trace-free
    part, ``norm2_ring`` and ``eta``, plus the total ``∮|I̊I|²`` and the
    volume of Σ.
    """
    p1, p2, psi0 = boundary.p1, boundary.p2, boundary.psi0
    m = p1 + p2
    if m == 0:
        return dict(principal=np.zeros(0), II=np.zeros((0, 0)), II_ring=np.zeros((0, 0)),
                    norm2_ring=0.0, eta=0.0, integral_ring=0.0, volume=float(boundary.multiplicity * 2))
    sphere = boundary_sphere_metric(p1, p2)

    def emb(u, params):
        return jnp.concatenate([u, jnp.array([params[0]])])

    def ref(u, params, jac):
        return jnp.zeros(m + 1).at[m].set(1.0)

    kern = jax.jit(sphere_level_kernel(sphere, emb, ref))
    out = kern(jnp.zeros(m), jnp.array([psi0]))
    ii, k = np.asarray(out[0]), np.asarray(out[1])
    kinv = np.linalg.inv(k)
    principal = np.sort(np.linalg.eigvals(kinv @ ii).real)
    eta = float(np.trace(kinv @ ii))
    ring = ii - eta / m * k
    n2 = float(np.einsum("ab,ac,bd,cd->", ring, kinv, kinv, ring))
    vol = _sphere_volume(p1) * np.cos(psi0) ** p1 * _sphere_volume(p2) * np.sin(psi0) ** p2
    if p2 == 0:
        vol = _sphere_volume(p1) * np.cos(psi0) ** p1
    vol *= boundary.multiplicity
    return dict(principal=principal, II=ii, II_ring=ring, norm2_ring=n2, eta=eta,
                integral_ring=n2 * vol, volume=vol)


def boundary_sphere_metric(p1, p2):
    from .geometry import sphere_stereo
    m = p1 + p2

    def fn(x):
        y1, y2, psi = x[:p1], x[p1:m], x[m]
        g = jnp.zeros((m + 1, m + 1))
        if p1:
            g = g.at[:p1, :p1].set(jnp.cos(psi) ** 2 * sphere_stereo(y1))
        if p2:
            g = g.at[p1:m, p1:m].set(jnp.sin(psi) ** 2 * sphere_stereo(y2))
        return g.at[m, m].set(1.0)
    return fn


def sphere_level_kernel(gfn, emb, ref):
    gam = christoffel(gfn)

    def kern(u, params):
        phi = lambda v: emb(v, params)
        x = phi(u)
        jac = jax.jacfwd(phi)(u)
        hess = jax.jacfwd(jax.jacfwd(phi))(u)
        g = gfn(x)
        cov = cofactor_normal(jac)
        vec = jnp.linalg.solve(g, cov)
        mu = jnp.sign(ref(u, params, jac) @ vec) * vec / jnp.sqrt(cov @ vec)
        acc = hess + jnp.einsum("lij,ia,jb->lab", gam(x), jac, jac)
        ii = jnp.einsum("l,lab->ab", g @ mu, acc)
        return ii, jac.T @ g @ jac
    return kern


def _sphere_volume(p):
    from math import gamma, pi
    if p == 0:
        return 1.0
    return 2.0 * pi ** ((p + 1) / 2) / gamma((p + 1) / 2)


def orbit_weight(p1, p2):
    """Orbit volume divided by the stereographic density at y = 0."""
    w = 1.0
    if p1:
        w *= _sphere_volume(p1) / 2.0**p1
    if p2:
        w *= _sphere_volume(p2) / 2.0**p2
    return w
