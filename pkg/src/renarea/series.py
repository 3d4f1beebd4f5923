"""Formal r-expansions of the minimal graph, its area form and the ambient
volume form, computed with truncated-series arithmetic."""
from __future__ import annotations

import math

import numpy as np

from .jets import Jet
from .solver import Scenario, expand_graph_coefficients


def expand_minimal_graph(scn: Scenario, order=5):
    """Coefficients ``c_m`` of ``z = ψ − ψ0 = Σ c_m r^m`` for ``m = 0..order``.

    ``c_2 = η/(2(k−1))``; the Taylor-normalised fourth coefficient is
    ``z⁽⁴⁾ = 24 c_4``.
    """
    z = expand_graph_coefficients(scn.p1, scn.p2, scn.psi0, order)
    z = z.copy()
    z[0] = 0.0
    return z


def _graph_area_ratio(p1, p2, psi0, z, order):
    r = Jet.variable(order)
    zeta = Jet(np.r_[z, np.zeros(max(0, order + 1 - len(z)))][: order + 1])
    psi = zeta + psi0
    dz = zeta.ddr()
    a = 1.0 - r * r * 0.25
    k = p1 + p2 + 1
    ratio = (1.0 + a * a * dz * dz) * a ** (2 * (k - 1))
    if p1:
        ratio = ratio * (np.cos(psi) / np.cos(psi0)) ** (2 * p1)
    if p2:
        ratio = ratio * (np.sin(psi) / np.sin(psi0)) ** (2 * p2)
    return np.sqrt(ratio)


def expand_area_form(scn: Scenario, order=4):
    """Coefficients of ``(det h̄ / det h₀)^{1/2}`` in r for the invariant graph.

    The symmetric boundary makes every coefficient constant on Σ.
    """
    z = expand_minimal_graph(scn, order + 2)
    return _graph_area_ratio(scn.p1, scn.p2, scn.psi0, z, order + 1).c[: order + 1]


def expand_volume_form_4d(pair, point=None, order=4):
    """Coefficients ``ν⁽ʲ⁾`` of ``(det g_r / det g₀)^{1/2}`` along the r-line of a
    normal-form chart whose last coordinate is r."""
    import jax
    import jax.numpy as jnp

    n = pair.dim
    x0 = jnp.zeros(n) if point is None else jnp.asarray(point, dtype=float)
    x0 = x0.at[n - 1].set(0.0)
    e = jnp.zeros(n).at[n - 1].set(1.0)
    g = pair.compact.fn

    def vol(t):
        return jnp.sqrt(jnp.linalg.det(g(x0 + t * e)))

    c, f = [], vol
    for j in range(order + 1):
        c.append(float(f(0.0)) / math.factorial(j))
        f = jax.grad(f)
    return np.asarray(c) / c[0]
