"""Quadrature rules on the reference elements.

Tensor elements use Gauss-Legendre products.  Simplices use a symmetric
degree-6 rule on the triangle and a conical-product (Gauss-Jacobi) rule on
the tetrahedron.  All rules have strictly interior points with positive
weights, which the stabilized formulations rely on (the bubble Laplacian
vanishes at Q4/B8 reference corners).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .kinds import ElementKind


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n_points, dim)
    weights: np.ndarray  # (n_points,)
    exact_degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, f) -> float:
        """Integrate a callable f(xi) over the reference element."""
        return float(sum(w * f(p) for p, w in zip(self.points, self.weights)))


def _tensor_gauss(dim: int, n: int) -> QuadratureRule:
    x, w = roots_legendre(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    wts = np.ones(pts.shape[0])
    for g in wgrids:
        wts = wts * g.ravel()
    return QuadratureRule(pts, wts, exact_degree=2 * n - 1)


# Symmetric 12-point degree-6 triangle rule (weights scaled to area 1/2).
_TRI6_GROUPS = [
    (0.063089014491502, 0.050844906370207, 3),
    (0.249286745170910, 0.116786275726379, 3),
    ((0.310352451033785, 0.053145049844816), 0.082851075618374, 6),
]


def _triangle_deg6() -> QuadratureRule:
    pts, wts = [], []
    for loc, w, mult in _TRI6_GROUPS:
        if mult == 3:
            a = loc
            bary = [(1 - 2 * a, a, a), (a, 1 - 2 * a, a), (a, a, 1 - 2 * a)]
        else:
            b, c = loc
            a = 1.0 - b - c
            bary = [
                (a, b, c), (b, a, c), (c, a, b),
                (a, c, b), (b, c, a), (c, b, a),
            ]
        for l0, l1, l2 in bary:
            pts.append((l1, l2))  # vertex order: (0,0), (1,0), (0,1)
            wts.append(w * 0.5)
    return QuadratureRule(np.array(pts), np.array(wts), exact_degree=6)


def _tet_conical(n: int) -> QuadratureRule:
    """Conical-product rule on the reference tetrahedron, exact to 2n-1."""
    xu, wu = roots_jacobi(n, 2.0, 0.0)
    xv, wv = roots_jacobi(n, 1.0, 0.0)
    xw, ww = roots_legendre(n)
    # Map from [-1,1] to [0,1]; Jacobi weight (1-x)^a picks up 2^-a scaling.
    u, wu = 0.5 * (xu + 1), wu / 8.0
    v, wv = 0.5 * (xv + 1), wv / 4.0
    w, ww = 0.5 * (xw + 1), ww / 2.0
    pts, wts = [], []
    for ui, wui in zip(u, wu):
        for vi, wvi in zip(v, wv):
            for wi, wwi in zip(w, ww):
                x1 = ui
                x2 = vi * (1 - ui)
                x3 = wi * (1 - ui) * (1 - vi)
                pts.append((x1, x2, x3))
                wts.append(wui * wvi * wwi)
    return QuadratureRule(np.array(pts), np.array(wts), exact_degree=2 * n - 1)


@lru_cache(maxsize=None)
def rule_for(kind: ElementKind, formulation_needs: str = "stabilized") -> QuadratureRule:
    """Return the quadrature rule used for a given element kind.

    The high-order rule is the default for every formulation: it integrates
    every bubble/stabilization integrand exactly (|grad b|^2 is degree 4 on
    T3, degree 6 on TET4, degree (2,4) on Q4 factors).
    """
    if formulation_needs not in ("galerkin", "stabilized", "enriched"):
        raise ValueError(f"unknown formulation_needs {formulation_needs!r}")
    if kind is ElementKind.Q4:
        return _tensor_gauss(2, 3)
    if kind is ElementKind.B8:
        return _tensor_gauss(3, 3)
    if kind is ElementKind.T3:
        return _triangle_deg6()
    return _tet_conical(4)


def facet_rule(kind: ElementKind) -> QuadratureRule:
    """Rule on the reference facet (edge for 2-D kinds, face for 3-D)."""
    if kind is ElementKind.T3:
        x, w = roots_legendre(3)
        return QuadratureRule(0.5 * (x[:, None] + 1), w / 2.0, exact_degree=5)
    if kind is ElementKind.Q4:
        x, w = roots_legendre(3)
        return QuadratureRule(x[:, None].copy(), w.copy(), exact_degree=5)
    if kind is ElementKind.B8:
        return _tensor_gauss(2, 3)
    return _triangle_deg6()
