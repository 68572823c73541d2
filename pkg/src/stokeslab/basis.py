"""Shape functions, bubble functions, and isoparametric Jacobian calculus.

Provides first and second parametric derivatives of the standard linear /
bilinear / trilinear bases, the standard bubble of each element kind, and
the machinery needed to evaluate physical Laplacians on distorted elements:
the divergence of the inverse Jacobian and the chain-rule Laplacian built
from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinds import ElementKind

# Reference corner coordinates, fixed node order (CCW / VTK).
_Q4_CORNERS = np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)], dtype=float)
_B8_CORNERS = np.array(
    [
        (-1, -1, -1), (1, -1, -1), (1, 1, -1), (-1, 1, -1),
        (-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1),
    ],
    dtype=float,
)


class SingularJacobianError(RuntimeError):
    """Raised when an element is (nearly) inverted at an evaluation point."""


@dataclass(frozen=True)
class BasisEval:
    """Shape values and parametric derivatives at one reference point.

    D2N rows hold the dim*dim second derivatives of one shape function in
    row-major (m, s) order; the layout matches the contraction used by the
    divergence-of-J-inverse identity.
    """

    N: np.ndarray        # (nen,)
    DN: np.ndarray       # (nen, dim)
    D2N: np.ndarray      # (nen, dim*dim)
    evaluated_at: np.ndarray


@dataclass(frozen=True)
class BubbleEval:
    b: float
    grad_xi: np.ndarray   # (dim,)
    hess_xi: np.ndarray   # (dim, dim)


@dataclass(frozen=True)
class JacobianCalc:
    J: np.ndarray         # (dim, dim), dx/dxi
    Jinv: np.ndarray
    detJ: float
    divJinv: np.ndarray   # (dim,), d(Jinv[p,k])/dx_k


def in_reference_element(kind: ElementKind, xi, tol: float = 1e-12) -> bool:
    xi = np.asarray(xi, dtype=float)
    if kind.is_simplex:
        return bool(np.all(xi >= -tol) and xi.sum() <= 1.0 + tol)
    return bool(np.all(np.abs(xi) <= 1.0 + tol))


def eval_basis(kind: ElementKind, xi) -> BasisEval:
    """Evaluate N, DN, D2N at a reference coordinate."""
    xi = np.asarray(xi, dtype=float)
    d = kind.dim
    if kind is ElementKind.T3:
        x, y = xi
        N = np.array([1 - x - y, x, y])
        DN = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        D2N = np.zeros((3, 4))
    elif kind is ElementKind.TET4:
        x, y, z = xi
        N = np.array([1 - x - y - z, x, y, z])
        DN = np.array(
            [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        )
        D2N = np.zeros((4, 9))
    else:
        corners = _Q4_CORNERS if kind is ElementKind.Q4 else _B8_CORNERS
        scale = 0.25 if kind is ElementKind.Q4 else 0.125
        # factors[a, i] = 1 + xi_i * corner_{a,i}
        factors = 1.0 + corners * xi[None, :]
        N = scale * np.prod(factors, axis=1)
        nen = corners.shape[0]
        DN = np.empty((nen, d))
        for m in range(d):
            others = [i for i in range(d) if i != m]
            DN[:, m] = scale * corners[:, m] * np.prod(factors[:, others], axis=1)
        D2N = np.zeros((nen, d, d))
        for m in range(d):
            for s in range(d):
                if m == s:
                    continue
                others = [i for i in range(d) if i not in (m, s)]
                prod = np.prod(factors[:, others], axis=1) if others else 1.0
                D2N[:, m, s] = scale * corners[:, m] * corners[:, s] * prod
        D2N = D2N.reshape(nen, d * d)
    return BasisEval(N=N, DN=DN, D2N=D2N, evaluated_at=xi)


def eval_bubble(kind: ElementKind, xi) -> BubbleEval:
    """Evaluate the standard bubble of the element kind and its derivatives."""
    xi = np.asarray(xi, dtype=float)
    if kind is ElementKind.T3:
        x, y = xi
        s = 1 - x - y
        b = x * y * s
        grad = np.array([y * (s - x), x * (s - y)])
        hess = np.array([[-2 * y, s - x - y], [s - x - y, -2 * x]])
    elif kind is ElementKind.TET4:
        x, y, z = xi
        s = 1 - x - y - z
        b = x * y * z * s
        grad = np.array([y * z * (s - x), x * z * (s - y), x * y * (s - z)])
        hess = np.array(
            [
                [-2 * y * z, z * (s - x - y), y * (s - x - z)],
                [z * (s - x - y), -2 * x * z, x * (s - y - z)],
                [y * (s - x - z), x * (s - y - z), -2 * x * y],
            ]
        )
    else:
        d = kind.dim
        P = 1.0 - xi**2
        b = float(np.prod(P))
        grad = np.empty(d)
        hess = np.empty((d, d))
        for i in range(d):
            rest = np.prod([P[j] for j in range(d) if j != i])
            grad[i] = -2 * xi[i] * rest
            hess[i, i] = -2 * rest
            for j in range(i + 1, d):
                rest2 = np.prod([P[k] for k in range(d) if k not in (i, j)])
                hess[i, j] = hess[j, i] = 4 * xi[i] * xi[j] * rest2
    return BubbleEval(b=float(b), grad_xi=grad, hess_xi=hess)


def jacobian_calc(kind: ElementKind, node_coords, xi) -> JacobianCalc:
    """Jacobian, its inverse and determinant, and div(J^-1) at xi.

    div(J^-1)_p = -Jinv[p,i] xhat[n,i] D2N[n,m,s] Jinv[m,k] Jinv[s,k].
    """
    node_coords = np.asarray(node_coords, dtype=float)
    d = kind.dim
    be = eval_basis(kind, xi)
    J = node_coords.T @ be.DN
    detJ = float(np.linalg.det(J))
    scale = float(np.max(np.ptp(node_coords, axis=0)))
    if abs(detJ) < 1e-14 * max(scale, 1e-300) ** d:
        raise SingularJacobianError(
            f"singular Jacobian (detJ={detJ:.3e}) at xi={np.asarray(xi)}"
        )
    Jinv = np.linalg.inv(J)
    D2 = be.D2N.reshape(-1, d, d)
    JJT = Jinv @ Jinv.T  # (m,s) contraction kernel
    # xhat^T D2N contracted: C[i, m, s] = xhat[n, i] D2N[n, m, s]
    C = np.einsum("ni,nms->ims", node_coords, D2)
    divJinv = -np.einsum("pi,ims,ms->p", Jinv, C, JJT)
    return JacobianCalc(J=J, Jinv=Jinv, detJ=detJ, divJinv=divJinv)


def laplacian_physical(grad_xi, hess_xi, jac: JacobianCalc) -> float:
    """Physical Laplacian of a scalar given its parametric grad/hess.

    lap = H : (Jinv Jinv^T) + grad_xi . div(J^-1); the second term is the
    curvature correction that vanishes for affine elements.
    """
    JJT = jac.Jinv @ jac.Jinv.T
    return float(np.einsum("ms,ms->", np.asarray(hess_xi), JJT)
                 + np.asarray(grad_xi) @ jac.divJinv)


def shape_laplacians(be: BasisEval, jac: JacobianCalc) -> np.ndarray:
    """Physical Laplacian of every shape function at the evaluation point."""
    d = jac.J.shape[0]
    JJT = jac.Jinv @ jac.Jinv.T
    D2 = be.D2N.reshape(-1, d, d)
    return np.einsum("nms,ms->n", D2, JJT) + be.DN @ jac.divJinv


@dataclass(frozen=True)
class BasisTable:
    """Shape and bubble data tabulated at every point of a quadrature rule."""

    kind: ElementKind
    points: np.ndarray    # (np, dim)
    weights: np.ndarray   # (np,)
    N: np.ndarray         # (np, nen)
    DN: np.ndarray        # (np, nen, dim)
    D2N: np.ndarray       # (np, nen, dim, dim)
    b: np.ndarray         # (np,)
    gb: np.ndarray        # (np, dim)
    Hb: np.ndarray        # (np, dim, dim)


_TABLE_CACHE: dict = {}


def basis_table(kind: ElementKind, rule) -> BasisTable:
    """Tabulate (and cache) basis/bubble data for a quadrature rule."""
    key = (kind, rule.points.tobytes())
    tab = _TABLE_CACHE.get(key)
    if tab is not None:
        return tab
    d = kind.dim
    evals = [eval_basis(kind, xi) for xi in rule.points]
    bubbles = [eval_bubble(kind, xi) for xi in rule.points]
    tab = BasisTable(
        kind=kind,
        points=rule.points,
        weights=rule.weights,
        N=np.stack([e.N for e in evals]),
        DN=np.stack([e.DN for e in evals]),
        D2N=np.stack([e.D2N.reshape(-1, d, d) for e in evals]),
        b=np.array([bu.b for bu in bubbles]),
        gb=np.stack([bu.grad_xi for bu in bubbles]),
        Hb=np.stack([bu.hess_xi for bu in bubbles]),
    )
    _TABLE_CACHE[key] = tab
    return tab


@dataclass(frozen=True)
class ElementGeometry:
    """Per-quadrature-point geometric quantities for one element."""

    detJ: np.ndarray      # (np,)
    Jinv: np.ndarray      # (np, dim, dim)
    divJinv: np.ndarray   # (np, dim)
    G: np.ndarray         # (np, dim, nen) physical shape gradients
    lapN: np.ndarray      # (np, nen) physical shape Laplacians
    gb: np.ndarray        # (np, dim) physical bubble gradient
    lapb: np.ndarray      # (np,) physical bubble Laplacian
    x: np.ndarray         # (np, dim) mapped quadrature points
    wdet: np.ndarray      # (np,) weight * detJ


def element_geometry(table: BasisTable, coords) -> ElementGeometry:
    """Evaluate Jacobian calculus at every tabulated point of one element."""
    coords = np.asarray(coords, dtype=float)
    J = np.einsum("ni,pnm->pim", coords, table.DN)
    detJ = np.linalg.det(J)
    if np.any(detJ <= 0):
        raise SingularJacobianError(
            f"non-positive Jacobian (min detJ={detJ.min():.3e})"
        )
    Jinv = np.linalg.inv(J)
    JJT = np.einsum("pik,pjk->pij", Jinv, Jinv)
    C = np.einsum("ni,pnms->pims", coords, table.D2N)
    divJinv = -np.einsum("pqi,pims,pms->pq", Jinv, C, JJT)
    G = np.einsum("pmi,pnm->pin", Jinv, table.DN)
    lapN = np.einsum("pnms,pms->pn", table.D2N, JJT) + np.einsum(
        "pnm,pm->pn", table.DN, divJinv
    )
    gb = np.einsum("pki,pk->pi", Jinv, table.gb)
    lapb = np.einsum("pms,pms->p", table.Hb, JJT) + np.einsum(
        "pm,pm->p", table.gb, divJinv
    )
    x = np.einsum("pn,ni->pi", table.N, coords)
    return ElementGeometry(
        detJ=detJ, Jinv=Jinv, divJinv=divJinv, G=G, lapN=lapN,
        gb=gb, lapb=lapb, x=x, wdet=table.weights * detJ,
    )


def kron(A, B) -> np.ndarray:
    """Kronecker product with a_ij-scaled blocks of B."""
    return np.kron(np.asarray(A), np.asarray(B))


def vec(A) -> np.ndarray:
    """Stack the rows of A into a single vector (row-major)."""
    return np.asarray(A).reshape(-1)
