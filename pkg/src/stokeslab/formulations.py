"""Assembly of the four Stokes formulations.

Schemes:

* ``galerkin`` -- classical mixed form: momentum 2*nu*(grad w : grad v)
  - (div w, p) = (w, b), continuity -(div v, q) = 0.
* ``wvm`` -- weak variational multiscale: the fine scales are eliminated in
  an integral sense, giving tau(xi) = b(xi) * int(b) / int(|grad b|^2) > 0.
* ``svm`` -- strong variational multiscale: the fine-scale problem is solved
  pointwise, giving tau(xi) = b(xi) / lap(b)(xi) < 0.
* ``enriched`` -- bubble-enriched Galerkin with per-element static
  condensation of the fine-scale velocity coefficients.

The stabilized weak forms substitute the fine-scale velocity
v' = (1/2nu)*tau_eff*r, with coarse residual r = 2*nu*lap(v) - grad(p) + b
and tau_eff = |tau| > 0, into the two-level coarse problem: the momentum
row gains c(w; v') = -int(2nu*lap(w) . v') and the continuity row gains
d(v'; q) = int(v' . grad q).  With the continuity convention
b(v;q) = -(div v, q) used throughout, the resulting pressure-pressure
stabilization block is symmetric negative semidefinite for both schemes,
matching the sign of the condensed enriched block -K_pf K_ff^-1 K_fp.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import basis_table, element_geometry, eval_bubble
from .kinds import ElementKind
from .linalg import LinearSystem, SparseMatrix, dense_inverse
from .mesh import LOCAL_FACETS, Mesh
from .quadrature import facet_rule, rule_for

SCHEMES = ("galerkin", "wvm", "svm", "enriched")

_CHUNK = 64  # elements per assembly chunk; fixed so results are
             # independent of the thread count


def _thread_cap() -> int:
    raw = os.environ.get("STOKESLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"STOKESLAB_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


@dataclass(frozen=True)
class FormulationConfig:
    scheme: str
    nu: float = 1.0
    bp_epsilon: float = 0.0
    body_force: object = None  # callable x -> vector, or None for zero

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; valid: {SCHEMES}")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.bp_epsilon < 0:
            raise ValueError("bp_epsilon must be >= 0")
        if self.bp_epsilon > 0 and self.scheme in ("wvm", "svm"):
            raise ValueError("bp_epsilon applies to galerkin/enriched schemes only")


@dataclass(frozen=True)
class DofMap:
    """Equal-order nodal dofs: velocity components first (node-major), then
    one pressure dof per node."""

    n_nodes: int
    dim: int

    @property
    def n_velocity(self) -> int:
        return self.n_nodes * self.dim

    @property
    def n_pressure(self) -> int:
        return self.n_nodes

    @property
    def total(self) -> int:
        return self.n_velocity + self.n_pressure

    def vdof(self, node: int, comp: int) -> int:
        return node * self.dim + comp

    def pdof(self, node: int) -> int:
        return self.n_velocity + node

    def velocity_dofs(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.intp)
        return (nodes[:, None] * self.dim + np.arange(self.dim)).ravel()

    def pressure_dofs(self, nodes) -> np.ndarray:
        return self.n_velocity + np.asarray(nodes, dtype=np.intp)


def build_dofmap(mesh: Mesh) -> DofMap:
    return DofMap(n_nodes=mesh.n_nodes, dim=mesh.dim)


@dataclass(frozen=True)
class TauEval:
    value: float
    scheme: str


@dataclass(frozen=True)
class CondensationCache:
    """Per-element data needed to recover fine-scale coefficients."""

    element: int
    Kff: np.ndarray       # (dim, dim)
    Kfc: np.ndarray       # (dim, nen*dim)
    Kfp: np.ndarray       # (dim, nen)
    f_f: np.ndarray       # (dim,)


def _wvm_coefficient(kind: ElementKind, geom) -> float:
    """Element-level int(b) / int(|grad_x b|^2) over the mapped element."""
    table = basis_table(kind, rule_for(kind))
    int_b = float(geom.wdet @ table.b)
    int_g2 = float(geom.wdet @ np.einsum("pi,pi->p", geom.gb, geom.gb))
    if int_g2 <= 0:
        raise ValueError("degenerate element: zero bubble energy")
    return int_b / int_g2


def tau_at(scheme: str, kind: ElementKind, node_coords, xi) -> TauEval:
    """Stabilization parameter at a reference point of one element."""
    if scheme not in ("wvm", "svm"):
        raise ValueError(f"tau is defined for wvm/svm, not {scheme!r}")
    table = basis_table(kind, rule_for(kind))
    geom = element_geometry(table, node_coords)
    bub = eval_bubble(kind, xi)
    if scheme == "wvm":
        return TauEval(value=bub.b * _wvm_coefficient(kind, geom), scheme=scheme)
    # pointwise geometry for the Laplacian at xi
    from .basis import jacobian_calc, laplacian_physical

    jac = jacobian_calc(kind, node_coords, xi)
    lapb = laplacian_physical(bub.grad_xi, bub.hess_xi, jac)
    return TauEval(value=bub.b / lapb, scheme=scheme)


def _body_at(config, x):
    """Evaluate the body force at the mapped quadrature points, (np, dim)."""
    if config.body_force is None:
        return np.zeros_like(x)
    return np.array([np.asarray(config.body_force(xi), dtype=float) for xi in x])


def _local_blocks(mesh, config, table, conn, condensed=True):
    """Element matrices for one element.

    Returns (K_local, f_local) in the local dof order
    [velocity (node-major), pressure] for galerkin/wvm/svm and for the
    condensed enriched scheme; for ``condensed=False`` with the enriched
    scheme the fine dofs are appended uncondensed.  The second return value
    carries the CondensationCache for the enriched scheme (else None).
    """
    kind, dim = mesh.kind, mesh.dim
    nen = kind.nodes_per_element
    nd = nen * dim
    coords = mesh.nodes[conn]
    geom = element_geometry(table, coords)
    nu = config.nu
    wdet, G, N = geom.wdet, geom.G, table.N
    bf = _body_at(config, geom.x)

    Kvv = 2.0 * nu * np.einsum("p,pia,pib->ab", wdet, G, G)
    Gvp = np.einsum("p,pia,pb->iab", wdet, G, N)
    Kvp = -Gvp.transpose(1, 0, 2).reshape(nd, nen)
    Kpv = Kvp.T.copy()
    Kpp = np.zeros((nen, nen))
    fv = np.einsum("p,pa,pi->ai", wdet, N, bf)
    fp = np.zeros(nen)

    if config.scheme in ("wvm", "svm"):
        # Substituting v' = (1/2nu)*tau_eff*r into the coarse-scale problem
        # (momentum += c(w,v'), continuity += d(v',q)) gives identical terms
        # for both schemes in tau_eff = |tau| > 0; only the scalar profile
        # of tau differs.  The resulting pp block is symmetric NSD.
        lapN = geom.lapN
        if config.scheme == "wvm":
            tau_eff = table.b * _wvm_coefficient(kind, geom)
        else:
            tau_eff = -(table.b / geom.lapb)
        tw = wdet * tau_eff
        Kvv -= 2.0 * nu * np.einsum("p,pa,pb->ab", tw, lapN, lapN)
        M_vp = np.einsum("p,pa,pib->iab", tw, lapN, G)
        Kvp += M_vp.transpose(1, 0, 2).reshape(nd, nen)
        M_pv = np.einsum("p,pja,pb->abj", tw, G, lapN)
        Kpv += M_pv.reshape(nen, nd)
        Kpp -= (1.0 / (2.0 * nu)) * np.einsum("p,pia,pib->ab", tw, G, G)
        fv += np.einsum("p,pa,pi->ai", tw, lapN, bf)
        fp -= (1.0 / (2.0 * nu)) * np.einsum("p,pia,pi->a", tw, G, bf)

    if config.bp_epsilon > 0.0:
        # pressure-Laplacian stabilization, eps ~ h^2; negative because the
        # continuity row here carries b(v;q) = -(div v, q)
        eps = config.bp_epsilon * geom.detJ ** (2.0 / dim)
        Kpp -= np.einsum("p,pia,pib->ab", wdet * eps, G, G)

    cache = None
    if config.scheme == "enriched":
        gb, b = geom.gb, table.b
        s = 2.0 * nu * np.einsum("p,pia,pi->a", wdet, G, gb)
        kff = 2.0 * nu * float(wdet @ np.einsum("pi,pi->p", gb, gb))
        Kpf = -np.einsum("p,pa,pi->ai", wdet, N, gb)
        f_f = np.einsum("p,p,pi->i", wdet, b, bf)
        Kcf = np.kron(s.reshape(-1, 1), np.eye(dim))  # (nd, dim)
        Kff = kff * np.eye(dim)
        cache = CondensationCache(
            element=-1, Kff=Kff, Kfc=Kcf.T.copy(), Kfp=Kpf.T.copy(), f_f=f_f
        )
        if not condensed:
            nl = nd + nen + dim
            K = np.zeros((nl, nl))
            K[:nd, :nd] = np.kron(Kvv, np.eye(dim))
            K[:nd, nd:nd + nen] = Kvp
            K[nd:nd + nen, :nd] = Kpv
            K[nd:nd + nen, nd:nd + nen] = Kpp
            K[:nd, nd + nen:] = Kcf
            K[nd + nen:, :nd] = Kcf.T
            K[nd:nd + nen, nd + nen:] = Kpf
            K[nd + nen:, nd:nd + nen] = Kpf.T
            K[nd + nen:, nd + nen:] = Kff
            f = np.concatenate([fv.reshape(-1), fp, f_f])
            return K, f, cache
        Kff_inv = dense_inverse(Kff)
        # scalar condensation: Kcf Kff^-1 Kfc = (s s^T / kff) (x) I
        Kvv -= np.outer(s, s) / kff
        Kvp -= (Kcf @ Kff_inv) @ Kpf.T
        Kpv -= Kpf @ Kff_inv @ Kcf.T
        Kpp -= Kpf @ Kff_inv @ Kpf.T
        fv -= ((Kcf @ Kff_inv) @ f_f).reshape(nen, dim)
        fp -= Kpf @ Kff_inv @ f_f

    nl = nd + nen
    K = np.zeros((nl, nl))
    K[:nd, :nd] = np.kron(Kvv, np.eye(dim))
    K[:nd, nd:] = Kvp
    K[nd:, :nd] = Kpv
    K[nd:, nd:] = Kpp
    f = np.concatenate([fv.reshape(-1), fp])
    return K, f, cache


def _scatter(dofmap, conn, extra=None):
    """Global dof indices for one element's local ordering."""
    idx = [dofmap.velocity_dofs(conn), dofmap.pressure_dofs(conn)]
    if extra is not None:
        idx.append(extra)
    return np.concatenate(idx)


def _assemble_chunks(mesh, config, dofmap, total, fine_offset=None, condensed=True):
    kind = mesh.kind
    table = basis_table(kind, rule_for(kind))
    dim = mesh.dim

    def do_chunk(e0):
        rows, cols, vals = [], [], []
        rhs = np.zeros(total)
        caches = []
        for e in range(e0, min(e0 + _CHUNK, mesh.n_elements)):
            conn = mesh.elements[e]
            K, f, cache = _local_blocks(mesh, config, table, conn, condensed=condensed)
            extra = None
            if fine_offset is not None:
                extra = fine_offset + e * dim + np.arange(dim)
            idx = _scatter(dofmap, conn, extra)
            rows.append(np.repeat(idx, idx.size))
            cols.append(np.tile(idx, idx.size))
            vals.append(K.ravel())
            np.add.at(rhs, idx, f)
            if cache is not None:
                caches.append(
                    CondensationCache(element=e, Kff=cache.Kff, Kfc=cache.Kfc,
                                      Kfp=cache.Kfp, f_f=cache.f_f)
                )
        return rows, cols, vals, rhs, caches

    starts = list(range(0, mesh.n_elements, _CHUNK))
    n_threads = min(_thread_cap(), len(starts)) or 1
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(do_chunk, starts))
    else:
        results = [do_chunk(s) for s in starts]

    rows = np.concatenate([r for res in results for r in res[0]])
    cols = np.concatenate([c for res in results for c in res[1]])
    vals = np.concatenate([v for res in results for v in res[2]])
    rhs = np.zeros(total)
    for res in results:
        rhs += res[3]
    caches = [c for res in results for c in res[4]]
    matrix = SparseMatrix.from_triplets(total, total, rows, cols, vals)
    return LinearSystem(matrix, rhs), caches


def assemble(mesh: Mesh, config: FormulationConfig, dofmap: DofMap = None) -> LinearSystem:
    """Assemble the global (unconstrained) system for the configured scheme."""
    dofmap = dofmap or build_dofmap(mesh)
    if config.scheme == "enriched":
        system, _ = assemble_enriched(mesh, config, dofmap)
        return system
    system, _ = _assemble_chunks(mesh, config, dofmap, dofmap.total)
    return system


def assemble_enriched(mesh: Mesh, config: FormulationConfig, dofmap: DofMap = None):
    """Condensed enriched system plus per-element condensation caches."""
    dofmap = dofmap or build_dofmap(mesh)
    if config.scheme != "enriched":
        raise ValueError("assemble_enriched requires scheme='enriched'")
    return _assemble_chunks(mesh, config, dofmap, dofmap.total)


def assemble_enriched_full(mesh: Mesh, config: FormulationConfig, dofmap: DofMap = None):
    """Uncondensed three-field system with fine dofs appended per element.

    Used as the oracle for the static-condensation identity.
    """
    dofmap = dofmap or build_dofmap(mesh)
    if config.scheme != "enriched":
        raise ValueError("assemble_enriched_full requires scheme='enriched'")
    total = dofmap.total + mesh.n_elements * mesh.dim
    system, _ = _assemble_chunks(
        mesh, config, dofmap, total, fine_offset=dofmap.total, condensed=False
    )
    return system


def recover_fine(solution, caches, mesh: Mesh, dofmap: DofMap) -> np.ndarray:
    """Fine-scale coefficients beta per element from the condensed solution."""
    solution = np.asarray(solution, dtype=float)
    out = np.zeros((mesh.n_elements, mesh.dim))
    for cache in caches:
        conn = mesh.elements[cache.element]
        v_e = solution[dofmap.velocity_dofs(conn)]
        p_e = solution[dofmap.pressure_dofs(conn)]
        rhs = cache.f_f - cache.Kfc @ v_e - cache.Kfp @ p_e
        out[cache.element] = dense_inverse(cache.Kff) @ rhs
    return out


def add_traction(system: LinearSystem, mesh: Mesh, tag: str, traction,
                 dofmap: DofMap) -> None:
    """Add the facet traction term int(w . t) over a tagged boundary."""
    pairs = mesh.boundary_faces.get(tag)
    if pairs is None:
        valid = ", ".join(sorted(mesh.boundary_faces))
        raise ValueError(f"unknown face tag {tag!r}; have: {valid}")
    kind, dim = mesh.kind, mesh.dim
    frule = facet_rule(kind)
    rhs = system.rhs
    for elem, lf in pairs:
        facet = LOCAL_FACETS[kind][lf]
        fcoords = mesh.nodes[mesh.elements[elem][list(facet)]]
        for t_ref, w in zip(frule.points, frule.weights):
            if dim == 2:
                # 2-node segment; T3 edges use t in [0,1], Q4 edges [-1,1]
                t = float(t_ref[0])
                if kind is ElementKind.T3:
                    shp = np.array([1 - t, t])
                    dshp = np.array([-1.0, 1.0])
                else:
                    shp = np.array([(1 - t) / 2, (1 + t) / 2])
                    dshp = np.array([-0.5, 0.5])
                x = shp @ fcoords
                jac = np.linalg.norm(dshp @ fcoords)
            elif kind is ElementKind.B8:
                u, v = t_ref
                shp = 0.25 * np.array(
                    [(1 - u) * (1 - v), (1 + u) * (1 - v),
                     (1 + u) * (1 + v), (1 - u) * (1 + v)]
                )
                du = 0.25 * np.array([-(1 - v), (1 - v), (1 + v), -(1 + v)])
                dv = 0.25 * np.array([-(1 - u), -(1 + u), (1 + u), (1 - u)])
                x = shp @ fcoords
                jac = np.linalg.norm(np.cross(du @ fcoords, dv @ fcoords))
            else:  # TET4 face: linear triangle
                u, v = t_ref
                shp = np.array([1 - u - v, u, v])
                x = shp @ fcoords
                e1 = fcoords[1] - fcoords[0]
                e2 = fcoords[2] - fcoords[0]
                jac = np.linalg.norm(np.cross(e1, e2))
            tval = np.asarray(traction(x), dtype=float)
            for a, node in enumerate(facet):
                gnode = mesh.elements[elem][node]
                for i in range(dim):
                    rhs[dofmap.vdof(gnode, i)] += w * jac * shp[a] * tval[i]
