"""Glue: assemble a case with a formulation, solve, and split the fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cases import TestCase, apply_case
from .formulations import (
    DofMap,
    FormulationConfig,
    assemble,
    assemble_enriched,
    build_dofmap,
    recover_fine,
)
from .linalg import solve_direct
from .mesh import Mesh


@dataclass(frozen=True)
class SolutionField:
    case: TestCase
    scheme: str
    mesh: Mesh
    dofmap: DofMap
    values: np.ndarray      # full dof vector
    velocity: np.ndarray    # (n_nodes, dim)
    pressure: np.ndarray    # (n_nodes,)
    fine: np.ndarray | None  # (n_elements, dim) bubble coefficients
    residual: float


def solve_case(case: TestCase, mesh: Mesh, scheme: str, *,
               nu: float | None = None, bp_epsilon: float = 0.0,
               pivot_rtol: float = 1e-14,
               residual_rtol: float = 1e-10) -> SolutionField:
    """Assemble, constrain, and solve one benchmark problem.

    ``pivot_rtol=0`` lets exactly singular-but-consistent systems (the
    enriched Q4/B8 patch test) run to completion so the unstable pressure
    can be observed; pair it with a relaxed ``residual_rtol``.
    """
    dofmap = build_dofmap(mesh)
    config = FormulationConfig(
        scheme=scheme,
        nu=case.nu if nu is None else nu,
        bp_epsilon=bp_epsilon,
        body_force=case.body_force,
    )
    caches = None
    if scheme == "enriched":
        system, caches = assemble_enriched(mesh, config, dofmap)
    else:
        system = assemble(mesh, config, dofmap)
    constrained = apply_case(case, mesh, dofmap, system)
    x = solve_direct(constrained, pivot_rtol=pivot_rtol,
                     residual_rtol=residual_rtol)
    A, b = constrained.matrix, constrained.rhs
    denom = A.norm_inf() * np.abs(x).max() + np.abs(b).max()
    res = float(np.abs(A.matvec(x) - b).max() / denom) if denom > 0 else 0.0
    velocity = x[: dofmap.n_velocity].reshape(mesh.n_nodes, mesh.dim)
    pressure = x[dofmap.n_velocity:]
    fine = recover_fine(x, caches, mesh, dofmap) if caches else None
    return SolutionField(
        case=case, scheme=scheme, mesh=mesh, dofmap=dofmap, values=x,
        velocity=velocity, pressure=pressure, fine=fine, residual=res,
    )
