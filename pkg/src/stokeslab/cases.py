"""Benchmark problems: boundary data, body forces, exact solutions.

Dirichlet data may constrain a subset of velocity components at a node by
returning ``nan`` for the free components.  Tags are applied in declaration
order and later tags override earlier ones at shared nodes, which is how the
non-leaky cavity treatment (corner nodes belong to the vertical walls, not
the lid) is expressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .formulations import DofMap
from .linalg import LinearSystem, apply_constraints
from .mesh import Mesh

CASE_NAMES = ("patch_constant", "lid_cavity", "body_force_cavity")


@dataclass(frozen=True)
class TestCase:
    name: str
    dim: int
    dirichlet: dict            # tag -> callable(x) -> velocity (nan = free comp)
    body_force: object         # callable(x) -> vector, or None
    pressure_pin: tuple        # (point, value)
    nu: float = 1.0
    exact_velocity: object = None
    exact_pressure: object = None
    exact_pressure_grad: object = None

    @property
    def has_exact(self) -> bool:
        return self.exact_velocity is not None


def _const(vec):
    vec = np.asarray(vec, dtype=float)
    return lambda x: vec


def patch_constant(dim: int) -> TestCase:
    """Constant-state patch test: v = (10, 0[, 0]), p = 10, b = 0."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    vel = np.zeros(dim)
    vel[0] = 10.0
    return TestCase(
        name="patch_constant",
        dim=dim,
        dirichlet={"all": _const(vel)},
        body_force=None,
        pressure_pin=(np.zeros(dim), 10.0),
        nu=1.0,
        exact_velocity=_const(vel),
        exact_pressure=lambda x: 10.0,
        exact_pressure_grad=_const(np.zeros(dim)),
    )


def lid_cavity(dim: int) -> TestCase:
    """Lid-driven cavity on the unit square/cube, non-leaky corners.

    The walls are listed after the lid so wall data wins at shared nodes.
    The 3-D variant is the one-element-thick planar cavity: the front/back
    faces constrain only the out-of-plane component, the in-plane data
    repeats the 2-D pattern.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    lid = np.zeros(dim)
    lid[0] = 1.0
    zero = np.zeros(dim)
    if dim == 2:
        dirichlet = {
            "top": _const(lid),
            "left": _const(zero),
            "right": _const(zero),
            "bottom": _const(zero),
        }
    else:
        out_of_plane = np.array([np.nan, np.nan, 0.0])
        dirichlet = {
            "front": _const(out_of_plane),
            "back": _const(out_of_plane),
            "top": _const(lid),
            "left": _const(zero),
            "right": _const(zero),
            "bottom": _const(zero),
        }
    return TestCase(
        name="lid_cavity",
        dim=dim,
        dirichlet=dirichlet,
        body_force=None,
        pressure_pin=(np.zeros(dim), 0.0),
        nu=1.0,
    )


def _bf_body(x):
    X, y = x
    b1 = ((12 - 24 * y) * X**4 + (-24 + 48 * y) * X**3
          + (-48 * y + 72 * y**2 - 48 * y**3 + 12) * X**2
          + (-2 + 24 * y - 72 * y**2 + 48 * y**3) * X
          + 1 - 4 * y + 12 * y**2 - 8 * y**3)
    b2 = ((8 - 48 * y + 48 * y**2) * X**3 + (-12 + 72 * y - 72 * y**2) * X**2
          + (4 - 24 * y + 48 * y**2 - 48 * y**3 + 24 * y**4) * X
          - 12 * y**2 + 24 * y**3 - 12 * y**4)
    return np.array([b1, b2])


def _bf_velocity(x):
    X, y = x
    return np.array(
        [X**2 * (1 - X) ** 2 * (2 * y - 6 * y**2 + 4 * y**3),
         -(y**2) * (1 - y) ** 2 * (2 * X - 6 * X**2 + 4 * X**3)]
    )


def body_force_cavity() -> TestCase:
    """Body-force-driven cavity on the unit square with a known smooth
    solution: v vanishes on the whole boundary, p = x(1-x).

    The body force is consistent with the momentum operator
    -2*nu*lap(v) + grad(p) at nu = 1/2.
    """
    return TestCase(
        name="body_force_cavity",
        dim=2,
        dirichlet={"all": _const(np.zeros(2))},
        body_force=_bf_body,
        pressure_pin=(np.zeros(2), 0.0),
        nu=0.5,
        exact_velocity=_bf_velocity,
        exact_pressure=lambda x: x[0] * (1 - x[0]),
        exact_pressure_grad=lambda x: np.array([1 - 2 * x[0], 0.0]),
    )


def case_by_name(name: str, dim: int = 2) -> TestCase:
    if name == "patch_constant":
        return patch_constant(dim)
    if name == "lid_cavity":
        return lid_cavity(dim)
    if name == "body_force_cavity":
        if dim != 2:
            raise ValueError("body_force_cavity is a 2-D problem")
        return body_force_cavity()
    raise ValueError(f"unknown case {name!r}; valid: {CASE_NAMES}")


def pin_node(case: TestCase, mesh: Mesh) -> int:
    """Index of the mesh node nearest the case's pressure-pin location."""
    point = np.asarray(case.pressure_pin[0], dtype=float)
    d2 = np.sum((mesh.nodes - point) ** 2, axis=1)
    return int(np.argmin(d2))


def case_constraints(case: TestCase, mesh: Mesh, dofmap: DofMap) -> dict:
    """Dirichlet velocity constraints plus the pressure pin, as dof -> value."""
    if case.dim != mesh.dim:
        raise ValueError(f"case is {case.dim}-D but mesh is {mesh.dim}-D")
    nodal = {}  # (node, comp) -> value; later tags override
    for tag, fn in case.dirichlet.items():
        for node in mesh.nodeset(tag):
            val = np.asarray(fn(mesh.nodes[node]), dtype=float)
            for comp in range(mesh.dim):
                if np.isnan(val[comp]):
                    continue
                nodal[(node, comp)] = float(val[comp])
    constraints = {
        dofmap.vdof(node, comp): value for (node, comp), value in nodal.items()
    }
    constraints[dofmap.pdof(pin_node(case, mesh))] = float(case.pressure_pin[1])
    return constraints


def apply_case(case: TestCase, mesh: Mesh, dofmap: DofMap,
               system: LinearSystem) -> LinearSystem:
    """Install the case's constraints into the system and fold them in."""
    system.constraints = case_constraints(case, mesh, dofmap)
    return apply_constraints(system)
