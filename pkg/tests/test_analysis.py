"""Error norms, convergence machinery, pressure-mode spectra, vortex location."""

import numpy as np
import pytest

from stokeslab.analysis import (
    checkerboard_amplitude,
    convergence_study,
    error_norms,
    lbb_spectrum,
    locate_vortex,
    mesh_size,
    pressure_mass_matrix,
)
from stokeslab.cases import case_by_name
from stokeslab.driver import SolutionField, solve_case
from stokeslab.formulations import build_dofmap
from stokeslab.kinds import ElementKind
from stokeslab.mesh import generate_grid


def _field(mesh, velocity, pressure, case):
    dofmap = build_dofmap(mesh)
    values = np.concatenate([velocity.reshape(-1), pressure])
    return SolutionField(case=case, scheme="galerkin", mesh=mesh, dofmap=dofmap,
                        values=values, velocity=velocity, pressure=pressure,
                        fine=None, residual=0.0)


def test_mesh_size_uniform_square_grid():
    mesh = generate_grid(ElementKind.Q4, 4)
    assert mesh_size(mesh) == pytest.approx(np.sqrt(2) / 4, rel=1e-12)


def test_error_norms_exact_interpolant_is_zero():
    mesh = generate_grid(ElementKind.Q4, 3)
    case = case_by_name("patch_constant", 2)
    v = np.tile([10.0, 0.0], (mesh.n_nodes, 1))
    p = np.full(mesh.n_nodes, 10.0)
    rep = error_norms(_field(mesh, v, p, case), case, mesh)
    assert rep.velocity_l2 < 1e-12
    assert rep.pressure_h1semi < 1e-12
    assert rep.h == pytest.approx(mesh_size(mesh))


def test_pressure_seminorm_ignores_constant_shift():
    mesh = generate_grid(ElementKind.Q4, 4)
    case = case_by_name("body_force_cavity")
    v = np.array([case.exact_velocity(x) for x in mesh.nodes])
    p = np.array([case.exact_pressure(x) for x in mesh.nodes])
    r0 = error_norms(_field(mesh, v, p, case), case, mesh)
    r7 = error_norms(_field(mesh, v, p + 7.0, case), case, mesh)
    assert r7.pressure_h1semi == pytest.approx(r0.pressure_h1semi, rel=1e-12)
    assert r7.velocity_l2 == pytest.approx(r0.velocity_l2, rel=1e-12)


def test_velocity_error_of_zero_field_against_unit_flow():
    mesh = generate_grid(ElementKind.Q4, 5)
    base = case_by_name("patch_constant", 2)
    case = type(base)(
        name="unit_flow", dim=2, dirichlet=base.dirichlet, body_force=None,
        pressure_pin=base.pressure_pin, nu=1.0,
        exact_velocity=lambda x: np.array([1.0, 0.0]),
        exact_pressure=lambda x: 0.0,
        exact_pressure_grad=lambda x: np.zeros(2),
    )
    v = np.zeros((mesh.n_nodes, 2))
    p = np.zeros(mesh.n_nodes)
    rep = error_norms(_field(mesh, v, p, case), case, mesh)
    assert rep.velocity_l2 == pytest.approx(1.0, rel=1e-12)


def test_error_norms_require_exact_solution():
    mesh = generate_grid(ElementKind.Q4, 2)
    case = case_by_name("lid_cavity", 2)
    v = np.zeros((mesh.n_nodes, 2))
    with pytest.raises(ValueError, match="exact"):
        error_norms(_field(mesh, v, np.zeros(mesh.n_nodes), case), case, mesh)


def test_linear_fields_reproduced_exactly():
    mesh = generate_grid(ElementKind.T3, 4)
    base = case_by_name("patch_constant", 2)
    case = type(base)(
        name="linear", dim=2, dirichlet=base.dirichlet, body_force=None,
        pressure_pin=base.pressure_pin, nu=1.0,
        exact_velocity=lambda x: np.array([2 * x[0] - x[1], x[0] + 3 * x[1]]),
        exact_pressure=lambda x: 1.0 + 4 * x[0] - 2 * x[1],
        exact_pressure_grad=lambda x: np.array([4.0, -2.0]),
    )
    v = np.array([case.exact_velocity(x) for x in mesh.nodes])
    p = np.array([case.exact_pressure(x) for x in mesh.nodes])
    rep = error_norms(_field(mesh, v, p, case), case, mesh)
    assert rep.velocity_l2 < 1e-12
    assert rep.pressure_h1semi < 1e-12


def test_convergence_study_flags_exactly_reproduced_case():
    case = case_by_name("patch_constant", 2)
    rows, slopes = convergence_study(case, "svm", ElementKind.Q4, (2, 3, 4))
    assert slopes == {"exact": True}
    assert len(rows) == 3


def test_convergence_study_needs_three_levels():
    case = case_by_name("patch_constant", 2)
    with pytest.raises(ValueError, match="3 levels"):
        convergence_study(case, "svm", ElementKind.Q4, (2, 4))


# ----------------------------------------------------------------- spectra

def test_pressure_mass_matrix_total_mass():
    mesh = generate_grid(ElementKind.Q4, 3)
    M = pressure_mass_matrix(mesh)
    assert np.allclose(M, M.T, atol=1e-14)
    assert M.sum() == pytest.approx(1.0, rel=1e-12)  # unit-square volume


@pytest.mark.parametrize("scheme,kind,expect_zero,expect_cb", [
    ("svm", ElementKind.Q4, 1, False),
    ("wvm", ElementKind.Q4, 1, False),
    ("svm", ElementKind.T3, 1, False),
])
def test_small_grid_pressure_mode_counts(scheme, kind, expect_zero, expect_cb):
    mesh = generate_grid(kind, 6)
    report = lbb_spectrum(mesh, scheme)
    assert report.zero_count == expect_zero
    assert report.checkerboard_present is expect_cb
    lam = report.eigenvalues
    assert np.all(np.diff(lam) >= -1e-12)
    assert lam.min() > -1e-10 * np.abs(lam).max()


def test_galerkin_equal_order_square_grid_has_checkerboard_mode():
    mesh = generate_grid(ElementKind.Q4, 6)
    report = lbb_spectrum(mesh, "galerkin")
    assert report.zero_count >= 2
    assert report.checkerboard_present


def test_galerkin_equal_order_structured_triangles_unstable():
    mesh = generate_grid(ElementKind.T3, 6)
    report = lbb_spectrum(mesh, "galerkin")
    assert report.zero_count > 1  # spurious modes beyond the hydrostatic one


@pytest.mark.parametrize("scheme", ["galerkin", "wvm", "svm", "enriched"])
def test_hydrostatic_mode_always_present(scheme):
    mesh = generate_grid(ElementKind.Q4, 5)
    report = lbb_spectrum(mesh, scheme)
    assert report.zero_count >= 1


def test_lbb_spectrum_rejects_unknown_scheme():
    mesh = generate_grid(ElementKind.Q4, 3)
    with pytest.raises(ValueError, match="scheme"):
        lbb_spectrum(mesh, "bogus")


def test_lbb_spectrum_degenerate_single_element():
    mesh = generate_grid(ElementKind.Q4, 1)
    with pytest.raises(ValueError, match="interior velocity"):
        lbb_spectrum(mesh, "svm")


# --------------------------------------------------------------- diagnostics

def test_checkerboard_amplitude_of_exact_field_is_zero():
    mesh = generate_grid(ElementKind.Q4, 4)
    case = case_by_name("patch_constant", 2)
    v = np.tile([10.0, 0.0], (mesh.n_nodes, 1))
    p = np.full(mesh.n_nodes, 10.0)
    assert checkerboard_amplitude(_field(mesh, v, p, case), case, mesh) == 0.0


def test_locate_vortex_rigid_rotation():
    mesh = generate_grid(ElementKind.Q4, 10)
    case = case_by_name("lid_cavity", 2)
    v = np.stack([mesh.nodes[:, 1] - 0.7, -(mesh.nodes[:, 0] - 0.5)], axis=1)
    y = locate_vortex(_field(mesh, v, np.zeros(mesh.n_nodes), case), mesh)
    assert y == pytest.approx(0.7, abs=1e-12)


def test_locate_vortex_needs_centerline_and_sign_change():
    mesh = generate_grid(ElementKind.Q4, 10)
    case = case_by_name("lid_cavity", 2)
    v = np.ones((mesh.n_nodes, 2))
    with pytest.raises(ValueError, match="sign change"):
        locate_vortex(_field(mesh, v, np.zeros(mesh.n_nodes), case), mesh)
    odd = generate_grid(ElementKind.Q4, 3)  # no nodes on x = 0.5
    v3 = np.ones((odd.n_nodes, 2))
    with pytest.raises(ValueError, match="centerline"):
        locate_vortex(_field(odd, v3, np.zeros(odd.n_nodes), case), odd)


def test_solve_case_reports_small_residual():
    mesh = generate_grid(ElementKind.Q4, 6)
    case = case_by_name("body_force_cavity")
    sol = solve_case(case, mesh, "svm")
    assert sol.residual < 1e-12
    assert sol.velocity.shape == (mesh.n_nodes, 2)
    assert sol.fine is None
