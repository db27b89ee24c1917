"""Operator assembly, boundary data, and conservation."""

import numpy as np
import pytest
import scipy.sparse as sp

from boxdfm.assembly import (assemble_operator, assemble_rhs, assemble_system,
                             collect_dirichlet, flux_balance,
                             local_barrier_coupling, local_cell_matrices,
                             local_fracture_matrices)
from boxdfm.benchmarks import analytic_barrier_scenario
from boxdfm.dofspace import build_dof_map
from boxdfm.driver import run_scenario
from boxdfm.dual import dual_geometry
from boxdfm.errors import ValidationError
from boxdfm.generators import crossed_square_mesh
from boxdfm.linalg import cg_solve
from boxdfm.materials import BarrierLaw, FractureLaw, MaterialModel
from boxdfm.mesh import FacetKind, facet_measures
from conftest import TAGS_BARRIER, barrier_square

TAGS_PLAIN = {1: "dirichlet", 2: "dirichlet", 3: "neumann", 4: "neumann"}


def plain_mesh(n=4, jitter=0.2, seed=1):
    return crossed_square_mesh(n, jitter=jitter, seed=seed, tag_map=TAGS_PLAIN)


def matrix_only(dim=2, k=1.0):
    return MaterialModel(matrix={1: k, 2: k}, fractures={}, barriers={}, dim=dim)


def test_routes_agree_with_barriers():
    mesh = barrier_square(n=4, jitter=0.25, seed=6)
    dm = build_dof_map(mesh, "barrier_cuts")
    mats = MaterialModel(matrix={1: 2.0, 2: np.diag([3.0, 0.5])},
                         fractures={}, barriers={10: BarrierLaw(1e-2, 1e-4)},
                         dim=2)
    A1 = assemble_operator(mesh, dm, mats, route="gradients")
    A2 = assemble_operator(mesh, dm, mats, route="subfaces")
    scale = np.abs(A1.toarray()).max()
    assert np.abs((A1 - A2).toarray()).max() <= 1e-13 * scale


def test_fracture_assembly_is_stiffness_plus_fracture_terms():
    # conductive fractures only: the operator must equal the plain P1
    # stiffness plus the lower-dimensional fracture terms, entrywise
    tags = dict(TAGS_PLAIN)
    tags[20], tags[21] = "fracture", "fracture"
    mesh = crossed_square_mesh(
        4, jitter=0.15, seed=2, keep_x=(0.5,), keep_y=(0.25,),
        segments=[((0.5, 0.0), (0.5, 1.0), 20), ((0.0, 0.25), (1.0, 0.25), 21)],
        tag_map=tags,
    )
    dm = build_dof_map(mesh, "barrier_cuts")
    assert dm.n_dofs == mesh.n_vertices
    mats = MaterialModel(matrix={1: 1.0},
                         fractures={20: FractureLaw(1e-3, 1e3),
                                    21: FractureLaw(1e-2, 5.0)},
                         barriers={}, dim=2)
    A = assemble_operator(mesh, dm, mats, dual_geometry(mesh)).toarray()

    K = mats.cell_tensors(mesh)
    cellmats = local_cell_matrices(mesh, K)
    manual = np.zeros((dm.n_dofs, dm.n_dofs))
    for c in range(mesh.n_cells):
        d = dm.cell_dofs[c]
        manual[np.ix_(d, d)] += cellmats[c]
    for tag, law in mats.fractures.items():
        rows = np.nonzero((mesh.facet_tags == tag)
                          & (mesh.facet_kinds == int(FacetKind.FRACTURE)))[0]
        t = np.full(len(rows), law.aperture * law.k)
        fm = local_fracture_matrices(mesh, rows, t)
        for k, r in enumerate(rows):
            d = [np.nonzero(dm.dof_vertex == v)[0][0] for v in mesh.facets[r]]
            manual[np.ix_(d, d)] += fm[k]
    assert np.abs(A - manual).max() <= 1e-12 * np.abs(A).max()


def test_row_sums_vanish_without_dirichlet():
    mesh = barrier_square(n=4, jitter=0.2, seed=9)
    dm = build_dof_map(mesh, "barrier_cuts")
    mats = MaterialModel(matrix={1: 1.0, 2: 2.0}, fractures={},
                         barriers={10: BarrierLaw(1e-2, 1e-3)}, dim=2)
    A0 = assemble_operator(mesh, dm, mats)
    ones = np.ones(dm.n_dofs)
    assert np.abs(A0 @ ones).max() <= 1e-13 * np.abs(A0.toarray()).max()


def test_patch_test_linear_exact():
    # p = x solves the homogeneous equation; the scheme reproduces it to
    # rounding on a distorted mesh
    mesh = plain_mesh(n=5, jitter=0.3, seed=3)
    dm = build_dof_map(mesh, "barrier_cuts")

    def g(points, regions):
        return points[:, 0]

    system = assemble_system(mesh, dm, matrix_only(),
                             dirichlet={1: g, 2: g}, neumann={3: lambda p: np.zeros(len(p)),
                                                              4: lambda p: np.zeros(len(p))})
    x, rep = cg_solve(system.A, system.b, tol=1e-14, preconditioner="ic0")
    assert rep.converged
    exact = mesh.vertices[dm.dof_vertex, 0]
    assert np.abs(x - exact).max() <= 1e-12


def test_neumann_rhs_weights():
    mesh = crossed_square_mesh(4, tag_map={1: "dirichlet", 2: "neumann",
                                           3: "neumann", 4: "neumann"})
    dm = build_dof_map(mesh, "barrier_cuts")
    dual = dual_geometry(mesh)
    b = assemble_rhs(mesh, dm, dual, neumann={2: lambda p: np.ones(len(p)),
                                              3: lambda p: np.zeros(len(p)),
                                              4: lambda p: np.zeros(len(p))})
    # outflow-positive convention: g = 1 on the right side drains the
    # boxes there by their sub-edge measures
    assert b.sum() == pytest.approx(-1.0, abs=1e-14)
    corner = np.nonzero(np.all(np.isclose(mesh.vertices, [1.0, 0.0]), axis=1))[0][0]
    cdof = np.nonzero(dm.dof_vertex == corner)[0][0]
    assert b[cdof] == pytest.approx(-0.125, abs=1e-14)
    interior_side = np.nonzero(np.all(np.isclose(mesh.vertices, [1.0, 0.5]), axis=1))[0][0]
    idof = np.nonzero(dm.dof_vertex == interior_side)[0][0]
    assert b[idof] == pytest.approx(-0.25, abs=1e-14)


def test_unmatched_neumann_tag_rejected():
    mesh = crossed_square_mesh(2, tag_map=TAGS_PLAIN)
    dm = build_dof_map(mesh, "barrier_cuts")
    dual = dual_geometry(mesh)
    with pytest.raises(ValidationError):
        assemble_rhs(mesh, dm, dual, neumann={9: lambda p: np.ones(len(p))})


def test_source_midpoint_rule_exact_for_linear():
    mesh = plain_mesh(n=4, jitter=0.25, seed=5)
    dm = build_dof_map(mesh, "barrier_cuts")
    dual = dual_geometry(mesh)
    b1 = assemble_rhs(mesh, dm, dual, source=lambda p, r: np.ones(len(p)))
    assert b1.sum() == pytest.approx(1.0, abs=1e-13)
    bx = assemble_rhs(mesh, dm, dual, source=lambda p, r: p[:, 0])
    assert bx.sum() == pytest.approx(0.5, abs=1e-13)


def test_dirichlet_contradiction_detected():
    mesh = crossed_square_mesh(2, tag_map={1: "dirichlet", 2: "neumann",
                                           3: "dirichlet", 4: "neumann"})
    dm = build_dof_map(mesh, "barrier_cuts")
    # tags 1 (left) and 3 (bottom) share the origin corner
    with pytest.raises(ValidationError):
        collect_dirichlet(mesh, dm, {1: lambda p, r: np.zeros(len(p)),
                                     3: lambda p, r: np.ones(len(p))})
    dofs, vals = collect_dirichlet(mesh, dm, {1: lambda p, r: p[:, 1],
                                              3: lambda p, r: p[:, 1]})
    assert len(dofs) == len(vals) == 3 + 3 - 1


def test_pure_neumann_needs_permission():
    mesh = crossed_square_mesh(2, tag_map={i: "neumann" for i in range(1, 5)})
    dm = build_dof_map(mesh, "barrier_cuts")
    with pytest.raises(ValidationError):
        assemble_system(mesh, dm, matrix_only())
    system = assemble_system(mesh, dm, matrix_only(), allow_pure_neumann=True)
    assert system.pinned_dof == 0
    assert len(system.dirichlet_dofs) == 1


def test_sealed_barrier_decouples_sides():
    mesh = barrier_square(n=3 + 1)
    dm = build_dof_map(mesh, "barrier_cuts")
    mats = MaterialModel(matrix={1: 1.0, 2: 1.0}, fractures={},
                         barriers={10: BarrierLaw(1e-2, 0.0)}, dim=2)
    A0 = assemble_operator(mesh, dm, mats)
    left = np.zeros(dm.n_dofs)
    for c in np.nonzero(mesh.cell_region == 1)[0]:
        left[dm.cell_dofs[c]] = 1.0
    # indicator of the left compartment is in the nullspace together with
    # the constant, so the nullspace has dimension two
    assert np.abs(A0 @ left).max() <= 1e-13 * np.abs(A0.toarray()).max()


def test_dirichlet_elimination_symmetric():
    mesh = barrier_square(n=4, jitter=0.15, seed=2)
    dm = build_dof_map(mesh, "barrier_cuts")
    mats = MaterialModel(matrix={1: 1.0, 2: 1.0}, fractures={},
                         barriers={10: BarrierLaw(1e-2, 1e-3)}, dim=2)
    system = assemble_system(
        mesh, dm, mats,
        dirichlet={1: lambda p, r: np.zeros(len(p)),
                   2: lambda p, r: np.ones(len(p))},
        neumann={3: lambda p: np.zeros(len(p)), 4: lambda p: np.zeros(len(p))},
    )
    A = system.A.toarray()
    assert np.abs(A - A.T).max() == 0.0
    d = system.dirichlet_dofs
    off = A[d].copy()
    off[np.arange(len(d)), d] = 0.0
    assert np.all(off == 0.0)
    assert np.allclose(A[d, d], 1.0)


def test_flux_balance_reports_conservation():
    res = run_scenario(analytic_barrier_scenario(beta=1.0, h=0.2, seed=3))
    bal = flux_balance(res.system, res.field.values)
    assert bal["relative_imbalance"] <= 1e-10
    # slope s = 1/2 at beta = 1: half a unit of flux crosses the square
    assert bal["dirichlet_outflow"] == pytest.approx(0.0, abs=1e-10)
    assert bal["flux_scale"] == pytest.approx(1.0, abs=0.05)


def test_barrier_exactness_and_interface_fluxes():
    # piecewise-linear exact solution: nodal exactness and the interface
    # condition (transfer flux = beta * jump, matching -K grad p . n)
    scenario = analytic_barrier_scenario(beta=1e-5, h=0.17, seed=2)
    res = run_scenario(scenario)
    mesh, dm, x = res.mesh, res.dofmap, res.field.values
    beta = 1e-5
    s = 1.0 / (1.0 + 1.0 / beta)

    exact = scenario.exact
    pts = mesh.vertices[dm.dof_vertex]
    # region of a dof: via any cell that carries it
    reg = np.zeros(dm.n_dofs, dtype=np.int64)
    for c in range(mesh.n_cells):
        reg[dm.cell_dofs[c]] = mesh.cell_region[c]
    assert np.abs(x - exact(pts, reg)).max() <= 1e-10

    rows = dm.barrier_facet_rows
    meas = facet_measures(mesh.vertices, mesh.facets[rows])
    for k in range(len(rows)):
        M = local_barrier_coupling(float(meas[k]), beta)
        u = np.concatenate([x[dm.barrier_minus[k]], x[dm.barrier_plus[k]]])
        t = M @ u
        # transfer through each half facet carries the exact normal flux s
        half = s * float(meas[k]) / 2
        assert np.allclose(np.abs(t), half, atol=1e-9 * half)
        # what leaves one side enters the other
        assert np.abs(t[:2] + t[2:]).max() <= 1e-12 * half
        # flow exits through the high pressure side of the interface
        hi = np.sign(u[2:].mean() - u[:2].mean())
        assert np.all(np.sign(t[2:]) == hi)
