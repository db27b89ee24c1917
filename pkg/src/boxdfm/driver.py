"""Scenario execution: mesh, assemble, solve, write artifacts.

run_scenario does one solve and optionally writes the output bundle
(solution.vtk, facets.vtk, profile CSVs, vertices.csv, solution.npz,
report.json). run_convergence repeats it over refinement levels and
tabulates L2 errors and observed orders. load_solution rebuilds a
SolutionField from a bundle for later slicing.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .assembly import SparseSystem, assemble_system, flux_balance
from .dofspace import DofMap, build_dof_map, write_vertex_report
from .errors import SolverError, ValidationError
from .linalg import cg_solve
from .materials import MaterialModel
from .mesh import Mesh, build_mesh
from .scenario import Scenario, validate_against_mesh
from .solution import (SolutionField, l2_error, sample_slice,
                       write_profile_csv)
from .vtkout import write_facets_vtk, write_solution_vtk

__all__ = ["RunResult", "run_scenario", "run_convergence", "load_solution",
           "scenario_warnings"]


@dataclass
class RunResult:
    scenario: Scenario
    mesh: Mesh
    dofmap: DofMap
    system: SparseSystem
    field: SolutionField
    report: dict


def scenario_warnings(mesh: Mesh, dofmap: DofMap, materials: MaterialModel,
                      dirichlet_dofs: np.ndarray) -> list[str]:
    """Non-fatal modelling hazards worth surfacing in the report."""
    out = []
    kmax = materials.matrix_norm()
    for tag in sorted(materials.barriers):
        kt = materials.barriers[tag].k_tangential
        if kt is not None and kt > kmax:
            out.append(
                f"barrier tag {tag}: tangential permeability {kt:g} exceeds "
                f"the matrix permeability {kmax:g}; the model neglects "
                "in-plane barrier flow, expect visible model error"
            )
    # dofs couple within a cell and across barriers with nonzero coupling;
    # a compartment this graph leaves without Dirichlet data floats
    rows, cols = [], []
    for i, j in combinations(range(mesh.dim + 1), 2):
        rows.append(dofmap.cell_dofs[:, i])
        cols.append(dofmap.cell_dofs[:, j])
    if len(dofmap.barrier_facet_rows):
        tags = mesh.facet_tags[dofmap.barrier_facet_rows]
        beta = np.array([materials.barriers[int(t)].beta for t in tags])
        live = beta > 0.0
        for k in range(mesh.dim):
            rows.append(dofmap.barrier_minus[live, k])
            cols.append(dofmap.barrier_plus[live, k])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = dofmap.n_dofs
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, labels = connected_components(graph, directed=False)
    if ncomp > 1:
        anchored = np.zeros(ncomp, dtype=bool)
        anchored[labels[dirichlet_dofs]] = True
        sizes = np.bincount(labels, minlength=ncomp)
        for c in np.nonzero(~anchored)[0]:
            out.append(
                f"compartment with {int(sizes[c])} dofs is sealed off from "
                "every Dirichlet boundary; its pressure level is not fixed"
            )
    return out


def run_scenario(scenario: Scenario, refine: int = 0, policy: str | None = None,
                 out_dir=None, tol: float | None = None,
                 preconditioner: str | None = None,
                 max_iter: int | None = None) -> RunResult:
    """Solve one scenario at the given extra refinement level.

    CLI-style overrides (policy, tol, preconditioner, max_iter) fall back
    to the scenario's own settings when None. Raises SolverError if the
    iteration does not reach the requested tolerance.
    """
    t0 = time.perf_counter()
    level = scenario.default_refine + int(refine)
    mesh = scenario.mesh_factory(level)
    validate_against_mesh(scenario, mesh)
    pol = policy if policy is not None else scenario.policy
    dofmap = build_dof_map(mesh, pol)
    system = assemble_system(
        mesh, dofmap, scenario.materials,
        source=scenario.source, neumann=scenario.neumann,
        dirichlet=scenario.dirichlet,
        allow_pure_neumann=scenario.allow_pure_neumann,
    )
    warn = scenario_warnings(mesh, dofmap, scenario.materials,
                             system.dirichlet_dofs)
    s = scenario.solver
    use_tol = s.tol if tol is None else float(tol)
    use_pc = s.preconditioner if preconditioner is None else preconditioner
    use_maxit = s.max_iter if max_iter is None else int(max_iter)
    x, solver_report = cg_solve(system.A, system.b, tol=use_tol,
                                max_iter=use_maxit, preconditioner=use_pc)
    if not solver_report.converged:
        raise SolverError(
            f"conjugate gradients stopped at relative residual "
            f"{solver_report.relative_residual:.3e} after "
            f"{solver_report.iterations} iterations (tol {use_tol:g})"
        )
    field = SolutionField(mesh, dofmap.cell_dofs, dofmap.dof_vertex, x)
    report = {
        "scenario": scenario.name,
        "description": scenario.description,
        "dim": scenario.dim,
        "policy": pol,
        "refine": level,
        "n_vertices": mesh.n_vertices,
        "n_cells": mesh.n_cells,
        "n_dofs": dofmap.n_dofs,
        "vertex_classes": dofmap.class_counts(),
        "solver": {
            "preconditioner": solver_report.preconditioner,
            "tol": use_tol,
            "iterations": solver_report.iterations,
            "relative_residual": solver_report.relative_residual,
            "shift": solver_report.shift,
        },
        "balance": flux_balance(system, x),
        "warnings": warn,
    }
    if scenario.exact is not None:
        report["l2_error"] = l2_error(field, scenario.exact)
    report["runtime_s"] = time.perf_counter() - t0
    if out_dir is not None:
        write_bundle(Path(out_dir), scenario, mesh, dofmap, field, report, pol)
    return RunResult(scenario=scenario, mesh=mesh, dofmap=dofmap,
                     system=system, field=field, report=report)


def write_bundle(out: Path, scenario: Scenario, mesh: Mesh, dofmap: DofMap,
                 field: SolutionField, report: dict, policy: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_solution_vtk(out / "solution.vtk", field)
    write_facets_vtk(out / "facets.vtk", mesh)
    write_vertex_report(mesh, dofmap, out / "vertices.csv")
    for sl in scenario.slices:
        sample = sample_slice(field, sl.start, sl.end, sl.n, side=sl.side)
        write_profile_csv(out / f"profile_{sl.name}.csv", sample)
    np.savez(
        out / "solution.npz",
        vertices=mesh.vertices, cells=mesh.cells, facets=mesh.facets,
        facet_tags=mesh.facet_tags, facet_kinds=mesh.facet_kinds,
        cell_region=mesh.cell_region, cell_dofs=field.cell_dofs,
        dof_vertex=field.dof_vertex, values=field.values,
        policy=np.array(policy),
    )
    with open(out / "report.json", "w", newline="\n") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def load_solution(run_dir) -> SolutionField:
    """Rebuild the solved field from a run directory's solution.npz."""
    path = Path(run_dir) / "solution.npz"
    if not path.exists():
        raise ValidationError(f"no solution.npz under {run_dir}")
    with np.load(path) as z:
        mesh = build_mesh(z["vertices"], z["cells"], facets=z["facets"],
                          facet_tags=z["facet_tags"],
                          facet_kinds=z["facet_kinds"],
                          cell_region=z["cell_region"])
        return SolutionField(mesh, z["cell_dofs"], z["dof_vertex"], z["values"])


def run_convergence(scenario: Scenario, levels: int, policy: str | None = None,
                    out_dir=None, tol: float | None = None,
                    preconditioner: str | None = None) -> dict:
    """Refinement study against the scenario's exact solution.

    Solves levels+1 times, reports L2 errors and the observed order
    between consecutive levels, and checks the orders (where the errors
    are above rounding) against the scenario's order window.
    """
    if scenario.exact is None:
        raise ValidationError(
            f"scenario {scenario.name!r} has no exact solution; "
            "a convergence study needs one"
        )
    ndofs, errors, rows = [], [], []
    for level in range(levels + 1):
        res = run_scenario(scenario, refine=level, policy=policy, tol=tol,
                           preconditioner=preconditioner)
        ndofs.append(res.report["n_dofs"])
        errors.append(res.report["l2_error"])
    orders = [None]
    for i in range(1, len(errors)):
        # below ~1e-12 the error is solver/rounding noise, not discretization
        if errors[i] > 1e-12 and errors[i - 1] > 1e-12:
            orders.append(float(np.log2(errors[i - 1] / errors[i])))
        else:
            orders.append(None)
    for level in range(levels + 1):
        rows.append({"level": level, "ndof": ndofs[level],
                     "l2_error": errors[level], "order": orders[level]})
    lo, hi = scenario.order_window
    measured = [o for o in orders if o is not None]
    result = {
        "scenario": scenario.name,
        "levels": levels,
        "rows": rows,
        "orders_in_window": bool(measured) and all(lo <= o <= hi for o in measured),
        "order_window": [lo, hi],
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "convergence.csv", "w", newline="\n") as f:
            f.write("level,ndof,l2_error,order\n")
            for r in rows:
                o = "" if r["order"] is None else repr(r["order"])
                f.write(f"{r['level']},{r['ndof']},{r['l2_error']!r},{o}\n")
        with open(out / "convergence.json", "w", newline="\n") as f:
            json.dump(result, f, indent=2, sort_keys=True)
            f.write("\n")
    return result
