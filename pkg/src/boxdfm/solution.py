"""Discrete solution fields: evaluation, line samples, errors, convergence.

The field is piecewise linear per cell on the broken vertex space, so it is
discontinuous across barriers. Point evaluation finds the containing cell
(adjacency walk with a brute-force fallback) and uses that cell's dofs, so
values naturally take the side of the cell the point falls into; points
lying exactly on a barrier are disambiguated by a fixed offset along the
sampling segment's normal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import roots_jacobi

from .errors import ValidationError
from .mesh import Mesh

__all__ = ["SolutionField", "sample_slice", "write_profile_csv", "l2_error",
           "convergence_order", "simplex_quadrature"]

_SIDE_EPS_REL = 1e-9  # side-rule offset relative to the domain diameter


def _gauss_jacobi_01(n: int, alpha: int):
    """Gauss-Jacobi nodes/weights for weight (1-u)^alpha on [0, 1]."""
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


def simplex_quadrature(dim: int, n: int = 3):
    """Conical-product quadrature on the reference simplex.

    Returns (bary, weights) with barycentric coordinates of shape
    (nq, dim+1) and weights summing to 1 (multiply by the cell measure).
    Exact for polynomials of degree <= 2n - 1 (degree 5 by default).
    """
    if dim == 2:
        u, wu = _gauss_jacobi_01(n, 1)
        v, wv = _gauss_jacobi_01(n, 0)
        U, V = np.meshgrid(u, v, indexing="ij")
        x = U.ravel()
        y = (V * (1 - U)).ravel()
        w = np.outer(wu, wv).ravel()
        bary = np.stack([1 - x - y, x, y], axis=1)
        return bary, w / 0.5
    if dim == 3:
        u, wu = _gauss_jacobi_01(n, 2)
        v, wv = _gauss_jacobi_01(n, 1)
        t, wt = _gauss_jacobi_01(n, 0)
        U, V, T = np.meshgrid(u, v, t, indexing="ij")
        x = U.ravel()
        y = (V * (1 - U)).ravel()
        z = (T * (1 - U) * (1 - V)).ravel()
        w = np.einsum("i,j,k->ijk", wu, wv, wt).ravel()
        bary = np.stack([1 - x - y - z, x, y, z], axis=1)
        return bary, w / (1.0 / 6.0)
    raise ValidationError(f"no quadrature for dim {dim}")


@dataclass
class SolutionField:
    """Pressure values on the broken vertex space of a mesh."""

    mesh: Mesh
    cell_dofs: np.ndarray   # (nc, dim+1)
    dof_vertex: np.ndarray  # (n_dofs,)
    values: np.ndarray      # (n_dofs,)
    _tree: cKDTree | None = field(default=None, repr=False)
    _vertex_cell: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_dofs(self) -> int:
        return len(self.values)

    def _prepare(self):
        if self._tree is None:
            self._tree = cKDTree(self.mesh.vertices)
            vc = np.full(self.mesh.n_vertices, -1, dtype=np.int64)
            nloc = self.mesh.dim + 1
            # any incident cell serves as a walk start
            vc[self.mesh.cells.ravel()] = np.repeat(
                np.arange(self.mesh.n_cells, dtype=np.int64), nloc
            )
            self._vertex_cell = vc

    def _barycentric(self, cell: int, p: np.ndarray) -> np.ndarray:
        verts = self.mesh.vertices[self.mesh.cells[cell]]
        T = (verts[1:] - verts[0]).T
        lam = np.linalg.solve(T, p - verts[0])
        return np.concatenate([[1.0 - lam.sum()], lam])

    def locate(self, p: np.ndarray, max_steps: int | None = None) -> int:
        """Containing cell via adjacency walk from the nearest vertex."""
        self._prepare()
        _, v = self._tree.query(p)
        cell = int(self._vertex_cell[v])
        if max_steps is None:
            max_steps = 4 * int(np.sqrt(self.mesh.n_cells)) + 50
        tol = -1e-12
        seen = 0
        while seen < max_steps:
            lam = self._barycentric(cell, p)
            worst = int(np.argmin(lam))
            if lam[worst] >= tol:
                return cell
            nxt = int(self.mesh.cell_neighbors[cell, worst])
            if nxt < 0:
                break
            cell = nxt
            seen += 1
        return self._locate_brute(p)

    def _locate_brute(self, p: np.ndarray) -> int:
        verts = self.mesh.vertices[self.mesh.cells]
        T = np.transpose(verts[:, 1:] - verts[:, :1], (0, 2, 1))
        lam = np.linalg.solve(T, np.broadcast_to(p, (self.mesh.n_cells, self.mesh.dim))
                              - verts[:, 0])
        lam0 = 1.0 - lam.sum(axis=1)
        full = np.concatenate([lam0[:, None], lam], axis=1)
        quality = full.min(axis=1)
        best = int(np.argmax(quality))
        # slack admits side-rule samples nudged just past the hull
        if quality[best] < -1e-6:
            raise ValidationError(f"point {tuple(p)} lies outside the mesh")
        return best

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Field values at points; each point uses its containing cell's dofs."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.empty(points.shape[0])
        for i, p in enumerate(points):
            c = self.locate(p)
            lam = self._barycentric(c, p)
            out[i] = float(lam @ self.values[self.cell_dofs[c]])
        return out

    def vertex_value_spread(self, vertex: int) -> float:
        """Max difference between the dof values living at one vertex."""
        vals = self.values[np.nonzero(self.dof_vertex == vertex)[0]]
        return float(vals.max() - vals.min()) if len(vals) else 0.0


def _canonical_barrier_normals(mesh: Mesh):
    """Unit normals of barrier facets, flipped so the first nonzero
    component is positive (a reproducible 'plus' side)."""
    from .mesh import FacetKind, facet_normals

    rows = mesh.facets_of_kind(FacetKind.BARRIER)
    if len(rows) == 0:
        return None, None, None
    facets = mesh.facets[rows]
    normals = facet_normals(mesh.vertices, facets)
    first = np.argmax(np.abs(normals) > 1e-12, axis=1)
    lead = normals[np.arange(len(normals)), first]
    normals[lead < 0] *= -1.0
    pts = mesh.vertices[facets]
    return pts, normals, facets


def _apply_side_rule(fieldobj: SolutionField, pts: np.ndarray, side: str) -> np.ndarray:
    """Shift samples lying on a barrier by eps along the barrier normal."""
    mesh = fieldobj.mesh
    fpts, normals, facets = _canonical_barrier_normals(mesh)
    if fpts is None:
        return pts
    eps = _SIDE_EPS_REL * mesh.domain_diameter()
    sign = 1.0 if side == "plus" else -1.0
    out = pts.copy()
    moved = np.zeros(len(pts), dtype=bool)
    lo = fpts.min(axis=1) - eps
    hi = fpts.max(axis=1) + eps
    for f in range(len(normals)):
        d = np.abs((pts - fpts[f, 0]) @ normals[f])
        inside = np.all((pts >= lo[f]) & (pts <= hi[f]), axis=1)
        on = (d < eps) & inside & ~moved
        if np.any(on):
            out[on] += sign * eps * normals[f]
            moved |= on
    return out


def sample_slice(fieldobj: SolutionField, p0, p1, n: int, side: str = "plus"):
    """Sample along the segment p0 -> p1 at n evenly spaced points.

    Samples landing exactly on a barrier facet are nudged by eps (1e-9 of
    the domain diameter) along the facet's canonical normal: 'plus' toward
    it, 'minus' away. This pins down which pressure trace is reported on a
    discontinuity. Returns a dict of arrays: s (arclength fraction in
    [0, 1]), points, values.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    if side not in ("plus", "minus"):
        raise ValidationError(f"side must be 'plus' or 'minus', got {side!r}")
    if not np.linalg.norm(p1 - p0) > 0:
        raise ValidationError("slice segment is degenerate")
    s = np.linspace(0.0, 1.0, n)
    pts = p0 + np.outer(s, p1 - p0)
    eval_pts = _apply_side_rule(fieldobj, pts, side)
    vals = fieldobj.evaluate(eval_pts)
    return {"s": s, "points": pts, "values": vals}


def write_profile_csv(path, sample: dict) -> None:
    """Deterministic CSV: s, coordinates, value with round-trip floats.

    path may also be an open text stream (stdout for the CLI).
    """
    if hasattr(path, "write"):
        _write_profile(path, sample)
    else:
        with open(path, "w", newline="") as fh:
            _write_profile(fh, sample)


def _write_profile(fh, sample: dict) -> None:
    pts = sample["points"]
    dim = pts.shape[1]
    w = csv.writer(fh)
    w.writerow(["s", *["x", "y", "z"][:dim], "p"])
    for s, p, v in zip(sample["s"], pts, sample["values"]):
        w.writerow([repr(float(s)), *[repr(float(c)) for c in p], repr(float(v))])


def l2_error(fieldobj: SolutionField, exact, quad_n: int = 3) -> float:
    """L2 distance between the field and exact(points, regions).

    Integrated cell by cell with the conical-product rule (degree 5), so
    the quadrature is exact for the squared error of linear fields against
    quadratic exact data and accurate far beyond the discretization error
    otherwise.
    """
    mesh = fieldobj.mesh
    bary, w = simplex_quadrature(mesh.dim, quad_n)
    verts = mesh.vertices[mesh.cells]          # (nc, nloc, dim)
    pts = np.einsum("qj,cjd->cqd", bary, verts)
    dofvals = fieldobj.values[fieldobj.cell_dofs]  # (nc, nloc)
    ph = np.einsum("qj,cj->cq", bary, dofvals)
    nq = len(w)
    flat = pts.reshape(-1, mesh.dim)
    regs = np.repeat(mesh.cell_region, nq)
    pe = np.asarray(exact(flat, regs), dtype=np.float64).reshape(mesh.n_cells, nq)
    vol = np.abs(mesh.cell_volumes())
    err2 = np.einsum("cq,q,c->", (ph - pe) ** 2, w, vol)
    return float(np.sqrt(err2))


def convergence_order(errors, ratio: float = 2.0):
    """Observed orders log(e_i / e_{i+1}) / log(ratio) between levels."""
    errors = np.asarray(errors, dtype=np.float64)
    if np.any(errors <= 0):
        raise ValidationError("convergence orders need positive errors")
    return list(np.log(errors[:-1] / errors[1:]) / np.log(ratio))
