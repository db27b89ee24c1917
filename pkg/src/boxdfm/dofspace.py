"""Degrees of freedom for the broken vertex space.

Away from barriers every vertex carries one pressure unknown. A vertex
touched by barrier facets carries one unknown per connected component of
its cell fan, where two cells incident to the vertex are fan-adjacent iff
they share a facet containing the vertex that is not tagged as a barrier.
Barrier tips keep a single unknown automatically (the fan wraps around the
tip); barrier endpoints on the domain boundary split.

Where a fracture crosses a barrier the policy decides: fracture_penetrates
merges all components at the crossing vertex (continuous pressure, the
fracture wins), barrier_cuts keeps them separate (the barrier cuts the
fracture).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DofMapError, ValidationError
from .mesh import FacetKind, Mesh

__all__ = ["POLICIES", "VertexClass", "DofMap", "build_dof_map", "boundary_dofs",
           "facet_vertex_dofs", "write_vertex_report"]

POLICIES = ("fracture_penetrates", "barrier_cuts")


class VertexClass(IntEnum):
    PLAIN = 0
    BARRIER_TIP = 1
    BARRIER_INTERIOR = 2
    INTERSECTION = 3


_CLASS_NAMES = {
    VertexClass.PLAIN: "plain",
    VertexClass.BARRIER_TIP: "barrier_tip",
    VertexClass.BARRIER_INTERIOR: "barrier_interior",
    VertexClass.INTERSECTION: "intersection",
}


@dataclass
class DofMap:
    policy: str
    n_dofs: int
    cell_dofs: np.ndarray      # (nc, dim+1) resolved dof per cell corner
    dof_vertex: np.ndarray     # (n_dofs,) owning vertex, sorted
    vertex_ndofs: np.ndarray   # (nv,) component count per vertex (0 if unused)
    vertex_class: np.ndarray   # (nv,) VertexClass values
    barrier_facet_rows: np.ndarray  # rows into mesh.facets tagged barrier
    barrier_minus: np.ndarray  # (nb, dim) dofs on the first-cell side
    barrier_plus: np.ndarray   # (nb, dim) dofs on the second-cell side
    fracture_facet_rows: np.ndarray
    fracture_dofs: np.ndarray  # (nfr, dim)

    def class_counts(self) -> dict:
        out = {}
        for c, name in _CLASS_NAMES.items():
            out[name] = int(np.count_nonzero(self.vertex_class == int(c)))
        return out


def _local_index(cells: np.ndarray, cell_ids: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Local index of vertex verts[k] inside cell cell_ids[k]."""
    eq = cells[cell_ids] == verts[:, None]
    if not np.all(eq.any(axis=1)):
        raise DofMapError("vertex not found in its supposed cell")
    return np.argmax(eq, axis=1)


def build_dof_map(mesh: Mesh, policy: str) -> DofMap:
    policy = policy.replace("-", "_")
    if policy not in POLICIES:
        raise ValidationError(f"unknown intersection policy {policy!r}; expected one of {POLICIES}")
    nloc = mesh.dim + 1
    nc = mesh.n_cells
    nv = mesh.n_vertices
    cells = mesh.cells

    barrier_uf = mesh.ufacet_is_kind(FacetKind.BARRIER)
    interior = mesh.ufacet_cells[:, 1] >= 0
    link = interior & ~barrier_uf

    rows = []
    cols = []
    c1 = mesh.ufacet_cells[link, 0]
    c2 = mesh.ufacet_cells[link, 1]
    for k in range(mesh.dim):
        v = mesh.ufacets[link, k]
        l1 = _local_index(cells, c1, v)
        l2 = _local_index(cells, c2, v)
        rows.append(c1 * nloc + l1)
        cols.append(c2 * nloc + l2)

    has_barrier = np.zeros(nv, dtype=bool)
    has_fracture = np.zeros(nv, dtype=bool)
    has_barrier[mesh.facets[mesh.facets_of_kind(FacetKind.BARRIER)].ravel()] = True
    has_fracture[mesh.facets[mesh.facets_of_kind(FacetKind.FRACTURE)].ravel()] = True

    if policy == "fracture_penetrates":
        crossing = np.nonzero(has_barrier & has_fracture)[0]
        if len(crossing):
            flat = cells.ravel()
            order = np.argsort(flat, kind="stable")
            sorted_v = flat[order]
            starts = np.searchsorted(sorted_v, crossing)
            ends = np.searchsorted(sorted_v, crossing + 1)
            for s, e in zip(starts, ends):
                nodes = order[s:e]
                if len(nodes) > 1:
                    rows.append(nodes[:-1])
                    cols.append(nodes[1:])

    n_nodes = nc * nloc
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = np.zeros(0, dtype=np.int64)
        c = np.zeros(0, dtype=np.int64)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n_nodes, n_nodes))
    n_comp, labels = connected_components(graph, directed=False)

    first = np.full(n_comp, n_nodes, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(n_nodes, dtype=np.int64))
    vertex_of_label = cells.ravel()[first]
    order = np.lexsort((first, vertex_of_label))
    rank = np.empty(n_comp, dtype=np.int64)
    rank[order] = np.arange(n_comp, dtype=np.int64)
    cell_dofs = rank[labels].reshape(nc, nloc)
    dof_vertex = vertex_of_label[order]

    vertex_ndofs = np.bincount(dof_vertex, minlength=nv)
    in_use = np.zeros(nv, dtype=bool)
    in_use[cells.ravel()] = True
    bad = in_use & ~has_barrier & (vertex_ndofs != 1)
    if np.any(bad):
        v = int(np.nonzero(bad)[0][0])
        raise DofMapError(
            f"vertex {v} is not on a barrier but its cell fan has "
            f"{vertex_ndofs[v]} components (non-manifold mesh?)"
        )

    vclass = np.full(nv, int(VertexClass.PLAIN), dtype=np.int64)
    vclass[has_barrier & (vertex_ndofs == 1)] = int(VertexClass.BARRIER_TIP)
    vclass[has_barrier & (vertex_ndofs > 1)] = int(VertexClass.BARRIER_INTERIOR)
    vclass[has_barrier & has_fracture] = int(VertexClass.INTERSECTION)

    bar_rows = mesh.facets_of_kind(FacetKind.BARRIER)
    uf = mesh.facet_to_ufacet[bar_rows]
    cm = mesh.ufacet_cells[uf, 0]
    cp = mesh.ufacet_cells[uf, 1]
    nb = len(bar_rows)
    minus = np.empty((nb, mesh.dim), dtype=np.int64)
    plus = np.empty((nb, mesh.dim), dtype=np.int64)
    for k in range(mesh.dim):
        v = mesh.facets[bar_rows, k]
        minus[:, k] = cell_dofs[cm, _local_index(cells, cm, v)]
        plus[:, k] = cell_dofs[cp, _local_index(cells, cp, v)]
    dead = np.all(minus == plus, axis=1) if nb else np.zeros(0, dtype=bool)
    if np.any(dead):
        i = int(np.nonzero(dead)[0][0])
        raise DofMapError(
            f"barrier facet {tuple(mesh.facets[bar_rows[i]])} has identical dofs on "
            "both sides; it cannot carry a pressure jump (isolated facet or "
            "merged by the intersection policy at every vertex)"
        )

    fr_rows = mesh.facets_of_kind(FacetKind.FRACTURE)
    uff = mesh.facet_to_ufacet[fr_rows]
    f1 = mesh.ufacet_cells[uff, 0]
    f2 = mesh.ufacet_cells[uff, 1]
    nfr = len(fr_rows)
    fdofs = np.empty((nfr, mesh.dim), dtype=np.int64)
    for k in range(mesh.dim):
        v = mesh.facets[fr_rows, k]
        d1 = cell_dofs[f1, _local_index(cells, f1, v)]
        d2 = cell_dofs[f2, _local_index(cells, f2, v)]
        if not np.array_equal(d1, d2):
            raise DofMapError("fracture facet resolves to different dofs from its two sides")
        fdofs[:, k] = d1

    return DofMap(
        policy=policy,
        n_dofs=int(n_comp),
        cell_dofs=cell_dofs,
        dof_vertex=dof_vertex,
        vertex_ndofs=vertex_ndofs,
        vertex_class=vclass,
        barrier_facet_rows=bar_rows,
        barrier_minus=minus,
        barrier_plus=plus,
        fracture_facet_rows=fr_rows,
        fracture_dofs=fdofs,
    )


def facet_vertex_dofs(mesh: Mesh, dofmap: DofMap, facet_rows: np.ndarray):
    """Dofs of each facet vertex, resolved through the first adjacent cell.

    Returns (dofs, cells): dofs has shape (len(rows), dim); cells is the
    resolving cell per facet (used for region-dependent boundary values).
    """
    uf = mesh.facet_to_ufacet[facet_rows]
    c = mesh.ufacet_cells[uf, 0]
    out = np.empty((len(facet_rows), mesh.dim), dtype=np.int64)
    for k in range(mesh.dim):
        v = mesh.facets[facet_rows, k]
        out[:, k] = dofmap.cell_dofs[c, _local_index(mesh.cells, c, v)]
    return out, c


def boundary_dofs(mesh: Mesh, dofmap: DofMap, kind: FacetKind) -> np.ndarray:
    """Unique dofs sitting on tagged facets of the given boundary kind.

    A barrier terminating at such a facet contributes all of the endpoint
    vertex's dofs that belong to cells touching the facet.
    """
    rows = mesh.facets_of_kind(kind)
    dofs, _ = facet_vertex_dofs(mesh, dofmap, rows)
    return np.unique(dofs.ravel())


def write_vertex_report(mesh: Mesh, dofmap: DofMap, path) -> None:
    """Per-vertex classification and dof multiplicity as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        coords = ["x", "y", "z"][: mesh.dim]
        w.writerow(["vertex", *coords, "n_dofs", "class"])
        for v in range(mesh.n_vertices):
            name = _CLASS_NAMES[VertexClass(int(dofmap.vertex_class[v]))]
            w.writerow([v, *[repr(float(x)) for x in mesh.vertices[v]],
                        int(dofmap.vertex_ndofs[v]), name])
