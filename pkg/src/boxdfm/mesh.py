"""Conforming simplicial meshes with tagged lower-dimensional facets.

A mesh is a triangulation (dim=2) or tetrahedralization (dim=3) whose cells
cover the domain, plus a list of tagged facets (edges in 2D, triangles in 3D)
that coincide with cell facets. Tags are plain integers; what a tag means
(fracture, barrier, boundary condition) is assigned through a tag map, so the
same mesh file can be reused by different scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ValidationError

__all__ = ["FacetKind", "Mesh", "build_mesh", "facet_measures", "facet_normals"]


class FacetKind(IntEnum):
    FRACTURE = 1
    BARRIER = 2
    DIRICHLET = 3
    NEUMANN = 4


_KIND_NAMES = {
    "fracture": FacetKind.FRACTURE,
    "barrier": FacetKind.BARRIER,
    "dirichlet": FacetKind.DIRICHLET,
    "neumann": FacetKind.NEUMANN,
}


def parse_kind(name: str) -> FacetKind:
    try:
        return _KIND_NAMES[name.lower()]
    except KeyError:
        raise ValidationError(
            f"unknown facet kind {name!r}; expected one of {sorted(_KIND_NAMES)}"
        ) from None


@dataclass
class Mesh:
    """Validated simplicial mesh with resolved facet topology.

    Beyond the defining arrays, holds derived adjacency used everywhere
    downstream: the unique-facet table, facet-to-cell incidence, and
    cell neighbor lists. Construct through :func:`build_mesh`.
    """

    dim: int
    vertices: np.ndarray          # (nv, dim) float64
    cells: np.ndarray             # (nc, dim+1) int64, positively oriented
    cell_region: np.ndarray       # (nc,) int64
    facets: np.ndarray            # (nf, dim) int64, tagged facets only
    facet_tags: np.ndarray        # (nf,) int64
    facet_kinds: np.ndarray       # (nf,) int64, FacetKind values

    # derived topology, filled by build_mesh
    ufacets: np.ndarray = field(repr=False, default=None)        # (nu, dim) sorted vertex ids
    ufacet_cells: np.ndarray = field(repr=False, default=None)   # (nu, 2) cell ids, -1 pad
    ufacet_local: np.ndarray = field(repr=False, default=None)   # (nu, 2) opposite local vertex
    facet_to_ufacet: np.ndarray = field(repr=False, default=None)  # (nf,)
    cell_neighbors: np.ndarray = field(repr=False, default=None)   # (nc, dim+1)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_tagged_facets(self) -> int:
        return self.facets.shape[0]

    def cell_volumes(self) -> np.ndarray:
        return _signed_volumes(self.vertices, self.cells)

    def cell_centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    def domain_diameter(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def facets_of_kind(self, kind: FacetKind) -> np.ndarray:
        """Indices into the tagged facet arrays for one kind."""
        return np.nonzero(self.facet_kinds == int(kind))[0]

    def ufacet_is_kind(self, kind: FacetKind) -> np.ndarray:
        """Boolean mask over unique facets: tagged with the given kind."""
        mask = np.zeros(self.ufacets.shape[0], dtype=bool)
        sel = self.facet_kinds == int(kind)
        mask[self.facet_to_ufacet[sel]] = True
        return mask


def _signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p = vertices[cells]
    edges = p[:, 1:, :] - p[:, :1, :]
    if vertices.shape[1] == 2:
        det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
        return det / 2.0
    det = np.linalg.det(edges)
    return det / 6.0


def facet_measures(vertices: np.ndarray, facets: np.ndarray) -> np.ndarray:
    """Length (2D) or area (3D) of each facet row."""
    p = vertices[facets]
    if facets.shape[1] == 2:
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def facet_normals(vertices: np.ndarray, facets: np.ndarray) -> np.ndarray:
    """Unit normals of facet rows; orientation follows vertex order."""
    p = vertices[facets]
    if facets.shape[1] == 2:
        t = p[:, 1] - p[:, 0]
        n = np.stack([t[:, 1], -t[:, 0]], axis=1)
    else:
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def _orient_cells(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    vol = _signed_volumes(vertices, cells)
    flipped = cells.copy()
    neg = vol < 0
    flipped[neg, 0], flipped[neg, 1] = cells[neg, 1], cells[neg, 0]
    return flipped


def _unique_facet_table(cells: np.ndarray, dim: int):
    """All unique cell facets plus incidence.

    Returns (ufacets, ufacet_cells, ufacet_local, cell_facet_index) where
    cell_facet_index[c, i] is the unique-facet id opposite local vertex i.
    """
    nc = cells.shape[0]
    nloc = dim + 1
    # facet opposite local vertex i keeps all vertices but i
    keep = [[j for j in range(nloc) if j != i] for i in range(nloc)]
    all_facets = np.concatenate([cells[:, k] for k in keep], axis=0)
    all_facets = np.sort(all_facets, axis=1)
    owners = np.tile(np.arange(nc, dtype=np.int64), nloc)
    local = np.repeat(np.arange(nloc, dtype=np.int64), nc)

    order = np.lexsort(all_facets.T[::-1])
    sf = all_facets[order]
    new = np.ones(sf.shape[0], dtype=bool)
    new[1:] = np.any(sf[1:] != sf[:-1], axis=1)
    group = np.cumsum(new) - 1
    nu = int(group[-1]) + 1 if sf.shape[0] else 0

    ufacets = sf[new]
    ufacet_cells = np.full((nu, 2), -1, dtype=np.int64)
    ufacet_local = np.full((nu, 2), -1, dtype=np.int64)
    counts = np.bincount(group, minlength=nu)
    if counts.max(initial=0) > 2:
        bad = ufacets[np.argmax(counts)]
        raise ValidationError(
            f"facet {tuple(bad)} is shared by {counts.max()} cells; mesh is not a manifold complex"
        )
    first = np.nonzero(new)[0]
    ufacet_cells[:, 0] = owners[order][first]
    ufacet_local[:, 0] = local[order][first]
    second_mask = counts == 2
    ufacet_cells[second_mask, 1] = owners[order][first[second_mask] + 1]
    ufacet_local[second_mask, 1] = local[order][first[second_mask] + 1]

    cell_facet_index = np.empty((nc, nloc), dtype=np.int64)
    cell_facet_index[owners[order], local[order]] = group
    return ufacets, ufacet_cells, ufacet_local, cell_facet_index


def _locate_tagged(ufacets: np.ndarray, tagged: np.ndarray) -> np.ndarray:
    """Index of each tagged facet row in the sorted unique-facet table."""
    if tagged.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    key = np.sort(tagged, axis=1)
    # lexicographic binary search over rows via structured view
    nu = ufacets.shape[0]
    view = np.ascontiguousarray(ufacets).view([("", ufacets.dtype)] * ufacets.shape[1]).ravel()
    kview = np.ascontiguousarray(key).view([("", key.dtype)] * key.shape[1]).ravel()
    pos = np.searchsorted(view, kview)
    bad = (pos >= nu) | (view[np.minimum(pos, nu - 1)] != kview)
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise ValidationError(
            f"tagged facet {tuple(tagged[i])} does not coincide with any cell facet"
        )
    return pos.astype(np.int64)


def build_mesh(
    vertices,
    cells,
    facets=None,
    facet_tags=None,
    tag_map: dict | None = None,
    cell_region=None,
    facet_kinds=None,
) -> Mesh:
    """Assemble and validate a Mesh from raw arrays.

    tag_map maps integer facet tags to kind names ("fracture", "barrier",
    "dirichlet", "neumann"). Tagged facets whose tag is absent from the map
    are dropped (a mesh file may carry tags a scenario does not use).
    Cells are reoriented to positive volume; degenerate cells are an error.
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
        raise ValidationError(f"vertices must be (n, 2) or (n, 3), got {vertices.shape}")
    dim = vertices.shape[1]
    if cells.ndim != 2 or cells.shape[1] != dim + 1:
        raise ValidationError(f"cells must be (n, {dim + 1}) for dim={dim}, got {cells.shape}")
    nv = vertices.shape[0]
    if cells.size and (cells.min() < 0 or cells.max() >= nv):
        raise ValidationError("cell vertex index out of range")
    if cells.shape[0] == 0:
        raise ValidationError("mesh has no cells")

    cells = _orient_cells(vertices, cells)
    vol = _signed_volumes(vertices, cells)
    scale = float(np.abs(vol).max())
    if np.any(vol <= 1e-14 * max(scale, 1e-300)):
        i = int(np.argmin(vol))
        raise ValidationError(f"cell {i} is degenerate (volume {vol[i]:.3e})")

    if facets is None:
        facets = np.zeros((0, dim), dtype=np.int64)
        facet_tags = np.zeros(0, dtype=np.int64)
    facets = np.ascontiguousarray(facets, dtype=np.int64)
    facet_tags = np.ascontiguousarray(facet_tags, dtype=np.int64)
    if facets.ndim != 2 or (facets.shape[0] and facets.shape[1] != dim):
        raise ValidationError(f"facets must be (n, {dim}) for dim={dim}, got {facets.shape}")
    if facet_tags.shape != (facets.shape[0],):
        raise ValidationError("facet_tags length does not match facets")
    if facets.size and (facets.min() < 0 or facets.max() >= nv):
        raise ValidationError("facet vertex index out of range")

    if facet_kinds is None:
        if tag_map is None:
            tag_map = {}
        kind_of_tag = {int(t): parse_kind(k) if isinstance(k, str) else FacetKind(k)
                       for t, k in tag_map.items()}
        known = np.array([t in kind_of_tag for t in facet_tags], dtype=bool)
        facets = facets[known]
        facet_tags = facet_tags[known]
        facet_kinds = np.array([int(kind_of_tag[int(t)]) for t in facet_tags], dtype=np.int64)
    else:
        facet_kinds = np.ascontiguousarray(facet_kinds, dtype=np.int64)
        if facet_kinds.shape != (facets.shape[0],):
            raise ValidationError("facet_kinds length does not match facets")

    if cell_region is None:
        cell_region = np.ones(cells.shape[0], dtype=np.int64)
    cell_region = np.ascontiguousarray(cell_region, dtype=np.int64)
    if cell_region.shape != (cells.shape[0],):
        raise ValidationError("cell_region length does not match cells")

    ufacets, ufacet_cells, ufacet_local, cell_facet_index = _unique_facet_table(cells, dim)
    facet_to_ufacet = _locate_tagged(ufacets, facets)

    # duplicate tags on one geometric facet are a modeling error
    if facet_to_ufacet.size:
        uniq, cnt = np.unique(facet_to_ufacet, return_counts=True)
        if cnt.max(initial=0) > 1:
            dup = ufacets[uniq[np.argmax(cnt)]]
            raise ValidationError(f"facet {tuple(dup)} is tagged more than once")

    n_adjacent = (ufacet_cells[facet_to_ufacet] >= 0).sum(axis=1)
    interior_kinds = (facet_kinds == FacetKind.FRACTURE) | (facet_kinds == FacetKind.BARRIER)
    bad = interior_kinds & (n_adjacent != 2)
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise ValidationError(
            f"facet {tuple(facets[i])} (tag {facet_tags[i]}) is a fracture/barrier "
            "but lies on the domain boundary"
        )
    bad = ~interior_kinds & (n_adjacent != 1)
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise ValidationError(
            f"facet {tuple(facets[i])} (tag {facet_tags[i]}) carries a boundary "
            "condition but is interior"
        )

    neigh = np.full((cells.shape[0], dim + 1), -1, dtype=np.int64)
    fid = cell_facet_index
    both = ufacet_cells[fid]  # (nc, dim+1, 2)
    own = np.arange(cells.shape[0], dtype=np.int64)[:, None]
    neigh = np.where(both[:, :, 0] == own, both[:, :, 1], both[:, :, 0])

    return Mesh(
        dim=dim,
        vertices=vertices,
        cells=cells,
        cell_region=cell_region,
        facets=facets,
        facet_tags=facet_tags,
        facet_kinds=facet_kinds,
        ufacets=ufacets,
        ufacet_cells=ufacet_cells,
        ufacet_local=ufacet_local,
        facet_to_ufacet=facet_to_ufacet,
        cell_neighbors=neigh,
    )
