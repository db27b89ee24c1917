"""Mesh construction and validation."""

import numpy as np
import pytest

from boxdfm.errors import ValidationError
from boxdfm.mesh import FacetKind, build_mesh

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
TWO_TRIS = np.array([[0, 1, 2], [0, 2, 3]])


def test_cells_reoriented_to_positive_volume():
    cells = np.array([[0, 2, 1], [0, 2, 3]])  # first one clockwise
    m = build_mesh(SQUARE, cells)
    assert np.all(m.cell_volumes() > 0)


def test_default_region_is_one():
    m = build_mesh(SQUARE, TWO_TRIS)
    assert np.all(m.cell_region == 1)


def test_tag_map_accepts_strings_and_kinds():
    facets = np.array([[0, 1], [0, 2]])
    tags = np.array([7, 9])
    m = build_mesh(SQUARE, TWO_TRIS, facets, tags,
                   tag_map={7: "dirichlet", 9: FacetKind.BARRIER})
    assert m.facet_kinds[m.facet_tags == 7][0] == FacetKind.DIRICHLET
    assert m.facet_kinds[m.facet_tags == 9][0] == FacetKind.BARRIER


def test_unknown_tags_dropped():
    facets = np.array([[0, 1], [1, 2]])
    tags = np.array([7, 99])
    m = build_mesh(SQUARE, TWO_TRIS, facets, tags, tag_map={7: "neumann"})
    assert m.n_tagged_facets == 1
    assert m.facet_tags[0] == 7


def test_duplicate_tag_on_one_facet_rejected():
    facets = np.array([[0, 1], [1, 0]])
    tags = np.array([7, 8])
    with pytest.raises(ValidationError):
        build_mesh(SQUARE, TWO_TRIS, facets, tags,
                   tag_map={7: "neumann", 8: "dirichlet"})


def test_interior_kind_needs_two_cells():
    facets = np.array([[0, 1]])  # boundary edge
    with pytest.raises(ValidationError):
        build_mesh(SQUARE, TWO_TRIS, facets, np.array([10]),
                   tag_map={10: "barrier"})


def test_boundary_kind_needs_one_cell():
    facets = np.array([[0, 2]])  # the shared diagonal
    with pytest.raises(ValidationError):
        build_mesh(SQUARE, TWO_TRIS, facets, np.array([3]),
                   tag_map={3: "dirichlet"})


def test_degenerate_cell_rejected():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        build_mesh(verts, np.array([[0, 1, 2], [0, 1, 3]]))


def test_facets_of_kind(barrier_square_mesh):
    m = barrier_square_mesh
    rows = m.facets_of_kind(FacetKind.BARRIER)
    assert len(rows) == 4  # n=4 grid: 4 edges along x=0.5
    mids = m.vertices[m.facets[rows]].mean(axis=1)
    assert np.allclose(mids[:, 0], 0.5)


def test_domain_diameter(barrier_square_mesh):
    assert barrier_square_mesh.domain_diameter() == pytest.approx(np.sqrt(2.0))


def test_tetrahedron_mesh_basics():
    verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                      [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    cells = np.array([[0, 1, 2, 3], [1, 2, 3, 4]])
    m = build_mesh(verts, cells)
    assert m.dim == 3
    assert np.all(m.cell_volumes() > 0)
    assert m.cell_volumes()[0] == pytest.approx(1.0 / 6.0)
