"""Local element, fracture, and barrier-transfer matrices."""

import numpy as np
import pytest

from boxdfm.assembly import (local_barrier_coupling, local_barrier_matrices,
                             local_cell_matrices, local_fracture_matrices)
from boxdfm.dofspace import build_dof_map
from boxdfm.mesh import FacetKind, build_mesh
from conftest import barrier_square

REF_TRI = build_mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                     np.array([[0, 1, 2]]))


def test_p1_stiffness_reference_triangle():
    K = np.broadcast_to(np.eye(2), (1, 2, 2)).copy()
    A = local_cell_matrices(REF_TRI, K)[0]
    assert np.allclose(A, [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0],
                           [-0.5, 0.0, 0.5]], atol=1e-15)


def test_p1_stiffness_anisotropic():
    K = np.array([np.diag([2.0, 1.0])])
    A = local_cell_matrices(REF_TRI, K)[0]
    assert np.allclose(A, [[1.5, -1.0, -0.5], [-1.0, 1.0, 0.0],
                           [-0.5, 0.0, 0.5]], atol=1e-15)


def test_p1_stiffness_translation_invariant():
    shifted = build_mesh(REF_TRI.vertices + np.array([3.0, -2.0]),
                         REF_TRI.cells)
    K = np.broadcast_to(np.eye(2), (1, 2, 2)).copy()
    assert np.allclose(local_cell_matrices(REF_TRI, K),
                       local_cell_matrices(shifted, K), atol=1e-14)


def test_fracture_edge_matrix():
    # edge of length 0.5 with aperture 1e-4 and k_f = 1e4: t = 1, so the
    # local matrix is (1 / 0.5) [[1, -1], [-1, 1]]
    mesh = barrier_square(n=2, tag_map={1: "dirichlet", 2: "dirichlet",
                                        3: "neumann", 4: "neumann",
                                        10: "fracture"})
    rows = mesh.facets_of_kind(FacetKind.FRACTURE)
    t = np.full(len(rows), 1e-4 * 1e4)
    mats = local_fracture_matrices(mesh, rows, t)
    assert np.allclose(mats, [[[2.0, -2.0], [-2.0, 2.0]]] * len(rows))


def test_fracture_triangle_matches_2d_stiffness():
    # a 3D triangle rotated out of plane keeps the in-plane stiffness of
    # its flat layout
    flat = build_mesh(np.array([[0.0, 0.0], [1.2, 0.0], [0.3, 0.9]]),
                      np.array([[0, 1, 2]]))
    K = np.broadcast_to(np.eye(2), (1, 2, 2)).copy()
    expect = local_cell_matrices(flat, K)[0]

    c, s = np.cos(0.7), np.sin(0.7)
    R = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    p3 = np.hstack([flat.vertices, np.zeros((3, 1))]) @ R.T + np.array([1, 2, 3])
    base = np.vstack([p3, [[0.0, 0.0, 10.0]], [[0.0, 0.0, -10.0]]])
    mesh3 = build_mesh(base, np.array([[0, 1, 2, 3], [0, 1, 2, 4]]),
                       np.array([[0, 1, 2]]), np.array([30]),
                       tag_map={30: "fracture"})
    rows = mesh3.facets_of_kind(FacetKind.FRACTURE)
    got = local_fracture_matrices(mesh3, rows, np.array([1.0]))[0]
    # dof order follows the facet row, which may be a permutation
    f = mesh3.facets[rows[0]]
    perm = [int(np.nonzero(f == v)[0][0]) for v in (0, 1, 2)]
    assert np.allclose(got[np.ix_(perm, perm)], expect, atol=1e-12)


def ulps_apart(a, b, n=2):
    return abs(a - b) <= n * np.spacing(max(abs(a), abs(b)))


def test_barrier_coupling_2d_entries():
    rng = np.random.default_rng(2)
    for _ in range(10):
        L = float(rng.uniform(0.01, 3.0))
        beta = float(10.0 ** rng.uniform(-8, 8))
        M = local_barrier_coupling(L, beta)
        # -3/4 of the half-edge on same-vertex opposite-side pairs, -1/8 of
        # the edge on cross-vertex pairs (rounding differs only in op order)
        same = -0.75 * (L / 2) * beta
        cross = -(L / 8) * beta
        assert M[0, 2] == beta * L * (-3.0 / 8.0)
        assert ulps_apart(M[0, 2], same) and ulps_apart(M[1, 3], same)
        assert ulps_apart(M[0, 3], cross) and ulps_apart(M[1, 2], cross)
        assert ulps_apart(M[0, 0], -same) and ulps_apart(M[0, 1], -cross)
        assert np.array_equal(M, M.T)


def test_barrier_coupling_psd_and_kernel():
    for dim, nloc in ((2, 2), (3, 3)):
        M = local_barrier_coupling(0.7, 4.2, dim=dim)
        w = np.linalg.eigvalsh(M)
        assert w.min() > -1e-12
        # side-equal vectors carry no transfer
        for k in range(nloc):
            u = np.zeros(2 * nloc)
            u[k] = u[nloc + k] = 1.0
            assert np.allclose(M @ u, 0.0, atol=1e-12)


def quad_integrals(v):
    """integral of each hat function over each vertex sub-box of a
    triangle with vertices v: the oracle for the 3D transfer weights."""
    g = v.mean(axis=0)
    mids = {(i, j): 0.5 * (v[i] + v[j]) for i in range(3) for j in range(3)}

    def tri_int(a, b, c, corner_vals):
        ab, ac = b - a, c - a
        area = 0.5 * np.linalg.norm(np.cross(ab, ac))
        return area * np.mean(corner_vals, axis=0)

    # hat values: at vertex k the hats are the unit basis, at midpoints the
    # average, at the centroid 1/3 each
    hat_v = np.eye(3)
    hat_g = np.full(3, 1.0 / 3.0)
    W = np.zeros((3, 3))
    for j in range(3):
        k, l = [m for m in range(3) if m != j]
        mjk, mjl = mids[(j, k)], mids[(j, l)]
        hjk, hjl = 0.5 * (hat_v[j] + hat_v[k]), 0.5 * (hat_v[j] + hat_v[l])
        W[:, j] = (tri_int(v[j], mjk, g, np.array([hat_v[j], hjk, hat_g]))
                   + tri_int(v[j], g, mjl, np.array([hat_v[j], hat_g, hjl])))
    return W


def test_barrier_weights_3d_rederived():
    # random triangle in 3D: integrating the hats over the sub-boxes must
    # reproduce |F| * [[22,7,7],[7,22,7],[7,7,22]]/108
    rng = np.random.default_rng(5)
    v = rng.standard_normal((3, 3))
    area = 0.5 * np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0]))
    W = quad_integrals(v)
    expect = area * np.array([[22.0, 7, 7], [7, 22, 7], [7, 7, 22]]) / 108.0
    assert np.allclose(W, expect, atol=1e-13)
    assert np.isclose(W.sum(), area)
    M = local_barrier_coupling(area, 2.5, dim=3)
    assert np.allclose(M[:3, 3:], -2.5 * W, atol=1e-12)


def test_barrier_weights_3d_eigenvalues():
    M = local_barrier_coupling(1.0, 1.0, dim=3)
    W = -M[:3, 3:]
    w = np.sort(np.linalg.eigvalsh(W * 108.0))
    assert np.allclose(w, [15.0, 15.0, 36.0], atol=1e-10)


def test_barrier_matrices_match_single_facet(barrier_square_mesh):
    mesh = barrier_square_mesh
    dm = build_dof_map(mesh, "barrier_cuts")
    rows = dm.barrier_facet_rows
    beta = np.full(len(rows), 3.7)
    mats = local_barrier_matrices(mesh, rows, beta)
    p = mesh.vertices[mesh.facets[rows]]
    for k in range(len(rows)):
        L = float(np.linalg.norm(p[k, 1] - p[k, 0]))
        assert np.allclose(mats[k], local_barrier_coupling(L, 3.7), atol=1e-15)


def test_barrier_zero_beta_is_exact_zero(barrier_square_mesh):
    mesh = barrier_square_mesh
    dm = build_dof_map(mesh, "barrier_cuts")
    mats = local_barrier_matrices(mesh, dm.barrier_facet_rows,
                                  np.zeros(len(dm.barrier_facet_rows)))
    assert np.all(mats == 0.0)
