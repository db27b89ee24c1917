"""Declarative problem descriptions.

A Scenario bundles everything one run needs: a mesh factory taking a
refinement level, material laws, boundary data as expression strings,
the source term, the intersection policy, solver settings, and the
profile slices to extract afterwards. Builtin benchmark definitions live
in benchmarks.py; user scenarios are JSON files following the schema
documented in the README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import MissingDataError, ValidationError
from .expressions import compile_expression
from .generators import crossed_square_mesh, delaunay_rect_mesh, kuhn_cube_mesh
from .materials import BarrierLaw, FractureLaw, MaterialModel
from .mesh import FacetKind, Mesh
from .msh_io import load_msh
from .refine import uniform_refine

__all__ = [
    "Scenario",
    "SliceSpec",
    "SolverSettings",
    "scalar_field",
    "boundary_flux",
    "load_scenario_file",
    "data_file",
    "load_geometry",
    "validate_against_mesh",
]


@dataclass
class SolverSettings:
    tol: float = 1e-10
    max_iter: int | None = None
    preconditioner: str = "ic0"


@dataclass
class SliceSpec:
    name: str
    start: tuple
    end: tuple
    n: int = 200
    side: str = "plus"


@dataclass
class Scenario:
    """One fully specified run.

    dirichlet maps tag -> g(points, regions); neumann maps tag -> g(points)
    where g is the outward normal flux density (positive drains the
    domain). exact, when present, enables convergence studies and carries
    the target order window.
    """

    name: str
    dim: int
    mesh_factory: Callable[[int], Mesh]
    materials: MaterialModel
    description: str = ""
    dirichlet: dict = field(default_factory=dict)
    neumann: dict = field(default_factory=dict)
    source: Callable | None = None
    policy: str = "barrier-cuts"
    solver: SolverSettings = field(default_factory=SolverSettings)
    slices: tuple = ()
    exact: Callable | None = None
    order_window: tuple = (1.9, 2.1)
    allow_pure_neumann: bool = False
    default_refine: int = 0


def scalar_field(spec, dim: int) -> Callable:
    """(points, regions) callable from an expression or a by-region table.

    spec may be a number, an expression string over x,y,z, or
    {"by_region": {region: expression}} for side-dependent data.
    """
    if isinstance(spec, dict):
        table = spec.get("by_region")
        if not isinstance(table, dict) or not table:
            raise ValidationError(f"expected {{'by_region': {{...}}}}, got {spec!r}")
        fns = {int(r): compile_expression(e, dim) for r, e in table.items()}

        def by_region(points, regions):
            points = np.asarray(points, dtype=np.float64)
            regions = np.asarray(regions)
            out = np.empty(len(points))
            seen = np.zeros(len(points), dtype=bool)
            for r, fn in fns.items():
                m = regions == r
                out[m] = fn(points[m])
                seen |= m
            if not seen.all():
                missing = sorted(set(regions[~seen].tolist()))
                raise ValidationError(f"no expression for region(s) {missing}")
            return out

        return by_region

    fn = compile_expression(spec, dim)

    def uniform(points, regions=None):
        return fn(np.asarray(points, dtype=np.float64))

    return uniform


def boundary_flux(spec, dim: int) -> Callable:
    """(points,) callable for Neumann data (no region argument)."""
    fn = compile_expression(spec, dim)

    def g(points):
        return fn(np.asarray(points, dtype=np.float64))

    return g


def data_file(name: str) -> Path:
    """Path of a shipped data file; raises MissingDataError if absent."""
    root = resources.files("boxdfm").joinpath("data")
    p = Path(str(root.joinpath(name)))
    if not p.is_file():
        raise MissingDataError(
            f"data file {name!r} is not shipped with this package; "
            "the geometry it describes comes from an external source"
        )
    return p


def load_geometry(name: str) -> dict:
    """Shipped geometry description (domain, segments or planes, boxes)."""
    with open(data_file(name)) as fh:
        return json.load(fh)


def parse_segments(rows) -> list:
    """[{from, to, tag}] -> [(p0, p1, tag)] as the generators expect."""
    out = []
    for r in rows:
        out.append((tuple(map(float, r["from"])), tuple(map(float, r["to"])), int(r["tag"])))
    return out


def parse_planes(rows) -> list:
    """[{axis, coord, extent, tag}] -> [(axis, coord, lo2, hi2, tag)]."""
    out = []
    for r in rows:
        lo2, hi2 = r["extent"]
        out.append((int(r["axis"]), float(r["coord"]),
                    tuple(map(float, lo2)), tuple(map(float, hi2)), int(r["tag"])))
    return out


def box_region_fn(boxes, default: int = 1):
    """Cell-region classifier from [{box: [lo, hi], region: id}] rows.

    Later boxes override earlier ones; centroids outside every box get the
    default region.
    """
    parsed = [(np.asarray(b["box"][0], float), np.asarray(b["box"][1], float),
               int(b["region"])) for b in boxes]

    def fn(centroids):
        out = np.full(len(centroids), default, dtype=np.int64)
        for lo, hi, reg in parsed:
            inside = np.all((centroids >= lo) & (centroids <= hi), axis=1)
            out[inside] = reg
        return out

    return fn


def box_boundary_fn(boxes, tol: float = 1e-9):
    """Boundary-tag override from [{box: [lo, hi], tag: id}] rows."""
    parsed = [(np.asarray(b["box"][0], float), np.asarray(b["box"][1], float),
               int(b["tag"])) for b in boxes]

    def fn(mids, tags):
        out = np.array(tags, dtype=np.int64)
        for lo, hi, tag in parsed:
            inside = np.all((mids >= lo - tol) & (mids <= hi + tol), axis=1)
            out[inside] = tag
        return out

    return fn


_KIND_NAMES = {
    "fracture": FacetKind.FRACTURE,
    "barrier": FacetKind.BARRIER,
    "dirichlet": FacetKind.DIRICHLET,
    "neumann": FacetKind.NEUMANN,
}


def _parse_tag_map(raw: dict) -> dict:
    out = {}
    for tag, kind in raw.items():
        k = str(kind).strip().lower()
        if k not in _KIND_NAMES:
            raise ValidationError(f"unknown facet kind {kind!r} for tag {tag}")
        out[int(tag)] = _KIND_NAMES[k]
    return out


def _mesh_factory_from_spec(spec: dict, tag_map: dict, base_dir: Path) -> Callable:
    if "file" in spec:
        path = Path(spec["file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise MissingDataError(f"mesh file not found: {path}")

        def from_file(level: int) -> Mesh:
            return uniform_refine(load_msh(path, tag_map), level)

        return from_file

    gen = spec.get("generator")
    segments = parse_segments(spec.get("segments", []))
    region_fn = box_region_fn(spec["regions"]) if spec.get("regions") else None
    boundary_fn = box_boundary_fn(spec["boundary_boxes"]) if spec.get("boundary_boxes") else None

    if gen == "crossed_square":
        def build(level: int) -> Mesh:
            base = crossed_square_mesh(
                int(spec.get("n", 8)),
                jitter=float(spec.get("jitter", 0.0)),
                seed=int(spec.get("seed", 0)),
                keep_x=tuple(spec.get("keep_x", ())),
                keep_y=tuple(spec.get("keep_y", ())),
                segments=segments,
                region_fn=region_fn,
                boundary_tag_fn=boundary_fn,
                tag_map=tag_map,
                domain=spec.get("domain", ((0.0, 0.0), (1.0, 1.0))),
            )
            return uniform_refine(base, level)

        return build

    if gen == "delaunay_rect":
        def build(level: int) -> Mesh:
            base = delaunay_rect_mesh(
                spec.get("domain", ((0.0, 0.0), (1.0, 1.0))),
                float(spec["h"]),
                segments=segments,
                seed=int(spec.get("seed", 0)),
                boundary_div=spec.get("boundary_div"),
                fill_target=spec.get("fill_target"),
                region_fn=region_fn,
                boundary_tag_fn=boundary_fn,
                tag_map=tag_map,
            )
            return uniform_refine(base, level)

        return build

    if gen == "kuhn_cube":
        planes = parse_planes(spec.get("planes", []))

        def build(level: int) -> Mesh:
            base = kuhn_cube_mesh(
                int(spec.get("n", 8)),
                planes=planes,
                domain=spec.get("domain", ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))),
                region_fn=region_fn,
                boundary_tag_fn=boundary_fn,
                tag_map=tag_map,
            )
            return uniform_refine(base, level)

        return build

    raise ValidationError(f"mesh spec needs 'file' or a known 'generator', got {spec!r}")


def _parse_materials(raw: dict, dim: int) -> MaterialModel:
    matrix = {int(r): _tensor_entry(v) for r, v in raw.get("matrix", {"1": 1.0}).items()}
    fractures = {int(t): FractureLaw(float(v["aperture"]), float(v["k"]))
                 for t, v in raw.get("fractures", {}).items()}
    barriers = {}
    for t, v in raw.get("barriers", {}).items():
        kt = v.get("k_tangential")
        barriers[int(t)] = BarrierLaw(float(v["aperture"]), float(v["k"]),
                                      None if kt is None else float(kt))
    return MaterialModel(matrix=matrix, fractures=fractures, barriers=barriers, dim=dim)


def _tensor_entry(v):
    if isinstance(v, (int, float)):
        return float(v)
    return np.asarray(v, dtype=np.float64)


def load_scenario_file(path) -> Scenario:
    """Scenario from a JSON file (schema in the README)."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise MissingDataError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario file {path} is not valid JSON: {exc}") from None
    return scenario_from_dict(raw, base_dir=path.parent,
                              default_name=path.stem)


def scenario_from_dict(raw: dict, base_dir: Path | None = None,
                       default_name: str = "scenario") -> Scenario:
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    if "mesh" not in raw:
        raise ValidationError("scenario is missing the 'mesh' entry")
    dim = int(raw.get("dim", 2))
    tag_map = _parse_tag_map(raw.get("tag_map", {}))
    factory = _mesh_factory_from_spec(raw["mesh"], tag_map, base_dir)
    materials = _parse_materials(raw.get("materials", {}), dim)
    dirichlet = {int(t): scalar_field(e, dim) for t, e in raw.get("dirichlet", {}).items()}
    neumann = {int(t): boundary_flux(e, dim) for t, e in raw.get("neumann", {}).items()}
    source = scalar_field(raw["source"], dim) if "source" in raw else None
    exact = scalar_field(raw["exact"], dim) if "exact" in raw else None
    sv = raw.get("solver", {})
    solver = SolverSettings(
        tol=float(sv.get("tol", 1e-10)),
        max_iter=sv.get("max_iter"),
        preconditioner=str(sv.get("preconditioner", "ic0")),
    )
    slices = tuple(
        SliceSpec(
            name=str(s.get("name", f"slice{i}")),
            start=tuple(map(float, s["from"])),
            end=tuple(map(float, s["to"])),
            n=int(s.get("n", 200)),
            side=str(s.get("side", "plus")),
        )
        for i, s in enumerate(raw.get("slices", []))
    )
    return Scenario(
        name=str(raw.get("name", default_name)),
        dim=dim,
        mesh_factory=factory,
        materials=materials,
        description=str(raw.get("description", "")),
        dirichlet=dirichlet,
        neumann=neumann,
        source=source,
        policy=str(raw.get("policy", "barrier-cuts")),
        solver=solver,
        slices=slices,
        exact=exact,
        order_window=tuple(raw.get("order_window", (1.9, 2.1))),
        allow_pure_neumann=bool(raw.get("allow_pure_neumann", False)),
        default_refine=int(raw.get("refine", 0)),
    )


def validate_against_mesh(scenario: Scenario, mesh: Mesh) -> None:
    """Every tagged facet in the mesh must have matching data.

    Fracture and barrier tags need material laws; Dirichlet and Neumann
    tags need boundary expressions. Unused extra entries are fine for
    materials but boundary entries must match facets (checked during
    assembly).
    """
    problems = []
    for kind, table, what in (
        (FacetKind.FRACTURE, scenario.materials.fractures, "fracture law"),
        (FacetKind.BARRIER, scenario.materials.barriers, "barrier law"),
        (FacetKind.DIRICHLET, scenario.dirichlet, "dirichlet value"),
        (FacetKind.NEUMANN, scenario.neumann, "neumann flux"),
    ):
        tags = np.unique(mesh.facet_tags[mesh.facet_kinds == int(kind)])
        for t in tags.tolist():
            if int(t) not in table:
                problems.append(f"no {what} for tag {t}")
    if problems:
        raise ValidationError("; ".join(problems))
