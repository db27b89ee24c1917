"""Material data: matrix permeability per region, fracture/barrier laws per tag."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .mesh import Mesh

__all__ = ["FractureLaw", "BarrierLaw", "MaterialModel"]


@dataclass(frozen=True)
class FractureLaw:
    aperture: float
    k: float  # tangential permeability of a conductive feature

    def __post_init__(self):
        if self.aperture <= 0:
            raise ValidationError(f"fracture aperture must be positive, got {self.aperture}")
        if self.k <= 0:
            raise ValidationError(f"fracture permeability must be positive, got {self.k}")


@dataclass(frozen=True)
class BarrierLaw:
    aperture: float
    k: float                     # normal permeability; 0 means sealed
    k_tangential: float | None = None  # recorded, not used by the hybrid operator

    def __post_init__(self):
        if self.aperture <= 0:
            raise ValidationError(f"barrier aperture must be positive, got {self.aperture}")
        if self.k < 0:
            raise ValidationError(f"barrier permeability must be >= 0, got {self.k}")
        if self.k_tangential is not None and self.k_tangential < 0:
            raise ValidationError("barrier tangential permeability must be >= 0")

    @property
    def beta(self) -> float:
        """Interface transfer coefficient k / aperture."""
        return self.k / self.aperture


def _as_tensor(value, dim: int) -> np.ndarray:
    K = np.asarray(value, dtype=np.float64)
    if K.ndim == 0:
        K = float(K) * np.eye(dim)
    if K.shape != (dim, dim):
        raise ValidationError(f"permeability must be scalar or {dim}x{dim}, got shape {K.shape}")
    if not np.allclose(K, K.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(K).max()))):
        raise ValidationError("permeability tensor must be symmetric")
    if np.linalg.eigvalsh(K).min() <= 0:
        raise ValidationError("permeability tensor must be positive definite")
    return K


@dataclass
class MaterialModel:
    """Region and tag resolved material laws.

    matrix maps region id -> permeability (scalar or tensor); fractures and
    barriers map facet tag -> law. Construction validates positivity/SPD.
    """

    matrix: dict = field(default_factory=dict)
    fractures: dict = field(default_factory=dict)
    barriers: dict = field(default_factory=dict)
    dim: int = 2

    def __post_init__(self):
        self.matrix = {int(r): _as_tensor(K, self.dim) for r, K in self.matrix.items()}
        fr = {}
        for t, v in self.fractures.items():
            fr[int(t)] = v if isinstance(v, FractureLaw) else FractureLaw(**v)
        self.fractures = fr
        br = {}
        for t, v in self.barriers.items():
            br[int(t)] = v if isinstance(v, BarrierLaw) else BarrierLaw(**v)
        self.barriers = br

    def cell_tensors(self, mesh: Mesh) -> np.ndarray:
        """(nc, dim, dim) permeability per cell, resolved by region."""
        out = np.empty((mesh.n_cells, mesh.dim, mesh.dim))
        regions = np.unique(mesh.cell_region)
        for r in regions:
            if int(r) not in self.matrix:
                raise ValidationError(f"no matrix permeability for region {int(r)}")
            out[mesh.cell_region == r] = self.matrix[int(r)]
        return out

    def matrix_norm(self) -> float:
        return max(float(np.linalg.norm(K, 2)) for K in self.matrix.values())
