"""Array layouts and near-field spherical-wave steering vectors.

Axis convention: a ULA lies along the x-axis and a source sits in the xy-plane at
``(r sin(phi), r cos(phi), 0)``. A UPA lies in the xz-plane and a source sits at
``(r cos(psi) sin(phi), r cos(psi) cos(phi), r sin(psi))``. Element 1 (index 0) is
always the reference element at the origin.
"""

import math
import re
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions import InvalidArgumentError
from app.schema import ArrayKind, PhaseModel, SourceLocation


LocationLike = Union[SourceLocation, Sequence[float], np.ndarray]
_GEOMETRY_SPEC = re.compile(
    r"^\s*(ula|upa)\s*:\s*(\d+)(?:\s*x\s*(\d+))?\s*(?::\s*([^:\s]+)\s*)?$", re.IGNORECASE
)


class ArrayGeometry(BaseModel):
    """Uniform linear or planar antenna array with equal spacing in each dimension."""

    model_config = ConfigDict(frozen=True)

    kind: ArrayKind = Field(..., description="Array layout")
    mx: int = Field(..., ge=2, description="Elements along x (the ULA length)")
    my: Optional[int] = Field(None, ge=2, description="Elements along z (UPA only)")
    spacing: float = Field(..., gt=0, description="Element spacing delta (m)")

    @model_validator(mode="after")
    def _check_layout(self) -> "ArrayGeometry":
        if self.kind is ArrayKind.ULA and self.my is not None:
            raise ValueError("ULA geometries take a single element count")
        if self.kind is ArrayKind.UPA and self.my is None:
            raise ValueError("UPA geometries need both mx and my")
        return self

    @classmethod
    def ula(cls, m: int, spacing: float) -> "ArrayGeometry":
        return cls(kind=ArrayKind.ULA, mx=m, spacing=spacing)

    @classmethod
    def upa(cls, mx: int, my: int, spacing: float) -> "ArrayGeometry":
        return cls(kind=ArrayKind.UPA, mx=mx, my=my, spacing=spacing)

    @property
    def is_planar(self) -> bool:
        return self.kind is ArrayKind.UPA

    @property
    def num_elements(self) -> int:
        return self.mx * (self.my or 1)

    @property
    def location_dimension(self) -> int:
        """Length of a location parameter vector for this array."""
        return 3 if self.is_planar else 2

    @property
    def default_phase_model(self) -> PhaseModel:
        return PhaseModel.EXACT if self.is_planar else PhaseModel.FRESNEL

    @property
    def element_positions(self) -> np.ndarray:
        """(M, 3) element coordinates in meters, x-index running fastest."""
        if not self.is_planar:
            positions = np.zeros((self.mx, 3))
            positions[:, 0] = np.arange(self.mx) * self.spacing
            return positions
        ix, iz = np.meshgrid(np.arange(self.mx), np.arange(self.my), indexing="xy")
        positions = np.zeros((self.num_elements, 3))
        positions[:, 0] = ix.ravel() * self.spacing
        positions[:, 2] = iz.ravel() * self.spacing
        return positions

    def describe(self) -> str:
        if self.is_planar:
            return f"UPA {self.mx}x{self.my}, spacing {self.spacing:g} m"
        return f"ULA {self.mx}, spacing {self.spacing:g} m"


def parse_geometry_spec(spec: str, wavelength: float) -> ArrayGeometry:
    """'ula:64', 'ula:64:0.005' or 'upa:16x16:0.01'; spacing in meters, lambda/2 if omitted."""
    match = _GEOMETRY_SPEC.match(spec)
    if not match:
        raise InvalidArgumentError(
            f"Geometry spec must look like ula:M[:spacing] or upa:MXxMY[:spacing], got {spec!r}"
        )
    kind, first, second, spacing = match.groups()
    if (kind.lower() == "upa") != (second is not None):
        raise InvalidArgumentError(
            f"ULA specs take one element count and UPA specs two, got {spec!r}"
        )
    try:
        spacing_m = float(spacing) if spacing else wavelength / 2.0
    except ValueError:
        raise InvalidArgumentError(f"Invalid spacing in geometry spec {spec!r}") from None
    if not spacing_m > 0:
        raise InvalidArgumentError(f"Spacing must be positive, got {spec!r}")
    if int(first) < 2 or (second is not None and int(second) < 2):
        raise InvalidArgumentError(f"Arrays need at least 2 elements per axis, got {spec!r}")
    if second is None:
        return ArrayGeometry.ula(int(first), spacing_m)
    return ArrayGeometry.upa(int(first), int(second), spacing_m)


def aperture(geometry: ArrayGeometry) -> float:
    """Aperture length D_ap in meters.

    ULA: (M - 1) * delta. UPA: max(mx, my) * delta * sqrt(2), the diagonal of an
    mx x my panel counted with M rather than M - 1 spacings.
    """
    if geometry.is_planar:
        return max(geometry.mx, geometry.my) * geometry.spacing * math.sqrt(2.0)
    return (geometry.mx - 1) * geometry.spacing


def fraunhofer_distance(geometry: ArrayGeometry, wavelength: float) -> float:
    """Fraunhofer distance 2 * D_ap^2 / lambda in meters."""
    if not wavelength > 0:
        raise InvalidArgumentError(f"Wavelength must be positive, got {wavelength}")
    return 2.0 * aperture(geometry) ** 2 / wavelength


def as_parameter_matrix(
    geometry: ArrayGeometry, locations: Union[LocationLike, Sequence[LocationLike]]
) -> np.ndarray:
    """Stack locations into an (N, D) parameter matrix matching the geometry."""
    if isinstance(locations, SourceLocation):
        params = locations.to_vector()[None, :]
    elif isinstance(locations, np.ndarray):
        params = np.atleast_2d(np.asarray(locations, dtype=float))
    elif len(locations) and isinstance(locations[0], SourceLocation):
        params = np.array([loc.to_vector() for loc in locations])
    else:
        params = np.atleast_2d(np.asarray(locations, dtype=float))
    if params.shape[-1] != geometry.location_dimension:
        raise InvalidArgumentError(
            f"{geometry.describe()} expects {geometry.location_dimension}-parameter "
            f"locations, got {params.shape[-1]}"
        )
    return params


def source_positions(geometry: ArrayGeometry, params: np.ndarray) -> np.ndarray:
    """(N, 3) Cartesian source coordinates for an (N, D) parameter matrix."""
    phi = params[:, 0]
    r = params[:, -1]
    if geometry.is_planar:
        psi = params[:, 1]
        return np.stack(
            [
                r * np.cos(psi) * np.sin(phi),
                r * np.cos(psi) * np.cos(phi),
                r * np.sin(psi),
            ],
            axis=1,
        )
    return np.stack([r * np.sin(phi), r * np.cos(phi), np.zeros_like(r)], axis=1)


def distance_matrix(
    geometry: ArrayGeometry, params: np.ndarray, model: Optional[PhaseModel] = None
) -> np.ndarray:
    """(N, M) source-to-element distances for an (N, D) parameter matrix."""
    model = PhaseModel(model or geometry.default_phase_model)
    if model is PhaseModel.FRESNEL:
        if geometry.is_planar:
            raise InvalidArgumentError("The Fresnel phase model is only defined for ULAs")
        offsets = np.arange(geometry.mx) * geometry.spacing
        phi = params[:, 0:1]
        r = params[:, 1:2]
        return r - offsets[None, :] * np.sin(phi) + offsets[None, :] ** 2 / (2.0 * r)
    sources = source_positions(geometry, params)
    diff = sources[:, None, :] - geometry.element_positions[None, :, :]
    return np.sqrt(np.einsum("nmk,nmk->nm", diff, diff))


def steering_matrix(
    geometry: ArrayGeometry,
    params: np.ndarray,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> np.ndarray:
    """(N, M) steering vectors, one row per parameter vector."""
    if not wavelength > 0:
        raise InvalidArgumentError(f"Wavelength must be positive, got {wavelength}")
    distances = distance_matrix(geometry, params, model)
    delay = distances[:, :1] - distances
    phase = np.exp(1j * (2.0 * np.pi / wavelength) * delay)
    phase[:, 0] = 1.0 + 0.0j
    return phase


def element_distances(
    geometry: ArrayGeometry, loc: LocationLike, model: Optional[PhaseModel] = None
) -> np.ndarray:
    """Distances from one source to all M antennas (meters)."""
    return distance_matrix(geometry, as_parameter_matrix(geometry, loc), model)[0]


def steering_vector(
    geometry: ArrayGeometry,
    loc: LocationLike,
    wavelength: float,
    model: Optional[PhaseModel] = None,
) -> np.ndarray:
    """Near-field array response a(theta) = exp(j 2pi/lambda (d_1 - d_m))."""
    return steering_matrix(
        geometry, as_parameter_matrix(geometry, loc), wavelength, model
    )[0]
