"""Search boxes for the DE localizers and uniform grids for MUSIC."""

import math
import re
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.array.geometry import ArrayGeometry, aperture, fraunhofer_distance
from app.config import MusicSettings, config
from app.exceptions import InvalidArgumentError
from app.schema import SourceLocation


Interval = Tuple[float, float]

_HALF_PI = math.pi / 2
_GRID_SPEC = re.compile(r"^\s*(\d+)\s*x\s*(\d+)\s*(?:x\s*(\d+)\s*)?$", re.IGNORECASE)


class SearchDomain(BaseModel):
    """Admissible (phi[, psi], r) box; angles in radians, range in meters."""

    model_config = ConfigDict(frozen=True)

    phi: Interval = Field(..., description="Azimuth interval (rad)")
    psi: Optional[Interval] = Field(None, description="Elevation interval (rad), UPA only")
    range: Interval = Field(..., description="Range interval (m)")

    @field_validator("phi", "psi")
    @classmethod
    def _angle_interval(cls, value: Optional[Interval]) -> Optional[Interval]:
        if value is None:
            return value
        low, high = value
        if not low < high:
            raise ValueError(f"Empty angle interval ({low}, {high})")
        if low <= -_HALF_PI or high >= _HALF_PI:
            raise ValueError(f"Angle interval ({low}, {high}) leaves (-pi/2, pi/2)")
        return value

    @field_validator("range")
    @classmethod
    def _range_interval(cls, value: Interval) -> Interval:
        low, high = value
        if not 0 < low < high:
            raise ValueError(f"Range interval must satisfy 0 < low < high, got {value}")
        return value

    @classmethod
    def default(
        cls,
        geometry: ArrayGeometry,
        wavelength: float,
        phi_deg: float = 60.0,
        psi_deg: float = 30.0,
    ) -> "SearchDomain":
        """+/-phi_deg azimuth, +/-psi_deg elevation (UPA) and r in [2 D_ap, d_FA / 2]."""
        low = 2.0 * aperture(geometry)
        high = fraunhofer_distance(geometry, wavelength) / 2.0
        if not low < high:
            raise InvalidArgumentError(
                f"{geometry.describe()} has no radiative near field at lambda={wavelength} m "
                f"(2 D_ap = {low:.3f} m >= d_FA / 2 = {high:.3f} m)"
            )
        phi = math.radians(phi_deg)
        psi = math.radians(psi_deg) if geometry.is_planar else None
        return cls(
            phi=(-phi, phi),
            psi=None if psi is None else (-psi, psi),
            range=(low, high),
        )

    @property
    def dimension(self) -> int:
        return 2 if self.psi is None else 3

    def bounds(self) -> List[Interval]:
        """Per-parameter bounds in location-vector order."""
        if self.psi is None:
            return [self.phi, self.range]
        return [self.phi, self.psi, self.range]

    def joint_bounds(self, num_sources: int) -> List[Interval]:
        return self.bounds() * num_sources

    def check_geometry(self, geometry: ArrayGeometry) -> None:
        if self.dimension != geometry.location_dimension:
            raise InvalidArgumentError(
                f"{self.dimension}-parameter domain does not fit {geometry.describe()}"
            )

    def contains(self, location: SourceLocation, tol: float = 1e-12) -> bool:
        vector = location.to_vector()
        if vector.shape[0] != self.dimension:
            return False
        return all(
            low - tol <= value <= high + tol
            for value, (low, high) in zip(vector, self.bounds())
        )


def parse_grid_spec(spec: str) -> Tuple[int, ...]:
    """'200x1000' -> (200, 1000); 'AxBxC' gives (phi, psi, r) point counts."""
    match = _GRID_SPEC.match(spec)
    if not match:
        raise InvalidArgumentError(f"Grid spec must look like AxB or AxBxC, got {spec!r}")
    counts = tuple(int(g) for g in match.groups() if g is not None)
    if any(c < 2 for c in counts):
        raise InvalidArgumentError(f"Grid resolutions must be >= 2 per axis, got {spec!r}")
    return counts


class SearchGrid(BaseModel):
    """Uniform MUSIC grid over a search domain, indexed (phi[, psi], r)."""

    model_config = ConfigDict(frozen=True)

    domain: SearchDomain
    phi_points: int = Field(..., ge=2)
    range_points: int = Field(..., ge=2)
    psi_points: Optional[int] = Field(None, ge=2)

    @model_validator(mode="after")
    def _match_domain(self) -> "SearchGrid":
        if (self.psi_points is None) != (self.domain.psi is None):
            raise ValueError("Elevation points are required iff the domain has elevation")
        return self

    @classmethod
    def uniform(
        cls,
        domain: SearchDomain,
        angle_points: int,
        range_points: int,
        elevation_points: Optional[int] = None,
    ) -> "SearchGrid":
        return cls(
            domain=domain,
            phi_points=angle_points,
            range_points=range_points,
            psi_points=elevation_points if domain.psi is not None else None,
        )

    @classmethod
    def from_settings(
        cls, domain: SearchDomain, settings: Optional[MusicSettings] = None
    ) -> "SearchGrid":
        settings = settings or config.music
        return cls.uniform(
            domain, settings.angle_points, settings.range_points, settings.elevation_points
        )

    @classmethod
    def from_spec(cls, domain: SearchDomain, spec: str) -> "SearchGrid":
        counts = parse_grid_spec(spec)
        if len(counts) != domain.dimension:
            raise InvalidArgumentError(
                f"Grid {spec!r} has {len(counts)} axes, domain needs {domain.dimension}"
            )
        if domain.psi is None:
            return cls(domain=domain, phi_points=counts[0], range_points=counts[1])
        return cls(
            domain=domain,
            phi_points=counts[0],
            psi_points=counts[1],
            range_points=counts[2],
        )

    @property
    def axes(self) -> List[np.ndarray]:
        axes = [np.linspace(*self.domain.phi, self.phi_points)]
        if self.psi_points is not None:
            axes.append(np.linspace(*self.domain.psi, self.psi_points))
        axes.append(np.linspace(*self.domain.range, self.range_points))
        return axes

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(axis.shape[0] for axis in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell(self) -> np.ndarray:
        """Grid step per axis."""
        return np.array([axis[1] - axis[0] for axis in self.axes])

    def describe(self) -> str:
        return "x".join(str(n) for n in self.shape)

    def nodes(self) -> np.ndarray:
        """(N, D) parameter matrix, C order over ``shape``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def node(self, index: Tuple[int, ...]) -> SourceLocation:
        return SourceLocation.from_vector(
            [axis[i] for axis, i in zip(self.axes, index)]
        )

    def nearest_index(self, location: SourceLocation) -> Tuple[int, ...]:
        return tuple(
            int(np.argmin(np.abs(axis - value)))
            for axis, value in zip(self.axes, location.to_vector())
        )
