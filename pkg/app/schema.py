import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.exceptions import InvalidArgumentError


class ArrayKind(str, Enum):
    """Antenna array layouts"""

    ULA = "ula"
    UPA = "upa"


class PhaseModel(str, Enum):
    """Per-antenna distance models used by the steering vector"""

    EXACT = "exact"
    FRESNEL = "fresnel"


_HALF_PI = math.pi / 2


class SourceLocation(BaseModel):
    """Angle-range location of a single source.

    Azimuth and elevation are in radians, range in meters. The elevation is present
    iff the location refers to a planar array.
    """

    model_config = ConfigDict(frozen=True)

    phi: float = Field(..., description="Azimuth angle of arrival (rad)")
    psi: Optional[float] = Field(None, description="Elevation angle (rad), UPA only")
    range: float = Field(..., gt=0, description="Distance to the reference element (m)")

    @field_validator("phi", "psi")
    @classmethod
    def _open_half_plane(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (-_HALF_PI < value < _HALF_PI):
            raise ValueError(f"angle {value} rad outside (-pi/2, pi/2)")
        return value

    @property
    def has_elevation(self) -> bool:
        return self.psi is not None

    @property
    def dimension(self) -> int:
        return 3 if self.has_elevation else 2

    @property
    def phi_deg(self) -> float:
        return math.degrees(self.phi)

    @property
    def psi_deg(self) -> Optional[float]:
        return None if self.psi is None else math.degrees(self.psi)

    def to_vector(self) -> np.ndarray:
        """Parameter vector [phi, r] or [phi, psi, r]."""
        if self.psi is None:
            return np.array([self.phi, self.range])
        return np.array([self.phi, self.psi, self.range])

    @classmethod
    def from_vector(cls, vector) -> "SourceLocation":
        values = [float(v) for v in vector]
        if len(values) == 2:
            return cls(phi=values[0], range=values[1])
        if len(values) == 3:
            return cls(phi=values[0], psi=values[1], range=values[2])
        raise InvalidArgumentError(f"Location vectors have 2 or 3 entries, got {len(values)}")

    @classmethod
    def from_degrees(
        cls, phi_deg: float, range_m: float, psi_deg: Optional[float] = None
    ) -> "SourceLocation":
        return cls(
            phi=math.radians(phi_deg),
            psi=None if psi_deg is None else math.radians(psi_deg),
            range=range_m,
        )
