import math
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.array.geometry import ArrayGeometry
from app.exceptions import InvalidScenarioError
from app.rng import SEED_LIMIT
from app.schema import PhaseModel, SourceLocation


class ChannelKind(str, Enum):
    PURE_LOS = "pure_los"
    RICIAN = "rician"


class CorrelationKind(str, Enum):
    IID = "iid"
    LOCAL_SCATTERING = "local_scattering"


class ChannelModel(BaseModel):
    """Pure line-of-sight or Rician channel with an optional correlated NLoS part."""

    model_config = ConfigDict(frozen=True)

    kind: ChannelKind = Field(ChannelKind.PURE_LOS, description="Channel family")
    kappa: float = Field(0.0, ge=0, description="Rician factor (LoS/NLoS power ratio)")
    correlation: CorrelationKind = Field(
        CorrelationKind.IID, description="NLoS spatial correlation"
    )
    angular_spread: Optional[float] = Field(
        None, gt=0, description="Local scattering angular spread (rad)"
    )

    @model_validator(mode="after")
    def _check_spread(self) -> "ChannelModel":
        if (
            self.correlation is CorrelationKind.LOCAL_SCATTERING
            and self.angular_spread is None
        ):
            raise ValueError("Local scattering needs an angular spread")
        return self

    @classmethod
    def pure_los(cls) -> "ChannelModel":
        return cls(kind=ChannelKind.PURE_LOS)

    @classmethod
    def rician(
        cls, kappa: float, angular_spread: Optional[float] = None
    ) -> "ChannelModel":
        correlation = (
            CorrelationKind.IID
            if angular_spread is None
            else CorrelationKind.LOCAL_SCATTERING
        )
        return cls(
            kind=ChannelKind.RICIAN,
            kappa=kappa,
            correlation=correlation,
            angular_spread=angular_spread,
        )


class ScenarioSource(BaseModel):
    model_config = ConfigDict(frozen=True)

    location: SourceLocation
    snr_db: float = Field(..., description="Per-antenna received SNR (dB)")


class Scenario(BaseModel):
    """Everything needed to draw one snapshot matrix."""

    geometry: ArrayGeometry
    wavelength: float = Field(..., gt=0, description="Carrier wavelength (m)")
    sources: List[ScenarioSource] = Field(default_factory=list)
    snapshots: int = Field(..., ge=1, description="Number of time slots T")
    channel: ChannelModel = Field(default_factory=ChannelModel.pure_los)
    seed: int = Field(0, ge=0, lt=SEED_LIMIT, description="64-bit seed")
    noise_variance: float = Field(
        1.0, ge=0, description="Per-entry noise variance (0 is the noiseless switch)"
    )
    phase_model: Optional[PhaseModel] = Field(
        None, description="Distance model; the geometry default when unset"
    )

    @model_validator(mode="after")
    def _check_sources(self) -> "Scenario":
        m = self.geometry.num_elements
        if len(self.sources) >= m:
            raise InvalidScenarioError(
                f"{len(self.sources)} sources leave no noise subspace for {m} antennas"
            )
        for source in self.sources:
            if source.location.has_elevation != self.geometry.is_planar:
                raise InvalidScenarioError(
                    f"Location {source.location} does not match {self.geometry.describe()}"
                )
        locations = [s.location for s in self.sources]
        if len(set(locations)) != len(locations):
            raise InvalidScenarioError("Source locations must be distinct")
        return self

    @property
    def num_sources(self) -> int:
        return len(self.sources)

    @property
    def locations(self) -> List[SourceLocation]:
        return [s.location for s in self.sources]

    @property
    def resolved_phase_model(self) -> PhaseModel:
        return self.phase_model or self.geometry.default_phase_model


class SnapshotMatrix(BaseModel):
    """M x T received data with the metadata needed to interpret it.

    ``truth`` is carried for evaluation only; localizers never read it.
    """

    data: np.ndarray = Field(..., description="M x T complex received data")
    geometry: ArrayGeometry
    wavelength: float = Field(..., gt=0)
    truth: Optional[List[SourceLocation]] = Field(None)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("data", mode="before")
    @classmethod
    def _complex_matrix(cls, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=np.complex128)
        if value.ndim != 2:
            raise ValueError(f"Snapshot data must be 2-D, got shape {value.shape}")
        if not np.all(np.isfinite(value)):
            raise ValueError("Snapshot data contains non-finite entries")
        return value

    @model_validator(mode="after")
    def _match_geometry(self) -> "SnapshotMatrix":
        if self.data.shape[0] != self.geometry.num_elements:
            raise ValueError(
                f"Data has {self.data.shape[0]} rows, {self.geometry.describe()} has "
                f"{self.geometry.num_elements} elements"
            )
        return self

    @property
    def num_snapshots(self) -> int:
        return self.data.shape[1]

    @property
    def energy(self) -> float:
        return float(np.vdot(self.data, self.data).real)


def snr_to_power(snr_db: float) -> float:
    """Linear per-antenna power beta = 10^(SNR/10)."""
    return math.pow(10.0, snr_db / 10.0)
