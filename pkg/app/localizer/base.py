from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.channel.models import SnapshotMatrix
from app.localizer.domain import SearchDomain
from app.optimizer.de import DERunResult
from app.schema import PhaseModel, SourceLocation


class LocalizationResult(BaseModel):
    """Estimated source locations returned by every localizer."""

    method: str = Field(..., description="Localizer tag")
    requested: int = Field(..., ge=1, description="Number of sources asked for")
    estimates: List[SourceLocation] = Field(default_factory=list)
    per_source_cost: List[float] = Field(default_factory=list)
    traces: List[DERunResult] = Field(default_factory=list)
    residual_energies: List[float] = Field(
        default_factory=list,
        description="Residual energy before the first and after each detection (NEMO-DE)",
    )
    runtime: float = Field(0.0, ge=0, description="Wall-clock seconds")
    aborted: bool = Field(False, description="The detection quality gate stopped the run")
    abort_reason: Optional[str] = Field(None, description="Why fewer than K were returned")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def shortfall(self) -> bool:
        return len(self.estimates) < self.requested

    @property
    def flags(self) -> List[str]:
        flags = []
        if self.shortfall:
            flags.append("shortfall")
        if self.aborted:
            flags.append("aborted")
        return flags

    def summary(self) -> Dict[str, Any]:
        """JSON-ready view with angles in degrees."""
        return {
            "method": self.method,
            "requested": self.requested,
            "estimates": [
                {
                    "phi_deg": loc.phi_deg,
                    "psi_deg": loc.psi_deg,
                    "range_m": loc.range,
                    "cost": cost,
                }
                for loc, cost in zip(self.estimates, self.per_source_cost)
            ],
            "residual_energies": self.residual_energies,
            "runtime_s": self.runtime,
            "abort_reason": self.abort_reason,
            "flags": self.flags,
        }


class BaseLocalizer(BaseModel, ABC):
    """Common interface of the near-field localizers.

    ``domain`` defaults to ``SearchDomain.default`` for the data's geometry and
    ``phase_model`` to the geometry's default distance model.
    """

    domain: Optional[SearchDomain] = None
    phase_model: Optional[PhaseModel] = None
    seed: int = Field(0, ge=0)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def name(self) -> str:
        return self.__class__.__name__

    @abstractmethod
    def localize(self, snapshots: SnapshotMatrix, k: int) -> LocalizationResult:
        """Estimate ``k`` source locations from a snapshot matrix"""
