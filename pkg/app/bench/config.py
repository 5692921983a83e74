"""Scenario and benchmark documents.

Documents are JSON or TOML (picked by file suffix). At this boundary angles are in
degrees, distances in meters and SNRs in dB; ``build`` converts to the internal
radian-based models.
"""

import json
import math
import tomllib
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.array.geometry import ArrayGeometry, aperture, fraunhofer_distance
from app.channel.models import (
    ChannelKind,
    ChannelModel,
    CorrelationKind,
    Scenario,
    ScenarioSource,
)
from app.config import (
    DESettings,
    MusicSettings,
    NeefSettings,
    NemoSettings,
    config,
)
from app.exceptions import ConfigError, InvalidArgumentError, InvalidScenarioError
from app.localizer.domain import SearchDomain, parse_grid_spec
from app.localizer.factory import LocalizerType
from app.objective.costs import PenaltyConfig
from app.rng import SEED_LIMIT, make_rng
from app.schema import ArrayKind, PhaseModel, SourceLocation


Interval = Tuple[float, float]
Document = TypeVar("Document", bound=BaseModel)

PLACEMENT_ATTEMPTS = 10_000


class ArraySpec(BaseModel):
    kind: ArrayKind = Field(ArrayKind.ULA, description="ula or upa")
    m: Optional[int] = Field(None, ge=2, description="ULA element count")
    mx: Optional[int] = Field(None, ge=2, description="UPA elements along x")
    my: Optional[int] = Field(None, ge=2, description="UPA elements along z")
    spacing_wavelengths: float = Field(0.5, gt=0, description="Spacing in wavelengths")
    spacing_m: Optional[float] = Field(None, gt=0, description="Absolute spacing override")

    @model_validator(mode="after")
    def _check_counts(self) -> "ArraySpec":
        if self.kind is ArrayKind.ULA and self.m is None:
            raise ValueError("ULA arrays need 'm'")
        if self.kind is ArrayKind.UPA and (self.mx is None or self.my is None):
            raise ValueError("UPA arrays need 'mx' and 'my'")
        return self

    def build(self, wavelength: float) -> ArrayGeometry:
        spacing = self.spacing_m or self.spacing_wavelengths * wavelength
        if self.kind is ArrayKind.UPA:
            return ArrayGeometry.upa(self.mx, self.my, spacing)
        return ArrayGeometry.ula(self.m, spacing)


class ChannelSpec(BaseModel):
    kind: ChannelKind = Field(ChannelKind.PURE_LOS)
    kappa: Optional[float] = Field(None, ge=0, description="Rician factor")
    correlation: Optional[CorrelationKind] = Field(None)
    angular_spread_deg: Optional[float] = Field(None, gt=0)

    def build(self) -> ChannelModel:
        if self.kind is ChannelKind.PURE_LOS:
            return ChannelModel.pure_los()
        simulation = config.simulation
        correlation = self.correlation or CorrelationKind(simulation.correlation)
        spread = None
        if correlation is CorrelationKind.LOCAL_SCATTERING:
            spread = math.radians(self.angular_spread_deg or simulation.angular_spread_deg)
        kappa = simulation.kappa if self.kappa is None else self.kappa
        return ChannelModel.rician(kappa, spread)


class SourceSpec(BaseModel):
    phi_deg: float
    range_m: float = Field(..., gt=0)
    psi_deg: Optional[float] = None
    snr_db: Optional[float] = Field(None, description="Overrides the template SNR rule")

    def location(self) -> SourceLocation:
        return SourceLocation.from_degrees(self.phi_deg, self.range_m, self.psi_deg)


class ScenarioTemplate(BaseModel):
    """A scenario with fixed or randomly placed sources.

    Random sources are drawn uniformly from the azimuth/elevation/range intervals with
    a minimum normalized separation. SNRs cycle through [base, base - dev, base + dev].
    """

    array: ArraySpec
    wavelength: float = Field(default_factory=lambda: config.simulation.wavelength, gt=0)
    snapshots: int = Field(default_factory=lambda: config.simulation.snapshots, ge=1)
    channel: ChannelSpec = Field(default_factory=ChannelSpec)
    noise_variance: float = Field(1.0, ge=0)
    phase_model: Optional[PhaseModel] = None
    k: int = Field(3, ge=0, description="Number of random sources")
    snr_db: float = Field(20.0, description="Base per-antenna SNR")
    snr_deviation_db: float = Field(0.0, ge=0, description="SNR imbalance delta_s")
    sources: Optional[List[SourceSpec]] = Field(None, description="Fixed placements")
    phi_deg: Interval = Field((-60.0, 60.0))
    psi_deg: Interval = Field((-30.0, 30.0))
    range_m: Optional[Interval] = Field(
        None, description="Range interval; [2 D_ap, d_FA / 2] when unset"
    )
    min_separation: float = Field(0.1, ge=0, description="Normalized source separation")

    def geometry(self) -> ArrayGeometry:
        return self.array.build(self.wavelength)

    def domain(self) -> SearchDomain:
        geometry = self.geometry()
        default = SearchDomain.default(geometry, self.wavelength)
        phi = tuple(math.radians(v) for v in self.phi_deg)
        psi = tuple(math.radians(v) for v in self.psi_deg) if geometry.is_planar else None
        return SearchDomain(phi=phi, psi=psi, range=self.range_m or default.range)

    @staticmethod
    def source_snrs(k: int, base: float, deviation: float) -> List[float]:
        cycle = [base, base - deviation, base + deviation]
        return [cycle[i % 3] for i in range(k)]

    def sample_locations(self, k: int, rng: np.random.Generator) -> List[SourceLocation]:
        domain = self.domain()
        lower = np.array([low for low, _ in domain.bounds()])
        upper = np.array([high for _, high in domain.bounds()])
        scales = PenaltyConfig.from_settings().scales(domain.dimension)
        chosen: List[np.ndarray] = []
        for _ in range(PLACEMENT_ATTEMPTS):
            if len(chosen) == k:
                break
            candidate = rng.uniform(lower, upper)
            if all(
                np.linalg.norm((candidate - other) / scales) >= self.min_separation
                for other in chosen
            ):
                chosen.append(candidate)
        if len(chosen) < k:
            raise InvalidScenarioError(
                f"Could not place {k} sources {self.min_separation} apart "
                f"in {PLACEMENT_ATTEMPTS} draws"
            )
        return [SourceLocation.from_vector(v) for v in chosen]

    def build(
        self,
        seed: int,
        *,
        k: Optional[int] = None,
        snr_db: Optional[float] = None,
        snr_deviation_db: Optional[float] = None,
    ) -> Scenario:
        """Scenario for one realization; keyword arguments override the template."""
        base = self.snr_db if snr_db is None else snr_db
        deviation = self.snr_deviation_db if snr_deviation_db is None else snr_deviation_db
        if self.sources is not None:
            locations = [s.location() for s in self.sources]
            rules = self.source_snrs(len(locations), base, deviation)
            snrs = [rule if s.snr_db is None else s.snr_db for s, rule in zip(self.sources, rules)]
        else:
            count = self.k if k is None else k
            locations = self.sample_locations(count, make_rng(seed, 1))
            snrs = self.source_snrs(count, base, deviation)
        return Scenario(
            geometry=self.geometry(),
            wavelength=self.wavelength,
            sources=[
                ScenarioSource(location=loc, snr_db=snr) for loc, snr in zip(locations, snrs)
            ],
            snapshots=self.snapshots,
            channel=self.channel.build(),
            seed=seed,
            noise_variance=self.noise_variance,
            phase_model=self.phase_model,
        )

    def describe(self) -> str:
        geometry = self.geometry()
        return (
            f"{geometry.describe()}, lambda={self.wavelength:g} m, "
            f"D_ap={aperture(geometry):.3f} m, "
            f"d_FA={fraunhofer_distance(geometry, self.wavelength):.2f} m"
        )


class ScenarioDocument(ScenarioTemplate):
    seed: int = Field(0, ge=0, lt=SEED_LIMIT)

    def scenario(self) -> Scenario:
        return self.build(self.seed)


class SweepAxis(str, Enum):
    SNR = "snr"
    K = "k"
    SNR_DEVIATION = "snr_deviation"
    GRID_SIZE = "grid_size"


def parse_method(tag: str) -> Tuple[LocalizerType, Optional[str]]:
    """'nemo', 'neef', 'music' or 'music:400x2000'."""
    name, _, grid = tag.partition(":")
    localizer_type = LocalizerType(name.strip().lower())
    if grid:
        if localizer_type is not LocalizerType.MUSIC:
            raise InvalidArgumentError(f"Only MUSIC takes a grid, got {tag!r}")
        parse_grid_spec(grid)
    return localizer_type, grid or None


class BenchmarkConfig(BaseModel):
    name: str = Field("benchmark")
    scenario: ScenarioTemplate
    sweep: SweepAxis = Field(SweepAxis.SNR)
    values: List[Union[float, str]] = Field(..., min_length=1)
    trials: int = Field(..., ge=1)
    methods: List[str] = Field(default_factory=lambda: ["nemo", "neef", "music"])
    seed: int = Field(0, ge=0, lt=SEED_LIMIT, description="Master seed")
    output: Optional[str] = Field(None, description="Results directory")
    grid: Optional[str] = Field(None, description="Default MUSIC grid, e.g. 200x1000")
    miss_distance: Optional[float] = Field(
        None,
        ge=0,
        description="Error charged per unmatched true source (m); misses are dropped when unset",
    )
    de: Optional[DESettings] = None
    nemo: Optional[NemoSettings] = None
    neef: Optional[NeefSettings] = None
    music: Optional[MusicSettings] = None

    @field_validator("methods")
    @classmethod
    def _check_methods(cls, methods: List[str]) -> List[str]:
        if not methods:
            raise ValueError("At least one method is required")
        for tag in methods:
            parse_method(tag)
        if len(set(methods)) != len(methods):
            raise ValueError("Method tags must be unique")
        return methods

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, grid: Optional[str]) -> Optional[str]:
        if grid is not None:
            parse_grid_spec(grid)
        return grid

    @model_validator(mode="after")
    def _check_values(self) -> "BenchmarkConfig":
        if self.sweep is SweepAxis.GRID_SIZE:
            self.values = [str(v) for v in self.values]
            for value in self.values:
                parse_grid_spec(value)
            return self
        try:
            self.values = [float(v) for v in self.values]
        except ValueError:
            raise ValueError(f"{self.sweep.value} sweep values must be numeric") from None
        if self.sweep is SweepAxis.K and any(
            v < 1 or v != int(v) for v in self.values
        ):
            raise ValueError("K sweep values must be positive integers")
        return self

    @staticmethod
    def label(value: Union[float, str]) -> str:
        return value if isinstance(value, str) else f"{value:g}"

    def scenario_for(self, value: Union[float, str], seed: int) -> Scenario:
        if self.sweep is SweepAxis.SNR:
            return self.scenario.build(seed, snr_db=float(value))
        if self.sweep is SweepAxis.K:
            return self.scenario.build(seed, k=int(value))
        if self.sweep is SweepAxis.SNR_DEVIATION:
            return self.scenario.build(seed, snr_deviation_db=float(value))
        return self.scenario.build(seed)

    def expected_k(self, value: Union[float, str]) -> int:
        """Source count a trial at ``value`` is meant to have."""
        if self.sweep is SweepAxis.K:
            return int(value)
        if self.scenario.sources is not None:
            return len(self.scenario.sources)
        return self.scenario.k

    def music_grid_for(self, value: Union[float, str], method_grid: Optional[str]) -> Optional[str]:
        if method_grid:
            return method_grid
        if self.sweep is SweepAxis.GRID_SIZE:
            return str(value)
        return self.grid


def load_document(path: Union[str, Path], model: Type[Document]) -> Document:
    """Read a JSON or TOML document and validate it into ``model``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Failed to read {path}: {e}") from None
    try:
        if path.suffix.lower() == ".toml":
            raw = tomllib.loads(text)
        elif path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raise ConfigError(f"Unsupported document type {path.suffix!r} for {path}")
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"Failed to parse {path}: {e}") from None
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__} in {path}: {e}") from None
