import threading
import tomllib
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field


def get_project_root() -> Path:
    """Get the project root directory"""
    return Path(__file__).resolve().parent.parent


PROJECT_ROOT = get_project_root()
WORKSPACE_ROOT = PROJECT_ROOT / "workspace"


class SimulationSettings(BaseModel):
    wavelength: float = Field(0.02, gt=0, description="Carrier wavelength in meters")
    snapshots: int = Field(200, ge=1, description="Number of time slots T")
    kappa: float = Field(10.0, ge=0, description="Rician factor")
    correlation: Literal["iid", "local_scattering"] = Field(
        "iid", description="NLoS spatial correlation model"
    )
    angular_spread_deg: float = Field(
        10.0, gt=0, description="Angular spread of the local scattering model (degrees)"
    )


class DESettings(BaseModel):
    population_size: int = Field(50, ge=4, description="Population size Np")
    max_generations: int = Field(300, ge=1, description="Generations Gmax")
    F: float = Field(0.5, ge=0, le=2, description="Mutation scaling factor")
    Cr: float = Field(0.8, ge=0, le=1, description="Crossover probability")
    workers: int = Field(
        1, ge=1, description="Threads used for per-candidate objective evaluation"
    )


class PenaltySettings(BaseModel):
    alpha: float = Field(1000.0, ge=0, description="Penalty coefficient")
    delta_min: float = Field(
        0.08, ge=0, description="Minimum normalized separation between detections"
    )
    phi0: float = Field(1.0, gt=0, description="Azimuth normalization (rad)")
    r0: float = Field(1.0, gt=0, description="Range normalization (m)")
    psi0: float = Field(1.0, gt=0, description="Elevation normalization (rad)")


class NemoSettings(BaseModel):
    min_residual_reduction: float = Field(
        1e-3,
        ge=0,
        lt=1,
        description="Minimum relative residual-energy reduction for accepting a detection",
    )
    residual_floor: float = Field(
        1e-8,
        ge=0,
        description="Residual energy (relative to the input) below which detection stops",
    )
    refine: bool = Field(
        False, description="Polish each DE result with a bounded local search"
    )
    noise_margin: float = Field(
        1.0,
        ge=0,
        description="Multiple of the largest expected noise capture a detection must exceed (0 disables)",
    )


class NeefSettings(BaseModel):
    population_per_source: int = Field(
        40, ge=4, description="Population size per source (Np = value * K)"
    )
    max_generations: int = Field(500, ge=1, description="Generations Gmax")
    early_stop: bool = Field(
        False, description="Stop once the best cost stalls for `patience` generations"
    )
    tol: float = Field(1e-10, ge=0, description="Early-stop improvement tolerance")
    patience: int = Field(50, ge=1, description="Early-stop patience in generations")


class MusicSettings(BaseModel):
    angle_points: int = Field(200, ge=2, description="Azimuth grid points")
    range_points: int = Field(1000, ge=2, description="Range grid points")
    elevation_points: int = Field(100, ge=2, description="Elevation grid points (UPA)")
    chunk_size: int = Field(
        4096, ge=1, description="Grid nodes evaluated per vectorized block"
    )
    workers: int = Field(1, ge=1, description="Threads used across grid blocks")
    refine: bool = Field(
        False, description="Polish each picked node to the local pseudospectrum peak"
    )
    refine_reach: float = Field(
        3.0, gt=0, description="Half-width of the polish box in grid cells"
    )


class BenchmarkSettings(BaseModel):
    workers: int = Field(1, ge=1, description="Trials evaluated concurrently")
    record_runtime: bool = Field(
        True, description="Write wall-clock runtimes into the results CSV"
    )


class AppConfig(BaseModel):
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    de: DESettings = Field(default_factory=DESettings)
    penalty: PenaltySettings = Field(default_factory=PenaltySettings)
    nemo: NemoSettings = Field(default_factory=NemoSettings)
    neef: NeefSettings = Field(default_factory=NeefSettings)
    music: MusicSettings = Field(default_factory=MusicSettings)
    benchmark: BenchmarkSettings = Field(default_factory=BenchmarkSettings)
    log_level: str = Field("INFO", description="Console log level")


class Config:
    _instance = None
    _lock = threading.Lock()
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            with self._lock:
                if not self._initialized:
                    self._config: Optional[AppConfig] = None
                    self._load_initial_config()
                    self._initialized = True

    @staticmethod
    def _get_config_path() -> Optional[Path]:
        root = PROJECT_ROOT
        config_path = root / "config" / "config.toml"
        if config_path.exists():
            return config_path
        example_path = root / "config" / "config.example.toml"
        if example_path.exists():
            return example_path
        return None

    def _load_config(self) -> dict:
        config_path = self._get_config_path()
        if config_path is None:
            return {}
        with config_path.open("rb") as f:
            return tomllib.load(f)

    def _load_initial_config(self):
        raw_config = self._load_config()
        sections = {
            key: raw_config.get(key, {})
            for key in ("simulation", "de", "penalty", "nemo", "neef", "music", "benchmark")
        }
        log_level = raw_config.get("logging", {}).get("level", "INFO")
        self._config = AppConfig(**sections, log_level=log_level)

    @property
    def simulation(self) -> SimulationSettings:
        return self._config.simulation

    @property
    def de(self) -> DESettings:
        return self._config.de

    @property
    def penalty(self) -> PenaltySettings:
        return self._config.penalty

    @property
    def nemo(self) -> NemoSettings:
        return self._config.nemo

    @property
    def neef(self) -> NeefSettings:
        return self._config.neef

    @property
    def music(self) -> MusicSettings:
        return self._config.music

    @property
    def benchmark(self) -> BenchmarkSettings:
        return self._config.benchmark

    @property
    def log_level(self) -> str:
        return self._config.log_level

    @property
    def workspace_root(self) -> Path:
        """Get the workspace root directory"""
        return WORKSPACE_ROOT

    @property
    def root_path(self) -> Path:
        """Get the root path of the application"""
        return PROJECT_ROOT


config = Config()
