from app.localizer.base import BaseLocalizer, LocalizationResult
from app.localizer.domain import SearchDomain, SearchGrid, parse_grid_spec
from app.localizer.factory import LocalizerFactory, LocalizerType
from app.localizer.music import (
    MusicLocalizer,
    music_localize,
    music_spectrum,
    music_spectrum_from_covariance,
    pick_peaks,
)
from app.localizer.neef import NeefDELocalizer, neef_de
from app.localizer.nemo import NemoDELocalizer, nemo_de


__all__ = [
    "BaseLocalizer",
    "LocalizationResult",
    "LocalizerFactory",
    "LocalizerType",
    "MusicLocalizer",
    "NeefDELocalizer",
    "NemoDELocalizer",
    "SearchDomain",
    "SearchGrid",
    "music_localize",
    "music_spectrum",
    "music_spectrum_from_covariance",
    "neef_de",
    "nemo_de",
    "parse_grid_spec",
    "pick_peaks",
]
