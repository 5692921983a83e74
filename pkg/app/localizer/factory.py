from enum import Enum

from app.localizer.base import BaseLocalizer
from app.localizer.music import MusicLocalizer
from app.localizer.neef import NeefDELocalizer
from app.localizer.nemo import NemoDELocalizer


class LocalizerType(str, Enum):
    NEMO = "nemo"
    NEEF = "neef"
    MUSIC = "music"


class LocalizerFactory:
    """Factory for creating the localizers by type"""

    @staticmethod
    def create_localizer(localizer_type: LocalizerType, **kwargs) -> BaseLocalizer:
        localizers = {
            LocalizerType.NEMO: NemoDELocalizer,
            LocalizerType.NEEF: NeefDELocalizer,
            LocalizerType.MUSIC: MusicLocalizer,
        }

        localizer_class = localizers.get(LocalizerType(localizer_type))
        if not localizer_class:
            raise ValueError(f"Unknown localizer type: {localizer_type}")

        return localizer_class(**kwargs)
