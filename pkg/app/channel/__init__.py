from app.channel.models import (
    ChannelKind,
    ChannelModel,
    CorrelationKind,
    Scenario,
    ScenarioSource,
    SnapshotMatrix,
)
from app.channel.simulator import (
    CorrelationProvider,
    IIDCorrelation,
    LocalScatteringCorrelation,
    local_scattering_correlation,
    rician_channel,
    simulate_snapshots,
)
from app.channel.snapshot_io import read_snapshots, write_snapshots


__all__ = [
    "ChannelKind",
    "ChannelModel",
    "CorrelationKind",
    "CorrelationProvider",
    "IIDCorrelation",
    "LocalScatteringCorrelation",
    "Scenario",
    "ScenarioSource",
    "SnapshotMatrix",
    "local_scattering_correlation",
    "read_snapshots",
    "rician_channel",
    "simulate_snapshots",
    "write_snapshots",
]
