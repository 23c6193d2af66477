from .config import ArrivalModel, Roster, SimConfig, UeSpec
from .link import CQI_EFFICIENCY, spectral_efficiency, transport_block_bytes
from .simulator import FrameStats, RanSimulator, write_trace

__all__ = [
    "ArrivalModel", "CQI_EFFICIENCY", "FrameStats", "RanSimulator", "Roster", "SimConfig", "UeSpec",
    "spectral_efficiency", "transport_block_bytes", "write_trace",
]
