"""CQI to spectral efficiency link abstraction."""

from __future__ import annotations

import math

# 4-bit CQI table (QPSK/16QAM/64QAM), bit/s/Hz, index 0 unused.
CQI_EFFICIENCY = (
    0.0,
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
    1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)
CQI_MIN = 1
CQI_MAX = 15


def spectral_efficiency(cqi: int) -> float:
    if isinstance(cqi, bool) or int(cqi) != cqi or not CQI_MIN <= cqi <= CQI_MAX:
        raise ValueError(f"CQI must be an integer in [{CQI_MIN}, {CQI_MAX}], got {cqi!r}")
    return CQI_EFFICIENCY[int(cqi)]


def transport_block_bytes(cqi: int, n_prbs: int, prb_bandwidth: float = 180e3,
                          slot_duration: float = 1e-3, dl_fraction: float = 1.0) -> int:
    """Bytes carried by ``n_prbs`` PRBs in one slot at the given CQI."""
    return math.floor(CQI_EFFICIENCY[cqi] * n_prbs * prb_bandwidth * slot_duration * dl_fraction / 8)
