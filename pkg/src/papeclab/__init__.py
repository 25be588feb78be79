"""Exact small-system checks of privacy amplification via phase error correction."""

__version__ = "0.1.0"

from .checks import Check
from .gf2 import BitMatrix, LinearHashFamily, toeplitz_family
from .hilbert import CqState, Ket, SubNormalizedState, SystemLayout
from .entropy import EntropyInterval, hmin_interval
from .pa import PaInstance, make_pec_channel, virtual_pa, actual_pa
from .qkd import QkdInstance, random_qkd_instance

__all__ = ["__version__", "Check", "BitMatrix", "LinearHashFamily", "toeplitz_family",
           "CqState", "Ket", "SubNormalizedState", "SystemLayout", "EntropyInterval",
           "hmin_interval", "PaInstance", "make_pec_channel", "virtual_pa", "actual_pa",
           "QkdInstance", "random_qkd_instance"]
