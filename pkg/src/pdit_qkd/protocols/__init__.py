from .base import BaseProtocol
from .registry import ProtocolRegistry
from .bb84 import BB84
from .six_state import SixState

__all__ = [
    "BaseProtocol",
    "ProtocolRegistry",
    "BB84",
    "SixState",
]
