"""Six-state: all three Pauli errors occur at rate Q/2 (depolarising channel)."""

from pdit_qkd.models.channel import PauliDistribution
from pdit_qkd.protocols.base import BaseProtocol
from pdit_qkd.protocols.registry import ProtocolRegistry


@ProtocolRegistry.register
class SixState(BaseProtocol):
    name = "six-state"
    bracket_high = 0.30
    max_Q = 2.0 / 3.0

    def distribution(self, Q: float) -> PauliDistribution:
        self.check_Q(Q)
        w = Q / 2.0
        return PauliDistribution(p00=1.0 - 3.0 * w, p01=w, p10=w, p11=w)
