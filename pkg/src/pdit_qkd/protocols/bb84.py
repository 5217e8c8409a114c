"""BB84: bit and phase errors occur at the same rate Q, independently."""

from pdit_qkd.models.channel import PauliDistribution
from pdit_qkd.protocols.base import BaseProtocol
from pdit_qkd.protocols.registry import ProtocolRegistry


@ProtocolRegistry.register
class BB84(BaseProtocol):
    name = "bb84"
    bracket_high = 0.25
    max_Q = 0.5

    def distribution(self, Q: float) -> PauliDistribution:
        self.check_Q(Q)
        # p_{uv} = q_u q_v with q_1 = Q
        marginal = (1.0 - Q, Q)
        return PauliDistribution(
            p00=marginal[0] * marginal[0],
            p01=marginal[0] * marginal[1],
            p10=marginal[1] * marginal[0],
            p11=marginal[1] * marginal[1],
        )
