from abc import ABC, abstractmethod

from pdit_qkd.models.channel import PauliDistribution


class BaseProtocol(ABC):
    """Abstract base class for prepare-and-measure protocol families."""

    name: str = "BaseProtocol"
    # Upper end of the initial threshold bisection bracket
    bracket_high: float = 0.25
    # Largest Q for which the family's distribution exists
    max_Q: float = 0.5

    @abstractmethod
    def distribution(self, Q: float) -> PauliDistribution:
        """Pauli error rates after sifting at observed bit-error rate Q."""
        pass

    def check_Q(self, Q: float) -> None:
        if Q < 0 or Q > self.max_Q:
            raise ValueError(f"{self.name}: Q = {Q} outside [0, {self.max_Q}]")
