from typing import Type

from pdit_qkd.protocols.base import BaseProtocol


class ProtocolRegistry:
    """Registry for protocol families."""

    _protocols: dict[str, Type[BaseProtocol]] = {}

    @classmethod
    def register(cls, protocol_class: Type[BaseProtocol]) -> Type[BaseProtocol]:
        """Decorator to register a protocol class."""
        cls._protocols[protocol_class.name] = protocol_class
        return protocol_class

    @classmethod
    def get(cls, name: str) -> Type[BaseProtocol] | None:
        return cls._protocols.get(name)

    @classmethod
    def create(cls, name: str) -> BaseProtocol:
        protocol_class = cls.get(name)
        if protocol_class is None:
            raise ValueError(f"Unknown protocol {name!r}; known: {cls.names()}")
        return protocol_class()

    @classmethod
    def all(cls) -> list[Type[BaseProtocol]]:
        return list(cls._protocols.values())

    @classmethod
    def names(cls) -> list[str]:
        return list(cls._protocols.keys())
