from .client import (
    Backend,
    CapabilityError,
    Completion,
    FinishReason,
    GatewayConfig,
    GatewayError,
    GenerationRequest,
    HttpCompletionsBackend,
    LlmGateway,
    ProtocolError,
    ScoreRequest,
    TransportError,
    gateway_from_config,
)
from .mock import MockBackend, MockLookupError, load_mock_fixture

__all__ = [
    "Backend",
    "CapabilityError",
    "Completion",
    "FinishReason",
    "GatewayConfig",
    "GatewayError",
    "GenerationRequest",
    "HttpCompletionsBackend",
    "LlmGateway",
    "MockBackend",
    "MockLookupError",
    "ProtocolError",
    "ScoreRequest",
    "TransportError",
    "gateway_from_config",
    "load_mock_fixture",
]
