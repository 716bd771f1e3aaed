from .client import BackendClient, BackendEndpoint, CallStats, GateResult, HttpTransport, Transport
from .mock import DeterministicBackends, MockTransport, as_httpx_handler, make_mock_clients
from .protocol import OPS, ROLES, TEXT_ROLES, build_request, validate_meta, validate_request, validate_response

__all__ = [
    "BackendClient",
    "BackendEndpoint",
    "CallStats",
    "GateResult",
    "HttpTransport",
    "Transport",
    "DeterministicBackends",
    "MockTransport",
    "as_httpx_handler",
    "make_mock_clients",
    "OPS",
    "ROLES",
    "TEXT_ROLES",
    "build_request",
    "validate_meta",
    "validate_request",
    "validate_response",
]
