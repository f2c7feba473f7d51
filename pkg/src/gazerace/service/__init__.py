from .app import create_app
from .runtime import GatewayRuntime, TelemetryHub

__all__ = ["create_app", "GatewayRuntime", "TelemetryHub"]
