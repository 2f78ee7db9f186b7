"""HTTP bridge exposing embedding, NLI, annotation, and ITM backends."""

from .config import BridgeConfig
from .service import create_app

__version__ = "0.1.0"

__all__ = ["BridgeConfig", "create_app"]
